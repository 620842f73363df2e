#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "fgcl/graph.hpp"
#include "fgcl/param_store.hpp"
#include "fgcl/rng.hpp"
#include "fgcl/tensor.hpp"

namespace fgcl::testing {

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double sd = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = rng.normal(0.0, sd);
  return t;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central differences of f with respect to every entry of every parameter.
inline nn::ParamStore finite_difference(const nn::ParamStore& params,
                                        const std::function<double(const nn::ParamStore&)>& f,
                                        double h = 1e-5) {
  nn::ParamStore grads = params.zeros_like();
  nn::ParamStore probe = params;
  for (auto& [name, g] : grads) {
    Tensor& t = probe.at(name);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double orig = t[k];
      t[k] = orig + h;
      const double up = f(probe);
      t[k] = orig - h;
      const double down = f(probe);
      t[k] = orig;
      g[k] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

// Random graph on p nodes with each pair present with probability 1/2.
inline GraphInstance random_graph(GraphId id, int p, int q, int t, Rng& rng) {
  std::vector<Edge> edges;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (rng.uniform_open() < 0.5) edges.emplace_back(i, j);
  Labels y(static_cast<std::size_t>(t));
  Labels mask(static_cast<std::size_t>(t), 1);
  for (auto& v : y) v = static_cast<std::uint8_t>(rng.uniform_index(2));
  return make_graph(id, p, std::move(edges),
                    random_tensor(static_cast<std::size_t>(p), static_cast<std::size_t>(q), rng),
                    std::move(y), std::move(mask));
}

}  // namespace fgcl::testing
