#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <utility>
#include <vector>

#include "fgcl/error.hpp"
#include "fgcl/graph.hpp"
#include "fgcl/rng.hpp"
#include "fgcl/tensor.hpp"

// Edge-level differential privacy with the Laplace mechanism.
//
// A graph is released as the table {(i, j) -> 1 if edge else 0} over all
// unordered pairs i < j. Adjacent graphs differ in exactly one row, so the
// query has sensitivity 1, and adding Laplace(0, 1/epsilon) noise to every
// row is epsilon-DP. The noisy table is returned as a dense symmetric weight
// matrix over the fully connected graph.
namespace fgcl::dp {

// Anything that yields uniforms on (0, 1). Rng qualifies; tests substitute
// fixed sequences.
template <class R>
concept UniformSource = requires(R& r) {
  { r.uniform_open() } -> std::convertible_to<double>;
};

struct PrivacyBudget {
  double epsilon = 1.0;
  double sensitivity = 1.0;

  double scale() const { return sensitivity / epsilon; }
  // Throws ArgumentError unless epsilon and sensitivity are finite and > 0.
  void validate() const;
};

struct EdgeRow {
  int i = 0;
  int j = 0;
  std::uint8_t value = 0;
  friend bool operator==(const EdgeRow&, const EdgeRow&) = default;
};

// One row per unordered pair i < j, lexicographic.
struct EdgeTable {
  std::vector<EdgeRow> rows;
};

struct PerturbedView {
  Tensor weights;  // p x p, symmetric, zero diagonal, raw (may be negative)
  double epsilon_used = 0.0;
  GraphId source_id = 0;
};

EdgeTable graph_to_table(const GraphInstance& g);

// Inverse CDF of Laplace(0, b) at u in (0, 1).
inline double laplace_from_uniform(double u, double b) {
  const double c = u - 0.5;
  const double sign = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
  return -b * sign * std::log(1.0 - 2.0 * std::abs(c));
}

template <UniformSource R>
double laplace_sample(double b, R& rng) {
  if (!(b > 0.0)) throw ArgumentError("laplace_sample: scale must be > 0");
  return laplace_from_uniform(rng.uniform_open(), b);
}

// W_ij = W_ji = A_ij + Laplace(0, sensitivity / epsilon), one draw per
// unordered pair in row-major (i < j) order. Diagonal stays zero.
template <UniformSource R>
PerturbedView perturb(const GraphInstance& g, const PrivacyBudget& budget, R& rng) {
  budget.validate();
  const double b = budget.scale();
  Tensor w = adjacency(g);
  const auto p = static_cast<std::size_t>(g.num_nodes);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double v = w(i, j) + laplace_sample(b, rng);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return {std::move(w), budget.epsilon, g.id};
}

// Two views with independent noise, the first at eps0 and the second at eps1,
// each drawn from its own stream.
template <UniformSource R0, UniformSource R1>
std::pair<PerturbedView, PerturbedView> make_views(const GraphInstance& g, double eps0,
                                                   double eps1, R0& stream0, R1& stream1) {
  return {perturb(g, PrivacyBudget{eps0, 1.0}, stream0),
          perturb(g, PrivacyBudget{eps1, 1.0}, stream1)};
}

// Forks two disjoint substreams from rng.
std::pair<PerturbedView, PerturbedView> make_views(const GraphInstance& g, double eps0,
                                                   double eps1, Rng& rng);

// Same node set and edge sets differing in exactly one edge.
bool adjacent(const GraphInstance& g1, const GraphInstance& g2);

struct DpRatioOptions {
  std::size_t n_samples = 1'000'000;
  std::size_t n_bins = 40;
  double lo = -5.0;
  double hi = 6.0;
  std::size_t min_count = 100;
  double slack = 1.2;
};

struct DpRatioReport {
  double epsilon = 0.0;
  int pair_i = 0;
  int pair_j = 0;
  std::size_t n_samples = 0;
  std::size_t n_bins = 0;
  std::size_t populated_bins = 0;
  double max_ratio = 0.0;
  double bound = 0.0;  // e^epsilon * slack
  bool pass = false;
};

// Empirical check of Pr[M(g1) in S] <= e^eps Pr[M(g2) in S] on the released
// value of the pair where g1 and g2 differ. Histograms both releases over the
// shared bins and takes the worst ratio in either direction over bins with at
// least min_count hits on both sides. Throws ArgumentError if the graphs are
// not adjacent.
DpRatioReport dp_ratio_check(const GraphInstance& g1, const GraphInstance& g2, double epsilon,
                             const DpRatioOptions& opts, Rng& rng);

// Sequential-composition total epochs * (eps0 + eps1). Reported, never enforced.
double budget_report(int epochs, double eps0, double eps1);

}  // namespace fgcl::dp
