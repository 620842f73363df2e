#include "fgcl/optim.hpp"

#include <cmath>

#include "fgcl/error.hpp"
#include "fgcl/kernels.hpp"

namespace fgcl::nn {

ParamStore sgd_step(const ParamStore& params, const ParamStore& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ArgumentError("sgd_step: learning rate must be finite and >= 0");
  }
  if (!params.same_schema(grads)) throw ArgumentError("sgd_step: gradient keys do not match parameters");
  ParamStore out = params;
  auto g = grads.begin();
  for (auto& [name, t] : out) {
    kernels::axpy(-lr, g->second.data(), t.data());
    ++g;
  }
  return out;
}

}  // namespace fgcl::nn
