#pragma once

#include "fgcl/param_store.hpp"

namespace fgcl::nn {

// theta <- theta - lr * grad. Throws ArgumentError if the gradient keys or
// shapes differ from the parameters, or lr is negative.
ParamStore sgd_step(const ParamStore& params, const ParamStore& grads, double lr);

}  // namespace fgcl::nn
