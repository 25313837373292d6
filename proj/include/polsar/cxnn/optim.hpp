#pragma once

#include <cstdint>

#include "polsar/cxnn/param.hpp"

namespace polsar::nn {

struct AdamWOptions {
  double lr = 5e-4;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW step at (1-based) step count t over every parameter's current
/// gradient, treating Re and Im as independent real parameters. Decay is
/// decoupled: w <- w (1 - lr wd) - lr m^ / (sqrt(v^) + eps). Throws
/// NumericError, leaving all parameters untouched, when any gradient is not finite.
template <class T>
void adamw_step(const ParamList<T>& params, const AdamWOptions& opt, std::uint64_t t);

}  // namespace polsar::nn
