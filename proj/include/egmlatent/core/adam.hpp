#pragma once

#include <cstdint>

#include "egmlatent/core/tensor.hpp"

namespace egmlatent {

struct AdamOptions {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

struct AdamState {
  AdamState() = default;
  AdamState(const Shape& shape, AdamOptions opts);

  Tensor m;
  Tensor v;
  std::uint64_t step_count = 0;
  AdamOptions options;
};

/// One bias-corrected Adam update from param.grad. Throws a divergence error
/// (leaving param and state untouched) if any gradient entry is non-finite.
void adam_step(Parameter& param, AdamState& state);

}  // namespace egmlatent
