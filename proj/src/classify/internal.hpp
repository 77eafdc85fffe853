#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "egmlatent/core/tensor.hpp"

namespace egmlatent::classify::detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Shape check plus both classes present (task-infeasible otherwise).
void check_training_inputs(const Tensor& x, std::span<const std::uint8_t> y, const char* what);

}  // namespace egmlatent::classify::detail
