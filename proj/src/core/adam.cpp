#include "egmlatent/core/adam.hpp"

#include <cmath>

#include "egmlatent/core/error.hpp"

namespace egmlatent {

AdamState::AdamState(const Shape& shape, AdamOptions opts)
    : m(shape), v(shape), options(opts) {}

void adam_step(Parameter& param, AdamState& state) {
  if (state.m.shape() != param.value.shape() || state.v.shape() != param.value.shape() ||
      param.grad.shape() != param.value.shape()) {
    throw Error(ErrorKind::Dimension, "adam state does not match parameter shape " +
                                          shape_string(param.value.shape()));
  }
  if (!param.grad.all_finite()) {
    throw Error(ErrorKind::Divergence, "non-finite gradient at adam step " +
                                           std::to_string(state.step_count + 1));
  }
  const auto& o = state.options;
  const std::uint64_t t = ++state.step_count;
  const double c1 = 1.0 - std::pow(double(o.beta1), double(t));
  const double c2 = 1.0 - std::pow(double(o.beta2), double(t));
  const float step = static_cast<float>(o.learning_rate / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float b1 = o.beta1, b2 = o.beta2;
  float* p = param.value.data();
  const float* g = param.grad.data();
  float* m = state.m.data();
  float* v = state.v.data();
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    m[i] = b1 * m[i] + (1.0f - b1) * g[i];
    v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
    p[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + o.epsilon);
  }
}

}  // namespace egmlatent
