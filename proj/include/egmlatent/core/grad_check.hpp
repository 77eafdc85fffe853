#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace egmlatent {

/// One block of values to perturb together with the analytic gradient the
/// caller already computed for it. An empty `indices` checks every entry.
struct GradProbe {
  std::string name;
  std::span<float> values;
  std::span<const float> analytic;
  std::vector<std::size_t> indices;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_probe;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences of `objective` (evaluated in double) against
/// the analytic gradients. The error for each entry is
///   |analytic - numeric| / max(|analytic|, |numeric|, scale_floor)
/// so that entries whose true gradient is near zero are judged on absolute
/// error at the probe's scale. Every probe value is restored afterwards.
GradCheckReport grad_check(const std::function<double()>& objective,
                           std::span<GradProbe> probes, double epsilon = 1e-3,
                           double scale_floor = 1.0);

}  // namespace egmlatent
