#include "egmlatent/core/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "egmlatent/core/error.hpp"

namespace egmlatent {

GradCheckReport grad_check(const std::function<double()>& objective,
                           std::span<GradProbe> probes, double epsilon, double scale_floor) {
  GradCheckReport report;
  for (auto& probe : probes) {
    if (probe.values.size() != probe.analytic.size()) {
      throw Error(ErrorKind::Dimension, "probe '" + probe.name + "' gradient size mismatch");
    }
    std::vector<std::size_t> indices = probe.indices;
    if (indices.empty()) {
      indices.resize(probe.values.size());
      for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    }
    for (std::size_t idx : indices) {
      float& x = probe.values[idx];
      const float original = x;
      x = static_cast<float>(original + epsilon);
      const double plus = objective();
      const double h_plus = double(x) - double(original);
      x = static_cast<float>(original - epsilon);
      const double minus = objective();
      const double h_minus = double(original) - double(x);
      x = original;

      // Use the step actually representable in float.
      const double numeric = (plus - minus) / (h_plus + h_minus);
      const double analytic = probe.analytic[idx];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), scale_floor});
      const double err = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (report.checked == 1 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_probe = probe.name;
        report.worst_index = idx;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace egmlatent
