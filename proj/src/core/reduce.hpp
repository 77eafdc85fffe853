#pragma once

#include <cstddef>

namespace egmlatent::detail {

// Fixed-order double reductions over float spans. Four interleaved partial
// sums, combined the same way for any pointer alignment, so results do not
// depend on where the buffer happens to sit in memory.

inline double sum(const float* p, std::size_t n) {
  double a[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t j = 0; j < 4; ++j) a[j] += p[i + j];
  for (; i < n; ++i) a[0] += p[i];
  return (a[0] + a[1]) + (a[2] + a[3]);
}

inline double sum_sq_dev(const float* p, std::size_t n, double mean) {
  double a[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = p[i + j] - mean;
      a[j] += d * d;
    }
  for (; i < n; ++i) {
    const double d = p[i] - mean;
    a[0] += d * d;
  }
  return (a[0] + a[1]) + (a[2] + a[3]);
}

inline double dot(const float* x, const float* y, std::size_t n) {
  double a[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t j = 0; j < 4; ++j) a[j] += double(x[i + j]) * y[i + j];
  for (; i < n; ++i) a[0] += double(x[i]) * y[i];
  return (a[0] + a[1]) + (a[2] + a[3]);
}

}  // namespace egmlatent::detail
