#include <algorithm>
#include <vector>

#include "egmlatent/classify/models.hpp"
#include "egmlatent/core/error.hpp"

namespace egmlatent::classify {

KnnModel knn_fit(const Tensor& x, std::span<const std::uint8_t> y, std::size_t k) {
  if (x.rank() != 2 || x.dim(0) != y.size()) {
    throw Error(ErrorKind::Dimension, "knn: features " + shape_string(x.shape()) + " with " +
                                          std::to_string(y.size()) + " labels");
  }
  if (k < 1 || k > y.size()) {
    throw Error(ErrorKind::Configuration, "knn: k = " + std::to_string(k) + " with " + std::to_string(y.size()) +
                                              " training rows");
  }
  return {k, x, std::vector<std::uint8_t>(y.begin(), y.end())};
}

double knn_proba(const KnnModel& m, std::span<const float> x) {
  const std::size_t n = m.labels.size(), d = m.features.dim(1);
  if (x.size() != d) throw Error(ErrorKind::Dimension, "knn query has the wrong feature count");
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = m.features.data() + i * d;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = double(row[j]) - double(x[j]);
      s += diff * diff;
    }
    dist[i] = {s, i};
  }
  // Pairs compare by distance, then index.
  std::partial_sort(dist.begin(), dist.begin() + long(m.k), dist.end());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m.k; ++i) pos += m.labels[dist[i].second] ? 1 : 0;
  return double(pos) / double(m.k);
}

}  // namespace egmlatent::classify
