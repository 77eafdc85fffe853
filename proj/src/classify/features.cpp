#include "egmlatent/classify/features.hpp"

#include <cmath>

#include "egmlatent/core/error.hpp"

namespace egmlatent::classify {

void EmbeddingSet::validate() const {
  if (features.rank() != 2 || features.dim(0) != labels.size() ||
      (!patient_ids.empty() && patient_ids.size() != labels.size())) {
    throw Error(ErrorKind::Dimension, "embedding set: features " + shape_string(features.shape()) + ", " +
                                          std::to_string(labels.size()) + " labels, " +
                                          std::to_string(patient_ids.size()) + " patient ids");
  }
  for (float v : features.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::DegenerateData, "embedding set has non-finite features");
  }
}

EmbeddingSet EmbeddingSet::subset(const std::vector<std::size_t>& rows) const {
  const std::size_t d = features.dim(1);
  EmbeddingSet out;
  out.features = Tensor(Shape{rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(features.data() + rows[r] * d, d, out.features.data() + r * d);
    out.labels.push_back(labels[rows[r]]);
    if (!patient_ids.empty()) out.patient_ids.push_back(patient_ids[rows[r]]);
  }
  return out;
}

std::size_t EmbeddingSet::positives() const {
  std::size_t n = 0;
  for (auto l : labels) n += l ? 1 : 0;
  return n;
}

StandardizationParams standardize_fit(const Tensor& x) {
  if (x.rank() != 2) throw Error(ErrorKind::Dimension, "standardize_fit expects N x D, got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (n < 2) throw Error(ErrorKind::DegenerateData, "standardization needs at least 2 rows");
  StandardizationParams p{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += x.data()[i * d + j];
  for (auto& m : p.mean) m /= double(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = x.data()[i * d + j] - p.mean[j];
      p.stddev[j] += dv * dv;
    }
  for (std::size_t j = 0; j < d; ++j) {
    p.stddev[j] = std::sqrt(p.stddev[j] / double(n));
    if (!(p.stddev[j] > 0.0)) {
      throw Error(ErrorKind::DegenerateData, "feature " + std::to_string(j) + " has zero variance");
    }
  }
  return p;
}

Tensor standardize_apply(const Tensor& x, const StandardizationParams& p) {
  if (x.rank() != 2 || x.dim(1) != p.mean.size()) {
    throw Error(ErrorKind::Dimension, "standardize_apply: " + shape_string(x.shape()) + " vs " +
                                          std::to_string(p.mean.size()) + " parameters");
  }
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.data()[i * d + j] = static_cast<float>((x.data()[i * d + j] - p.mean[j]) / p.stddev[j]);
  return out;
}

nlohmann::json standardization_to_json(const StandardizationParams& p) {
  return {{"mean", p.mean}, {"std", p.stddev}};
}

StandardizationParams standardization_from_json(const nlohmann::json& j) {
  try {
    StandardizationParams p{j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
    if (p.mean.size() != p.stddev.size()) throw Error(ErrorKind::Corruption, "standardization size mismatch");
    for (double s : p.stddev) {
      if (!(s > 0.0)) throw Error(ErrorKind::DegenerateData, "stored standard deviation is not positive");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Corruption, std::string("standardization params: ") + e.what());
  }
}

}  // namespace egmlatent::classify
