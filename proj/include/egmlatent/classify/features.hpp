#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "egmlatent/core/tensor.hpp"

namespace egmlatent::classify {

/// Rows of an embedding matrix with one binary label each.
struct EmbeddingSet {
  Tensor features;  // N x D
  std::vector<std::uint8_t> labels;
  std::vector<std::string> patient_ids;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const { return features.dim(1); }
  /// Throws a dimension error on inconsistent N, or degenerate data on non-finite features.
  void validate() const;
  EmbeddingSet subset(const std::vector<std::size_t>& rows) const;
  std::size_t positives() const;
};

struct StandardizationParams {
  std::vector<double> mean, stddev;
};

/// Per-dimension mean and population standard deviation. N < 2 or a
/// zero-variance dimension is a degenerate-data error.
StandardizationParams standardize_fit(const Tensor& features);
Tensor standardize_apply(const Tensor& features, const StandardizationParams& params);

nlohmann::json standardization_to_json(const StandardizationParams& p);
StandardizationParams standardization_from_json(const nlohmann::json& j);

}  // namespace egmlatent::classify
