#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace egmlatent::classify {

/// Mann-Whitney U over (#pos * #neg) with midranks, so tied scores count 0.5.
/// A missing class is an undefined-AUC error.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct RocPoint {
  double threshold, fpr, tpr;
};
/// One point per distinct score, descending, starting at (0, 0).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MetricsReport {
  std::string task;
  double auc = 0.0, sensitivity = 0.0, specificity = 0.0, accuracy = 0.0;
  double threshold = 0.5;
  std::size_t positives = 0, negatives = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Predicted positive when score >= threshold.
MetricsReport confusion_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                double threshold = 0.5);

nlohmann::json metrics_to_json(const MetricsReport& m);

}  // namespace egmlatent::classify
