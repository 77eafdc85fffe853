#include "egmlatent/classify/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "egmlatent/core/error.hpp"

namespace egmlatent::classify {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels, const char* what) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::Dimension, std::string(what) + ": " + std::to_string(scores.size()) + " scores, " +
                                          std::to_string(labels.size()) + " labels");
  }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  for (auto l : labels) pos += l ? 1 : 0;
  return {pos, labels.size() - pos};
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels, "roc_auc");
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw Error(ErrorKind::UndefinedAuc, "AUC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are 1-based; a tied run shares its mean rank. Twice the ranks stay integral.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t twice_mid = (i + 1) + j;  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) twice_rank_sum += twice_mid;
    }
    i = j;
  }
  const std::uint64_t twice_u = twice_rank_sum - std::uint64_t(pos) * (pos + 1);
  return double(twice_u) / (2.0 * double(pos) * double(neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels, "roc_curve");
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw Error(ErrorKind::UndefinedAuc, "ROC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out{{order.empty() ? 1.0 : scores[order[0]] + 1.0, 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    out.push_back({scores[order[i]], double(fp) / double(neg), double(tp) / double(pos)});
    i = j;
  }
  return out;
}

MetricsReport confusion_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                double threshold) {
  check_inputs(scores, labels, "confusion_metrics");
  MetricsReport m;
  m.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      (predicted ? m.tp : m.fn) += 1;
    } else {
      (predicted ? m.fp : m.tn) += 1;
    }
  }
  m.positives = m.tp + m.fn;
  m.negatives = m.tn + m.fp;
  if (m.positives == 0 || m.negatives == 0) throw Error(ErrorKind::UndefinedAuc, "metrics need both classes");
  m.sensitivity = double(m.tp) / double(m.positives);
  m.specificity = double(m.tn) / double(m.negatives);
  m.accuracy = double(m.tp + m.tn) / double(scores.size());
  m.auc = roc_auc(scores, labels);
  return m;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"task", m.task},
          {"auc", m.auc},
          {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"accuracy", m.accuracy},
          {"threshold", m.threshold},
          {"positives", m.positives},
          {"negatives", m.negatives},
          {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}}}};
}

}  // namespace egmlatent::classify
