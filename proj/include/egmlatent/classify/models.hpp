#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "egmlatent/classify/features.hpp"

namespace egmlatent::classify {

// ------------------------------------------------------------ logistic

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double C = 1.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

/// Minimizes 0.5 |w|^2 + C * sum(logloss) (bias unpenalized) by damped Newton
/// steps with backtracking, until the gradient norm is below 1e-6 or 10,000
/// iterations. Single-class labels are a task-infeasible error.
LogisticModel logreg_train(const Tensor& x, std::span<const std::uint8_t> y, double C);
double logreg_proba(const LogisticModel& m, std::span<const float> x);

// ------------------------------------------------------------ knn

struct KnnModel {
  std::size_t k = 1;
  Tensor features;  // N x D training rows
  std::vector<std::uint8_t> labels;
};

/// Stores the training set. k > N is a configuration error.
KnnModel knn_fit(const Tensor& x, std::span<const std::uint8_t> y, std::size_t k);
/// Fraction of positives among the k nearest rows (Euclidean; equal
/// distances go to the lower training index).
double knn_proba(const KnnModel& m, std::span<const float> x);

// ------------------------------------------------------------ gbdt

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1, right = -1;
  double leaf_value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const float> x) const;
};

struct GbdtModel {
  std::size_t n_estimators = 100, max_depth = 3;
  double shrinkage = 0.1;
  double prior = 0.0;  // log-odds of the base rate
  std::vector<RegressionTree> trees;  // leaf values already include shrinkage and step scaling
  std::vector<double> train_logloss;  // mean log-loss after each stage, index 0 = prior only
};

/// Stagewise boosting on the logistic loss. Each stage fits a depth-limited
/// regression tree to the residuals y - p with exact greedy variance-reduction
/// splits, sets Newton leaf values sum(r) / sum(p(1-p)) times the shrinkage,
/// and halves the stage while it would raise the training loss.
GbdtModel gbdt_train(const Tensor& x, std::span<const std::uint8_t> y, std::size_t n_estimators,
                     std::size_t max_depth, double shrinkage);
double gbdt_proba(const GbdtModel& m, std::span<const float> x);

// ------------------------------------------------------------ common

enum class Family { Logistic, Knn, Gbdt };
std::string_view to_string(Family f) noexcept;
Family family_from_string(std::string_view name);

struct Hyperparams {
  Family family = Family::Logistic;
  double C = 1.0;
  std::size_t k = 5;
  std::size_t n_estimators = 100, max_depth = 3;
  double shrinkage = 0.1;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};
nlohmann::json hyperparams_to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

using ClassifierModel = std::variant<LogisticModel, KnnModel, GbdtModel>;

ClassifierModel train_classifier(const Tensor& x, std::span<const std::uint8_t> y, const Hyperparams& h);
double predict_proba(const ClassifierModel& m, std::span<const float> x);
std::vector<double> predict_proba(const ClassifierModel& m, const Tensor& x);
Family family_of(const ClassifierModel& m) noexcept;

/// <stem>.json, plus <stem>.knn.egmt holding the training rows for kNN.
void save_classifier(const std::filesystem::path& stem, const ClassifierModel& m,
                     const nlohmann::json& provenance = nlohmann::json::object());
ClassifierModel load_classifier(const std::filesystem::path& stem);

}  // namespace egmlatent::classify
