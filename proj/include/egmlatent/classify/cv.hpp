#pragma once

#include <cstdint>
#include <vector>

#include "egmlatent/classify/models.hpp"

namespace egmlatent::classify {

/// Fold index per row. Each class is shuffled with the seed and dealt round
/// robin, so every fold gets both classes whenever each class has at least
/// `folds` members; otherwise a stratification error.
std::vector<std::size_t> stratified_folds(std::span<const std::uint8_t> labels, std::size_t folds,
                                          std::uint64_t seed);

struct GridResult {
  Hyperparams params;
  std::vector<double> fold_auc;
  double mean_auc = 0.0;
};

struct CvResult {
  std::vector<std::size_t> fold_of;
  std::vector<GridResult> grid;  // same order as the input grid
  std::size_t best = 0;          // highest mean AUC, first listed on ties
  const Hyperparams& best_params() const { return grid[best].params; }
};

CvResult cross_validate(const Tensor& x, std::span<const std::uint8_t> y, const std::vector<Hyperparams>& grid,
                        std::size_t folds, std::uint64_t seed);

/// C in {0.1, 1, 10}; k in {3, 5, 7, 11, 13, 15}; estimators {100, 200} x depth {3, 6, 9}
/// at shrinkage 0.1.
std::vector<Hyperparams> default_grid(Family family);

}  // namespace egmlatent::classify
