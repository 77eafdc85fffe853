#include "egmlatent/classify/cv.hpp"

#include "egmlatent/classify/metrics.hpp"
#include "egmlatent/core/error.hpp"
#include "egmlatent/core/parallel.hpp"
#include "egmlatent/core/rng.hpp"

namespace egmlatent::classify {

std::vector<std::size_t> stratified_folds(std::span<const std::uint8_t> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::Configuration, "cross-validation needs at least 2 folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.size() < folds || neg.size() < folds) {
    throw Error(ErrorKind::Stratification, std::to_string(folds) + " folds need at least that many rows of each class (" +
                                               std::to_string(pos.size()) + " positive, " +
                                               std::to_string(neg.size()) + " negative)");
  }
  Rng rng = Rng(seed).fork("folds");
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = i % folds;
  // Negatives continue the deal where positives stopped, which evens out fold sizes.
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of[neg[i]] = (pos.size() + i) % folds;
  return fold_of;
}

CvResult cross_validate(const Tensor& x, std::span<const std::uint8_t> y, const std::vector<Hyperparams>& grid,
                        std::size_t folds, std::uint64_t seed) {
  if (grid.empty()) throw Error(ErrorKind::Configuration, "empty hyperparameter grid");
  if (x.rank() != 2 || x.dim(0) != y.size()) throw Error(ErrorKind::Dimension, "cross_validate: features/labels mismatch");
  CvResult out;
  out.fold_of = stratified_folds(y, folds, seed);
  const std::size_t n = y.size(), d = x.dim(1);

  struct FoldData {
    Tensor train_x, test_x;
    std::vector<std::uint8_t> train_y, test_y;
  };
  std::vector<FoldData> data(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (out.fold_of[i] == f ? te : tr).push_back(i);
    auto gather = [&](const std::vector<std::size_t>& rows, Tensor& xs, std::vector<std::uint8_t>& ys) {
      xs = Tensor(Shape{rows.size(), d});
      for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(x.data() + rows[r] * d, d, xs.data() + r * d);
        ys.push_back(y[rows[r]]);
      }
    };
    gather(tr, data[f].train_x, data[f].train_y);
    gather(te, data[f].test_x, data[f].test_y);
  }

  out.grid.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out.grid[g].params = grid[g];
    out.grid[g].fold_auc.assign(folds, 0.0);
  }
  parallel_for(grid.size() * folds, [&](std::size_t task) {
    const std::size_t g = task / folds, f = task % folds;
    const ClassifierModel m = train_classifier(data[f].train_x, data[f].train_y, grid[g]);
    out.grid[g].fold_auc[f] = roc_auc(predict_proba(m, data[f].test_x), data[f].test_y);
  });
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double a : out.grid[g].fold_auc) s += a;
    out.grid[g].mean_auc = s / double(folds);
    if (out.grid[g].mean_auc > out.grid[out.best].mean_auc) out.best = g;
  }
  return out;
}

std::vector<Hyperparams> default_grid(Family family) {
  std::vector<Hyperparams> out;
  switch (family) {
    case Family::Logistic:
      for (double c : {0.1, 1.0, 10.0}) out.push_back({Family::Logistic, c});
      break;
    case Family::Knn:
      for (std::size_t k : {3, 5, 7, 11, 13, 15}) {
        Hyperparams h;
        h.family = Family::Knn;
        h.k = k;
        out.push_back(h);
      }
      break;
    case Family::Gbdt:
      for (std::size_t e : {100, 200})
        for (std::size_t depth : {3, 6, 9}) {
          Hyperparams h;
          h.family = Family::Gbdt;
          h.n_estimators = e;
          h.max_depth = depth;
          h.shrinkage = 0.1;
          out.push_back(h);
        }
      break;
  }
  return out;
}

}  // namespace egmlatent::classify
