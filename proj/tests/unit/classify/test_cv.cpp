#include <doctest.h>

#include <map>

#include "classify_support.hpp"
#include "egmlatent/classify/cv.hpp"
#include "egmlatent/core/error.hpp"

using namespace egmlatent;
using namespace egmlatent::classify;
using testing::blobs;
using testing::el;

TEST_CASE("stratified folds balance both classes") {
  std::vector<std::uint8_t> y(103);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 4 == 0;  // 26 positives
  const auto fold = stratified_folds(y, 5, 42);
  std::map<std::size_t, std::size_t> pos, all;
  for (std::size_t i = 0; i < y.size(); ++i) {
    REQUIRE(fold[i] < 5);
    pos[fold[i]] += y[i];
    all[fold[i]] += 1;
  }
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(pos[f] >= 5);
    CHECK(pos[f] <= 6);
    CHECK(all[f] >= 20);
    CHECK(all[f] <= 21);
  }
  CHECK(stratified_folds(y, 5, 42) == fold);
  CHECK(stratified_folds(y, 5, 43) != fold);
}

TEST_CASE("stratified folds need enough rows per class") {
  std::vector<std::uint8_t> y{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  try {
    stratified_folds(y, 5, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Stratification);
  }
  CHECK_NOTHROW(stratified_folds(y, 4, 1));
}

TEST_CASE("cross validation with a single grid point") {
  auto s = blobs(40, 2, 2.0, 1);
  Hyperparams h;
  h.family = Family::Logistic;
  const auto r = cross_validate(s.x, s.y, {h}, 5, 3);
  REQUIRE(r.grid.size() == 1);
  CHECK(r.best == 0);
  CHECK(r.best_params() == h);
  double mean = 0;
  for (double a : r.grid[0].fold_auc) mean += a / 5;
  CHECK(r.grid[0].mean_auc == doctest::Approx(mean));
  CHECK(r.grid[0].mean_auc > 0.85);
}

TEST_CASE("cross validation is reproducible for a fixed seed") {
  auto s = blobs(50, 3, 0.6, 2);
  const auto grid = default_grid(Family::Knn);
  const auto a = cross_validate(s.x, s.y, grid, 5, 9);
  const auto b = cross_validate(s.x, s.y, grid, 5, 9);
  CHECK(a.fold_of == b.fold_of);
  CHECK(a.best == b.best);
  for (std::size_t g = 0; g < grid.size(); ++g) CHECK(a.grid[g].fold_auc == b.grid[g].fold_auc);
}

TEST_CASE("cross validation prefers a small k on clustered data") {
  // Many tight clusters with alternating labels: only the nearest neighbours are informative.
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g(0, 0.05);
  Tensor x(Shape{200, 2});
  std::vector<std::uint8_t> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t c = i % 20;
    el(x, i, 0) = float(double(c % 5) + g(gen));
    el(x, i, 1) = float(double(c / 5) + g(gen));
    y[i] = c % 2;
  }
  std::vector<Hyperparams> grid(2);
  grid[0].family = grid[1].family = Family::Knn;
  grid[0].k = 1;
  grid[1].k = 150;
  const auto r = cross_validate(x, y, grid, 5, 1);
  CHECK(r.best == 0);
  CHECK(r.grid[0].mean_auc > 0.95);
}

TEST_CASE("default grids") {
  CHECK(default_grid(Family::Logistic).size() == 3);
  CHECK(default_grid(Family::Knn).size() == 6);
  const auto gb = default_grid(Family::Gbdt);
  CHECK(gb.size() == 6);
  for (const auto& h : gb) CHECK(h.shrinkage == 0.1);
}
