#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "classify_support.hpp"
#include "egmlatent/classify/features.hpp"
#include "egmlatent/classify/metrics.hpp"
#include "egmlatent/core/error.hpp"

using namespace egmlatent;
using namespace egmlatent::classify;
using testing::el;

namespace {

// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
double pair_count_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!y[i] || y[j]) continue;
      pairs += 1;
      good += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  return good / pairs;
}

// Trapezoid area under the (fpr, tpr) polyline.
double trapezoid(const std::vector<RocPoint>& pts) {
  double a = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    a += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2;
  return a;
}

}  // namespace

TEST_CASE("auc matches pair counting on random instances with ties") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 60;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = double(gen() % 12) / 4.0;  // coarse grid forces ties
      y[i] = gen() % 3 == 0;
    }
    y[0] = 1;
    y[1] = 0;
    const double auc = roc_auc(s, y);
    CHECK(auc == doctest::Approx(pair_count_auc(s, y)).epsilon(1e-12));
    CHECK(trapezoid(roc_curve(s, y)) == doctest::Approx(auc).epsilon(1e-12));
  }
}

TEST_CASE("auc is invariant to monotone transforms and flips under negation") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<double> s(80), t(80), neg(80);
  std::vector<std::uint8_t> y(80);
  for (std::size_t i = 0; i < 80; ++i) {
    s[i] = u(gen);
    t[i] = std::exp(3 * s[i]) + 1;
    neg[i] = -s[i];
    y[i] = (s[i] + u(gen)) > 0;
  }
  CHECK(roc_auc(t, y) == doctest::Approx(roc_auc(s, y)).epsilon(1e-12));
  CHECK(roc_auc(neg, y) == doctest::Approx(1 - roc_auc(s, y)).epsilon(1e-12));
}

TEST_CASE("auc hand values and undefined case") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  CHECK(roc_auc(s, y) == doctest::Approx(0.75));
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  CHECK(roc_auc(flat, y) == doctest::Approx(0.5));
  const std::vector<std::uint8_t> one_class{1, 1, 1, 1};
  try {
    roc_auc(s, one_class);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedAuc);
  }
}

TEST_CASE("roc curve starts at origin and ends at (1, 1)") {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.3, 0.1};
  const std::vector<std::uint8_t> y{1, 0, 1, 0, 0};
  const auto pts = roc_curve(s, y);
  REQUIRE(pts.size() == 5);  // origin + 4 distinct scores
  CHECK(pts.front().fpr == 0.0);
  CHECK(pts.front().tpr == 0.0);
  CHECK(pts.back().fpr == doctest::Approx(1.0));
  CHECK(pts.back().tpr == doctest::Approx(1.0));
  CHECK(pts[2].fpr == doctest::Approx(1.0 / 3));
  CHECK(pts[2].tpr == doctest::Approx(1.0));
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].fpr >= pts[i - 1].fpr);
    CHECK(pts[i].tpr >= pts[i - 1].tpr);
  }
}

TEST_CASE("confusion metrics on a scripted table") {
  const std::vector<double> s{0.9, 0.7, 0.5, 0.2, 0.6, 0.4, 0.1, 0.05, 0.8, 0.3};
  const std::vector<std::uint8_t> y{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const auto m = confusion_metrics(s, y, 0.5);
  CHECK(m.tp == 3);  // 0.5 counts as positive
  CHECK(m.fn == 1);
  CHECK(m.fp == 2);
  CHECK(m.tn == 4);
  CHECK(m.positives == 4);
  CHECK(m.negatives == 6);
  CHECK(m.sensitivity == doctest::Approx(0.75));
  CHECK(m.specificity == doctest::Approx(4.0 / 6));
  CHECK(m.accuracy == doctest::Approx(0.7));
  CHECK(m.auc == doctest::Approx(pair_count_auc(s, y)));
  const auto j = metrics_to_json(m);
  CHECK(j.at("confusion").at("tp").get<int>() == 3);
  CHECK(j.at("auc").get<double>() == doctest::Approx(m.auc));
}

TEST_CASE("standardization fits mean and population std") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g(0, 1);
  Tensor x(Shape{500, 3});
  for (std::size_t i = 0; i < 500; ++i)
    for (std::size_t j = 0; j < 3; ++j) el(x, i, j) = float(5.0 * j + (j + 1) * g(gen));
  const auto p = standardize_fit(x);
  const Tensor z = standardize_apply(x, p);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < 500; ++i) s += el(z, i, j);
    const double mean = s / 500;
    for (std::size_t i = 0; i < 500; ++i) ss += (el(z, i, j) - mean) * (el(z, i, j) - mean);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::sqrt(ss / 500) == doctest::Approx(1.0).epsilon(1e-4));
  }
  const auto back = standardization_from_json(standardization_to_json(p));
  CHECK(back.mean == p.mean);
  CHECK(back.stddev == p.stddev);
}

TEST_CASE("standardization parameters come from the fitted set only") {
  Tensor train(Shape{4, 1}), test(Shape{2, 1});
  const float tv[] = {0, 2, 4, 6};
  for (int i = 0; i < 4; ++i) el(train, std::size_t(i), 0) = tv[i];
  el(test, 0, 0) = 100;
  el(test, 1, 0) = 3;
  const auto p = standardize_fit(train);
  CHECK(p.mean[0] == doctest::Approx(3.0));
  CHECK(p.stddev[0] == doctest::Approx(std::sqrt(5.0)));
  const Tensor z = standardize_apply(test, p);
  CHECK(el(z, 0, 0) == doctest::Approx(97 / std::sqrt(5.0)));
  CHECK(el(z, 1, 0) == doctest::Approx(0.0));
}

TEST_CASE("standardization rejects constant columns and tiny sets") {
  Tensor x(Shape{5, 2});
  for (std::size_t i = 0; i < 5; ++i) {
    el(x, i, 0) = float(i);
    el(x, i, 1) = 1.5f;
  }
  try {
    standardize_fit(x);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateData);
  }
  CHECK_THROWS_AS(standardize_fit(Tensor(Shape{1, 2})), Error);
}

TEST_CASE("embedding set subset and validation") {
  EmbeddingSet s{Tensor(Shape{3, 2}), {1, 0, 1}, {"a", "b", "c"}};
  for (std::size_t i = 0; i < 6; ++i) s.features[i] = float(i);
  s.validate();
  CHECK(s.positives() == 2);
  const auto sub = s.subset({2, 0});
  CHECK(sub.labels == std::vector<std::uint8_t>{1, 1});
  CHECK(sub.patient_ids == std::vector<std::string>{"c", "a"});
  CHECK(el(sub.features, 0, 1) == 5.0f);
  s.features[3] = std::nanf("");
  CHECK_THROWS_AS(s.validate(), Error);
}
