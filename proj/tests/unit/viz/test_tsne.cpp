#include <doctest.h>

#include <cmath>
#include <random>

#include "egmlatent/core/error.hpp"
#include "egmlatent/viz/tsne.hpp"

using namespace egmlatent;
using namespace egmlatent::viz;

namespace {

Tensor two_clusters(std::size_t per_class, std::size_t d, double separation, std::uint64_t seed,
                    std::vector<int>* labels) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0, 1);
  Tensor x(Shape{2 * per_class, d});
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int c = int(i % 2);
    if (labels) labels->push_back(c);
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = float(g(gen) + (c && j == 0 ? separation : 0.0));
  }
  return x;
}

// Mean silhouette over all points, Euclidean distance in the layout.
double silhouette(const Tensor& y, const std::vector<int>& labels) {
  const std::size_t n = labels.size(), d = y.dim(1);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double same = 0, other = 0;
    std::size_t ns = 0, no = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0;
      for (std::size_t k = 0; k < d; ++k) s += std::pow(double(y[i * d + k]) - y[j * d + k], 2);
      (labels[j] == labels[i] ? same : other) += std::sqrt(s);
      (labels[j] == labels[i] ? ns : no) += 1;
    }
    const double a = same / double(ns), b = other / double(no);
    total += (b - a) / std::max(a, b);
  }
  return total / double(n);
}

}  // namespace

TEST_CASE("conditional affinities are row-stochastic at the target entropy") {
  const Tensor x = two_clusters(60, 16, 10.0, 1, nullptr);
  for (double perp : {5.0, 15.0, 30.0}) {
    const auto c = conditional_affinities(x, perp);
    for (std::size_t i = 0; i < c.n; ++i) {
      double s = 0, h = 0;
      for (std::size_t j = 0; j < c.n; ++j) {
        const double p = c.p[i * c.n + j];
        s += p;
        if (p > 0) h -= p * std::log(p);
      }
      CHECK(c.p[i * c.n + i] == 0.0);
      CHECK(std::abs(s - 1.0) < 1e-6);
      CHECK(std::abs(h - std::log(perp)) < 1e-3);
      CHECK(std::abs(c.entropy[i] - h) < 1e-9);
    }
  }
}

TEST_CASE("joint affinities are symmetric and sum to one") {
  const Tensor x = two_clusters(20, 4, 3.0, 2, nullptr);
  const auto p = joint_affinities(conditional_affinities(x, 5.0));
  const std::size_t n = 40;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      s += p[i * n + j];
      CHECK(p[i * n + j] == p[j * n + i]);
    }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rigid rotation leaves affinities unchanged") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g(0, 1);
  const std::size_t n = 50, d = 6;
  std::vector<double> x(n * d);
  for (auto& v : x) v = g(gen);
  // Random orthogonal matrix from Gram-Schmidt.
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t a = 0; a < d; ++a) {
    for (auto& v : q[a]) v = g(gen);
    for (std::size_t b = 0; b < a; ++b) {
      double dot = 0;
      for (std::size_t k = 0; k < d; ++k) dot += q[a][k] * q[b][k];
      for (std::size_t k = 0; k < d; ++k) q[a][k] -= dot * q[b][k];
    }
    double nrm = 0;
    for (double v : q[a]) nrm += v * v;
    for (auto& v : q[a]) v /= std::sqrt(nrm);
  }
  std::vector<double> r(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t k = 0; k < d; ++k) r[i * d + a] += q[a][k] * x[i * d + k];
  const auto p0 = conditional_affinities(x, n, d, 10.0);
  const auto p1 = conditional_affinities(r, n, d, 10.0);
  double worst = 0;
  for (std::size_t k = 0; k < n * n; ++k) worst = std::max(worst, std::abs(p0.p[k] - p1.p[k]));
  CHECK(worst < 1e-10);
}

TEST_CASE("tsne separates two distant clusters") {
  std::vector<int> labels;
  const Tensor x = two_clusters(50, 16, 10.0, 4, &labels);
  TsneConfig cfg;
  cfg.perplexity = 20;
  cfg.seed = 5;
  const auto proj = tsne(x, cfg);
  REQUIRE(proj.coords.shape() == Shape{100, 2});
  REQUIRE(proj.kl_history.size() == 1000);
  for (float v : proj.coords.values()) CHECK(std::isfinite(v));
  for (double kl : proj.kl_history) {
    CHECK(std::isfinite(kl));
    CHECK(kl >= 0.0);
  }
  CHECK(silhouette(proj.coords, labels) > 0.5);
  CHECK(proj.kl_history[999] < proj.kl_history[249]);
}

TEST_CASE("tsne is deterministic for a seed") {
  const Tensor x = two_clusters(15, 5, 2.0, 6, nullptr);
  TsneConfig cfg;
  cfg.perplexity = 5;
  cfg.iterations = 300;
  cfg.seed = 9;
  const auto a = tsne(x, cfg), b = tsne(x, cfg);
  CHECK(a.coords.values()[0] == b.coords.values()[0]);
  bool same = true;
  for (std::size_t k = 0; k < a.coords.size(); ++k) same = same && a.coords[k] == b.coords[k];
  CHECK(same);
  CHECK(a.kl_history == b.kl_history);
  cfg.seed = 10;
  CHECK(tsne(x, cfg).coords[0] != a.coords[0]);
}

TEST_CASE("tsne preconditions") {
  TsneConfig cfg;
  cfg.perplexity = 1;
  CHECK_THROWS_AS(tsne(Tensor(Shape{1, 16}), cfg), Error);
  CHECK_THROWS_AS(tsne(Tensor(Shape{4, 16}), cfg), Error);
  try {
    cfg.perplexity = 30;
    tsne(Tensor(Shape{60, 16}), cfg);  // needs perplexity < 59 / 3
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
  cfg.perplexity = 5;
  cfg.iterations = 100;
  CHECK_THROWS_AS(tsne(Tensor(Shape{60, 16}), cfg), Error);
}
