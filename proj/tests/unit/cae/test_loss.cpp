#include <doctest.h>

#include <cmath>

#include "egmlatent/cae/loss.hpp"
#include "test_support.hpp"

using namespace egmlatent;
using namespace egmlatent::cae;
using testing::random_tensor;

namespace {

// Direct transcription of the regularized loss, in long double.
long double regmse_oracle(const Tensor& y, const Tensor& yh, double lambda, double tau, double eta) {
  long double se = 0, num = 0, den = 0;
  const long double n = y.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double d = (long double)y[i] - yh[i];
    se += d * d;
    const long double w = std::max<long double>(0, std::fabs((long double)y[i]) - tau);
    num += w * std::fabs(d);
    den += w;
  }
  return se / n + (lambda / n) * num / (den + eta);
}

}  // namespace

TEST_CASE("mse hand examples") {
  Tensor x(Shape{2}, std::vector<float>{1.0f, -1.0f});
  CHECK(loss_mse(x, Tensor(Shape{2})) == 1.0);
  CHECK(loss_mse(x, x) == 0.0);
}

TEST_CASE("mse is invariant to joint permutation") {
  Rng rng(1);
  Tensor a = random_tensor(Shape{50}, rng), b = random_tensor(Shape{50}, rng);
  Tensor pa(Shape{50}), pb(Shape{50});
  const auto perm = permutation(50, rng);
  for (std::size_t i = 0; i < 50; ++i) {
    pa[i] = a[perm[i]];
    pb[i] = b[perm[i]];
  }
  CHECK(loss_mse(a, b) == doctest::Approx(loss_mse(pa, pb)).epsilon(1e-12));
}

TEST_CASE("regmse hand example") {
  Tensor y(Shape{1}, std::vector<float>{0.5f});
  Tensor yh(Shape{1});
  const double want = 0.25 + 1.0 * (0.4 * 0.5) / (0.4 + 1e-8);
  CHECK(loss_regmse(y, yh, 1.0, 0.1, 1e-8) == doctest::Approx(want).epsilon(1e-6));
  CHECK(loss_regmse(y, yh, 1.0, 0.1, 1e-8) == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("regmse reductions to mse are exact") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor y = random_tensor(Shape{3, 40}, rng), yh = random_tensor(Shape{3, 40}, rng);
    CHECK(loss_regmse(y, yh, 0.0, 0.1, 1e-8) == loss_mse(y, yh));
    Tensor quiet = random_tensor(Shape{3, 40}, rng, -0.1, 0.1);
    CHECK(loss_regmse(quiet, yh, 2.0, 0.1, 1e-8) == loss_mse(quiet, yh));
    const auto g0 = loss_regmse_grad(y, yh, 0.0, 0.1, 1e-8);
    const auto gm = loss_mse_grad(y, yh);
    CHECK(g0.value == gm.value);
    CHECK(g0.grad == gm.grad);
  }
}

TEST_CASE("regmse agrees with an independent transcription") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor y = random_tensor(Shape{200}, rng), yh = random_tensor(Shape{200}, rng);
    const double lambda = rng.uniform(0, 3), tau = rng.uniform(0, 0.5);
    CHECK(loss_regmse(y, yh, lambda, tau, 1e-8) ==
          doctest::Approx(double(regmse_oracle(y, yh, lambda, tau, 1e-8))).epsilon(1e-9));
  }
}

TEST_CASE("loss gradients match central differences") {
  Rng rng(4);
  Tensor y = random_tensor(Shape{30}, rng), yh = random_tensor(Shape{30}, rng);
  const auto gm = loss_mse_grad(y, yh);
  const auto gr = loss_regmse_grad(y, yh, 1.5, 0.2, 1e-8);
  CHECK(gm.value == loss_mse(y, yh));
  CHECK(gr.value == doctest::Approx(loss_regmse(y, yh, 1.5, 0.2, 1e-8)).epsilon(1e-12));
  for (std::size_t i = 0; i < 30; ++i) {
    const float h = 1e-3f;
    Tensor up = yh, dn = yh;
    up[i] += h;
    dn[i] -= h;
    const double nm = (loss_mse(y, up) - loss_mse(y, dn)) / (double(up[i]) - dn[i]);
    const double nr = (regmse_oracle(y, up, 1.5, 0.2, 1e-8) - regmse_oracle(y, dn, 1.5, 0.2, 1e-8)) /
                      (double(up[i]) - dn[i]);
    CHECK(gm.grad[i] == doctest::Approx(nm).epsilon(1e-3));
    CHECK(gr.grad[i] == doctest::Approx(nr).epsilon(1e-3));
  }
}

TEST_CASE("regmse subgradient at a kink is zero in the absolute term") {
  Tensor y(Shape{2}, std::vector<float>{0.5f, 0.8f});
  Tensor yh = y;
  const auto g = loss_regmse_grad(y, yh, 1.0, 0.1, 1e-8);
  CHECK(g.value == 0.0);
  CHECK(g.grad[0] == 0.0f);
  CHECK(g.grad[1] == 0.0f);
}
