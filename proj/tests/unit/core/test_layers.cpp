#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "egmlatent/core/error.hpp"
#include "egmlatent/core/layers.hpp"
#include "test_support.hpp"

using namespace egmlatent;
using testing::random_tensor;

TEST_CASE("maxpool2d picks the window max and its flat index") {
  Tensor x(Shape{1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  PoolRecord r = maxpool2d(x);
  CHECK(r.output.shape() == Shape{1, 1, 1});
  CHECK(r.output[0] == 4.0f);
  CHECK(r.argmax_indices[0] == 3);
}

TEST_CASE("maxpool2d tie rule picks the top-left element") {
  Tensor x(Shape{2, 3, 4, 6}, 2.5f);
  PoolRecord r = maxpool2d(x);
  CHECK(r.output.shape() == Shape{2, 3, 2, 3});
  for (std::size_t i = 0; i < r.output.size(); ++i) {
    CHECK(r.output[i] == 2.5f);
    const std::size_t plane = i / 6, cell = i % 6;
    const std::size_t oh = cell / 3, ow = cell % 3;
    CHECK(r.argmax_indices[i] == plane * 24 + (2 * oh) * 6 + 2 * ow);
  }
}

TEST_CASE("maxpool2d passes a 1x1 plane through a clipped window") {
  Tensor x(Shape{1, 1, 1}, std::vector<float>{-3.0f});
  PoolRecord r = maxpool2d(x);
  CHECK(r.output.shape() == Shape{1, 1, 1});
  CHECK(r.output[0] == -3.0f);
  CHECK(maxunpool2d(r.output, r) == x);
}

TEST_CASE("maxpool2d uses floor extents and keeps trailing odd rows") {
  CHECK(pooled_extent(15) == 7);
  CHECK(pooled_extent(7) == 3);
  CHECK(pooled_extent(250) == 125);
  CHECK(pooled_extent(125) == 62);
  CHECK(pooled_extent(20) == 10);
  CHECK(pooled_extent(1) == 1);
  // The maximum sits in the trailing odd row and column; it must survive.
  Tensor x(Shape{1, 1, 3, 3}, 0.0f);
  x[8] = 5.0f;
  PoolRecord r = maxpool2d(x);
  CHECK(r.output.shape() == Shape{1, 1, 1, 1});
  CHECK(r.output[0] == 5.0f);
  CHECK(r.argmax_indices[0] == 8);
}

TEST_CASE("maxunpool2d places values at stored indices, zero elsewhere") {
  PoolRecord r;
  r.input_shape = Shape{1, 2, 2};
  r.output = Tensor(Shape{1, 1, 1});
  r.argmax_indices = {3};
  Tensor v(Shape{1, 1, 1}, std::vector<float>{7.0f});
  Tensor out = maxunpool2d(v, r);
  CHECK(out == Tensor(Shape{1, 2, 2}, std::vector<float>{0, 0, 0, 7}));
  CHECK(maxunpool2d(Tensor(Shape{1, 1, 1}), r) == Tensor(Shape{1, 2, 2}));

  r.argmax_indices = {4};
  try {
    maxunpool2d(v, r);
    FAIL("expected corruption");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Corruption);
  }
  CHECK_THROWS_AS(maxunpool2d(Tensor(Shape{1, 2, 1}), r), Error);
}

TEST_CASE("unpool after pool puts each value on a window argmax, zeros elsewhere") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9);
    Tensor x = random_tensor(Shape{2, 2, h, w}, rng);
    // Quantize to force ties.
    for (auto& v : x.values()) v = std::round(v * 2.0f) / 2.0f;
    PoolRecord r = maxpool2d(x);
    Tensor u = maxunpool2d(r.output, r);
    std::vector<bool> hit(x.size(), false);
    for (std::size_t i = 0; i < r.output.size(); ++i) {
      const std::size_t idx = r.argmax_indices[i];
      CHECK(x[idx] == r.output[i]);
      CHECK(u[idx] == r.output[i]);
      hit[idx] = true;
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!hit[i]) CHECK(u[i] == 0.0f);
    }
  }
}

TEST_CASE("batchnorm train mode standardizes each channel") {
  Rng rng(11);
  Tensor x = random_tensor(Shape{4, 3, 5, 6}, rng, -3.0, 5.0);
  Parameter gamma(Tensor(Shape{3}, 1.0f)), beta(Tensor(Shape{3}, 0.0f));
  BatchNormState state(3);
  Tensor y = batchnorm(x, gamma, beta, state, Mode::Train);
  const std::size_t plane = 30;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t i = 0; i < plane; ++i) sum += y[(s * 3 + c) * plane + i];
    const double mean = sum / 120.0;
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = y[(s * 3 + c) * plane + i] - mean;
        sq += d * d;
      }
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std::abs(sq / 120.0 - 1.0) < 1e-4);
  }
}

TEST_CASE("batchnorm eval mode with unit running stats is the identity") {
  Rng rng(12);
  Tensor x = random_tensor(Shape{1, 2, 3, 3}, rng);
  Parameter gamma(Tensor(Shape{2}, 1.0f)), beta(Tensor(Shape{2}, 0.0f));
  BatchNormState state(2);
  state.epsilon = 0.0f;
  CHECK(batchnorm(x, gamma, beta, state, Mode::Eval) == x);
}

TEST_CASE("fused eval batchnorm-relu-pool matches the composed ops exactly") {
  Rng rng(31);
  for (const Shape shape : {Shape{3, 4, 15, 250}, Shape{2, 3, 7, 125}, Shape{1, 2, 1, 1}, Shape{2, 2, 5, 1},
                            Shape{1, 3, 1, 9}}) {
    const std::size_t c = shape[1];
    Tensor x = random_tensor(shape, rng);
    Parameter gamma(random_tensor(Shape{c}, rng)), beta(random_tensor(Shape{c}, rng));
    BatchNormState state(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      state.running_mean[ch] = float(rng.normal() * 0.3);
      state.running_var[ch] = float(0.5 + rng.uniform());
    }
    const Tensor want = maxpool2d(relu(batchnorm(x, gamma, beta, state, Mode::Eval))).output;
    const Tensor got = batchnorm_relu_pool_eval(x, gamma, beta, state);
    REQUIRE(got.shape() == want.shape());
    CHECK(got == want);
  }
}

TEST_CASE("batchnorm N=2, C=1 against the scalar formula") {
  // Values {1, 3} and {5, 7}: mean 4, biased var 5.
  Tensor x(Shape{2, 1, 1, 2}, std::vector<float>{1, 3, 5, 7});
  Parameter gamma(Tensor(Shape{1}, 2.0f)), beta(Tensor(Shape{1}, 0.5f));
  BatchNormState state(1);
  Tensor y = batchnorm(x, gamma, beta, state, Mode::Train);
  const double istd = 1.0 / std::sqrt(5.0 + 1e-5);
  const double want[4] = {2 * (1 - 4) * istd + 0.5, 2 * (3 - 4) * istd + 0.5,
                          2 * (5 - 4) * istd + 0.5, 2 * (7 - 4) * istd + 0.5};
  for (int i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-6));
  // running: 0.9*0 + 0.1*4, 0.9*1 + 0.1*(20/3)
  CHECK(state.running_mean[0] == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(state.running_var[0] == doctest::Approx(0.9 + 0.1 * 20.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("batchnorm rejects a single-sample training batch") {
  Parameter gamma(Tensor(Shape{1}, 1.0f)), beta(Tensor(Shape{1}, 0.0f));
  BatchNormState state(1);
  try {
    batchnorm(Tensor(Shape{1, 1, 2, 2}), gamma, beta, state, Mode::Train);
    FAIL("expected degenerate batch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateBatch);
  }
  CHECK_NOTHROW(batchnorm(Tensor(Shape{1, 1, 2, 2}), gamma, beta, state, Mode::Eval));
}

TEST_CASE("dropout identity cases") {
  Rng rng(13);
  Tensor x = random_tensor(Shape{3, 50}, rng);
  CHECK(dropout(x, 0.0f, Mode::Train, rng) == x);
  CHECK(dropout(x, 0.0f, Mode::Eval, rng) == x);
  CHECK(dropout(x, 0.6f, Mode::Eval, rng) == x);
  try {
    dropout(x, 1.0f, Mode::Train, rng);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
}

TEST_CASE("dropout p=0.25 over 1e6 elements keeps ~75% and preserves the mean") {
  Rng rng(14);
  Tensor x(Shape{1000000}, 1.0f);
  DropoutMask mask;
  Tensor y = dropout(x, 0.25f, Mode::Train, rng, &mask);
  std::size_t kept = 0;
  double sum = 0;
  for (float v : y.values()) {
    if (v != 0.0f) ++kept;
    sum += v;
  }
  CHECK(std::abs(double(kept) / 1e6 - 0.75) < 0.01);
  CHECK(std::abs(sum / 1e6 - 1.0) < 0.02);
  // Backward applies the same mask.
  Tensor g = dropout_backward(Tensor(Shape{1000000}, 1.0f), mask);
  CHECK(g == y);
}

TEST_CASE("dropout masks are reproducible for a fixed seed") {
  Tensor x(Shape{4096}, 1.0f);
  Rng a(99), b(99);
  CHECK(dropout(x, 0.3f, Mode::Train, a) == dropout(x, 0.3f, Mode::Train, b));
}

TEST_CASE("fully_connected examples") {
  Parameter w(Tensor(Shape{2, 1}, std::vector<float>{1, 1}));
  Parameter b(Tensor(Shape{1}, std::vector<float>{1}));
  Tensor y = fully_connected(Tensor(Shape{1, 2}, std::vector<float>{1, 2}), w, b);
  CHECK(y.shape() == Shape{1, 1});
  CHECK(y[0] == 4.0f);

  Rng rng(15);
  Tensor x = random_tensor(Shape{3, 4}, rng);
  Parameter eye(Tensor(Shape{4, 4}));
  for (int i = 0; i < 4; ++i) eye.value[i * 4 + i] = 1.0f;
  Parameter zero(Tensor(Shape{4}));
  CHECK(fully_connected(x, eye, zero) == x);

  Parameter w2 = testing::random_parameter(Shape{4, 3}, rng);
  Parameter b2(Tensor(Shape{3}, std::vector<float>{1, 2, 3}));
  Tensor z = fully_connected(Tensor(Shape{2, 4}), w2, b2);
  CHECK(z == Tensor(Shape{2, 3}, std::vector<float>{1, 2, 3, 1, 2, 3}));
  CHECK_THROWS_AS(fully_connected(Tensor(Shape{2, 5}), w2, b2), Error);
}

TEST_CASE("relu and tanh values") {
  Tensor x(Shape{3}, std::vector<float>{-1.0f, 2.0f, 0.0f});
  Tensor r = relu(x);
  CHECK(r[0] == 0.0f);
  CHECK(r[1] == 2.0f);
  CHECK(tanh_act(Tensor(Shape{1}))[0] == 0.0f);

  Rng rng(16);
  Tensor big = random_tensor(Shape{1000}, rng, -50.0, 50.0);
  big[0] = 1e30f;
  big[1] = -1e30f;
  big[2] = std::numeric_limits<float>::max();
  Tensor neg = big;
  for (auto& v : neg.values()) v = -v;
  Tensor t = tanh_act(big), tn = tanh_act(neg);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::abs(t[i]) < 1.0f);
    CHECK(tn[i] == -t[i]);
  }
}
