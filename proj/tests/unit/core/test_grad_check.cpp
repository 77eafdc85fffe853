#include <cmath>

#include "doctest.h"
#include "layer_gradcheck.hpp"

using namespace egmlatent;
using namespace egmlatent::testing;

TEST_CASE("every layer matches finite differences over 20 seeds") {
  for (const auto& check : all_layer_checks()) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const GradCheckReport r = check.run(seed, 1e-3);
      CHECK(r.checked > 0);
      worst = std::max(worst, r.max_relative_error);
    }
    INFO(check.name << " worst relative error " << worst);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("named gradient-check examples") {
  SUBCASE("conv2d on a 1x4x4 input") {
    CHECK(check_conv2d(2024, 1e-3).max_relative_error < 1e-3);
  }
  SUBCASE("fully_connected is linear, so a wider step is exact up to rounding") {
    CHECK(check_fully_connected(2024, 1e-2).max_relative_error < 1e-4);
  }
  SUBCASE("batchnorm in train mode") {
    CHECK(check_batchnorm(2024, 1e-3, Mode::Train).max_relative_error < 1e-3);
  }
}

TEST_CASE("grad_check flags a wrong analytic gradient and restores values") {
  std::vector<float> x{0.3f, -0.7f};
  std::vector<float> wrong{2.0f * 0.3f, 0.0f};  // d/dx of x0^2 + x1^2 is wrong for x1
  std::vector<GradProbe> probes{{"x", x, wrong, {}}};
  auto objective = [&] { return double(x[0]) * x[0] + double(x[1]) * x[1]; };
  GradCheckReport r = grad_check(objective, probes, 1e-3);
  CHECK(r.max_relative_error > 0.5);
  CHECK(r.worst_index == 1);
  CHECK(x[0] == 0.3f);
  CHECK(x[1] == -0.7f);
}
