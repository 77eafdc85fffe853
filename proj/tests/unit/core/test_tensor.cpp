#include <sstream>

#include "doctest.h"
#include "egmlatent/core/error.hpp"
#include "egmlatent/core/tensor.hpp"
#include "egmlatent/core/tensor_io.hpp"
#include "test_support.hpp"

using namespace egmlatent;

TEST_CASE("tensor shape and element count agree") {
  Tensor t(Shape{2, 3, 4}, 1.5f);
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  CHECK(t.dim(2) == 4);
  CHECK(t[23] == 1.5f);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>(3)), Error);
  t.reshape(Shape{6, 4});
  CHECK(t.shape() == Shape{6, 4});
  CHECK_THROWS_AS(t.reshape(Shape{5, 5}), Error);
}

TEST_CASE("parameter grad matches value shape and zeroes") {
  Parameter p(Tensor(Shape{3, 2}, 2.0f));
  CHECK(p.grad.shape() == p.value.shape());
  p.grad.fill(4.0f);
  p.zero_grad();
  for (float g : p.grad.values()) CHECK(g == 0.0f);
}

TEST_CASE("EGMT header layout is little-endian magic, version, rank, u64 dims") {
  Tensor t(Shape{2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  std::ostringstream out;
  write_tensor(out, t);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 4 + 2 + 1 + 2 * 8 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "EGMT");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  CHECK(static_cast<unsigned char>(bytes[6]) == 2);
  CHECK(static_cast<unsigned char>(bytes[7]) == 2);
  for (int i = 8; i < 15; ++i) CHECK(bytes[i] == 0);
  CHECK(static_cast<unsigned char>(bytes[15]) == 3);
  // 1.0f == 0x3F800000
  CHECK(static_cast<unsigned char>(bytes[23]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[26]) == 0x3F);
}

TEST_CASE("EGMT round trip is bit exact for random shapes") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    Shape shape(1 + rng.below(4));
    for (auto& d : shape) d = 1 + rng.below(5);
    Tensor t = testing::random_tensor(shape, rng, -1e6, 1e6);
    std::stringstream buf;
    write_tensor(buf, t);
    CHECK(read_tensor(buf) == t);
  }
}

TEST_CASE("EGMT rejects corruption and version mismatch") {
  Tensor t(Shape{4}, 1.0f);
  std::ostringstream out;
  write_tensor(out, t);
  std::string bytes = out.str();

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS(read_tensor(truncated), doctest::Contains("truncated"), Error);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream in_magic(bad_magic);
  try {
    read_tensor(in_magic);
    FAIL("expected corruption error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Corruption);
  }

  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::istringstream in_version(bad_version);
  try {
    read_tensor(in_version);
    FAIL("expected version error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Version);
  }
}

TEST_CASE("rng streams are reproducible and forks are independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng f1 = Rng(42).fork("x"), f2 = Rng(42).fork("y");
  CHECK(f1.next_u64() != f2.next_u64());
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.below(7) < 7);
  }
}
