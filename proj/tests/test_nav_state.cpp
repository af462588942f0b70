#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sliw/nav_state.hpp"

using namespace sliw;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

NavState random_state(std::mt19937_64& rng) {
  NavState x;
  x.p_WI = random_vec(rng, 100.0);
  x.v_WI = random_vec(rng, 5.0);
  x.R_WI = exp_so3(random_vec(rng, 2.0));
  x.b_a = random_vec(rng, 0.1);
  x.b_w = random_vec(rng, 0.01);
  x.a_B = random_vec(rng, 3.0);
  x.w_B = random_vec(rng, 1.0);
  x.S_v = Vec3::Ones() + random_vec(rng, 0.2);
  x.g_W = Vec3(0, 0, -9.81) + random_vec(rng, 0.05);
  x.R_IL = exp_so3(random_vec(rng, 1.0));
  x.p_IL = random_vec(rng, 0.5);
  x.R_IB = exp_so3(random_vec(rng, 1.0));
  x.p_IB = random_vec(rng, 0.5);
  return x;
}

ErrorVector random_error(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ErrorVector d;
  for (int i = 0; i < kErrorDim; ++i) d(i) = u(rng);
  return d;
}

}  // namespace

TEST_CASE("box_plus with a zero increment is the bit-exact identity") {
  std::mt19937_64 rng(10);
  const NavState x = random_state(rng);
  const NavState y = box_plus(x, ErrorVector::Zero());
  CHECK(y.p_WI == x.p_WI);
  CHECK(y.R_WI == x.R_WI);
  CHECK(y.S_v == x.S_v);
  CHECK(y.R_IB == x.R_IB);
}

TEST_CASE("(x boxplus d) boxminus x recovers d") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const NavState x = random_state(rng);
    const ErrorVector d = random_error(rng, 0.5);
    const ErrorVector back = box_minus(box_plus(x, d), x);
    CHECK((back - d).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("b boxplus (a boxminus b) recovers a") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 300; ++i) {
    const NavState a = random_state(rng);
    const NavState b = random_state(rng);
    const NavState back = box_plus(b, box_minus(a, b));
    CHECK((back.p_WI - a.p_WI).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((back.v_WI - a.v_WI).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((back.R_WI - a.R_WI).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((back.S_v - a.S_v).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((back.g_W - a.g_W).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((back.R_IL - a.R_IL).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((back.R_IB - a.R_IB).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("rotation increments multiply on the right") {
  std::mt19937_64 rng(13);
  const NavState x = random_state(rng);
  ErrorVector d = ErrorVector::Zero();
  const Vec3 dtheta(0.01, -0.02, 0.03);
  d.segment<3>(blk::kRot) = dtheta;
  const NavState y = box_plus(x, d);
  CHECK((y.R_WI - x.R_WI * exp_so3(dtheta)).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("vector blocks add") {
  std::mt19937_64 rng(14);
  const NavState x = random_state(rng);
  ErrorVector d = ErrorVector::Zero();
  d.segment<3>(blk::kScale) = Vec3(0.1, -0.1, 0.05);
  d.segment<3>(blk::kPos) = Vec3(1, 2, 3);
  const NavState y = box_plus(x, d);
  CHECK((y.S_v - (x.S_v + Vec3(0.1, -0.1, 0.05))).norm() == doctest::Approx(0.0));
  CHECK((y.p_WI - (x.p_WI + Vec3(1, 2, 3))).norm() == doctest::Approx(0.0));
}

TEST_CASE("is_valid flags out-of-range scale and gravity") {
  NavState x;
  CHECK(x.is_valid());
  x.S_v = Vec3(2.0, 1.0, 1.0);
  CHECK_FALSE(x.is_valid());
  x = NavState{};
  x.g_W = Vec3(0, 0, -20.0);
  CHECK_FALSE(x.is_valid());
}
