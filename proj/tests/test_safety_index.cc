#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "sia/safety_index.h"

using Catch::Approx;
using sia::Control;
using sia::State;

TEST_CASE("Distance-based quantities at simple states") {
  // Robot at (2, 0) heading toward the obstacle at 1 m/s.
  const State s{2.0, 0.0, 1.0, 0.0, std::numbers::pi};
  CHECK(sia::Distance(s) == Approx(2.0));
  CHECK(sia::Phi0(s, 1.0) == Approx(1.0 - 4.0));
  CHECK(sia::DistanceRate(s) == Approx(-1.0));
  const sia::SafetyIndexParam p{0.5, 0.2, 1.0};
  // sigma + d_min^2 - d^2 - 2 k d d_dot
  CHECK(sia::Phi(s, p) == Approx(0.2 + 1.0 - 4.0 + 2.0 * 0.5 * 2.0 * 1.0));
}

TEST_CASE("Lateral motion is tangential at the obstacle bearing") {
  const State s{0.0, 3.0, 0.0, 0.7, 0.0};  // moving along +y, away
  CHECK(sia::DistanceRate(s) == Approx(0.7));
  const State t{3.0, 0.0, 0.0, 0.7, 0.0};  // moving along +y, tangential
  CHECK(sia::DistanceRate(t) == Approx(0.0).margin(1e-15));
}

TEST_CASE("Quantities dividing by distance reject the obstacle centre") {
  const State s{0.0, 0.0, 1.0, 0.0, 0.0};
  CHECK_THROWS_AS(sia::DistanceRate(s), sia::DegeneratePositionError);
  CHECK_THROWS_AS(sia::Phi(s, sia::SafetyIndexParam{0.5}), sia::DegeneratePositionError);
}

TEST_CASE("Distance rate is the derivative of distance along the flow") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto rho = sia::IdentifiedPayloadParams("3.5");
  for (int i = 0; i < 100; ++i) {
    const State s{u(rng) + 2.5, u(rng), u(rng), u(rng), 2 * u(rng)};
    const double h = 1e-6;
    const double fd = (sia::Distance(sia::Propagate(s, {}, rho, h, 2)) -
                       sia::Distance(sia::Propagate(s, {}, rho, -h, 2))) / (2 * h);
    CHECK(fd == Approx(sia::DistanceRate(s)).margin(1e-6));
  }
}

TEST_CASE("phi_dot matches central differences of phi along the flow") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const char* labels[] = {"0.0", "3.5", "5.9"};
  for (int i = 0; i < 300; ++i) {
    const auto rho = sia::IdentifiedPayloadParams(labels[i % 3]);
    const State s{3 * u(rng), 3 * u(rng), 1.3 * u(rng), 0.7 * u(rng), 3 * u(rng)};
    if (sia::Distance(s) < 0.3) continue;
    const Control c{15 * u(rng), 15 * u(rng), 2 * u(rng)};
    const sia::SafetyIndexParam p{1.0 + u(rng), 0.1, 1.0};
    const double h = 1e-5;
    const double fd = (sia::Phi(sia::Propagate(s, c, rho, h, 4), p) -
                       sia::Phi(sia::Propagate(s, c, rho, -h, 4), p)) / (2 * h);
    const double an = sia::PhiDot(s, c, rho, p.k);
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("phi_dot is affine in the control through the brackets") {
  const auto rho = sia::IdentifiedPayloadParams("5.9");
  const State s{1.2, -0.4, 0.5, -0.2, 0.9};
  const double k = 0.7;
  const auto alpha = sia::Alphas(s, rho, k);
  const double base = sia::PhiDot(s, Control{}, rho, k);
  for (int j = 0; j < 3; ++j) {
    Control e{};
    (j == 0 ? e.a : j == 1 ? e.al : e.omega) = 1.0;
    CHECK(sia::PhiDot(s, e, rho, k) - base ==
          Approx(-2.0 * k * sia::ControlBracket(j, s, alpha, rho)));
  }
}

TEST_CASE("alpha3 and alpha4 are the position in body axes") {
  const State s{1.0, 2.0, 0.0, 0.0, 0.3};
  const auto a = sia::Alphas(s, sia::VaryingParams::Nominal(), 0.5);
  CHECK(a.a3 * a.a3 + a.a4 * a.a4 == Approx(5.0));
  CHECK(a.a4 == Approx(std::cos(0.3) + 2 * std::sin(0.3)));
  // Nominal dynamics, zero velocity: the rotated velocity vanishes.
  CHECK(a.a1 == Approx(0.0).margin(1e-15));
  CHECK(a.a2 == Approx(0.0).margin(1e-15));
}
