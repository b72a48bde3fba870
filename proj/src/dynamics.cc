#include "sia/dynamics.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sia {

Vector5d State::AsVector() const {
  Vector5d x;
  x << px, py, v, vl, theta;
  return x;
}

State State::FromVector(const Vector5d& x) {
  return State{x(0), x(1), x(2), x(3), x(4)};
}

Eigen::Vector3d Control::AsVector() const { return {a, al, omega}; }

Control Control::FromVector(const Eigen::Vector3d& u) {
  return Control{u(0), u(1), u(2)};
}

std::array<double, 12> VaryingParams::Flatten() const {
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out[3 * r + c] = gain(r, c);
    }
  }
  for (int r = 0; r < 3; ++r) out[9 + r] = drift(r);
  return out;
}

VaryingParams VaryingParams::FromFlat(const std::array<double, 12>& values) {
  VaryingParams rho;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      rho.gain(r, c) = values[3 * r + c];
    }
  }
  for (int r = 0; r < 3; ++r) rho.drift(r) = values[9 + r];
  return rho;
}

VaryingParams IdentifiedPayloadParams(std::string_view label) {
  VaryingParams rho;
  if (label == "0.0") {
    rho.gain << 0.08177, 0.05700, -0.00152,
                0.00742, 0.12048, 0.00241,
               -0.00166, 0.00444, 0.70741;
    rho.drift << -0.13288, 0.23156, 0.01311;
  } else if (label == "3.5") {
    rho.gain << 0.11144, 0.02731, 0.00278,
                0.03285, 0.13207, 0.00682,
               -0.00121, 0.00207, 0.68546;
    rho.drift << -0.24451, 0.10565, 0.01923;
  } else if (label == "5.9") {
    rho.gain << 0.12088, 0.00613, 0.00498,
                0.04936, 0.10012, -0.03498,
                0.00031, -0.00129, 0.66063;
    rho.drift << -0.44301, 0.09005, 0.02785;
  } else {
    throw std::invalid_argument("unknown payload label '" +
                                std::string(label) + "'");
  }
  return rho;
}

std::vector<std::string> IdentifiedPayloadLabels() {
  return {"0.0", "3.5", "5.9"};
}

double WrapAngle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

Vector5d EvalF(const State& s) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  Vector5d f = Vector5d::Zero();
  f(0) = s.v * c - s.vl * sn;
  f(1) = s.v * sn + s.vl * c;
  return f;
}

Matrix53d EvalG(const State& /*s*/) {
  Matrix53d g = Matrix53d::Zero();
  g.bottomRows<3>().setIdentity();
  return g;
}

Vector5d EvalXdot(const State& s, const Control& u, const VaryingParams& rho) {
  Vector5d xdot = EvalF(s);
  xdot.tail<3>() = rho.gain * u.AsVector() + rho.drift;
  return xdot;
}

State StepRk4(const State& s, const Control& u, const VaryingParams& rho,
              double dt) {
  const Vector5d x = s.AsVector();
  auto deriv = [&](const Vector5d& xi) {
    return EvalXdot(State::FromVector(xi), u, rho);
  };
  const Vector5d k1 = deriv(x);
  const Vector5d k2 = deriv(x + 0.5 * dt * k1);
  const Vector5d k3 = deriv(x + 0.5 * dt * k2);
  const Vector5d k4 = deriv(x + dt * k3);
  State next = State::FromVector(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  next.theta = WrapAngle(next.theta);
  return next;
}

State Propagate(const State& s, const Control& u, const VaryingParams& rho,
                double dt, int substeps) {
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  State x = s;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) x = StepRk4(x, u, rho, h);
  return x;
}

}  // namespace sia
