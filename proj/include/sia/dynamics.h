#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sia {

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix53d = Eigen::Matrix<double, 5, 3>;

/// Extended unicycle state. Positions are relative to the active obstacle,
/// expressed in the global frame; velocities are in the body frame.
struct State {
  double px{0.0};
  double py{0.0};
  double v{0.0};
  double vl{0.0};
  double theta{0.0};

  Vector5d AsVector() const;
  static State FromVector(const Vector5d& x);
};

/// Longitudinal / lateral acceleration and yaw-rate command.
struct Control {
  double a{0.0};
  double al{0.0};
  double omega{0.0};

  Eigen::Vector3d AsVector() const;
  static Control FromVector(const Eigen::Vector3d& u);
};

/// Payload-dependent dynamics parameters. `gain` is the lower-right 3x3
/// block of A^g (rows: v, v_l, theta; columns: a, a_l, omega) and `drift`
/// holds the nonzero entries of epsilon. The remaining structure of A^f,
/// A^g and epsilon is fixed to identity / zero.
struct VaryingParams {
  Eigen::Matrix3d gain = Eigen::Matrix3d::Identity();
  Eigen::Vector3d drift = Eigen::Vector3d::Zero();

  static VaryingParams Nominal() { return {}; }

  /// Row-major gain entries followed by the drift entries
  /// (g33, g34, g35, g43, ..., g55, e3, e4, e5).
  std::array<double, 12> Flatten() const;
  static VaryingParams FromFlat(const std::array<double, 12>& values);
};

/// Payload parameters identified on hardware for the 0.0, 3.5 and 5.9 kg
/// payloads. Throws std::invalid_argument for any other label.
VaryingParams IdentifiedPayloadParams(std::string_view label);
std::vector<std::string> IdentifiedPayloadLabels();

struct Bounds {
  double d_min{1.0};
  double L{1.0};
  double V{1.3};
  double V_l{0.7};
  Control u_lo{-15.0, -15.0, -2.0};
  Control u_hi{15.0, 15.0, 2.0};
};

/// Wraps an angle to (-pi, pi].
double WrapAngle(double angle);

Vector5d EvalF(const State& s);
Matrix53d EvalG(const State& s);

/// x_dot = A^f f(x) + A^g g(x) u + epsilon with A^f = I.
Vector5d EvalXdot(const State& s, const Control& u, const VaryingParams& rho);

/// One classical RK4 step with `u` held constant. theta is wrapped on exit.
State StepRk4(const State& s, const Control& u, const VaryingParams& rho,
              double dt);

/// Zero-order-hold propagation over `dt` using `substeps` RK4 steps.
State Propagate(const State& s, const Control& u, const VaryingParams& rho,
                double dt, int substeps);

}  // namespace sia
