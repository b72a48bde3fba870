#pragma once

#include <optional>

#include <Eigen/Dense>

#include "sia/dynamics.h"
#include "sia/safety_index.h"

namespace sia {

/// phi_dot(s, u) = c0 + ca a + cal a_l + cw omega.
struct ControlAffineCoeffs {
  double c0{0.0};
  double ca{0.0};
  double cal{0.0};
  double cw{0.0};

  Eigen::Vector3d Gradient() const { return {ca, cal, cw}; }
  double Evaluate(const Control& u) const {
    return c0 + ca * u.a + cal * u.al + cw * u.omega;
  }
};

ControlAffineCoeffs AffineCoeffs(const State& s, const VaryingParams& rho,
                                 double k);

Control Clamp(const Control& u, const Bounds& b);
bool InBox(const Control& u, const Bounds& b);

struct PhiDotMinimum {
  double value{0.0};
  Control u_star;
};

/// Minimum of phi_dot over the control box, attained at the vertex picked by
/// the coefficient signs (a zero coefficient selects 0, clamped to the box).
PhiDotMinimum MinimizePhiDot(const State& s, const VaryingParams& rho,
                             double k, const Bounds& b);

struct GoalSpec {
  double x{0.0};
  double y{0.0};
  std::optional<double> heading;
  double tolerance{0.3};
};

struct LqrWeights {
  Eigen::Matrix<double, 5, 5> q;
  Eigen::Matrix3d r;

  /// Q = diag(10, 10, 1, 1, 2), R = diag(0.1, 0.1, 0.1).
  static LqrWeights Default();
};

struct CareSolution {
  Eigen::MatrixXd p;
  Eigen::MatrixXd k;
  double residual{0.0};
  bool ok{false};
};

/// Continuous algebraic Riccati equation A'P + PA - P B R^-1 B' P + Q = 0,
/// solved through the matrix sign function of the Hamiltonian.
CareSolution SolveCare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// Linearization of the nominal dynamics about heading `theta` at rest.
Eigen::Matrix<double, 5, 5> LinearizedA(double theta);

/// One-shot LQR tracking control toward `goal` (global frame), linearized
/// about the current heading, clamped to the box. Falls back to a saturated
/// PD law when the Riccati solve fails.
Control LqrNominal(const State& s, const GoalSpec& goal,
                   const LqrWeights& weights, const Bounds& b);

/// Heading-scheduled LQR: the gain is re-solved when the heading drifts more
/// than `relinearize_threshold` from the last linearization point. The input
/// matrix uses the gain block of `rho`, and the drift is cancelled by a
/// feedforward term.
class LqrTracker {
 public:
  explicit LqrTracker(LqrWeights weights = LqrWeights::Default(),
                      Bounds bounds = {}, double relinearize_threshold = 0.2,
                      VaryingParams rho = VaryingParams::Nominal());

  Control Compute(const State& s, const GoalSpec& goal);

  const Eigen::Matrix<double, 3, 5>& gain() const { return gain_; }
  int solves() const { return solves_; }

 private:
  void Relinearize(double theta);

  LqrWeights weights_;
  Bounds bounds_;
  double threshold_;
  Eigen::Matrix<double, 5, 3> b_;
  Eigen::Vector3d feedforward_ = Eigen::Vector3d::Zero();
  std::optional<double> linearized_heading_;
  Eigen::Matrix<double, 3, 5> gain_ = Eigen::Matrix<double, 3, 5>::Zero();
  bool gain_ok_{false};
  int solves_{0};
};

/// Saturated proportional-derivative fallback toward the goal.
Control PdFallback(const State& s, const GoalSpec& goal, const Bounds& b);

enum class QpStatus {
  kInactive,    // phi < 0, nominal control passed through (clamped)
  kSatisfied,   // nominal control already meets the constraint
  kProjected,   // constraint active at the solution
  kInfeasible,  // no control in the box reaches phi_dot <= -eta
};

struct SafeQpResult {
  Control u;
  QpStatus status{QpStatus::kInactive};
  double lambda{0.0};
};

/// min ||u - u_nom||^2 over the box subject to phi_dot <= -eta when
/// phi >= 0. On infeasibility returns the phi_dot-minimizing vertex.
SafeQpResult SafeQp(const State& s, const Control& u_nom,
                    const VaryingParams& rho, const SafetyIndexParam& p,
                    const Bounds& b);

/// FI condition: phi_dot <= 0 reachable whenever phi < 0.
bool CheckFiFeasible(const State& s, const VaryingParams& rho,
                     const SafetyIndexParam& p, const Bounds& b);

/// FTC condition: phi_dot < -eta reachable whenever phi >= 0.
bool CheckFtcFeasible(const State& s, const VaryingParams& rho,
                      const SafetyIndexParam& p, const Bounds& b);

}  // namespace sia
