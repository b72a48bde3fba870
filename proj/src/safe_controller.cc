#include "sia/safe_controller.h"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <unsupported/Eigen/KroneckerProduct>

namespace sia {
namespace {

Eigen::Matrix<double, 5, 3> NominalB() { return EvalG(State{}); }

Vector5d TrackingError(const State& s, const GoalSpec& goal) {
  Vector5d e;
  e << s.px - goal.x, s.py - goal.y, s.v, s.vl,
      goal.heading ? WrapAngle(s.theta - *goal.heading) : 0.0;
  return e;
}

}  // namespace

ControlAffineCoeffs AffineCoeffs(const State& s, const VaryingParams& rho,
                                 double k) {
  const AlphaTerms alpha = Alphas(s, rho, k);
  ControlAffineCoeffs c;
  c.c0 = -2.0 * k * s.v * s.v - 2.0 * k * s.vl * s.vl -
         2.0 * s.px * alpha.a1 - 2.0 * s.py * alpha.a2;
  c.ca = -2.0 * k * ControlBracket(0, s, alpha, rho);
  c.cal = -2.0 * k * ControlBracket(1, s, alpha, rho);
  c.cw = -2.0 * k * ControlBracket(2, s, alpha, rho);
  return c;
}

Control Clamp(const Control& u, const Bounds& b) {
  return Control{std::clamp(u.a, b.u_lo.a, b.u_hi.a),
                 std::clamp(u.al, b.u_lo.al, b.u_hi.al),
                 std::clamp(u.omega, b.u_lo.omega, b.u_hi.omega)};
}

bool InBox(const Control& u, const Bounds& b) {
  return u.a >= b.u_lo.a && u.a <= b.u_hi.a && u.al >= b.u_lo.al &&
         u.al <= b.u_hi.al && u.omega >= b.u_lo.omega &&
         u.omega <= b.u_hi.omega;
}

PhiDotMinimum MinimizePhiDot(const State& s, const VaryingParams& rho,
                             double k, const Bounds& b) {
  const ControlAffineCoeffs c = AffineCoeffs(s, rho, k);
  const Eigen::Vector3d grad = c.Gradient();
  const Eigen::Vector3d lo = b.u_lo.AsVector();
  const Eigen::Vector3d hi = b.u_hi.AsVector();
  Eigen::Vector3d u;
  for (int j = 0; j < 3; ++j) {
    if (grad(j) < 0.0) {
      u(j) = hi(j);
    } else if (grad(j) > 0.0) {
      u(j) = lo(j);
    } else {
      u(j) = std::clamp(0.0, lo(j), hi(j));
    }
  }
  PhiDotMinimum out;
  out.u_star = Control::FromVector(u);
  out.value = c.Evaluate(out.u_star);
  return out;
}

LqrWeights LqrWeights::Default() {
  LqrWeights w;
  w.q = Eigen::Matrix<double, 5, 5>::Zero();
  w.q.diagonal() << 10.0, 10.0, 1.0, 1.0, 2.0;
  w.r = Eigen::Matrix3d::Identity() * 0.1;
  return w;
}

CareSolution SolveCare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
  const Eigen::Index n = a.rows();
  CareSolution sol;
  const Eigen::MatrixXd r_inv = r.inverse();
  const Eigen::MatrixXd g = b * r_inv * b.transpose();

  Eigen::MatrixXd z(2 * n, 2 * n);
  z << a, -g, -q, -a.transpose();

  const double order = static_cast<double>(2 * n);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(z);
    const double det = std::abs(lu.determinant());
    if (!std::isfinite(det) || det == 0.0) return sol;
    const double scale = std::pow(det, -1.0 / order);
    const Eigen::MatrixXd next = 0.5 * (scale * z + lu.inverse() / scale);
    const double change = (next - z).norm();
    z = next;
    if (change <= 1e-13 * z.norm()) break;
  }

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd lhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + eye;
  Eigen::MatrixXd rhs(2 * n, n);
  rhs << -(z.topLeftCorner(n, n) + eye), -z.bottomLeftCorner(n, n);
  Eigen::MatrixXd p = lhs.colPivHouseholderQr().solve(rhs);
  p = 0.5 * (p + p.transpose()).eval();

  auto residual = [&](const Eigen::MatrixXd& pm) {
    return (a.transpose() * pm + pm * a - pm * g * pm + q).norm();
  };
  // Newton (Kleinman) refinement: each step solves one Lyapunov equation.
  for (int iter = 0; iter < 3 && residual(p) > 1e-12 * (1.0 + p.norm());
       ++iter) {
    const Eigen::MatrixXd k = r_inv * b.transpose() * p;
    const Eigen::MatrixXd ac = a - b * k;
    const Eigen::MatrixXd rhs_lyap = -(q + k.transpose() * r * k);
    const Eigen::MatrixXd kron =
        Eigen::kroneckerProduct(eye, ac.transpose()).eval() +
        Eigen::kroneckerProduct(ac.transpose(), eye).eval();
    const Eigen::VectorXd vec =
        kron.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(
            rhs_lyap.data(), rhs_lyap.size()));
    Eigen::MatrixXd next = Eigen::Map<const Eigen::MatrixXd>(vec.data(), n, n);
    p = 0.5 * (next + next.transpose());
  }

  sol.p = p;
  sol.k = r_inv * b.transpose() * p;
  sol.residual = residual(p);
  const Eigen::VectorXcd closed_loop = (a - b * sol.k).eigenvalues();
  sol.ok = p.allFinite() && closed_loop.real().maxCoeff() < 0.0;
  return sol;
}

Eigen::Matrix<double, 5, 5> LinearizedA(double theta) {
  Eigen::Matrix<double, 5, 5> a = Eigen::Matrix<double, 5, 5>::Zero();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  a(0, 2) = c;
  a(0, 3) = -s;
  a(1, 2) = s;
  a(1, 3) = c;
  return a;
}

Control PdFallback(const State& s, const GoalSpec& goal, const Bounds& b) {
  constexpr double kp = 2.0;
  constexpr double kd = 2.0;
  const double ex = goal.x - s.px;
  const double ey = goal.y - s.py;
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  // Goal error in the body frame.
  const double e_long = c * ex + sn * ey;
  const double e_lat = -sn * ex + c * ey;
  const double e_head = goal.heading ? WrapAngle(*goal.heading - s.theta) : 0.0;
  return Clamp(Control{kp * e_long - kd * s.v, kp * e_lat - kd * s.vl,
                       kp * e_head},
               b);
}

Control LqrNominal(const State& s, const GoalSpec& goal,
                   const LqrWeights& weights, const Bounds& b) {
  const CareSolution sol =
      SolveCare(LinearizedA(s.theta), NominalB(), weights.q, weights.r);
  if (!sol.ok) {
    std::clog << "lqr: Riccati solve failed, using PD fallback\n";
    return PdFallback(s, goal, b);
  }
  const Eigen::Vector3d u = -sol.k * TrackingError(s, goal);
  return Clamp(Control::FromVector(u), b);
}

LqrTracker::LqrTracker(LqrWeights weights, Bounds bounds,
                       double relinearize_threshold, VaryingParams rho)
    : weights_(std::move(weights)),
      bounds_(bounds),
      threshold_(relinearize_threshold),
      b_(NominalB()) {
  b_.bottomRows<3>() = rho.gain;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(rho.gain);
  if (lu.isInvertible()) feedforward_ = -lu.solve(rho.drift);
}

void LqrTracker::Relinearize(double theta) {
  const CareSolution sol =
      SolveCare(LinearizedA(theta), b_, weights_.q, weights_.r);
  ++solves_;
  linearized_heading_ = theta;
  gain_ok_ = sol.ok;
  if (sol.ok) {
    gain_ = sol.k;
  } else {
    std::clog << "lqr: Riccati solve failed, using PD fallback\n";
  }
}

Control LqrTracker::Compute(const State& s, const GoalSpec& goal) {
  if (!linearized_heading_ ||
      std::abs(WrapAngle(s.theta - *linearized_heading_)) > threshold_) {
    Relinearize(s.theta);
  }
  if (!gain_ok_) return PdFallback(s, goal, bounds_);
  const Eigen::Vector3d u = feedforward_ - gain_ * TrackingError(s, goal);
  return Clamp(Control::FromVector(u), bounds_);
}

SafeQpResult SafeQp(const State& s, const Control& u_nom,
                    const VaryingParams& rho, const SafetyIndexParam& p,
                    const Bounds& b) {
  SafeQpResult result;
  const Control clamped = Clamp(u_nom, b);
  if (Phi(s, p) < 0.0) {
    result.u = clamped;
    result.status = QpStatus::kInactive;
    return result;
  }

  const ControlAffineCoeffs coeffs = AffineCoeffs(s, rho, p.k);
  const Eigen::Vector3d c = coeffs.Gradient();
  const double rhs = -p.eta - coeffs.c0;  // need c . u <= rhs
  const double slack = 1e-12 * (1.0 + std::abs(rhs));
  if (c.dot(clamped.AsVector()) <= rhs + slack) {
    result.u = clamped;
    result.status = QpStatus::kSatisfied;
    return result;
  }

  const PhiDotMinimum vertex = MinimizePhiDot(s, rho, p.k, b);
  if (vertex.value > -p.eta) {
    result.u = vertex.u_star;
    result.status = QpStatus::kInfeasible;
    return result;
  }

  const Eigen::Vector3d lo = b.u_lo.AsVector();
  const Eigen::Vector3d hi = b.u_hi.AsVector();
  const Eigen::Vector3d nominal = u_nom.AsVector();
  auto project = [&](double lambda) {
    return (nominal - lambda * c).cwiseMax(lo).cwiseMin(hi).eval();
  };
  auto constraint = [&](double lambda) { return c.dot(project(lambda)); };

  double lambda_lo = 0.0;
  double lambda_hi = 1.0;
  while (constraint(lambda_hi) > rhs) {
    lambda_lo = lambda_hi;
    lambda_hi *= 2.0;
  }
  for (int iter = 0; iter < 200 && lambda_hi - lambda_lo >
                                       1e-15 * std::max(1.0, lambda_hi);
       ++iter) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (constraint(mid) > rhs) {
      lambda_lo = mid;
    } else {
      lambda_hi = mid;
    }
  }

  // The active set is fixed inside the final bracket; solve for lambda there.
  double lambda = lambda_hi;
  const double mid = 0.5 * (lambda_lo + lambda_hi);
  const Eigen::Vector3d trial = nominal - mid * c;
  double free_sq = 0.0;
  double fixed_part = 0.0;
  double free_part = 0.0;
  for (int j = 0; j < 3; ++j) {
    if (trial(j) > lo(j) && trial(j) < hi(j)) {
      free_sq += c(j) * c(j);
      free_part += c(j) * nominal(j);
    } else {
      fixed_part += c(j) * std::clamp(trial(j), lo(j), hi(j));
    }
  }
  if (free_sq > 0.0) {
    const double exact = (free_part + fixed_part - rhs) / free_sq;
    if (exact >= lambda_lo && exact <= lambda_hi &&
        constraint(exact) <= rhs + slack) {
      lambda = exact;
    }
  }
  result.u = Control::FromVector(project(lambda));
  result.lambda = lambda;
  result.status = QpStatus::kProjected;
  return result;
}

bool CheckFiFeasible(const State& s, const VaryingParams& rho,
                     const SafetyIndexParam& p, const Bounds& b) {
  if (Phi(s, p) >= 0.0) return true;
  return MinimizePhiDot(s, rho, p.k, b).value <= 0.0;
}

bool CheckFtcFeasible(const State& s, const VaryingParams& rho,
                      const SafetyIndexParam& p, const Bounds& b) {
  if (Phi(s, p) < 0.0) return true;
  return MinimizePhiDot(s, rho, p.k, b).value < -p.eta;
}

}  // namespace sia
