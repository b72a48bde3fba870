#pragma once

// Reference computations written directly from the model formulas, kept
// independent of the library's polynomial and QP machinery.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "sia/dynamics.h"
#include "sia/safe_controller.h"
#include "sia/safety_index.h"

namespace oracle {

// Relaxed variables of the certificate basis.
struct Point {
  double a1, a2, a3, a4, px, py, v, vl;
};

inline Eigen::Matrix<double, 9, 1> Basis(const Point& x) {
  Eigen::Matrix<double, 9, 1> b;
  b << 1.0, x.a1, x.a2, x.a3, x.a4, x.px, x.py, x.v, x.vl;
  return b;
}

inline double Bracket(int j, const Point& x, const sia::VaryingParams& rho) {
  const auto& g = rho.gain;
  return -x.a3 * (g(1, j) + g(2, j) * x.v) + x.a4 * (g(0, j) - g(2, j) * x.vl);
}

// gamma_0..gamma_12 evaluated pointwise. signs[j] = +1 picks u_hi.
inline std::array<double, 13> Gammas(const std::array<int, 3>& signs,
                                     const Point& x,
                                     const sia::VaryingParams& rho, double k,
                                     const sia::Bounds& b, double eta) {
  const std::array<double, 3> hi{b.u_hi.a, b.u_hi.al, b.u_hi.omega};
  const std::array<double, 3> lo{b.u_lo.a, b.u_lo.al, b.u_lo.omega};
  std::array<double, 13> g{};
  g[0] = -2 * k * x.v * x.v - 2 * k * x.vl * x.vl - 2 * x.px * x.a1 -
         2 * x.py * x.a2 + eta;
  for (int j = 0; j < 3; ++j) {
    const double u = signs[j] > 0 ? hi[j] : lo[j];
    g[0] += -2 * k * u * Bracket(j, x, rho);
    g[1 + j] = signs[j] * Bracket(j, x, rho);
  }
  const double e3 = rho.drift(0), e4 = rho.drift(1), e5 = rho.drift(2);
  const double w1 = k * e3 + x.v - k * e5 * x.vl;
  const double w2 = k * e4 + x.vl + k * e5 * x.v;
  const double r2 = x.px * x.px + x.py * x.py;
  g[4] = -x.a1 * x.a1 + w1 * w1 + w2 * w2;
  g[5] = -x.a2 * x.a2 + w1 * w1 + w2 * w2;
  g[6] = -x.a3 * x.a3 + r2;
  g[7] = -x.a4 * x.a4 + r2;
  g[8] = b.L * b.L - x.px * x.px;
  g[9] = b.L * b.L - x.py * x.py;
  g[10] = b.V * b.V - x.v * x.v;
  g[11] = b.V_l * b.V_l - x.vl * x.vl;
  g[12] = r2 - b.d_min * b.d_min;
  return g;
}

// Table I values with independent multiplicative jitter in [1-f, 1+f].
template <class Rng>
sia::VaryingParams Jitter(const sia::VaryingParams& rho, double f, Rng& rng) {
  std::uniform_real_distribution<double> u(1.0 - f, 1.0 + f);
  sia::VaryingParams out = rho;
  for (int i = 0; i < 9; ++i) out.gain(i / 3, i % 3) *= u(rng);
  for (int i = 0; i < 3; ++i) out.drift(i) *= u(rng);
  return out;
}

// Eigenvalue classification of a symmetric matrix.
inline bool PsdByEigen(const Eigen::MatrixXd& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

struct GridQp {
  double objective{std::numeric_limits<double>::infinity()};
  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  bool feasible{false};
};

// min ||u - u_nom||^2 s.t. c.u <= rhs over the box. (a, al) run over a grid;
// for each grid pair the optimal omega is found exactly, since the feasible
// omega values form an interval.
inline GridQp GridSearch(const Eigen::Vector3d& c, double rhs,
                         const Eigen::Vector3d& u_nom, const Eigen::Vector3d& lo,
                         const Eigen::Vector3d& hi, double step) {
  GridQp best;
  const int na = static_cast<int>(std::round((hi(0) - lo(0)) / step));
  const int nl = static_cast<int>(std::round((hi(1) - lo(1)) / step));
  for (int i = 0; i <= na; ++i) {
    const double a = lo(0) + i * step;
    for (int j = 0; j <= nl; ++j) {
      const double al = lo(1) + j * step;
      const double rest = rhs - c(0) * a - c(1) * al;
      double w_lo = lo(2), w_hi = hi(2);
      if (c(2) > 0) {
        w_hi = std::min(w_hi, rest / c(2));
      } else if (c(2) < 0) {
        w_lo = std::max(w_lo, rest / c(2));
      } else if (rest < 0) {
        continue;
      }
      if (w_lo > w_hi) continue;
      const double w = std::clamp(u_nom(2), w_lo, w_hi);
      const double obj = (a - u_nom(0)) * (a - u_nom(0)) +
                         (al - u_nom(1)) * (al - u_nom(1)) +
                         (w - u_nom(2)) * (w - u_nom(2));
      if (obj < best.objective) {
        best.objective = obj;
        best.u = Eigen::Vector3d(a, al, w);
        best.feasible = true;
      }
    }
  }
  return best;
}

// Exact minimum by enumerating active sets: each coordinate at its lower
// bound, upper bound or free, with the halfspace active or not. Every
// candidate that is feasible is a feasible point, and the optimum is among
// them, so the smallest candidate objective is the optimum.
inline GridQp EnumerateActiveSets(const Eigen::Vector3d& c, double rhs,
                                  const Eigen::Vector3d& u_nom,
                                  const Eigen::Vector3d& lo,
                                  const Eigen::Vector3d& hi) {
  GridQp best;
  auto consider = [&](const Eigen::Vector3d& u) {
    const double tol = 1e-12 * (1.0 + std::abs(rhs));
    if ((u - lo).minCoeff() < -1e-12 || (hi - u).minCoeff() < -1e-12) return;
    if (c.dot(u) > rhs + tol) return;
    const double obj = (u - u_nom).squaredNorm();
    if (obj < best.objective) {
      best.objective = obj;
      best.u = u;
      best.feasible = true;
    }
  };
  consider(u_nom.cwiseMax(lo).cwiseMin(hi));
  for (int pattern = 0; pattern < 27; ++pattern) {
    Eigen::Vector3d u = u_nom;
    double fixed = 0.0, free_dot = 0.0, free_sq = 0.0;
    int code = pattern;
    for (int j = 0; j < 3; ++j, code /= 3) {
      if (code % 3 == 0) {
        u(j) = lo(j);
        fixed += c(j) * lo(j);
      } else if (code % 3 == 1) {
        u(j) = hi(j);
        fixed += c(j) * hi(j);
      } else {
        free_dot += c(j) * u_nom(j);
        free_sq += c(j) * c(j);
      }
    }
    consider(u);
    if (free_sq == 0.0) continue;
    const double lambda = (free_dot + fixed - rhs) / free_sq;
    code = pattern;
    for (int j = 0; j < 3; ++j, code /= 3) {
      if (code % 3 == 2) u(j) = u_nom(j) - lambda * c(j);
    }
    consider(u);
  }
  return best;
}

}  // namespace oracle
