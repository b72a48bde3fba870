#pragma once

#include <stdexcept>

#include "sia/dynamics.h"

namespace sia {

inline constexpr double kDefaultEta = 1e-6;

/// Raised when a quantity that divides by the obstacle distance is evaluated
/// at the obstacle center.
class DegeneratePositionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// phi = sigma + d_min^2 - d^2 - 2 k d d_dot.
struct SafetyIndexParam {
  double k{0.0};
  double sigma{0.0};
  double d_min{1.0};
  double eta{kDefaultEta};
};

/// Trigonometric terms of the phi_dot expansion. a3 and a4 are the position
/// projected on the body lateral / longitudinal axes; a1 and a2 rotate the
/// drift-augmented velocity into the global frame.
struct AlphaTerms {
  double a1{0.0};
  double a2{0.0};
  double a3{0.0};
  double a4{0.0};
};

double Distance(const State& s);

double Phi0(const State& s, double d_min);

/// Rate of change of the obstacle distance along the nominal flow,
/// (v a4 - v_l a3) / d.
double DistanceRate(const State& s);

double Phi(const State& s, const SafetyIndexParam& p);

AlphaTerms Alphas(const State& s, const VaryingParams& rho, double k);

/// Bracket multiplying -2 k u_j in phi_dot for control channel j
/// (0: a, 1: a_l, 2: omega). Linear in (a3, a4).
double ControlBracket(int channel, const State& s, const AlphaTerms& alpha,
                      const VaryingParams& rho);

/// Time derivative of phi under the varying dynamics. Independent of sigma.
double PhiDot(const State& s, const Control& u, const VaryingParams& rho,
              double k);

}  // namespace sia
