#include "sia/safety_index.h"

#include <cmath>

namespace sia {
namespace {

double CheckedDistance(const State& s) {
  const double d = std::hypot(s.px, s.py);
  if (d == 0.0) {
    throw DegeneratePositionError("state coincides with the obstacle center");
  }
  return d;
}

}  // namespace

double Distance(const State& s) { return std::hypot(s.px, s.py); }

double Phi0(const State& s, double d_min) {
  const double d = CheckedDistance(s);
  return d_min * d_min - d * d;
}

double DistanceRate(const State& s) {
  const double d = CheckedDistance(s);
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double a3 = s.px * sn - s.py * c;
  const double a4 = s.px * c + s.py * sn;
  return (s.v * a4 - s.vl * a3) / d;
}

double Phi(const State& s, const SafetyIndexParam& p) {
  const double d = CheckedDistance(s);
  return p.sigma + p.d_min * p.d_min - d * d - 2.0 * p.k * d * DistanceRate(s);
}

AlphaTerms Alphas(const State& s, const VaryingParams& rho, double k) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double e3 = rho.drift(0);
  const double e4 = rho.drift(1);
  const double e5 = rho.drift(2);
  const double w1 = k * e3 + s.v - k * e5 * s.vl;
  const double w2 = k * e4 + s.vl + k * e5 * s.v;
  AlphaTerms alpha;
  alpha.a1 = c * w1 - sn * w2;
  alpha.a2 = c * w2 + sn * w1;
  alpha.a3 = s.px * sn - s.py * c;
  alpha.a4 = s.px * c + s.py * sn;
  return alpha;
}

double ControlBracket(int channel, const State& s, const AlphaTerms& alpha,
                      const VaryingParams& rho) {
  const auto& g = rho.gain;
  // Column `channel` of the gain block: (g3j, g4j, g5j).
  return -alpha.a3 * (g(1, channel) + g(2, channel) * s.v) +
         alpha.a4 * (g(0, channel) - g(2, channel) * s.vl);
}

double PhiDot(const State& s, const Control& u, const VaryingParams& rho,
              double k) {
  const AlphaTerms alpha = Alphas(s, rho, k);
  double value = -2.0 * k * s.v * s.v - 2.0 * k * s.vl * s.vl -
                 2.0 * s.px * alpha.a1 - 2.0 * s.py * alpha.a2;
  const Eigen::Vector3d uv = u.AsVector();
  for (int j = 0; j < 3; ++j) {
    value -= 2.0 * k * uv(j) * ControlBracket(j, s, alpha, rho);
  }
  return value;
}

}  // namespace sia
