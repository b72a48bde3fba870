#include "sia/sos_certificate.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sia {
namespace {

using LinearForm = BasisVector;

// Adds the bracket -a3 (g4j + g5j v) + a4 (g3j - g5j vl) scaled by `scale`.
void AddBracket(QuadraticPoly& poly, int channel, const VaryingParams& rho,
                double scale) {
  const auto& g = rho.gain;
  poly.AddTerm(kOne, kAlpha3, -scale * g(1, channel));
  poly.AddTerm(kAlpha3, kV, -scale * g(2, channel));
  poly.AddTerm(kOne, kAlpha4, scale * g(0, channel));
  poly.AddTerm(kAlpha4, kVl, -scale * g(2, channel));
}

void AddSquare(QuadraticPoly& poly, const LinearForm& l, double scale) {
  poly.coeff += scale * l * l.transpose();
}

}  // namespace

BasisVector MakeBasis(const AlphaTerms& alpha, double px, double py, double v,
                      double vl) {
  BasisVector x;
  x << 1.0, alpha.a1, alpha.a2, alpha.a3, alpha.a4, px, py, v, vl;
  return x;
}

BasisVector MakeBasis(const State& s, const VaryingParams& rho, double k) {
  return MakeBasis(Alphas(s, rho, k), s.px, s.py, s.v, s.vl);
}

void QuadraticPoly::AddTerm(int i, int j, double c) {
  if (i == j) {
    coeff(i, i) += c;
  } else {
    coeff(i, j) += 0.5 * c;
    coeff(j, i) += 0.5 * c;
  }
}

int SignAssignment::Sign(int channel) const {
  switch (channel) {
    case 0:
      return a;
    case 1:
      return al;
    case 2:
      return omega;
  }
  throw std::out_of_range("control channel must be 0, 1 or 2");
}

int SignAssignment::Index() const {
  return (a < 0 ? 4 : 0) | (al < 0 ? 2 : 0) | (omega < 0 ? 1 : 0);
}

SignAssignment SignAssignment::FromIndex(int index) {
  if (index < 0 || index >= kNumAssignments) {
    throw std::out_of_range("sign assignment index must be in [0, 8)");
  }
  return SignAssignment{(index & 4) ? -1 : 1, (index & 2) ? -1 : 1,
                        (index & 1) ? -1 : 1};
}

CertificatePoint CertificatePoint::Uniform(double k, double multiplier) {
  CertificatePoint cp;
  cp.k = k;
  for (auto& p : cp.multipliers) p.setConstant(multiplier);
  return cp;
}

std::array<QuadraticPoly, kNumConstraints> BuildGammas(
    const SignAssignment& sign, const VaryingParams& rho, double k,
    const Bounds& b, double eta) {
  std::array<QuadraticPoly, kNumConstraints> gammas;
  const Eigen::Vector3d u_lo = b.u_lo.AsVector();
  const Eigen::Vector3d u_hi = b.u_hi.AsVector();

  // Main feasibility condition at the bang-bang control, negated: LHS + eta.
  QuadraticPoly& main = gammas[0];
  main.AddTerm(kV, kV, -2.0 * k);
  main.AddTerm(kVl, kVl, -2.0 * k);
  main.AddTerm(kPx, kAlpha1, -2.0);
  main.AddTerm(kPy, kAlpha2, -2.0);
  for (int j = 0; j < 3; ++j) {
    const double u_tilde = sign.Sign(j) > 0 ? u_hi(j) : u_lo(j);
    AddBracket(main, j, rho, -2.0 * k * u_tilde);
  }
  main.AddTerm(kOne, kOne, eta);

  for (int j = 0; j < 3; ++j) {
    AddBracket(gammas[1 + j], j, rho, static_cast<double>(sign.Sign(j)));
  }

  const double e3 = rho.drift(0);
  const double e4 = rho.drift(1);
  const double e5 = rho.drift(2);
  LinearForm w1 = LinearForm::Zero();
  w1(kOne) = k * e3;
  w1(kV) = 1.0;
  w1(kVl) = -k * e5;
  LinearForm w2 = LinearForm::Zero();
  w2(kOne) = k * e4;
  w2(kVl) = 1.0;
  w2(kV) = k * e5;

  gammas[4].AddTerm(kAlpha1, kAlpha1, -1.0);
  AddSquare(gammas[4], w1, 1.0);
  AddSquare(gammas[4], w2, 1.0);

  gammas[5].AddTerm(kAlpha2, kAlpha2, -1.0);
  AddSquare(gammas[5], w2, 1.0);
  AddSquare(gammas[5], w1, 1.0);

  gammas[6].AddTerm(kAlpha3, kAlpha3, -1.0);
  gammas[6].AddTerm(kPx, kPx, 1.0);
  gammas[6].AddTerm(kPy, kPy, 1.0);

  gammas[7].AddTerm(kAlpha4, kAlpha4, -1.0);
  gammas[7].AddTerm(kPx, kPx, 1.0);
  gammas[7].AddTerm(kPy, kPy, 1.0);

  gammas[8].AddTerm(kPx, kPx, -1.0);
  gammas[8].AddTerm(kOne, kOne, b.L * b.L);

  gammas[9].AddTerm(kPy, kPy, -1.0);
  gammas[9].AddTerm(kOne, kOne, b.L * b.L);

  gammas[10].AddTerm(kV, kV, -1.0);
  gammas[10].AddTerm(kOne, kOne, b.V * b.V);

  gammas[11].AddTerm(kVl, kVl, -1.0);
  gammas[11].AddTerm(kOne, kOne, b.V_l * b.V_l);

  gammas[12].AddTerm(kPx, kPx, 1.0);
  gammas[12].AddTerm(kPy, kPy, 1.0);
  gammas[12].AddTerm(kOne, kOne, -b.d_min * b.d_min);

  return gammas;
}

GramMatrix AssembleGram(const SignAssignment& sign, double k,
                        const MultiplierVector& p, const VaryingParams& rho,
                        const Bounds& b, double eta) {
  const auto gammas = BuildGammas(sign, rho, k, b, eta);
  GramMatrix q = GramMatrix::Zero();
  q(0, 0) = -1.0;
  for (int n = 0; n < kNumConstraints; ++n) {
    if (p(n) != 0.0) q -= p(n) * gammas[n].coeff;
  }
  return q;
}

std::vector<int> SubsetIndices(SubsetMask mask) {
  std::vector<int> idx;
  for (int j = 0; j < kBasisSize; ++j) {
    if (mask & (1u << j)) idx.push_back(j);
  }
  return idx;
}

bool SubsetLess(SubsetMask lhs, SubsetMask rhs) {
  if (lhs == rhs) return false;
  const unsigned diff = static_cast<unsigned>(lhs ^ rhs);
  const int j = std::countr_zero(diff);
  const unsigned above = ~((2u << j) - 1u);
  // The sequence holding j is smaller iff the other one continues past j.
  if (lhs & (1u << j)) return (rhs & above) != 0;
  return (lhs & above) == 0;
}

double SubsetDeterminant(const GramMatrix& q, SubsetMask mask) {
  std::array<int, kBasisSize> idx{};
  int n = 0;
  for (int j = 0; j < kBasisSize; ++j) {
    if (mask & (1u << j)) idx[n++] = j;
  }
  double m[kBasisSize][kBasisSize];
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m[r][c] = q(idx[r], idx[c]);
  }
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(m[col][col]);
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > best) {
        best = std::abs(m[r][col]);
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(m[col][c], m[pivot][c]);
      det = -det;
    }
    const double diag = m[col][col];
    det *= diag;
    for (int r = col + 1; r < n; ++r) {
      const double factor = m[r][col] / diag;
      if (factor == 0.0) continue;
      for (int c = col + 1; c < n; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  return det;
}

std::array<double, kNumMinors> PrincipalMinors(const GramMatrix& q) {
  std::array<double, kNumMinors> minors{};
  for (int mask = 1; mask <= kNumMinors; ++mask) {
    minors[mask - 1] = SubsetDeterminant(q, static_cast<SubsetMask>(mask));
  }
  return minors;
}

MinorResult MinPrincipalMinor(const GramMatrix& q) {
  const auto minors = PrincipalMinors(q);
  const double lowest = *std::min_element(minors.begin(), minors.end());
  MinorResult result{lowest, 0};
  for (int mask = 1; mask <= kNumMinors; ++mask) {
    if (minors[mask - 1] - lowest > 1e-12) continue;
    const auto subset = static_cast<SubsetMask>(mask);
    if (result.subset == 0 || SubsetLess(subset, result.subset)) {
      result.subset = subset;
    }
  }
  return result;
}

bool IsValid(const CertificatePoint& cp, const VaryingParams& rho,
             const Bounds& b, double tol, double eta) {
  if (tol < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  for (int i = 0; i < kNumAssignments; ++i) {
    const GramMatrix q = AssembleGram(SignAssignment::FromIndex(i), cp.k,
                                      cp.multipliers[i], rho, b, eta);
    for (int mask = 1; mask <= kNumMinors; ++mask) {
      if (SubsetDeterminant(q, static_cast<SubsetMask>(mask)) < -tol) {
        return false;
      }
    }
  }
  return true;
}

double MinMinorOverAssignments(const CertificatePoint& cp,
                               const VaryingParams& rho, const Bounds& b,
                               double eta) {
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNumAssignments; ++i) {
    const GramMatrix q = AssembleGram(SignAssignment::FromIndex(i), cp.k,
                                      cp.multipliers[i], rho, b, eta);
    lowest = std::min(lowest, MinPrincipalMinor(q).value);
  }
  return lowest;
}

}  // namespace sia
