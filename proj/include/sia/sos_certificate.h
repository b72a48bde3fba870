#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sia/dynamics.h"
#include "sia/safety_index.h"

namespace sia {

inline constexpr int kBasisSize = 9;
inline constexpr int kNumConstraints = 13;
inline constexpr int kNumAssignments = 8;
inline constexpr int kNumMinors = (1 << kBasisSize) - 1;

/// Positions in the monomial basis [1, a1, a2, a3, a4, px, py, v, vl].
enum BasisIndex : int {
  kOne = 0,
  kAlpha1 = 1,
  kAlpha2 = 2,
  kAlpha3 = 3,
  kAlpha4 = 4,
  kPx = 5,
  kPy = 6,
  kV = 7,
  kVl = 8,
};

using BasisVector = Eigen::Matrix<double, kBasisSize, 1>;
using GramMatrix = Eigen::Matrix<double, kBasisSize, kBasisSize>;
using MultiplierVector = Eigen::Matrix<double, kNumConstraints, 1>;

/// Builds the basis vector at a point of the relaxed variable space. The
/// alpha entries are treated as free variables, not tied to the state.
BasisVector MakeBasis(const AlphaTerms& alpha, double px, double py, double v,
                      double vl);
BasisVector MakeBasis(const State& s, const VaryingParams& rho, double k);

/// A polynomial of degree <= 2 in the basis, stored as the symmetric
/// coefficient matrix M with value x^T M x. The constant lives at M(0,0).
struct QuadraticPoly {
  GramMatrix coeff = GramMatrix::Zero();

  /// Adds c * x_i * x_j, splitting off-diagonal terms symmetrically.
  void AddTerm(int i, int j, double c);
  double Evaluate(const BasisVector& x) const { return x.dot(coeff * x); }
};

/// Indicator signs (I_a, I_al, I_w) of one refute-set version.
struct SignAssignment {
  int a{1};
  int al{1};
  int omega{1};

  int Sign(int channel) const;
  /// Index 0..7; bit 2 (MSB) is I_a, bit 0 is I_w, a set bit means -1.
  int Index() const;
  static SignAssignment FromIndex(int index);
};

struct CertificatePoint {
  double k{0.0};
  std::array<MultiplierVector, kNumAssignments> multipliers{};

  static CertificatePoint Uniform(double k, double multiplier);
};

/// The 13 refute-set constraints gamma_n >= 0 of one sign assignment:
/// [0] negated main feasibility condition (+eta) at the bang-bang control,
/// [1..3] indicator conditions, [4..7] alpha bounds, [8..11] state box,
/// [12] clearance p_x^2 + p_y^2 - d_min^2.
std::array<QuadraticPoly, kNumConstraints> BuildGammas(
    const SignAssignment& sign, const VaryingParams& rho, double k,
    const Bounds& b, double eta = kDefaultEta);

/// Gram matrix of -1 - sum_n p[n] gamma_n.
GramMatrix AssembleGram(const SignAssignment& sign, double k,
                        const MultiplierVector& p, const VaryingParams& rho,
                        const Bounds& b, double eta = kDefaultEta);

/// Principal-minor subsets are bit masks over the basis (bit j <=> index j),
/// in 1..511.
using SubsetMask = std::uint16_t;

std::vector<int> SubsetIndices(SubsetMask mask);

/// Lexicographic order of the ascending index sequences.
bool SubsetLess(SubsetMask lhs, SubsetMask rhs);

/// Determinant of Q[I, I] by LU with partial pivoting.
double SubsetDeterminant(const GramMatrix& q, SubsetMask mask);

/// All principal minors; entry m - 1 holds the minor of subset mask m.
std::array<double, kNumMinors> PrincipalMinors(const GramMatrix& q);

struct MinorResult {
  double value{0.0};
  SubsetMask subset{1};
};

/// Smallest principal minor. Ties within 1e-12 go to the lexicographically
/// smallest subset.
MinorResult MinPrincipalMinor(const GramMatrix& q);

inline constexpr double kDefaultValidityTol = 1e-10;

/// True iff every principal minor of every Q_i is >= -tol.
bool IsValid(const CertificatePoint& cp, const VaryingParams& rho,
             const Bounds& b, double tol = kDefaultValidityTol,
             double eta = kDefaultEta);

/// Smallest principal minor over all eight Gram matrices.
double MinMinorOverAssignments(const CertificatePoint& cp,
                               const VaryingParams& rho, const Bounds& b,
                               double eta = kDefaultEta);

}  // namespace sia
