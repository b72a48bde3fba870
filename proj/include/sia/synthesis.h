#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sia/sos_certificate.h"

namespace sia {

struct DgaConfig {
  double lr_theta{1e-3};
  double lr_p{1e-3};
  double discount{0.99};
  /// Every principal minor of every Q_i must reach this value.
  double target{1e-4};
  int max_iters{2000};
  /// Central-difference step, scaled by max(1, |parameter|).
  double fd_step{1e-6};
  std::uint64_t seed{0};
  double eta{kDefaultEta};

  void Validate() const;
};

struct DgaRecord {
  int iter{0};
  double k{0.0};
  std::array<double, kNumAssignments> min_minor{};
  std::array<SubsetMask, kNumAssignments> active_subset{};
  double step_norm_k{0.0};
  double step_norm_p{0.0};
  double wall_ms{0.0};
};

struct DgaTrace {
  std::vector<DgaRecord> records;
  double duration_s{0.0};
  bool converged{false};
};

/// Writes `iter,k,min_minor_1..8,wall_ms`.
void WriteTraceCsv(std::ostream& out, const DgaTrace& trace);

struct DgaGradient {
  double dk{0.0};
  std::array<MultiplierVector, kNumAssignments> dp{};
};

/// Finite-difference gradient of the lowest principal minor of each Q_i.
/// dp[i] differentiates Det[Q_i]_{I_i*} w.r.t. p_i; dk averages the eight
/// k-derivatives.
DgaGradient FdGradient(const CertificatePoint& cp, const VaryingParams& rho,
                       const Bounds& b, const DgaConfig& cfg);

/// Same, with the active subsets I_i* supplied by the caller.
DgaGradient FdGradient(const CertificatePoint& cp, const VaryingParams& rho,
                       const Bounds& b, const DgaConfig& cfg,
                       const std::array<SubsetMask, kNumAssignments>& active);

/// Ascent update with learning rates scaled by discount^iter, followed by
/// projection of k and every multiplier onto [0, inf).
CertificatePoint ApplyUpdate(const CertificatePoint& cp,
                             const DgaGradient& grad, const DgaConfig& cfg,
                             int iter);

CertificatePoint DgaStep(const CertificatePoint& cp, const VaryingParams& rho,
                         const Bounds& b, const DgaConfig& cfg, int iter);

struct DgaResult {
  CertificatePoint point;
  DgaTrace trace;
};

/// Thrown when the iteration budget runs out before every minor reaches the
/// target. Carries the point with the highest minimum minor seen.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(CertificatePoint best, double best_min_minor,
                      DgaTrace trace);

  const CertificatePoint& best() const { return best_; }
  double best_min_minor() const { return best_min_minor_; }
  const DgaTrace& trace() const { return trace_; }

 private:
  CertificatePoint best_;
  double best_min_minor_;
  DgaTrace trace_;
};

/// Starting point for synthesis without a prior certificate.
CertificatePoint HeuristicInitialPoint();

/// Re-certifies `previous` for `rho_new`. The discount schedule restarts at
/// iteration 0 on every call.
DgaResult Adapt(const CertificatePoint& previous, const VaryingParams& rho_new,
                const Bounds& b, const DgaConfig& cfg);

DgaResult Synthesize(const VaryingParams& rho, const Bounds& b,
                     const DgaConfig& cfg,
                     std::optional<CertificatePoint> init = std::nullopt);

}  // namespace sia
