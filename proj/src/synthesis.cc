#include "sia/synthesis.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace sia {
namespace {

using Clock = std::chrono::steady_clock;

GramMatrix GramFromGammas(
    const std::array<QuadraticPoly, kNumConstraints>& gammas,
    const MultiplierVector& p) {
  GramMatrix q = GramMatrix::Zero();
  q(0, 0) = -1.0;
  for (int n = 0; n < kNumConstraints; ++n) {
    if (p(n) != 0.0) q -= p(n) * gammas[n].coeff;
  }
  return q;
}

double FdScale(double value, double step) {
  return step * std::max(1.0, std::abs(value));
}

double Elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Evaluation {
  std::array<MinorResult, kNumAssignments> minors;
  double lowest{std::numeric_limits<double>::infinity()};
};

Evaluation Evaluate(const CertificatePoint& cp, const VaryingParams& rho,
                    const Bounds& b, double eta) {
  Evaluation ev;
  for (int i = 0; i < kNumAssignments; ++i) {
    const GramMatrix q = AssembleGram(SignAssignment::FromIndex(i), cp.k,
                                      cp.multipliers[i], rho, b, eta);
    ev.minors[i] = MinPrincipalMinor(q);
    ev.lowest = std::min(ev.lowest, ev.minors[i].value);
  }
  return ev;
}

DgaResult RunDga(CertificatePoint point, const VaryingParams& rho,
                 const Bounds& b, const DgaConfig& cfg) {
  cfg.Validate();
  const auto start = Clock::now();
  DgaTrace trace;
  CertificatePoint best = point;
  double best_value = -std::numeric_limits<double>::infinity();

  for (int iter = 0;; ++iter) {
    const Evaluation ev = Evaluate(point, rho, b, cfg.eta);
    DgaRecord record;
    record.iter = iter;
    record.k = point.k;
    for (int i = 0; i < kNumAssignments; ++i) {
      record.min_minor[i] = ev.minors[i].value;
      record.active_subset[i] = ev.minors[i].subset;
    }
    if (ev.lowest > best_value) {
      best_value = ev.lowest;
      best = point;
    }
    if (ev.lowest >= cfg.target) {
      record.wall_ms = 1e3 * Elapsed(start);
      trace.records.push_back(record);
      trace.converged = true;
      trace.duration_s = Elapsed(start);
      return DgaResult{point, std::move(trace)};
    }
    if (iter >= cfg.max_iters) {
      record.wall_ms = 1e3 * Elapsed(start);
      trace.records.push_back(record);
      trace.duration_s = Elapsed(start);
      throw NonConvergenceError(best, best_value, std::move(trace));
    }

    const DgaGradient grad =
        FdGradient(point, rho, b, cfg, record.active_subset);
    const CertificatePoint next = ApplyUpdate(point, grad, cfg, iter);
    record.step_norm_k = std::abs(next.k - point.k);
    double sq = 0.0;
    for (int i = 0; i < kNumAssignments; ++i) {
      sq += (next.multipliers[i] - point.multipliers[i]).squaredNorm();
    }
    record.step_norm_p = std::sqrt(sq);
    record.wall_ms = 1e3 * Elapsed(start);
    trace.records.push_back(record);
    point = next;
  }
}

}  // namespace

void DgaConfig::Validate() const {
  if (!(lr_theta > 0.0) || !(lr_p > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
  if (!(discount > 0.0) || discount > 1.0) {
    throw std::invalid_argument("discount must lie in (0, 1]");
  }
  if (!(target > 0.0)) throw std::invalid_argument("target must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");
}

void WriteTraceCsv(std::ostream& out, const DgaTrace& trace) {
  out << "iter,k";
  for (int i = 1; i <= kNumAssignments; ++i) out << ",min_minor_" << i;
  out << ",wall_ms\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : trace.records) {
    out << r.iter << ',' << r.k;
    for (double m : r.min_minor) out << ',' << m;
    out << ',' << r.wall_ms << '\n';
  }
  out.precision(old_precision);
}

DgaGradient FdGradient(const CertificatePoint& cp, const VaryingParams& rho,
                       const Bounds& b, const DgaConfig& cfg) {
  std::array<SubsetMask, kNumAssignments> active{};
  for (int i = 0; i < kNumAssignments; ++i) {
    const GramMatrix q = AssembleGram(SignAssignment::FromIndex(i), cp.k,
                                      cp.multipliers[i], rho, b, cfg.eta);
    active[i] = MinPrincipalMinor(q).subset;
  }
  return FdGradient(cp, rho, b, cfg, active);
}

DgaGradient FdGradient(const CertificatePoint& cp, const VaryingParams& rho,
                       const Bounds& b, const DgaConfig& cfg,
                       const std::array<SubsetMask, kNumAssignments>& active) {
  DgaGradient grad;
  const double hk = FdScale(cp.k, cfg.fd_step);
  double dk_sum = 0.0;
  for (int i = 0; i < kNumAssignments; ++i) {
    const SignAssignment sign = SignAssignment::FromIndex(i);
    const MultiplierVector& p = cp.multipliers[i];
    const SubsetMask subset = active[i];

    const auto gammas_plus = BuildGammas(sign, rho, cp.k + hk, b, cfg.eta);
    const auto gammas_minus = BuildGammas(sign, rho, cp.k - hk, b, cfg.eta);
    dk_sum += (SubsetDeterminant(GramFromGammas(gammas_plus, p), subset) -
               SubsetDeterminant(GramFromGammas(gammas_minus, p), subset)) /
              (2.0 * hk);

    const auto gammas = BuildGammas(sign, rho, cp.k, b, cfg.eta);
    for (int n = 0; n < kNumConstraints; ++n) {
      const double h = FdScale(p(n), cfg.fd_step);
      MultiplierVector up = p;
      MultiplierVector down = p;
      up(n) += h;
      down(n) -= h;
      grad.dp[i](n) = (SubsetDeterminant(GramFromGammas(gammas, up), subset) -
                       SubsetDeterminant(GramFromGammas(gammas, down), subset)) /
                      (2.0 * h);
    }
  }
  grad.dk = dk_sum / kNumAssignments;
  return grad;
}

CertificatePoint ApplyUpdate(const CertificatePoint& cp,
                             const DgaGradient& grad, const DgaConfig& cfg,
                             int iter) {
  const double decay = std::pow(cfg.discount, iter);
  CertificatePoint next;
  next.k = std::max(0.0, cp.k + cfg.lr_theta * decay * grad.dk);
  for (int i = 0; i < kNumAssignments; ++i) {
    next.multipliers[i] =
        (cp.multipliers[i] + cfg.lr_p * decay * grad.dp[i]).cwiseMax(0.0);
  }
  return next;
}

CertificatePoint DgaStep(const CertificatePoint& cp, const VaryingParams& rho,
                         const Bounds& b, const DgaConfig& cfg, int iter) {
  return ApplyUpdate(cp, FdGradient(cp, rho, b, cfg), cfg, iter);
}

NonConvergenceError::NonConvergenceError(CertificatePoint best,
                                         double best_min_minor, DgaTrace trace)
    : std::runtime_error(
          "determinant gradient ascent did not reach the target; best minimum "
          "principal minor " +
          std::to_string(best_min_minor)),
      best_(std::move(best)),
      best_min_minor_(best_min_minor),
      trace_(std::move(trace)) {}

CertificatePoint HeuristicInitialPoint() {
  return CertificatePoint::Uniform(0.5, 0.05);
}

DgaResult Adapt(const CertificatePoint& previous, const VaryingParams& rho_new,
                const Bounds& b, const DgaConfig& cfg) {
  return RunDga(previous, rho_new, b, cfg);
}

DgaResult Synthesize(const VaryingParams& rho, const Bounds& b,
                     const DgaConfig& cfg,
                     std::optional<CertificatePoint> init) {
  return RunDga(init.value_or(HeuristicInitialPoint()), rho, b, cfg);
}

}  // namespace sia
