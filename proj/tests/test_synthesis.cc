#include <sstream>

#include "catch_amalgamated.hpp"
#include "sia/certificate_io.h"
#include "sia/synthesis.h"

using Catch::Approx;

namespace {

// Jacobi's formula: d det(A) / dt = det(A) tr(A^-1 dA/dt).
double JacobiDerivative(const sia::GramMatrix& q, const sia::GramMatrix& dq,
                        sia::SubsetMask mask) {
  const auto idx = sia::SubsetIndices(mask);
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd a(n, n), da(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      a(r, c) = q(idx[r], idx[c]);
      da(r, c) = dq(idx[r], idx[c]);
    }
  }
  return a.determinant() * (a.inverse() * da).trace();
}

}  // namespace

TEST_CASE("Config validation") {
  sia::DgaConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.lr_p = 0.0;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.discount = 1.5;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iters = -1;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
}

TEST_CASE("Finite-difference multiplier gradient matches Jacobi's formula") {
  const sia::Bounds b;
  const auto rho = sia::IdentifiedPayloadParams("3.5");
  sia::CertificatePoint cp = sia::CertificatePoint::Uniform(0.7, 0.3);
  for (int i = 0; i < 8; ++i) {
    for (int n = 0; n < 13; ++n) cp.multipliers[i](n) += 0.01 * (n + i);
  }
  const sia::DgaConfig cfg;
  // A subset where the minor is a smooth, nonsingular function of p.
  std::array<sia::SubsetMask, 8> active;
  active.fill(0b110100001);
  const auto grad = sia::FdGradient(cp, rho, b, cfg, active);
  for (int i = 0; i < 8; ++i) {
    const auto sign = sia::SignAssignment::FromIndex(i);
    const auto q = sia::AssembleGram(sign, cp.k, cp.multipliers[i], rho, b);
    const auto gammas = sia::BuildGammas(sign, rho, cp.k, b);
    for (int n = 0; n < 13; ++n) {
      const double exact = JacobiDerivative(q, -gammas[n].coeff, active[i]);
      CHECK(grad.dp[i](n) == Approx(exact).epsilon(1e-5).margin(1e-7));
    }
  }
}

TEST_CASE("k derivative averages the per-assignment slopes") {
  const sia::Bounds b;
  const auto rho = sia::IdentifiedPayloadParams("0.0");
  const auto cp = sia::CertificatePoint::Uniform(0.6, 0.2);
  const sia::DgaConfig cfg;
  std::array<sia::SubsetMask, 8> active;
  active.fill(1);  // the constant entry Q(0,0)
  const auto grad = sia::FdGradient(cp, rho, b, cfg, active);
  // Q(0,0) = -1 - p0 eta - sum p_n c_n, where only gamma_4 and gamma_5 carry
  // k^2 (e3^2 + e4^2) and the box terms are k free.
  const double e = rho.drift(0) * rho.drift(0) + rho.drift(1) * rho.drift(1);
  const double slope = -2.0 * (0.2 * 2.0 * cp.k * e);
  CHECK(grad.dk == Approx(slope).epsilon(1e-6));
}

TEST_CASE("Update scales by the discounted learning rate and projects") {
  sia::DgaConfig cfg;
  cfg.lr_theta = 0.1;
  cfg.lr_p = 0.2;
  cfg.discount = 0.5;
  const auto cp = sia::CertificatePoint::Uniform(0.3, 1.0);
  sia::DgaGradient g;
  g.dk = -20.0;
  for (auto& dp : g.dp) dp = sia::MultiplierVector::Constant(1.0);
  g.dp[2](4) = -100.0;
  const auto next = sia::ApplyUpdate(cp, g, cfg, 2);
  CHECK(next.k == 0.0);  // 0.3 - 0.1 * 0.25 * 20 < 0
  CHECK(next.multipliers[0](0) == Approx(1.0 + 0.2 * 0.25));
  CHECK(next.multipliers[2](4) == 0.0);
}

TEST_CASE("Ascent raises the lowest minor from the heuristic start") {
  const sia::Bounds b;
  const auto rho = sia::IdentifiedPayloadParams("0.0");
  const sia::DgaConfig cfg;
  auto cp = sia::HeuristicInitialPoint();
  CHECK(cp.k == 0.5);
  const double before = sia::MinMinorOverAssignments(cp, rho, b);
  for (int it = 0; it < 10; ++it) cp = sia::DgaStep(cp, rho, b, cfg, it);
  CHECK(sia::MinMinorOverAssignments(cp, rho, b) > before);
}

TEST_CASE("Budget exhaustion reports the best point") {
  const sia::Bounds b;
  const auto rho = sia::IdentifiedPayloadParams("0.0");
  sia::DgaConfig cfg;
  cfg.max_iters = 25;
  try {
    (void)sia::Synthesize(rho, b, cfg);
    FAIL("expected non-convergence");
  } catch (const sia::NonConvergenceError& e) {
    const auto& trace = e.trace();
    CHECK(trace.records.size() == 26);
    CHECK_FALSE(trace.converged);
    double best = -1e300;
    for (const auto& r : trace.records) {
      best = std::max(best, *std::min_element(r.min_minor.begin(), r.min_minor.end()));
    }
    CHECK(e.best_min_minor() == best);
    CHECK(sia::MinMinorOverAssignments(e.best(), rho, b) == Approx(best));
    std::ostringstream csv;
    sia::WriteTraceCsv(csv, trace);
    CHECK(csv.str().rfind("iter,k,min_minor_1", 0) == 0);
  }
}

TEST_CASE("Adapt with no iteration budget throws when the start misses the target") {
  const sia::Bounds b;
  const auto rho = sia::IdentifiedPayloadParams("3.5");
  sia::DgaConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(sia::Adapt(sia::HeuristicInitialPoint(), rho, b, cfg),
                  sia::NonConvergenceError);
}

TEST_CASE("Certificate documents roundtrip through JSON") {
  sia::CertificateDocument doc;
  doc.point = sia::CertificatePoint::Uniform(0.61068, 0.125);
  doc.point.multipliers[3](7) = 1.0 / 3.0;
  doc.rho = sia::IdentifiedPayloadParams("5.9");
  doc.bounds.V = 1.25;
  doc.metadata = {{"payload", "5.9"}};
  const auto back = sia::CertificateFromJson(sia::CertificateToJson(doc));
  CHECK(back.point.k == doc.point.k);
  CHECK(back.point.multipliers[3](7) == doc.point.multipliers[3](7));
  CHECK(back.rho.gain == doc.rho.gain);
  CHECK(back.bounds.V == 1.25);
  CHECK(back.metadata.at("payload") == "5.9");
  nlohmann::json bad = sia::CertificateToJson(doc);
  bad["rho"] = {1.0, 2.0};
  CHECK_THROWS(sia::CertificateFromJson(bad));
}
