#include "sia/feasibility.h"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sia/safe_controller.h"

namespace sia {

double FeasibilityReport::FiPercent() const {
  return n_samples == 0 ? 0.0 : 100.0 * fi_pass / n_samples;
}

double FeasibilityReport::FtcPercent() const {
  return n_samples == 0 ? 0.0 : 100.0 * ftc_pass / n_samples;
}

std::vector<State> SampleStates(int n, const Bounds& b, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample count must be positive");
  if (b.d_min >= std::sqrt(2.0) * b.L) {
    throw std::invalid_argument("d_min leaves no admissible positions");
  }
  constexpr double kPi = std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<State> states;
  states.reserve(n);
  while (static_cast<int>(states.size()) < n) {
    State s;
    s.px = uniform(-b.L, b.L);
    s.py = uniform(-b.L, b.L);
    s.v = uniform(-b.V, b.V);
    s.vl = uniform(-b.V_l, b.V_l);
    // (-pi, pi]: mirror the half-open [-pi, pi) draw.
    s.theta = -uniform(-kPi, kPi);
    if (s.px * s.px + s.py * s.py < b.d_min * b.d_min) continue;
    states.push_back(s);
  }
  return states;
}

FeasibilityReport RunFeasibility(const SafetyIndexParam& p,
                                 const VaryingParams& rho, const Bounds& b,
                                 int n, std::uint64_t seed) {
  FeasibilityReport report;
  report.seed = seed;
  for (const State& s : SampleStates(n, b, seed)) {
    ++report.n_samples;
    if (CheckFiFeasible(s, rho, p, b)) {
      ++report.fi_pass;
    } else {
      report.failures.push_back({s, FeasibilityMode::kFi});
    }
    if (CheckFtcFeasible(s, rho, p, b)) {
      ++report.ftc_pass;
    } else {
      report.failures.push_back({s, FeasibilityMode::kFtc});
    }
  }
  return report;
}

std::string FormatPercent(double percent) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", percent);
  return buf;
}

nlohmann::json ReportToJson(const FeasibilityReport& report) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) {
    failures.push_back(
        {{"mode", f.mode == FeasibilityMode::kFi ? "FI" : "FTC"},
         {"state", {f.state.px, f.state.py, f.state.v, f.state.vl,
                    f.state.theta}}});
  }
  return {{"n_samples", report.n_samples},
          {"fi_pass", report.fi_pass},
          {"ftc_pass", report.ftc_pass},
          {"fi_percent", FormatPercent(report.FiPercent())},
          {"ftc_percent", FormatPercent(report.FtcPercent())},
          {"seed", report.seed},
          {"failures", failures}};
}

std::string FormatFeasibilityTable(const std::vector<FeasibilityColumn>& cols) {
  std::ostringstream out;
  constexpr int kLabel = 18;
  constexpr int kCell = 12;
  out << std::left << std::setw(kLabel) << "Dynamics";
  for (const auto& c : cols) out << std::right << std::setw(kCell) << c.dynamics;
  out << '\n' << std::left << std::setw(kLabel) << "Safety index";
  for (const auto& c : cols) out << std::right << std::setw(kCell) << c.index;
  out << '\n' << std::left << std::setw(kLabel)
      << ("FI (" + std::to_string(cols.empty() ? 0 : cols[0].report.n_samples) +
          ")");
  for (const auto& c : cols) {
    out << std::right << std::setw(kCell) << FormatPercent(c.report.FiPercent());
  }
  out << '\n' << std::left << std::setw(kLabel)
      << ("FTC (" +
          std::to_string(cols.empty() ? 0 : cols[0].report.n_samples) + ")");
  for (const auto& c : cols) {
    out << std::right << std::setw(kCell)
        << FormatPercent(c.report.FtcPercent());
  }
  out << '\n';
  return out.str();
}

}  // namespace sia
