#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sia/dynamics.h"
#include "sia/safety_index.h"

namespace sia {

enum class FeasibilityMode { kFi, kFtc };

struct FeasibilityFailure {
  State state;
  FeasibilityMode mode{FeasibilityMode::kFtc};
};

struct FeasibilityReport {
  int n_samples{0};
  int fi_pass{0};
  int ftc_pass{0};
  std::vector<FeasibilityFailure> failures;
  std::uint64_t seed{0};

  double FiPercent() const;
  double FtcPercent() const;
};

/// Uniform states over the certificate box with theta in (-pi, pi],
/// rejecting samples closer than d_min to the obstacle. Deterministic in
/// `seed`.
std::vector<State> SampleStates(int n, const Bounds& b, std::uint64_t seed);

FeasibilityReport RunFeasibility(const SafetyIndexParam& p,
                                 const VaryingParams& rho, const Bounds& b,
                                 int n, std::uint64_t seed);

/// Percentage with one decimal, e.g. "99.8%".
std::string FormatPercent(double percent);

nlohmann::json ReportToJson(const FeasibilityReport& report);

/// Column of a controller-dynamics comparison table.
struct FeasibilityColumn {
  std::string dynamics;
  std::string index;
  FeasibilityReport report;
};

std::string FormatFeasibilityTable(const std::vector<FeasibilityColumn>& cols);

}  // namespace sia
