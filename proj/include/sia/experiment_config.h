#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sia/course.h"
#include "sia/synthesis.h"

namespace sia {

struct FeasibilitySettings {
  int n_samples{1000};
  std::uint64_t seed{1};
};

/// One experiment document. Payload dynamics default to the identified
/// hardware values when a payload entry omits "rho".
struct ExperimentConfig {
  std::uint64_t seed{0};
  RunMode mode{RunMode::kAdapted};
  Bounds bounds;
  SimConfig sim;
  PayloadTable payloads;
  DgaConfig dga;
  FeasibilitySettings feasibility;
  std::vector<CourseSpec> courses;
  /// Sigma inputs, kept for reporting.
  double delta_d_max{0.0492};
  double safety_factor{1.5};
};

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j,
                                          const std::filesystem::path& base_dir = {});
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

/// Default document: identified payloads (no gains), default bounds, no
/// courses.
nlohmann::json DefaultExperimentJson();

}  // namespace sia
