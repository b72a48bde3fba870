#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sia/dynamics.h"

namespace sia {

inline constexpr double kControlPeriod = 1.0 / 30.0;

class LogParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regressor matrix lacks excitation; `directions` names the regressors
/// spanning the near-null space.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, std::vector<std::string> dirs)
      : std::runtime_error(what), directions(std::move(dirs)) {}
  std::vector<std::string> directions;
};

struct TrajectoryRow {
  double t{0.0};
  double px{0.0};
  double py{0.0};
  double theta{0.0};
  double v{0.0};
  double vl{0.0};
  double w{0.0};
  double v_cmd{0.0};
  double vl_cmd{0.0};
  double w_cmd{0.0};
};

using TrajectoryLog = std::vector<TrajectoryRow>;

inline constexpr const char* kLogHeader = "t,px,py,theta,v,vl,w,v_cmd,vl_cmd,w_cmd";

/// Parses the CSV log format. Throws LogParseError on a wrong header,
/// malformed numbers or non-increasing time.
TrajectoryLog ReadLogCsv(std::istream& in);
void WriteLogCsv(std::ostream& out, const TrajectoryLog& log);

/// Acceleration commands recovered from v_cmd = v_meas + a dt; omega passes
/// through.
std::vector<Control> InvertCommands(const TrajectoryLog& log,
                                    double dt = kControlPeriod);

/// Single-pass LOWESS: local linear fit with tricube weights over the
/// ceil(frac * N) nearest samples, evaluated at every sample. `x` must be
/// sorted ascending.
std::vector<double> Lowess(std::span<const double> x, std::span<const double> y,
                           double frac);

/// 1 - SS_res / SS_tot.
double RSquared(std::span<const double> observed,
                std::span<const double> predicted);

struct FitResult {
  VaryingParams rho;
  std::array<double, 3> r2_per_row{};
  std::array<double, 3> residual_norms{};

  double MeanR2() const;
};

nlohmann::json FitResultToJson(const FitResult& fit);

/// Least-squares fit of the gain block and drift from a log. With frac > 0
/// the velocity signals are LOWESS-smoothed, differentiated and smoothed
/// again; the regressors go through the same linear pipeline so the
/// regression stays consistent. frac == 0 bypasses smoothing.
FitResult FitParams(const TrajectoryLog& log, double frac = 0.08,
                    double dt = kControlPeriod);

struct ExcitationRow {
  double t{0.0};
  double v_cmd{0.0};
  double vl_cmd{0.0};
  double w_cmd{0.0};
};

struct ExcitationSpec {
  double duration{20.0};
  std::array<double, 3> amplitudes{1.0, 0.3, 1.75};
  std::vector<double> frequencies{0.2, 0.5, 0.9};
  double dt{kControlPeriod};
};

/// Multi-sine velocity / yaw-rate commands. Each channel averages the
/// sinusoids so its magnitude never exceeds the channel amplitude.
std::vector<ExcitationRow> GenerateExcitation(const ExcitationSpec& spec);

/// Drives the varying dynamics with an excitation schedule, logging
/// measurements with optional Gaussian noise on v, v_l and the yaw rate.
TrajectoryLog SimulateExcitationLog(const std::vector<ExcitationRow>& schedule,
                                    const VaryingParams& rho,
                                    double noise_sigma = 0.0,
                                    std::uint64_t seed = 0, int substeps = 10);

}  // namespace sia
