#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sia/dynamics.h"
#include "sia/safe_controller.h"
#include "sia/safety_index.h"

namespace sia {

class CourseConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One goal-obstacle segment. Coordinates are global.
struct Leg {
  double obstacle_x{0.0};
  double obstacle_y{0.0};
  double goal_x{0.0};
  double goal_y{0.0};
  /// Payload carried while driving this leg.
  std::string payload{"0.0"};
  double dwell{5.0};
};

struct CourseSpec {
  std::string name;
  double start_x{0.0};
  double start_y{0.0};
  double start_theta{0.0};
  std::vector<Leg> legs;

  /// Throws CourseConfigError on an empty course or an obstacle coinciding
  /// with the start or a goal.
  void Validate() const;
};

enum class RunMode { kAdapted, kNonAdapted };

std::string ToString(RunMode mode);
/// Accepts "adapted" and "non-adapted" (or "non_adapted").
RunMode ParseRunMode(const std::string& text);

/// Dynamics and certified safety-index gain for one payload.
struct PayloadEntry {
  VaryingParams rho;
  double k{0.0};
};

using PayloadTable = std::map<std::string, PayloadEntry>;

struct SimConfig {
  double dt{1.0 / 30.0};
  int substeps{10};
  /// Additive margin of the safety index.
  double sigma{0.0};
  double eta{kDefaultEta};
  double goal_tolerance{0.3};
  double leg_timeout{90.0};
  /// Padding used for the padded-violation event: d < d_min + margin.
  double padded_margin{0.0};
  /// Goal references farther than this are pulled toward the robot.
  double max_reference_distance{1.0};
  /// In non-adapted mode every leg uses the k of this payload.
  std::string reference_payload{"0.0"};
  LqrWeights weights = LqrWeights::Default();
  Bounds bounds;
};

enum class EventType {
  kCollision,
  kPaddedViolation,
  kQpInfeasible,
  kGoalReached,
  kTimeout,
};

std::string ToString(EventType type);
/// Collision, padded violation, infeasible QP and timeout count as failures.
bool IsFailure(EventType type);

struct Event {
  double t{0.0};
  int leg{0};
  EventType type{EventType::kGoalReached};
  double distance{0.0};
};

struct StepRow {
  double t{0.0};
  int leg{0};
  /// Global position and body velocities / heading.
  double x{0.0};
  double y{0.0};
  State state;  // position relative to the leg's obstacle
  Control u_nom;
  Control u_safe;
  double phi{0.0};
  double phi_dot{0.0};
  double distance{0.0};
  QpStatus qp_status{QpStatus::kInactive};
};

struct LegSummary {
  double min_distance{0.0};
  bool goal_reached{false};
  bool collision{false};
  bool padded_violation{false};
  int qp_infeasible{0};

  bool Failed() const {
    return !goal_reached || collision || padded_violation || qp_infeasible > 0;
  }
};

struct RunRecord {
  std::string course;
  RunMode mode{RunMode::kAdapted};
  double d_min{1.0};
  std::vector<StepRow> rows;
  std::vector<Event> events;
  std::vector<LegSummary> legs;
  std::vector<Leg> leg_specs;

  bool HasFailure() const;
  double SuccessFraction() const;
};

/// sigma_DT = dd^2 + 2 dd d_min.
double SigmaDt(double delta_d_max, double d_min);

/// Largest |d_{t+1} - d_t| between consecutive rows of the same leg.
double MeasureDeltaDMax(const RunRecord& rec);

/// Drives the course leg by leg with LQR tracking and the safe QP filter.
/// Dynamics switch to the leg's payload at each goal; in adapted mode the
/// safety-index gain switches with them.
RunRecord RunCourse(const CourseSpec& course, RunMode mode,
                    const PayloadTable& payloads, const SimConfig& cfg);

inline constexpr const char* kTrajectoryHeader =
    "t,leg,x,y,px,py,v,vl,theta,a_nom,al_nom,omega_nom,a,al,omega,phi,phi_dot,"
    "d,qp_status";

void WriteTrajectoryCsv(std::ostream& out, const RunRecord& rec);
/// Parses the numeric columns back; qp_status is read as its integer code.
std::vector<StepRow> ReadTrajectoryCsv(std::istream& in);

nlohmann::json EventsToJson(const RunRecord& rec);
nlohmann::json SummaryToJson(const RunRecord& rec);

/// Per-course success percentages for each mode, one column per course.
std::string FormatSummaryTable(const std::vector<RunRecord>& records);

/// Writes <course>_<mode>_{trajectory.csv,events.json,summary.json,
/// phi.dat,path.dat} into `dir`.
void EmitOutputs(const RunRecord& rec, const std::filesystem::path& dir);

}  // namespace sia
