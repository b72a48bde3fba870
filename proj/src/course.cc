#include "sia/course.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sia {
namespace {

std::string Num(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double ParseNum(std::string_view field) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("bad number '" + std::string(field) + "'");
  }
  return value;
}

std::string Stem(const RunRecord& rec) {
  return rec.course + "_" + ToString(rec.mode);
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Tracks entry into a region so repeated steps inside it log one event.
struct EdgeTrigger {
  bool inside{false};
  bool Enter(bool now) {
    const bool fired = now && !inside;
    inside = now;
    return fired;
  }
};

}  // namespace

void CourseSpec::Validate() const {
  if (legs.empty()) throw CourseConfigError("course '" + name + "' has no legs");
  double from_x = start_x;
  double from_y = start_y;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    const Leg& leg = legs[i];
    const std::string where = "course '" + name + "' leg " + std::to_string(i);
    if (leg.obstacle_x == from_x && leg.obstacle_y == from_y) {
      throw CourseConfigError(where + ": obstacle coincides with the start");
    }
    if (leg.obstacle_x == leg.goal_x && leg.obstacle_y == leg.goal_y) {
      throw CourseConfigError(where + ": obstacle coincides with the goal");
    }
    if (leg.dwell < 0.0) throw CourseConfigError(where + ": negative dwell");
    from_x = leg.goal_x;
    from_y = leg.goal_y;
  }
}

std::string ToString(RunMode mode) {
  return mode == RunMode::kAdapted ? "adapted" : "non-adapted";
}

RunMode ParseRunMode(const std::string& text) {
  if (text == "adapted") return RunMode::kAdapted;
  if (text == "non-adapted" || text == "non_adapted") return RunMode::kNonAdapted;
  throw CourseConfigError("unknown mode '" + text + "'");
}

std::string ToString(EventType type) {
  switch (type) {
    case EventType::kCollision: return "collision";
    case EventType::kPaddedViolation: return "padded_violation";
    case EventType::kQpInfeasible: return "qp_infeasible";
    case EventType::kGoalReached: return "goal_reached";
    case EventType::kTimeout: return "timeout";
  }
  return "unknown";
}

bool IsFailure(EventType type) { return type != EventType::kGoalReached; }

bool RunRecord::HasFailure() const {
  return std::any_of(events.begin(), events.end(),
                     [](const Event& e) { return IsFailure(e.type); });
}

double RunRecord::SuccessFraction() const {
  if (legs.empty()) return 0.0;
  const auto ok = std::count_if(legs.begin(), legs.end(),
                                [](const LegSummary& l) { return !l.Failed(); });
  return static_cast<double>(ok) / static_cast<double>(legs.size());
}

double SigmaDt(double delta_d_max, double d_min) {
  if (delta_d_max < 0.0 || d_min < 0.0) {
    throw std::invalid_argument("sigma_dt inputs must be nonnegative");
  }
  return delta_d_max * delta_d_max + 2.0 * delta_d_max * d_min;
}

double MeasureDeltaDMax(const RunRecord& rec) {
  if (rec.rows.empty()) throw std::invalid_argument("empty run record");
  double worst = 0.0;
  for (std::size_t i = 1; i < rec.rows.size(); ++i) {
    if (rec.rows[i].leg != rec.rows[i - 1].leg) continue;
    worst = std::max(worst, std::abs(rec.rows[i].distance - rec.rows[i - 1].distance));
  }
  return worst;
}

RunRecord RunCourse(const CourseSpec& course, RunMode mode,
                    const PayloadTable& payloads, const SimConfig& cfg) {
  course.Validate();
  auto lookup = [&](const std::string& label) -> const PayloadEntry& {
    const auto it = payloads.find(label);
    if (it == payloads.end()) {
      throw CourseConfigError("course '" + course.name +
                              "' references unknown payload '" + label + "'");
    }
    return it->second;
  };
  const PayloadEntry& reference = lookup(cfg.reference_payload);
  for (const Leg& leg : course.legs) {
    const double k = mode == RunMode::kAdapted ? lookup(leg.payload).k : reference.k;
    if (!(k > 0.0)) {
      throw CourseConfigError("payload '" + leg.payload + "' has no safety-index gain");
    }
  }
  if (!(cfg.dt > 0.0) || cfg.substeps < 1) {
    throw CourseConfigError("dt must be positive and substeps >= 1");
  }

  const Bounds& b = cfg.bounds;
  RunRecord rec;
  rec.course = course.name;
  rec.mode = mode;
  rec.d_min = b.d_min;
  rec.leg_specs = course.legs;

  // Global pose plus body velocities.
  State robot{course.start_x, course.start_y, 0.0, 0.0, course.start_theta};
  double t = 0.0;
  const auto max_steps = static_cast<long>(std::ceil(cfg.leg_timeout / cfg.dt));

  for (int li = 0; li < static_cast<int>(course.legs.size()); ++li) {
    const Leg& leg = course.legs[li];
    const PayloadEntry& entry = lookup(leg.payload);
    const VaryingParams& rho = entry.rho;
    const SafetyIndexParam p{mode == RunMode::kAdapted ? entry.k : reference.k,
                             cfg.sigma, b.d_min, cfg.eta};
    LqrTracker tracker(cfg.weights, b, 0.2, rho);
    LegSummary summary;
    summary.min_distance = std::numeric_limits<double>::infinity();
    EdgeTrigger collision;
    EdgeTrigger padded;

    for (long step = 0;; ++step) {
      const State rel{robot.px - leg.obstacle_x, robot.py - leg.obstacle_y,
                      robot.v, robot.vl, robot.theta};
      const double d = Distance(rel);
      summary.min_distance = std::min(summary.min_distance, d);
      if (collision.Enter(d < b.d_min)) {
        rec.events.push_back({t, li, EventType::kCollision, d});
        summary.collision = true;
      }
      if (padded.Enter(d < b.d_min + cfg.padded_margin)) {
        rec.events.push_back({t, li, EventType::kPaddedViolation, d});
        summary.padded_violation = true;
      }

      StepRow row;
      row.t = t;
      row.leg = li;
      row.x = robot.px;
      row.y = robot.py;
      row.state = rel;
      row.distance = d;
      row.phi = Phi(rel, p);

      const double gx = leg.goal_x - robot.px;
      const double gy = leg.goal_y - robot.py;
      const double goal_dist = std::hypot(gx, gy);
      const bool reached = goal_dist <= cfg.goal_tolerance;
      if (reached || step >= max_steps) {
        row.phi_dot = PhiDot(rel, Control{}, rho, p.k);
        rec.rows.push_back(row);
        if (reached) {
          rec.events.push_back({t, li, EventType::kGoalReached, d});
          summary.goal_reached = true;
        } else {
          rec.events.push_back({t, li, EventType::kTimeout, d});
        }
        break;
      }

      const double scale =
          goal_dist > cfg.max_reference_distance ? cfg.max_reference_distance / goal_dist : 1.0;
      const GoalSpec ref{robot.px + scale * gx, robot.py + scale * gy,
                         std::nullopt, cfg.goal_tolerance};
      row.u_nom = tracker.Compute(robot, ref);
      const SafeQpResult qp = SafeQp(rel, row.u_nom, rho, p, b);
      row.u_safe = qp.u;
      row.qp_status = qp.status;
      row.phi_dot = PhiDot(rel, qp.u, rho, p.k);
      if (qp.status == QpStatus::kInfeasible) {
        rec.events.push_back({t, li, EventType::kQpInfeasible, d});
        ++summary.qp_infeasible;
      }
      rec.rows.push_back(row);

      const State next = Propagate(rel, qp.u, rho, cfg.dt, cfg.substeps);
      robot = State{next.px + leg.obstacle_x, next.py + leg.obstacle_y, next.v,
                    next.vl, next.theta};
      t += cfg.dt;
    }

    rec.legs.push_back(summary);
    // The robot halts at the goal while the payload is swapped.
    robot.v = 0.0;
    robot.vl = 0.0;
    t += leg.dwell;
  }
  return rec;
}

void WriteTrajectoryCsv(std::ostream& out, const RunRecord& rec) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : rec.rows) {
    out << Num(r.t) << ',' << r.leg << ',' << Num(r.x) << ',' << Num(r.y) << ','
        << Num(r.state.px) << ',' << Num(r.state.py) << ',' << Num(r.state.v)
        << ',' << Num(r.state.vl) << ',' << Num(r.state.theta) << ','
        << Num(r.u_nom.a) << ',' << Num(r.u_nom.al) << ',' << Num(r.u_nom.omega)
        << ',' << Num(r.u_safe.a) << ',' << Num(r.u_safe.al) << ','
        << Num(r.u_safe.omega) << ',' << Num(r.phi) << ',' << Num(r.phi_dot)
        << ',' << Num(r.distance) << ',' << static_cast<int>(r.qp_status) << '\n';
  }
}

std::vector<StepRow> ReadTrajectoryCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw std::runtime_error("trajectory CSV: unexpected header");
  }
  std::vector<StepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      v.push_back(ParseNum(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (v.size() != 19) throw std::runtime_error("trajectory CSV: expected 19 fields");
    StepRow r;
    r.t = v[0];
    r.leg = static_cast<int>(v[1]);
    r.x = v[2];
    r.y = v[3];
    r.state = State{v[4], v[5], v[6], v[7], v[8]};
    r.u_nom = Control{v[9], v[10], v[11]};
    r.u_safe = Control{v[12], v[13], v[14]};
    r.phi = v[15];
    r.phi_dot = v[16];
    r.distance = v[17];
    r.qp_status = static_cast<QpStatus>(static_cast<int>(v[18]));
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json EventsToJson(const RunRecord& rec) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : rec.events) {
    events.push_back({{"t", e.t},
                      {"leg", e.leg},
                      {"type", ToString(e.type)},
                      {"distance", e.distance}});
  }
  return events;
}

nlohmann::json SummaryToJson(const RunRecord& rec) {
  nlohmann::json legs = nlohmann::json::array();
  for (const auto& l : rec.legs) {
    legs.push_back({{"min_distance", l.min_distance},
                    {"goal_reached", l.goal_reached},
                    {"collision", l.collision},
                    {"padded_violation", l.padded_violation},
                    {"qp_infeasible", l.qp_infeasible}});
  }
  return {{"course", rec.course},
          {"mode", ToString(rec.mode)},
          {"legs", legs},
          {"success_fraction", rec.SuccessFraction()},
          {"delta_d_max", rec.rows.empty() ? 0.0 : MeasureDeltaDMax(rec)},
          {"has_failure", rec.HasFailure()}};
}

std::string FormatSummaryTable(const std::vector<RunRecord>& records) {
  std::vector<std::string> courses;
  for (const auto& r : records) {
    if (std::find(courses.begin(), courses.end(), r.course) == courses.end()) {
      courses.push_back(r.course);
    }
  }
  std::ostringstream out;
  constexpr int kLabel = 14;
  constexpr int kCell = 12;
  out << std::left << std::setw(kLabel) << "Mode";
  for (const auto& c : courses) out << std::right << std::setw(kCell) << c;
  out << '\n';
  for (RunMode mode : {RunMode::kAdapted, RunMode::kNonAdapted}) {
    bool any = false;
    std::ostringstream line;
    line << std::left << std::setw(kLabel) << ToString(mode);
    for (const auto& c : courses) {
      std::string cell = "-";
      for (const auto& r : records) {
        if (r.course == c && r.mode == mode) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.0f%%", 100.0 * r.SuccessFraction());
          cell = buf;
          any = true;
        }
      }
      line << std::right << std::setw(kCell) << cell;
    }
    if (any) out << line.str() << '\n';
  }
  return out.str();
}

void EmitOutputs(const RunRecord& rec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = Stem(rec);
  {
    auto out = OpenOut(dir / (stem + "_trajectory.csv"));
    WriteTrajectoryCsv(out, rec);
  }
  OpenOut(dir / (stem + "_events.json")) << EventsToJson(rec).dump(2) << '\n';
  OpenOut(dir / (stem + "_summary.json")) << SummaryToJson(rec).dump(2) << '\n';
  {
    auto out = OpenOut(dir / (stem + "_phi.dat"));
    out << "# t leg phi phi_dot\n";
    for (const auto& r : rec.rows) {
      out << Num(r.t) << ' ' << r.leg << ' ' << Num(r.phi) << ' ' << Num(r.phi_dot)
          << '\n';
    }
  }
  {
    auto out = OpenOut(dir / (stem + "_path.dat"));
    out << "# path: x y leg\n";
    for (const auto& r : rec.rows) {
      out << Num(r.x) << ' ' << Num(r.y) << ' ' << r.leg << '\n';
    }
    constexpr int kCircle = 64;
    for (std::size_t li = 0; li < rec.leg_specs.size(); ++li) {
      const Leg& leg = rec.leg_specs[li];
      out << "\n\n# unsafe set leg " << li << ": x y (radius " << Num(rec.d_min)
          << ")\n";
      for (int i = 0; i <= kCircle; ++i) {
        const double a = 2.0 * std::numbers::pi * i / kCircle;
        out << Num(leg.obstacle_x + rec.d_min * std::cos(a)) << ' '
            << Num(leg.obstacle_y + rec.d_min * std::sin(a)) << '\n';
      }
    }
  }
}

}  // namespace sia
