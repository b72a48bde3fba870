#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "sia/course.h"
#include "sia/experiment_config.h"

using Catch::Approx;

namespace {

sia::PayloadTable Payloads() {
  sia::PayloadTable t;
  t["0.0"] = {sia::IdentifiedPayloadParams("0.0"), 0.61068};
  t["3.5"] = {sia::IdentifiedPayloadParams("3.5"), 0.64608};
  t["5.9"] = {sia::IdentifiedPayloadParams("5.9"), 0.67905};
  return t;
}

sia::SimConfig Sim() {
  sia::SimConfig cfg;
  cfg.sigma = sia::SigmaDt(0.0492 * 1.5, 1.0);
  cfg.padded_margin = 0.0492;
  return cfg;
}

sia::CourseSpec OneLeg(double ox, double oy, double gx, double gy,
                       const std::string& payload = "0.0") {
  sia::CourseSpec c;
  c.name = "test";
  c.legs.push_back({ox, oy, gx, gy, payload, 5.0});
  return c;
}

}  // namespace

TEST_CASE("Discrete-time margin") {
  CHECK(sia::SigmaDt(0.375, 1.0) == Approx(0.890625));
  CHECK(sia::SigmaDt(0.0, 1.0) == 0.0);
  for (double dd : {0.01, 0.0492, 0.3}) {
    for (double dmin : {0.5, 1.0, 2.0}) {
      CHECK(dmin * dmin + sia::SigmaDt(dd, dmin) == Approx(std::pow(dmin + dd, 2)));
    }
  }
  CHECK_THROWS_AS(sia::SigmaDt(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("Largest per-step distance change") {
  sia::RunRecord rec;
  CHECK_THROWS_AS(sia::MeasureDeltaDMax(rec), std::invalid_argument);
  for (int i = 0; i < 5; ++i) {
    sia::StepRow r;
    r.distance = 2.0;
    rec.rows.push_back(r);
  }
  CHECK(sia::MeasureDeltaDMax(rec) == 0.0);
  // Radial motion at speed s: d changes by s dt per step.
  const double s = 0.9, dt = 1.0 / 30.0;
  for (int i = 0; i < 5; ++i) rec.rows[i].distance = 3.0 - s * dt * i;
  CHECK(sia::MeasureDeltaDMax(rec) == Approx(s * dt));
  // Steps across legs do not count.
  rec.rows[4].leg = 1;
  rec.rows[4].distance = 10.0;
  CHECK(sia::MeasureDeltaDMax(rec) == Approx(s * dt));
}

TEST_CASE("Far obstacle leaves the nominal control untouched") {
  const auto rec = sia::RunCourse(OneLeg(0.0, 30.0, 3.0, 0.0), sia::RunMode::kAdapted,
                                  Payloads(), Sim());
  REQUIRE(rec.legs.size() == 1);
  CHECK(rec.legs[0].goal_reached);
  for (const auto& r : rec.rows) {
    CHECK(r.qp_status == sia::QpStatus::kInactive);
    CHECK(r.u_safe.AsVector() == r.u_nom.AsVector());
  }
}

TEST_CASE("Goal distance eventually decreases without filter activity") {
  const auto rec = sia::RunCourse(OneLeg(-20.0, -20.0, 2.0, 1.5, "5.9"),
                                  sia::RunMode::kAdapted, Payloads(), Sim());
  REQUIRE(rec.legs[0].goal_reached);
  std::vector<double> dist;
  for (const auto& r : rec.rows) dist.push_back(std::hypot(2.0 - r.x, 1.5 - r.y));
  // Over the second half of the run the distance is nonincreasing.
  for (std::size_t i = dist.size() / 2 + 1; i < dist.size(); ++i) {
    CHECK(dist[i] <= dist[i - 1] + 1e-12);
  }
  CHECK(dist.back() < dist.front());
}

TEST_CASE("Runs are deterministic") {
  const auto course = OneLeg(2.0, 0.1, 4.0, 0.0, "3.5");
  const auto a = sia::RunCourse(course, sia::RunMode::kAdapted, Payloads(), Sim());
  const auto b = sia::RunCourse(course, sia::RunMode::kAdapted, Payloads(), Sim());
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].state.AsVector() == b.rows[i].state.AsVector());
    CHECK(a.rows[i].u_safe.AsVector() == b.rows[i].u_safe.AsVector());
  }
}

TEST_CASE("Head-on approach keeps clear of the unsafe set") {
  const auto rec = sia::RunCourse(OneLeg(2.0, 0.05, 4.0, 0.0, "5.9"),
                                  sia::RunMode::kAdapted, Payloads(), Sim());
  CHECK(rec.legs[0].goal_reached);
  CHECK(rec.legs[0].min_distance >= 1.0);
  double min_row = 1e300;
  for (const auto& r : rec.rows) min_row = std::min(min_row, r.distance);
  CHECK(rec.legs[0].min_distance == min_row);
  bool filtered = false;
  for (const auto& r : rec.rows) filtered |= r.qp_status == sia::QpStatus::kProjected;
  CHECK(filtered);
}

TEST_CASE("Non-adapted runs use the reference gain on every leg") {
  auto course = OneLeg(2.0, 0.05, 4.0, 0.0, "5.9");
  const auto rec = sia::RunCourse(course, sia::RunMode::kNonAdapted, Payloads(), Sim());
  const sia::SafetyIndexParam ref{0.61068, Sim().sigma, 1.0};
  CHECK(rec.rows.front().phi == Approx(sia::Phi(rec.rows.front().state, ref)));
}

TEST_CASE("Course configuration errors") {
  auto bad = OneLeg(2.0, 0.0, 4.0, 0.0, "9.9");
  CHECK_THROWS_AS(sia::RunCourse(bad, sia::RunMode::kAdapted, Payloads(), Sim()),
                  sia::CourseConfigError);
  sia::CourseSpec empty;
  CHECK_THROWS_AS(empty.Validate(), sia::CourseConfigError);
  CHECK_THROWS_AS(OneLeg(0.0, 0.0, 4.0, 0.0).Validate(), sia::CourseConfigError);
  CHECK_THROWS_AS(OneLeg(4.0, 0.0, 4.0, 0.0).Validate(), sia::CourseConfigError);
  CHECK(sia::ParseRunMode("non-adapted") == sia::RunMode::kNonAdapted);
  CHECK_THROWS_AS(sia::ParseRunMode("fast"), sia::CourseConfigError);
}

TEST_CASE("Empty record output") {
  sia::RunRecord rec;
  std::ostringstream csv;
  sia::WriteTrajectoryCsv(csv, rec);
  CHECK(csv.str() == std::string(sia::kTrajectoryHeader) + "\n");
  CHECK(sia::EventsToJson(rec).empty());
  CHECK(sia::EventsToJson(rec).is_array());
}

TEST_CASE("Trajectory CSV roundtrip is bit exact") {
  const auto rec = sia::RunCourse(OneLeg(2.0, 0.3, 4.0, 0.0), sia::RunMode::kAdapted,
                                  Payloads(), Sim());
  std::stringstream csv;
  sia::WriteTrajectoryCsv(csv, rec);
  const auto rows = sia::ReadTrajectoryCsv(csv);
  REQUIRE(rows.size() == rec.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].t == rec.rows[i].t);
    CHECK(rows[i].state.AsVector() == rec.rows[i].state.AsVector());
    CHECK(rows[i].u_nom.AsVector() == rec.rows[i].u_nom.AsVector());
    CHECK(rows[i].u_safe.AsVector() == rec.rows[i].u_safe.AsVector());
    CHECK(rows[i].phi == rec.rows[i].phi);
    CHECK(rows[i].phi_dot == rec.rows[i].phi_dot);
    CHECK(rows[i].distance == rec.rows[i].distance);
    CHECK(rows[i].qp_status == rec.rows[i].qp_status);
  }
}

TEST_CASE("Summary percentages count legs without failures") {
  sia::RunRecord rec;
  rec.course = "c";
  sia::LegSummary ok;
  ok.goal_reached = true;
  sia::LegSummary padded = ok;
  padded.padded_violation = true;
  sia::LegSummary missed;
  rec.legs = {ok, padded, ok, missed};
  CHECK(rec.SuccessFraction() == Approx(0.5));
  const std::string table = sia::FormatSummaryTable({rec});
  CHECK(table.find("50%") != std::string::npos);
}

TEST_CASE("Outputs land in the directory") {
  const auto dir = std::filesystem::temp_directory_path() / "sia_course_test";
  std::filesystem::remove_all(dir);
  auto rec = sia::RunCourse(OneLeg(2.0, 0.3, 4.0, 0.0), sia::RunMode::kAdapted,
                            Payloads(), Sim());
  rec.course = "unit";
  sia::EmitOutputs(rec, dir);
  for (const char* suffix : {"_trajectory.csv", "_events.json", "_summary.json",
                             "_phi.dat", "_path.dat"}) {
    CHECK(std::filesystem::exists(dir / (std::string("unit_adapted") + suffix)));
  }
  std::ifstream in(dir / "unit_adapted_summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("legs").size() == 1);
}

TEST_CASE("Shipped configuration loads") {
  const auto cfg = sia::LoadExperimentConfig(std::string(SIA_CONFIG_DIR) + "/courses.json");
  CHECK(cfg.courses.size() == 3);
  CHECK(cfg.payloads.size() == 3);
  CHECK(cfg.sim.sigma == Approx(sia::SigmaDt(0.0492 * 1.5, 1.0)));
  const auto rho = cfg.payloads.at("5.9").rho;
  CHECK(rho.gain == sia::IdentifiedPayloadParams("5.9").gain);
  CHECK(rho.drift == sia::IdentifiedPayloadParams("5.9").drift);
  for (const auto& c : cfg.courses) {
    CHECK(c.legs.front().payload == "0.0");
    CHECK(c.legs.back().payload == "5.9");
  }
}

TEST_CASE("Config parsing errors") {
  nlohmann::json j = sia::DefaultExperimentJson();
  j["courses"] = nlohmann::json::array({{{"name", "x"}, {"start", {0, 0}}, {"legs", {}}}});
  CHECK_THROWS_AS(sia::ExperimentConfigFromJson(j), sia::CourseConfigError);
  j = sia::DefaultExperimentJson();
  j["mode"] = "sideways";
  CHECK_THROWS_AS(sia::ExperimentConfigFromJson(j), sia::CourseConfigError);
  j = sia::DefaultExperimentJson();
  j["payloads"]["1.0"] = nlohmann::json::object();
  CHECK_THROWS_AS(sia::ExperimentConfigFromJson(j), std::invalid_argument);
}
