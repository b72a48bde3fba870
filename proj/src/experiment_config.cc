#include "sia/experiment_config.h"

#include <fstream>

#include "sia/certificate_io.h"

namespace sia {
namespace {

using nlohmann::json;

std::array<double, 2> Pair(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw CourseConfigError(std::string(what) + " needs [x, y]");
  return {v[0], v[1]};
}

CourseSpec CourseFromJson(const json& j) {
  CourseSpec c;
  c.name = j.at("name").get<std::string>();
  const auto start = j.at("start").get<std::vector<double>>();
  if (start.size() != 3) throw CourseConfigError("start needs [x, y, theta]");
  c.start_x = start[0];
  c.start_y = start[1];
  c.start_theta = start[2];
  for (const auto& lj : j.at("legs")) {
    Leg leg;
    const auto obstacle = Pair(lj.at("obstacle"), "obstacle");
    const auto goal = Pair(lj.at("goal"), "goal");
    leg.obstacle_x = obstacle[0];
    leg.obstacle_y = obstacle[1];
    leg.goal_x = goal[0];
    leg.goal_y = goal[1];
    leg.payload = lj.at("payload").get<std::string>();
    leg.dwell = lj.value("dwell", leg.dwell);
    c.legs.push_back(leg);
  }
  c.Validate();
  return c;
}

LqrWeights WeightsFromJson(const json& j) {
  LqrWeights w = LqrWeights::Default();
  if (j.contains("q_diag")) {
    const auto q = j.at("q_diag").get<std::vector<double>>();
    if (q.size() != 5) throw std::invalid_argument("q_diag needs 5 entries");
    w.q = Eigen::Map<const Vector5d>(q.data()).asDiagonal();
  }
  if (j.contains("r_diag")) {
    const auto r = j.at("r_diag").get<std::vector<double>>();
    if (r.size() != 3) throw std::invalid_argument("r_diag needs 3 entries");
    w.r = Eigen::Map<const Eigen::Vector3d>(r.data()).asDiagonal();
  }
  return w;
}

}  // namespace

ExperimentConfig ExperimentConfigFromJson(const json& j,
                                          const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("mode")) cfg.mode = ParseRunMode(j.at("mode").get<std::string>());
  if (j.contains("bounds")) cfg.bounds = BoundsFromJson(j.at("bounds"));

  SimConfig& sim = cfg.sim;
  sim.bounds = cfg.bounds;
  sim.dt = j.value("dt", sim.dt);
  sim.substeps = j.value("substeps", sim.substeps);
  sim.eta = j.value("eta", sim.eta);
  if (j.contains("controller")) {
    const json& c = j.at("controller");
    sim.weights = WeightsFromJson(c);
    sim.goal_tolerance = c.value("goal_tolerance", sim.goal_tolerance);
    sim.max_reference_distance =
        c.value("max_reference_distance", sim.max_reference_distance);
    sim.leg_timeout = c.value("leg_timeout", sim.leg_timeout);
  }
  if (j.contains("sigma")) {
    const json& s = j.at("sigma");
    cfg.delta_d_max = s.value("delta_d_max", cfg.delta_d_max);
    cfg.safety_factor = s.value("safety_factor", cfg.safety_factor);
  }
  sim.sigma = SigmaDt(cfg.delta_d_max * cfg.safety_factor, cfg.bounds.d_min);
  sim.padded_margin = j.value("padded_margin", cfg.delta_d_max);
  sim.reference_payload = j.value("reference_payload", sim.reference_payload);

  if (j.contains("payloads")) {
    for (const auto& [label, pj] : j.at("payloads").items()) {
      PayloadEntry entry;
      entry.rho = pj.contains("rho") ? ParamsFromJson(pj.at("rho"))
                                     : IdentifiedPayloadParams(label);
      entry.k = pj.value("k", 0.0);
      if (pj.contains("certificate")) {
        std::filesystem::path path = pj.at("certificate").get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        entry.k = ReadCertificate(path).point.k;
      }
      cfg.payloads[label] = entry;
    }
  }

  if (j.contains("dga")) {
    const json& d = j.at("dga");
    DgaConfig& g = cfg.dga;
    g.lr_theta = d.value("lr_theta", g.lr_theta);
    g.lr_p = d.value("lr_p", g.lr_p);
    g.discount = d.value("discount", g.discount);
    g.target = d.value("target", g.target);
    g.max_iters = d.value("max_iters", g.max_iters);
    g.fd_step = d.value("fd_step", g.fd_step);
    g.eta = d.value("eta", g.eta);
    g.Validate();
  }
  cfg.dga.seed = cfg.seed;

  if (j.contains("feasibility")) {
    const json& f = j.at("feasibility");
    cfg.feasibility.n_samples = f.value("n_samples", cfg.feasibility.n_samples);
    cfg.feasibility.seed = f.value("seed", cfg.feasibility.seed);
  }

  if (j.contains("courses")) {
    for (const auto& cj : j.at("courses")) cfg.courses.push_back(CourseFromJson(cj));
  }
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return ExperimentConfigFromJson(j, path.parent_path());
}

nlohmann::json DefaultExperimentJson() {
  json payloads = json::object();
  for (const auto& label : IdentifiedPayloadLabels()) {
    payloads[label] = {{"rho", ParamsToJson(IdentifiedPayloadParams(label))}};
  }
  return {{"seed", 0},
          {"mode", "adapted"},
          {"bounds", BoundsToJson(Bounds{})},
          {"payloads", payloads},
          {"courses", json::array()}};
}

}  // namespace sia
