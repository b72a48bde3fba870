#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sia/certificate_io.h"
#include "sia/course.h"
#include "sia/experiment_config.h"
#include "sia/feasibility.h"
#include "sia/synthesis.h"
#include "sia/sysid.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSafetyFailure = 2;

struct CommonArgs {
  std::string config;
  std::string out{"out"};
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

sia::ExperimentConfig LoadConfig(const CommonArgs& args) {
  sia::ExperimentConfig cfg;
  if (args.config.empty()) {
    cfg = sia::ExperimentConfigFromJson(sia::DefaultExperimentJson());
  } else {
    cfg = sia::LoadExperimentConfig(args.config);
  }
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.dga.seed = *args.seed;
    cfg.feasibility.seed = *args.seed;
  }
  if (args.mode) cfg.mode = sia::ParseRunMode(*args.mode);
  return cfg;
}

const sia::PayloadEntry& Payload(const sia::ExperimentConfig& cfg,
                                 const std::string& label) {
  const auto it = cfg.payloads.find(label);
  if (it == cfg.payloads.end()) {
    throw std::invalid_argument("unknown payload '" + label + "'");
  }
  return it->second;
}

void WriteJson(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Shared tail of synthesize / adapt: persist the certificate and trace.
int FinishDga(const sia::ExperimentConfig& cfg, const sia::VaryingParams& rho,
              const std::string& label, const sia::CertificatePoint& point,
              const sia::DgaTrace& trace, bool converged, double min_minor,
              const std::string& kind, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  sia::CertificateDocument doc;
  doc.point = point;
  doc.rho = rho;
  doc.bounds = cfg.bounds;
  doc.metadata = {{"payload", label},
                  {"kind", kind},
                  {"converged", converged},
                  {"min_minor", min_minor},
                  {"iterations", trace.records.size()},
                  {"duration_s", trace.duration_s}};
  const fs::path cert = out_dir / ("certificate_" + label + ".json");
  sia::WriteCertificate(cert, doc);
  std::ofstream trace_out(out_dir / ("trace_" + label + ".csv"));
  sia::WriteTraceCsv(trace_out, trace);

  std::cout << kind << " payload=" << label << " k=" << point.k
            << " min_minor=" << min_minor << " iterations=" << trace.records.size()
            << " duration_s=" << trace.duration_s
            << (converged ? " converged" : " NOT converged") << '\n'
            << "certificate: " << cert.string() << '\n';
  return converged ? kExitOk : kExitError;
}

int RunDgaCommand(const CommonArgs& args, const std::string& label,
                  const std::string& from) {
  const sia::ExperimentConfig cfg = LoadConfig(args);
  const sia::VaryingParams rho = Payload(cfg, label).rho;
  const bool adapting = !from.empty();
  const std::string kind = adapting ? "adapt" : "synthesize";
  try {
    const sia::DgaResult result =
        adapting ? sia::Adapt(sia::ReadCertificate(from).point, rho, cfg.bounds, cfg.dga)
                 : sia::Synthesize(rho, cfg.bounds, cfg.dga);
    return FinishDga(cfg, rho, label, result.point, result.trace, true,
                     sia::MinMinorOverAssignments(result.point, rho, cfg.bounds,
                                                  cfg.dga.eta),
                     kind, args.out);
  } catch (const sia::NonConvergenceError& e) {
    std::cerr << kind << ": " << e.what() << '\n';
    return FinishDga(cfg, rho, label, e.best(), e.trace(), false,
                     e.best_min_minor(), kind, args.out);
  }
}

int RunFeasibilityCommand(const CommonArgs& args, const std::string& certificate,
                          std::optional<double> k_override,
                          const std::vector<std::string>& dynamics,
                          std::optional<int> n) {
  const sia::ExperimentConfig cfg = LoadConfig(args);
  double k = 0.0;
  std::string index_label = "k";
  if (!certificate.empty()) {
    const auto doc = sia::ReadCertificate(certificate);
    k = doc.point.k;
    index_label = doc.metadata.value("payload", fs::path(certificate).stem().string());
  }
  if (k_override) k = *k_override;
  if (!(k > 0.0)) throw std::invalid_argument("feasibility needs --certificate or --k");

  const sia::SafetyIndexParam p{k, 0.0, cfg.bounds.d_min, cfg.dga.eta};
  const int samples = n.value_or(cfg.feasibility.n_samples);
  std::vector<sia::FeasibilityColumn> cols;
  json reports = json::object();
  for (const auto& label : dynamics) {
    const auto start = std::chrono::steady_clock::now();
    sia::FeasibilityReport report = sia::RunFeasibility(
        p, Payload(cfg, label).rho, cfg.bounds, samples, cfg.feasibility.seed);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start).count();
    json j = sia::ReportToJson(report);
    j["k"] = k;
    j["duration_s"] = secs;
    reports[label] = j;
    cols.push_back({"rho_" + label, "phi_" + index_label, std::move(report)});
  }
  std::cout << sia::FormatFeasibilityTable(cols);
  WriteJson(fs::path(args.out) / ("feasibility_" + index_label + ".json"), reports);
  return kExitOk;
}

int RunSysidCommand(const CommonArgs& args, const std::string& log_path,
                    const std::string& synthetic, double noise, double frac) {
  sia::TrajectoryLog log;
  if (!log_path.empty()) {
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open log " + log_path);
    log = sia::ReadLogCsv(in);
  } else {
    const sia::ExperimentConfig cfg = LoadConfig(args);
    const auto schedule = sia::GenerateExcitation(sia::ExcitationSpec{});
    log = sia::SimulateExcitationLog(schedule, Payload(cfg, synthetic).rho, noise,
                                     cfg.seed);
    fs::create_directories(args.out);
    std::ofstream out(fs::path(args.out) / ("excitation_" + synthetic + ".csv"));
    sia::WriteLogCsv(out, log);
  }
  const sia::FitResult fit = sia::FitParams(log, frac);
  const json j = sia::FitResultToJson(fit);
  WriteJson(fs::path(args.out) / "sysid_fit.json", j);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int RunSimulateCommand(const CommonArgs& args) {
  const sia::ExperimentConfig cfg = LoadConfig(args);
  if (cfg.courses.empty()) throw std::invalid_argument("config defines no courses");
  std::vector<sia::RunRecord> records;
  bool failure = false;
  for (const auto& course : cfg.courses) {
    sia::RunRecord rec = sia::RunCourse(course, cfg.mode, cfg.payloads, cfg.sim);
    sia::EmitOutputs(rec, args.out);
    for (const auto& e : rec.events) {
      if (sia::IsFailure(e.type)) {
        std::cout << course.name << " leg " << e.leg << " t=" << e.t << ' '
                  << sia::ToString(e.type) << " d=" << e.distance << '\n';
      }
    }
    failure = failure || rec.HasFailure();
    records.push_back(std::move(rec));
  }
  std::cout << sia::FormatSummaryTable(records);
  return failure ? kExitSafetyFailure : kExitOk;
}

int RunReportCommand(const CommonArgs& args) {
  std::vector<sia::RunRecord> records;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(args.out)) {
    const std::string name = entry.path().filename().string();
    if (name.ends_with("_summary.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    json j;
    in >> j;
    sia::RunRecord rec;
    rec.course = j.at("course").get<std::string>();
    rec.mode = sia::ParseRunMode(j.at("mode").get<std::string>());
    for (const auto& lj : j.at("legs")) {
      sia::LegSummary leg;
      leg.min_distance = lj.at("min_distance").get<double>();
      leg.goal_reached = lj.at("goal_reached").get<bool>();
      leg.collision = lj.at("collision").get<bool>();
      leg.padded_violation = lj.at("padded_violation").get<bool>();
      leg.qp_infeasible = lj.at("qp_infeasible").get<int>();
      rec.legs.push_back(leg);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    std::cerr << "report: no *_summary.json files in " << args.out << '\n';
    return kExitError;
  }
  std::cout << sia::FormatSummaryTable(records);
  return kExitOk;
}

void AddCommon(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Experiment JSON")->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "Output directory");
  cmd->add_option("--seed", args.seed, "Override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety index synthesis, adaptation and simulation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string payload = "0.0";
  std::string from;
  std::string certificate;
  std::optional<double> k_override;
  std::vector<std::string> dynamics{"0.0"};
  std::optional<int> n_samples;
  std::string log_path;
  std::string synthetic = "3.5";
  double noise = 0.0;
  double frac = 0.08;

  auto* synth = app.add_subcommand("synthesize", "Synthesize a certificate from scratch");
  AddCommon(synth, args);
  synth->add_option("--payload", payload, "Payload label of the dynamics");

  auto* adapt = app.add_subcommand("adapt", "Adapt a certificate to new dynamics");
  AddCommon(adapt, args);
  adapt->add_option("--payload", payload, "Payload label of the new dynamics");
  adapt->add_option("--from", from, "Certificate to start from")
      ->required()
      ->check(CLI::ExistingFile);

  auto* feas = app.add_subcommand("feasibility", "Sampled FI / FTC feasibility");
  AddCommon(feas, args);
  feas->add_option("--certificate", certificate, "Certificate supplying k")
      ->check(CLI::ExistingFile);
  feas->add_option("--k", k_override, "Safety-index gain (overrides the certificate)");
  feas->add_option("--dynamics", dynamics, "Payload labels to evaluate under");
  feas->add_option("-n,--samples", n_samples, "Number of sampled states");

  auto* sysid = app.add_subcommand("sysid-fit", "Fit gains and drifts from a log");
  AddCommon(sysid, args);
  auto* log_opt = sysid->add_option("--log", log_path, "Trajectory log CSV")
                      ->check(CLI::ExistingFile);
  sysid->add_option("--synthetic", synthetic,
                    "Simulate an excitation log for this payload instead")
      ->excludes(log_opt);
  sysid->add_option("--noise", noise, "Measurement noise for synthetic logs");
  sysid->add_option("--frac", frac, "LOWESS fraction (0 disables smoothing)");

  auto* sim = app.add_subcommand("simulate", "Run the configured obstacle courses");
  AddCommon(sim, args);
  sim->add_option("--mode", args.mode, "adapted | non-adapted");

  auto* report = app.add_subcommand("report", "Tabulate summaries in --out");
  report->add_option("--out", args.out, "Directory holding *_summary.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return RunDgaCommand(args, payload, "");
    if (adapt->parsed()) return RunDgaCommand(args, payload, from);
    if (feas->parsed()) {
      return RunFeasibilityCommand(args, certificate, k_override, dynamics, n_samples);
    }
    if (sysid->parsed()) return RunSysidCommand(args, log_path, synthetic, noise, frac);
    if (sim->parsed()) return RunSimulateCommand(args);
    if (report->parsed()) return RunReportCommand(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
