#include "sia/sysid.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace sia {
namespace {

constexpr std::array<const char*, 4> kRegressorNames{"a", "a_l", "omega",
                                                     "intercept"};

double ParseDouble(std::string_view field, int line) {
  // from_chars rejects a leading '+', which other writers may emit.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw LogParseError("line " + std::to_string(line) + ": bad number '" +
                        std::string(field) + "'");
  }
  return value;
}

std::string FormatDouble(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<double> Smooth(std::span<const double> x, std::span<const double> y,
                           double frac) {
  if (frac <= 0.0) return {y.begin(), y.end()};
  return Lowess(x, y, frac);
}

std::vector<double> Differentiate(std::span<const double> t,
                                  std::span<const double> y) {
  std::vector<double> d(y.size() - 1);
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    d[k] = (y[k + 1] - y[k]) / (t[k + 1] - t[k]);
  }
  return d;
}

struct RowFit {
  Eigen::Vector4d beta;
  double r2{0.0};
  double residual_norm{0.0};
};

RowFit SolveRow(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                const std::string& row_name) {
  Eigen::Vector4d scale;
  for (int j = 0; j < 4; ++j) scale(j) = x.col(j).norm();
  if ((scale.array() == 0.0).any()) {
    std::vector<std::string> dirs;
    for (int j = 0; j < 4; ++j) {
      if (scale(j) == 0.0) dirs.emplace_back(kRegressorNames[j]);
    }
    throw IllConditionedError(row_name + ": regressor column is identically 0",
                              dirs);
  }
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xs,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(3) < 1e-9 * sv(0)) {
    std::vector<std::string> dirs;
    const Eigen::Vector4d null_dir = svd.matrixV().col(3);
    for (int j = 0; j < 4; ++j) {
      if (std::abs(null_dir(j)) > 0.1) dirs.emplace_back(kRegressorNames[j]);
    }
    std::string names;
    for (const auto& d : dirs) names += (names.empty() ? "" : ", ") + d;
    throw IllConditionedError(
        row_name + ": insufficient excitation along {" + names + "}", dirs);
  }
  RowFit fit;
  fit.beta = svd.solve(y).cwiseQuotient(scale);
  const Eigen::VectorXd predicted = x * fit.beta;
  fit.residual_norm = (y - predicted).norm();
  fit.r2 = RSquared(std::span<const double>(y.data(), y.size()),
                    std::span<const double>(predicted.data(), predicted.size()));
  return fit;
}

}  // namespace

TrajectoryLog ReadLogCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw LogParseError("empty log");
  std::string_view header = Trim(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != kLogHeader) {
    throw LogParseError("unexpected header '" + std::string(header) +
                        "', expected '" + kLogHeader + "'");
  }
  TrajectoryLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = Trim(line);
    if (text.empty()) continue;
    std::array<double, 10> values{};
    std::size_t start = 0;
    for (int field = 0; field < 10; ++field) {
      const std::size_t comma = text.find(',', start);
      const bool last = field == 9;
      if (last != (comma == std::string_view::npos)) {
        throw LogParseError("line " + std::to_string(line_no) +
                            ": expected 10 fields");
      }
      const std::size_t stop = last ? text.size() : comma;
      values[field] = ParseDouble(Trim(text.substr(start, stop - start)), line_no);
      start = stop + 1;
    }
    TrajectoryRow row{values[0], values[1], values[2], values[3], values[4],
                      values[5], values[6], values[7], values[8], values[9]};
    if (!log.empty() && !(row.t > log.back().t)) {
      throw LogParseError("line " + std::to_string(line_no) +
                          ": time is not strictly increasing");
    }
    log.push_back(row);
  }
  return log;
}

void WriteLogCsv(std::ostream& out, const TrajectoryLog& log) {
  out << kLogHeader << '\n';
  for (const auto& r : log) {
    out << FormatDouble(r.t) << ',' << FormatDouble(r.px) << ','
        << FormatDouble(r.py) << ',' << FormatDouble(r.theta) << ','
        << FormatDouble(r.v) << ',' << FormatDouble(r.vl) << ','
        << FormatDouble(r.w) << ',' << FormatDouble(r.v_cmd) << ','
        << FormatDouble(r.vl_cmd) << ',' << FormatDouble(r.w_cmd) << '\n';
  }
}

std::vector<Control> InvertCommands(const TrajectoryLog& log, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<Control> out;
  out.reserve(log.size());
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (k > 0 && !(log[k].t > log[k - 1].t)) {
      throw LogParseError("row " + std::to_string(k) +
                          ": time is not strictly increasing");
    }
    const auto& r = log[k];
    out.push_back(Control{(r.v_cmd - r.v) / dt, (r.vl_cmd - r.vl) / dt, r.w_cmd});
  }
  return out;
}

std::vector<double> Lowess(std::span<const double> x, std::span<const double> y,
                           double frac) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("x and y differ in length");
  if (!(frac > 0.0) || frac > 1.0) {
    throw std::invalid_argument("frac must lie in (0, 1]");
  }
  if (n < 5) throw InsufficientDataError("LOWESS needs at least 5 points");
  const std::size_t span = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n))), 3, n);

  std::vector<double> out(n);
  std::size_t lo = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Slide the contiguous window of the `span` nearest neighbours.
    while (lo + span < n && x[i] - x[lo] > x[lo + span] - x[i]) ++lo;
    const std::size_t hi = lo + span;  // exclusive
    const double h = std::max(x[i] - x[lo], x[hi - 1] - x[i]);

    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      double w = 1.0;
      if (h > 0.0) {
        const double r = std::abs(x[j] - x[i]) / h;
        const double c = 1.0 - r * r * r;
        w = r < 1.0 ? c * c * c : 0.0;
      }
      const double dx = x[j] - x[i];
      sw += w;
      swx += w * dx;
      swy += w * y[j];
      swxx += w * dx * dx;
      swxy += w * dx * y[j];
    }
    // Local line centred at x[i]; its intercept is the fitted value.
    const double det = sw * swxx - swx * swx;
    if (sw <= 0.0) {
      out[i] = y[i];
    } else if (std::abs(det) <= 1e-14 * sw * swxx) {
      out[i] = swy / sw;
    } else {
      out[i] = (swxx * swy - swx * swxy) / det;
    }
  }
  return out;
}

double RSquared(std::span<const double> observed,
                std::span<const double> predicted) {
  if (observed.size() != predicted.size() || observed.empty()) {
    throw std::invalid_argument("R^2 needs equal, nonempty series");
  }
  double mean = 0.0;
  for (double v : observed) mean += v;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - ss_res / ss_tot;
}

double FitResult::MeanR2() const {
  return (r2_per_row[0] + r2_per_row[1] + r2_per_row[2]) / 3.0;
}

nlohmann::json FitResultToJson(const FitResult& fit) {
  const auto flat = fit.rho.Flatten();
  return {{"rho", std::vector<double>(flat.begin(), flat.end())},
          {"r2_per_row", fit.r2_per_row},
          {"residual_norms", fit.residual_norms},
          {"mean_r2", fit.MeanR2()}};
}

FitResult FitParams(const TrajectoryLog& log, double frac, double dt) {
  if (log.size() < 40) {
    throw InsufficientDataError("regression needs at least 40 log rows");
  }
  if (frac < 0.0 || frac > 1.0) {
    throw std::invalid_argument("frac must lie in [0, 1]");
  }
  const std::vector<Control> controls = InvertCommands(log, dt);
  const std::size_t n = log.size();
  const std::size_t m = n - 1;  // one sample per control interval

  std::vector<double> t(n), mid(m), t_head(m);
  for (std::size_t k = 0; k < n; ++k) t[k] = log[k].t;
  for (std::size_t k = 0; k < m; ++k) {
    mid[k] = 0.5 * (t[k] + t[k + 1]);
    t_head[k] = t[k];
  }

  // Rate of a sampled velocity over each control interval.
  auto rate_pipeline = [&](const std::vector<double>& series) {
    const std::vector<double> smooth = Smooth(t, series, frac);
    return Smooth(mid, Differentiate(t, smooth), frac);
  };
  auto direct_pipeline = [&](const std::vector<double>& series) {
    return Smooth(t_head, series, frac);
  };

  std::array<std::vector<double>, 3> u_cols;
  for (auto& c : u_cols) c.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Eigen::Vector3d u = controls[k].AsVector();
    for (int j = 0; j < 3; ++j) u_cols[j][k] = u(j);
  }

  // Integrated inputs pushed through the velocity pipeline; the pipeline is
  // linear and reproduces affine trends, so the row relation is preserved.
  Eigen::MatrixXd x_rate(m, 4);
  Eigen::MatrixXd x_direct(m, 4);
  for (int j = 0; j < 3; ++j) {
    std::vector<double> integrated(n, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      integrated[k + 1] = integrated[k] + u_cols[j][k] * (t[k + 1] - t[k]);
    }
    const auto rate = rate_pipeline(integrated);
    const auto direct = direct_pipeline(u_cols[j]);
    for (std::size_t k = 0; k < m; ++k) {
      x_rate(k, j) = rate[k];
      x_direct(k, j) = direct[k];
    }
  }
  x_rate.col(3).setOnes();
  x_direct.col(3).setOnes();

  std::vector<double> v(n), vl(n), w(m);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = log[k].v;
    vl[k] = log[k].vl;
  }
  for (std::size_t k = 0; k < m; ++k) w[k] = log[k].w;

  const std::array<std::vector<double>, 3> targets{
      rate_pipeline(v), rate_pipeline(vl), direct_pipeline(w)};
  const std::array<const Eigen::MatrixXd*, 3> designs{&x_rate, &x_rate,
                                                      &x_direct};
  const std::array<const char*, 3> row_names{"v_dot", "vl_dot", "theta_dot"};

  FitResult result;
  for (int row = 0; row < 3; ++row) {
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(targets[row].data(), m);
    const RowFit fit = SolveRow(*designs[row], y, row_names[row]);
    result.rho.gain.row(row) = fit.beta.head<3>().transpose();
    result.rho.drift(row) = fit.beta(3);
    result.r2_per_row[row] = fit.r2;
    result.residual_norms[row] = fit.residual_norm;
  }
  return result;
}

std::vector<ExcitationRow> GenerateExcitation(const ExcitationSpec& spec) {
  if (spec.duration < 0.0) throw std::invalid_argument("duration must be >= 0");
  if (!(spec.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (spec.frequencies.empty()) {
    throw std::invalid_argument("at least one frequency is required");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double nf = static_cast<double>(spec.frequencies.size());
  std::vector<ExcitationRow> rows;
  const auto count = static_cast<std::size_t>(std::ceil(spec.duration / spec.dt - 1e-9));
  rows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * spec.dt;
    std::array<double, 3> channel{};
    for (int c = 0; c < 3; ++c) {
      double sum = 0.0;
      for (std::size_t j = 0; j < spec.frequencies.size(); ++j) {
        // Channel- and component-specific phase offsets.
        const double phase = 0.9 * (c + 1) + 2.1 * static_cast<double>(j) * (c + 1);
        sum += std::sin(kTwoPi * spec.frequencies[j] * t + phase);
      }
      channel[c] = spec.amplitudes[c] * sum / nf;
    }
    rows.push_back({t, channel[0], channel[1], channel[2]});
  }
  return rows;
}

TrajectoryLog SimulateExcitationLog(const std::vector<ExcitationRow>& schedule,
                                    const VaryingParams& rho,
                                    double noise_sigma, std::uint64_t seed,
                                    int substeps) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto sample_noise = [&]() {
    return noise_sigma > 0.0 ? noise_sigma * noise(rng) : 0.0;
  };
  TrajectoryLog log;
  log.reserve(schedule.size());
  State x;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto& cmd = schedule[k];
    const double dt = k + 1 < schedule.size() ? schedule[k + 1].t - cmd.t
                                              : kControlPeriod;
    TrajectoryRow row;
    row.t = cmd.t;
    row.px = x.px;
    row.py = x.py;
    row.theta = x.theta;
    row.v = x.v + sample_noise();
    row.vl = x.vl + sample_noise();
    row.v_cmd = cmd.v_cmd;
    row.vl_cmd = cmd.vl_cmd;
    row.w_cmd = cmd.w_cmd;
    // The robot integrates the command against its own (noisy) measurement.
    const Control u{(cmd.v_cmd - row.v) / kControlPeriod,
                    (cmd.vl_cmd - row.vl) / kControlPeriod, cmd.w_cmd};
    row.w = rho.gain.row(2).dot(u.AsVector()) + rho.drift(2) + sample_noise();
    log.push_back(row);
    x = Propagate(x, u, rho, dt, substeps);
  }
  return log;
}

}  // namespace sia
