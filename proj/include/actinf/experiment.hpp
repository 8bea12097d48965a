#pragma once

/**
 * @file
 * @brief Experiment configuration, CSV output and the `run` / `check` commands.
 *
 * Config grammar, one entry per line:
 *
 *   # comment
 *   key = <JSON value>
 *
 * Matrices are row-major nested lists (`A = [[1, 0.1], [0, 1]]`), noise terms
 * are given as precisions. See configs/default.cfg for every key.
 */

#include "actinf/control.hpp"
#include "actinf/ffg.hpp"
#include "actinf/simulation.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace actinf::experiment {

/// Config parse or validation failure; field() names the offending key.
class ConfigError : public std::runtime_error
{
public:
  ConfigError(std::string field, const std::string & message)
      : std::runtime_error(field + ": " + message), field_(std::move(field))
  {}
  const std::string & field() const { return field_; }

private:
  std::string field_;
};

struct ExperimentConfig
{
  LinearGaussianModel model;
  Vector x0;
  Matrix Q;
  Matrix R;
  std::vector<double> lambdas;
  std::vector<std::string> controllers{"lqg", "actinf"};
  Index horizon{10};
  Index steps{100};
  std::vector<std::uint64_t> seeds{0};
  bool noise_on{true};
  std::string out{"out"};

  GoalPrior goal_family() const { return {Q, R, 1.0}; }
};

/// The shipped default: the 2-state benchmark with C = R = Q = W_v = W_w = I, T = 10, x_0 = (25, 25).
inline constexpr const char * kDefaultConfig = R"(# Closed-loop comparison of LQG and free-energy control.
A = [[1.0, 0.1], [0.0, 1.0]]
B = [[0.1, 0.5], [0.05, 0.5]]
C = [[1.0, 0.0], [0.0, 1.0]]
W_w = [[1.0, 0.0], [0.0, 1.0]]
W_v = [[1.0, 0.0], [0.0, 1.0]]
prior_mean = [0.0, 0.0]
prior_precision = [[1e-8, 0.0], [0.0, 1e-8]]
x0 = [25.0, 25.0]
Q = [[1.0, 0.0], [0.0, 1.0]]
R = [[1.0, 0.0], [0.0, 1.0]]
lambdas = [1e-4, 0.1, 1.0]
controllers = ["lqg", "actinf"]
horizon = 10
steps = 100
seeds = [0]
noise_on = true
out = "out"
)";

namespace detail {

inline std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) { return {}; }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string & line)
{
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) { quoted = !quoted; }
    if (line[i] == '#' && !quoted) { return line.substr(0, i); }
  }
  return line;
}

inline Matrix to_matrix(const nlohmann::json & j, const std::string & key)
{
  if (!j.is_array() || j.empty()) { throw ConfigError(key, "expected a non-empty list of rows"); }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (const auto & row : j) {
    if (!row.is_array() || row.empty()) { throw ConfigError(key, "every row must be a non-empty list"); }
    if (cols == 0) { cols = row.size(); }
    if (row.size() != cols) { throw ConfigError(key, "rows have different lengths"); }
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto & v = j[r][c];
      if (!v.is_number()) { throw ConfigError(key, "entries must be numbers"); }
      m(static_cast<Index>(r), static_cast<Index>(c)) = v.get<double>();
    }
  }
  if (!m.allFinite()) { throw ConfigError(key, "entries must be finite"); }
  return m;
}

inline Vector to_vector(const nlohmann::json & j, const std::string & key)
{
  if (!j.is_array() || j.empty()) { throw ConfigError(key, "expected a non-empty list of numbers"); }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) { throw ConfigError(key, "entries must be numbers"); }
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  if (!v.allFinite()) { throw ConfigError(key, "entries must be finite"); }
  return v;
}

inline Index to_positive_index(const nlohmann::json & j, const std::string & key)
{
  if (!j.is_number_integer() || j.get<long long>() < 1) { throw ConfigError(key, "must be an integer >= 1"); }
  return static_cast<Index>(j.get<long long>());
}

inline void check_shape(const Matrix & m, Index rows, Index cols, const std::string & key)
{
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(key, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got "
                             + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace detail

/// Parses and validates; throws ConfigError naming the first offending field.
inline ExperimentConfig parse_config(const std::string & text)
{
  std::map<std::string, nlohmann::json> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = detail::trim(detail::strip_comment(line));
    if (content.empty()) { continue; }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected `key = value`");
    }
    const std::string key   = detail::trim(content.substr(0, eq));
    const std::string value = detail::trim(content.substr(eq + 1));
    if (key.empty()) { throw ConfigError("line " + std::to_string(line_no), "missing key"); }
    if (entries.count(key)) { throw ConfigError(key, "duplicate key"); }
    try {
      entries.emplace(key, nlohmann::json::parse(value));
    } catch (const nlohmann::json::parse_error &) {
      throw ConfigError(key, "value is not a number, list, string or boolean");
    }
  }

  static const std::set<std::string> known{"A", "B", "C", "W_w", "W_v", "prior_mean", "prior_precision", "x0", "Q",
    "R", "lambdas", "controllers", "horizon", "steps", "seeds", "noise_on", "out"};
  for (const auto & [key, value] : entries) {
    if (!known.count(key)) { throw ConfigError(key, "unknown key"); }
  }
  auto required = [&](const std::string & key) -> const nlohmann::json & {
    auto it = entries.find(key);
    if (it == entries.end()) { throw ConfigError(key, "missing required key"); }
    return it->second;
  };

  ExperimentConfig cfg;
  auto & model = cfg.model;
  model.A = detail::to_matrix(required("A"), "A");
  const Index nx = model.A.rows();
  detail::check_shape(model.A, nx, nx, "A");
  model.B = detail::to_matrix(required("B"), "B");
  if (model.B.rows() != nx) { throw ConfigError("B", "must have " + std::to_string(nx) + " rows"); }
  const Index nu = model.B.cols();
  model.C = detail::to_matrix(required("C"), "C");
  if (model.C.cols() != nx) { throw ConfigError("C", "must have " + std::to_string(nx) + " columns"); }
  const Index ny = model.C.rows();

  model.W_w = detail::to_matrix(required("W_w"), "W_w");
  detail::check_shape(model.W_w, nx, nx, "W_w");
  if (!is_symmetric(model.W_w) || !is_positive_definite(model.W_w)) {
    throw ConfigError("W_w", "must be symmetric positive definite");
  }
  model.W_v = detail::to_matrix(required("W_v"), "W_v");
  detail::check_shape(model.W_v, ny, ny, "W_v");
  if (!is_symmetric(model.W_v) || !is_positive_definite(model.W_v)) {
    throw ConfigError("W_v", "must be symmetric positive definite");
  }

  Vector prior_mean = Vector::Zero(nx);
  if (entries.count("prior_mean")) { prior_mean = detail::to_vector(entries.at("prior_mean"), "prior_mean"); }
  if (prior_mean.size() != nx) { throw ConfigError("prior_mean", "must have " + std::to_string(nx) + " entries"); }
  Matrix prior_precision = kVaguePrecision * Matrix::Identity(nx, nx);
  if (entries.count("prior_precision")) {
    prior_precision = detail::to_matrix(entries.at("prior_precision"), "prior_precision");
  }
  detail::check_shape(prior_precision, nx, nx, "prior_precision");
  if (!is_symmetric(prior_precision) || !is_positive_definite(prior_precision)) {
    throw ConfigError("prior_precision", "must be symmetric positive definite");
  }
  model.prior = Gaussian::from_precision(prior_mean, prior_precision);

  cfg.x0 = detail::to_vector(required("x0"), "x0");
  if (cfg.x0.size() != nx) { throw ConfigError("x0", "must have " + std::to_string(nx) + " entries"); }

  cfg.Q = detail::to_matrix(required("Q"), "Q");
  detail::check_shape(cfg.Q, nx, nx, "Q");
  if (!is_symmetric(cfg.Q) || !is_psd(cfg.Q)) { throw ConfigError("Q", "must be symmetric positive semi-definite"); }
  cfg.R = detail::to_matrix(required("R"), "R");
  detail::check_shape(cfg.R, nu, nu, "R");
  if (!is_symmetric(cfg.R) || !is_positive_definite(cfg.R)) {
    throw ConfigError("R", "must be symmetric positive definite");
  }

  if (entries.count("lambdas")) {
    const auto & j = entries.at("lambdas");
    if (!j.is_array()) { throw ConfigError("lambdas", "expected a list of numbers"); }
    for (const auto & v : j) {
      if (!v.is_number()) { throw ConfigError("lambdas", "entries must be numbers"); }
      const double l = v.get<double>();
      if (!(l > 0.0) || !std::isfinite(l)) { throw ConfigError("lambdas", "lambda must be > 0"); }
      cfg.lambdas.push_back(l);
    }
  }

  if (entries.count("controllers")) {
    const auto & j = entries.at("controllers");
    if (!j.is_array()) { throw ConfigError("controllers", "expected a list of strings"); }
    cfg.controllers.clear();
    for (const auto & v : j) {
      if (!v.is_string()) { throw ConfigError("controllers", "entries must be strings"); }
      const auto name = v.get<std::string>();
      if (name != "lqg" && name != "actinf" && name != "none") {
        throw ConfigError("controllers", "unknown controller '" + name + "' (expected lqg, actinf or none)");
      }
      cfg.controllers.push_back(name);
    }
  }

  if (entries.count("horizon")) { cfg.horizon = detail::to_positive_index(entries.at("horizon"), "horizon"); }
  if (entries.count("steps")) { cfg.steps = detail::to_positive_index(entries.at("steps"), "steps"); }

  if (entries.count("seeds")) {
    const auto & j = entries.at("seeds");
    if (!j.is_array() || j.empty()) { throw ConfigError("seeds", "expected a non-empty list of integers"); }
    cfg.seeds.clear();
    for (const auto & v : j) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError("seeds", "entries must be non-negative integers");
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  if (entries.count("noise_on")) {
    if (!entries.at("noise_on").is_boolean()) { throw ConfigError("noise_on", "must be true or false"); }
    cfg.noise_on = entries.at("noise_on").get<bool>();
  }
  if (entries.count("out")) {
    if (!entries.at("out").is_string()) { throw ConfigError("out", "must be a string"); }
    cfg.out = entries.at("out").get<std::string>();
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("config", "cannot read " + path.string()); }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

/// Shortest round-trip text for file names.
inline std::string format_short(double v)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

/// 17 significant digits, '.' decimal point, locale independent.
inline std::string format_double(double v)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string trace_file_name(const simulation::SimulationTrace & trace)
{
  return "trace_" + trace.controller + "_" + format_short(trace.lambda) + "_" + std::to_string(trace.seed) + ".csv";
}

inline void write_trace_csv(std::ostream & out, const simulation::SimulationTrace & trace)
{
  if (trace.rows.empty()) { return; }
  const auto & first = trace.rows.front();
  out << "t";
  for (Index i = 0; i < first.x_true.size(); ++i) { out << ",x" << i + 1; }
  for (Index i = 0; i < first.y.size(); ++i) { out << ",y" << i + 1; }
  for (Index i = 0; i < first.u.size(); ++i) { out << ",u" << i + 1; }
  out << ",inst_cost,cum_cost,fe_past,fe_future,fe_total\n";
  for (const auto & r : trace.rows) {
    out << r.t;
    for (Index i = 0; i < r.x_true.size(); ++i) { out << ',' << format_double(r.x_true(i)); }
    for (Index i = 0; i < r.y.size(); ++i) { out << ',' << format_double(r.y(i)); }
    for (Index i = 0; i < r.u.size(); ++i) { out << ',' << format_double(r.u(i)); }
    out << ',' << format_double(r.inst_cost) << ',' << format_double(r.cum_cost) << ',' << format_double(r.fe_past)
        << ',' << format_double(r.fe_future) << ',' << format_double(r.fe_total) << '\n';
  }
}

inline void write_summary_csv(std::ostream & out, const std::vector<simulation::SimulationTrace> & traces,
  bool noise_on)
{
  out << "controller,lambda,seed,noise_on,steps,final_cum_cost,final_fe_total,max_abs_u,first_u_norm\n";
  for (const auto & t : traces) {
    const auto s = simulation::summarize(t);
    out << s.controller << ',' << format_double(s.lambda) << ',' << s.seed << ',' << (noise_on ? "true" : "false")
        << ',' << t.rows.size() << ',' << format_double(s.final_cum_cost) << ',' << format_double(s.final_fe_total)
        << ',' << format_double(s.max_abs_u) << ',' << format_double(s.first_u_norm) << '\n';
  }
}

/// Command-line overrides; each takes precedence over the config file.
struct Overrides
{
  std::optional<bool> noise_off;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

inline void apply(ExperimentConfig & cfg, const Overrides & o)
{
  if (o.noise_off && *o.noise_off) { cfg.noise_on = false; }
  if (o.seed) { cfg.seeds = {*o.seed}; }
  if (o.out) { cfg.out = *o.out; }
}

/// Every run the config asks for: one LQG/none run per seed, one free-energy run per (λ, seed).
inline std::vector<simulation::SimulationTrace> run_all(const ExperimentConfig & cfg)
{
  simulation::Settings settings;
  settings.horizon  = cfg.horizon;
  settings.steps    = cfg.steps;
  settings.noise_on = cfg.noise_on;
  settings.x0       = cfg.x0;
  settings.cost     = cfg.goal_family();

  std::vector<simulation::SimulationTrace> traces;
  for (const auto & name : cfg.controllers) {
    if (name == "actinf") {
      for (double lambda : cfg.lambdas) {
        for (auto seed : cfg.seeds) {
          settings.seed = seed;
          traces.push_back(simulation::simulate(cfg.model,
            simulation::ActInfControl{cfg.goal_family().with_lambda(lambda)}, settings));
        }
      }
      continue;
    }
    for (auto seed : cfg.seeds) {
      settings.seed = seed;
      if (name == "lqg") {
        traces.push_back(simulation::simulate(cfg.model, simulation::LqgControl{settings.cost}, settings));
      } else {
        traces.push_back(simulation::simulate(cfg.model, simulation::NoControl{}, settings));
      }
    }
  }
  return traces;
}

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidConfig = 2, kDiverged = 3, kIoError = 4 };

/// `run <config>`: writes one trace CSV per run plus summary.csv into the output directory.
inline int run_command(const std::filesystem::path & config_path, const Overrides & overrides, std::ostream & log,
  std::ostream & err)
{
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError & e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }
  apply(cfg, overrides);

  std::vector<simulation::SimulationTrace> traces;
  try {
    traces = run_all(cfg);
  } catch (const simulation::DivergenceError & e) {
    err << "simulation diverged: " << e.what() << " (controller " << e.trace.controller << ", seed " << e.trace.seed
        << ")\n";
    return kDiverged;
  }

  const std::filesystem::path out_dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "cannot create output directory " << out_dir << ": " << ec.message() << '\n';
    return kIoError;
  }
  for (const auto & trace : traces) {
    const auto path = out_dir / trace_file_name(trace);
    std::ofstream f(path, std::ios::binary);
    write_trace_csv(f, trace);
    if (!f) {
      err << "cannot write " << path << '\n';
      return kIoError;
    }
    log << "wrote " << path.string() << '\n';
  }
  std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
  write_summary_csv(summary, traces, cfg.noise_on);
  if (!summary) {
    err << "cannot write summary.csv\n";
    return kIoError;
  }
  log << "wrote " << (out_dir / "summary.csv").string() << '\n';
  return kOk;
}

struct OracleDeviation
{
  double lambda{0.0};
  double schedule{0.0};
  double control{0.0};
};

/// Max deviation, relative to max(1, ‖reference‖max), between the closed forms and message passing.
inline OracleDeviation oracle_deviation(const LinearGaussianModel & model, const GoalPrior & goal, Index horizon,
  const Gaussian & estimate)
{
  auto rel = [](const Matrix & a, const Matrix & ref) {
    return (a - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff());
  };
  const auto spec     = ffg::SliceSpec::from(model, goal);
  const auto schedule = control::actinf_schedule(model, goal, horizon);

  OracleDeviation dev;
  dev.lambda = goal.lambda;
  Matrix p   = symmetrize(goal.state_precision());
  for (auto k = static_cast<std::size_t>(horizon); k-- > 0;) {
    dev.schedule = std::max(dev.schedule, rel(schedule.P[k], p));
    if (k > 0) { p = ffg::backward_slice(spec, p).P_prev; }
  }
  const auto closed  = control::actinf_gain(schedule, estimate, model, goal);
  const auto message = ffg::control_slice(spec, schedule.next(), estimate);
  dev.control = rel(closed.u, message.u_mode);
  return dev;
}

/// `check <config>`: validation plus the closed-form vs message-passing self-test.
inline int check_command(const std::filesystem::path & config_path, std::ostream & log, std::ostream & err,
  double tolerance = 1e-8)
{
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError & e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }
  log << "config ok: n_x=" << cfg.model.A.rows() << " n_u=" << cfg.model.B.cols() << " n_y=" << cfg.model.C.rows()
      << " T=" << cfg.horizon << '\n';

  const Index nx = cfg.model.A.rows();
  const Gaussian estimate = Gaussian::from_precision(cfg.x0, Matrix::Identity(nx, nx));
  std::vector<double> lambdas = cfg.lambdas;
  if (lambdas.empty()) { lambdas.push_back(1.0); }

  bool ok = true;
  for (double lambda : lambdas) {
    OracleDeviation d;
    try {
      d = oracle_deviation(cfg.model, cfg.goal_family().with_lambda(lambda), cfg.horizon, estimate);
    } catch (const std::exception & e) {
      err << "lambda=" << format_short(lambda) << ": oracle evaluation failed: " << e.what() << '\n';
      ok = false;
      continue;
    }
    const bool pass = d.schedule < tolerance && d.control < tolerance;
    ok = ok && pass;
    log << "lambda=" << format_short(lambda) << " max P_k deviation=" << format_double(d.schedule)
        << " max u deviation=" << format_double(d.control) << (pass ? " ok" : " FAIL") << '\n';
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace actinf::experiment
