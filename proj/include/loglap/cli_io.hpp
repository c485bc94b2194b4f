#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loglap/errors.hpp"
#include "loglap/experiments.hpp"
#include "loglap/model_library.hpp"
#include "loglap/operator_core.hpp"
#include "loglap/solver.hpp"
#include "loglap/spectral_grid.hpp"

namespace loglap {

using json = nlohmann::json;

struct ExperimentSettings {
  std::optional<NonlinearitySpec> continuity_partner;
  std::vector<double> sweep_fractions{0.125, 0.25, 0.5};  // of epsilon_max
  std::vector<double> sweep_epsilons;                     // absolute; overrides fractions when non-empty
  std::size_t audit_trials = 100;
};

struct RunConfig {
  double a = 0.0;
  double b = 1.0;
  std::size_t n_points = 4096;
  double length = 80.0;
  ModelSpec model{SourceSpec::gaussian_bump(0.0, 1.0, 1.0), KernelSpec::gaussian(1.0),
                  NonlinearitySpec::scaled_sine(1.0), 0.0, 1.0};
  SolverOptions tolerances;
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  ExperimentSettings experiments;
  int threads = 1;  // runtime only, not part of the serialized config

  SpectralGrid grid() const { return {n_points, length}; }
};

// ---------------------------------------------------------------------------
// Parsing with field-level messages
// ---------------------------------------------------------------------------

namespace detail {

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(path + "." + key + ": missing field");
  return obj.at(key);
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_number()) throw ValidationError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline double number_or(const json& obj, const std::string& key, double fallback, const std::string& path) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

inline std::string text(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_string()) throw ValidationError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

template <typename Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ValidationError(path + ": " + msg);
  } catch (const DegenerateModel& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline KernelSpec parse_kernel(const json& j, const std::string& path) {
  const auto fam = text(j, "family", path);
  const double scale = number_or(j, "scale", 1.0, path);
  return at_path(path, [&] {
    if (fam == "gaussian") return KernelSpec::gaussian(number(j, "width", path), scale);
    if (fam == "laplace") return KernelSpec::laplace(number(j, "rate", path), scale);
    if (fam == "box") return KernelSpec::box(number(j, "halfwidth", path), scale);
    throw ValidationError(path + ".family: unknown kernel family '" + fam + "'");
  });
}

inline json kernel_json(const KernelSpec& k) {
  const char* key = k.family == KernelFamily::gaussian ? "width" : k.family == KernelFamily::laplace ? "rate" : "halfwidth";
  return {{"family", family_name(k.family)}, {key, k.parameter}, {"scale", k.scale}};
}

inline NonlinearitySpec parse_nonlinearity(const json& j, const std::string& path) {
  const auto fam = text(j, "family", path);
  const double beta = number(j, "beta", path);
  return at_path(path, [&] {
    if (fam == "scaled_sine") return NonlinearitySpec::scaled_sine(beta);
    if (fam == "rational") return NonlinearitySpec::rational(beta);
    if (fam == "tanh") return NonlinearitySpec::tanh(beta);
    throw ValidationError(path + ".family: unknown nonlinearity family '" + fam + "'");
  });
}

inline json nonlinearity_json(const NonlinearitySpec& g) {
  if (g.family == NonlinearityFamily::custom) throw ValidationError("custom nonlinearities cannot be serialized");
  return {{"family", family_name(g.family)}, {"beta", g.beta}};
}

inline SourceSpec parse_source(const json& j, const std::string& path) {
  const auto fam = text(j, "family", path);
  return at_path(path, [&] {
    if (fam == "gaussian_bump") {
      return SourceSpec::gaussian_bump(number_or(j, "center", 0.0, path), number(j, "width", path),
                                       number(j, "amplitude", path));
    }
    if (fam == "difference_of_gaussians") {
      return SourceSpec::difference_of_gaussians(number_or(j, "center", 0.0, path), number(j, "width1", path),
                                                 number(j, "width2", path), number(j, "amplitude", path));
    }
    throw ValidationError(path + ".family: unknown source family '" + fam + "'");
  });
}

inline json source_json(const SourceSpec& s) {
  if (s.family == SourceFamily::gaussian_bump) {
    return {{"family", "gaussian_bump"}, {"center", s.center}, {"width", s.width}, {"amplitude", s.amplitude}};
  }
  return {{"family", "difference_of_gaussians"}, {"center", s.center}, {"width1", s.width},
          {"width2", s.width2}, {"amplitude", s.amplitude}};
}

inline std::vector<double> number_list(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_array()) throw ValidationError(path + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError(path + "." + key + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  if (c.b == 0.0 || !std::isfinite(c.b)) throw ValidationError("params.b: must be nonzero");
  if (!std::isfinite(c.a)) throw ValidationError("params.a: must be finite");
  if (c.n_points < 2 || (c.n_points & (c.n_points - 1)) != 0) {
    throw ValidationError("grid.n_points: must be a power of two");
  }
  if (!(c.length > 0.0)) throw ValidationError("grid.length: must be positive");
  if (!(c.model.rho > 0.0 && c.model.rho <= 1.0)) throw ValidationError("model.rho: must lie in (0, 1]");
  if (!(c.model.epsilon >= 0.0) || !std::isfinite(c.model.epsilon)) {
    throw ValidationError("model.epsilon: must be finite and >= 0");
  }
  const auto& t = c.tolerances;
  if (!(t.fp_tol > 0.0)) throw ValidationError("tolerances.fp_tol: must be positive");
  if (!(t.linear_residual_tol > 0.0)) throw ValidationError("tolerances.linear_residual_tol: must be positive");
  if (!(t.decay_tol > 0.0)) throw ValidationError("tolerances.decay_tol: must be positive");
  if (!(t.zero_mode_tol > 0.0)) throw ValidationError("tolerances.zero_mode_tol: must be positive");
  if (c.experiments.audit_trials == 0) throw ValidationError("experiments.audit_trials: must be positive");
  for (double e : c.experiments.sweep_epsilons) {
    if (!(e >= 0.0)) throw ValidationError("experiments.sweep_epsilons: entries must be >= 0");
  }
  for (double e : c.experiments.sweep_fractions) {
    if (!(e >= 0.0)) throw ValidationError("experiments.sweep_fractions: entries must be >= 0");
  }
}

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  RunConfig c;
  const auto& params = field(j, "params", "config");
  c.a = number(params, "a", "params");
  c.b = number(params, "b", "params");

  const auto& grid = field(j, "grid", "config");
  const double n = number(grid, "n_points", "grid");
  if (n < 2 || n != std::floor(n)) throw ValidationError("grid.n_points: must be a positive integer");
  c.n_points = static_cast<std::size_t>(n);
  c.length = number(grid, "length", "grid");

  const auto& model = field(j, "model", "config");
  c.model.source = parse_source(field(model, "source", "model"), "model.source");
  c.model.kernel = parse_kernel(field(model, "kernel", "model"), "model.kernel");
  c.model.nonlinearity = parse_nonlinearity(field(model, "nonlinearity", "model"), "model.nonlinearity");
  c.model.epsilon = number(model, "epsilon", "model");
  c.model.rho = number(model, "rho", "model");

  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    c.tolerances.fp_tol = number_or(t, "fp_tol", c.tolerances.fp_tol, "tolerances");
    c.tolerances.linear_residual_tol = number_or(t, "linear_residual_tol", c.tolerances.linear_residual_tol, "tolerances");
    c.tolerances.decay_tol = number_or(t, "decay_tol", c.tolerances.decay_tol, "tolerances");
    c.tolerances.zero_mode_tol = number_or(t, "zero_mode_tol", c.tolerances.zero_mode_tol, "tolerances");
    const double mi = number_or(t, "max_iters", static_cast<double>(c.tolerances.max_iters), "tolerances");
    if (mi < 1 || mi != std::floor(mi)) throw ValidationError("tolerances.max_iters: must be a positive integer");
    c.tolerances.max_iters = static_cast<std::size_t>(mi);
  }
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) throw ValidationError("seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("output_dir")) c.output_dir = text(j, "output_dir", "config");

  if (j.contains("experiments")) {
    const auto& e = j.at("experiments");
    if (e.contains("continuity_partner")) {
      c.experiments.continuity_partner =
          parse_nonlinearity(e.at("continuity_partner"), "experiments.continuity_partner");
    }
    if (e.contains("sweep_fractions")) c.experiments.sweep_fractions = number_list(e, "sweep_fractions", "experiments");
    if (e.contains("sweep_epsilons")) c.experiments.sweep_epsilons = number_list(e, "sweep_epsilons", "experiments");
    if (e.contains("audit_trials")) {
      const double t = number(e, "audit_trials", "experiments");
      if (t < 1 || t != std::floor(t)) throw ValidationError("experiments.audit_trials: must be a positive integer");
      c.experiments.audit_trials = static_cast<std::size_t>(t);
    }
  }
  validate(c);
  return c;
}

inline json to_json(const RunConfig& c) {
  using namespace detail;
  json e = {{"sweep_fractions", c.experiments.sweep_fractions},
            {"sweep_epsilons", c.experiments.sweep_epsilons},
            {"audit_trials", c.experiments.audit_trials}};
  if (c.experiments.continuity_partner) e["continuity_partner"] = nonlinearity_json(*c.experiments.continuity_partner);
  return {
      {"params", {{"a", c.a}, {"b", c.b}}},
      {"grid", {{"n_points", c.n_points}, {"length", c.length}}},
      {"model",
       {{"source", source_json(c.model.source)},
        {"kernel", kernel_json(c.model.kernel)},
        {"nonlinearity", nonlinearity_json(c.model.nonlinearity)},
        {"epsilon", c.model.epsilon},
        {"rho", c.model.rho}}},
      {"tolerances",
       {{"fp_tol", c.tolerances.fp_tol},
        {"linear_residual_tol", c.tolerances.linear_residual_tol},
        {"decay_tol", c.tolerances.decay_tol},
        {"zero_mode_tol", c.tolerances.zero_mode_tol},
        {"max_iters", c.tolerances.max_iters}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"experiments", e},
  };
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(j);
}

/// FNV-1a 64 of the canonical serialization, as 16 hex digits. The output
/// directory is left out so --out does not rename artifacts.
inline std::string config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("output_dir");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string platform_string() {
  std::string s;
#if defined(__linux__)
  s = "linux";
#elif defined(__APPLE__)
  s = "macos";
#elif defined(_WIN32)
  s = "windows";
#else
  s = "unknown-os";
#endif
#if defined(__clang__)
  s += " clang " + std::to_string(__clang_major__) + "." + std::to_string(__clang_minor__);
#elif defined(__GNUC__)
  s += " gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#endif
  s += " fftw3";
  return s;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandResult {
  int exit_code = 0;
  json payload;                        // printed to stdout
  std::vector<std::string> written;    // files written, relative to output_dir
};

inline json error_json(const Error& e) {
  return {{"error", e.kind()}, {"message", e.what()}, {"exit_code", static_cast<int>(e.exit_code())}};
}

/// Contraction constants without running the nonlinear iteration.
inline json inspect_constants(const RunConfig& c) {
  const OperatorParams params(c.a, c.b);
  const auto grid = c.grid();
  const auto lin = solve_linear(sample(c.model.source, grid), params, c.tolerances);
  const auto k = contraction_constants(c.model, params, lin.u0_l2);
  return {
      {"c_ab", k.c_ab},
      {"c_ab_argmin", params.lower_bound().argmin},
      {"kernel_l1", k.kernel_l1},
      {"M", k.M},
      {"u0_l2", k.u0_l2},
      {"epsilon_max", k.epsilon_max},
      {"sigma", k.sigma},
      {"epsilon", k.epsilon},
      {"rho", k.rho},
      {"admissible", k.admissible()},
      {"linear_residual", lin.residual_l2},
      {"warnings", lin.warnings},
  };
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << content;
}

inline std::string csv_of(const GridFunction& f) {
  std::ostringstream os;
  write_csv(os, f);
  return os.str();
}

inline json manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& files) {
  return {{"config_hash", config_hash(c)},
          {"command", command},
          {"seed", c.seed},
          {"grid", {{"n_points", c.n_points}, {"length", c.length}}},
          {"platform", platform_string()},
          {"threads", c.threads},
          {"files", files},
          {"config", to_json(c)}};
}

}  // namespace detail

inline CommandResult cmd_inspect(const RunConfig& c) {
  return {0, inspect_constants(c), {}};
}

/// Linear solve plus fixed point; writes u0.csv, up.csv, u.csv, report.json
/// and manifest.json only after every step succeeded.
inline CommandResult cmd_solve(const RunConfig& c) {
  const OperatorParams params(c.a, c.b);
  const auto grid = c.grid();
  FixedPointOptions opts;
  static_cast<SolverOptions&>(opts) = c.tolerances;
  auto res = solve_fixed_point(c.model, params, grid, opts);
  res.report.threads = c.threads;

  const double fnorm = l2_norm(sample(c.model.source, grid));
  json checks = {
      {"ratios_within_sigma", res.report.ratios_within_sigma()},
      {"up_in_ball", res.report.up_l2 <= c.model.rho * (1.0 + 1e-12)},
      {"main_residual", res.report.main_residual_l2 <= 1e-8 * (fnorm + 1.0)},
      {"linear_residual", res.report.linear_residual <= c.tolerances.linear_residual_tol},
  };
  bool ok = true;
  for (const auto& [_, v] : checks.items()) ok = ok && v.get<bool>();

  auto report = to_json(res.report);
  report["checks"] = checks;
  report["config_hash"] = config_hash(c);

  const std::filesystem::path dir = c.output_dir;
  std::filesystem::create_directories(dir);
  const std::vector<std::string> files{"u0.csv", "up.csv", "u.csv", "report.json", "manifest.json"};
  detail::write_text(dir / "u0.csv", detail::csv_of(res.u0));
  detail::write_text(dir / "up.csv", detail::csv_of(res.u_p));
  detail::write_text(dir / "u.csv", detail::csv_of(res.u));
  detail::write_text(dir / "report.json", report.dump(2) + "\n");
  detail::write_text(dir / "manifest.json", detail::manifest(c, "solve", files).dump(2) + "\n");

  json summary = {{"iterations", res.report.iterations},
                  {"sigma", res.report.sigma_theoretical},
                  {"up_l2", res.report.up_l2},
                  {"residual", res.report.main_residual_l2},
                  {"checks", checks},
                  {"output_dir", dir.string()}};
  return {ok ? 0 : static_cast<int>(ExitCode::numerical_integrity), summary, files};
}

enum class Experiment { contraction, continuity, sweep };

inline Experiment parse_experiment(const std::string& s) {
  if (s == "contraction") return Experiment::contraction;
  if (s == "continuity") return Experiment::continuity;
  if (s == "sweep") return Experiment::sweep;
  throw ValidationError("experiment: expected one of contraction, continuity, sweep (got '" + s + "')");
}

inline std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::contraction: return "contraction";
    case Experiment::continuity: return "continuity";
    case Experiment::sweep: return "sweep";
  }
  return "?";
}

/// Runs one experiment and writes <name>_<hash>.csv plus
/// <name>_<hash>.manifest.json into output_dir.
inline CommandResult cmd_experiment(const RunConfig& c, Experiment which) {
  const OperatorParams params(c.a, c.b);
  const auto grid = c.grid();
  std::ostringstream csv;
  json summary;
  json notes = json::object();
  bool ok = true;

  switch (which) {
    case Experiment::contraction: {
      const auto audit = run_contraction_audit(c.model, params, grid, c.experiments.audit_trials, c.seed, c.threads);
      write_csv(csv, audit);
      ok = audit.max_ratio <= audit.constants.sigma + 1e-8 && audit.constants.sigma < 1.0;
      summary = {{"trials", audit.rows.size()}, {"max_ratio", audit.max_ratio}, {"sigma", audit.constants.sigma}};
      break;
    }
    case Experiment::continuity: {
      std::vector<std::pair<NonlinearitySpec, NonlinearitySpec>> pairs;
      if (c.experiments.continuity_partner) pairs.emplace_back(c.model.nonlinearity, *c.experiments.continuity_partner);
      else pairs = shipped_continuity_pairs();
      std::vector<ContinuityExperimentResult> rows(pairs.size());
      parallel_for(pairs.size(), c.threads, [&](std::size_t i) {
        ModelSpec m1 = c.model, m2 = c.model;
        m1.nonlinearity = pairs[i].first;
        m2.nonlinearity = pairs[i].second;
        rows[i] = run_continuity(m1, m2, params, grid, c.tolerances);
      });
      write_csv(csv, rows);
      double min_slack = std::numeric_limits<double>::infinity();
      for (const auto& r : rows) min_slack = std::min(min_slack, r.slack);
      ok = min_slack >= -1e-8;
      summary = {{"pairs", rows.size()}, {"min_slack", min_slack}};
      notes["sigma_M_rule"] = "max(M1, M2)";
      break;
    }
    case Experiment::sweep: {
      const auto lin = solve_linear(sample(c.model.source, grid), params, c.tolerances);
      std::vector<double> eps = c.experiments.sweep_epsilons;
      if (eps.empty()) {
        const double emax = contraction_constants(c.model, params, lin.u0_l2).epsilon_max;
        for (double f : c.experiments.sweep_fractions) eps.push_back(f * emax);
      }
      const auto rows = run_epsilon_sweep(c.model, params, grid, eps, c.threads, c.tolerances);
      write_csv(csv, rows);
      const double fnorm = l2_norm(sample(c.model.source, grid));
      std::size_t solved = 0;
      for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        ++solved;
        ok = ok && r.up_l2 <= r.bound + 1e-8 && r.residual <= 1e-8 * (fnorm + 1.0);
      }
      summary = {{"rows", rows.size()}, {"solved", solved}};
      break;
    }
  }

  const auto name = experiment_name(which);
  const auto stem = name + "_" + config_hash(c);
  const std::vector<std::string> files{stem + ".csv", stem + ".manifest.json"};
  const std::filesystem::path dir = c.output_dir;
  std::filesystem::create_directories(dir);
  detail::write_text(dir / files[0], csv.str());
  auto man = detail::manifest(c, "experiment " + name, files);
  man["notes"] = notes;
  detail::write_text(dir / files[1], man.dump(2) + "\n");

  summary["experiment"] = name;
  summary["files"] = files;
  summary["invariants_hold"] = ok;
  return {ok ? 0 : static_cast<int>(ExitCode::numerical_integrity), summary, files};
}

}  // namespace loglap
