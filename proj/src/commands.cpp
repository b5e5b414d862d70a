#include "shapenewton/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>

namespace shapenewton {

namespace {

using Json = nlohmann::json;

/// Shortest text that reads back to the same double; "nan" for NaN.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_interface(const std::filesystem::path& path, const std::vector<Vec2>& vertices) {
  std::ofstream os(path);
  for (const Vec2& p : vertices) os << num(p.x()) << ' ' << num(p.y()) << '\n';
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

Json summary_of(const RunConfig& cfg, const RunTrace& trace) {
  Json s;
  s["method"] = to_string(cfg.solver.method);
  s["test"] = cfg.field.name();
  s["stop"] = to_string(trace.stop);
  s["message"] = trace.message;
  s["iterations"] = trace.iterations();
  if (!trace.records.empty()) {
    const IterationRecord& r = trace.records.back();
    s["J"] = json_number(r.J);
    s["Linf_L"] = json_number(r.Linf_L);
    s["L2sq_f_bnd"] = json_number(r.L2sq_f_bnd);
    s["Linf_f_points"] = json_number(r.Linf_f_points);
    s["n_points"] = r.n_points;
    s["sigma"] = json_number(r.sigma);
  }
  return s;
}

Json config_echo(const RunConfig& cfg) {
  const SolverConfig& s = cfg.solver;
  Json c;
  c["name"] = cfg.name;
  c["source"] = cfg.source.string();
  c["text"] = cfg.text;
  c["field"] = cfg.field.name();
  c["initial"] = cfg.initial.describe();
  c["method"] = to_string(s.method);
  c["gamma_sigma"] = s.gamma_sigma;
  c["sigma_exponent"] = s.sigma_exponent;
  c["step_size"] = s.step_size;
  c["max_iter"] = s.max_iter;
  c["accept_test"] = s.accept_test;
  c["accept_gamma"] = s.accept_gamma;
  c["accept_tol"] = s.accept_tol;
  c["resample_spacing"] = s.resample_spacing;
  c["resample_ratio"] = s.resample_ratio;
  c["grad_tol"] = s.grad_tol;
  c["point_tol"] = s.point_tol;
  c["stall_tol"] = s.stall_tol;
  c["quadrature_degree"] = s.assembly.rule->degree;
  c["snapshots"] = s.snapshots;
  return c;
}

}  // namespace

std::filesystem::path output_root() {
  const char* env = std::getenv("SHAPENEWTON_OUT");
  return env != nullptr && *env != '\0' ? std::filesystem::path(env) : std::filesystem::path("out");
}

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  os << "iter,J,absX,ratio_absX,Linf_L,L2sq_f_bnd,Linf_f_points,n_points,sigma\n";
  for (const IterationRecord& r : trace.records) {
    os << r.iter << ',' << num(r.J) << ',' << num(r.absX) << ',' << num(r.ratio_absX) << ',' << num(r.Linf_L) << ','
       << num(r.L2sq_f_bnd) << ',' << num(r.Linf_f_points) << ',' << r.n_points << ',' << num(r.sigma) << '\n';
  }
}

RunOutcome execute_run(const std::filesystem::path& config_path) {
  RunOutcome out;
  std::optional<PolygonalShape> initial;
  try {
    out.config = load_config(config_path);
    initial.emplace(out.config.initial.make());
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfigError;
    out.error = e.what();
    return out;
  } catch (const std::exception& e) {
    out.exit_code = kExitConfigError;
    out.error = "solver.initial: " + std::string(e.what());
    return out;
  }
  const RunConfig& cfg = out.config;
  out.directory = output_root() / cfg.output_dir;
  const std::string started = utc_now();
  out.trace = run(cfg.solver, *initial, cfg.field.make());
  const std::string finished = utc_now();

  std::filesystem::create_directories(out.directory);
  std::vector<std::string> files;
  {
    std::ofstream os(out.directory / "trace.csv");
    write_trace_csv(os, out.trace);
    files.emplace_back("trace.csv");
  }
  for (const auto& [k, vertices] : out.trace.snapshots) {
    const std::string name = "interface_" + std::to_string(k) + ".gp";
    write_interface(out.directory / name, vertices);
    files.push_back(name);
  }
  const int last = out.trace.iterations();
  const std::string final_name = "interface_" + std::to_string(last) + ".gp";
  if (std::find(files.begin(), files.end(), final_name) == files.end()) {
    write_interface(out.directory / final_name, out.trace.final_shape);
    files.push_back(final_name);
  }
  files.emplace_back("manifest.json");

  Json manifest;
  manifest["software"] = {{"name", "shapenewton"}, {"version", kVersion}};
  manifest["config"] = config_echo(cfg);
  manifest["started"] = started;
  manifest["finished"] = finished;
  manifest["files"] = files;
  manifest["final_interface"] = final_name;
  manifest["summary"] = summary_of(cfg, out.trace);
  std::ofstream(out.directory / "manifest.json") << manifest.dump(2) << '\n';

  if (out.trace.stop == StopReason::SolverError) {
    out.exit_code = kExitSolverFailure;
    out.error = out.trace.message;
  }
  return out;
}

int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  RunOutcome r;
  try {
    r = execute_run(config_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  if (r.exit_code == kExitConfigError) {
    err << "config error: " << r.error << '\n';
    return r.exit_code;
  }
  const IterationRecord* last = r.trace.records.empty() ? nullptr : &r.trace.records.back();
  out << r.config.name << ": " << to_string(r.config.solver.method) << " on " << r.config.field.name() << ", "
      << to_string(r.trace.stop) << " after " << r.trace.iterations() << " iterations";
  if (last != nullptr) {
    out << ", J=" << num(last->J) << " Linf_L=" << num(last->Linf_L) << " Linf_f_points=" << num(last->Linf_f_points);
  }
  out << "\n  output: " << r.directory.string() << '\n';
  if (!r.trace.message.empty()) out << "  " << r.trace.message << '\n';
  if (r.exit_code == kExitSolverFailure) err << "solver failure: " << r.error << '\n';
  return r.exit_code;
}

int cmd_compare(const std::vector<std::filesystem::path>& configs, std::ostream& out, std::ostream& err) {
  if (configs.size() < 2) {
    err << "usage: compare <config> <config> [more configs...]\n";
    return kExitConfigError;
  }
  const std::filesystem::path root = output_root();
  std::filesystem::create_directories(root);
  std::ofstream csv(root / "compare.csv");
  const char* header = "config,method,test,status,iterations,J,Linf_L,L2sq_f_bnd,Linf_f_points,stop\n";
  csv << header;
  out << header;
  bool failed = false;
  for (const auto& path : configs) {
    RunOutcome r;
    try {
      r = execute_run(path);
    } catch (const std::exception& e) {
      r.exit_code = kExitSolverFailure;
      r.error = e.what();
    }
    std::string row = path.stem().string() + ',';
    if (r.exit_code == kExitConfigError || r.trace.records.empty()) {
      row += ",,FAILED,,,,,,";
      failed = true;
      err << path.string() << ": " << r.error << '\n';
    } else {
      const IterationRecord& last = r.trace.records.back();
      const bool ok = r.exit_code == kExitOk;
      failed = failed || !ok;
      row += std::string(to_string(r.config.solver.method)) + ',' + r.config.field.name() + ',' +
             (ok ? "ok" : "FAILED") + ',' + std::to_string(r.trace.iterations()) + ',' + num(last.J) + ',' +
             num(last.Linf_L) + ',' + num(last.L2sq_f_bnd) + ',' + num(last.Linf_f_points) + ',' +
             to_string(r.trace.stop);
      if (!ok) err << path.string() << ": " << r.error << '\n';
    }
    csv << row << '\n';
    out << row << '\n';
  }
  out << "table: " << (root / "compare.csv").string() << '\n';
  return failed ? kExitSolverFailure : kExitOk;
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream&) {
  const std::vector<CheckResult> results = run_verify_suite(opts);
  bool all = true;
  for (const CheckResult& r : results) {
    out << format_check(r) << '\n';
    all = all && r.pass;
  }
  const std::filesystem::path dir = output_root() / "verify";
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "verify.csv");
  write_diagnostics_csv(csv, results);
  out << "diagnostics: " << (dir / "verify.csv").string() << '\n';
  return all ? kExitOk : kExitSolverFailure;
}

}  // namespace shapenewton
