#pragma once

#include "shapenewton/config.hpp"
#include "shapenewton/optimize.hpp"
#include "shapenewton/verify.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace shapenewton {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kExitOk = 0, kExitSolverFailure = 1, kExitConfigError = 2 };

/// $SHAPENEWTON_OUT if set, otherwise ./out.
std::filesystem::path output_root();

/// Column order is fixed: iter, J, absX, ratio_absX, Linf_L, L2sq_f_bnd,
/// Linf_f_points, n_points, sigma.
void write_trace_csv(std::ostream& os, const RunTrace& trace);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string error;  // set for config and solver failures
  RunConfig config;
  RunTrace trace;
  std::filesystem::path directory;
};

/// Loads the config, runs the solver and writes trace.csv, interface_<k>.gp
/// and manifest.json into output_root() / output_dir.
RunOutcome execute_run(const std::filesystem::path& config_path);

int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
/// Runs every config and writes output_root() / compare.csv. Exit 1 if any row
/// FAILED, 2 on a usage error (fewer than two configs).
int cmd_compare(const std::vector<std::filesystem::path>& configs, std::ostream& out, std::ostream& err);
/// Runs the diagnostic suite, prints PASS/FAIL lines and writes
/// output_root() / verify / verify.csv. Exit 0 iff every check passes.
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace shapenewton
