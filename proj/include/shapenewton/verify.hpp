#pragma once

#include "shapenewton/fields.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace shapenewton {

/// One row of a diagnostic report.
struct DiagnosticRow {
  std::string operation;
  std::string parameters;
  double lhs = 0;
  double rhs = 0;
  double residual = 0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  std::vector<DiagnosticRow> rows;
};

struct VerifyOptions {
  BuiltinField field = BuiltinField::Test1;
  double sigma_scale = 1.0;  // multiplies every kernel width used by the checks
  std::uint64_t seed = 12345;
  int fd_fields = 20;
  int decomposition_pairs = 10;
};

ScalarField verify_field(const VerifyOptions& opts);

/// Load entries against central differences of the pulled-back functional:
/// observed order >= 1.9 under t-halving.
CheckResult check_load_order(const VerifyOptions& opts);
/// First shape Hessian entries against mixed central differences, 1e-2 relative.
CheckResult check_hessian_fd(const VerifyOptions& opts);
/// Residual of D2J(X)(Y) = H1(X)(Y) + DJ(dX Y) decays with order >= 1 under t-halving.
CheckResult check_decomposition_order(const VerifyOptions& opts);
/// |H1 - H2|_F / |H1|_F at sigma and sigma / 2 on a stationary Test1 polygon:
/// strict decrease and both matrices positive definite. sigma is the
/// NewtonH2 width 1.6 d^2 times sigma_scale.
CheckResult check_hessian_agreement(const VerifyOptions& opts);
/// With f = 1 the domain load equals the boundary flux of each basis field.
CheckResult check_divergence_identity(const VerifyOptions& opts);

CheckResult check_h1_symmetry(const VerifyOptions& opts);
CheckResult check_sparsity(const VerifyOptions& opts);
CheckResult check_gram_positive(const VerifyOptions& opts);
CheckResult check_tangential_smallness(const VerifyOptions& opts);
CheckResult check_frame_convergence(const VerifyOptions& opts);
CheckResult check_determinism(const VerifyOptions& opts);

/// The full suite in a fixed order.
std::vector<CheckResult> run_verify_suite(const VerifyOptions& opts);

/// "PASS name: detail" or "FAIL name: detail".
std::string format_check(const CheckResult& r);
/// CSV with header operation,parameters,lhs,rhs,residual.
void write_diagnostics_csv(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace shapenewton
