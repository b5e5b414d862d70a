#pragma once

#include "shapenewton/fields.hpp"
#include "shapenewton/geometry.hpp"
#include "shapenewton/shape_calculus.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shapenewton {

enum class Method { NewtonH1, NewtonH2, NewtonRiemann, GradEuclid, GradH1ring, GradL2 };

std::optional<Method> parse_method(std::string_view name);
const char* to_string(Method m);
/// True for methods whose step is a combination of kernel basis fields.
bool uses_basis(Method m);
bool is_gradient(Method m);

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  Method method = Method::NewtonH1;
  double gamma_sigma = 0.5;     // sigma_k = gamma_sigma * d_k^sigma_exponent
  double sigma_exponent = 2.0;
  double step_size = 1.0;       // gradient methods only
  int max_iter = 40;
  bool accept_test = true;
  double accept_gamma = 1e-12;  // sufficient decrease relative to the first step
  double accept_tol = 1e-6;     // increases of J below accept_tol * |first decrease| are tolerated
  double resample_spacing = 0;  // 0: initial perimeter / initial point count
  double resample_ratio = 1.5;  // resample when max gap / min gap exceeds this
  double grad_tol = 1e-8;       // stop when |L|_inf <= grad_tol
  double point_tol = 1e-14;     // pointwise methods: stop when max |f(x_i)| <= point_tol
  double stall_tol = 1e-9;      // gradient methods: stop when |J_k - J_{k+1}| <= stall_tol
  double max_condition = 1e12;
  AssemblyOptions assembly;
  std::vector<int> snapshots{0, 1, 2, 3, 4, 5};
  bool metric_diagnostics = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double J = 0;
  double absX = 0;        // Euclidean norm of the step coefficients
  double ratio_absX = 0;  // |X_k| / |X_{k-1}|, NaN at k = 0
  double Linf_L = 0;
  double L2sq_f_bnd = 0;
  double Linf_f_points = 0;
  int n_points = 0;
  double sigma = 0;
  double condition = 0;   // reciprocal-condition based estimate of the solved system, NaN if none
  bool resampled = false;
  double transport_gap = 0;  // max angle between transported and rebuilt normals, NaN if not applicable
  double metric_step = 0;
  double metric_cumulative = 0;
  double metric_apriori = 0;
};

enum class StopReason { Converged, MaxIterations, InsufficientDecrease, Stalled, SolverError };

const char* to_string(StopReason r);

struct RunTrace {
  std::vector<IterationRecord> records;
  std::vector<std::pair<int, std::vector<Vec2>>> snapshots;
  std::vector<Vec2> final_shape;
  StopReason stop = StopReason::MaxIterations;
  std::string message;

  int iterations() const { return records.empty() ? 0 : records.back().iter; }
};

struct StepResult {
  Eigen::VectorXd coefficients;
  std::vector<Vec2> displacement;  // per vertex
  BasisCombination field;          // empty for pointwise methods
  double condition = 0;
};

StepResult newton_step(const ShapeDiscretization& disc, const ScalarField& field, HessianKind kind,
                       double max_condition = 1e12);
StepResult newton_step(const HessianSystem& sys, const std::vector<BasisField>& basis,
                       std::span<const Vec2> vertices, double max_condition = 1e12);
/// Moves each vertex by -f / (grad f . nu) nu.
StepResult riemann_newton_step(const PolygonalShape& shape, const BoundaryFrame& frame, const ScalarField& field);
StepResult gradient_step(const ShapeDiscretization& disc, const ScalarField& field, Method method, double step);

double kernel_width(const SolverConfig& config, const PolygonalShape& shape);

RunTrace run(const SolverConfig& config, const PolygonalShape& initial, const ScalarField& field);

}  // namespace shapenewton
