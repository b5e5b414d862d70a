#include "shapenewton/optimize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace shapenewton {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string sigma_text(double sigma) {
  std::ostringstream os;
  os.precision(6);
  os << sigma;
  return os.str();
}

std::vector<Vec2> evaluate_at(const BasisCombination& g, std::span<const Vec2> points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(g.value(p));
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::NewtonH1, Method::NewtonH2, Method::NewtonRiemann, Method::GradEuclid, Method::GradH1ring,
                   Method::GradL2}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

const char* to_string(Method m) {
  switch (m) {
    case Method::NewtonH1:
      return "NewtonH1";
    case Method::NewtonH2:
      return "NewtonH2";
    case Method::NewtonRiemann:
      return "NewtonRiemann";
    case Method::GradEuclid:
      return "GradEuclid";
    case Method::GradH1ring:
      return "GradH1ring";
    case Method::GradL2:
      return "GradL2";
  }
  return "?";
}

bool uses_basis(Method m) { return m != Method::NewtonRiemann && m != Method::GradL2; }

bool is_gradient(Method m) { return m == Method::GradEuclid || m == Method::GradH1ring || m == Method::GradL2; }

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged:
      return "converged";
    case StopReason::MaxIterations:
      return "max_iterations";
    case StopReason::InsufficientDecrease:
      return "insufficient_decrease";
    case StopReason::Stalled:
      return "stalled";
    case StopReason::SolverError:
      return "solver_error";
  }
  return "?";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(gamma_sigma > 0)) fail("solver.gamma_sigma must be positive");
  if (!(sigma_exponent > 0)) fail("solver.sigma_exponent must be positive");
  if (is_gradient(method) && !(step_size > 0)) fail("solver.step_size must be positive for gradient methods");
  if (max_iter < 1) fail("solver.max_iter must be at least 1");
  if (!(accept_gamma > 0)) fail("solver.accept_gamma must be positive");
  if (!(accept_tol >= 0)) fail("solver.accept_tol must be nonnegative");
  if (resample_spacing < 0) fail("solver.resample_spacing must be nonnegative");
  if (!(resample_ratio > 1)) fail("solver.resample_ratio must exceed 1");
  if (!(grad_tol >= 0)) fail("solver.grad_tol must be nonnegative");
  if (!(point_tol >= 0)) fail("solver.point_tol must be nonnegative");
  if (!(stall_tol >= 0)) fail("solver.stall_tol must be nonnegative");
}

StepResult newton_step(const HessianSystem& sys, const std::vector<BasisField>& basis, std::span<const Vec2> vertices,
                       double max_condition) {
  StepResult out;
  if (sys.load.isZero(0.0)) {
    out.coefficients = Eigen::VectorXd::Zero(sys.load.size());
    out.condition = kNaN;
  } else {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
    const double rcond = lu.rcond();
    out.condition = rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(out.condition <= max_condition)) {
      throw SingularSystemError(std::string(to_string(sys.kind)) + " system is singular or ill-conditioned (condition " +
                                sigma_text(out.condition) + ") at sigma = " + sigma_text(sys.sigma));
    }
    out.coefficients = lu.solve(-sys.load);
  }
  out.field = BasisCombination(basis, to_std(out.coefficients));
  out.displacement = evaluate_at(out.field, vertices);
  return out;
}

StepResult newton_step(const ShapeDiscretization& disc, const ScalarField& field, HessianKind kind,
                       double max_condition) {
  HessianSystem sys;
  switch (kind) {
    case HessianKind::H1:
      sys = assemble_H1(disc, field);
      break;
    case HessianKind::H2:
      sys = assemble_H2(disc, field);
      break;
    case HessianKind::MetricH1ring:
      sys = assemble_metric_h1ring(disc);
      sys.load = assemble_load(disc, field);
      break;
    case HessianKind::Identity:
      sys = identity_system(disc, field);
      break;
  }
  return newton_step(sys, disc.basis(), disc.shape().vertices(), max_condition);
}

StepResult riemann_newton_step(const PolygonalShape& shape, const BoundaryFrame& frame, const ScalarField& field) {
  StepResult out;
  out.coefficients.resize(static_cast<Eigen::Index>(shape.size()));
  out.displacement.resize(shape.size());
  out.condition = kNaN;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const Vec2& nu = frame.vertex_normals[i];
    const double dn = field.grad(shape[i]).dot(nu);
    if (!(std::abs(dn) > 1e-12)) {
      throw SingularSystemError("normal derivative of f vanishes at vertex " + std::to_string(i) +
                                "; Newton direction undefined");
    }
    const double c = -field.value(shape[i]) / dn;
    out.coefficients[static_cast<Eigen::Index>(i)] = c;
    out.displacement[i] = c * nu;
  }
  return out;
}

StepResult gradient_step(const ShapeDiscretization& disc, const ScalarField& field, Method method, double step) {
  const auto& shape = disc.shape();
  switch (method) {
    case Method::GradEuclid: {
      HessianSystem sys = identity_system(disc, field);
      sys.load *= step;
      return newton_step(sys, disc.basis(), shape.vertices(), std::numeric_limits<double>::infinity());
    }
    case Method::GradH1ring: {
      const HessianSystem metric = assemble_metric_h1ring(disc);
      const Eigen::LLT<Eigen::MatrixXd> llt(metric.matrix);
      if (llt.info() != Eigen::Success) {
        throw SingularSystemError("MetricH1ring matrix is not positive definite at sigma = " +
                                  sigma_text(disc.sigma()) + ": anchors too sparse for the kernel width");
      }
      StepResult out;
      out.coefficients = llt.solve(-step * assemble_load(disc, field));
      out.condition = kNaN;
      out.field = BasisCombination(disc.basis(), to_std(out.coefficients));
      out.displacement = evaluate_at(out.field, shape.vertices());
      return out;
    }
    case Method::GradL2: {
      StepResult out;
      out.coefficients.resize(static_cast<Eigen::Index>(shape.size()));
      out.displacement.resize(shape.size());
      out.condition = kNaN;
      for (std::size_t i = 0; i < shape.size(); ++i) {
        const double c = -step * field.value(shape[i]);
        out.coefficients[static_cast<Eigen::Index>(i)] = c;
        out.displacement[i] = c * disc.frame().vertex_normals[i];
      }
      return out;
    }
    default:
      throw std::invalid_argument(std::string(to_string(method)) + " is not a gradient method");
  }
}

double kernel_width(const SolverConfig& config, const PolygonalShape& shape) {
  return config.gamma_sigma * std::pow(shape.max_gap(), config.sigma_exponent);
}

RunTrace run(const SolverConfig& config, const PolygonalShape& initial, const ScalarField& field) {
  config.validate();
  RunTrace trace;
  const double spacing =
      config.resample_spacing > 0 ? config.resample_spacing : initial.perimeter() / static_cast<double>(initial.size());

  PolygonalShape shape = initial;
  MetricDiagnostics metric;
  double prev_absX = kNaN;
  double prev_J = kNaN;
  double first_decrease = kNaN;
  bool resampled = false;
  double transport_gap = kNaN;
  BasisCombination last_field;

  auto snapshot = [&](int k) {
    if (std::find(config.snapshots.begin(), config.snapshots.end(), k) != config.snapshots.end()) {
      trace.snapshots.emplace_back(k, shape.vertices());
    }
  };

  for (int k = 0;; ++k) {
    const double sigma = kernel_width(config, shape);
    IterationRecord rec;
    rec.iter = k;
    rec.n_points = static_cast<int>(shape.size());
    rec.sigma = sigma;
    rec.resampled = resampled;
    rec.transport_gap = transport_gap;
    rec.absX = kNaN;
    rec.ratio_absX = kNaN;
    rec.condition = kNaN;
    rec.metric_step = kNaN;
    rec.metric_cumulative = metric.cumulative_bound();
    rec.metric_apriori = kNaN;
    snapshot(k);

    try {
      const ShapeDiscretization disc(shape, sigma, config.assembly);
      rec.J = eval_J(shape, field);
      rec.L2sq_f_bnd = integrate_boundary(shape, disc.frame(), [&](const Vec2& p, const Vec2&) {
        const double f = field.value(p);
        return f * f;
      });
      rec.Linf_f_points = 0;
      for (const auto& p : shape.vertices()) rec.Linf_f_points = std::max(rec.Linf_f_points, std::abs(field.value(p)));

      HessianSystem sys;
      const bool newton_basis = config.method == Method::NewtonH1 || config.method == Method::NewtonH2;
      if (config.method == Method::NewtonH1) {
        sys = assemble_H1(disc, field);
      } else if (config.method == Method::NewtonH2) {
        sys = assemble_H2(disc, field);
      } else {
        sys.load = assemble_load(disc, field);
      }
      rec.Linf_L = sys.load.lpNorm<Eigen::Infinity>();

      bool converged = false;
      if (uses_basis(config.method)) {
        converged = rec.Linf_L <= config.grad_tol;
      } else {
        converged = rec.Linf_f_points <= config.point_tol;
      }
      const bool stalled = is_gradient(config.method) && k > 0 && std::abs(prev_J - rec.J) <= config.stall_tol;
      if (converged || stalled || k >= config.max_iter) {
        trace.records.push_back(rec);
        trace.stop = converged ? StopReason::Converged : stalled ? StopReason::Stalled : StopReason::MaxIterations;
        break;
      }

      StepResult step;
      if (newton_basis) {
        step = newton_step(sys, disc.basis(), shape.vertices(), config.max_condition);
      } else if (config.method == Method::NewtonRiemann) {
        step = riemann_newton_step(shape, disc.frame(), field);
      } else {
        step = gradient_step(disc, field, config.method, config.step_size);
      }
      rec.condition = step.condition;
      rec.absX = step.coefficients.norm();
      rec.ratio_absX = rec.absX / prev_absX;
      if (!step.field.empty() && config.metric_diagnostics) {
        const MetricBound b = metric_step_bound(sample_norms(step.field));
        metric.add_step(b, rec.ratio_absX);
        rec.metric_step = b.bound;
        rec.metric_cumulative = metric.cumulative_bound();
        rec.metric_apriori = metric.apriori_bound();
      }
      trace.records.push_back(rec);

      PolygonalShape next = shape.displaced(step.displacement);

      // Basis update cross-check: the transported normals against the normals
      // rebuilt from the new polygon.
      transport_gap = kNaN;
      if (!step.field.empty()) {
        const BoundaryFrame next_frame = build_frame(next);
        transport_gap = 0;
        for (std::size_t i = 0; i < disc.basis().size(); ++i) {
          const BasisField& b = disc.basis()[i];
          const BasisField moved = parallel_transport(b, step.displacement[i], step.field.jacobian(b.anchor));
          const double c = std::clamp(moved.normal.dot(next_frame.vertex_normals[i]), -1.0, 1.0);
          transport_gap = std::max(transport_gap, std::acos(c));
        }
      }

      const double next_J = eval_J(next, field);
      const double decrease = rec.J - next_J;
      if (k == 0) {
        first_decrease = decrease;
      } else if (const double required =
                     config.accept_gamma * first_decrease - config.accept_tol * std::abs(first_decrease);
                 config.accept_test && decrease < required) {
        trace.stop = StopReason::InsufficientDecrease;
        std::ostringstream os;
        os.precision(6);
        os << "no sufficient decrease at iteration " << k << ": J decreased by " << decrease << ", required " << required;
        trace.message = os.str();
        break;
      }

      prev_absX = rec.absX;
      prev_J = rec.J;
      shape = std::move(next);
      resampled = false;
      if (shape.max_gap() > config.resample_ratio * shape.min_gap()) {
        shape = resample_uniform(shape, spacing);
        resampled = true;
      }
    } catch (const std::exception& e) {
      // Record what was computed for this iterate before the failure.
      if (trace.records.empty() || trace.records.back().iter != k) trace.records.push_back(rec);
      trace.stop = StopReason::SolverError;
      trace.message = e.what();
      break;
    }
  }
  trace.final_shape = shape.vertices();
  return trace;
}

}  // namespace shapenewton
