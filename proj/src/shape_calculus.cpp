#include "shapenewton/shape_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shapenewton {

namespace {

std::vector<Vec2> anchors_of(const std::vector<BasisField>& basis) {
  std::vector<Vec2> out;
  out.reserve(basis.size());
  for (const auto& b : basis) out.push_back(b.anchor);
  return out;
}

// Per quadrature point values of the basis fields that touch it.
struct LocalBasis {
  int index;
  Vec2 value;
  Mat2 jacobian;
};

void eval_touching(const std::vector<BasisField>& basis, const std::vector<int>& touching, const Vec2& y,
                   std::vector<LocalBasis>& out) {
  out.clear();
  for (int a : touching) {
    const BasisField& b = basis[static_cast<std::size_t>(a)];
    const double k = b.kernel.value(b.anchor, y);
    const Vec2 g = b.kernel.grad(b.anchor, y);
    if (k == 0.0 && g.isZero(0.0)) continue;
    out.push_back({a, k * b.normal, b.normal * g.transpose()});
  }
}

double frobenius_dot(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

double spectral_norm(const Mat2& m) {
  // Largest singular value of a 2x2 matrix in closed form.
  const double f = m.squaredNorm();
  const double d = m.determinant();
  const double disc = std::max(0.0, f * f - 4.0 * d * d);
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

}  // namespace

ShapeDiscretization::ShapeDiscretization(PolygonalShape shape, std::vector<BasisField> basis,
                                         const AssemblyOptions& opts)
    : shape_(std::move(shape)), frame_(build_frame(shape_)), basis_(std::move(basis)), opts_(opts) {
  if (basis_.empty()) throw std::invalid_argument("empty basis");
  sigma_ = basis_.front().radius();
  for (const auto& b : basis_) {
    if (b.radius() != sigma_) throw std::invalid_argument("basis fields must share one kernel width");
  }
  build();
}

ShapeDiscretization::ShapeDiscretization(PolygonalShape shape, double sigma, const AssemblyOptions& opts)
    : shape_(std::move(shape)), frame_(build_frame(shape_)), opts_(opts), sigma_(sigma) {
  basis_ = make_basis(shape_, frame_, sigma);
  build();
}

void ShapeDiscretization::build() {
  const std::vector<Vec2> anchors = anchors_of(basis_);
  mesh_ = build_support_mesh(shape_, anchors, sigma_, opts_.refinement);
  boundary_ = build_boundary_quadrature(shape_, frame_, anchors, sigma_, opts_.boundary_nodes,
                                        opts_.boundary_piece_factor);
}

const char* to_string(HessianKind kind) {
  switch (kind) {
    case HessianKind::H1:
      return "H1";
    case HessianKind::H2:
      return "H2";
    case HessianKind::MetricH1ring:
      return "MetricH1ring";
    case HessianKind::Identity:
      return "Identity";
  }
  return "?";
}

double eval_J(const PolygonalShape& shape, const ScalarField& field) {
  return integrate_domain(triangulate(shape), [&](const Vec2& x) { return field.value(x); },
                          TriangleRule::degree6());
}

double eval_J(const ShapeDiscretization& disc, const ScalarField& field) {
  return integrate_domain(disc.mesh().domain, [&](const Vec2& x) { return field.value(x); }, *disc.options().rule);
}

Eigen::VectorXd assemble_load(const ShapeDiscretization& disc, const ScalarField& field) {
  const auto& mesh = disc.mesh();
  const auto& basis = disc.basis();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  std::vector<LocalBasis> local;
  for (std::size_t t = 0; t < mesh.domain.size(); ++t) {
    if (mesh.touching[t].empty()) continue;
    for_each_point(mesh.domain, t, *disc.options().rule, [&](const Vec2& y, double w) {
      eval_touching(basis, mesh.touching[t], y, local);
      if (local.empty()) return;
      const double f = field.value(y);
      const Vec2 df = field.grad(y);
      for (const auto& v : local) load[v.index] += w * (df.dot(v.value) + f * v.jacobian.trace());
    });
  }
  return load;
}

Eigen::VectorXd assemble_load_boundary(const ShapeDiscretization& disc, const ScalarField& field) {
  const auto& basis = disc.basis();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& node : disc.boundary()) {
    if (node.touching.empty()) continue;
    const double f = field.value(node.point);
    for (int a : node.touching) {
      const BasisField& b = basis[static_cast<std::size_t>(a)];
      load[a] += node.weight * f * b.value(node.point).dot(node.normal);
    }
  }
  return load;
}

double h1_integrand(double f, const Vec2& grad_f, const Mat2& hess_f, const Vec2& x, const Mat2& dx, const Vec2& y,
                    const Mat2& dy) {
  // T1(X) = (f div X + grad f . X) I - f dX^T,  T0(X) = hess f X + div X grad f.
  const double div_x = dx.trace();
  const Mat2 t1 = (f * div_x + grad_f.dot(x)) * Mat2::Identity() - f * dx.transpose();
  const Vec2 t0 = hess_f * x + div_x * grad_f;
  return frobenius_dot(t1, dy) + t0.dot(y);
}

HessianSystem assemble_H1(const ShapeDiscretization& disc, const ScalarField& field) {
  const auto& mesh = disc.mesh();
  const auto& basis = disc.basis();
  const auto n = static_cast<Eigen::Index>(basis.size());
  HessianSystem sys;
  sys.kind = HessianKind::H1;
  sys.sigma = disc.sigma();
  sys.anchors = anchors_of(basis);
  sys.matrix = Eigen::MatrixXd::Zero(n, n);
  sys.load = Eigen::VectorXd::Zero(n);

  std::vector<LocalBasis> local;
  std::vector<Mat2> t1;
  std::vector<Vec2> t0;
  for (std::size_t t = 0; t < mesh.domain.size(); ++t) {
    if (mesh.touching[t].empty()) continue;
    for_each_point(mesh.domain, t, *disc.options().rule, [&](const Vec2& y, double w) {
      eval_touching(basis, mesh.touching[t], y, local);
      if (local.empty()) return;
      const double f = field.value(y);
      const Vec2 df = field.grad(y);
      const Mat2 hf = field.hess(y);
      t1.resize(local.size());
      t0.resize(local.size());
      for (std::size_t a = 0; a < local.size(); ++a) {
        const double div = local[a].jacobian.trace();
        t1[a] = (f * div + df.dot(local[a].value)) * Mat2::Identity() - f * local[a].jacobian.transpose();
        t0[a] = hf * local[a].value + div * df;
        sys.load[local[a].index] += w * (df.dot(local[a].value) + f * div);
      }
      for (std::size_t a = 0; a < local.size(); ++a) {
        for (std::size_t b = 0; b < local.size(); ++b) {
          sys.matrix(local[a].index, local[b].index) +=
              w * (frobenius_dot(t1[a], local[b].jacobian) + t0[a].dot(local[b].value));
        }
      }
    });
  }
  return sys;
}

HessianSystem assemble_H2(const ShapeDiscretization& disc, const ScalarField& field) {
  const auto& basis = disc.basis();
  const auto& frame = disc.frame();
  const auto& shape = disc.shape();
  const auto n = static_cast<Eigen::Index>(basis.size());
  HessianSystem sys;
  sys.kind = HessianKind::H2;
  sys.sigma = disc.sigma();
  sys.anchors = anchors_of(basis);
  sys.matrix = Eigen::MatrixXd::Zero(n, n);
  sys.load = assemble_load(disc, field);

  std::vector<std::pair<int, double>> normal_parts;
  // Upper triangle plus mirror keeps the matrix exactly symmetric.
  auto add = [&](double weight) {
    for (std::size_t p = 0; p < normal_parts.size(); ++p) {
      for (std::size_t q = p; q < normal_parts.size(); ++q) {
        const auto [i, vi] = normal_parts[p];
        const auto [j, vj] = normal_parts[q];
        const double c = weight * vi * vj;
        sys.matrix(i, j) += c;
        if (i != j) sys.matrix(j, i) += c;
      }
    }
  };
  for (const auto& node : disc.boundary()) {
    if (node.touching.empty()) continue;
    const double kappa = (1.0 - node.t) * frame.curvature[node.edge] + node.t * frame.curvature[shape.next(node.edge)];
    const double weight = field.grad(node.point).dot(node.normal) + kappa * field.value(node.point);
    normal_parts.clear();
    for (int a : node.touching) {
      const double vn = basis[static_cast<std::size_t>(a)].value(node.point).dot(node.normal);
      if (vn != 0.0) normal_parts.emplace_back(a, vn);
    }
    add(node.weight * weight);
  }
  return sys;
}

HessianSystem assemble_metric_h1ring(const ShapeDiscretization& disc) {
  const auto& basis = disc.basis();
  const auto& frame = disc.frame();
  const auto n = static_cast<Eigen::Index>(basis.size());
  HessianSystem sys;
  sys.kind = HessianKind::MetricH1ring;
  sys.sigma = disc.sigma();
  sys.anchors = anchors_of(basis);
  sys.matrix = Eigen::MatrixXd::Zero(n, n);
  sys.load = Eigen::VectorXd::Zero(n);

  struct Part {
    int index;
    double value;
    double tangential;
  };
  std::vector<Part> parts;
  for (const auto& node : disc.boundary()) {
    if (node.touching.empty()) continue;
    const Vec2& tau = frame.edge_tangents[node.edge];
    parts.clear();
    for (int a : node.touching) {
      const BasisField& b = basis[static_cast<std::size_t>(a)];
      const double c = b.normal.dot(node.normal);
      const double s = b.kernel.value(b.anchor, node.point) * c;
      const double ds = b.kernel.grad(b.anchor, node.point).dot(tau) * c;
      if (s != 0.0 || ds != 0.0) parts.push_back({a, s, ds});
    }
    for (std::size_t p = 0; p < parts.size(); ++p) {
      for (std::size_t q = p; q < parts.size(); ++q) {
        const double c = node.weight * (parts[p].tangential * parts[q].tangential + parts[p].value * parts[q].value);
        sys.matrix(parts[p].index, parts[q].index) += c;
        if (p != q) sys.matrix(parts[q].index, parts[p].index) += c;
      }
    }
  }
  return sys;
}

HessianSystem identity_system(const ShapeDiscretization& disc, const ScalarField& field) {
  HessianSystem sys;
  sys.kind = HessianKind::Identity;
  sys.sigma = disc.sigma();
  sys.anchors = anchors_of(disc.basis());
  const auto n = static_cast<Eigen::Index>(disc.basis().size());
  sys.matrix = Eigen::MatrixXd::Identity(n, n);
  sys.load = assemble_load(disc, field);
  return sys;
}

// ---------------------------------------------------------------------------

FieldQuadrature::FieldQuadrature(const PolygonalShape& shape, const std::vector<const VectorField*>& fields,
                                 const AssemblyOptions& opts)
    : rule_(opts.rule) {
  std::vector<Vec2> centers;
  double radius = 0;
  for (const VectorField* x : fields) {
    for (const auto& [c, r] : x->support) {
      if (r <= 0) continue;
      centers.push_back(c);
      radius = std::max(radius, r);
    }
  }
  TriangulatedDomain coarse = triangulate(shape);
  domain_ = centers.empty() ? std::move(coarse) : refine_near_supports(coarse, centers, radius, opts.refinement);
}

FieldQuadrature::FieldQuadrature(TriangulatedDomain domain, const TriangleRule& rule)
    : domain_(std::move(domain)), rule_(&rule) {}

double FieldQuadrature::deformed_J(const ScalarField& f, const VectorField& x, double t, const VectorField* y,
                                   double s) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        Vec2 moved = p + t * x.value(p);
        Mat2 jac = Mat2::Identity() + t * x.jacobian(p);
        if (y != nullptr && s != 0.0) {
          moved += s * y->value(p);
          jac += s * y->jacobian(p);
        }
        return f.value(moved) * jac.determinant();
      },
      *rule_);
}

double FieldQuadrature::shape_derivative(const ScalarField& f, const VectorField& x) const {
  return integrate_domain(
      domain_, [&](const Vec2& p) { return f.grad(p).dot(x.value(p)) + f.value(p) * x.jacobian(p).trace(); },
      *rule_);
}

double FieldQuadrature::deformed_shape_derivative(const ScalarField& f, const VectorField& x, const VectorField& y,
                                                  double s) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        const Vec2 q = p + s * y.value(p);
        const double det = (Mat2::Identity() + s * y.jacobian(p)).determinant();
        return (f.grad(q).dot(x.value(q)) + f.value(q) * x.jacobian(q).trace()) * det;
      },
      *rule_);
}

double FieldQuadrature::shape_hessian(const ScalarField& f, const VectorField& x, const VectorField& y) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        return h1_integrand(f.value(p), f.grad(p), f.hess(p), x.value(p), x.jacobian(p), y.value(p), y.jacobian(p));
      },
      *rule_);
}

double FieldQuadrature::derivative_along_jacobian(const ScalarField& f, const VectorField& x,
                                                  const VectorField& y) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        const Mat2 dx = x.jacobian(p);
        const Mat2 dy = y.jacobian(p);
        const Vec2 z = dx * y.value(p);
        const double div_z = x.grad_divergence(p).dot(y.value(p)) + (dx * dy).trace();
        return f.grad(p).dot(z) + f.value(p) * div_z;
      },
      *rule_);
}

double FieldQuadrature::first_difference(const ScalarField& f, const VectorField& x, double t) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        const Vec2 v = x.value(p);
        const Mat2 dv = x.jacobian(p);
        const double plus = f.value(p + t * v) * (Mat2::Identity() + t * dv).determinant();
        const double minus = f.value(p - t * v) * (Mat2::Identity() - t * dv).determinant();
        return (plus - minus) / (2 * t);
      },
      *rule_);
}

double FieldQuadrature::mixed_difference(const ScalarField& f, const VectorField& x, const VectorField& y,
                                         double t) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        const Vec2 vx = x.value(p);
        const Vec2 vy = y.value(p);
        const Mat2 dx = x.jacobian(p);
        const Mat2 dy = y.jacobian(p);
        auto at = [&](double a, double b) {
          return f.value(p + a * vx + b * vy) * (Mat2::Identity() + a * dx + b * dy).determinant();
        };
        return (at(t, t) - at(t, -t) - at(-t, t) + at(-t, -t)) / (4 * t * t);
      },
      *rule_);
}

double FieldQuadrature::derivative_difference(const ScalarField& f, const VectorField& x, const VectorField& y,
                                              double t) const {
  return integrate_domain(
      domain_,
      [&](const Vec2& p) {
        const Vec2 vy = y.value(p);
        const Mat2 dy = y.jacobian(p);
        auto at = [&](double s) {
          const Vec2 q = p + s * vy;
          const double det = (Mat2::Identity() + s * dy).determinant();
          return (f.grad(q).dot(x.value(q)) + f.value(q) * x.jacobian(q).trace()) * det;
        };
        return (at(t) - at(-t)) / (2 * t);
      },
      *rule_);
}

double fd_first_derivative(const PolygonalShape& shape, const ScalarField& field, const VectorField& x, double t,
                           DeformationMode mode, const AssemblyOptions& opts) {
  if (mode == DeformationMode::Pullback) return FieldQuadrature(shape, {&x}, opts).first_difference(field, x, t);
  auto moved = [&](double h) {
    std::vector<Vec2> d(shape.size());
    for (std::size_t i = 0; i < shape.size(); ++i) d[i] = h * x.value(shape[i]);
    return shape.displaced(d);
  };
  return (eval_J(moved(t), field) - eval_J(moved(-t), field)) / (2 * t);
}

double fd_mixed_second(const PolygonalShape& shape, const ScalarField& field, const VectorField& x,
                       const VectorField& y, double t, const AssemblyOptions& opts) {
  return FieldQuadrature(shape, {&x, &y}, opts).mixed_difference(field, x, y, t);
}

DecompositionReport check_decomposition(const FieldQuadrature& quad, const ScalarField& field, const VectorField& x,
                                        const VectorField& y, double t) {
  DecompositionReport r;
  r.lhs = quad.derivative_difference(field, x, y, t);
  r.hessian = quad.shape_hessian(field, x, y);
  r.jacobian_term = quad.derivative_along_jacobian(field, x, y);
  r.rhs = r.hessian + r.jacobian_term;
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

DecompositionReport check_decomposition(const PolygonalShape& shape, const ScalarField& field, const VectorField& x,
                                        const VectorField& y, double t, const AssemblyOptions& opts) {
  return check_decomposition(FieldQuadrature(shape, {&x, &y}, opts), field, x, y, t);
}

// ---------------------------------------------------------------------------

FieldNorms sample_norms(const BasisCombination& g, double spacing_factor) {
  FieldNorms norms;
  const auto& basis = g.basis();
  const auto& coef = g.coefficients();
  for (std::size_t l = 0; l < basis.size(); ++l) {
    if (coef[l] == 0.0) continue;
    const double sigma = basis[l].radius();
    // Only fields whose support meets this disk contribute on it.
    std::vector<std::size_t> near;
    for (std::size_t m = 0; m < basis.size(); ++m) {
      if (coef[m] != 0.0 && (basis[m].anchor - basis[l].anchor).norm() < sigma + basis[m].radius()) near.push_back(m);
    }
    const double h = sigma * spacing_factor;
    const int steps = static_cast<int>(std::ceil(sigma / h));
    for (int i = -steps; i <= steps; ++i) {
      for (int j = -steps; j <= steps; ++j) {
        const Vec2 offset(i * h, j * h);
        if (offset.norm() > sigma) continue;
        const Vec2 y = basis[l].anchor + offset;
        Vec2 v = Vec2::Zero();
        Mat2 jac = Mat2::Zero();
        for (std::size_t m : near) {
          v += coef[m] * basis[m].value(y);
          jac += coef[m] * basis[m].jacobian(y);
        }
        norms.sup = std::max(norms.sup, v.norm());
        norms.jacobian = std::max(norms.jacobian, spectral_norm(jac));
      }
    }
  }
  return norms;
}

MetricBound metric_step_bound(const FieldNorms& norms) {
  MetricBound b;
  b.proxy = norms.c1();
  b.simplified = b.proxy < 0.5 ? 5.0 * b.proxy : std::numeric_limits<double>::quiet_NaN();
  if (!(b.proxy < 1.0)) {
    b.defined = false;
    b.q = std::numeric_limits<double>::quiet_NaN();
    b.bound = std::numeric_limits<double>::quiet_NaN();
    return b;
  }
  b.defined = true;
  b.q = b.proxy < 0.5 ? 0.5 : 0.5 * (1.0 + b.proxy);
  b.bound = norms.c1() + norms.sup + norms.jacobian * (norms.jacobian + 1.0) / (1.0 - b.q);
  return b;
}

void MetricDiagnostics::add_step(const MetricBound& step, double ratio) {
  if (steps_ == 0) first_proxy_ = step.proxy;
  ++steps_;
  per_step_ = step.bound;
  if (step.defined) cumulative_ += step.bound;
  if (std::isfinite(ratio)) alpha_ = std::max(alpha_, ratio);
}

double MetricDiagnostics::q() const { return alpha_ * first_proxy_; }

double MetricDiagnostics::apriori_bound() const {
  const double qq = q();
  if (steps_ == 0 || !(qq < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return 5.0 * std::pow(qq, steps_) / (1.0 - qq);
}

}  // namespace shapenewton
