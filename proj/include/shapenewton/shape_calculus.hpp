#pragma once

#include "shapenewton/fields.hpp"
#include "shapenewton/geometry.hpp"
#include "shapenewton/quadrature.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace shapenewton {

struct AssemblyOptions {
  RefinementOptions refinement;
  const TriangleRule* rule = &TriangleRule::degree4();
  int boundary_nodes = 4;
  double boundary_piece_factor = 0.25;
};

/// Everything the assembly routines need for one iterate: the shape, its
/// frame, the active basis and the quadrature built around its supports.
class ShapeDiscretization {
 public:
  ShapeDiscretization(PolygonalShape shape, std::vector<BasisField> basis, const AssemblyOptions& opts = {});
  /// Basis anchored at every vertex with kernel width sigma.
  ShapeDiscretization(PolygonalShape shape, double sigma, const AssemblyOptions& opts = {});

  const PolygonalShape& shape() const { return shape_; }
  const BoundaryFrame& frame() const { return frame_; }
  const std::vector<BasisField>& basis() const { return basis_; }
  const SupportMesh& mesh() const { return mesh_; }
  const std::vector<BoundaryNode>& boundary() const { return boundary_; }
  const AssemblyOptions& options() const { return opts_; }
  double sigma() const { return sigma_; }

 private:
  void build();

  PolygonalShape shape_;
  BoundaryFrame frame_;
  std::vector<BasisField> basis_;
  AssemblyOptions opts_;
  double sigma_ = 0;
  SupportMesh mesh_;
  std::vector<BoundaryNode> boundary_;
};

enum class HessianKind { H1, H2, MetricH1ring, Identity };

const char* to_string(HessianKind kind);

struct HessianSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd load;
  HessianKind kind = HessianKind::Identity;
  double sigma = 0;
  std::vector<Vec2> anchors;
};

/// J(Omega) = integral of f over the polygon.
double eval_J(const PolygonalShape& shape, const ScalarField& field);
double eval_J(const ShapeDiscretization& disc, const ScalarField& field);

/// L_i = integral over Omega of grad f . v_i + div(v_i) f.
Eigen::VectorXd assemble_load(const ShapeDiscretization& disc, const ScalarField& field);
/// Boundary form of the load, integral over the boundary of f v_i . nu.
Eigen::VectorXd assemble_load_boundary(const ShapeDiscretization& disc, const ScalarField& field);

/// First shape Hessian, integral over Omega of T1(v_i) : dv_j + T0(v_i) . v_j.
HessianSystem assemble_H1(const ShapeDiscretization& disc, const ScalarField& field);
/// Second shape Hessian, boundary integral of (grad f . nu + kappa f)(v_i . nu)(v_j . nu).
HessianSystem assemble_H2(const ShapeDiscretization& disc, const ScalarField& field);
/// Boundary H1 metric of the normal components.
HessianSystem assemble_metric_h1ring(const ShapeDiscretization& disc);
HessianSystem identity_system(const ShapeDiscretization& disc, const ScalarField& field);

/// Pointwise integrand of the first shape Hessian.
double h1_integrand(double f, const Vec2& grad_f, const Mat2& hess_f, const Vec2& x, const Mat2& dx, const Vec2& y,
                    const Mat2& dy);

// ---------------------------------------------------------------------------
// Finite-difference oracles.

enum class DeformationMode {
  /// J((id + tX) Omega) = integral over Omega of f(x + tX) det(I + t dX).
  Pullback,
  /// Polygon with vertices p + tX(p).
  VertexDisplacement,
};

/// Quadrature on a shape refined around the supports of a set of fields.
class FieldQuadrature {
 public:
  FieldQuadrature(const PolygonalShape& shape, const std::vector<const VectorField*>& fields,
                  const AssemblyOptions& opts = {});
  FieldQuadrature(TriangulatedDomain domain, const TriangleRule& rule);

  /// J((id + tX + sY) Omega) by change of variables.
  double deformed_J(const ScalarField& f, const VectorField& x, double t, const VectorField* y = nullptr,
                    double s = 0.0) const;
  /// DJ(Omega)(X) in domain form.
  double shape_derivative(const ScalarField& f, const VectorField& x) const;
  /// DJ((id + sY) Omega)(X) by change of variables.
  double deformed_shape_derivative(const ScalarField& f, const VectorField& x, const VectorField& y, double s) const;
  /// First shape Hessian evaluated on two fields.
  double shape_hessian(const ScalarField& f, const VectorField& x, const VectorField& y) const;
  /// DJ(Omega)(dX Y), using second derivatives of X for div(dX Y).
  double derivative_along_jacobian(const ScalarField& f, const VectorField& x, const VectorField& y) const;

  // Central differences taken inside the integrand, so that the two deformed
  // integrals never cancel after summation.
  /// (J((id + tX) Omega) - J((id - tX) Omega)) / 2t.
  double first_difference(const ScalarField& f, const VectorField& x, double t) const;
  /// Mixed central difference of (t, s) -> J((id + tX + sY) Omega) with s = t.
  double mixed_difference(const ScalarField& f, const VectorField& x, const VectorField& y, double t) const;
  /// Central difference in s of DJ((id + sY) Omega)(X).
  double derivative_difference(const ScalarField& f, const VectorField& x, const VectorField& y, double t) const;

  const TriangulatedDomain& domain() const { return domain_; }

 private:
  TriangulatedDomain domain_;
  const TriangleRule* rule_;
};

double fd_first_derivative(const PolygonalShape& shape, const ScalarField& field, const VectorField& x, double t,
                           DeformationMode mode = DeformationMode::Pullback, const AssemblyOptions& opts = {});

/// Central mixed difference of (t, s) -> J((id + tX + sY) Omega).
double fd_mixed_second(const PolygonalShape& shape, const ScalarField& field, const VectorField& x,
                       const VectorField& y, double t, const AssemblyOptions& opts = {});

struct DecompositionReport {
  double lhs = 0;       // d/ds DJ((id + sY) Omega)(X) by central differences
  double hessian = 0;   // first shape Hessian part
  double jacobian_term = 0;  // DJ(Omega)(dX Y)
  double rhs = 0;
  double residual = 0;
};

DecompositionReport check_decomposition(const FieldQuadrature& quad, const ScalarField& field, const VectorField& x,
                                        const VectorField& y, double t);
DecompositionReport check_decomposition(const PolygonalShape& shape, const ScalarField& field, const VectorField& x,
                                        const VectorField& y, double t, const AssemblyOptions& opts = {});

// ---------------------------------------------------------------------------
// Metric-distance diagnostics.

struct FieldNorms {
  double sup = 0;       // sampled sup |g|
  double jacobian = 0;  // sampled sup of the spectral norm of dg

  double c1() const { return sup + jacobian; }
};

/// Samples |g| and |dg| on a grid of spacing sigma * spacing_factor over each
/// support disk.
FieldNorms sample_norms(const BasisCombination& g, double spacing_factor = 0.125);

struct MetricBound {
  bool defined = false;
  double proxy = 0;       // C1 norm proxy
  double q = 0.5;
  double bound = 0;       // |f|_C1 + |f|_inf + |df| (|df| + 1) / (1 - q)
  double simplified = 0;  // 5 * proxy when proxy < 1/2, NaN otherwise
};

/// Upper bound on d(id, id + g). q defaults to 1/2 and is raised to
/// (1 + proxy) / 2 when the proxy does not fit under 1/2.
MetricBound metric_step_bound(const FieldNorms& norms);

class MetricDiagnostics {
 public:
  /// Records one step. `ratio` is the observed |X_{k+1}| / |X_k| (NaN for the
  /// first step).
  void add_step(const MetricBound& step, double ratio);

  double per_step_bound() const { return per_step_; }
  double cumulative_bound() const { return cumulative_; }
  /// 5 q^k / (1 - q) with q = alpha |g_0|, alpha the largest ratio so far.
  double apriori_bound() const;
  double q() const;

 private:
  int steps_ = 0;
  double per_step_ = 0;
  double cumulative_ = 0;
  double first_proxy_ = 0;
  double alpha_ = 0;
};

}  // namespace shapenewton
