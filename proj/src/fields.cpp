#include "shapenewton/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace shapenewton {

ScalarField test1_field(const EllipseParams& p) {
  return ScalarField(
      "Test1",
      [p](const Vec2& x) { return p.b1 * x.x() * x.x() + p.b2 * x.y() * x.y() - p.r1; },
      [p](const Vec2& x) { return Vec2(2 * p.b1 * x.x(), 2 * p.b2 * x.y()); },
      [p](const Vec2&) {
        Mat2 h;
        h << 2 * p.b1, 0, 0, 2 * p.b2;
        return h;
      });
}

ScalarField test2_field(const EllipseParams& p, const DiscParams& q) {
  const ScalarField f1 = test1_field(p);
  auto g = [q](const Vec2& x) {
    return (x.x() - q.a1) * (x.x() - q.a1) + (x.y() - q.a2) * (x.y() - q.a2) - q.r2;
  };
  auto grad_g = [q](const Vec2& x) { return Vec2(2 * (x.x() - q.a1), 2 * (x.y() - q.a2)); };
  return ScalarField(
      "Test2", [f1, g](const Vec2& x) { return f1.value(x) * g(x); },
      [f1, g, grad_g](const Vec2& x) -> Vec2 { return g(x) * f1.grad(x) + f1.value(x) * grad_g(x); },
      [f1, g, grad_g](const Vec2& x) -> Mat2 {
        const Vec2 a = f1.grad(x);
        const Vec2 b = grad_g(x);
        return g(x) * f1.hess(x) + a * b.transpose() + b * a.transpose() + f1.value(x) * 2.0 * Mat2::Identity();
      });
}

ScalarField constant_field(double c) {
  return ScalarField(
      "Constant", [c](const Vec2&) { return c; }, [](const Vec2&) { return Vec2(Vec2::Zero()); },
      [](const Vec2&) { return Mat2(Mat2::Zero()); });
}

ScalarField builtin_field(BuiltinField kind, double constant) {
  switch (kind) {
    case BuiltinField::Test1:
      return test1_field();
    case BuiltinField::Test2:
      return test2_field();
    case BuiltinField::Constant:
      return constant_field(constant);
  }
  throw std::invalid_argument("unknown builtin field");
}

WendlandKernel::WendlandKernel(double sigma) : sigma_(sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw std::invalid_argument("kernel sigma must be positive");
}

double WendlandKernel::phi(double r) {
  if (r >= 1.0) return 0.0;
  const double s = 1.0 - r;
  const double s2 = s * s;
  return s2 * s2 * (4.0 * r + 1.0);
}

double WendlandKernel::dphi(double r) {
  if (r >= 1.0) return 0.0;
  const double s = 1.0 - r;
  return -20.0 * r * s * s * s;
}

double WendlandKernel::d2phi(double r) {
  if (r >= 1.0) return 0.0;
  const double s = 1.0 - r;
  return -20.0 * s * s * (1.0 - 4.0 * r);
}

double WendlandKernel::value(const Vec2& x, const Vec2& y) const { return phi((y - x).norm() / sigma_); }

Vec2 WendlandKernel::grad(const Vec2& x, const Vec2& y) const {
  const Vec2 d = y - x;
  const double r = d.norm() / sigma_;
  if (r >= 1.0) return Vec2::Zero();
  // phi'(r) / r = -20 (1 - r)^3 stays finite at the anchor.
  const double s = 1.0 - r;
  return (-20.0 * s * s * s / (sigma_ * sigma_)) * d;
}

Mat2 WendlandKernel::hess(const Vec2& x, const Vec2& y) const {
  const Vec2 d = y - x;
  const double dist = d.norm();
  const double r = dist / sigma_;
  if (r >= 1.0) return Mat2::Zero();
  const double s = 1.0 - r;
  const double radial_over_r = -20.0 * s * s * s;
  const double inv_s2 = 1.0 / (sigma_ * sigma_);
  if (dist == 0.0) return radial_over_r * inv_s2 * Mat2::Identity();
  const Vec2 u = d / dist;
  const Mat2 uu = u * u.transpose();
  return inv_s2 * (d2phi(r) * uu + radial_over_r * (Mat2::Identity() - uu));
}

BasisField::Eval BasisField::eval(const Vec2& y) const {
  return {value(y), jacobian(y)};
}

BasisField parallel_transport(const BasisField& b, const Vec2& displacement, const Mat2& jacobian) {
  const Mat2 deformation = Mat2::Identity() + jacobian;
  const double det = deformation.determinant();
  if (std::abs(det) < 1e-12) throw TransportError("singular deformation gradient in parallel transport");
  Vec2 n = deformation.inverse().transpose() * b.normal;
  n.normalize();
  if (n.dot(b.normal) < 0) n = -n;
  return BasisField{b.anchor + displacement, n, b.kernel};
}

BasisCombination::BasisCombination(std::vector<BasisField> basis, std::vector<double> coefficients)
    : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
  if (basis_.size() != coefficients_.size()) {
    throw std::invalid_argument("basis and coefficient counts differ");
  }
}

Vec2 BasisCombination::value(const Vec2& y) const {
  Vec2 sum = Vec2::Zero();
  for (std::size_t l = 0; l < basis_.size(); ++l) {
    if (coefficients_[l] != 0.0) sum += coefficients_[l] * basis_[l].value(y);
  }
  return sum;
}

Mat2 BasisCombination::jacobian(const Vec2& y) const {
  Mat2 sum = Mat2::Zero();
  for (std::size_t l = 0; l < basis_.size(); ++l) {
    if (coefficients_[l] != 0.0) sum += coefficients_[l] * basis_[l].jacobian(y);
  }
  return sum;
}

Vec2 BasisCombination::grad_divergence(const Vec2& y) const {
  Vec2 sum = Vec2::Zero();
  for (std::size_t l = 0; l < basis_.size(); ++l) {
    if (coefficients_[l] != 0.0) sum += coefficients_[l] * basis_[l].grad_divergence(y);
  }
  return sum;
}

VectorField VectorField::from(const BasisField& b) {
  return VectorField{[b](const Vec2& y) { return b.value(y); }, [b](const Vec2& y) { return b.jacobian(y); },
                     [b](const Vec2& y) { return b.grad_divergence(y); }, {{b.anchor, b.radius()}}};
}

VectorField VectorField::from(const BasisCombination& g) {
  VectorField f{[g](const Vec2& y) { return g.value(y); }, [g](const Vec2& y) { return g.jacobian(y); },
                [g](const Vec2& y) { return g.grad_divergence(y); }, {}};
  for (std::size_t l = 0; l < g.basis().size(); ++l) {
    if (g.coefficients()[l] != 0.0) f.support.emplace_back(g.basis()[l].anchor, g.basis()[l].radius());
  }
  // All coefficients zero: the field vanishes everywhere; a degenerate support
  // disk keeps "empty support list" meaning "global".
  if (f.support.empty()) f.support.emplace_back(Vec2::Zero(), 0.0);
  return f;
}

VectorField VectorField::zero() {
  return VectorField{[](const Vec2&) { return Vec2(Vec2::Zero()); }, [](const Vec2&) { return Mat2(Mat2::Zero()); },
                     [](const Vec2&) { return Vec2(Vec2::Zero()); }, {{Vec2::Zero(), 0.0}}};
}

VectorField VectorField::affine(const Mat2& a, const Vec2& c) {
  return VectorField{[a, c](const Vec2& y) { return Vec2(a * y + c); }, [a](const Vec2&) { return a; },
                     [](const Vec2&) { return Vec2(Vec2::Zero()); }, {}};
}

std::vector<BasisField> make_basis(const PolygonalShape& shape, const BoundaryFrame& frame, double sigma) {
  const WendlandKernel kernel(sigma);
  std::vector<BasisField> basis;
  basis.reserve(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) basis.push_back({shape[i], frame.vertex_normals[i], kernel});
  return basis;
}

}  // namespace shapenewton
