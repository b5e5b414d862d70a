#pragma once

#include "shapenewton/geometry.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace shapenewton {

/// Analytic density f with gradient and Hessian.
class ScalarField {
 public:
  using ValueFn = std::function<double(const Vec2&)>;
  using GradFn = std::function<Vec2(const Vec2&)>;
  using HessFn = std::function<Mat2(const Vec2&)>;

  ScalarField(std::string name, ValueFn value, GradFn grad, HessFn hess)
      : name_(std::move(name)), value_(std::move(value)), grad_(std::move(grad)), hess_(std::move(hess)) {}

  const std::string& name() const { return name_; }
  double value(const Vec2& x) const { return value_(x); }
  Vec2 grad(const Vec2& x) const { return grad_(x); }
  Mat2 hess(const Vec2& x) const { return hess_(x); }

 private:
  std::string name_;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
};

struct EllipseParams {
  double b1 = 1.0;
  double b2 = 15.0;
  double r1 = 1.0;
};

struct DiscParams {
  double a1 = 0.0;
  double a2 = 0.55;
  double r2 = 0.1;
};

/// f1(x) = b1 x1^2 + b2 x2^2 - r1.
ScalarField test1_field(const EllipseParams& p = {});
/// f2 = f1 * g with g(x) = (x1 - a1)^2 + (x2 - a2)^2 - r2.
ScalarField test2_field(const EllipseParams& p = {}, const DiscParams& q = {});
ScalarField constant_field(double c);

enum class BuiltinField { Test1, Test2, Constant };

ScalarField builtin_field(BuiltinField kind, double constant = 1.0);

/// Scaled Wendland kernel k(x, y) = phi(|x - y| / sigma) with
/// phi(r) = (1 - r)_+^4 (4 r + 1).
class WendlandKernel {
 public:
  explicit WendlandKernel(double sigma);

  double sigma() const { return sigma_; }

  static double phi(double r);
  /// phi'(r) = -20 r (1 - r)^3 on [0, 1], zero outside.
  static double dphi(double r);
  /// phi''(r) = -20 (1 - r)^2 (1 - 4 r) on [0, 1], zero outside.
  static double d2phi(double r);

  double value(const Vec2& x, const Vec2& y) const;
  /// Gradient with respect to y.
  Vec2 grad(const Vec2& x, const Vec2& y) const;
  /// Hessian with respect to y.
  Mat2 hess(const Vec2& x, const Vec2& y) const;

 private:
  double sigma_;
};

/// v(y) = k(anchor, y) * normal.
struct BasisField {
  Vec2 anchor;
  Vec2 normal;
  WendlandKernel kernel;

  struct Eval {
    Vec2 value;
    Mat2 jacobian;  // jacobian(a, b) = d v_a / d y_b
  };

  Eval eval(const Vec2& y) const;
  Vec2 value(const Vec2& y) const { return kernel.value(anchor, y) * normal; }
  Mat2 jacobian(const Vec2& y) const { return normal * kernel.grad(anchor, y).transpose(); }
  double divergence(const Vec2& y) const { return normal.dot(kernel.grad(anchor, y)); }
  Vec2 grad_divergence(const Vec2& y) const { return kernel.hess(anchor, y) * normal; }
  double radius() const { return kernel.sigma(); }
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Carries v to the deformed boundary (id + g): the anchor moves by g(anchor)
/// and the normal becomes the normalized (I + dg)^{-T} normal, kept on the
/// side of the old normal.
BasisField parallel_transport(const BasisField& b, const Vec2& displacement, const Mat2& jacobian);

/// g(y) = sum_l c_l v_l(y).
class BasisCombination {
 public:
  BasisCombination() = default;
  BasisCombination(std::vector<BasisField> basis, std::vector<double> coefficients);

  const std::vector<BasisField>& basis() const { return basis_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  bool empty() const { return basis_.empty(); }

  Vec2 value(const Vec2& y) const;
  Mat2 jacobian(const Vec2& y) const;
  double divergence(const Vec2& y) const { return jacobian(y).trace(); }
  Vec2 grad_divergence(const Vec2& y) const;

 private:
  std::vector<BasisField> basis_;
  std::vector<double> coefficients_;
};

/// Generic smooth vector field used by the derivative oracles. `support`
/// lists disks (center, radius) outside of which the field vanishes; an
/// empty list means the field is supported everywhere.
struct VectorField {
  std::function<Vec2(const Vec2&)> value;
  std::function<Mat2(const Vec2&)> jacobian;
  std::function<Vec2(const Vec2&)> grad_divergence;
  std::vector<std::pair<Vec2, double>> support;

  static VectorField from(const BasisField& b);
  static VectorField from(const BasisCombination& g);
  static VectorField zero();
  /// X(y) = A y + c.
  static VectorField affine(const Mat2& a, const Vec2& c);
};

/// Basis fields anchored at every vertex with the frame's vertex normals.
std::vector<BasisField> make_basis(const PolygonalShape& shape, const BoundaryFrame& frame, double sigma);

}  // namespace shapenewton
