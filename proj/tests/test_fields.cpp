#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapenewton/fields.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace shapenewton;

namespace {

Vec2 fd_grad(const std::function<double(const Vec2&)>& f, const Vec2& x, double h = 1e-6) {
  return {(f(x + Vec2(h, 0)) - f(x - Vec2(h, 0))) / (2 * h), (f(x + Vec2(0, h)) - f(x - Vec2(0, h))) / (2 * h)};
}

bool close(const Vec2& a, const Vec2& b, double rel) { return (a - b).norm() <= rel * std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("Wendland kernel closed-form values") {
  const WendlandKernel k(0.4);
  const Vec2 x(0.3, -0.2);
  CHECK(k.value(x, x) == 1.0);
  CHECK(k.value(Vec2::Zero(), Vec2(0.4, 0)) == 0.0);
  CHECK(k.value(x, x + Vec2(0.0, 0.2)) == doctest::Approx(0.1875).epsilon(1e-15));
  CHECK(k.value(x, x + Vec2(0.5, 0.1)) == 0.0);
  const Vec2 y(0.41, -0.05);
  CHECK(k.value(x, y) == k.value(y, x));
}

TEST_CASE("Wendland gradient vanishes at the centre and on the support boundary") {
  const WendlandKernel k(0.4);
  const Vec2 x(0.1, 0.1);
  CHECK(k.grad(x, x).norm() == 0.0);
  CHECK(k.grad(Vec2::Zero(), Vec2(0.4, 0)).norm() == 0.0);
  CHECK(WendlandKernel::dphi(1.0) == 0.0);
  CHECK(WendlandKernel::dphi(0.0) == 0.0);
}

TEST_CASE("Wendland gradient and Hessian match finite differences") {
  const WendlandKernel k(0.3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const Vec2 x(0.05, -0.1);
  for (int i = 0; i < 50; ++i) {
    const Vec2 y = x + Vec2(u(rng), u(rng));
    if ((y - x).norm() >= 0.29 || (y - x).norm() < 1e-3) continue;
    CHECK(close(k.grad(x, y), fd_grad([&](const Vec2& p) { return k.value(x, p); }, y), 1e-6));
    const Mat2 h = k.hess(x, y);
    for (int c = 0; c < 2; ++c) {
      const Vec2 col = fd_grad([&](const Vec2& p) { return k.grad(x, p)(c); }, y);
      CHECK(close(h.col(c), col, 1e-5));
    }
  }
}

TEST_CASE("basis field at its anchor and outside its support") {
  const BasisField b{Vec2(1, 0), Vec2(1, 0), WendlandKernel(0.2)};
  const BasisField::Eval at = b.eval(b.anchor);
  CHECK(at.value == b.normal);
  CHECK(at.jacobian.norm() == 0.0);
  const BasisField::Eval far = b.eval(Vec2(1.3, 0));
  CHECK(far.value.norm() == 0.0);
  CHECK(far.jacobian.norm() == 0.0);
}

TEST_CASE("basis Jacobian is a rank-one outer product") {
  const BasisField b{Vec2(0, 0), Vec2(0.6, 0.8), WendlandKernel(0.5)};
  for (const Vec2& y : {Vec2(0.1, 0.2), Vec2(-0.3, 0.1), Vec2(0.2, -0.25)}) {
    const Mat2 j = b.jacobian(y);
    CHECK(std::abs(j.determinant()) <= 1e-15);
    CHECK(b.divergence(y) == doctest::Approx(j.trace()));
    // grad div v = Hess(k) nu.
    const Vec2 gd = fd_grad([&](const Vec2& p) { return b.divergence(p); }, y);
    CHECK(close(b.grad_divergence(y), gd, 1e-6));
  }
}

TEST_CASE("parallel transport of identity, translation and isotropic scaling") {
  const BasisField b{Vec2(1, 2), Vec2(0.6, 0.8), WendlandKernel(0.3)};
  const BasisField same = parallel_transport(b, Vec2::Zero(), Mat2::Zero());
  CHECK(same.anchor == b.anchor);
  CHECK((same.normal - b.normal).norm() <= 1e-15);
  const BasisField shifted = parallel_transport(b, Vec2(0.5, -1), Mat2::Zero());
  CHECK((shifted.anchor - Vec2(1.5, 1)).norm() <= 1e-15);
  CHECK((shifted.normal - b.normal).norm() <= 1e-15);
  const double eps = 0.1;
  const BasisField scaled = parallel_transport(b, eps * b.anchor, eps * Mat2::Identity());
  CHECK((scaled.normal - b.normal).norm() <= 1e-15);
  CHECK(scaled.kernel.sigma() == b.kernel.sigma());
  CHECK_THROWS_AS((void)parallel_transport(b, Vec2::Zero(), -Mat2::Identity()), TransportError);
}

TEST_CASE("transported normals keep their orientation") {
  const BasisField b{Vec2(0, 0), Vec2(1, 0), WendlandKernel(0.3)};
  Mat2 flip;
  flip << -2, 0, 0, 0;  // I + dg = diag(-1, 1) reverses the normal direction
  const BasisField t = parallel_transport(b, Vec2::Zero(), flip);
  CHECK(t.normal.dot(b.normal) > 0);
}

TEST_CASE("transport discrepancy is Lipschitz in the displacement size") {
  const BasisField b{Vec2(0.2, 0.1), Vec2(0, 1), WendlandKernel(0.4)};
  Mat2 shear;
  shear << 0.3, 0.7, -0.2, 0.5;
  const Vec2 shift(0.4, -0.3);
  double worst = 0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const BasisField t = parallel_transport(b, eps * shift, eps * shear);
    double diff = 0;
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const Vec2 y = b.anchor + 0.05 * Vec2(i, j);
        diff = std::max(diff, (b.value(y) - t.value(y)).norm());
      }
    }
    const double c = diff / (eps * (shift.norm() + shear.norm()));
    worst = std::max(worst, c);
  }
  CHECK(worst < 10.0);
}

TEST_CASE("builtin Test1 and Test2 densities") {
  const ScalarField f1 = test1_field();
  CHECK(f1.value(Vec2(1, 0)) == 0.0);
  CHECK(f1.grad(Vec2(0.3, -0.7)).isApprox(Vec2(0.6, -21.0)));
  const ScalarField f2 = test2_field();
  CHECK(std::abs(f2.value(Vec2(0, 0.55 + std::sqrt(0.1)))) <= 1e-14);
  CHECK(constant_field(2.5).value(Vec2(7, 7)) == 2.5);
  CHECK(builtin_field(BuiltinField::Test2).name() == f2.name());
}

TEST_CASE("builtin densities: gradients and Hessians against finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (const ScalarField& f : {test1_field(), test2_field()}) {
    for (int i = 0; i < 30; ++i) {
      const Vec2 x(u(rng), u(rng));
      CHECK(close(f.grad(x), fd_grad([&](const Vec2& p) { return f.value(p); }, x), 1e-6));
      const Mat2 h = f.hess(x);
      CHECK(std::abs(h(0, 1) - h(1, 0)) <= 1e-14 * std::max(1.0, h.norm()));
      for (int c = 0; c < 2; ++c) {
        CHECK(close(h.col(c), fd_grad([&](const Vec2& p) { return f.grad(p)(c); }, x), 1e-6));
      }
    }
  }
}

TEST_CASE("kernel Gram matrices of clustered points are positive definite") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  const WendlandKernel k(1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 11;
    std::vector<Vec2> pts;
    for (int i = 0; i < m; ++i) {
      const double r = 0.45 * std::sqrt(u(rng));
      const double a = 2 * std::numbers::pi * u(rng);
      pts.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    Eigen::MatrixXd g(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) g(i, j) = k.value(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
    }
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues()(0) > 0);
  }
}

TEST_CASE("coefficient-to-field map is injective for distinct anchors") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 24);
  const BoundaryFrame f = build_frame(c);
  const auto basis = make_basis(c, f, 0.6);
  // Normal components at the anchors: A_ij = v_j(x_i) . nu_i.
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = basis[static_cast<std::size_t>(j)].value(c[static_cast<std::size_t>(i)]).dot(f.vertex_normals[static_cast<std::size_t>(i)]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  CHECK(lu.rank() == n);
}

TEST_CASE("tangential part of a basis field shrinks with sigma") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 256);
  const BoundaryFrame f = build_frame(c);
  double previous = 1e300;
  for (double sigma : {0.4, 0.2, 0.1, 0.05}) {
    const BasisField b{c[0], f.vertex_normals[0], WendlandKernel(sigma)};
    double sup = 0;
    for (std::size_t e = 0; e < c.size(); ++e) {
      for (double t : {0.0, 0.25, 0.5, 0.75}) {
        const Vec2 y = c[e] + t * (c[c.next(e)] - c[e]);
        sup = std::max(sup, std::abs(b.value(y).dot(f.edge_tangents[e])));
      }
    }
    CHECK(sup < previous);
    previous = sup;
  }
}

TEST_CASE("basis combinations sum their fields") {
  const BasisField a{Vec2(0, 0), Vec2(1, 0), WendlandKernel(0.5)};
  const BasisField b{Vec2(0.2, 0), Vec2(0, 1), WendlandKernel(0.3)};
  const BasisCombination g({a, b}, {2.0, -1.0});
  const Vec2 y(0.1, 0.05);
  CHECK(close(g.value(y), 2.0 * a.value(y) - b.value(y), 1e-15));
  CHECK((g.jacobian(y) - (2.0 * a.jacobian(y) - b.jacobian(y))).norm() <= 1e-14);
  CHECK_THROWS(BasisCombination({a, b}, {1.0}));
  const VectorField v = VectorField::from(g);
  CHECK(v.support.size() == 2);
  CHECK(close(v.value(y), g.value(y), 1e-15));
}
