#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapenewton/optimize.hpp"

#include <cmath>
#include <cstring>

using namespace shapenewton;

namespace {

ScalarField radial_field() {
  return ScalarField(
      "radial", [](const Vec2& x) { return x.squaredNorm() - 1; }, [](const Vec2& x) { return Vec2(2 * x); },
      [](const Vec2&) { return Mat2(2 * Mat2::Identity()); });
}

double mean_radius(const std::vector<Vec2>& pts) {
  double s = 0;
  for (const Vec2& p : pts) s += p.norm();
  return s / static_cast<double>(pts.size());
}

SolverConfig config_for(Method m) {
  SolverConfig c;
  c.method = m;
  if (m == Method::NewtonH2) c.gamma_sigma = 1.6;
  if (m == Method::GradL2) {
    c.step_size = 0.02;
    c.max_iter = 999;
  }
  return c;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::NewtonH1, Method::NewtonH2, Method::NewtonRiemann, Method::GradEuclid, Method::GradH1ring,
                   Method::GradL2}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_FALSE(parse_method("Newton").has_value());
  CHECK(is_gradient(Method::GradL2));
  CHECK_FALSE(is_gradient(Method::NewtonRiemann));
  CHECK(uses_basis(Method::NewtonH1));
  CHECK_FALSE(uses_basis(Method::NewtonRiemann));
}

TEST_CASE("Newton step with a zero load is zero") {
  HessianSystem sys;
  sys.matrix = Eigen::MatrixXd::Identity(3, 3);
  sys.load = Eigen::VectorXd::Zero(3);
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 3);
  const BoundaryFrame f = build_frame(c);
  const StepResult s = newton_step(sys, make_basis(c, f, 0.1), c.vertices());
  CHECK(s.coefficients.isZero(0.0));
  for (const Vec2& d : s.displacement) CHECK(d.norm() == 0.0);
}

TEST_CASE("Newton step on a single basis field solves the scalar equation") {
  HessianSystem sys;
  sys.matrix = Eigen::MatrixXd::Constant(1, 1, 4.0);
  sys.load = Eigen::VectorXd::Constant(1, 2.0);
  const std::vector<BasisField> basis{BasisField{Vec2(1, 0), Vec2(1, 0), WendlandKernel(0.2)}};
  const std::vector<Vec2> vertices{Vec2(1, 0)};
  const StepResult s = newton_step(sys, basis, vertices);
  CHECK(s.coefficients(0) == doctest::Approx(-0.5));
  CHECK((s.displacement[0] - Vec2(-0.5, 0)).norm() <= 1e-15);
}

TEST_CASE("singular systems are rejected") {
  HessianSystem sys;
  sys.matrix = Eigen::MatrixXd::Zero(2, 2);
  sys.load = Eigen::VectorXd::Ones(2);
  const std::vector<BasisField> basis(2, BasisField{Vec2(0, 0), Vec2(1, 0), WendlandKernel(0.2)});
  const std::vector<Vec2> vertices{Vec2(0, 0), Vec2(1, 0)};
  CHECK_THROWS_AS((void)newton_step(sys, basis, vertices), SingularSystemError);
}

TEST_CASE("pointwise Newton on circles: radius 2, 1.25, 1.025") {
  PolygonalShape c = make_circle(Vec2::Zero(), 2.0, 50);
  for (double expected : {1.25, 1.025}) {
    const StepResult s = riemann_newton_step(c, build_frame(c), radial_field());
    c = c.displaced(s.displacement);
    for (const Vec2& p : c.vertices()) CHECK(p.norm() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("pointwise Newton leaves vertices on the zero set in place") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 50);
  const StepResult s = riemann_newton_step(c, build_frame(c), radial_field());
  for (const Vec2& d : s.displacement) CHECK(d.norm() <= 1e-15);
}

TEST_CASE("pointwise L2 gradient step on a circle of radius 2") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 2.0, 50);
  const ShapeDiscretization disc(c, 0.1);
  const StepResult s = gradient_step(disc, radial_field(), Method::GradL2, 0.02);
  const PolygonalShape next = c.displaced(s.displacement);
  for (const Vec2& p : next.vertices()) CHECK(p.norm() == doctest::Approx(1.94).epsilon(1e-12));
}

TEST_CASE("Euclidean gradient step uses the negative load as coefficients") {
  const PolygonalShape c = make_ellipse(1.2, 0.8, 40);
  const ShapeDiscretization disc(c, 0.1);
  const Eigen::VectorXd load = assemble_load(disc, test1_field());
  const StepResult s = gradient_step(disc, test1_field(), Method::GradEuclid, 1.0);
  CHECK((s.coefficients + load).lpNorm<Eigen::Infinity>() <= 1e-14 * load.lpNorm<Eigen::Infinity>());
  CHECK_THROWS((void)gradient_step(disc, test1_field(), Method::NewtonH1, 1.0));
}

TEST_CASE("second-Hessian Newton step reduces the load from a large circle") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 2.0, 100);
  const SolverConfig cfg = config_for(Method::NewtonH2);
  const ScalarField f = radial_field();
  const ShapeDiscretization disc(c, kernel_width(cfg, c));
  const double before = assemble_load(disc, f).lpNorm<Eigen::Infinity>();
  const StepResult s = newton_step(disc, f, HessianKind::H2);
  const PolygonalShape next = c.displaced(s.displacement);
  const ShapeDiscretization after(next, kernel_width(cfg, next));
  CHECK(assemble_load(after, f).lpNorm<Eigen::Infinity>() < before);
}

TEST_CASE("kernel width follows gamma times the gap power") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 100);
  SolverConfig cfg;
  cfg.gamma_sigma = 0.5;
  CHECK(kernel_width(cfg, c) == doctest::Approx(0.5 * c.max_gap() * c.max_gap()));
  cfg.sigma_exponent = 1.0;
  CHECK(kernel_width(cfg, c) == doctest::Approx(0.5 * c.max_gap()));
}

TEST_CASE("a shape already on the zero set stops at iteration 0") {
  const PolygonalShape e = make_ellipse_arclength(1.0, 1.0 / std::sqrt(15.0), 200);
  const RunTrace t = run(config_for(Method::NewtonRiemann), e, test1_field());
  CHECK(t.stop == StopReason::Converged);
  CHECK(t.iterations() == 0);
}

TEST_CASE("pointwise Newton contracts quadratically on Test1") {
  const RunTrace t = run(config_for(Method::NewtonRiemann), make_circle(Vec2::Zero(), 1.0, 200), test1_field());
  REQUIRE(t.stop == StopReason::Converged);
  CHECK(t.iterations() <= 12);
  CHECK(t.records.back().Linf_f_points <= 1e-12);
  // Once the residual is below 0.1, log f_{k+1} <= 1.8 log f_k.
  for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
    const double a = t.records[k].Linf_f_points;
    const double b = t.records[k + 1].Linf_f_points;
    if (a < 0.1 && b > 1e-14) CHECK(std::log(b) <= 1.8 * std::log(a));
  }
}

TEST_CASE("first-Hessian Newton converges on Test1 with contracting steps") {
  const RunTrace t = run(config_for(Method::NewtonH1), make_circle(Vec2::Zero(), 1.0, 200), test1_field());
  REQUIRE(t.stop == StopReason::Converged);
  CHECK(t.records.back().Linf_L <= 1e-8);
  // The converged record carries no step, so absX is NaN there.
  for (const IterationRecord& r : t.records) {
    if (r.iter >= 5 && !std::isnan(r.absX)) CHECK(r.ratio_absX < 1.0);
  }
  // J decreases over the early steps. Near convergence it may rise by
  // roughly 1e-9 because the steps overshoot; accept_tol absorbs that.
  for (std::size_t k = 1; k < t.records.size() && k <= 5; ++k) CHECK(t.records[k].J < t.records[k - 1].J);
  CHECK(t.snapshots.size() == 6);
  CHECK(t.snapshots.front().first == 0);
}

TEST_CASE("pointwise L2 gradient is much slower than pointwise Newton") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 200);
  const RunTrace newton = run(config_for(Method::NewtonRiemann), c, test1_field());
  const RunTrace grad = run(config_for(Method::GradL2), c, test1_field());
  CHECK(grad.iterations() > 5 * newton.iterations());
  CHECK(grad.records.back().Linf_f_points > newton.records.back().Linf_f_points);
}

TEST_CASE("runs are deterministic") {
  SolverConfig cfg = config_for(Method::NewtonH1);
  cfg.max_iter = 6;
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 200);
  const RunTrace a = run(cfg, c, test1_field());
  const RunTrace b = run(cfg, c, test1_field());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(std::memcmp(&a.records[k].J, &b.records[k].J, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.records[k].Linf_L, &b.records[k].Linf_L, sizeof(double)) == 0);
  }
  REQUIRE(a.final_shape.size() == b.final_shape.size());
  CHECK(std::memcmp(a.final_shape.data(), b.final_shape.data(), a.final_shape.size() * sizeof(Vec2)) == 0);
}

TEST_CASE("invalid settings name the offending key") {
  SolverConfig c;
  c.gamma_sigma = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("solver.gamma_sigma"), std::invalid_argument);
  c = SolverConfig{};
  c.resample_ratio = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("solver.resample_ratio"), std::invalid_argument);
  c = SolverConfig{};
  c.method = Method::GradL2;
  c.step_size = -1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("solver.step_size"), std::invalid_argument);
  CHECK(mean_radius(make_circle(Vec2::Zero(), 1.5, 10).vertices()) == doctest::Approx(1.5));
}
