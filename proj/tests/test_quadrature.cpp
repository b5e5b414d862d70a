#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapenewton/fields.hpp"
#include "shapenewton/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace shapenewton;

namespace {

PolygonalShape unit_square() { return PolygonalShape({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

double sum_weights(const TriangleRule& r) {
  double s = 0;
  for (double w : r.weights) s += w;
  return s;
}

/// Exact integral of x^p y^q over the reference triangle (0,0), (1,0), (0,1).
double reference_monomial(int p, int q) { return std::tgamma(p + 1) * std::tgamma(q + 1) / std::tgamma(p + q + 3); }

}  // namespace

TEST_CASE("triangle rules: weights sum to one and barycentric coordinates are valid") {
  for (const TriangleRule* r : {&TriangleRule::degree4(), &TriangleRule::degree6()}) {
    CHECK(sum_weights(*r) == doctest::Approx(1.0).epsilon(1e-14));
    for (const auto& l : r->barycentric) {
      CHECK(l[0] + l[1] + l[2] == doctest::Approx(1.0).epsilon(1e-14));
      for (double c : l) CHECK(c >= 0);
    }
  }
  CHECK(TriangleRule::degree4().weights.size() == 6);
  CHECK(TriangleRule::degree6().weights.size() == 12);
}

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
  TriangulatedDomain ref;
  ref.points = {{0, 0}, {1, 0}, {0, 1}};
  ref.triangles = {{0, 1, 2}};
  ref.level = {0};
  for (const TriangleRule* r : {&TriangleRule::degree4(), &TriangleRule::degree6()}) {
    for (int p = 0; p <= r->degree; ++p) {
      for (int q = 0; p + q <= r->degree; ++q) {
        const double got = integrate_domain(ref, [&](const Vec2& x) { return std::pow(x.x(), p) * std::pow(x.y(), q); }, *r);
        CHECK(got == doctest::Approx(reference_monomial(p, q)).epsilon(1e-13));
      }
    }
    // One degree beyond is not exact in general.
    const int d = r->degree + 1;
    const double got = integrate_domain(ref, [&](const Vec2& x) { return std::pow(x.x(), d); }, *r);
    CHECK(std::abs(got - reference_monomial(d, 0)) > 1e-12);
  }
}

TEST_CASE("Gauss-Legendre rules on [0, 1]") {
  for (int n = 1; n <= 12; ++n) {
    const LineRule r = LineRule::gauss_legendre(n);
    REQUIRE(r.nodes.size() == static_cast<std::size_t>(n));
    CHECK(r.degree == 2 * n - 1);
    for (std::size_t i = 1; i < r.nodes.size(); ++i) CHECK(r.nodes[i] > r.nodes[i - 1]);
    for (int k = 0; k <= r.degree; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
  CHECK_THROWS((void)LineRule::gauss_legendre(0));
  CHECK_THROWS((void)LineRule::gauss_legendre(13));
}

TEST_CASE("ear clipping preserves area and orientation") {
  for (const PolygonalShape& s : {unit_square(), make_ellipse(1.0, 0.3, 57),
                                  PolygonalShape({{0, 0}, {2, 0}, {2, 2}, {1, 0.5}, {0, 2}})}) {
    const TriangulatedDomain d = triangulate(s);
    CHECK(d.size() == s.size() - 2);
    CHECK(d.total_area() == doctest::Approx(shoelace_area(s)).epsilon(1e-13));
    for (std::size_t t = 0; t < d.size(); ++t) CHECK(d.area(t) > 0);
  }
}

TEST_CASE("refinement: no anchors or far anchors leave the mesh untouched") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 40);
  const TriangulatedDomain d = triangulate(c);
  CHECK(refine_near_supports(d, {}, 0.1).size() == d.size());
  const std::vector<Vec2> far{Vec2(10, 10)};
  CHECK(refine_near_supports(d, far, 0.1).size() == d.size());
}

TEST_CASE("refinement preserves area and shrinks triangles near supports") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 40);
  const TriangulatedDomain d = triangulate(c);
  const std::vector<Vec2> anchors{c[0], c[13]};
  const double radius = 0.2;
  const RefinementOptions opts;
  const TriangulatedDomain r = refine_near_supports(d, anchors, radius, opts);
  CHECK(r.size() > d.size());
  CHECK(r.total_area() == doctest::Approx(d.total_area()).epsilon(1e-13));
  for (std::size_t t = 0; t < r.size(); ++t) {
    CHECK(r.area(t) > 0);
    bool near = false;
    for (const Vec2& a : anchors) near = near || triangle_meets_disk(r.corner(t, 0), r.corner(t, 1), r.corner(t, 2), a, radius);
    if (near) CHECK(r.diameter(t) <= opts.diameter_factor * radius * (1 + 1e-12));
  }
}

TEST_CASE("disk intersection test") {
  const Vec2 a(0, 0), b(1, 0), c(0, 1);
  CHECK(triangle_meets_disk(a, b, c, Vec2(0.2, 0.2), 0.01));
  CHECK(triangle_meets_disk(a, b, c, Vec2(-0.1, 0.5), 0.11));
  CHECK_FALSE(triangle_meets_disk(a, b, c, Vec2(-0.1, 0.5), 0.09));
  CHECK_FALSE(triangle_meets_disk(a, b, c, Vec2(1, 1), 0.7));
  CHECK(triangle_meets_disk(a, b, c, Vec2(1, 1), 0.71));
}

TEST_CASE("domain integrals over polygons") {
  const TriangulatedDomain sq = triangulate(unit_square());
  CHECK(integrate_domain(sq, [](const Vec2&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(integrate_domain(sq, [](const Vec2& x) { return x.x(); }) == doctest::Approx(0.5).epsilon(1e-14));
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 400);
  const ScalarField f = test1_field();
  const double got = integrate_domain(triangulate(c), [&](const Vec2& x) { return f.value(x); });
  CHECK(std::abs(got - 3 * std::numbers::pi) / (3 * std::numbers::pi) <= 1e-3);
}

TEST_CASE("boundary integrals over polygons") {
  const PolygonalShape sq = unit_square();
  const BoundaryFrame f = build_frame(sq);
  CHECK(integrate_boundary(sq, f, [](const Vec2&, const Vec2&) { return 1.0; }) == doctest::Approx(4.0).epsilon(1e-14));
  // A constant field has zero net flux.
  const Vec2 k(0.3, -1.7);
  CHECK(std::abs(integrate_boundary(sq, f, [&](const Vec2&, const Vec2& n) { return k.dot(n); })) <= 1e-14);
  // Flux of x equals twice the area.
  CHECK(integrate_boundary(sq, f, [](const Vec2& x, const Vec2& n) { return x.dot(n); }) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS((void)integrate_boundary(sq, f, [](const Vec2&, const Vec2&) { return 1.0; }, 1));
}

TEST_CASE("divergence theorem for a smooth field on a refined mesh") {
  const PolygonalShape e = make_ellipse(1.2, 0.7, 120);
  const BoundaryFrame frame = build_frame(e);
  // X = (sin y + x^3, x y^2), div X = 3 x^2 + 2 x y.
  const auto X = [](const Vec2& x) { return Vec2(std::sin(x.y()) + x.x() * x.x() * x.x(), x.x() * x.y() * x.y()); };
  const double lhs = integrate_domain(triangulate(e), [](const Vec2& x) { return 3 * x.x() * x.x() + 2 * x.x() * x.y(); },
                                      TriangleRule::degree6());
  const double rhs = integrate_boundary(e, frame, [&](const Vec2& x, const Vec2& n) { return X(x).dot(n); }, 6);
  CHECK(std::abs(lhs - rhs) <= 1e-6 * std::abs(lhs));
}

TEST_CASE("quadrature error contracts under refinement") {
  const PolygonalShape sq = unit_square();
  const auto g = [](const Vec2& x) { return std::exp(3 * x.x()) * std::cos(4 * x.y()); };
  const double exact = (std::exp(3.0) - 1) / 3 * std::sin(4.0) / 4;
  const std::vector<Vec2> anchors{Vec2(0.5, 0.5)};
  double previous = 1e300;
  for (double factor : {1.0, 0.5, 0.25}) {
    RefinementOptions opts;
    opts.diameter_factor = factor;
    const TriangulatedDomain d = refine_near_supports(triangulate(sq), anchors, 2.0, opts);
    const double err = std::abs(integrate_domain(d, g) - exact);
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("support-adapted boundary rule integrates the perimeter and tags supports") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 60);
  const BoundaryFrame f = build_frame(c);
  const std::vector<Vec2> anchors{c[0], c[30]};
  const double radius = 0.3;
  const auto nodes = build_boundary_quadrature(c, f, anchors, radius);
  double length = 0;
  for (const BoundaryNode& n : nodes) {
    length += n.weight;
    for (int i : n.touching) CHECK((n.point - anchors[static_cast<std::size_t>(i)]).norm() <= radius * (1 + 1e-12));
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const bool tagged = std::find(n.touching.begin(), n.touching.end(), static_cast<int>(i)) != n.touching.end();
      if ((n.point - anchors[i]).norm() < radius * (1 - 1e-9)) CHECK(tagged);
    }
  }
  CHECK(length == doctest::Approx(f.length()).epsilon(1e-13));
}

TEST_CASE("support mesh lists the anchors that touch each triangle") {
  const PolygonalShape c = make_circle(Vec2::Zero(), 1.0, 30);
  const std::vector<Vec2> anchors{c[0], c[10], c[20]};
  const SupportMesh m = build_support_mesh(c, anchors, 0.25);
  REQUIRE(m.touching.size() == m.domain.size());
  for (std::size_t t = 0; t < m.domain.size(); ++t) {
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const bool meets = triangle_meets_disk(m.domain.corner(t, 0), m.domain.corner(t, 1), m.domain.corner(t, 2), anchors[i], 0.25);
      const bool listed = std::find(m.touching[t].begin(), m.touching[t].end(), static_cast<int>(i)) != m.touching[t].end();
      CHECK(meets == listed);
    }
  }
}
