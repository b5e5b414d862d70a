#pragma once

#include "shapenewton/geometry.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace shapenewton {

/// Symmetric rule on the reference triangle; weights sum to 1 and are
/// multiplied by the physical triangle area.
struct TriangleRule {
  std::vector<std::array<double, 3>> barycentric;
  std::vector<double> weights;
  int degree = 0;

  static const TriangleRule& degree4();  // 6 points
  static const TriangleRule& degree6();  // 12 points
};

/// Gauss-Legendre rule mapped to [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int degree = 0;

  static LineRule gauss_legendre(int points);
};

struct TriangulatedDomain {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> level;

  std::size_t size() const { return triangles.size(); }
  const Vec2& corner(std::size_t t, int k) const { return points[static_cast<std::size_t>(triangles[t][static_cast<std::size_t>(k)])]; }
  double area(std::size_t t) const;
  double diameter(std::size_t t) const;
  double total_area() const;
};

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
TriangulatedDomain triangulate(const PolygonalShape& shape);

struct RefinementOptions {
  int max_level = 48;
  double diameter_factor = 0.25;  // refine until diameter <= factor * radius
};

/// Longest-edge bisection of every triangle that meets a disk (anchor, radius).
/// The result is generally non-conforming, which is fine for quadrature.
TriangulatedDomain refine_near_supports(const TriangulatedDomain& dom, std::span<const Vec2> anchors, double radius,
                                        const RefinementOptions& opts = {});

/// Refined triangulation plus, per triangle, the anchors whose support disk
/// meets it.
struct SupportMesh {
  TriangulatedDomain domain;
  std::vector<std::vector<int>> touching;
  double radius = 0;
};

SupportMesh build_support_mesh(const PolygonalShape& shape, std::span<const Vec2> anchors, double radius,
                               const RefinementOptions& opts = {});

bool triangle_meets_disk(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& center, double radius);

/// Visits every quadrature point of triangle t as (point, weight * area).
template <class Visitor>
void for_each_point(const TriangulatedDomain& dom, std::size_t t, const TriangleRule& rule, Visitor&& visit) {
  const Vec2& a = dom.corner(t, 0);
  const Vec2& b = dom.corner(t, 1);
  const Vec2& c = dom.corner(t, 2);
  const double area = 0.5 * std::abs(cross(b - a, c - a));
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const auto& l = rule.barycentric[q];
    visit(Vec2(l[0] * a + l[1] * b + l[2] * c), rule.weights[q] * area);
  }
}

double integrate_domain(const TriangulatedDomain& dom, const std::function<double(const Vec2&)>& integrand,
                        const TriangleRule& rule = TriangleRule::degree4());

/// Per-edge Gauss-Legendre; the integrand receives (point, edge normal).
double integrate_boundary(const PolygonalShape& shape, const BoundaryFrame& frame,
                          const std::function<double(const Vec2&, const Vec2&)>& integrand, int nodes_per_edge = 4);

struct BoundaryNode {
  Vec2 point;
  Vec2 normal;
  double weight;
  std::size_t edge;
  double t;  // position along the edge in [0, 1]
  std::vector<int> touching;
};

/// Boundary rule adapted to kernel supports: edges are split where they cross
/// a support circle and pieces inside a support are cut to length
/// <= diameter_factor * radius before the Gauss-Legendre rule is applied.
std::vector<BoundaryNode> build_boundary_quadrature(const PolygonalShape& shape, const BoundaryFrame& frame,
                                                    std::span<const Vec2> anchors, double radius,
                                                    int nodes_per_piece = 4, double diameter_factor = 0.25);

/// Debug dump: point count, points, triangle count, index triples.
void write_mesh(const std::filesystem::path& path, const TriangulatedDomain& dom);

}  // namespace shapenewton
