#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace shapenewton {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Raised when a polygon violates the shape invariants (too few vertices,
/// repeated vertices, zero area, self-intersection).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Outward normal of a counter-clockwise boundary with unit tangent `t`.
inline Vec2 outward_normal(const Vec2& t) { return {t.y(), -t.x()}; }

/// Closed, simple, counter-clockwise polygon. The closing edge runs from the
/// last vertex back to the first; the first vertex is not repeated.
class PolygonalShape {
 public:
  /// Validates the vertex list and reverses it if it is clockwise.
  explicit PolygonalShape(std::vector<Vec2> vertices);

  std::size_t size() const { return vertices_.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices_[i]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }

  std::size_t next(std::size_t i) const { return i + 1 == vertices_.size() ? 0 : i + 1; }
  std::size_t prev(std::size_t i) const { return i == 0 ? vertices_.size() - 1 : i - 1; }

  double edge_length(std::size_t i) const { return (vertices_[next(i)] - vertices_[i]).norm(); }
  double perimeter() const;
  double min_gap() const;
  double max_gap() const;

  /// Moves vertex i to vertices[i] + displacement[i]. Throws GeometryError if
  /// the result is not a valid shape.
  PolygonalShape displaced(std::span<const Vec2> displacement) const;

 private:
  std::vector<Vec2> vertices_;
};

double signed_area(std::span<const Vec2> vertices);
double shoelace_area(const PolygonalShape& shape);

/// O(n^2) segment-pair test; adjacent edges only count when they fold back
/// onto each other.
bool is_simple(std::span<const Vec2> vertices);

/// Signed Menger curvature of the triangle (a, b, c); positive when the path
/// a -> b -> c turns counter-clockwise, zero for (numerically) collinear
/// triples.
double menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c);

struct BoundaryFrame {
  std::vector<Vec2> vertex_normals;  // normalized sum of the adjacent edge normals
  std::vector<Vec2> edge_tangents;   // edge i runs from x_i to x_{i+1}
  std::vector<Vec2> edge_normals;
  std::vector<double> edge_lengths;
  std::vector<double> curvature;     // per vertex
  std::vector<double> arc;           // size n + 1, arc[0] = 0, arc[n] = length

  double length() const { return arc.back(); }
};

BoundaryFrame build_frame(const PolygonalShape& shape);

/// Resamples the arc-length parameterized polygon at N = round(L / spacing)
/// uniformly spaced arc positions starting from vertex 0.
PolygonalShape resample_uniform(const PolygonalShape& shape, double target_spacing);

PolygonalShape make_circle(const Vec2& center, double radius, int n, double phase = 0.0);
/// Ellipse sampled uniformly in the angle parameter.
PolygonalShape make_ellipse(double a, double b, int n, const Vec2& center = Vec2::Zero());
/// Ellipse sampled (approximately) uniformly in arc length, with every vertex
/// exactly on the ellipse.
PolygonalShape make_ellipse_arclength(double a, double b, int n, const Vec2& center = Vec2::Zero());

/// Plain text, one "x y" pair per line, no repeated closing vertex.
void write_polyline(const std::filesystem::path& path, const PolygonalShape& shape);
PolygonalShape read_polyline(const std::filesystem::path& path);

}  // namespace shapenewton
