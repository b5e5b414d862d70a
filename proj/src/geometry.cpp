#include "shapenewton/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace shapenewton {

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  const double scale = (b - a).norm() * (c - a).norm();
  if (std::abs(v) <= 1e-14 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

PolygonalShape::PolygonalShape(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices, got " + std::to_string(n));
  for (const auto& v : vertices_) {
    if (!v.allFinite()) throw GeometryError("polygon vertex is not finite");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((vertices_[next(i)] - vertices_[i]).norm() <= 0.0) {
      throw GeometryError("consecutive vertices " + std::to_string(i) + " and " +
                          std::to_string(next(i)) + " coincide");
    }
  }
  const double area = signed_area(vertices_);
  if (area == 0.0) throw GeometryError("polygon has zero area");
  if (area < 0) std::reverse(vertices_.begin(), vertices_.end());
  if (!is_simple(vertices_)) throw GeometryError("polygon is self-intersecting");
}

double PolygonalShape::perimeter() const {
  double sum = 0;
  for (std::size_t i = 0; i < size(); ++i) sum += edge_length(i);
  return sum;
}

double PolygonalShape::min_gap() const {
  double g = edge_length(0);
  for (std::size_t i = 1; i < size(); ++i) g = std::min(g, edge_length(i));
  return g;
}

double PolygonalShape::max_gap() const {
  double g = edge_length(0);
  for (std::size_t i = 1; i < size(); ++i) g = std::max(g, edge_length(i));
  return g;
}

PolygonalShape PolygonalShape::displaced(std::span<const Vec2> displacement) const {
  if (displacement.size() != size()) {
    throw std::invalid_argument("displacement size does not match vertex count");
  }
  std::vector<Vec2> moved(size());
  for (std::size_t i = 0; i < size(); ++i) moved[i] = vertices_[i] + displacement[i];
  if (signed_area(moved) <= 0) throw GeometryError("deformation inverted the polygon");
  return PolygonalShape(std::move(moved));
}

double signed_area(std::span<const Vec2> v) {
  double sum = 0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) sum += cross(v[i], v[(i + 1) % n]);
  return 0.5 * sum;
}

double shoelace_area(const PolygonalShape& shape) { return signed_area(shape.vertices()); }

bool is_simple(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    // Adjacent edge folding back over this one.
    const Vec2& c = v[(i + 2) % n];
    if (orientation(a, b, c) == 0 && (b - a).dot(c - b) < 0) return false;
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(a, b, v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

double menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double ab = (b - a).norm();
  const double bc = (c - b).norm();
  const double ac = (c - a).norm();
  const double area = 0.5 * cross(b - a, c - a);
  if (std::abs(area) < 1e-14 * ab * bc) return 0.0;
  return 4.0 * area / (ab * bc * ac);
}

BoundaryFrame build_frame(const PolygonalShape& shape) {
  const std::size_t n = shape.size();
  BoundaryFrame frame;
  frame.edge_tangents.resize(n);
  frame.edge_normals.resize(n);
  frame.edge_lengths.resize(n);
  frame.vertex_normals.resize(n);
  frame.curvature.resize(n);
  frame.arc.resize(n + 1);

  frame.arc[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = shape[shape.next(i)] - shape[i];
    const double len = e.norm();
    frame.edge_lengths[i] = len;
    frame.edge_tangents[i] = e / len;
    frame.edge_normals[i] = outward_normal(frame.edge_tangents[i]);
    frame.arc[i + 1] = frame.arc[i] + len;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = shape.prev(i);
    const Vec2 sum = frame.edge_normals[p] + frame.edge_normals[i];
    const double len = sum.norm();
    if (len < 1e-12) {
      throw GeometryError("vertex " + std::to_string(i) + " is a cusp; normal undefined");
    }
    frame.vertex_normals[i] = sum / len;
    frame.curvature[i] = menger_curvature(shape[p], shape[i], shape[shape.next(i)]);
  }
  return frame;
}

PolygonalShape resample_uniform(const PolygonalShape& shape, double target_spacing) {
  const BoundaryFrame frame = build_frame(shape);
  const double total = frame.length();
  if (!(target_spacing > 0) || !(target_spacing < total / 3)) {
    throw std::invalid_argument("resample spacing must lie in (0, L/3)");
  }
  const auto count = static_cast<std::size_t>(std::max(3.0, std::round(total / target_spacing)));
  const double step = total / static_cast<double>(count);

  std::vector<Vec2> points;
  points.reserve(count);
  std::size_t edge = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double s = step * static_cast<double>(j);
    while (edge + 1 < shape.size() && frame.arc[edge + 1] <= s) ++edge;
    const double local = s - frame.arc[edge];
    points.push_back(shape[edge] + local * frame.edge_tangents[edge]);
  }
  try {
    return PolygonalShape(std::move(points));
  } catch (const GeometryError& e) {
    throw GeometryError(std::string("resampling collapsed the boundary: ") + e.what());
  }
}

PolygonalShape make_circle(const Vec2& center, double radius, int n, double phase) {
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * i / n;
    pts[static_cast<std::size_t>(i)] = center + radius * Vec2(std::cos(t), std::sin(t));
  }
  return PolygonalShape(std::move(pts));
}

PolygonalShape make_ellipse(double a, double b, int n, const Vec2& center) {
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    pts[static_cast<std::size_t>(i)] = center + Vec2(a * std::cos(t), b * std::sin(t));
  }
  return PolygonalShape(std::move(pts));
}

PolygonalShape make_ellipse_arclength(double a, double b, int n, const Vec2& center) {
  const int fine = 256 * n;
  std::vector<double> arc(static_cast<std::size_t>(fine) + 1, 0.0);
  auto point = [&](double t) { return Vec2(a * std::cos(t), b * std::sin(t)); };
  const double dt = 2.0 * std::numbers::pi / fine;
  for (int i = 0; i < fine; ++i) {
    arc[static_cast<std::size_t>(i) + 1] = arc[static_cast<std::size_t>(i)] + (point((i + 1) * dt) - point(i * dt)).norm();
  }
  const double total = arc.back();
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  std::size_t k = 0;
  for (int j = 0; j < n; ++j) {
    const double s = total * j / n;
    while (k + 1 < arc.size() && arc[k + 1] < s) ++k;
    const double frac = arc[k + 1] > arc[k] ? (s - arc[k]) / (arc[k + 1] - arc[k]) : 0.0;
    pts[static_cast<std::size_t>(j)] = center + point((static_cast<double>(k) + frac) * dt);
  }
  return PolygonalShape(std::move(pts));
}

void write_polyline(const std::filesystem::path& path, const PolygonalShape& shape) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (const auto& v : shape.vertices()) out << v.x() << ' ' << v.y() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PolygonalShape read_polyline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Vec2> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    double x = 0, y = 0;
    if (!(ls >> x >> y)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected \"x y\"");
    }
    pts.emplace_back(x, y);
  }
  return PolygonalShape(std::move(pts));
}

}  // namespace shapenewton
