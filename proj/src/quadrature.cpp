#include "shapenewton/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

namespace shapenewton {

const TriangleRule& TriangleRule::degree4() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    r.degree = 4;
    const double a1 = 0.108103018168070, b1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.816847572980459, b2 = 0.091576213509771, w2 = 0.109951743655322;
    r.barycentric = {{a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1}, {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
    r.weights = {w1, w1, w1, w2, w2, w2};
    return r;
  }();
  return rule;
}

const TriangleRule& TriangleRule::degree6() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    r.degree = 6;
    const double a1 = 0.501426509658179, b1 = 0.249286745170910, w1 = 0.116786275726379;
    const double a2 = 0.873821971016996, b2 = 0.063089014491502, w2 = 0.050844906370207;
    const double a3 = 0.053145049844817, b3 = 0.310352451033784, c3 = 0.636502499121399, w3 = 0.082851075618374;
    r.barycentric = {{a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1}, {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2},
                     {a3, b3, c3}, {a3, c3, b3}, {b3, a3, c3}, {b3, c3, a3}, {c3, a3, b3}, {c3, b3, a3}};
    r.weights = {w1, w1, w1, w2, w2, w2, w3, w3, w3, w3, w3, w3};
    return r;
  }();
  return rule;
}

namespace {

template <unsigned N>
LineRule boost_gauss() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  LineRule r;
  r.degree = 2 * static_cast<int>(N) - 1;
  // Boost stores the non-negative half of the symmetric rule.
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    r.nodes.push_back(0.5 * (1.0 - x[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  if (N % 2 == 1) {
    r.nodes.push_back(0.5);
    r.weights.push_back(0.5 * w[0]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    r.nodes.push_back(0.5 * (1.0 + x[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

template <std::size_t... I>
LineRule dispatch_gauss(int points, std::index_sequence<I...>) {
  LineRule r;
  ((points == static_cast<int>(I + 1) ? (void)(r = boost_gauss<I + 1>()) : (void)0), ...);
  return r;
}

}  // namespace

LineRule LineRule::gauss_legendre(int points) {
  if (points < 1 || points > 12) throw std::invalid_argument("Gauss-Legendre rule supports 1..12 points");
  return dispatch_gauss(points, std::make_index_sequence<12>{});
}

double TriangulatedDomain::area(std::size_t t) const {
  return 0.5 * cross(corner(t, 1) - corner(t, 0), corner(t, 2) - corner(t, 0));
}

double TriangulatedDomain::diameter(std::size_t t) const {
  const Vec2& a = corner(t, 0);
  const Vec2& b = corner(t, 1);
  const Vec2& c = corner(t, 2);
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double TriangulatedDomain::total_area() const {
  double sum = 0;
  for (std::size_t t = 0; t < size(); ++t) sum += area(t);
  return sum;
}

namespace {

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0;
}

}  // namespace

TriangulatedDomain triangulate(const PolygonalShape& shape) {
  const std::size_t n = shape.size();
  TriangulatedDomain dom;
  dom.points = shape.vertices();

  Vec2 lo = shape[0], hi = shape[0];
  for (const auto& v : shape.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double min_area = 1e-14 * (hi - lo).squaredNorm();

  std::vector<std::size_t> prev(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = shape.prev(i);
    next[i] = shape.next(i);
  }
  auto turn = [&](std::size_t i) { return cross(dom.points[i] - dom.points[prev[i]], dom.points[next[i]] - dom.points[i]); };
  std::vector<char> alive(n, 1);

  auto is_ear = [&](std::size_t i) {
    if (turn(i) <= 0) return false;
    const Vec2& a = dom.points[prev[i]];
    const Vec2& b = dom.points[i];
    const Vec2& c = dom.points[next[i]];
    for (std::size_t j = next[next[i]]; j != prev[i]; j = next[j]) {
      if (turn(j) > 0) continue;  // only reflex or flat vertices can block an ear
      const Vec2& p = dom.points[j];
      if (p == a || p == b || p == c) continue;
      if (point_in_triangle(p, a, b, c)) return false;
    }
    return true;
  };

  auto emit = [&](std::size_t i) {
    const std::array<int, 3> tri{static_cast<int>(prev[i]), static_cast<int>(i), static_cast<int>(next[i])};
    const double a = 0.5 * cross(dom.points[next[i]] - dom.points[prev[i]], dom.points[i] - dom.points[prev[i]]);
    if (std::abs(a) > min_area) {
      dom.triangles.push_back({tri[0], tri[1], tri[2]});
      dom.level.push_back(0);
    }
    next[prev[i]] = next[i];
    prev[next[i]] = prev[i];
    alive[i] = 0;
  };

  std::size_t remaining = n;
  std::size_t cur = 0;
  while (remaining > 3) {
    std::size_t probe = cur;
    bool clipped = false;
    for (std::size_t k = 0; k < remaining; ++k) {
      if (is_ear(probe)) {
        cur = next[probe];
        emit(probe);
        clipped = true;
        break;
      }
      probe = next[probe];
    }
    if (!clipped) {
      // Only reachable through round-off on nearly flat chains: drop the
      // flattest vertex, which carries (numerically) zero area.
      std::size_t best = cur;
      double best_turn = -std::numeric_limits<double>::infinity();
      probe = cur;
      for (std::size_t k = 0; k < remaining; ++k) {
        const double t = turn(probe) / ((dom.points[probe] - dom.points[prev[probe]]).norm() *
                                        (dom.points[next[probe]] - dom.points[probe]).norm());
        if (t <= 0 && t > best_turn) {
          best_turn = t;
          best = probe;
        }
        probe = next[probe];
      }
      if (best_turn == -std::numeric_limits<double>::infinity()) {
        throw GeometryError("ear clipping failed: polygon is not simple");
      }
      cur = next[best];
      emit(best);
    }
    --remaining;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) {
      emit(i);
      break;
    }
  }
  // Ear orientation is (prev, i, next) which is counter-clockwise for a
  // convex vertex of a CCW polygon.
  return dom;
}

bool triangle_meets_disk(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& center, double radius) {
  if (point_in_triangle(center, a, b, c)) return true;
  auto seg_dist2 = [&](const Vec2& p, const Vec2& q) {
    const Vec2 d = q - p;
    const double len2 = d.squaredNorm();
    double t = len2 > 0 ? (center - p).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p + t * d - center).squaredNorm();
  };
  const double r2 = radius * radius;
  return seg_dist2(a, b) < r2 || seg_dist2(b, c) < r2 || seg_dist2(c, a) < r2;
}

namespace {

struct Refiner {
  std::span<const Vec2> anchors;
  double radius;
  RefinementOptions opts;
  SupportMesh out;

  void refine(const std::array<Vec2, 3>& tri, int level, const std::vector<int>& candidates) {
    std::vector<int> hits;
    for (int a : candidates) {
      if (triangle_meets_disk(tri[0], tri[1], tri[2], anchors[static_cast<std::size_t>(a)], radius)) hits.push_back(a);
    }
    const double l01 = (tri[1] - tri[0]).norm();
    const double l12 = (tri[2] - tri[1]).norm();
    const double l20 = (tri[0] - tri[2]).norm();
    const double diam = std::max({l01, l12, l20});
    if (hits.empty() || diam <= opts.diameter_factor * radius || level >= opts.max_level) {
      emit(tri, level, std::move(hits));
      return;
    }
    // Bisect the longest edge (i, i+1) at its midpoint.
    int i = 0;
    if (l12 >= l01 && l12 >= l20) i = 1;
    else if (l20 >= l01 && l20 >= l12) i = 2;
    const Vec2& p = tri[static_cast<std::size_t>(i)];
    const Vec2& q = tri[static_cast<std::size_t>((i + 1) % 3)];
    const Vec2& r = tri[static_cast<std::size_t>((i + 2) % 3)];
    const Vec2 m = 0.5 * (p + q);
    refine({p, m, r}, level + 1, hits);
    refine({m, q, r}, level + 1, hits);
  }

  void emit(const std::array<Vec2, 3>& tri, int level, std::vector<int> hits) {
    const int base = static_cast<int>(out.domain.points.size());
    out.domain.points.insert(out.domain.points.end(), tri.begin(), tri.end());
    out.domain.triangles.push_back({base, base + 1, base + 2});
    out.domain.level.push_back(level);
    out.touching.push_back(std::move(hits));
  }
};

}  // namespace

SupportMesh build_support_mesh(const PolygonalShape& shape, std::span<const Vec2> anchors, double radius,
                               const RefinementOptions& opts) {
  const TriangulatedDomain coarse = triangulate(shape);
  Refiner refiner{anchors, radius, opts, {}};
  refiner.out.radius = radius;
  std::vector<int> all(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) all[i] = static_cast<int>(i);
  for (std::size_t t = 0; t < coarse.size(); ++t) {
    refiner.refine({coarse.corner(t, 0), coarse.corner(t, 1), coarse.corner(t, 2)}, coarse.level[t], all);
  }
  return std::move(refiner.out);
}

TriangulatedDomain refine_near_supports(const TriangulatedDomain& dom, std::span<const Vec2> anchors, double radius,
                                        const RefinementOptions& opts) {
  Refiner refiner{anchors, radius, opts, {}};
  std::vector<int> all(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) all[i] = static_cast<int>(i);
  for (std::size_t t = 0; t < dom.size(); ++t) {
    refiner.refine({dom.corner(t, 0), dom.corner(t, 1), dom.corner(t, 2)}, dom.level[t], all);
  }
  return std::move(refiner.out.domain);
}

double integrate_domain(const TriangulatedDomain& dom, const std::function<double(const Vec2&)>& integrand,
                        const TriangleRule& rule) {
  double sum = 0;
  for (std::size_t t = 0; t < dom.size(); ++t) {
    for_each_point(dom, t, rule, [&](const Vec2& p, double w) { sum += w * integrand(p); });
  }
  return sum;
}

double integrate_boundary(const PolygonalShape& shape, const BoundaryFrame& frame,
                          const std::function<double(const Vec2&, const Vec2&)>& integrand, int nodes_per_edge) {
  if (nodes_per_edge < 2) throw std::invalid_argument("nodes_per_edge must be at least 2");
  const LineRule rule = LineRule::gauss_legendre(nodes_per_edge);
  double sum = 0;
  for (std::size_t e = 0; e < shape.size(); ++e) {
    const Vec2& a = shape[e];
    const Vec2 d = shape[shape.next(e)] - a;
    const double len = frame.edge_lengths[e];
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      sum += rule.weights[q] * len * integrand(a + rule.nodes[q] * d, frame.edge_normals[e]);
    }
  }
  return sum;
}

std::vector<BoundaryNode> build_boundary_quadrature(const PolygonalShape& shape, const BoundaryFrame& frame,
                                                    std::span<const Vec2> anchors, double radius, int nodes_per_piece,
                                                    double diameter_factor) {
  const LineRule rule = LineRule::gauss_legendre(nodes_per_piece);
  std::vector<BoundaryNode> nodes;
  for (std::size_t e = 0; e < shape.size(); ++e) {
    const Vec2& a = shape[e];
    const Vec2 d = shape[shape.next(e)] - a;
    const double len = frame.edge_lengths[e];

    // Support circles crossing this edge: |a + t d - x|^2 = radius^2.
    std::vector<double> breaks{0.0, 1.0};
    std::vector<int> near;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const Vec2 w = a - anchors[i];
      const double A = d.squaredNorm();
      const double B = 2.0 * w.dot(d);
      const double C = w.squaredNorm() - radius * radius;
      const double disc = B * B - 4 * A * C;
      if (disc <= 0) continue;
      const double sq = std::sqrt(disc);
      const double t0 = (-B - sq) / (2 * A);
      const double t1 = (-B + sq) / (2 * A);
      if (t1 <= 0 || t0 >= 1) continue;
      near.push_back(static_cast<int>(i));
      for (double t : {t0, t1, -B / (2 * A)}) {
        if (t > 0 && t < 1) breaks.push_back(t);
      }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double t0 = breaks[k];
      const double t1 = breaks[k + 1];
      if (t1 - t0 <= 0) continue;
      const Vec2 mid = a + 0.5 * (t0 + t1) * d;
      std::vector<int> touching;
      for (int i : near) {
        if ((mid - anchors[static_cast<std::size_t>(i)]).norm() < radius) touching.push_back(i);
      }
      int pieces = 1;
      if (!touching.empty()) {
        const double piece_len = (t1 - t0) * len;
        pieces = std::max(1, static_cast<int>(std::ceil(piece_len / (diameter_factor * radius))));
      }
      const double h = (t1 - t0) / pieces;
      for (int p = 0; p < pieces; ++p) {
        const double s0 = t0 + p * h;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
          const double t = s0 + rule.nodes[q] * h;
          nodes.push_back({a + t * d, frame.edge_normals[e], rule.weights[q] * h * len, e, t, touching});
        }
      }
    }
  }
  return nodes;
}

void write_mesh(const std::filesystem::path& path, const TriangulatedDomain& dom) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << dom.points.size() << '\n';
  for (const auto& p : dom.points) out << p.x() << ' ' << p.y() << '\n';
  out << dom.triangles.size() << '\n';
  for (const auto& t : dom.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace shapenewton
