#pragma once

// Planar geometric primitives: bounding boxes, the batched sparse bbox
// membership matrix, and the sorted crossing-number point-in-polygon kernel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fastmap {

struct Point {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline bool is_finite(Point p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat);
}

/// Axis-aligned box in degrees. Invariant: x_min <= x_max, y_min <= y_max.
struct BBox {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  Point center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }

  /// Closed-rectangle overlap (touching counts).
  bool intersects(const BBox& o) const {
    return x_min <= o.x_max && o.x_min <= x_max && y_min <= o.y_max &&
           o.y_min <= y_max;
  }

  /// Closed containment (border included).
  bool contains_closed(Point p) const {
    return x_min <= p.lon && p.lon <= x_max && y_min <= p.lat && p.lat <= y_max;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Strict interior test; points on the border are outside.
inline bool bbox_contains(const BBox& box, Point p) {
  return box.x_min < p.lon && p.lon < box.x_max && box.y_min < p.lat &&
         p.lat < box.y_max;
}

/// Node/edge representation of a possibly multiply-connected region boundary.
/// Edges form closed rings; the crossing-number kernel only looks at edges,
/// so hole rings need no special marking. ring_starts records where each ring
/// begins in `nodes` (construction metadata used by serialization).
struct PolygonGeometry {
  std::vector<Point> nodes;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<std::uint32_t> ring_starts;

  bool empty() const { return edges.empty(); }
  std::size_t edge_count() const { return edges.size(); }

  /// Appends one closed ring. `ring` is an open vertex list (no repeated
  /// closing vertex); the closing edge back to the first vertex is implied.
  void add_ring(std::span<const Point> ring) {
    if (ring.size() < 3) {
      throw std::invalid_argument("polygon ring needs at least 3 vertices");
    }
    const auto base = static_cast<std::uint32_t>(nodes.size());
    ring_starts.push_back(base);
    nodes.insert(nodes.end(), ring.begin(), ring.end());
    const auto n = static_cast<std::uint32_t>(ring.size());
    for (std::uint32_t i = 0; i + 1 < n; ++i) {
      edges.emplace_back(base + i, base + i + 1);
    }
    edges.emplace_back(base + n - 1, base);
  }
};

/// Tight bounds over all vertices.
inline BBox polygon_bbox(const PolygonGeometry& poly) {
  if (poly.nodes.empty()) {
    throw std::invalid_argument("polygon_bbox: empty polygon");
  }
  BBox b{poly.nodes[0].lon, poly.nodes[0].lon, poly.nodes[0].lat,
         poly.nodes[0].lat};
  for (const Point& p : poly.nodes) {
    b.x_min = std::min(b.x_min, p.lon);
    b.x_max = std::max(b.x_max, p.lon);
    b.y_min = std::min(b.y_min, p.lat);
    b.y_max = std::max(b.y_max, p.lat);
  }
  return b;
}

/// Sparse boolean points x boxes matrix. Entry (i,j) is set iff point i lies
/// strictly inside box j. Both orientations are kept: rows drive the
/// "how many candidates does this point have" logic, columns drive the
/// "which points must be tested against region j" batching.
struct MembershipMatrix {
  std::size_t n_points = 0;
  std::size_t n_boxes = 0;
  std::vector<std::vector<std::uint32_t>> rows;  // per point, ascending box ids
  std::vector<std::vector<std::uint32_t>> cols;  // per box, ascending point ids

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.size();
    return n;
  }
};

/// Batched membership of every point in every box. Points are sorted by
/// longitude once; each box then scans only the slab of points inside its
/// (x_min, x_max) range, found by binary search, and filters by latitude.
inline MembershipMatrix bbox_membership(std::span<const Point> points,
                                        std::span<const BBox> boxes) {
  if (boxes.empty()) {
    throw std::invalid_argument("bbox_membership: empty box list");
  }
  MembershipMatrix m;
  m.n_points = points.size();
  m.n_boxes = boxes.size();
  m.rows.resize(points.size());
  m.cols.resize(boxes.size());
  if (points.empty()) return m;

  std::vector<std::uint32_t> order(points.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return points[a].lon < points[b].lon;
  });
  std::vector<double> xs(points.size());
  for (std::size_t k = 0; k < order.size(); ++k) xs[k] = points[order[k]].lon;

  for (std::uint32_t j = 0; j < boxes.size(); ++j) {
    const BBox& b = boxes[j];
    // strict inequalities: first lon > x_min, up to (not including) lon >= x_max
    const auto lo = std::upper_bound(xs.begin(), xs.end(), b.x_min) - xs.begin();
    const auto hi = std::lower_bound(xs.begin(), xs.end(), b.x_max) - xs.begin();
    auto& col = m.cols[j];
    for (auto k = lo; k < hi; ++k) {
      const std::uint32_t i = order[k];
      const double y = points[i].lat;
      if (b.y_min < y && y < b.y_max) col.push_back(i);
    }
    std::sort(col.begin(), col.end());
  }
  for (std::uint32_t j = 0; j < m.cols.size(); ++j) {
    for (std::uint32_t i : m.cols[j]) m.rows[i].push_back(j);
  }
  return m;
}

namespace detail {

// Parity predicate shared by the batched and scalar kernels. The edge is
// oriented upward (lo.lat < hi.lat); the +x ray from p crosses it iff p lies
// strictly left of the directed edge line. cross == 0 (p exactly on the edge
// line) never flips, which is the deterministic tie rule for on-edge points.
inline bool ray_crosses(Point p, Point lo, Point hi) {
  return (hi.lon - lo.lon) * (p.lat - lo.lat) -
             (hi.lat - lo.lat) * (p.lon - lo.lon) >
         0.0;
}

}  // namespace detail

/// Batched even-odd crossing-number test. Query points are sorted by
/// latitude; for each edge the candidate points with lo.lat < lat <= hi.lat
/// are located by binary search and their parity flipped when the rightward
/// ray crosses the edge. An edge endpoint exactly at a query latitude counts
/// as lying above it, so shared ring vertices are never double counted.
/// Runs in O((N_pt + N_edges) log N_pt) plus the actual overlap work.
inline std::vector<std::uint8_t> points_in_polygon(std::span<const Point> points,
                                                   const PolygonGeometry& poly) {
  std::vector<std::uint8_t> inside(points.size(), 0);
  if (points.empty() || poly.edges.empty()) return inside;

  std::vector<std::uint32_t> order(points.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return points[a].lat < points[b].lat;
  });
  std::vector<double> ys(points.size());
  for (std::size_t k = 0; k < order.size(); ++k) ys[k] = points[order[k]].lat;

  for (const auto& [a, b] : poly.edges) {
    Point lo = poly.nodes[a];
    Point hi = poly.nodes[b];
    if (lo.lat == hi.lat) continue;  // horizontal edges never cross the ray
    if (lo.lat > hi.lat) std::swap(lo, hi);
    const auto first = std::upper_bound(ys.begin(), ys.end(), lo.lat) - ys.begin();
    const auto last = std::upper_bound(ys.begin(), ys.end(), hi.lat) - ys.begin();
    for (auto k = first; k < last; ++k) {
      const std::uint32_t i = order[k];
      if (detail::ray_crosses(points[i], lo, hi)) inside[i] ^= 1u;
    }
  }
  return inside;
}

/// Scalar variant with the identical parity rule; used where single points
/// are tested (cell classification, center ownership).
inline bool point_in_polygon(Point p, const PolygonGeometry& poly) {
  bool in = false;
  for (const auto& [a, b] : poly.edges) {
    Point lo = poly.nodes[a];
    Point hi = poly.nodes[b];
    if (lo.lat > hi.lat) std::swap(lo, hi);
    if (lo.lat < p.lat && p.lat <= hi.lat && detail::ray_crosses(p, lo, hi)) {
      in = !in;
    }
  }
  return in;
}

}  // namespace fastmap
