#pragma once

// Cell-approximation index: leaf polygons are covered by non-overlapping
// quadtree cells classified interior (exactly one polygon) or boundary
// (candidate list), the cells are keyed by 64-bit ids and indexed in a radix
// trie. Queries resolve interior hits with zero polygon tests; boundary hits
// are refined with the crossing-number kernel (exact) or answered with the
// cell's deemed polygon (approximate, error bounded by the cell diagonal).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastmap/geometry.hpp"
#include "fastmap/hierarchy.hpp"
#include "fastmap/io.hpp"
#include "fastmap/simple_mapper.hpp"

namespace fastmap {

inline constexpr BBox kWorldBounds{-180.0, 180.0, -90.0, 90.0};

/// 64-bit quadtree cell id: the path from the root (2 bits per level, child
/// order SW=0 SE=1 NW=2 NE=3, most significant first) followed by a single
/// 1 sentinel bit, zero padded. The sentinel is always the lowest set bit,
/// so the level and the covered id range fall out of bit arithmetic.
class CellId {
 public:
  static constexpr int kMaxLevel = 30;

  constexpr CellId() = default;
  constexpr explicit CellId(std::uint64_t raw) : id_(raw) {}

  static constexpr CellId root() { return CellId(std::uint64_t{1} << 63); }

  constexpr std::uint64_t value() const { return id_; }

  bool valid() const {
    if (id_ == 0) return false;
    const int s = std::countr_zero(id_);
    return (63 - s) % 2 == 0 && (63 - s) / 2 <= kMaxLevel;
  }

  int level() const { return (63 - std::countr_zero(id_)) / 2; }

  CellId child(int quadrant) const {
    const int s = std::countr_zero(id_);
    if (s < 5) throw std::invalid_argument("CellId::child: already at max level");
    const std::uint64_t path = id_ ^ (std::uint64_t{1} << s);
    return CellId(path | (static_cast<std::uint64_t>(quadrant & 3) << (s - 1)) |
                  (std::uint64_t{1} << (s - 2)));
  }

  CellId parent() const {
    const int s = std::countr_zero(id_);
    if (s > 61) throw std::invalid_argument("CellId::parent: root has no parent");
    return CellId((id_ & ~(std::uint64_t{7} << s)) |
                  (std::uint64_t{1} << (s + 2)));
  }

  /// Ancestor-or-self containment. Descendant ids lie numerically inside
  /// (id - lsb, id + lsb) because they share the path prefix and move the
  /// sentinel down.
  bool contains(CellId o) const {
    const std::uint64_t lsb = id_ & (~id_ + 1);
    return o.id_ >= id_ - lsb + 1 && o.id_ <= id_ + lsb - 1;
  }

  bool is_ancestor_of(CellId o) const { return id_ != o.id_ && contains(o); }

  /// Column/row of this cell on its level's 2^level x 2^level grid.
  std::pair<std::uint32_t, std::uint32_t> ij() const {
    const int lvl = level();
    std::uint32_t ix = 0, iy = 0;
    if (lvl == 0) return {ix, iy};
    const std::uint64_t path = id_ >> (64 - 2 * lvl);
    for (int l = lvl - 1; l >= 0; --l) {
      const auto q = static_cast<std::uint32_t>((path >> (2 * l)) & 3);
      ix = (ix << 1) | (q & 1);
      iy = (iy << 1) | (q >> 1);
    }
    return {ix, iy};
  }

  static CellId from_ij(std::uint32_t ix, std::uint32_t iy, int lvl) {
    if (lvl == 0) return root();
    // interleave: level l's (y, x) bit pair lands at path bits 2(lvl-1-l)+1,2(lvl-1-l)
    const std::uint64_t path = (spread_bits(iy) << 1) | spread_bits(ix);
    return CellId((path << (64 - 2 * lvl)) | (std::uint64_t{1} << (63 - 2 * lvl)));
  }

  /// Cell on the level-`lvl` grid whose half-open [x0,x1) x [y0,y1) rectangle
  /// contains p; the top/right domain edges belong to the outermost cells.
  static CellId from_point(Point p, int lvl) {
    if (lvl < 0 || lvl > kMaxLevel) {
      throw std::invalid_argument("cell level must be in [0, 30]");
    }
    if (!(p.lon >= kWorldBounds.x_min && p.lon <= kWorldBounds.x_max &&
          p.lat >= kWorldBounds.y_min && p.lat <= kWorldBounds.y_max)) {
      throw std::domain_error("point outside the lon/lat domain");
    }
    const double scale = std::ldexp(1.0, lvl);
    const double u = (p.lon - kWorldBounds.x_min) / 360.0;
    const double v = (p.lat - kWorldBounds.y_min) / 180.0;
    const auto cap = static_cast<std::uint32_t>(scale - 1.0);
    const auto ix = std::min(cap, static_cast<std::uint32_t>(u * scale));
    const auto iy = std::min(cap, static_cast<std::uint32_t>(v * scale));
    return from_ij(ix, iy, lvl);
  }

  /// Cell rectangle. Grid lines are dyadic fractions of the domain, so the
  /// arithmetic below is exact for every level up to 30.
  BBox rect() const {
    const int lvl = level();
    const auto [ix, iy] = ij();
    const double scale = std::ldexp(1.0, lvl);
    return {kWorldBounds.x_min + 360.0 * ix / scale,
            kWorldBounds.x_min + 360.0 * (ix + 1) / scale,
            kWorldBounds.y_min + 180.0 * iy / scale,
            kWorldBounds.y_min + 180.0 * (iy + 1) / scale};
  }

  friend bool operator==(CellId, CellId) = default;
  friend auto operator<=>(CellId, CellId) = default;

 private:
  // 30-bit value expanded to the even bit positions
  static std::uint64_t spread_bits(std::uint64_t x) {
    x &= 0x3FFFFFFF;
    x = (x | (x << 16)) & 0x0000FFFF0000FFFF;
    x = (x | (x << 8)) & 0x00FF00FF00FF00FF;
    x = (x | (x << 4)) & 0x0F0F0F0F0F0F0F0F;
    x = (x | (x << 2)) & 0x3333333333333333;
    x = (x | (x << 1)) & 0x5555555555555555;
    return x;
  }

  std::uint64_t id_ = 0;
};

inline CellId cell_from_point(Point p, int level) {
  return CellId::from_point(p, level);
}

/// Diagonal of any level-`lvl` cell (uniform across the planar grid).
inline double level_diagonal(int lvl) {
  const double scale = std::ldexp(1.0, lvl);
  return std::hypot(360.0 / scale, 180.0 / scale);
}

// ---------------------------------------------------------------------------
// Cell classification
// ---------------------------------------------------------------------------

enum class CellKind : std::uint8_t { outside = 0, interior = 1, boundary = 2 };

struct CellClass {
  CellKind kind = CellKind::outside;
  std::vector<std::uint32_t> polygons;  // interior: one; boundary: ascending
};

namespace cell_detail {

/// True iff the segment a-b has at least one point strictly inside the
/// rectangle. A segment that only touches the border does not separate the
/// rectangle's interior, so it is not a boundary crossing.
inline bool segment_enters_rect(Point a, Point b, const BBox& r) {
  const double dx = b.lon - a.lon;
  const double dy = b.lat - a.lat;
  double t0 = 0.0, t1 = 1.0;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double t = q / p;
    if (p < 0.0) {
      if (t > t0) t0 = t;
    } else {
      if (t < t1) t1 = t;
    }
    return t0 <= t1;
  };
  if (!clip(-dx, a.lon - r.x_min)) return false;
  if (!clip(dx, r.x_max - a.lon)) return false;
  if (!clip(-dy, a.lat - r.y_min)) return false;
  if (!clip(dy, r.y_max - a.lat)) return false;
  const double tm = 0.5 * (t0 + t1);
  const Point m{a.lon + tm * dx, a.lat + tm * dy};
  return r.x_min < m.lon && m.lon < r.x_max && r.y_min < m.lat &&
         m.lat < r.y_max;
}

inline bool any_edge_enters(const PolygonGeometry& g, const BBox& rect) {
  for (const auto& [i, j] : g.edges) {
    if (segment_enters_rect(g.nodes[i], g.nodes[j], rect)) return true;
  }
  return false;
}

inline CellClass classify_rect(const BBox& rect,
                               std::span<const LeafRegion> leaves,
                               std::span<const std::uint32_t> candidates) {
  CellClass out;
  for (std::uint32_t c : candidates) {
    if (!rect.intersects(leaves[c].bbox)) continue;
    if (any_edge_enters(*leaves[c].geometry, rect)) out.polygons.push_back(c);
  }
  if (!out.polygons.empty()) {
    out.kind = CellKind::boundary;
    return out;
  }
  const Point ctr = rect.center();
  for (std::uint32_t c : candidates) {
    if (leaves[c].bbox.contains_closed(ctr) &&
        point_in_polygon(ctr, *leaves[c].geometry)) {
      out.polygons.push_back(c);
    }
  }
  if (out.polygons.size() == 1) {
    out.kind = CellKind::interior;
  } else {
    out.polygons.clear();
  }
  return out;
}

}  // namespace cell_detail

/// Classifies one cell against a set of leaf polygons: boundary when any
/// polygon edge enters the cell, else interior of the unique polygon owning
/// the cell center, else outside.
inline CellClass classify_cell(CellId cell, std::span<const LeafRegion> leaves) {
  std::vector<std::uint32_t> all(leaves.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  return cell_detail::classify_rect(cell.rect(), leaves, all);
}

// ---------------------------------------------------------------------------
// Cover construction
// ---------------------------------------------------------------------------

enum class CoverMode : std::uint8_t { exact = 0, approx = 1 };

struct CoverParams {
  int max_level = 30;           // subdivision floor for boundary cells (exact)
  CoverMode mode = CoverMode::exact;
  double epsilon = 0.0;         // approx: boundary cell diagonal bound, degrees
};

struct CellEntry {
  std::uint64_t id = 0;
  std::uint32_t first = 0;   // interior: leaf index; boundary: offset into pool
  std::uint16_t count = 0;
  std::uint16_t deemed = 0;  // boundary: offset of the deemed leaf in its slice
  CellKind kind = CellKind::outside;
};

struct CellCover {
  CoverParams params;
  std::size_t n_leaves = 0;
  std::vector<CellEntry> entries;      // ascending by id, non-overlapping
  std::vector<std::uint32_t> pool;     // boundary candidate lists

  std::span<const std::uint32_t> candidates(const CellEntry& e) const {
    return {pool.data() + e.first, e.count};
  }
  std::uint32_t interior_leaf(const CellEntry& e) const { return e.first; }
  std::uint32_t deemed_leaf(const CellEntry& e) const {
    return pool[e.first + e.deemed];
  }
};

namespace cell_detail {

class CoverBuilder {
 public:
  CoverBuilder(std::span<const LeafRegion> leaves, const CoverParams& params)
      : leaves_(leaves), params_(params) {
    for (int l = 0; l <= CellId::kMaxLevel; ++l) diag_[l] = level_diagonal(l);
  }

  CellCover build() {
    CellCover cover;
    cover.params = params_;
    cover.n_leaves = leaves_.size();
    if (!leaves_.empty()) {
      std::vector<std::uint32_t> all(leaves_.size());
      for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
      visit(CellId::root(), kWorldBounds, all);
      std::sort(entries_.begin(), entries_.end(),
                [](const CellEntry& a, const CellEntry& b) { return a.id < b.id; });
      cover.entries = std::move(entries_);
      cover.pool = std::move(pool_);
    }
    return cover;
  }

 private:
  void visit(CellId cell, const BBox& rect, const std::vector<std::uint32_t>& cand) {
    const CellClass cls = classify_rect(rect, leaves_, cand);
    if (cls.kind == CellKind::outside) return;
    if (cls.kind == CellKind::interior) {
      entries_.push_back(
          {cell.value(), cls.polygons[0], 1, 0, CellKind::interior});
      return;
    }

    const int lvl = cell.level();
    const bool stop = (params_.mode == CoverMode::exact)
                          ? lvl >= params_.max_level
                          : diag_[lvl] <= params_.epsilon;
    if (stop) {
      emit_boundary(cell, rect, cls.polygons);
      return;
    }

    const double mx = 0.5 * (rect.x_min + rect.x_max);
    const double my = 0.5 * (rect.y_min + rect.y_max);
    const BBox quads[4] = {{rect.x_min, mx, rect.y_min, my},    // SW
                           {mx, rect.x_max, rect.y_min, my},    // SE
                           {rect.x_min, mx, my, rect.y_max},    // NW
                           {mx, rect.x_max, my, rect.y_max}};   // NE
    std::vector<std::uint32_t> child_cand;
    for (int q = 0; q < 4; ++q) {
      child_cand.clear();
      for (std::uint32_t c : cand) {
        if (quads[q].intersects(leaves_[c].bbox)) child_cand.push_back(c);
      }
      if (!child_cand.empty()) visit(cell.child(q), quads[q], child_cand);
    }
  }

  void emit_boundary(CellId cell, const BBox& rect,
                     const std::vector<std::uint32_t>& hits) {
    if (hits.size() > 0xFFFF) {
      throw std::runtime_error("boundary cell with more than 65535 candidates");
    }
    const Point ctr = rect.center();
    std::int64_t deemed = -1;
    for (std::size_t k = 0; k < hits.size(); ++k) {
      if (leaves_[hits[k]].bbox.contains_closed(ctr) &&
          point_in_polygon(ctr, *leaves_[hits[k]].geometry)) {
        deemed = static_cast<std::int64_t>(k);
        break;
      }
    }
    if (deemed < 0) {
      double best = 0.0;
      for (std::size_t k = 0; k < hits.size(); ++k) {
        const Point bc = leaves_[hits[k]].bbox.center();
        const double d2 = (bc.lon - ctr.lon) * (bc.lon - ctr.lon) +
                          (bc.lat - ctr.lat) * (bc.lat - ctr.lat);
        if (deemed < 0 || d2 < best) {
          deemed = static_cast<std::int64_t>(k);
          best = d2;
        }
      }
    }
    CellEntry e;
    e.id = cell.value();
    e.first = static_cast<std::uint32_t>(pool_.size());
    e.count = static_cast<std::uint16_t>(hits.size());
    e.deemed = static_cast<std::uint16_t>(deemed);
    e.kind = CellKind::boundary;
    pool_.insert(pool_.end(), hits.begin(), hits.end());
    entries_.push_back(e);
  }

  std::span<const LeafRegion> leaves_;
  CoverParams params_;
  std::array<double, CellId::kMaxLevel + 1> diag_{};
  std::vector<CellEntry> entries_;
  std::vector<std::uint32_t> pool_;
};

}  // namespace cell_detail

inline void validate_cover_params(const CoverParams& params) {
  if (params.max_level < 0 || params.max_level > CellId::kMaxLevel) {
    throw std::invalid_argument("max_level must be in [0, 30]");
  }
  if (params.mode == CoverMode::approx) {
    const double floor = level_diagonal(CellId::kMaxLevel);
    if (!(params.epsilon > 0.0) || params.epsilon < floor) {
      throw std::invalid_argument(
          "approx epsilon must be at least the level-30 cell diagonal (" +
          std::to_string(floor) + " degrees)");
    }
  }
}

inline CellCover build_cover(std::span<const LeafRegion> leaves,
                             const CoverParams& params) {
  validate_cover_params(params);
  return cell_detail::CoverBuilder(leaves, params).build();
}

inline CellCover build_cover(const RegionHierarchy& h, const CoverParams& params) {
  const auto leaves = collect_leaves(h);
  return build_cover(leaves, params);
}

// ---------------------------------------------------------------------------
// Radix trie over cell ids
// ---------------------------------------------------------------------------

/// Radix tree indexing cover entries by their id path, consuming
/// `levels_per_node` quadtree levels (2 bits each) per trie level. Entries at
/// shallower quadtree levels terminate at shallower trie depth; an entry whose
/// path does not fill its final node's chunk occupies every matching slot.
/// Slot encoding: 0 empty, +k child node k-1, -k entry k-1.
struct TrieIndex {
  int levels_per_node = 1;   // F: 1, 2 or 4
  std::uint32_t fanout = 4;  // 4^F slots per node
  std::vector<std::int32_t> slots;
  const CellCover* cover = nullptr;

  std::size_t node_count() const { return slots.size() / fanout; }

  struct Hit {
    const CellEntry* entry = nullptr;
    int visits = 0;  // trie nodes touched
  };

  /// Longest-prefix lookup for a leaf-level (level 30) cell id.
  Hit lookup(CellId q) const {
    const std::uint64_t raw = q.value();
    const std::uint64_t epath = raw ^ (raw & (~raw + 1));
    const int per = 2 * levels_per_node;
    const int max_depth = (CellId::kMaxLevel + levels_per_node - 1) / levels_per_node;
    std::uint32_t node = 0;
    Hit hit;
    for (int d = 0; d < max_depth; ++d) {
      ++hit.visits;
      const auto chunk = static_cast<std::uint32_t>(
          (epath >> (64 - per * (d + 1))) & (fanout - 1));
      const std::int32_t v = slots[node * fanout + chunk];
      if (v == 0) return hit;
      if (v < 0) {
        hit.entry = &cover->entries[static_cast<std::size_t>(-v - 1)];
        return hit;
      }
      node = static_cast<std::uint32_t>(v - 1);
    }
    return hit;
  }
};

inline TrieIndex build_trie(const CellCover& cover, int levels_per_node) {
  if (levels_per_node != 1 && levels_per_node != 2 && levels_per_node != 4) {
    throw std::invalid_argument("trie fanout must be 1, 2 or 4 levels per node");
  }
  TrieIndex t;
  t.levels_per_node = levels_per_node;
  t.fanout = std::uint32_t{1} << (2 * levels_per_node);
  t.cover = &cover;
  t.slots.assign(t.fanout, 0);  // root

  const int per = 2 * levels_per_node;
  for (std::size_t idx = 0; idx < cover.entries.size(); ++idx) {
    const CellEntry& e = cover.entries[idx];
    const CellId cell(e.id);
    const int lvl = cell.level();
    const std::uint64_t epath = e.id ^ (e.id & (~e.id + 1));
    const int n_levels =
        std::max(1, (lvl + levels_per_node - 1) / levels_per_node);

    std::uint32_t node = 0;
    for (int d = 0; d + 1 < n_levels; ++d) {
      const auto chunk = static_cast<std::uint32_t>(
          (epath >> (64 - per * (d + 1))) & (t.fanout - 1));
      const std::size_t ref = static_cast<std::size_t>(node) * t.fanout + chunk;
      const std::int32_t v = t.slots[ref];
      if (v < 0) {
        throw std::runtime_error("overlapping cell entries in cover");
      }
      if (v == 0) {
        const auto fresh = static_cast<std::int32_t>(t.node_count());
        t.slots.resize(t.slots.size() + t.fanout, 0);
        t.slots[ref] = fresh + 1;
        node = static_cast<std::uint32_t>(fresh);
      } else {
        node = static_cast<std::uint32_t>(v - 1);
      }
    }

    // terminal node: the entry covers 4^(F-r) slots when only r of the F
    // quadtree levels remain
    const int remaining = lvl - levels_per_node * (n_levels - 1);
    const auto base = static_cast<std::uint32_t>(
        (epath >> (64 - per * n_levels)) & (t.fanout - 1));
    const std::uint32_t span =
        std::uint32_t{1} << (2 * (levels_per_node - remaining));
    for (std::uint32_t k = base; k < base + span; ++k) {
      const std::size_t ref = static_cast<std::size_t>(node) * t.fanout + k;
      if (t.slots[ref] != 0) {
        throw std::runtime_error("overlapping cell entries in cover");
      }
      t.slots[ref] = -static_cast<std::int32_t>(idx) - 1;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Query
// ---------------------------------------------------------------------------

namespace cell_detail {

inline void set_leaf(AssignmentResult& res, std::size_t i, const LeafRegion& leaf) {
  res.state[i] = static_cast<std::int32_t>(leaf.state);
  res.county[i] = static_cast<std::int32_t>(leaf.county);
  res.block[i] = static_cast<std::int32_t>(leaf.block);
}

}  // namespace cell_detail

/// Batched point lookup. Interior hits and (in approx mode) boundary hits
/// need no polygon test; exact-mode boundary hits are refined per candidate
/// polygon in ascending region order, first hit wins. Points outside the
/// lon/lat domain or in uncovered cells stay unassigned.
inline AssignmentResult query_leaves(const TrieIndex& trie,
                                     std::span<const LeafRegion> leaves,
                                     std::span<const Point> points,
                                     CoverMode mode) {
  const CellCover& cover = *trie.cover;
  if (mode == CoverMode::approx && cover.params.mode != CoverMode::approx) {
    throw std::invalid_argument(
        "approximate queries require an approximate-mode cover");
  }
  if (cover.n_leaves != leaves.size()) {
    throw std::invalid_argument("cover was built for a different hierarchy");
  }

  const std::size_t n = points.size();
  AssignmentResult res;
  res.state.assign(n, -1);
  res.county.assign(n, -1);
  res.block.assign(n, -1);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pending;  // (leaf, point)
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = points[i];
    if (!(p.lon >= kWorldBounds.x_min && p.lon <= kWorldBounds.x_max &&
          p.lat >= kWorldBounds.y_min && p.lat <= kWorldBounds.y_max)) {
      continue;  // out of domain: unassigned, not fatal
    }
    const auto hit = trie.lookup(CellId::from_point(p, CellId::kMaxLevel));
    if (hit.entry == nullptr) continue;
    const CellEntry& e = *hit.entry;
    if (e.kind == CellKind::interior) {
      cell_detail::set_leaf(res, i, leaves[cover.interior_leaf(e)]);
    } else if (mode == CoverMode::approx) {
      cell_detail::set_leaf(res, i, leaves[cover.deemed_leaf(e)]);
    } else {
      for (std::uint32_t c : cover.candidates(e)) {
        pending.emplace_back(c, static_cast<std::uint32_t>(i));
      }
    }
  }

  std::sort(pending.begin(), pending.end());
  std::vector<Point> batch_pts;
  std::vector<std::uint32_t> batch;
  std::size_t pos = 0;
  while (pos < pending.size()) {
    const std::uint32_t leaf_idx = pending[pos].first;
    batch.clear();
    batch_pts.clear();
    for (; pos < pending.size() && pending[pos].first == leaf_idx; ++pos) {
      const std::uint32_t i = pending[pos].second;
      if (res.block[i] >= 0) continue;  // already claimed by a lower region
      batch.push_back(i);
      batch_pts.push_back(points[i]);
    }
    if (batch.empty()) continue;
    res.counters.pip_calls += 1;
    res.counters.pip_point_evaluations += batch.size();
    const auto inside = points_in_polygon(batch_pts, *leaves[leaf_idx].geometry);
    for (std::size_t t = 0; t < batch.size(); ++t) {
      if (inside[t]) cell_detail::set_leaf(res, batch[t], leaves[leaf_idx]);
    }
  }
  return res;
}

inline AssignmentResult query(const TrieIndex& trie, const RegionHierarchy& h,
                              std::span<const Point> points, CoverMode mode) {
  const auto leaves = collect_leaves(h);
  return query_leaves(trie, leaves, points, mode);
}

// ---------------------------------------------------------------------------
// Size accounting and the FMCI file format. Both use the same declared
// layout, so reported bytes match the serialized entry array regardless of
// in-memory padding or allocator behavior:
//   interior entry: id u64 + kind u8 + leaf ref u32
//   boundary entry: id u64 + kind u8 + count u16 + refs u32 each + deemed u32
//   trie node:      fanout x i32 slots
// ---------------------------------------------------------------------------

struct IndexStats {
  std::size_t interior_cells = 0;
  std::size_t boundary_cells = 0;
  std::size_t trie_nodes = 0;
  std::size_t entry_bytes = 0;
  std::size_t node_bytes = 0;
  std::size_t total_bytes = 0;
};

inline IndexStats index_stats(const TrieIndex& trie, const CellCover& cover) {
  IndexStats s;
  for (const CellEntry& e : cover.entries) {
    if (e.kind == CellKind::interior) {
      s.interior_cells += 1;
      s.entry_bytes += 8 + 1 + 4;
    } else {
      s.boundary_cells += 1;
      s.entry_bytes += 8 + 1 + 2 + 4ull * e.count + 4;
    }
  }
  s.trie_nodes = trie.node_count();
  s.node_bytes = s.trie_nodes * trie.fanout * 4;
  s.total_bytes = s.entry_bytes + s.node_bytes;
  return s;
}

inline constexpr char kIndexMagic[4] = {'F', 'M', 'C', 'I'};
inline constexpr std::uint16_t kIndexVersion = 1;

struct IndexFile {
  CellCover cover;
  int levels_per_node = 1;
};

inline void save_index(const CellCover& cover, int levels_per_node,
                       const std::string& path) {
  BinaryWriter out(path);
  out.bytes(kIndexMagic, 4);
  out.u16(kIndexVersion);
  out.u8(static_cast<std::uint8_t>(cover.params.mode));
  out.u8(static_cast<std::uint8_t>(cover.params.max_level));
  out.f64(cover.params.epsilon);
  out.u8(static_cast<std::uint8_t>(levels_per_node));
  out.u64(cover.n_leaves);
  out.u64(cover.entries.size());
  for (const CellEntry& e : cover.entries) {
    out.u64(e.id);
    out.u8(static_cast<std::uint8_t>(e.kind));
    if (e.kind == CellKind::interior) {
      out.u32(e.first);
    } else {
      out.u16(e.count);
      for (std::uint32_t c : cover.candidates(e)) out.u32(c);
      out.u32(cover.deemed_leaf(e));
    }
  }
  out.close();
}

inline IndexFile load_index(const std::string& path) {
  BinaryReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kIndexMagic, 4)) {
    throw std::runtime_error("not an index file (bad magic): " + path);
  }
  const std::uint16_t version = in.u16();
  if (version != kIndexVersion) {
    throw std::runtime_error("unsupported index file version " +
                             std::to_string(version) + ": " + path);
  }
  IndexFile f;
  f.cover.params.mode = static_cast<CoverMode>(in.u8());
  f.cover.params.max_level = in.u8();
  f.cover.params.epsilon = in.f64();
  f.levels_per_node = in.u8();
  f.cover.n_leaves = in.u64();
  const std::uint64_t n_entries = in.u64();
  f.cover.entries.reserve(n_entries);
  for (std::uint64_t k = 0; k < n_entries; ++k) {
    CellEntry e;
    e.id = in.u64();
    if (!CellId(e.id).valid()) {
      throw std::runtime_error("corrupt cell id in index file: " + path);
    }
    e.kind = static_cast<CellKind>(in.u8());
    auto leaf_ref = [&](std::uint32_t ref) {
      if (ref >= f.cover.n_leaves) {
        throw std::runtime_error("polygon ref out of range in index file: " +
                                 path);
      }
      return ref;
    };
    if (e.kind == CellKind::interior) {
      e.first = leaf_ref(in.u32());
      e.count = 1;
    } else if (e.kind == CellKind::boundary) {
      e.count = in.u16();
      e.first = static_cast<std::uint32_t>(f.cover.pool.size());
      for (std::uint16_t c = 0; c < e.count; ++c) {
        f.cover.pool.push_back(leaf_ref(in.u32()));
      }
      const std::uint32_t deemed = in.u32();
      const auto slice = std::span<const std::uint32_t>(
          f.cover.pool.data() + e.first, e.count);
      const auto it = std::find(slice.begin(), slice.end(), deemed);
      if (it == slice.end()) {
        throw std::runtime_error("deemed polygon not in candidate list: " + path);
      }
      e.deemed = static_cast<std::uint16_t>(it - slice.begin());
    } else {
      throw std::runtime_error("corrupt entry kind in index file: " + path);
    }
    if (!f.cover.entries.empty() && e.id <= f.cover.entries.back().id) {
      throw std::runtime_error("index entries out of order: " + path);
    }
    f.cover.entries.push_back(e);
  }
  return f;
}

}  // namespace fastmap
