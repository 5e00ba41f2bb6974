#pragma once

// Three-level region hierarchy (state -> county -> block group), its
// flattened leaf view, and the FMCB binary serialization.

#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastmap/geometry.hpp"
#include "fastmap/io.hpp"

namespace fastmap {

inline constexpr std::size_t kFipsLength = 12;

struct RegionNode {
  std::int64_t fp_code = 0;
  std::string fips12;  // leaf level only: state(2)+county(3)+tract(6)+blockgroup(1)
  BBox bbox;
  PolygonGeometry geometry;
  std::vector<RegionNode> children;
};

struct HierarchyCounts {
  std::size_t states = 0;
  std::size_t counties = 0;
  std::size_t blocks = 0;

  friend bool operator==(const HierarchyCounts&, const HierarchyCounts&) = default;
};

struct RegionHierarchy {
  std::vector<RegionNode> states;
  HierarchyCounts counts;
};

inline HierarchyCounts compute_counts(const RegionHierarchy& h) {
  HierarchyCounts c;
  c.states = h.states.size();
  for (const auto& s : h.states) {
    c.counties += s.children.size();
    for (const auto& cty : s.children) c.blocks += cty.children.size();
  }
  return c;
}

/// Union of the state bounding boxes.
inline BBox hierarchy_bbox(const RegionHierarchy& h) {
  if (h.states.empty()) throw std::invalid_argument("hierarchy_bbox: no states");
  BBox b = h.states[0].bbox;
  for (const auto& s : h.states) {
    b.x_min = std::min(b.x_min, s.bbox.x_min);
    b.x_max = std::max(b.x_max, s.bbox.x_max);
    b.y_min = std::min(b.y_min, s.bbox.y_min);
    b.y_max = std::max(b.y_max, s.bbox.y_max);
  }
  return b;
}

/// Flattened leaf record. The global position in the collect_leaves() output
/// (states, counties, blocks each ascending) is the canonical region index
/// used for candidate ordering and index file references.
struct LeafRegion {
  std::uint32_t state = 0;   // index into RegionHierarchy::states
  std::uint32_t county = 0;  // index into that state's children
  std::uint32_t block = 0;   // index into that county's children
  BBox bbox;
  const PolygonGeometry* geometry = nullptr;
  const std::string* fips12 = nullptr;
};

inline std::vector<LeafRegion> collect_leaves(const RegionHierarchy& h) {
  std::vector<LeafRegion> leaves;
  leaves.reserve(h.counts.blocks);
  for (std::uint32_t s = 0; s < h.states.size(); ++s) {
    const auto& state = h.states[s];
    for (std::uint32_t c = 0; c < state.children.size(); ++c) {
      const auto& county = state.children[c];
      for (std::uint32_t b = 0; b < county.children.size(); ++b) {
        const auto& block = county.children[b];
        leaves.push_back(
            {s, c, b, block.bbox, &block.geometry, &block.fips12});
      }
    }
  }
  return leaves;
}

/// Builds the canonical 12-character leaf code from its numeric components.
inline std::string compose_fips12(int state_fp, int county_fp, int tract,
                                  int blockgroup) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d%03d%06d%01d", state_fp, county_fp,
                tract, blockgroup);
  return std::string(buf, kFipsLength);
}

// ---------------------------------------------------------------------------
// FMCB serialization: magic "FMCB", u16 version, little endian throughout.
// Per node: fp code, fips12 (leaves only), bbox, vertices, ring start
// offsets; non-leaf nodes carry their child count.
// ---------------------------------------------------------------------------

inline constexpr char kHierarchyMagic[4] = {'F', 'M', 'C', 'B'};
inline constexpr std::uint16_t kHierarchyVersion = 1;

namespace detail {

inline void write_node(BinaryWriter& out, const RegionNode& node, int depth) {
  out.i64(node.fp_code);
  if (depth == 2) {
    if (node.fips12.size() != kFipsLength) {
      throw std::runtime_error("leaf node without a 12-character FIPS code");
    }
    out.bytes(node.fips12.data(), kFipsLength);
  }
  out.f64(node.bbox.x_min);
  out.f64(node.bbox.x_max);
  out.f64(node.bbox.y_min);
  out.f64(node.bbox.y_max);
  out.u32(static_cast<std::uint32_t>(node.geometry.nodes.size()));
  for (const Point& p : node.geometry.nodes) {
    out.f64(p.lon);
    out.f64(p.lat);
  }
  out.u32(static_cast<std::uint32_t>(node.geometry.ring_starts.size()));
  for (std::uint32_t r : node.geometry.ring_starts) out.u32(r);
  if (depth < 2) {
    out.u32(static_cast<std::uint32_t>(node.children.size()));
    for (const RegionNode& child : node.children) {
      write_node(out, child, depth + 1);
    }
  }
}

inline RegionNode read_node(BinaryReader& in, int depth) {
  RegionNode node;
  node.fp_code = in.i64();
  if (depth == 2) {
    char fips[kFipsLength];
    in.bytes(fips, kFipsLength);
    node.fips12.assign(fips, kFipsLength);
  }
  node.bbox.x_min = in.f64();
  node.bbox.x_max = in.f64();
  node.bbox.y_min = in.f64();
  node.bbox.y_max = in.f64();
  const std::uint32_t n_vertices = in.u32();
  std::vector<Point> vertices(n_vertices);
  for (auto& p : vertices) {
    p.lon = in.f64();
    p.lat = in.f64();
  }
  const std::uint32_t n_rings = in.u32();
  std::vector<std::uint32_t> starts(n_rings);
  for (auto& r : starts) r = in.u32();
  // rebuild the geometry ring by ring so edge lists come out canonical
  for (std::uint32_t r = 0; r < n_rings; ++r) {
    const std::uint32_t begin = starts[r];
    const std::uint32_t end =
        (r + 1 < n_rings) ? starts[r + 1] : n_vertices;
    if (begin > end || end > n_vertices) {
      throw std::runtime_error("corrupt ring table in hierarchy file");
    }
    node.geometry.add_ring(
        std::span<const Point>(vertices.data() + begin, end - begin));
  }
  if (node.geometry.nodes.empty() && n_vertices > 0) {
    node.geometry.nodes = std::move(vertices);  // ringless degenerate payload
  }
  if (depth < 2) {
    const std::uint32_t n_children = in.u32();
    node.children.reserve(n_children);
    for (std::uint32_t i = 0; i < n_children; ++i) {
      node.children.push_back(read_node(in, depth + 1));
    }
  }
  return node;
}

}  // namespace detail

inline void save_hierarchy(const RegionHierarchy& h, const std::string& path) {
  BinaryWriter out(path);
  out.bytes(kHierarchyMagic, 4);
  out.u16(kHierarchyVersion);
  out.u64(h.counts.states);
  out.u64(h.counts.counties);
  out.u64(h.counts.blocks);
  for (const RegionNode& s : h.states) detail::write_node(out, s, 0);
  out.close();
}

inline RegionHierarchy load_hierarchy(const std::string& path) {
  BinaryReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kHierarchyMagic, 4)) {
    throw std::runtime_error("not a hierarchy file (bad magic): " + path);
  }
  const std::uint16_t version = in.u16();
  if (version != kHierarchyVersion) {
    throw std::runtime_error("unsupported hierarchy file version " +
                             std::to_string(version) + ": " + path);
  }
  RegionHierarchy h;
  h.counts.states = in.u64();
  h.counts.counties = in.u64();
  h.counts.blocks = in.u64();
  h.states.reserve(h.counts.states);
  for (std::size_t i = 0; i < h.counts.states; ++i) {
    h.states.push_back(detail::read_node(in, 0));
  }
  if (compute_counts(h) != h.counts) {
    throw std::runtime_error("hierarchy file counts do not match payload: " +
                             path);
  }
  return h;
}

}  // namespace fastmap
