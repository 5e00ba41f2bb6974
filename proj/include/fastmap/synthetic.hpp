#pragma once

// Deterministic synthetic hierarchies for desk-scale testing and benchmarks:
// a grid of rectangular states and counties, with each county tiled by
// jittered-edge quadrilateral block groups. Jitter displaces interior lattice
// nodes only, so the quads always partition the county exactly while their
// bounding boxes overlap (which is what exercises the multi-candidate paths).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fastmap/hierarchy.hpp"

namespace fastmap {

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::uint32_t n_states = 2;
  std::uint32_t counties_per_state = 2;
  std::uint32_t blocks_per_county = 4;
  double jitter = 0.0;  // node displacement as a fraction of grid pitch, [0, 0.5)
};

namespace synth_detail {

// Uniform in [0,1) from the raw 64-bit stream; avoids distribution objects
// whose output differs across standard libraries.
inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double symmetric(std::mt19937_64& rng) { return 2.0 * unit(rng) - 1.0; }

// rows x cols with rows*cols == n and rows <= cols (rows is the largest
// divisor not exceeding sqrt(n)), so grids are as square as n allows.
inline std::pair<std::uint32_t, std::uint32_t> grid_dims(std::uint32_t n) {
  std::uint32_t rows = 1;
  for (std::uint32_t r = 1; static_cast<std::uint64_t>(r) * r <= n; ++r) {
    if (n % r == 0) rows = r;
  }
  return {rows, n / rows};
}

inline PolygonGeometry rect_ring(const BBox& b) {
  PolygonGeometry g;
  const Point ring[4] = {{b.x_min, b.y_min},
                         {b.x_max, b.y_min},
                         {b.x_max, b.y_max},
                         {b.x_min, b.y_max}};
  g.add_ring(ring);
  return g;
}

}  // namespace synth_detail

inline RegionHierarchy generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_states < 1 || spec.counties_per_state < 1 ||
      spec.blocks_per_county < 1) {
    throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
  }
  if (spec.n_states > 99 || spec.counties_per_state > 999) {
    throw std::invalid_argument(
        "generate_synthetic: counts exceed FIPS digit widths");
  }
  if (!(spec.jitter >= 0.0 && spec.jitter < 0.5)) {
    throw std::invalid_argument("generate_synthetic: jitter must be in [0, 0.5)");
  }

  namespace sd = synth_detail;
  const BBox country{-110.0, -70.0, 25.0, 45.0};
  std::mt19937_64 rng(spec.seed);

  const auto [srows, scols] = sd::grid_dims(spec.n_states);
  const auto [crows, ccols] = sd::grid_dims(spec.counties_per_state);
  const auto [brows, bcols] = sd::grid_dims(spec.blocks_per_county);

  RegionHierarchy h;
  h.states.reserve(spec.n_states);
  for (std::uint32_t s = 0; s < spec.n_states; ++s) {
    const std::uint32_t sr = s / scols;
    const std::uint32_t sc = s % scols;
    BBox srect{country.x_min + country.width() * sc / scols,
               country.x_min + country.width() * (sc + 1) / scols,
               country.y_min + country.height() * sr / srows,
               country.y_min + country.height() * (sr + 1) / srows};
    RegionNode state;
    state.fp_code = s + 1;
    state.geometry = sd::rect_ring(srect);
    state.bbox = polygon_bbox(state.geometry);

    for (std::uint32_t c = 0; c < spec.counties_per_state; ++c) {
      const std::uint32_t cr = c / ccols;
      const std::uint32_t cc = c % ccols;
      BBox crect{srect.x_min + srect.width() * cc / ccols,
                 srect.x_min + srect.width() * (cc + 1) / ccols,
                 srect.y_min + srect.height() * cr / crows,
                 srect.y_min + srect.height() * (cr + 1) / crows};
      RegionNode county;
      county.fp_code = c + 1;
      county.geometry = sd::rect_ring(crect);
      county.bbox = polygon_bbox(county.geometry);

      // jittered block lattice over the county; border nodes stay put so the
      // quads tile the county exactly
      const double px = crect.width() / bcols;
      const double py = crect.height() / brows;
      std::vector<Point> lattice((bcols + 1) * (brows + 1));
      for (std::uint32_t j = 0; j <= brows; ++j) {
        for (std::uint32_t i = 0; i <= bcols; ++i) {
          Point n{crect.x_min + px * i, crect.y_min + py * j};
          if (i > 0 && i < bcols && j > 0 && j < brows && spec.jitter > 0.0) {
            n.lon += spec.jitter * px * sd::symmetric(rng);
            n.lat += spec.jitter * py * sd::symmetric(rng);
          }
          lattice[j * (bcols + 1) + i] = n;
        }
      }

      for (std::uint32_t b = 0; b < spec.blocks_per_county; ++b) {
        const std::uint32_t br = b / bcols;
        const std::uint32_t bc = b % bcols;
        const Point ring[4] = {lattice[br * (bcols + 1) + bc],
                               lattice[br * (bcols + 1) + bc + 1],
                               lattice[(br + 1) * (bcols + 1) + bc + 1],
                               lattice[(br + 1) * (bcols + 1) + bc]};
        RegionNode block;
        const int tract = static_cast<int>(b / 9 + 1);
        const int bg = static_cast<int>(b % 9 + 1);
        block.fp_code = static_cast<std::int64_t>(tract) * 10 + bg;
        block.fips12 = compose_fips12(static_cast<int>(s + 1),
                                      static_cast<int>(c + 1), tract, bg);
        block.geometry.add_ring(ring);
        block.bbox = polygon_bbox(block.geometry);
        county.children.push_back(std::move(block));
      }
      state.children.push_back(std::move(county));
    }
    h.states.push_back(std::move(state));
  }
  h.counts = compute_counts(h);
  return h;
}

/// Uniform points over a box (border values possible but measure zero).
inline std::vector<Point> sample_uniform(const BBox& box, std::size_t n,
                                         std::uint64_t seed) {
  namespace sd = synth_detail;
  std::mt19937_64 rng(seed);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.lon = box.x_min + box.width() * sd::unit(rng);
    p.lat = box.y_min + box.height() * sd::unit(rng);
  }
  return pts;
}

/// Population-style clustering: points gather around k random centers with
/// Gaussian spread, clamped to the box.
inline std::vector<Point> sample_clustered(const BBox& box, std::size_t n,
                                           std::uint64_t seed,
                                           std::uint32_t k = 16) {
  namespace sd = synth_detail;
  if (k == 0) throw std::invalid_argument("sample_clustered: k must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Point> centers(k);
  for (auto& c : centers) {
    c.lon = box.x_min + box.width() * sd::unit(rng);
    c.lat = box.y_min + box.height() * sd::unit(rng);
  }
  const double sx = 0.02 * box.width();
  const double sy = 0.02 * box.height();
  auto gaussian = [&rng]() {
    const double u1 = 1.0 - sd::unit(rng);  // (0, 1]
    const double u2 = sd::unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    const Point& c = centers[rng() % k];
    p.lon = std::clamp(c.lon + sx * gaussian(), box.x_min, box.x_max);
    p.lat = std::clamp(c.lat + sy * gaussian(), box.y_min, box.y_max);
  }
  return pts;
}

/// Exhaustive reference assignment: every point against every leaf polygon,
/// first containing leaf in ascending region order wins. Quadratic and meant
/// for desk-scale ground-truth files, not production use.
inline std::vector<std::int32_t> exhaustive_assign(
    std::span<const LeafRegion> leaves, std::span<const Point> points) {
  std::vector<std::int32_t> out(points.size(), -1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      if (point_in_polygon(points[i], *leaves[l].geometry)) {
        out[i] = static_cast<std::int32_t>(l);
        break;
      }
    }
  }
  return out;
}

}  // namespace fastmap
