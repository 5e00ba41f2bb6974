#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fastmap/parallel.hpp"
#include "fastmap/simple_mapper.hpp"
#include "fastmap/synthetic.hpp"
#include "oracles.hpp"

using namespace fastmap;

namespace {

// Points inside the hierarchy bbox that keep a safety margin from every leaf
// polygon edge (leaf edges cover the county and state borders as well).
std::vector<Point> off_edge_points(const RegionHierarchy& h, std::size_t n,
                                   std::uint64_t seed, double band = 1e-9) {
  const auto leaves = collect_leaves(h);
  const BBox box = hierarchy_bbox(h);
  std::mt19937_64 rng(seed);
  std::vector<Point> pts;
  pts.reserve(n);
  while (pts.size() < n) {
    const Point p{box.x_min + box.width() * oracle::unit(rng),
                  box.y_min + box.height() * oracle::unit(rng)};
    double nearest = 1e300;
    for (const auto& l : leaves) {
      nearest = std::min(nearest, oracle::point_edge_distance(p, *l.geometry));
      if (nearest <= band) break;
    }
    if (nearest > band) pts.push_back(p);
  }
  return pts;
}

// Leaf index of the (state, county, block) triple in collect_leaves() order;
// -1 when unassigned.
std::int32_t leaf_of(const RegionHierarchy&,
                     std::span<const LeafRegion> leaves,
                     const AssignmentResult& r, std::size_t i) {
  if (r.block[i] < 0) return -1;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    if (leaves[l].state == static_cast<std::uint32_t>(r.state[i]) &&
        leaves[l].county == static_cast<std::uint32_t>(r.county[i]) &&
        leaves[l].block == static_cast<std::uint32_t>(r.block[i])) {
      return static_cast<std::int32_t>(l);
    }
  }
  FAIL("assignment refers to a leaf that does not exist");
  return -1;
}

}  // namespace

TEST_CASE("disjoint boxes resolve with zero kernel evaluations") {
  const auto h = generate_synthetic({.seed = 1, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 4, .jitter = 0.0});
  const auto pts = off_edge_points(h, 500, 42);
  const auto res = assign(h, pts, AssignMode::relaxed);
  CHECK(res.counters.pip_point_evaluations == 0);
  CHECK(res.counters.pip_calls == 0);
  CHECK(pip_fraction(res, pts.size()) == 0.0);

  const auto leaves = collect_leaves(h);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    REQUIRE(res.block[i] >= 0);
    CHECK(leaf_of(h, leaves, res, i) ==
          oracle::assign_point_naive(pts[i], leaves));
    CHECK_FALSE(result_fips(h, res, i).empty());
  }
}

TEST_CASE("strict assignment matches the exhaustive oracle on jittered data") {
  const auto h = generate_synthetic({.seed = 3, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 9, .jitter = 0.2});
  const auto leaves = collect_leaves(h);
  const auto pts = off_edge_points(h, 5000, 99);
  const auto res = assign(h, pts, AssignMode::strict);
  CHECK(res.counters.pip_point_evaluations > 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(leaf_of(h, leaves, res, i) ==
          oracle::assign_point_naive(pts[i], leaves));
  }
}

TEST_CASE("relaxed and strict agree wherever strict resolves") {
  const auto h = generate_synthetic({.seed = 4, .n_states = 4,
                                     .counties_per_state = 4,
                                     .blocks_per_county = 9, .jitter = 0.3});
  const auto pts = off_edge_points(h, 3000, 5);
  const auto strict = assign(h, pts, AssignMode::strict);
  const auto relaxed = assign(h, pts, AssignMode::relaxed);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (strict.block[i] >= 0) {
      CHECK(relaxed.state[i] == strict.state[i]);
      CHECK(relaxed.county[i] == strict.county[i]);
      CHECK(relaxed.block[i] == strict.block[i]);
    }
  }
}

TEST_CASE("relaxed mode falls back to the highest-indexed candidate") {
  // Two triangular states whose bounding boxes overlap around a notch that
  // neither polygon covers: a point there is bbox-ambiguous with no hit.
  auto make_state = [](std::int64_t fp, std::span<const Point> ring) {
    RegionNode state;
    state.fp_code = fp;
    state.geometry.add_ring(ring);
    state.bbox = polygon_bbox(state.geometry);
    RegionNode county = state;
    county.children.clear();
    RegionNode block = state;
    block.children.clear();
    block.fips12 = compose_fips12(static_cast<int>(fp), 1, 1, 1);
    county.children.push_back(std::move(block));
    state.children.clear();
    state.children.push_back(std::move(county));
    return state;
  };
  const Point tri_a[3] = {{0, 0}, {2, 0}, {0, 2}};
  const Point tri_b[3] = {{1, 3}, {3, 1}, {3, 3}};
  RegionHierarchy h;
  h.states.push_back(make_state(1, tri_a));
  h.states.push_back(make_state(2, tri_b));
  h.counts = compute_counts(h);

  const Point gap{1.9, 1.9};  // inside both bboxes, inside neither triangle
  const auto strict = assign(h, {&gap, 1}, AssignMode::strict);
  CHECK(strict.state[0] == -1);
  CHECK(result_fips(h, strict, 0).empty());

  const auto relaxed = assign(h, {&gap, 1}, AssignMode::relaxed);
  CHECK(relaxed.state[0] == 1);  // max-index fallback
  CHECK(relaxed.block[0] == 0);
  CHECK(result_fips(h, relaxed, 0) == "020010000011");

  const Point nowhere{40.0, 40.0};  // outside every bbox in both modes
  const auto none = assign(h, {&nowhere, 1}, AssignMode::relaxed);
  CHECK(none.state[0] == -1);
}

TEST_CASE("assignment is batch invariant and permutation equivariant") {
  const auto h = generate_synthetic({.seed = 6, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 6, .jitter = 0.25});
  const auto pts = off_edge_points(h, 400, 123);

  for (const AssignMode mode : {AssignMode::relaxed, AssignMode::strict}) {
    const auto whole = assign(h, pts, mode);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto one = assign(h, {&pts[i], 1}, mode);
      CHECK(one.state[0] == whole.state[i]);
      CHECK(one.county[0] == whole.county[i]);
      CHECK(one.block[0] == whole.block[i]);
    }

    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Point> shuffled(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) shuffled[i] = pts[perm[i]];
    const auto mixed = assign(h, shuffled, mode);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(mixed.state[i] == whole.state[perm[i]]);
      CHECK(mixed.county[i] == whole.county[perm[i]]);
      CHECK(mixed.block[i] == whole.block[perm[i]]);
    }
  }
}

TEST_CASE("kernel evaluation counters match the independent recount") {
  const auto h = generate_synthetic({.seed = 8, .n_states = 3,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 9, .jitter = 0.2});
  const auto pts = off_edge_points(h, 2000, 31);

  for (const AssignMode mode : {AssignMode::relaxed, AssignMode::strict}) {
    const auto res = assign(h, pts, mode);
    const double frac = pip_fraction(res, pts.size());
    CHECK(frac > 0.0);
    if (mode == AssignMode::relaxed) {
      CHECK(frac < 1.0);  // only ambiguous points reach the kernel
    } else {
      CHECK(frac >= 3.0);  // every point is verified at all three levels
    }
    CHECK(res.counters.pip_point_evaluations ==
          oracle::recount_evaluations(h, pts, res, mode));
  }
}

TEST_CASE("evaluations never exceed the ambiguous candidate pairs") {
  const auto h = generate_synthetic({.seed = 9, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 16, .jitter = 0.35});
  const auto pts = off_edge_points(h, 1500, 17);
  const auto res = assign(h, pts, AssignMode::relaxed);

  // upper bound: every ambiguous (point, candidate) pair at each level
  std::uint64_t pairs = 0;
  const auto leaves = collect_leaves(h);
  auto level_pairs = [&](std::span<const Point> sub, std::vector<BBox> boxes) {
    const auto rows = oracle::membership_naive(sub, boxes);
    for (const auto& row : rows) {
      if (row.size() >= 2) pairs += row.size();
    }
  };
  std::vector<BBox> state_boxes;
  for (const auto& s : h.states) state_boxes.push_back(s.bbox);
  level_pairs(pts, state_boxes);
  for (std::size_t s = 0; s < h.states.size(); ++s) {
    std::vector<Point> spts;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (res.state[i] == static_cast<std::int32_t>(s)) spts.push_back(pts[i]);
    }
    std::vector<BBox> cboxes;
    for (const auto& c : h.states[s].children) cboxes.push_back(c.bbox);
    if (!spts.empty()) level_pairs(spts, cboxes);
    for (std::size_t c = 0; c < h.states[s].children.size(); ++c) {
      std::vector<Point> cpts;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (res.state[i] == static_cast<std::int32_t>(s) &&
            res.county[i] == static_cast<std::int32_t>(c)) {
          cpts.push_back(pts[i]);
        }
      }
      std::vector<BBox> bboxes;
      for (const auto& b : h.states[s].children[c].children) {
        bboxes.push_back(b.bbox);
      }
      if (!cpts.empty()) level_pairs(cpts, bboxes);
    }
  }
  CHECK(res.counters.pip_point_evaluations <= pairs);
  CHECK(res.counters.pip_point_evaluations <=
        pts.size() * static_cast<std::uint64_t>(leaves.size()));
}

TEST_CASE("pip_fraction rejects an empty run") {
  AssignmentResult r;
  CHECK_THROWS_AS(pip_fraction(r, 0), std::invalid_argument);
}

TEST_CASE("chunked runs are invariant to chunk size and thread count") {
  const auto h = generate_synthetic({.seed = 12, .n_states = 2,
                                     .counties_per_state = 3,
                                     .blocks_per_county = 8, .jitter = 0.2});
  const auto pts = sample_uniform(hierarchy_bbox(h), 7777, 50);
  const auto whole = assign(h, pts, AssignMode::relaxed);

  for (const std::size_t chunk : {64, 1000, 7777, 100000}) {
    for (const unsigned threads : {1u, 2u, 5u}) {
      const auto part =
          run_chunked(pts, chunk, threads, [&](std::span<const Point> s) {
            return assign(h, s, AssignMode::relaxed);
          });
      REQUIRE(part.state == whole.state);
      REQUIRE(part.county == whole.county);
      REQUIRE(part.block == whole.block);
      // point-evaluation totals are partition invariant (call counts are not)
      REQUIRE(part.counters.pip_point_evaluations ==
              whole.counters.pip_point_evaluations);
    }
  }
}
