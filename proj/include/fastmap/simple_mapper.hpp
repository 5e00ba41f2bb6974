#pragma once

// Hierarchical filter-and-refine assignment: at each level a batched bbox
// membership matrix splits points into unique-candidate and multi-candidate
// sets; only the latter reach the crossing-number kernel, gathered per region
// so one kernel call covers many points.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "fastmap/geometry.hpp"
#include "fastmap/hierarchy.hpp"

namespace fastmap {

/// relaxed: a point in exactly one bbox is accepted without a polygon test,
/// and a multi-candidate point that misses every candidate polygon falls back
/// to its highest-indexed candidate. strict: every assignment is polygon
/// verified and unresolved points stay unassigned.
enum class AssignMode : std::uint8_t { relaxed, strict };

struct AssignCounters {
  std::uint64_t pip_point_evaluations = 0;  // points handed to the kernel
  std::uint64_t pip_calls = 0;              // kernel invocations

  AssignCounters& operator+=(const AssignCounters& o) {
    pip_point_evaluations += o.pip_point_evaluations;
    pip_calls += o.pip_calls;
    return *this;
  }
};

/// Per-point level indices, -1 where unresolved. county/block are local to
/// the assigned parent (county 2 means third county of the point's state).
struct AssignmentResult {
  std::vector<std::int32_t> state;
  std::vector<std::int32_t> county;
  std::vector<std::int32_t> block;
  AssignCounters counters;

  std::size_t size() const { return state.size(); }
};

/// Leaf code for point i, empty when the point has no block assignment.
inline std::string_view result_fips(const RegionHierarchy& h,
                                    const AssignmentResult& r, std::size_t i) {
  if (r.block[i] < 0) return {};
  return h.states[static_cast<std::size_t>(r.state[i])]
      .children[static_cast<std::size_t>(r.county[i])]
      .children[static_cast<std::size_t>(r.block[i])]
      .fips12;
}

namespace mapper_detail {

/// One level of the descent over an index subset of `points`. Returns the
/// winning region index per subset position (-1 unresolved).
inline std::vector<std::int32_t> resolve_level(
    std::span<const Point> points, std::span<const std::uint32_t> subset,
    std::span<const RegionNode> regions, AssignMode mode,
    AssignCounters& counters) {
  std::vector<Point> sub(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) sub[k] = points[subset[k]];
  std::vector<BBox> boxes(regions.size());
  for (std::size_t j = 0; j < regions.size(); ++j) boxes[j] = regions[j].bbox;

  const MembershipMatrix mm = bbox_membership(sub, boxes);

  std::vector<std::int32_t> winner(subset.size(), -1);
  // pending: still to be polygon-tested. relaxed mode trusts unique-bbox
  // points; strict mode verifies every candidate.
  std::vector<std::uint8_t> pending(subset.size(), 0);
  const std::size_t threshold = (mode == AssignMode::strict) ? 1 : 2;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    pending[k] = mm.rows[k].size() >= threshold;
  }

  std::vector<std::uint32_t> batch;
  std::vector<Point> batch_pts;
  for (std::uint32_t j = 0; j < regions.size(); ++j) {
    batch.clear();
    batch_pts.clear();
    for (std::uint32_t k : mm.cols[j]) {
      if (pending[k]) {
        batch.push_back(k);
        batch_pts.push_back(sub[k]);
      }
    }
    if (batch.empty()) continue;
    counters.pip_calls += 1;
    counters.pip_point_evaluations += batch.size();
    const auto inside = points_in_polygon(batch_pts, regions[j].geometry);
    for (std::size_t t = 0; t < batch.size(); ++t) {
      if (inside[t]) {
        winner[batch[t]] = static_cast<std::int32_t>(j);
        pending[batch[t]] = 0;  // first hit wins; later candidates skipped
      }
    }
  }

  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (winner[k] >= 0 || mm.rows[k].empty()) continue;
    if (mode == AssignMode::relaxed) {
      // unique candidate, or highest-indexed candidate when no polygon hit
      winner[k] = static_cast<std::int32_t>(mm.rows[k].back());
    }
  }
  return winner;
}

}  // namespace mapper_detail

/// Assigns every point to a state, county and block group by hierarchical
/// descent. Unresolvable points are data, not errors.
inline AssignmentResult assign(const RegionHierarchy& h,
                               std::span<const Point> points, AssignMode mode) {
  const std::size_t n = points.size();
  AssignmentResult res;
  res.state.assign(n, -1);
  res.county.assign(n, -1);
  res.block.assign(n, -1);
  if (n == 0 || h.states.empty()) return res;

  std::vector<std::uint32_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<std::uint32_t>(i);
  const auto state_win =
      mapper_detail::resolve_level(points, all, h.states, mode, res.counters);
  std::vector<std::vector<std::uint32_t>> by_state(h.states.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (state_win[i] >= 0) {
      res.state[i] = state_win[i];
      by_state[static_cast<std::size_t>(state_win[i])].push_back(
          static_cast<std::uint32_t>(i));
    }
  }

  for (std::size_t s = 0; s < h.states.size(); ++s) {
    const auto& subset = by_state[s];
    if (subset.empty() || h.states[s].children.empty()) continue;
    const auto county_win = mapper_detail::resolve_level(
        points, subset, h.states[s].children, mode, res.counters);
    std::vector<std::vector<std::uint32_t>> by_county(
        h.states[s].children.size());
    for (std::size_t k = 0; k < subset.size(); ++k) {
      if (county_win[k] >= 0) {
        res.county[subset[k]] = county_win[k];
        by_county[static_cast<std::size_t>(county_win[k])].push_back(subset[k]);
      }
    }
    for (std::size_t c = 0; c < h.states[s].children.size(); ++c) {
      const auto& csubset = by_county[c];
      const auto& blocks = h.states[s].children[c].children;
      if (csubset.empty() || blocks.empty()) continue;
      const auto block_win = mapper_detail::resolve_level(
          points, csubset, blocks, mode, res.counters);
      for (std::size_t k = 0; k < csubset.size(); ++k) {
        if (block_win[k] >= 0) res.block[csubset[k]] = block_win[k];
      }
    }
  }
  return res;
}

/// Kernel point-evaluations per input point.
inline double pip_fraction(const AssignmentResult& r, std::size_t n_points) {
  if (n_points == 0) {
    throw std::invalid_argument("pip_fraction: n_points must be > 0");
  }
  return static_cast<double>(r.counters.pip_point_evaluations) /
         static_cast<double>(n_points);
}

}  // namespace fastmap
