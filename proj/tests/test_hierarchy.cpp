#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <random>

#include <json.hpp>

#include "fastmap/geojson.hpp"
#include "fastmap/hierarchy.hpp"
#include "fastmap/synthetic.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace fastmap;

namespace {

bool nodes_equal(const RegionNode& a, const RegionNode& b) {
  if (a.fp_code != b.fp_code || a.fips12 != b.fips12 || !(a.bbox == b.bbox)) {
    return false;
  }
  if (a.geometry.nodes != b.geometry.nodes ||
      a.geometry.edges != b.geometry.edges ||
      a.geometry.ring_starts != b.geometry.ring_starts) {
    return false;
  }
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!nodes_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

bool hierarchies_equal(const RegionHierarchy& a, const RegionHierarchy& b) {
  if (!(a.counts == b.counts) || a.states.size() != b.states.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    if (!nodes_equal(a.states[i], b.states[i])) return false;
  }
  return true;
}

void shuffle_features(const std::string& path, std::uint64_t seed) {
  std::ifstream in(path);
  auto doc = nlohmann::ordered_json::parse(in);
  in.close();
  auto& features = doc.at("features");
  std::vector<nlohmann::ordered_json> items(features.begin(), features.end());
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  doc["features"] = items;
  std::ofstream out(path, std::ios::trunc);
  out << doc.dump();
}

}  // namespace

TEST_CASE("generate_synthetic is deterministic per seed") {
  const SyntheticSpec spec{.seed = 5, .n_states = 3, .counties_per_state = 2,
                           .blocks_per_county = 6, .jitter = 0.3};
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(hierarchies_equal(a, b));
  CHECK(a.counts == HierarchyCounts{3, 6, 36});

  SyntheticSpec other = spec;
  other.seed = 6;
  CHECK_FALSE(hierarchies_equal(a, generate_synthetic(other)));
}

TEST_CASE("generate_synthetic with zero jitter makes axis-aligned leaves") {
  const auto h = generate_synthetic({.seed = 1, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 4, .jitter = 0.0});
  for (const auto& leaves = collect_leaves(h); const auto& leaf : leaves) {
    const auto& g = *leaf.geometry;
    for (const auto& [i, j] : g.edges) {
      const bool axis = g.nodes[i].lon == g.nodes[j].lon ||
                        g.nodes[i].lat == g.nodes[j].lat;
      CHECK(axis);
    }
    CHECK(leaf.bbox == polygon_bbox(g));
  }
}

TEST_CASE("jittered leaves overlap in bbox space but still tile the county") {
  const auto h = generate_synthetic({.seed = 2, .n_states = 1,
                                     .counties_per_state = 1,
                                     .blocks_per_county = 9, .jitter = 0.2});
  const auto leaves = collect_leaves(h);
  std::vector<BBox> boxes;
  for (const auto& l : leaves) boxes.push_back(l.bbox);

  const auto pts = sample_uniform(hierarchy_bbox(h), 500, 77);
  const auto m = bbox_membership(pts, boxes);
  std::size_t multi = 0;
  for (const auto& row : m.rows) multi += row.size() >= 2;
  CHECK(multi > 0);

  // interior points (away from all edges) belong to exactly one leaf polygon
  std::size_t checked = 0;
  for (const Point& p : pts) {
    double nearest = 1e300;
    for (const auto& l : leaves) {
      nearest = std::min(nearest, oracle::point_edge_distance(p, *l.geometry));
    }
    if (nearest < 1e-9) continue;
    std::size_t owners = 0;
    for (const auto& l : leaves) {
      owners += oracle::point_in_polygon_naive(p, *l.geometry);
    }
    CHECK(owners == 1);
    ++checked;
  }
  CHECK(checked > 400);
}

TEST_CASE("generate_synthetic validates its arguments") {
  CHECK_THROWS_AS(generate_synthetic({.seed = 1, .n_states = 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic({.seed = 1, .jitter = 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic({.seed = 1, .jitter = -0.1}),
                  std::invalid_argument);
}

TEST_CASE("fips codes compose as state+county+tract+blockgroup") {
  CHECK(compose_fips12(25, 17, 353101, 2) == "250173531012");
  const auto h = generate_synthetic({.seed = 3, .n_states = 2,
                                     .counties_per_state = 3,
                                     .blocks_per_county = 12, .jitter = 0.1});
  for (const auto& leaf : collect_leaves(h)) {
    const auto& f = *leaf.fips12;
    REQUIRE(f.size() == 12);
    CHECK(std::stoi(f.substr(0, 2)) == static_cast<int>(leaf.state) + 1);
    CHECK(std::stoi(f.substr(2, 3)) == static_cast<int>(leaf.county) + 1);
    // tract+blockgroup digits reproduce the node's fp code
    const auto& node = h.states[leaf.state].children[leaf.county].children[leaf.block];
    CHECK(std::stoll(f.substr(5, 7)) == node.fp_code);
  }
}

TEST_CASE("GeoJSON round trip preserves the hierarchy bit-exactly") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 9, .n_states = 4,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 5, .jitter = 0.25});
  write_boundaries(h, dir.path().string());
  const auto loaded = load_boundaries(dir.file("states.geojson"),
                                      dir.file("counties.geojson"),
                                      dir.file("blocks.geojson"));
  CHECK(hierarchies_equal(h, loaded));
}

TEST_CASE("load_boundaries is insensitive to feature order") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 10, .n_states = 3,
                                     .counties_per_state = 3,
                                     .blocks_per_county = 4, .jitter = 0.15});
  write_boundaries(h, dir.path().string());
  shuffle_features(dir.file("states.geojson"), 1);
  shuffle_features(dir.file("counties.geojson"), 2);
  shuffle_features(dir.file("blocks.geojson"), 3);
  const auto loaded = load_boundaries(dir.file("states.geojson"),
                                      dir.file("counties.geojson"),
                                      dir.file("blocks.geojson"));
  CHECK(hierarchies_equal(h, loaded));
}

TEST_CASE("load_boundaries computes bboxes when the input has none") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 11, .n_states = 1,
                                     .counties_per_state = 1,
                                     .blocks_per_county = 4, .jitter = 0.2});
  write_boundaries(h, dir.path().string());
  for (const char* name :
       {"states.geojson", "counties.geojson", "blocks.geojson"}) {
    std::ifstream in(dir.file(name));
    auto doc = nlohmann::ordered_json::parse(in);
    in.close();
    for (auto& feat : doc.at("features")) feat.erase("bbox");
    std::ofstream out(dir.file(name), std::ios::trunc);
    out << doc.dump();
  }
  const auto loaded = load_boundaries(dir.file("states.geojson"),
                                      dir.file("counties.geojson"),
                                      dir.file("blocks.geojson"));
  CHECK(hierarchies_equal(h, loaded));  // generator bboxes are polygon-tight
}

TEST_CASE("load_boundaries error cases") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 12, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 4, .jitter = 0.0});
  write_boundaries(h, dir.path().string());
  const auto states = dir.file("states.geojson");
  const auto counties = dir.file("counties.geojson");
  const auto blocks = dir.file("blocks.geojson");

  SECTION("missing file") {
    CHECK_THROWS_WITH(load_boundaries(dir.file("nope.geojson"), counties, blocks),
                      Catch::Matchers::ContainsSubstring("cannot open"));
  }
  SECTION("malformed JSON reports the line") {
    std::ofstream bad(dir.file("bad.geojson"), std::ios::trunc);
    bad << "{\"type\": \"FeatureCollection\",\n  \"features\": [}\n";
    bad.close();
    CHECK_THROWS_WITH(load_boundaries(dir.file("bad.geojson"), counties, blocks),
                      Catch::Matchers::ContainsSubstring("line"));
  }
  SECTION("empty block file is an error") {
    std::ofstream empty(blocks, std::ios::trunc);
    empty << R"({"type":"FeatureCollection","features":[]})";
    empty.close();
    CHECK_THROWS_WITH(load_boundaries(states, counties, blocks),
                      Catch::Matchers::ContainsSubstring("leaf level"));
  }
  SECTION("county referencing an absent state") {
    std::ifstream in(counties);
    auto doc = nlohmann::ordered_json::parse(in);
    in.close();
    doc["features"][0]["properties"]["STATEFP"] = "77";
    std::ofstream out(counties, std::ios::trunc);
    out << doc.dump();
    out.close();
    CHECK_THROWS_WITH(load_boundaries(states, counties, blocks),
                      Catch::Matchers::ContainsSubstring("absent state"));
  }
  SECTION("missing FIPS property names the feature") {
    std::ifstream in(blocks);
    auto doc = nlohmann::ordered_json::parse(in);
    in.close();
    doc["features"][2]["properties"].erase("FIPS");
    std::ofstream out(blocks, std::ios::trunc);
    out << doc.dump();
    out.close();
    CHECK_THROWS_WITH(load_boundaries(states, counties, blocks),
                      Catch::Matchers::ContainsSubstring("feature #2"));
  }
  SECTION("duplicate FIPS is an error") {
    std::ifstream in(blocks);
    auto doc = nlohmann::ordered_json::parse(in);
    in.close();
    doc["features"][1]["properties"]["FIPS"] =
        doc["features"][0]["properties"]["FIPS"];
    doc["features"][1]["properties"]["TRACT"] =
        doc["features"][0]["properties"]["TRACT"];
    doc["features"][1]["properties"]["BLKGRP"] =
        doc["features"][0]["properties"]["BLKGRP"];
    std::ofstream out(blocks, std::ios::trunc);
    out << doc.dump();
    out.close();
    CHECK_THROWS_WITH(load_boundaries(states, counties, blocks),
                      Catch::Matchers::ContainsSubstring("duplicate FIPS"));
  }
  SECTION("unparsable geometry names the feature") {
    std::ifstream in(states);
    auto doc = nlohmann::ordered_json::parse(in);
    in.close();
    doc["features"][0]["geometry"]["coordinates"] = {{{1.0, 2.0}, {3.0, 4.0}}};
    std::ofstream out(states, std::ios::trunc);
    out << doc.dump();
    out.close();
    CHECK_THROWS_WITH(load_boundaries(states, counties, blocks),
                      Catch::Matchers::ContainsSubstring("feature #0"));
  }
}

TEST_CASE("MultiPolygon features merge into one multi-ring geometry") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 14, .n_states = 1,
                                     .counties_per_state = 1,
                                     .blocks_per_county = 1, .jitter = 0.0});
  write_boundaries(h, dir.path().string());

  // rewrite the single block as a MultiPolygon: a square plus a detached
  // square with a hole, all inside the original block footprint
  std::ifstream in(dir.file("blocks.geojson"));
  auto doc = nlohmann::ordered_json::parse(in);
  in.close();
  const BBox b = h.states[0].children[0].children[0].bbox;
  const double x = b.x_min, y = b.y_min;
  auto ring = [&](double x0, double y0, double x1, double y1) {
    return nlohmann::ordered_json::array(
        {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}});
  };
  doc["features"][0]["geometry"] = {
      {"type", "MultiPolygon"},
      {"coordinates",
       {// part 1: plain square
        {ring(x + 1, y + 1, x + 3, y + 3)},
        // part 2: square with a hole
        {ring(x + 5, y + 1, x + 9, y + 5), ring(x + 6, y + 2, x + 8, y + 4)}}}};
  doc["features"][0].erase("bbox");
  std::ofstream out(dir.file("blocks.geojson"), std::ios::trunc);
  out << doc.dump();
  out.close();

  const auto loaded = load_boundaries(dir.file("states.geojson"),
                                      dir.file("counties.geojson"),
                                      dir.file("blocks.geojson"));
  const auto& geom = loaded.states[0].children[0].children[0].geometry;
  CHECK(geom.ring_starts.size() == 3);
  CHECK(geom.nodes.size() == 12);
  CHECK(geom.edges.size() == 12);

  // even-odd semantics across the merged rings
  CHECK(point_in_polygon({x + 2, y + 2}, geom));        // part 1
  CHECK(point_in_polygon({x + 5.5, y + 3}, geom));      // part 2 rim
  CHECK_FALSE(point_in_polygon({x + 7, y + 3}, geom));  // inside the hole
  CHECK_FALSE(point_in_polygon({x + 4, y + 2}, geom));  // between parts
  CHECK(polygon_bbox(geom) == loaded.states[0].children[0].children[0].bbox);

  // multi-ring geometry survives the binary format bit-exactly
  save_hierarchy(loaded, dir.file("multi.fmcb"));
  CHECK(hierarchies_equal(loaded, load_hierarchy(dir.file("multi.fmcb"))));
}

TEST_CASE("point samplers are deterministic and stay in the box") {
  const BBox box{-10.0, 25.0, 3.0, 14.0};
  const auto u1 = sample_uniform(box, 1000, 5);
  const auto u2 = sample_uniform(box, 1000, 5);
  CHECK(u1 == u2);
  const auto c1 = sample_clustered(box, 1000, 5);
  const auto c2 = sample_clustered(box, 1000, 5);
  CHECK(c1 == c2);
  CHECK(c1 != u1);
  for (const auto* pts : {&u1, &c1}) {
    for (const Point& p : *pts) {
      CHECK(box.contains_closed(p));
    }
  }
}

TEST_CASE("FMCB round trip is bit-exact") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 21, .n_states = 3,
                                     .counties_per_state = 4,
                                     .blocks_per_county = 7, .jitter = 0.3});
  const auto path = dir.file("h.fmcb");
  save_hierarchy(h, path);
  const auto loaded = load_hierarchy(path);
  CHECK(hierarchies_equal(h, loaded));
}

TEST_CASE("FMCB rejects corrupt files") {
  testutil::TempDir dir;
  const auto h = generate_synthetic({.seed = 22, .n_states = 2,
                                     .counties_per_state = 2,
                                     .blocks_per_county = 4, .jitter = 0.1});
  const auto path = dir.file("h.fmcb");
  save_hierarchy(h, path);

  SECTION("truncated") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    CHECK_THROWS_WITH(load_hierarchy(path),
                      Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("wrong magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
    f.close();
    CHECK_THROWS_WITH(load_hierarchy(path),
                      Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("wrong version") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v2[2] = {2, 0};
    f.write(v2, 2);
    f.close();
    CHECK_THROWS_WITH(load_hierarchy(path),
                      Catch::Matchers::ContainsSubstring("version"));
  }
}

// Runs only when real census boundary files are supplied via environment
// variables (FASTMAP_CENSUS_STATES/COUNTIES/BLOCKS); then the national counts
// must match and a point on the MIT campus must land in its block group.
TEST_CASE("real census ingestion", "[.real-census]") {
  const char* states = std::getenv("FASTMAP_CENSUS_STATES");
  const char* counties = std::getenv("FASTMAP_CENSUS_COUNTIES");
  const char* blocks = std::getenv("FASTMAP_CENSUS_BLOCKS");
  REQUIRE(states != nullptr);
  REQUIRE(counties != nullptr);
  REQUIRE(blocks != nullptr);
  const auto h = load_boundaries(states, counties, blocks);
  CHECK(h.counts.states == 56);
  CHECK(h.counts.counties == 3233);
  CHECK(h.counts.blocks == 219831);

  const auto leaves = collect_leaves(h);
  const Point mit{-71.095, 42.363};
  const auto want = oracle::assign_point_naive(mit, leaves);
  REQUIRE(want >= 0);
  const auto res = assign(h, {&mit, 1}, AssignMode::strict);
  const auto fips = result_fips(h, res, 0);
  CHECK(fips == *leaves[static_cast<std::size_t>(want)].fips12);
  CHECK(fips == "250173531012");

  const auto pts = sample_clustered(hierarchy_bbox(h), 100000, 1);
  const auto run = assign(h, pts, AssignMode::relaxed);
  WARN("census pip_fraction (informational): "
       << pip_fraction(run, pts.size()));
}
