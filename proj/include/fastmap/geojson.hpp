#pragma once

// GeoJSON ingestion of the three boundary levels into a RegionHierarchy,
// and the matching writer used by the synthetic data generator.
//
// Expected feature properties:
//   states:   STATEFP
//   counties: STATEFP, COUNTYFP
//   blocks:   STATE_FIPS, CNTY_FIPS, TRACT, BLKGRP, FIPS

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fastmap/hierarchy.hpp"

namespace fastmap {

namespace geojson_detail {

using json = nlohmann::ordered_json;

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open boundary file: " + path);
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports "parse error at line L, column C: ..."
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline std::string feature_name(const std::string& path, std::size_t index) {
  return path + " feature #" + std::to_string(index);
}

inline std::int64_t parse_code(const json& props, const std::string& key,
                               const std::string& feature) {
  if (!props.contains(key)) {
    throw std::runtime_error(feature + ": missing property " + key);
  }
  const json& v = props.at(key);
  try {
    if (v.is_string()) return std::stoll(v.get<std::string>());
    if (v.is_number_integer()) return v.get<std::int64_t>();
  } catch (const std::exception&) {
  }
  throw std::runtime_error(feature + ": property " + key +
                           " is not a FIPS code");
}

inline std::string parse_digits(const json& props, const std::string& key,
                                const std::string& feature) {
  if (!props.contains(key)) {
    throw std::runtime_error(feature + ": missing property " + key);
  }
  const json& v = props.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw std::runtime_error(feature + ": property " + key + " is not usable");
}

inline void append_ring(PolygonGeometry& geom, const json& ring,
                        const std::string& feature) {
  if (!ring.is_array() || ring.size() < 3) {
    throw std::runtime_error(feature + ": ring with fewer than 3 positions");
  }
  std::vector<Point> pts;
  pts.reserve(ring.size());
  for (const json& pos : ring) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() ||
        !pos[1].is_number()) {
      throw std::runtime_error(feature + ": malformed coordinate position");
    }
    pts.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  if (pts.size() >= 2 && pts.front() == pts.back()) pts.pop_back();
  if (pts.size() < 3) {
    throw std::runtime_error(feature + ": degenerate ring after closing");
  }
  geom.add_ring(pts);
}

inline PolygonGeometry parse_geometry(const json& feat,
                                      const std::string& feature) {
  if (!feat.contains("geometry") || feat.at("geometry").is_null()) {
    throw std::runtime_error(feature + ": missing geometry");
  }
  const json& g = feat.at("geometry");
  const std::string type = g.value("type", "");
  if (!g.contains("coordinates") || !g.at("coordinates").is_array()) {
    throw std::runtime_error(feature + ": geometry has no coordinates");
  }
  PolygonGeometry geom;
  if (type == "Polygon") {
    for (const json& ring : g.at("coordinates")) {
      append_ring(geom, ring, feature);
    }
  } else if (type == "MultiPolygon") {
    for (const json& poly : g.at("coordinates")) {
      if (!poly.is_array()) {
        throw std::runtime_error(feature + ": malformed MultiPolygon");
      }
      for (const json& ring : poly) append_ring(geom, ring, feature);
    }
  } else {
    throw std::runtime_error(feature + ": unsupported geometry type '" + type +
                             "'");
  }
  if (geom.empty()) {
    throw std::runtime_error(feature + ": geometry has no rings");
  }
  return geom;
}

inline BBox parse_bbox(const json& feat, const PolygonGeometry& geom) {
  if (feat.contains("bbox") && feat.at("bbox").is_array() &&
      feat.at("bbox").size() == 4) {
    const json& b = feat.at("bbox");
    BBox box{b[0].get<double>(), b[2].get<double>(), b[1].get<double>(),
             b[3].get<double>()};
    if (box.valid()) return box;
  }
  return polygon_bbox(geom);
}

inline const json& features_of(const json& doc, const std::string& path) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc.at("features").is_array()) {
    throw std::runtime_error(path + ": not a GeoJSON FeatureCollection");
  }
  const json& features = doc.at("features");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!features[i].is_object()) {
      throw std::runtime_error(feature_name(path, i) + ": not a Feature object");
    }
  }
  return features;
}

}  // namespace geojson_detail

/// Loads the three boundary levels and wires children to parents by FIPS
/// component match. Sibling order is canonicalized by ascending fp_code, so
/// the result does not depend on feature order in the input files.
inline RegionHierarchy load_boundaries(const std::string& state_path,
                                       const std::string& county_path,
                                       const std::string& block_path) {
  namespace gd = geojson_detail;

  RegionHierarchy h;
  std::map<std::int64_t, std::size_t> state_by_fp;

  const gd::json states_doc = gd::parse_file(state_path);
  std::size_t idx = 0;
  for (const gd::json& feat : gd::features_of(states_doc, state_path)) {
    const std::string name = gd::feature_name(state_path, idx++);
    const gd::json& props = feat.value("properties", gd::json::object());
    RegionNode node;
    node.fp_code = gd::parse_code(props, "STATEFP", name);
    node.geometry = gd::parse_geometry(feat, name);
    node.bbox = gd::parse_bbox(feat, node.geometry);
    if (!state_by_fp.emplace(node.fp_code, h.states.size()).second) {
      throw std::runtime_error(name + ": duplicate STATEFP " +
                               std::to_string(node.fp_code));
    }
    h.states.push_back(std::move(node));
  }
  if (h.states.empty()) {
    throw std::runtime_error(state_path + ": no state features");
  }

  std::map<std::pair<std::int64_t, std::int64_t>, std::pair<std::size_t, std::size_t>>
      county_by_fp;
  const gd::json counties_doc = gd::parse_file(county_path);
  idx = 0;
  for (const gd::json& feat : gd::features_of(counties_doc, county_path)) {
    const std::string name = gd::feature_name(county_path, idx++);
    const gd::json& props = feat.value("properties", gd::json::object());
    const std::int64_t state_fp = gd::parse_code(props, "STATEFP", name);
    RegionNode node;
    node.fp_code = gd::parse_code(props, "COUNTYFP", name);
    node.geometry = gd::parse_geometry(feat, name);
    node.bbox = gd::parse_bbox(feat, node.geometry);
    const auto state_it = state_by_fp.find(state_fp);
    if (state_it == state_by_fp.end()) {
      throw std::runtime_error(name + ": references absent state " +
                               std::to_string(state_fp));
    }
    auto& state = h.states[state_it->second];
    if (!county_by_fp
             .emplace(std::make_pair(state_fp, node.fp_code),
                      std::make_pair(state_it->second, state.children.size()))
             .second) {
      throw std::runtime_error(name + ": duplicate COUNTYFP " +
                               std::to_string(node.fp_code));
    }
    state.children.push_back(std::move(node));
  }

  std::set<std::string> seen_fips;
  const gd::json blocks_doc = gd::parse_file(block_path);
  idx = 0;
  std::size_t n_blocks = 0;
  for (const gd::json& feat : gd::features_of(blocks_doc, block_path)) {
    const std::string name = gd::feature_name(block_path, idx++);
    const gd::json& props = feat.value("properties", gd::json::object());
    const std::int64_t state_fp = gd::parse_code(props, "STATE_FIPS", name);
    const std::int64_t county_fp = gd::parse_code(props, "CNTY_FIPS", name);
    const std::string tract = gd::parse_digits(props, "TRACT", name);
    const std::string blkgrp = gd::parse_digits(props, "BLKGRP", name);
    RegionNode node;
    try {
      node.fp_code = std::stoll(tract + blkgrp);
    } catch (const std::exception&) {
      throw std::runtime_error(name + ": TRACT/BLKGRP are not digits");
    }
    node.fips12 = gd::parse_digits(props, "FIPS", name);
    if (node.fips12.size() != kFipsLength) {
      throw std::runtime_error(name + ": FIPS is not 12 characters");
    }
    if (!seen_fips.insert(node.fips12).second) {
      throw std::runtime_error(name + ": duplicate FIPS " + node.fips12);
    }
    node.geometry = gd::parse_geometry(feat, name);
    node.bbox = gd::parse_bbox(feat, node.geometry);
    const auto county_it = county_by_fp.find({state_fp, county_fp});
    if (county_it == county_by_fp.end()) {
      throw std::runtime_error(name + ": references absent county " +
                               std::to_string(state_fp) + "/" +
                               std::to_string(county_fp));
    }
    h.states[county_it->second.first]
        .children[county_it->second.second]
        .children.push_back(std::move(node));
    ++n_blocks;
  }
  if (n_blocks == 0) {
    throw std::runtime_error(block_path +
                             ": no block features (leaf level is mandatory)");
  }

  auto by_fp = [](const RegionNode& a, const RegionNode& b) {
    return a.fp_code < b.fp_code;
  };
  std::sort(h.states.begin(), h.states.end(), by_fp);
  for (auto& s : h.states) {
    std::sort(s.children.begin(), s.children.end(), by_fp);
    for (auto& c : s.children) {
      std::sort(c.children.begin(), c.children.end(), by_fp);
      for (std::size_t i = 1; i < c.children.size(); ++i) {
        if (c.children[i].fp_code == c.children[i - 1].fp_code) {
          throw std::runtime_error("duplicate block code " +
                                   std::to_string(c.children[i].fp_code) +
                                   " under county " +
                                   std::to_string(c.fp_code));
        }
      }
    }
  }
  h.counts = compute_counts(h);
  return h;
}

namespace geojson_detail {

inline json ring_coordinates(const PolygonGeometry& geom) {
  json rings = json::array();
  for (std::size_t r = 0; r < geom.ring_starts.size(); ++r) {
    const std::uint32_t begin = geom.ring_starts[r];
    const std::uint32_t end = (r + 1 < geom.ring_starts.size())
                                  ? geom.ring_starts[r + 1]
                                  : static_cast<std::uint32_t>(geom.nodes.size());
    json ring = json::array();
    for (std::uint32_t i = begin; i < end; ++i) {
      ring.push_back({geom.nodes[i].lon, geom.nodes[i].lat});
    }
    ring.push_back({geom.nodes[begin].lon, geom.nodes[begin].lat});
    rings.push_back(std::move(ring));
  }
  return rings;
}

inline json make_feature(const RegionNode& node, json properties) {
  json feat;
  feat["type"] = "Feature";
  feat["bbox"] = {node.bbox.x_min, node.bbox.y_min, node.bbox.x_max,
                  node.bbox.y_max};
  feat["properties"] = std::move(properties);
  feat["geometry"] = {{"type", "Polygon"},
                      {"coordinates", ring_coordinates(node.geometry)}};
  return feat;
}

inline void write_collection(const std::string& path, json features) {
  json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string zero_pad(std::int64_t v, int width) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%0*lld", width,
                static_cast<long long>(v));
  return buf;
}

}  // namespace geojson_detail

/// Writes states.geojson / counties.geojson / blocks.geojson under `dir`.
inline void write_boundaries(const RegionHierarchy& h, const std::string& dir) {
  namespace gd = geojson_detail;
  std::filesystem::create_directories(dir);

  gd::json states = gd::json::array();
  gd::json counties = gd::json::array();
  gd::json blocks = gd::json::array();
  for (const auto& s : h.states) {
    states.push_back(
        gd::make_feature(s, {{"STATEFP", gd::zero_pad(s.fp_code, 2)}}));
    for (const auto& c : s.children) {
      counties.push_back(
          gd::make_feature(c, {{"STATEFP", gd::zero_pad(s.fp_code, 2)},
                               {"COUNTYFP", gd::zero_pad(c.fp_code, 3)}}));
      for (const auto& b : c.children) {
        blocks.push_back(gd::make_feature(
            b, {{"STATE_FIPS", b.fips12.substr(0, 2)},
                {"CNTY_FIPS", b.fips12.substr(2, 3)},
                {"TRACT", b.fips12.substr(5, 6)},
                {"BLKGRP", b.fips12.substr(11, 1)},
                {"FIPS", b.fips12}}));
      }
    }
  }
  gd::write_collection((std::filesystem::path(dir) / "states.geojson").string(),
                       std::move(states));
  gd::write_collection(
      (std::filesystem::path(dir) / "counties.geojson").string(),
      std::move(counties));
  gd::write_collection((std::filesystem::path(dir) / "blocks.geojson").string(),
                       std::move(blocks));
}

}  // namespace fastmap
