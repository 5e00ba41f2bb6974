// fastmap CLI: build hierarchy/index artifacts, run batch point assignment,
// generate synthetic boundary data and benchmark throughput.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastmap/bench.hpp"
#include "fastmap/cell_index.hpp"
#include "fastmap/geojson.hpp"
#include "fastmap/hierarchy.hpp"
#include "fastmap/io.hpp"
#include "fastmap/parallel.hpp"
#include "fastmap/simple_mapper.hpp"
#include "fastmap/synthetic.hpp"

namespace {

using namespace fastmap;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerateOpts {
  std::string out_dir;
  std::uint64_t seed = 1;
  std::string shape = "2x2x4";
  double jitter = 0.0;
  std::size_t n_points = 1000;
  bool clustered = false;
};

struct IngestOpts {
  std::string states, counties, blocks, out;
};

struct IndexOpts {
  std::string hierarchy, out;
  std::string mode = "exact";
  int max_level = 12;
  double epsilon = 1e-3;
  int fanout = 4;
};

struct AssignOpts {
  std::string artifact;
  std::string points;
  std::string out;
  std::string mode;  // simple | fast-exact | fast-approx (default by artifact)
  std::string points_format = "auto";  // auto | csv | f64
  std::string hierarchy;               // required when artifact is an index
  bool strict = false;
  int threads = 0;  // 0: FMCB_THREADS env or hardware
  std::size_t chunk_size = kDefaultChunkSize;
  int max_level = 12;
  double epsilon = 1e-3;
  int fanout = 4;
};

struct BenchOpts {
  std::string hierarchy;
  std::vector<std::string> modes = {"simple", "fast-exact", "fast-approx"};
  std::vector<std::size_t> points = {1000, 10000, 100000};
  std::vector<unsigned> threads = {1};
  int repeat = 3;
  std::string dist = "uniform";
  std::uint64_t seed = 42;
  bool strict = false;
  int max_level = 12;
  double epsilon = 1e-3;
  int fanout = 4;
  std::size_t chunk_size = 0;  // 0: derive from n/threads
  std::string out_csv = "bench.csv";
  std::string out_tsv = "bench.tsv";
  std::string out_json;
};

SyntheticSpec parse_shape(const std::string& shape, std::uint64_t seed,
                          double jitter) {
  SyntheticSpec spec;
  unsigned s = 0, c = 0, b = 0;
  if (std::sscanf(shape.c_str(), "%ux%ux%u", &s, &c, &b) != 3 || s == 0 ||
      c == 0 || b == 0) {
    throw UsageError("--shape must look like 4x4x25");
  }
  spec.seed = seed;
  spec.n_states = s;
  spec.counties_per_state = c;
  spec.blocks_per_county = b;
  spec.jitter = jitter;
  return spec;
}

std::string read_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open artifact: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  return std::string(magic, 4);
}

unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);  // explicit override
  if (const char* env = std::getenv("FMCB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return std::min<unsigned>(static_cast<unsigned>(v), hardware_threads());
  }
  return hardware_threads();
}

std::vector<PointRecord> read_points(const std::string& path,
                                     const std::string& format) {
  std::string fmt = format;
  if (fmt == "auto") {
    const auto ext = std::filesystem::path(path).extension().string();
    fmt = (ext == ".f64" || ext == ".bin") ? "f64" : "csv";
  }
  if (fmt == "csv") return read_points_csv(path);
  if (fmt == "f64") return read_points_f64(path);
  throw UsageError("--points-format must be auto, csv or f64");
}

int run_generate(const GenerateOpts& o) {
  const SyntheticSpec spec = parse_shape(o.shape, o.seed, o.jitter);
  const RegionHierarchy h = generate_synthetic(spec);
  write_boundaries(h, o.out_dir);

  const BBox box = hierarchy_bbox(h);
  const auto pts = o.clustered ? sample_clustered(box, o.n_points, o.seed + 1)
                               : sample_uniform(box, o.n_points, o.seed + 1);
  const auto dir = std::filesystem::path(o.out_dir);
  write_points_csv((dir / "points.csv").string(), pts);

  const auto leaves = collect_leaves(h);
  const auto ref = exhaustive_assign(leaves, pts);
  std::ofstream oracle(dir / "oracle.csv", std::ios::trunc);
  if (!oracle) throw std::runtime_error("cannot write oracle.csv");
  oracle << "idx,lon,lat,fips\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    oracle << i << ',' << detail::format_double(pts[i].lon) << ','
           << detail::format_double(pts[i].lat) << ',';
    if (ref[i] >= 0) oracle << *leaves[static_cast<std::size_t>(ref[i])].fips12;
    oracle << '\n';
  }

  std::cout << "generated states=" << h.counts.states
            << " counties=" << h.counts.counties
            << " blocks=" << h.counts.blocks << " points=" << pts.size()
            << " under " << o.out_dir << "\n";
  return 0;
}

int run_ingest(const IngestOpts& o) {
  const RegionHierarchy h = load_boundaries(o.states, o.counties, o.blocks);
  save_hierarchy(h, o.out);
  std::cout << "ingested states=" << h.counts.states
            << " counties=" << h.counts.counties
            << " blocks=" << h.counts.blocks << " -> " << o.out << "\n";
  return 0;
}

CoverParams cover_params_for(const std::string& mode, int max_level,
                             double epsilon) {
  CoverParams params;
  params.max_level = max_level;
  if (mode == "exact" || mode == "fast-exact") {
    params.mode = CoverMode::exact;
  } else if (mode == "approx" || mode == "fast-approx") {
    params.mode = CoverMode::approx;
    params.epsilon = epsilon;
  } else {
    throw UsageError("unknown index mode: " + mode);
  }
  return params;
}

int run_index(const IndexOpts& o) {
  const RegionHierarchy h = load_hierarchy(o.hierarchy);
  const CoverParams params = cover_params_for(o.mode, o.max_level, o.epsilon);
  const CellCover cover = build_cover(h, params);
  const TrieIndex trie = build_trie(cover, o.fanout);
  save_index(cover, o.fanout, o.out);
  const IndexStats stats = index_stats(trie, cover);
  std::cout << "indexed mode=" << o.mode << " entries=" << cover.entries.size()
            << " interior=" << stats.interior_cells
            << " boundary=" << stats.boundary_cells
            << " trie_nodes=" << stats.trie_nodes
            << " bytes=" << stats.total_bytes << " -> " << o.out << "\n";
  return 0;
}

int run_assign(const AssignOpts& o) {
  const std::string magic = read_magic(o.artifact);
  RegionHierarchy h;
  std::optional<IndexFile> index;

  std::string mode = o.mode;
  if (magic == std::string(kHierarchyMagic, 4)) {
    h = load_hierarchy(o.artifact);
    if (mode.empty()) mode = "simple";
  } else if (magic == std::string(kIndexMagic, 4)) {
    if (o.hierarchy.empty()) {
      throw UsageError("an index artifact needs --hierarchy for the geometry");
    }
    index = load_index(o.artifact);
    h = load_hierarchy(o.hierarchy);
    if (mode.empty()) {
      mode = index->cover.params.mode == CoverMode::approx ? "fast-approx"
                                                           : "fast-exact";
    }
    if (mode == "simple") {
      throw UsageError("mode simple expects a hierarchy artifact, not an index");
    }
    if (mode == "fast-approx" &&
        index->cover.params.mode != CoverMode::approx) {
      throw UsageError("fast-approx needs an index built in approx mode");
    }
  } else {
    throw std::runtime_error("unrecognized artifact (bad magic): " + o.artifact);
  }
  if (mode != "simple" && mode != "fast-exact" && mode != "fast-approx") {
    throw UsageError("unknown assign mode: " + mode);
  }

  const auto records = read_points(o.points, o.points_format);
  std::vector<Point> pts;
  std::vector<std::size_t> kept;
  pts.reserve(records.size());
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].finite) {
      ++skipped;
      if (skipped <= 10) {
        std::cerr << "warning: skipping row " << i
                  << " with non-finite coordinates\n";
      }
      continue;
    }
    pts.push_back(records[i].point);
    kept.push_back(i);
  }
  if (skipped > 10) {
    std::cerr << "warning: " << skipped << " rows skipped in total\n";
  }

  const unsigned threads = resolve_threads(o.threads);
  const AssignMode amode = o.strict ? AssignMode::strict : AssignMode::relaxed;

  std::vector<LeafRegion> leaves;
  CellCover cover;
  TrieIndex trie;
  if (mode != "simple") {
    leaves = collect_leaves(h);
    if (index) {
      cover = std::move(index->cover);
      trie = build_trie(cover, index->levels_per_node);
    } else {
      cover = build_cover(leaves, cover_params_for(mode, o.max_level, o.epsilon));
      trie = build_trie(cover, o.fanout);
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  AssignmentResult res;
  if (mode == "simple") {
    res = run_chunked(pts, o.chunk_size, threads, [&](std::span<const Point> s) {
      return assign(h, s, amode);
    });
  } else {
    const CoverMode qmode =
        mode == "fast-approx" ? CoverMode::approx : CoverMode::exact;
    res = run_chunked(pts, o.chunk_size, threads, [&](std::span<const Point> s) {
      return query_leaves(trie, leaves, s, qmode);
    });
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

  std::ofstream out(o.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + o.out);
  out << "idx,lon,lat,fips\n";
  std::size_t resolved = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& rec = records[kept[k]];
    out << kept[k] << ',' << rec.lon_text << ',' << rec.lat_text << ',';
    const auto fips = result_fips(h, res, k);
    if (!fips.empty()) {
      out << fips;
      ++resolved;
    }
    out << '\n';
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + o.out);

  std::cerr << "assigned " << resolved << "/" << pts.size() << " points (mode "
            << mode << ", " << threads << " threads, " << skipped
            << " rows skipped) in " << dt.count() << " s";
  if (!pts.empty()) {
    std::cerr << ", pip_fraction=" << pip_fraction(res, pts.size());
  }
  std::cerr << "\n";
  return 0;
}

int run_bench(const BenchOpts& o) {
  const RegionHierarchy h = load_hierarchy(o.hierarchy);
  const auto leaves = collect_leaves(h);
  const BBox box = hierarchy_bbox(h);

  std::size_t max_n = 0;
  for (std::size_t n : o.points) max_n = std::max(max_n, n);
  if (max_n == 0) throw UsageError("--points needs at least one size");
  const auto all_pts = o.dist == "clustered"
                           ? sample_clustered(box, max_n, o.seed)
                           : sample_uniform(box, max_n, o.seed);
  const AssignMode amode = o.strict ? AssignMode::strict : AssignMode::relaxed;

  std::vector<BenchReport> rows;
  for (const std::string& mode : o.modes) {
    double build_seconds = 0.0;
    std::size_t index_bytes = 0;
    CellCover cover;
    TrieIndex trie;
    if (mode != "simple") {
      const auto b0 = std::chrono::steady_clock::now();
      cover = build_cover(leaves, cover_params_for(mode, o.max_level, o.epsilon));
      trie = build_trie(cover, o.fanout);
      build_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - b0)
              .count();
      index_bytes = index_stats(trie, cover).total_bytes;
    }
    const CoverMode qmode =
        mode == "fast-approx" ? CoverMode::approx : CoverMode::exact;

    for (std::size_t n : o.points) {
      const auto pts = std::span<const Point>(all_pts.data(), n);
      for (unsigned threads : o.threads) {
        std::size_t chunk = o.chunk_size;
        if (chunk == 0) {
          chunk = std::clamp<std::size_t>(n / (std::size_t{threads} * 4) + 1,
                                          4096, kDefaultChunkSize);
        }
        auto run = [&]() {
          return mode == "simple"
                     ? run_chunked(pts, chunk, threads,
                                   [&](std::span<const Point> s) {
                                     return assign(h, s, amode);
                                   })
                     : run_chunked(pts, chunk, threads,
                                   [&](std::span<const Point> s) {
                                     return query_leaves(trie, leaves, s, qmode);
                                   });
        };
        const AssignmentResult sample = run();
        const double seconds = best_of(o.repeat, run);
        rows.push_back(make_report(mode, n, threads, build_seconds, seconds,
                                   pip_fraction(sample, std::max<std::size_t>(n, 1)),
                                   index_bytes));
        std::cout << to_csv(rows.back()) << "\n";
      }
    }
  }

  if (!o.out_csv.empty()) {
    std::ofstream f(o.out_csv, std::ios::trunc);
    f << bench_csv_header() << "\n";
    for (const auto& r : rows) f << to_csv(r) << "\n";
  }
  if (!o.out_tsv.empty()) {
    std::ofstream f(o.out_tsv, std::ios::trunc);
    f << "# " << bench_csv_header() << "\n";
    for (const auto& r : rows) f << to_tsv(r) << "\n";
  }
  if (!o.out_json.empty()) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) doc.push_back(to_json(r));
    std::ofstream f(o.out_json, std::ios::trunc);
    f << doc.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-to-region assignment over a three-level polygon hierarchy"};
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* cmd_generate =
      app.add_subcommand("generate", "emit synthetic boundary GeoJSON, sample "
                                     "points and a reference assignment");
  cmd_generate->add_option("--out", gen.out_dir, "output directory")->required();
  cmd_generate->add_option("--seed", gen.seed, "RNG seed");
  cmd_generate->add_option("--shape", gen.shape,
                           "states x counties-per-state x blocks-per-county");
  cmd_generate->add_option("--jitter", gen.jitter,
                           "block lattice jitter, fraction of pitch in [0,0.5)");
  cmd_generate->add_option("--points", gen.n_points, "sample point count");
  cmd_generate->add_flag("--clustered", gen.clustered,
                         "cluster sample points instead of uniform");

  IngestOpts ing;
  auto* cmd_ingest = app.add_subcommand(
      "ingest", "build a binary hierarchy (FMCB) from three GeoJSON files");
  cmd_ingest->add_option("--states", ing.states, "states GeoJSON")->required();
  cmd_ingest->add_option("--counties", ing.counties, "counties GeoJSON")->required();
  cmd_ingest->add_option("--blocks", ing.blocks, "block groups GeoJSON")->required();
  cmd_ingest->add_option("--out", ing.out, "output FMCB path")->required();

  IndexOpts idx;
  auto* cmd_index = app.add_subcommand(
      "index", "build a cell index (FMCI) from a hierarchy");
  cmd_index->add_option("--hierarchy", idx.hierarchy, "FMCB input")->required();
  cmd_index->add_option("--out", idx.out, "output FMCI path")->required();
  cmd_index->add_option("--mode", idx.mode, "exact or approx");
  cmd_index->add_option("--max-level", idx.max_level,
                        "boundary subdivision level for exact mode");
  cmd_index->add_option("--epsilon", idx.epsilon,
                        "approx boundary cell diagonal bound, degrees");
  cmd_index->add_option("--fanout", idx.fanout, "quadtree levels per trie level (1, 2 or 4)");

  AssignOpts asg;
  auto* cmd_assign = app.add_subcommand(
      "assign", "map points to leaf FIPS codes using a hierarchy or index");
  cmd_assign->add_option("artifact", asg.artifact, "FMCB or FMCI file")->required();
  cmd_assign->add_option("--points", asg.points, "points file (lon,lat CSV or raw f64)")
      ->required();
  cmd_assign->add_option("--out", asg.out, "output CSV path")->required();
  cmd_assign->add_option("--mode", asg.mode, "simple, fast-exact or fast-approx");
  cmd_assign->add_flag("--strict", asg.strict,
                       "polygon-verify every assignment, no bbox fallback");
  cmd_assign->add_option("--threads", asg.threads,
                         "worker threads (default: FMCB_THREADS or hardware)");
  cmd_assign->add_option("--chunk-size", asg.chunk_size, "points per work chunk");
  cmd_assign->add_option("--hierarchy", asg.hierarchy,
                         "FMCB geometry when the artifact is an FMCI index");
  cmd_assign->add_option("--max-level", asg.max_level,
                         "exact-mode subdivision level for inline index builds");
  cmd_assign->add_option("--epsilon", asg.epsilon,
                         "approx-mode bound for inline index builds");
  cmd_assign->add_option("--fanout", asg.fanout, "trie fanout for inline index builds");
  cmd_assign->add_option("--points-format", asg.points_format, "auto, csv or f64");

  BenchOpts bch;
  auto* cmd_bench = app.add_subcommand(
      "bench", "throughput sweep over modes, point counts and threads");
  cmd_bench->add_option("--hierarchy", bch.hierarchy, "FMCB input")->required();
  cmd_bench->add_option("--modes", bch.modes, "modes to run")->delimiter(',');
  cmd_bench->add_option("--points", bch.points, "point counts")->delimiter(',');
  cmd_bench->add_option("--threads", bch.threads, "thread counts")->delimiter(',');
  cmd_bench->add_option("--repeat", bch.repeat, "timed repetitions (best-of)");
  cmd_bench->add_option("--dist", bch.dist, "uniform or clustered");
  cmd_bench->add_option("--seed", bch.seed, "point RNG seed");
  cmd_bench->add_flag("--strict", bch.strict, "strict simple-mode assignment");
  cmd_bench->add_option("--max-level", bch.max_level, "fast-exact subdivision level");
  cmd_bench->add_option("--epsilon", bch.epsilon, "fast-approx diagonal bound");
  cmd_bench->add_option("--fanout", bch.fanout, "trie fanout");
  cmd_bench->add_option("--chunk-size", bch.chunk_size,
                        "points per work chunk (0 = derive from n/threads)");
  cmd_bench->add_option("--out-csv", bch.out_csv,
                        "CSV output path (empty to skip)");
  cmd_bench->add_option("--out-tsv", bch.out_tsv,
                        "gnuplot TSV output path (empty to skip)");
  cmd_bench->add_option("--out-json", bch.out_json, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(cmd_generate)) return run_generate(gen);
    if (app.got_subcommand(cmd_ingest)) return run_ingest(ing);
    if (app.got_subcommand(cmd_index)) return run_index(idx);
    if (app.got_subcommand(cmd_assign)) return run_assign(asg);
    if (app.got_subcommand(cmd_bench)) return run_bench(bch);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
