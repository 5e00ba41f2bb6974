#pragma once

// Benchmark reporting: one row per (mode, n_points, threads) with best-of-R
// timing, serialized as CSV, gnuplot-ready TSV and JSON.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

namespace fastmap {

struct BenchReport {
  std::string mode;  // simple | fast-exact | fast-approx
  std::size_t n_points = 0;
  unsigned threads = 1;
  double build_seconds = 0.0;
  double assign_seconds = 0.0;
  double points_per_second = 0.0;
  double pip_fraction = 0.0;
  std::size_t index_bytes = 0;
};

inline BenchReport make_report(std::string mode, std::size_t n_points,
                               unsigned threads, double build_seconds,
                               double assign_seconds, double pip_fraction,
                               std::size_t index_bytes) {
  BenchReport r;
  r.mode = std::move(mode);
  r.n_points = n_points;
  r.threads = threads;
  r.build_seconds = build_seconds;
  r.assign_seconds = assign_seconds;
  r.points_per_second =
      assign_seconds > 0.0 ? static_cast<double>(n_points) / assign_seconds : 0.0;
  r.pip_fraction = pip_fraction;
  r.index_bytes = index_bytes;
  return r;
}

inline std::string bench_csv_header() {
  return "mode,n_points,threads,build_seconds,assign_seconds,points_per_second,"
         "pip_fraction,index_bytes";
}

namespace bench_detail {

inline std::string row(const BenchReport& r, char sep) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s%c%zu%c%u%c%.9g%c%.9g%c%.1f%c%.9g%c%zu",
                r.mode.c_str(), sep, r.n_points, sep, r.threads, sep,
                r.build_seconds, sep, r.assign_seconds, sep,
                r.points_per_second, sep, r.pip_fraction, sep, r.index_bytes);
  return buf;
}

}  // namespace bench_detail

inline std::string to_csv(const BenchReport& r) {
  return bench_detail::row(r, ',');
}

inline std::string to_tsv(const BenchReport& r) {
  return bench_detail::row(r, '\t');
}

inline nlohmann::ordered_json to_json(const BenchReport& r) {
  return {{"mode", r.mode},
          {"n_points", r.n_points},
          {"threads", r.threads},
          {"build_seconds", r.build_seconds},
          {"assign_seconds", r.assign_seconds},
          {"points_per_second", r.points_per_second},
          {"pip_fraction", r.pip_fraction},
          {"index_bytes", r.index_bytes}};
}

/// Best-of-R wall time of `fn()` after one untimed warmup pass.
template <typename Fn>
double best_of(int repeats, Fn fn) {
  using clock = std::chrono::steady_clock;
  fn();  // warmup
  double best = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = clock::now();
    fn();
    const std::chrono::duration<double> dt = clock::now() - t0;
    if (r == 0 || dt.count() < best) best = dt.count();
  }
  return best;
}

}  // namespace fastmap
