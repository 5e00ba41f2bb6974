#pragma once

// Little-endian binary readers/writers for the FMCB/FMCI file formats, plus
// the points CSV / raw-f64 readers used by the CLI.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastmap/geometry.hpp"

namespace fastmap {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed: " + path_);
  }

 private:
  template <typename T>
  void put(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    }
    bytes(buf, sizeof(T));
  }

  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open for reading: " + path);
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw std::runtime_error("truncated file: " + path_);
    }
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  template <typename T>
  T get() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(buf[i]) << (8 * i);
    }
    return v;
  }

  std::string path_;
  std::ifstream in_;
};

/// One parsed input row. Rows with non-finite coordinates are kept so the
/// caller can warn and skip them while preserving input indices.
struct PointRecord {
  Point point;
  std::string lon_text;  // verbatim input fields, echoed to outputs
  std::string lat_text;
  bool finite = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a `lon,lat` CSV (header required).
inline std::vector<PointRecord> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open points file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("points file is empty (missing lon,lat header): " + path);
  }
  std::vector<PointRecord> out;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("points file row missing comma: " + line);
    }
    PointRecord rec;
    rec.lon_text = detail::trim(line.substr(0, comma));
    rec.lat_text = detail::trim(line.substr(comma + 1));
    try {
      rec.point.lon = std::stod(rec.lon_text);
      rec.point.lat = std::stod(rec.lat_text);
      rec.finite = is_finite(rec.point);
    } catch (const std::exception&) {
      rec.finite = false;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Reads raw little-endian f64 lon/lat pairs.
inline std::vector<PointRecord> read_points_f64(const std::string& path) {
  BinaryReader in(path);
  std::vector<PointRecord> out;
  while (!in.at_eof()) {
    PointRecord rec;
    rec.point.lon = in.f64();
    rec.point.lat = in.f64();
    rec.finite = is_finite(rec.point);
    rec.lon_text = detail::format_double(rec.point.lon);
    rec.lat_text = detail::format_double(rec.point.lat);
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_points_csv(const std::string& path, std::span<const Point> pts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "lon,lat\n";
  for (const Point& p : pts) {
    out << detail::format_double(p.lon) << ',' << detail::format_double(p.lat)
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_points_f64(const std::string& path, std::span<const Point> pts) {
  BinaryWriter out(path);
  for (const Point& p : pts) {
    out.f64(p.lon);
    out.f64(p.lat);
  }
  out.close();
}

}  // namespace fastmap
