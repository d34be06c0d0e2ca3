#pragma once

// Output directory bookkeeping: every file is written through a temporary
// name and renamed into place, and its digest is recorded for the manifest.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "omech/errors.hpp"
#include "omech/grid.hpp"
#include "omech/harness/digest.hpp"
#include "omech/operator.hpp"

namespace omech::harness {

struct OutputEntry {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

/// Shortest text that round-trips a double; keeps CSV output byte-stable.
inline std::string format_number(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw IoError("CSV row width does not match its header");
    rows_.push_back(cells);
    return *this;
  }

  CsvTable& row(std::span<const double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    return row(cells);
  }

  CsvTable& row(std::initializer_list<double> values) { return row(std::span<const double>(values.begin(), values.size())); }

  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Trajectory frames: per frame a little-endian header (uint32 rank,
/// uint64 dims[rank], float64 t) followed by complex64 pairs in row-major order.
class FrameWriter {
 public:
  void append(const std::vector<std::size_t>& dims, double t, const Field& values) {
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    if (total != std::size_t(values.size())) throw IoError("frame payload does not match its dimensions");
    put(std::uint32_t(dims.size()));
    for (auto d : dims) put(std::uint64_t(d));
    put(t);
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      put(float(values[k].real()));
      put(float(values[k].imag()));
    }
    ++frames_;
  }

  std::size_t frames() const { return frames_; }
  const std::string& bytes() const { return bytes_; }

 private:
  template <class T>
  void put(T v) {
    bytes_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }

  std::string bytes_;
  std::size_t frames_ = 0;
};

/// Row-major complex pairs (re, im) as float64, preceded by uint64 rows and cols.
inline std::string serialize_matrix(const ComplexMatrix<double>& m) {
  std::string out;
  const auto put = [&](auto v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(std::uint64_t(m.rows()));
  put(std::uint64_t(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put(m(r, c).real());
      put(m(r, c).imag());
    }
  return out;
}

/// Row-major nested JSON arrays of a real matrix.
template <class Matrix>
nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(double(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

class OutputDirectory {
 public:
  explicit OutputDirectory(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_))
      throw IoError("cannot create output directory " + root_.string() + (ec ? ": " + ec.message() : ""));
  }

  const std::filesystem::path& root() const { return root_; }

  /// Writes bytes under name and records the entry for the manifest.
  const OutputEntry& write(const std::string& name, const std::string& bytes) {
    const auto target = root_ / name;
    write_atomically(target, bytes);
    for (auto& e : entries_)
      if (e.name == name) {
        e = {name, bytes.size(), sha256(bytes)};
        return e;
      }
    entries_.push_back({name, bytes.size(), sha256(bytes)});
    return entries_.back();
  }

  const OutputEntry& write(const std::string& name, const CsvTable& table) { return write(name, table.str()); }

  const std::vector<OutputEntry>& entries() const { return entries_; }

  static nlohmann::json entry_json(const OutputEntry& e) {
    return {{"path", e.name}, {"bytes", e.bytes}, {"sha256", e.sha256}};
  }

  /// The completion marker: lists every file with its digest, written last.
  void write_manifest(const nlohmann::json& extra) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries_) files.push_back(entry_json(e));
    nlohmann::json manifest = extra;
    manifest["files"] = files;
    write_atomically(root_ / "manifest.json", manifest.dump(2) + "\n");
  }

  static void write_atomically(const std::filesystem::path& target, const std::string& bytes) {
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
      out.write(bytes.data(), std::streamsize(bytes.size()));
      out.flush();
      if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
  }

 private:
  std::filesystem::path root_;
  std::vector<OutputEntry> entries_;
};

/// Checks a finished directory against its manifest.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& root) {
  std::vector<std::string> problems;
  std::ifstream in(root / "manifest.json");
  if (!in) return {"manifest.json missing"};
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    return {std::string("manifest.json unreadable: ") + e.what()};
  }
  for (const auto& f : manifest.at("files")) {
    const auto path = root / f.at("path").get<std::string>();
    if (!std::filesystem::exists(path)) {
      problems.push_back(f.at("path").get<std::string>() + " missing");
      continue;
    }
    if (sha256_file(path.string()) != f.at("sha256").get<std::string>())
      problems.push_back(f.at("path").get<std::string>() + " digest mismatch");
  }
  return problems;
}

}  // namespace omech::harness
