#include "bgfn/runner/metrics_file.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <sstream>
#include <tuple>

#include "bgfn/error.hpp"

namespace bgfn::runner {

namespace fs = std::filesystem;

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) {
    throw UsageError("format_number: conversion failed");
  }
  return {buf.data(), ptr};
}

std::string format_row(const MetricRow& row) {
  return row.run_id + "," + std::to_string(row.epoch) + "," + row.metric + "," + format_number(row.value) + "," +
         std::to_string(row.seed) + "," + format_number(row.epsilon) + "," + format_number(row.alpha) + "," +
         std::to_string(row.stage_count);
}

MetricRow parse_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  if (cells.size() != 8) {
    throw ConfigError("metrics row has " + std::to_string(cells.size()) + " fields: '" + line + "'");
  }
  auto num = [&](const std::string& s, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("metrics row has a malformed number: '" + line + "'");
    }
  };
  MetricRow row;
  row.run_id = cells[0];
  num(cells[1], row.epoch);
  row.metric = cells[2];
  num(cells[3], row.value);
  num(cells[4], row.seed);
  num(cells[5], row.epsilon);
  num(cells[6], row.alpha);
  num(cells[7], row.stage_count);
  return row;
}

void MetricsWriter::open_fresh(const std::string& path) {
  path_ = path;
  if (fs::path(path).has_parent_path()) {
    fs::create_directories(fs::path(path).parent_path());
  }
  out_ = std::ofstream(path, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw ConfigError("cannot write metrics file '" + path + "'");
  }
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

void MetricsWriter::open_at(const std::string& path, std::uint64_t offset) {
  path_ = path;
  if (!fs::exists(path)) {
    throw ConfigError("metrics file '" + path + "' is missing; cannot resume");
  }
  if (fs::file_size(path) < offset) {
    throw ConfigError("metrics file '" + path + "' is shorter than the checkpoint expects");
  }
  fs::resize_file(path, offset);
  out_ = std::ofstream(path, std::ios::binary | std::ios::app);
  if (!out_) {
    throw ConfigError("cannot append to metrics file '" + path + "'");
  }
}

void MetricsWriter::append(const MetricRow& row) {
  // Flushed per row so an interrupted run leaves only complete lines.
  out_ << format_row(row) << '\n' << std::flush;
}

std::uint64_t MetricsWriter::offset() {
  out_.flush();
  return static_cast<std::uint64_t>(fs::file_size(path_));
}

std::vector<MetricRow> read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open metrics file '" + path + "'");
  }
  std::vector<MetricRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      if (line != kMetricsHeader) {
        throw ConfigError("'" + path + "' does not start with the metrics header");
      }
      continue;
    }
    if (!line.empty()) {
      rows.push_back(parse_row(line));
    }
  }
  return rows;
}

void export_plotdata(const std::string& dir, const std::optional<std::string>& metric, std::ostream& out) {
  std::vector<MetricRow> rows;
  if (fs::is_directory(dir)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      for (auto& row : read_metrics(f.string())) {
        if (!metric || row.metric == *metric) {
          rows.push_back(std::move(row));
        }
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.run_id, a.seed, a.metric, a.epoch) < std::tie(b.run_id, b.seed, b.metric, b.epoch);
  });
  out << kMetricsHeader << '\n';
  for (const auto& row : rows) {
    out << format_row(row) << '\n';
  }
}

}  // namespace bgfn::runner
