#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bgfn::runner {

inline constexpr const char* kMetricsHeader = "run_id,epoch,metric,value,seed,epsilon,alpha,stage_count";

struct MetricRow {
  std::string run_id;
  std::int64_t epoch = 0;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::size_t stage_count = 1;
};

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_number(double value);
[[nodiscard]] std::string format_row(const MetricRow& row);
/// Throws ConfigError on malformed rows.
[[nodiscard]] MetricRow parse_row(const std::string& line);

/// Append-only CSV. Opening with a byte offset truncates everything after
/// it, which is how a resumed run discards rows written after its checkpoint.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  void open_fresh(const std::string& path);
  void open_at(const std::string& path, std::uint64_t offset);

  void append(const MetricRow& row);
  /// Byte offset of the end of the file after flushing.
  [[nodiscard]] std::uint64_t offset();
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

[[nodiscard]] std::vector<MetricRow> read_metrics(const std::string& path);

/// Merges every metrics.csv under `dir` into one long-format table, sorted
/// by run, seed, metric and epoch. Writes only the header when none exist.
void export_plotdata(const std::string& dir, const std::optional<std::string>& metric, std::ostream& out);

}  // namespace bgfn::runner
