#pragma once

// CSV tables and the mean +- sd aggregation of per-replication reports.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace frdpca::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  long column(const std::string& name) const;
};

/// RFC 4180 style: quoted fields may hold commas, doubled quotes and newlines; CRLF accepted.
/// The first record is the header; every record must have the header's width.
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const CsvTable& table, std::ostream& out);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

/// Two-pass mean and sample standard deviation.
MeanSd mean_sd(std::span<const double> values);

/// "0.0293 ± 0.0020"
std::string format_mean_sd(const MeanSd& m, int digits = 4);

/// Columns averaged over replications when present.
const std::vector<std::string>& metric_columns();

/// Groups rows by every column other than "rep", "l_hat" and the metric columns, in order of
/// first appearance. Each metric becomes <m>_mean, <m>_sd and a formatted <m> column.
/// All inputs must share one header (InputError otherwise).
CsvTable summarize_reports(std::span<const CsvTable> reports);

}  // namespace frdpca::cli
