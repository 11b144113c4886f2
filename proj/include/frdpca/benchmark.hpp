#pragma once

// Real-data protocol: numeric CSV ingestion, random train/test split, training rows cut
// into K equal shards, test-set retention of each estimator relative to pooled PCA.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "frdpca/experiment.hpp"
#include "frdpca/models.hpp"

namespace frdpca::cli {

struct BenchmarkSplitSpec {
  double kappa = 1.0;
  double rho = 0.1;
  Index r_max = 5;
  double train_fraction = 0.8;
  Index max_K = 1000;
  std::uint64_t seed = 1;

  Index local_n(Index p) const;  // floor(kappa p)
  Index rank(Index p) const;     // min(floor(rho p), r_max), at least 1
  void validate() const;
};

struct NumericTable {
  std::vector<std::string> columns;  // numeric columns kept, in file order
  Eigen::MatrixXd rows;
  Index dropped_rows = 0;  // rows with a missing value in a kept column
};

/// Header row required. A column is kept when every non-missing cell parses as a number;
/// empty, "NA", "NaN", "?" and "null" count as missing.
NumericTable read_numeric_csv(std::istream& in);
NumericTable read_numeric_csv(const std::filesystem::path& path);

struct BenchmarkSplit {
  std::vector<Index> train_rows;  // indices into the input table
  std::vector<Index> test_rows;
  Eigen::RowVectorXd mean;        // training column means
  Eigen::MatrixXd test;           // centred test rows
  std::vector<models::DatasetShard> shards;  // centred training rows, n each
  Index n = 0;
  Index r = 0;
  Index K = 0;
};

/// InputError when p < 2 or fewer than 2 n training rows remain.
BenchmarkSplit make_benchmark_split(const Eigen::MatrixXd& data, const BenchmarkSplitSpec& spec,
                                    std::uint64_t rep_seed);

struct BenchmarkConfig {
  BenchmarkSplitSpec split;
  std::vector<Estimator> estimators{Estimator::oneround, Estimator::frdpca_shifted,
                                    Estimator::pooled};
  std::uint32_t T = 2;
  Index reps = 1;
  std::vector<double> kappa_sweep;  // empty: split.kappa only
  TransportKind transport = TransportKind::inprocess;
  bool timings = false;
};

/// Rows carry ar and ar_relative (AR / pooled AR of the same split); sq_error is measured
/// against the pooled basis.
ExperimentReport run_benchmark(const NumericTable& table, const BenchmarkConfig& cfg);

}  // namespace frdpca::cli
