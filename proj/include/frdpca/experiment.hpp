#pragma once

// Synthetic experiment runner: paired replications over a sweep, every requested
// estimator applied to the same shards, one report row per (estimator, point, rep).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "frdpca/coordinator.hpp"
#include "frdpca/models.hpp"
#include "frdpca/netsim/tcp.hpp"

namespace frdpca::cli {

enum class Estimator : std::uint8_t {
  oneround,
  frdpca_shifted,
  frdpca_unshifted,
  pooled,
  pooled_kendall,
  frdpca_kendall,
};
const char* to_string(Estimator e);
Estimator parse_estimator(const std::string& name);
/// Comma-separated list; "all" selects every estimator.
std::vector<Estimator> parse_estimators(const std::string& list);

enum class Scenario : std::uint8_t { gaussian_spiked, general, elliptical };
const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

enum class SweepAxis : std::uint8_t { none, n, l, kappa };
const char* to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& name);

enum class TransportKind : std::uint8_t { inprocess, tcp };

struct ExperimentConfig {
  Scenario scenario = Scenario::gaussian_spiked;
  Index p = 200;
  Index n = 100;
  Index K = 60;
  std::uint32_t T = 2;
  Index reps = 1;
  std::uint64_t seed = 1;
  std::vector<double> spikes{3.0, 2.75, 2.5};  // r = spikes.size()
  models::NoiseProfile noise = models::UniformNoise{};
  bool canonical_basis = false;
  // general scenario
  double alpha_signal = 5.0;
  double alpha_noise = 2.0;
  // elliptical scenario (alpha_* also skew the Gaussian part)
  double nu = 3.0;
  std::vector<Estimator> estimators{Estimator::oneround, Estimator::frdpca_shifted,
                                    Estimator::pooled};
  SweepAxis sweep = SweepAxis::none;
  std::vector<double> sweep_values;
  bool inference_mode = false;
  coordinator::InitMode init = coordinator::InitMode::one_round;
  TransportKind transport = TransportKind::inprocess;
  bool timings = false;  // add wall_ms to the CSV (breaks byte-for-byte reproducibility)

  Index r() const { return static_cast<Index>(spikes.size()); }
  /// Throws InputError on inconsistent settings.
  void validate() const;
};

/// Fields present in `json` override `base`.
ExperimentConfig experiment_config_from_json(const std::string& json, ExperimentConfig base = {});
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct ReportRow {
  std::string estimator;
  std::string sweep_axis = "none";
  double sweep_value = 0.0;
  Index rep = 0;
  Index p = 0, n = 0, K = 0, r = 0;
  std::uint32_t T = 1;
  double sq_error = 0.0;    // ||B B^T - U U^T||_F^2
  double frob_error = 0.0;  // ||B B^T - U U^T||_F
  double alignment = 0.0;   // ||U^T B||_F^2 / r
  std::optional<double> ar;
  std::optional<double> ar_relative;
  std::vector<double> l_hat;
  std::optional<double> sigma2_hat;
  std::uint64_t comm_floats = 0;
  double wall_ms = 0.0;
  std::string regime;
  std::optional<double> pooled_mse_limit;
  std::optional<double> oneround_mse_limit;
  std::optional<double> variance_ratio_limit;
  std::string theory_note;  // regime errors land here instead of aborting the run
};

struct ExperimentReport {
  std::string kind = "synthetic";  // or "benchmark"
  std::string config_json;
  bool timings = false;
  std::vector<ReportRow> rows;
};

/// Columns of the synthetic report CSV, in order.
const std::vector<std::string>& report_columns(bool timings);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// One distributed run over `workers`; TCP uses loopback servers on ephemeral ports.
coordinator::DistributedEstimate run_distributed(std::vector<worker::Worker>& workers,
                                                 TransportKind transport,
                                                 const coordinator::IterationConfig& cfg);

void write_report_csv(const ExperimentReport& report, std::ostream& out);
/// Config plus per-(estimator, point) means of the error metrics.
std::string report_summary_json(const ExperimentReport& report);

/// Distributed run against remote TCP workers holding their own shards.
struct RemoteRunConfig {
  std::vector<netsim::Endpoint> workers;
  Index r = 1;
  std::uint32_t T = 2;
  coordinator::ShiftMode shift = coordinator::ShiftMode::shifted;
  worker::SummaryKind kind = worker::SummaryKind::covariance;
  bool inference_mode = false;
  coordinator::InitMode init = coordinator::InitMode::one_round;
  Index p = 0;
  std::uint64_t seed = 1;
};
coordinator::DistributedEstimate run_remote(const RemoteRunConfig& cfg);

}  // namespace frdpca::cli
