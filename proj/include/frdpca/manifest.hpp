#pragma once

// Shard sets on disk: K shard files plus a JSON manifest with the generating config and the
// true leading basis.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "frdpca/experiment.hpp"

namespace frdpca::cli {

struct Manifest {
  std::string config_json;  // generating ExperimentConfig
  Index p = 0;
  Index n = 0;
  Index K = 0;
  Index r = 0;
  std::uint64_t data_seed = 0;
  double noise_sigma2 = 1.0;
  std::vector<std::string> shard_files;  // relative to the manifest's directory
  Eigen::MatrixXd truth;                 // p x r

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

/// Writes shard_<k>.fpca (and shard_<k>.csv when `csv`) plus manifest.json into `dir`.
/// The shards are those of replication 0 of the first sweep point of run_experiment.
Manifest generate_shards(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         bool csv = false);

Manifest read_manifest(const std::filesystem::path& path);

}  // namespace frdpca::cli
