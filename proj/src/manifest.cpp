#include "frdpca/manifest.hpp"

#include <fstream>
#include <sstream>

#include "frdpca/errors.hpp"
#include "frdpca/rng.hpp"
#include "frdpca/shard_io.hpp"
#include "json.hpp"

namespace frdpca::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kPopulationStream = 0x706f70ull;

}  // namespace

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["format"] = "frdpca-manifest";
  j["version"] = 1;
  j["config"] = json::parse(m.config_json.empty() ? "{}" : m.config_json);
  j["p"] = m.p;
  j["n"] = m.n;
  j["K"] = m.K;
  j["r"] = m.r;
  j["data_seed"] = m.data_seed;
  j["noise_sigma2"] = m.noise_sigma2;
  j["shards"] = m.shard_files;
  json rows = json::array();
  for (Index i = 0; i < m.truth.rows(); ++i) {
    std::vector<double> row(m.truth.cols());
    for (Index c = 0; c < m.truth.cols(); ++c) row[static_cast<std::size_t>(c)] = m.truth(i, c);
    rows.push_back(row);
  }
  j["truth"] = std::move(rows);
  return j.dump(2);
}

Manifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "frdpca-manifest") throw InputError("manifest: wrong format tag");
    Manifest m;
    m.config_json = j.at("config").dump(2);
    m.p = j.at("p").get<Index>();
    m.n = j.at("n").get<Index>();
    m.K = j.at("K").get<Index>();
    m.r = j.at("r").get<Index>();
    m.data_seed = j.at("data_seed").get<std::uint64_t>();
    m.noise_sigma2 = j.at("noise_sigma2").get<double>();
    m.shard_files = j.at("shards").get<std::vector<std::string>>();
    const auto& rows = j.at("truth");
    m.truth.resize(m.p, m.r);
    if (static_cast<Index>(rows.size()) != m.p) throw InputError("manifest: truth has wrong row count");
    for (Index i = 0; i < m.p; ++i) {
      const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
      if (static_cast<Index>(row.size()) != m.r) throw InputError("manifest: truth has wrong width");
      for (Index c = 0; c < m.r; ++c) m.truth(i, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
}

Manifest generate_shards(const ExperimentConfig& cfg, const std::filesystem::path& dir, bool csv) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

  ExperimentConfig one = cfg;
  one.reps = 1;
  if (one.sweep != SweepAxis::none) {
    // The first sweep point only.
    const double v = one.sweep_values.front();
    if (one.sweep == SweepAxis::n) one.n = static_cast<Index>(v);
    if (one.sweep == SweepAxis::l) one.spikes = {v};
    if (one.sweep == SweepAxis::kappa) one.n = static_cast<Index>(v * static_cast<double>(one.p));
  }

  models::SpikedModelSpec spec;
  spec.p = one.p;
  spec.spikes = one.spikes;
  spec.noise = one.noise;
  if (one.canonical_basis) {
    spec.basis_mode = models::CanonicalBasis{};
  } else {
    spec.basis_mode = models::RandomOrthonormalBasis{mix_seed(one.seed, kPopulationStream)};
  }
  const models::Population pop = models::make_population(spec);
  const std::uint64_t data_seed = mix_seed(mix_seed(one.seed, 1), 0);

  std::vector<models::DatasetShard> shards;
  switch (one.scenario) {
    case Scenario::gaussian_spiked:
      shards = models::sample_gaussian_spiked(pop, one.n, one.K, data_seed);
      break;
    case Scenario::general:
      shards = models::sample_general(pop, models::SkewGaussian{one.alpha_signal, one.alpha_noise},
                                      one.n, one.K, data_seed);
      break;
    case Scenario::elliptical:
      shards = models::sample_elliptical(pop, one.nu, one.alpha_signal, one.alpha_noise, one.n,
                                         one.K, data_seed);
      break;
  }

  Manifest m;
  m.config_json = experiment_config_to_json(cfg);
  m.p = one.p;
  m.n = one.n;
  m.K = one.K;
  m.r = one.r();
  m.data_seed = data_seed;
  m.noise_sigma2 = pop.noise_sigma2;
  m.truth = pop.u.matrix();
  for (const auto& s : shards) {
    const std::string name = "shard_" + std::to_string(s.machine_index) + ".fpca";
    io::write_shard(dir / name, s);
    if (csv) io::write_shard_csv(dir / ("shard_" + std::to_string(s.machine_index) + ".csv"), s);
    m.shard_files.push_back(name);
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << manifest_to_json(m) << "\n";
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

}  // namespace frdpca::cli
