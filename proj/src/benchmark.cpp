#include "frdpca/benchmark.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "frdpca/errors.hpp"
#include "frdpca/oracle.hpp"
#include "frdpca/report.hpp"
#include "frdpca/rng.hpp"
#include "frdpca/theory.hpp"
#include "frdpca/worker.hpp"
#include "json.hpp"

namespace frdpca::cli {

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974ull;
constexpr std::uint64_t kPairStream = 0x7061697273ull;

bool is_missing(const std::string& s) {
  std::string t;
  for (const char c : s) {
    if (c != ' ' && c != '\t') t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return t.empty() || t == "na" || t == "nan" || t == "?" || t == "null";
}

bool parse_number(const std::string& s, double& out) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const std::string t = s.substr(b, e - b + 1);
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

}  // namespace

Index BenchmarkSplitSpec::local_n(Index p) const {
  return static_cast<Index>(std::floor(kappa * static_cast<double>(p)));
}

Index BenchmarkSplitSpec::rank(Index p) const {
  const auto r = static_cast<Index>(std::floor(rho * static_cast<double>(p)));
  return std::max<Index>(1, std::min(r, r_max));
}

void BenchmarkSplitSpec::validate() const {
  if (!(kappa > 0.0) || !(rho > 0.0)) throw InputError("benchmark: kappa and rho must be positive");
  if (r_max < 1) throw InputError("benchmark: r_max must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError("benchmark: train fraction must lie in (0, 1)");
  }
  if (max_K < 1) throw InputError("benchmark: max_K must be positive");
}

NumericTable read_numeric_csv(std::istream& in) {
  const CsvTable raw = read_csv(in);
  const std::size_t cols = raw.header.size();
  std::vector<bool> numeric(cols, true);
  for (const auto& row : raw.rows) {
    for (std::size_t j = 0; j < cols; ++j) {
      double v;
      if (numeric[j] && !is_missing(row[j]) && !parse_number(row[j], v)) numeric[j] = false;
    }
  }
  NumericTable t;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < cols; ++j) {
    if (numeric[j]) {
      keep.push_back(j);
      t.columns.push_back(raw.header[j]);
    }
  }
  std::vector<double> values;
  Index rows = 0;
  for (const auto& row : raw.rows) {
    bool ok = true;
    std::vector<double> v(keep.size());
    for (std::size_t c = 0; c < keep.size() && ok; ++c) ok = parse_number(row[keep[c]], v[c]);
    if (!ok) {
      ++t.dropped_rows;
      continue;
    }
    values.insert(values.end(), v.begin(), v.end());
    ++rows;
  }
  t.rows = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, static_cast<Index>(keep.size()));
  return t;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_numeric_csv(in);
}

BenchmarkSplit make_benchmark_split(const Eigen::MatrixXd& data, const BenchmarkSplitSpec& spec,
                                    std::uint64_t rep_seed) {
  spec.validate();
  const Index N = data.rows();
  const Index p = data.cols();
  if (p < 2) throw InputError("benchmark: need at least 2 numeric columns, got " + std::to_string(p));
  const auto n_train = static_cast<Index>(std::floor(spec.train_fraction * static_cast<double>(N)));
  BenchmarkSplit s;
  s.n = spec.local_n(p);
  s.r = spec.rank(p);
  if (s.n < 1 || n_train < 2 * s.n) {
    throw InputError("benchmark: " + std::to_string(n_train) + " training rows cannot fill two shards of " +
                     std::to_string(s.n));
  }
  if (s.r >= p) throw InputError("benchmark: rank must be below the dimension");
  s.K = std::min(n_train / s.n, spec.max_K);

  std::vector<Index> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine engine(mix_seed(rep_seed, kSplitStream));
  for (Index i = N - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(engine))]);
  }
  s.train_rows.assign(perm.begin(), perm.begin() + n_train);
  s.test_rows.assign(perm.begin() + n_train, perm.end());

  s.mean = Eigen::RowVectorXd::Zero(p);
  for (const Index i : s.train_rows) s.mean += data.row(i);
  s.mean /= static_cast<double>(n_train);

  s.test.resize(static_cast<Index>(s.test_rows.size()), p);
  for (std::size_t i = 0; i < s.test_rows.size(); ++i) {
    s.test.row(static_cast<Index>(i)) = data.row(s.test_rows[i]) - s.mean;
  }
  for (Index k = 0; k < s.K; ++k) {
    models::DatasetShard shard;
    shard.machine_index = static_cast<std::uint32_t>(k);
    shard.seed_used = rep_seed;
    shard.data.resize(s.n, p);
    for (Index i = 0; i < s.n; ++i) {
      shard.data.row(i) = data.row(s.train_rows[static_cast<std::size_t>(k * s.n + i)]) - s.mean;
    }
    s.shards.push_back(std::move(shard));
  }
  return s;
}

ExperimentReport run_benchmark(const NumericTable& table, const BenchmarkConfig& cfg) {
  if (cfg.reps < 1) throw InputError("benchmark: reps must be at least 1");
  if (cfg.estimators.empty()) throw InputError("benchmark: no estimators");
  ExperimentReport report;
  report.kind = "benchmark";
  report.timings = cfg.timings;
  {
    nlohmann::json j;
    j["kappa"] = cfg.split.kappa;
    j["rho"] = cfg.split.rho;
    j["r_max"] = cfg.split.r_max;
    j["train_fraction"] = cfg.split.train_fraction;
    j["max_K"] = cfg.split.max_K;
    j["seed"] = cfg.split.seed;
    j["T"] = cfg.T;
    j["reps"] = cfg.reps;
    j["kappa_sweep"] = cfg.kappa_sweep;
    j["columns"] = table.columns;
    j["rows"] = table.rows.rows();
    j["dropped_rows"] = table.dropped_rows;
    std::vector<std::string> est;
    for (const Estimator e : cfg.estimators) est.emplace_back(to_string(e));
    j["estimators"] = est;
    report.config_json = j.dump(2);
  }

  const std::vector<double> kappas =
      cfg.kappa_sweep.empty() ? std::vector<double>{cfg.split.kappa} : cfg.kappa_sweep;
  for (std::size_t i = 1; i < kappas.size(); ++i) {
    if (!(kappas[i] > kappas[i - 1])) throw InputError("benchmark: kappa sweep must increase");
  }

  for (const double kappa : kappas) {
    BenchmarkSplitSpec spec = cfg.split;
    spec.kappa = kappa;
    for (Index rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t rep_seed = mix_seed(cfg.split.seed, static_cast<std::uint64_t>(rep));
      const BenchmarkSplit split = make_benchmark_split(table.rows, spec, rep_seed);
      const Index p = table.rows.cols();

      const oracle::PooledEstimate pooled = oracle::pooled_covariance_pca(split.shards, split.r);
      const double pooled_ar = theory::average_retention(pooled.basis, split.test);

      std::vector<worker::Worker> cov_workers;
      std::vector<worker::Worker> tau_workers;
      for (const Estimator e : cfg.estimators) {
        const bool cov = e == Estimator::oneround || e == Estimator::frdpca_shifted ||
                         e == Estimator::frdpca_unshifted;
        if (cov && cov_workers.empty()) {
          for (const auto& s : split.shards) {
            cov_workers.emplace_back(s.machine_index, worker::compute_local_covariance(s));
          }
        }
        if (e == Estimator::frdpca_kendall && tau_workers.empty()) {
          for (const auto& s : split.shards) {
            tau_workers.emplace_back(
                s.machine_index,
                worker::compute_local_kendall_tau(
                    s, worker::default_pair_policy(s.n(), mix_seed(rep_seed, kPairStream + s.machine_index))));
          }
        }
      }

      for (const Estimator e : cfg.estimators) {
        ReportRow row;
        row.estimator = to_string(e);
        row.sweep_axis = cfg.kappa_sweep.empty() ? "none" : "kappa";
        row.sweep_value = cfg.kappa_sweep.empty() ? 0.0 : kappa;
        row.rep = rep;
        row.p = p;
        row.n = split.n;
        row.K = split.K;
        row.r = split.r;
        row.T = 1;
        const auto t0 = std::chrono::steady_clock::now();
        Basisd basis;
        auto distributed = [&](std::vector<worker::Worker>& workers, coordinator::ShiftMode shift,
                               std::uint32_t T, worker::SummaryKind kind) {
          coordinator::IterationConfig it;
          it.r = split.r;
          it.policy = coordinator::FixedRounds{T};
          it.shift = shift;
          it.estimator = kind;
          const auto est = run_distributed(workers, cfg.transport, it);
          row.T = est.rounds_run;
          row.comm_floats = est.comm_log.data_floats();
          return est.basis;
        };
        switch (e) {
          case Estimator::oneround:
            basis = distributed(cov_workers, coordinator::ShiftMode::shifted, 1,
                                worker::SummaryKind::covariance);
            break;
          case Estimator::frdpca_shifted:
            basis = distributed(cov_workers, coordinator::ShiftMode::shifted, cfg.T,
                                worker::SummaryKind::covariance);
            break;
          case Estimator::frdpca_unshifted:
            basis = distributed(cov_workers, coordinator::ShiftMode::unshifted, cfg.T,
                                worker::SummaryKind::covariance);
            break;
          case Estimator::frdpca_kendall:
            basis = distributed(tau_workers, coordinator::ShiftMode::shifted, cfg.T,
                                worker::SummaryKind::kendall_tau);
            break;
          case Estimator::pooled:
            basis = pooled.basis;
            break;
          case Estimator::pooled_kendall: {
            const Index N = split.K * split.n;
            basis = oracle::pooled_kendall_pca(
                        split.shards, split.r,
                        oracle::default_pooled_pair_policy(N, mix_seed(rep_seed, kPairStream)))
                        .basis;
            break;
          }
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
        row.frob_error = projector_distance(pooled.basis, basis);
        row.sq_error = row.frob_error * row.frob_error;
        row.alignment = (pooled.basis.matrix().transpose() * basis.matrix()).squaredNorm() /
                        static_cast<double>(split.r);
        row.ar = theory::average_retention(basis, split.test);
        if (pooled_ar > 0.0) row.ar_relative = *row.ar / pooled_ar;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace frdpca::cli
