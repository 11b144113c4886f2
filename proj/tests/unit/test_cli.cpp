#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "frdpca/benchmark.hpp"
#include "frdpca/errors.hpp"
#include "frdpca/experiment.hpp"
#include "frdpca/manifest.hpp"
#include "frdpca/report.hpp"
#include "frdpca/shard_io.hpp"
#include "helpers.hpp"

using namespace frdpca;
using namespace frdpca::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("frdpca_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(FRDPCA_CLI_PATH) + " " + args;
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.p = 20;
  cfg.n = 40;
  cfg.K = 4;
  cfg.T = 3;
  cfg.reps = 2;
  cfg.seed = 17;
  cfg.spikes = {6.0, 3.0};
  return cfg;
}

std::string report_csv(const ExperimentConfig& cfg) {
  std::ostringstream out;
  write_report_csv(run_experiment(cfg), out);
  return out.str();
}

// Rows spanned by two fixed directions in R^4, plus a text column and a broken row.
std::string toy_csv(Index rows, std::uint64_t seed) {
  Engine eng(seed);
  std::normal_distribution<double> z;
  std::ostringstream out;
  out.precision(17);
  out << "a,b,label,c,d\n";
  for (Index i = 0; i < rows; ++i) {
    const double s = 3.0 * z(eng), t = z(eng);
    out << s + t << "," << s - t << ",row" << i << "," << 2.0 * t << "," << s << "\n";
  }
  out << "1,NA,x,2,3\n";
  return out.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config JSON round-trips") {
  ExperimentConfig cfg = small_config();
  cfg.scenario = Scenario::elliptical;
  cfg.nu = 4.5;
  cfg.noise = models::LinearDecayNoise{1.3, 0.7};
  cfg.estimators = {Estimator::pooled_kendall, Estimator::frdpca_kendall};
  cfg.sweep = SweepAxis::n;
  cfg.sweep_values = {30.0, 60.0};
  cfg.inference_mode = true;
  cfg.init = coordinator::InitMode::random;
  cfg.transport = TransportKind::tcp;
  const std::string text = experiment_config_to_json(cfg);
  const ExperimentConfig back = experiment_config_from_json(text);
  CHECK(experiment_config_to_json(back) == text);
  CHECK(back.p == 20);
  CHECK(back.spikes == cfg.spikes);
  CHECK(std::get<models::LinearDecayNoise>(back.noise).hi == 1.3);
  CHECK(back.init == coordinator::InitMode::random);
}

TEST_CASE("config JSON overlays a base and rejects junk") {
  const ExperimentConfig cfg = experiment_config_from_json(R"({"K": 9})", small_config());
  CHECK(cfg.K == 9);
  CHECK(cfg.p == 20);
  CHECK_THROWS_AS(experiment_config_from_json("{not json"), InputError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"p": "many"})"), InputError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"estimators": ["magic"]})"), InputError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"init": "warm"})"), InputError);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config();
  cfg.spikes = {1.0, 2.0};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = small_config();
  cfg.sweep = SweepAxis::l;
  cfg.sweep_values = {1.0, 2.0};
  CHECK_THROWS_AS(cfg.validate(), InputError);  // l sweep with r = 2
  cfg.spikes = {3.0};
  cfg.sweep_values = {2.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.sweep_values = {1.0, 2.0};
  CHECK_NOTHROW(cfg.validate());
  CHECK(parse_estimators("all").size() == 6);
  CHECK(parse_estimators(" pooled , oneround").front() == Estimator::pooled);
  CHECK_THROWS_AS(parse_estimators(","), InputError);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0};
  const MeanSd s = mean_sd(v);
  CHECK(s.mean == 2.0);
  CHECK(s.sd == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.count == 3);
  const std::vector<double> one{0.25};
  CHECK(mean_sd(one).mean == 0.25);
  CHECK(mean_sd(one).sd == 0.0);
  const std::vector<double> flat(5, 7.0);
  CHECK(mean_sd(flat).sd == 0.0);
  CHECK(format_mean_sd(s, 2) == "2.00 \xC2\xB1 1.00");
}

TEST_CASE("CSV reading handles quotes and rejects ragged rows") {
  std::istringstream in("name,x\n\"a, b\",1\n\"say \"\"hi\"\"\",2\n");
  const CsvTable t = read_csv(in);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "a, b");
  CHECK(t.rows[1][0] == "say \"hi\"");
  CHECK(t.column("x") == 1);
  CHECK(t.column("y") == -1);
  std::ostringstream out;
  write_csv(t, out);
  std::istringstream again(out.str());
  CHECK(read_csv(again).rows == t.rows);
  std::istringstream ragged("a,b\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(ragged), InputError);
  std::istringstream open("a\n\"oops\n");
  CHECK_THROWS_AS(read_csv(open), InputError);
}

TEST_CASE("report summary groups reps") {
  ExperimentConfig cfg = small_config();
  cfg.reps = 3;
  cfg.estimators = {Estimator::pooled, Estimator::oneround};
  std::istringstream in(report_csv(cfg));
  const CsvTable t = read_csv(in);
  CHECK(t.rows.size() == 6);
  const CsvTable s = summarize_reports(std::span<const CsvTable>(&t, 1));
  REQUIRE(s.rows.size() == 2);
  const long reps = s.column("reps");
  const long mean = s.column("sq_error_mean");
  REQUIRE(reps >= 0);
  REQUIRE(mean >= 0);
  CHECK(s.rows[0][static_cast<std::size_t>(reps)] == "3");
  std::vector<double> pooled;
  for (const auto& row : t.rows) {
    if (row[0] == "pooled") pooled.push_back(std::stod(row[static_cast<std::size_t>(t.column("sq_error"))]));
  }
  CHECK(std::stod(s.rows[0][static_cast<std::size_t>(mean)]) ==
        doctest::Approx(mean_sd(pooled).mean).epsilon(1e-9));  // written with 10 digits

  CsvTable other = t;
  other.header.back() = "different";
  const std::vector<CsvTable> mixed{t, other};
  CHECK_THROWS_AS(summarize_reports(mixed), InputError);
}

TEST_CASE("pooled-only runs are byte-identical") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {Estimator::pooled};
  const std::string a = report_csv(cfg);
  CHECK(a == report_csv(cfg));
  cfg.seed = 18;
  CHECK(a != report_csv(cfg));
}

TEST_CASE("one machine: distributed rows equal pooled rows") {
  ExperimentConfig cfg = small_config();
  cfg.K = 1;
  cfg.n = 200;
  cfg.estimators = {Estimator::pooled, Estimator::oneround, Estimator::frdpca_shifted};
  const ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.rows.size() == 6);
  for (std::size_t i = 0; i < rep.rows.size(); i += 3) {
    CHECK(std::abs(rep.rows[i + 1].sq_error - rep.rows[i].sq_error) <= 1e-10);
    CHECK(std::abs(rep.rows[i + 2].sq_error - rep.rows[i].sq_error) <= 1e-10);
  }
}

TEST_CASE("row count is estimators x sweep points x reps") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {Estimator::pooled, Estimator::oneround, Estimator::frdpca_unshifted};
  cfg.sweep = SweepAxis::n;
  cfg.sweep_values = {30.0, 50.0, 80.0};
  const ExperimentReport rep = run_experiment(cfg);
  CHECK(rep.rows.size() == 3 * 3 * 2);
  CHECK(rep.rows.back().n == 80);
  std::ostringstream out;
  write_report_csv(rep, out);
  std::istringstream in(out.str());
  const CsvTable t = read_csv(in);
  CHECK(t.header == report_columns(false));
  CHECK(t.rows.size() == 18);
}

TEST_CASE("undefined theory lands in a labelled column") {
  ExperimentConfig cfg = small_config();
  cfg.p = 100;
  cfg.n = 20;
  cfg.K = 5;
  cfg.reps = 1;
  cfg.spikes = {1.5};  // below sqrt(p / n)
  cfg.estimators = {Estimator::oneround};
  const ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.rows.size() == 1);
  CHECK_FALSE(rep.rows[0].theory_note.empty());
  CHECK_FALSE(rep.rows[0].oneround_mse_limit.has_value());
  CHECK(rep.rows[0].pooled_mse_limit.has_value());
  CHECK(rep.rows[0].regime == "phase_gap");
}

TEST_CASE("summary JSON carries groups") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {Estimator::pooled};
  const std::string j = report_summary_json(run_experiment(cfg));
  CHECK(j.find("\"groups\"") != std::string::npos);
  CHECK(j.find("\"mean_sq_error\"") != std::string::npos);
}

TEST_CASE("numeric CSV reader keeps numeric columns and drops incomplete rows") {
  std::istringstream in(toy_csv(10, 1));
  const NumericTable t = read_numeric_csv(in);
  CHECK(t.columns == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(t.rows.rows() == 10);
  CHECK(t.dropped_rows == 1);
}

TEST_CASE("benchmark split is a reproducible partition") {
  std::istringstream in(toy_csv(200, 2));
  const NumericTable t = read_numeric_csv(in);
  BenchmarkSplitSpec spec;
  spec.kappa = 5.0;
  spec.rho = 0.5;
  const BenchmarkSplit a = make_benchmark_split(t.rows, spec, 9);
  const BenchmarkSplit b = make_benchmark_split(t.rows, spec, 9);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.n == 20);
  CHECK(a.r == 2);
  CHECK(a.K == 8);
  std::vector<Index> all = a.train_rows;
  all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < 200; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  CHECK(a.train_rows.size() == 160);
  CHECK(make_benchmark_split(t.rows, spec, 10).train_rows != a.train_rows);

  CHECK_THROWS_AS(make_benchmark_split(t.rows.leftCols(1), spec, 9), InputError);
  spec.kappa = 50.0;
  CHECK_THROWS_AS(make_benchmark_split(t.rows, spec, 9), InputError);
}

TEST_CASE("benchmark on exactly rank-two data retains everything") {
  std::istringstream in(toy_csv(200, 3));
  const NumericTable t = read_numeric_csv(in);
  BenchmarkConfig cfg;
  cfg.split.kappa = 5.0;
  cfg.split.rho = 0.5;
  cfg.reps = 2;
  cfg.estimators = {Estimator::pooled, Estimator::oneround, Estimator::frdpca_shifted};
  const ExperimentReport rep = run_benchmark(t, cfg);
  REQUIRE(rep.rows.size() == 6);
  for (const ReportRow& row : rep.rows) {
    REQUIRE(row.ar.has_value());
    CHECK(*row.ar == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(*row.ar_relative == doctest::Approx(1.0).epsilon(1e-9));
  }
  cfg.reps = 0;
  CHECK_THROWS_AS(run_benchmark(t, cfg), InputError);
}

TEST_CASE("gen writes K shards and a manifest that reads back") {
  const fs::path dir = scratch("gen");
  const ExperimentConfig cfg = small_config();
  const Manifest m = generate_shards(cfg, dir, true);
  CHECK(m.shard_files.size() == 4);
  CHECK(read_manifest(dir / "manifest.json") == m);
  CHECK(manifest_from_json(manifest_to_json(m)) == m);
  CHECK(m.truth.rows() == 20);
  CHECK(m.truth.cols() == 2);
  for (std::size_t k = 0; k < m.shard_files.size(); ++k) {
    const models::DatasetShard s = io::read_shard(dir / m.shard_files[k]);
    CHECK(s.machine_index == k);
    CHECK(s.data.rows() == 40);
    CHECK(s.data.cols() == 20);
    CHECK(fs::exists(dir / ("shard_" + std::to_string(k) + ".csv")));
  }
  const std::string first = slurp(dir / "shard_2.fpca");
  const fs::path again = scratch("gen2");
  generate_shards(cfg, again);
  CHECK(slurp(again / "shard_2.fpca") == first);
  CHECK(slurp(again / "manifest.json") == slurp(dir / "manifest.json"));
}

TEST_CASE("binary: run is reproducible and honours the JSON config") {
  const fs::path dir = scratch("bin_run");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"p": 12, "n": 30, "K": 3, "reps": 2, "spikes": [4.0], "estimators": ["pooled", "oneround"]})";
  }
  const std::string base = "run --config " + (dir / "cfg.json").string() + " --seed 5 2>/dev/null";
  REQUIRE(run_binary(base + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run_binary(base + " --out " + (dir / "b").string()) == 0);
  const std::string a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(fs::exists(dir / "a.json"));
  std::istringstream in(a);
  const CsvTable t = read_csv(in);
  CHECK(t.rows.size() == 4);
  CHECK(t.rows[0][static_cast<std::size_t>(t.column("p"))] == "12");

  CHECK(run_binary("report " + (dir / "a.csv").string() + " --out-dir " + dir.string() + " 2>/dev/null") == 0);
  CHECK(fs::exists(dir / "a_summary.csv"));
  CHECK(run_binary("run --p 12 --spikes 4 --r 2 --out - >/dev/null 2>&1") == 2);
}

TEST_CASE("binary: bench reads a CSV") {
  const fs::path dir = scratch("bin_bench");
  {
    std::ofstream csv(dir / "toy.csv");
    csv << toy_csv(200, 4);
  }
  REQUIRE(run_binary("bench --csv " + (dir / "toy.csv").string() + " --kappa 5 --rho 0.5 --out " +
              (dir / "out").string() + " 2>/dev/null") == 0);
  std::ifstream in(dir / "out.csv");
  const CsvTable t = read_csv(in);
  CHECK(t.rows.size() == 3);
}

TEST_CASE("binary: remote run against serve-worker processes") {
  const fs::path dir = scratch("bin_remote");
  ExperimentConfig cfg = small_config();
  cfg.K = 2;
  cfg.spikes = {6.0};
  const Manifest m = generate_shards(cfg, dir);
  for (int k = 0; k < 2; ++k) {
    const std::string port = (dir / ("port" + std::to_string(k))).string();
    REQUIRE(run_binary("serve-worker --listen 127.0.0.1:0 --once --shard " + (dir / m.shard_files[k]).string() +
                " > " + port + " 2>/dev/null &") == 0);
  }
  std::vector<std::string> endpoints;
  for (int k = 0; k < 2; ++k) {
    const fs::path port = dir / ("port" + std::to_string(k));
    std::string line;
    for (int tries = 0; tries < 200 && line.find('\n') == std::string::npos; ++tries) {
      std::this_thread::sleep_for(std::chrono::milliseconds(25));
      line = slurp(port);
    }
    const auto at = line.find("port ");
    REQUIRE(at != std::string::npos);
    endpoints.push_back("127.0.0.1:" + std::to_string(std::stoi(line.substr(at + 5))));
  }
  REQUIRE(run_binary("run --connect " + endpoints[0] + "," + endpoints[1] + " --T 3 --manifest " +
              (dir / "manifest.json").string() + " --out " + (dir / "remote").string() + " 2>/dev/null") == 0);
  const std::string j = slurp(dir / "remote.json");
  CHECK(j.find("\"rounds_run\": 3") != std::string::npos);
  CHECK(j.find("\"sq_error\"") != std::string::npos);
  CHECK(j.find("\"comm_floats_up\": 120") != std::string::npos);  // 3 rounds x 2 machines x 20 floats
}

}  // TEST_SUITE
