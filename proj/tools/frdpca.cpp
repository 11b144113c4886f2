// Command-line front end: gen, run, bench, report, serve-worker.

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "frdpca/benchmark.hpp"
#include "frdpca/errors.hpp"
#include "frdpca/experiment.hpp"
#include "frdpca/manifest.hpp"
#include "frdpca/netsim/tcp.hpp"
#include "frdpca/report.hpp"
#include "frdpca/shard_io.hpp"
#include "frdpca/worker.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace frdpca;
using namespace frdpca::cli;

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw InputError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + path.string());
}

// Flags shared by gen and run. Values are applied on top of an optional JSON config only
// when given on the command line.
struct ConfigFlags {
  std::string config_path;
  Index p = 0, n = 0, K = 0, r = 0, reps = 0;
  std::uint32_t T = 0;
  std::uint64_t seed = 0;
  std::string scenario, estimators, spikes, noise, sweep, sweep_values, init, transport;
  double noise_hi = 1.2, noise_lo = 0.8, alpha_signal = 0.0, alpha_noise = 0.0, nu = 0.0;
  bool inference = false, canonical = false, timings = false;

  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app) {
    opts["config"] = app->add_option("--config", config_path, "JSON config file; flags override it");
    opts["p"] = app->add_option("--p", p, "Dimension");
    opts["n"] = app->add_option("--n", n, "Observations per machine");
    opts["K"] = app->add_option("--K", K, "Number of machines");
    opts["r"] = app->add_option("--r", r, "Rank (must match the number of spikes)");
    opts["T"] = app->add_option("--T", T, "Total rounds for the few-round estimators");
    opts["reps"] = app->add_option("--reps", reps, "Replications");
    opts["seed"] = app->add_option("--seed", seed, "Master seed");
    opts["scenario"] = app->add_option("--scenario", scenario, "gaussian_spiked | general | elliptical");
    opts["estimators"] = app->add_option(
        "--estimators", estimators,
        "Comma list of oneround, frdpca_shifted, frdpca_unshifted, pooled, pooled_kendall, "
        "frdpca_kendall, or all");
    opts["spikes"] = app->add_option("--spikes", spikes, "Comma list of spike strengths, decreasing");
    opts["noise"] = app->add_option("--noise", noise, "uniform | linear_decay");
    opts["noise_hi"] = app->add_option("--noise-hi", noise_hi, "Largest noise eigenvalue (linear_decay)");
    opts["noise_lo"] = app->add_option("--noise-lo", noise_lo, "Smallest noise eigenvalue (linear_decay)");
    opts["alpha_signal"] = app->add_option("--alpha-signal", alpha_signal, "Skewness shape, signal coordinates");
    opts["alpha_noise"] = app->add_option("--alpha-noise", alpha_noise, "Skewness shape, noise coordinates");
    opts["nu"] = app->add_option("--nu", nu, "Degrees of freedom (elliptical)");
    opts["sweep"] = app->add_option("--sweep", sweep, "Sweep axis: n | l | kappa");
    opts["sweep_values"] = app->add_option("--sweep-values", sweep_values, "Comma list, increasing");
    opts["init"] = app->add_option("--init", init, "oneround | random");
    opts["transport"] = app->add_option("--transport", transport, "inprocess | tcp");
    opts["inference"] = app->add_flag("--inference-mode", inference,
                                      "Ship S U and the local shift separately");
    opts["canonical"] = app->add_flag("--canonical-basis", canonical, "Use e_1..e_r as the spike basis");
    opts["timings"] = app->add_flag("--timings", timings, "Add wall_ms to the CSV");
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (given("config")) cfg = experiment_config_from_json(slurp(config_path), cfg);
    if (given("p")) cfg.p = p;
    if (given("n")) cfg.n = n;
    if (given("K")) cfg.K = K;
    if (given("T")) cfg.T = T;
    if (given("reps")) cfg.reps = reps;
    if (given("seed")) cfg.seed = seed;
    if (given("scenario")) cfg.scenario = parse_scenario(scenario);
    if (given("estimators")) cfg.estimators = parse_estimators(estimators);
    if (given("spikes")) cfg.spikes = parse_list(spikes);
    if (given("noise")) {
      if (noise == "uniform") {
        cfg.noise = models::UniformNoise{};
      } else if (noise == "linear_decay") {
        cfg.noise = models::LinearDecayNoise{noise_hi, noise_lo};
      } else {
        throw InputError("--noise must be uniform or linear_decay");
      }
    } else if (given("noise_hi") || given("noise_lo")) {
      cfg.noise = models::LinearDecayNoise{noise_hi, noise_lo};
    }
    if (given("alpha_signal")) cfg.alpha_signal = alpha_signal;
    if (given("alpha_noise")) cfg.alpha_noise = alpha_noise;
    if (given("nu")) cfg.nu = nu;
    if (given("sweep")) cfg.sweep = parse_sweep_axis(sweep);
    if (given("sweep_values")) cfg.sweep_values = parse_list(sweep_values);
    if (given("init")) {
      if (init == "oneround") cfg.init = coordinator::InitMode::one_round;
      else if (init == "random") cfg.init = coordinator::InitMode::random;
      else throw InputError("--init must be oneround or random");
    }
    if (given("transport")) {
      if (transport == "inprocess") cfg.transport = TransportKind::inprocess;
      else if (transport == "tcp") cfg.transport = TransportKind::tcp;
      else throw InputError("--transport must be inprocess or tcp");
    }
    if (given("inference")) cfg.inference_mode = inference;
    if (given("canonical")) cfg.canonical_basis = canonical;
    if (given("timings")) cfg.timings = timings;
    if (given("r") && r != cfg.r()) {
      throw InputError("--r " + std::to_string(r) + " does not match " +
                       std::to_string(cfg.r()) + " spikes; pass --spikes");
    }
    cfg.validate();
    return cfg;
  }
};

void write_report(const ExperimentReport& report, const std::string& out) {
  if (out == "-") {
    write_report_csv(report, std::cout);
    return;
  }
  std::ostringstream csv;
  write_report_csv(report, csv);
  write_text(out + ".csv", csv.str());
  write_text(out + ".json", report_summary_json(report) + "\n");
  std::cerr << "wrote " << out << ".csv (" << report.rows.size() << " rows) and " << out
            << ".json\n";
}

std::atomic<bool> g_stop{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-round distributed PCA: experiments, benchmarks and workers"};
  app.require_subcommand(1);

  // gen
  ConfigFlags gen_flags;
  std::string gen_out = "shards";
  bool gen_csv = false;
  CLI::App* gen = app.add_subcommand("gen", "Write K shard files and a manifest");
  gen_flags.add(gen);
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_flag("--csv", gen_csv, "Also write headerless CSV copies of the shards");

  // run
  ConfigFlags run_flags;
  std::string run_out = "report";
  std::vector<std::string> run_connect;
  std::string run_manifest, run_kind = "covariance", run_shift = "shifted";
  CLI::App* run = app.add_subcommand(
      "run",
      "Run estimators over replications.\n"
      "CSV columns: estimator, sweep_axis, sweep_value, rep, p, n, K, r, T, sq_error "
      "(||B B^T - U U^T||_F^2), half_sq_error, frob_error, alignment (||U^T B||_F^2 / r), ar, "
      "ar_relative, l_hat (';'-separated), sigma2_hat, comm_floats (up + down payload floats), "
      "regime, pooled_mse_limit, oneround_mse_limit, variance_ratio_limit, theory_note "
      "[, wall_ms with --timings].\n"
      "With --transport tcp --connect host:port,... the few-round estimator runs once against "
      "remote workers started with serve-worker.");
  run_flags.add(run);
  run->add_option("--out", run_out, "Output prefix (<out>.csv, <out>.json); '-' prints the CSV");
  run->add_option("--connect", run_connect, "Remote worker endpoints, machine order")->delimiter(',');
  run->add_option("--manifest", run_manifest, "Manifest with the true basis (remote runs)");
  run->add_option("--kind", run_kind, "Remote summary kind: covariance | kendall_tau");
  run->add_option("--shift", run_shift, "Remote iteration: shifted | unshifted");

  // bench
  std::string bench_csv, bench_out = "bench", bench_estimators, bench_sweep, bench_transport;
  BenchmarkConfig bench_cfg;
  CLI::App* bench = app.add_subcommand("bench", "Train/test benchmark on a numeric CSV file");
  bench->add_option("--csv", bench_csv, "Input CSV with a header row")->required();
  bench->add_option("--kappa", bench_cfg.split.kappa, "n = floor(kappa p)");
  bench->add_option("--rho", bench_cfg.split.rho, "r = min(floor(rho p), rmax)");
  bench->add_option("--rmax", bench_cfg.split.r_max, "Rank cap");
  bench->add_option("--max-K", bench_cfg.split.max_K, "Machine cap");
  bench->add_option("--seed", bench_cfg.split.seed, "Split seed");
  bench->add_option("--T", bench_cfg.T, "Rounds for the few-round estimators");
  bench->add_option("--reps", bench_cfg.reps, "Random splits");
  bench->add_option("--estimators", bench_estimators, "Comma list, as for run");
  bench->add_option("--kappa-sweep", bench_sweep, "Comma list of kappa values, increasing");
  bench->add_option("--transport", bench_transport, "inprocess | tcp");
  bench->add_flag("--timings", bench_cfg.timings, "Add wall_ms to the CSV");
  bench->add_option("--out", bench_out, "Output prefix");

  // report
  std::vector<std::string> report_inputs;
  std::string report_dir = ".", report_combine;
  CLI::App* rep = app.add_subcommand("report", "Aggregate report CSVs into mean \xC2\xB1 sd tables");
  rep->add_option("inputs", report_inputs, "Report CSV files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out-dir", report_dir, "Directory for <stem>_summary.csv files");
  rep->add_option("--combine", report_combine, "Write one summary of all inputs to this file instead");

  // serve-worker
  std::string listen = "127.0.0.1:0", shard_path, worker_kind = "covariance";
  bool once = false;
  CLI::App* serve = app.add_subcommand("serve-worker", "Serve one shard over TCP");
  serve->add_option("--listen", listen, "host:port (port 0 picks one and prints it)");
  serve->add_option("--shard", shard_path, "Shard file (.fpca)")->required()->check(CLI::ExistingFile);
  serve->add_option("--kind", worker_kind, "covariance | kendall_tau");
  serve->add_flag("--once", once, "Exit after one coordinator session");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = gen_flags.build();
      const Manifest m = generate_shards(cfg, gen_out, gen_csv);
      std::cerr << "wrote " << m.shard_files.size() << " shards and manifest.json to " << gen_out
                << "\n";
      return 0;
    }

    if (run->parsed()) {
      if (!run_connect.empty()) {
        RemoteRunConfig rc;
        for (const auto& e : run_connect) rc.workers.push_back(netsim::parse_endpoint(e));
        const ExperimentConfig cfg = run_flags.build();
        rc.r = cfg.r();
        if (run_flags.given("r")) rc.r = run_flags.r;
        rc.T = cfg.T;
        rc.inference_mode = cfg.inference_mode;
        rc.init = cfg.init;
        rc.p = cfg.p;
        rc.seed = cfg.seed;
        rc.shift = run_shift == "unshifted" ? coordinator::ShiftMode::unshifted
                                            : coordinator::ShiftMode::shifted;
        rc.kind = run_kind == "kendall_tau" ? worker::SummaryKind::kendall_tau
                                            : worker::SummaryKind::covariance;
        std::optional<Manifest> manifest;
        if (!run_manifest.empty()) {
          manifest = read_manifest(run_manifest);
          rc.r = manifest->r;
          rc.p = manifest->p;
        }
        const auto est = run_remote(rc);
        nlohmann::json j;
        j["rounds_run"] = est.rounds_run;
        j["comm_floats_up"] = est.comm_log.floats(netsim::Direction::up);
        j["comm_floats_down"] = est.comm_log.floats(netsim::Direction::down);
        j["frame_bytes"] = est.comm_log.frame_bytes();
        if (est.spiked_eigenvalue_estimates) {
          const auto& l = *est.spiked_eigenvalue_estimates;
          j["l_hat"] = std::vector<double>(l.data(), l.data() + l.size());
        }
        if (!est.sigma2_global_per_round.empty() &&
            std::isfinite(est.sigma2_global_per_round.back())) {
          j["sigma2_hat"] = est.sigma2_global_per_round.back();
        }
        if (manifest) {
          const Basisd truth = Basisd::from_orthonormal(manifest->truth, 1e-8);
          const double d = projector_distance(truth, est.basis);
          j["sq_error"] = d * d;
        }
        j["warnings"] = est.warnings;
        std::ostringstream basis;
        const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
        basis << est.basis.matrix().format(csv) << "\n";
        write_text(run_out + ".basis.csv", basis.str());
        write_text(run_out + ".json", j.dump(2) + "\n");
        std::cerr << "wrote " << run_out << ".basis.csv and " << run_out << ".json\n";
        return 0;
      }
      write_report(run_experiment(run_flags.build()), run_out);
      return 0;
    }

    if (bench->parsed()) {
      if (!bench_estimators.empty()) bench_cfg.estimators = parse_estimators(bench_estimators);
      if (!bench_sweep.empty()) bench_cfg.kappa_sweep = parse_list(bench_sweep);
      if (bench_transport == "tcp") bench_cfg.transport = TransportKind::tcp;
      else if (!bench_transport.empty() && bench_transport != "inprocess") {
        throw InputError("--transport must be inprocess or tcp");
      }
      const NumericTable table = read_numeric_csv(fs::path(bench_csv));
      std::cerr << "read " << table.rows.rows() << " rows x " << table.rows.cols()
                << " numeric columns (" << table.dropped_rows << " rows dropped)\n";
      write_report(run_benchmark(table, bench_cfg), bench_out);
      return 0;
    }

    if (rep->parsed()) {
      std::vector<CsvTable> tables;
      for (const auto& path : report_inputs) tables.push_back(read_csv(fs::path(path)));
      if (!report_combine.empty()) {
        std::ostringstream out;
        write_csv(summarize_reports(tables), out);
        write_text(report_combine, out.str());
        std::cerr << "wrote " << report_combine << "\n";
        return 0;
      }
      for (std::size_t i = 0; i < tables.size(); ++i) {
        std::ostringstream out;
        write_csv(summarize_reports(std::span<const CsvTable>(&tables[i], 1)), out);
        const fs::path dest =
            fs::path(report_dir) / (fs::path(report_inputs[i]).stem().string() + "_summary.csv");
        write_text(dest, out.str());
        std::cerr << "wrote " << dest.string() << "\n";
      }
      return 0;
    }

    if (serve->parsed()) {
      const models::DatasetShard shard = io::read_shard(shard_path);
      worker::LocalSummary summary;
      if (worker_kind == "covariance") {
        summary = worker::compute_local_covariance(shard);
      } else if (worker_kind == "kendall_tau") {
        summary = worker::compute_local_kendall_tau(
            shard, worker::default_pair_policy(shard.n(), shard.seed_used));
      } else {
        throw InputError("--kind must be covariance or kendall_tau");
      }
      worker::Worker w(shard.machine_index, std::move(summary));
      netsim::TcpWorkerServer server(netsim::parse_endpoint(listen));
      std::cout << "machine " << shard.machine_index << " listening on port " << server.port()
                << std::endl;
      std::signal(SIGINT, [](int) { g_stop = true; });
      do {
        server.serve_one(w);
      } while (!once && !g_stop);
      return 0;
    }
  } catch (const SessionError& e) {
    std::cerr << "session error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
