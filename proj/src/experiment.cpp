#include "frdpca/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "frdpca/errors.hpp"
#include "frdpca/netsim/inprocess.hpp"
#include "frdpca/oracle.hpp"
#include "frdpca/rng.hpp"
#include "frdpca/theory.hpp"
#include "frdpca/worker.hpp"
#include "json.hpp"

namespace frdpca::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kPopulationStream = 0x706f70ull;
constexpr std::uint64_t kPairStream = 0x7061697273ull;
constexpr std::uint64_t kInitStream = 0x696e6974ull;

struct NameTable {
  Estimator e;
  const char* name;
};
constexpr NameTable kEstimatorNames[] = {
    {Estimator::oneround, "oneround"},
    {Estimator::frdpca_shifted, "frdpca_shifted"},
    {Estimator::frdpca_unshifted, "frdpca_unshifted"},
    {Estimator::pooled, "pooled"},
    {Estimator::pooled_kendall, "pooled_kendall"},
    {Estimator::frdpca_kendall, "frdpca_kendall"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Workers reachable through either transport for the lifetime of this object.
class Cluster {
 public:
  Cluster(std::vector<worker::Worker>& workers, TransportKind kind) {
    if (kind == TransportKind::inprocess) {
      session_ = std::make_unique<netsim::Session>(netsim::make_inprocess_transport(workers));
      return;
    }
    std::vector<netsim::Endpoint> endpoints;
    for (auto& w : workers) {
      servers_.push_back(std::make_unique<netsim::TcpWorkerServer>(netsim::Endpoint{"127.0.0.1", 0}));
      endpoints.push_back({"127.0.0.1", servers_.back()->port()});
      threads_.emplace_back([server = servers_.back().get(), &w] {
        try {
          server->serve_one(w);
        } catch (const std::exception&) {
          // The coordinator sees the closed connection.
        }
      });
    }
    try {
      session_ = std::make_unique<netsim::Session>(std::make_unique<netsim::TcpTransport>(endpoints));
    } catch (...) {
      shutdown();
      throw;
    }
  }

  ~Cluster() { shutdown(); }

  netsim::Session& session() { return *session_; }

 private:
  void shutdown() {
    session_.reset();
    for (auto& s : servers_) s->close();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  std::unique_ptr<netsim::Session> session_;
  std::vector<std::unique_ptr<netsim::TcpWorkerServer>> servers_;
  std::vector<std::thread> threads_;
};

struct Point {
  double value = 0.0;
  Index n = 0;
  std::vector<double> spikes;
};

std::vector<Point> sweep_points(const ExperimentConfig& cfg) {
  if (cfg.sweep == SweepAxis::none) return {Point{0.0, cfg.n, cfg.spikes}};
  std::vector<Point> out;
  for (const double v : cfg.sweep_values) {
    Point pt{v, cfg.n, cfg.spikes};
    switch (cfg.sweep) {
      case SweepAxis::n: pt.n = static_cast<Index>(v); break;
      case SweepAxis::l: pt.spikes = {v}; break;
      case SweepAxis::kappa:
        pt.n = static_cast<Index>(std::floor(v * static_cast<double>(cfg.p)));
        break;
      case SweepAxis::none: break;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<models::DatasetShard> draw(const ExperimentConfig& cfg, const models::Population& pop,
                                       Index n, std::uint64_t seed) {
  switch (cfg.scenario) {
    case Scenario::gaussian_spiked:
      return models::sample_gaussian_spiked(pop, n, cfg.K, seed);
    case Scenario::general:
      return models::sample_general(pop, models::SkewGaussian{cfg.alpha_signal, cfg.alpha_noise},
                                    n, cfg.K, seed);
    case Scenario::elliptical:
      return models::sample_elliptical(pop, cfg.nu, cfg.alpha_signal, cfg.alpha_noise, n, cfg.K,
                                       seed);
  }
  throw InputError("unknown scenario");
}

void fill_errors(ReportRow& row, const Basisd& est, const Basisd& truth) {
  row.frob_error = projector_distance(truth, est);
  row.sq_error = row.frob_error * row.frob_error;
  row.alignment = (truth.matrix().transpose() * est.matrix()).squaredNorm() /
                  static_cast<double>(truth.cols());
}

json noise_to_json(const models::NoiseProfile& noise) {
  if (const auto* u = std::get_if<models::UniformNoise>(&noise)) {
    return {{"type", "uniform"}, {"level", u->level}};
  }
  const auto& d = std::get<models::LinearDecayNoise>(noise);
  return {{"type", "linear_decay"}, {"hi", d.hi}, {"lo", d.lo}};
}

models::NoiseProfile noise_from_json(const json& j) {
  const std::string type = j.value("type", "uniform");
  if (type == "uniform") return models::UniformNoise{j.value("level", 1.0)};
  if (type == "linear_decay") return models::LinearDecayNoise{j.value("hi", 1.2), j.value("lo", 0.8)};
  throw InputError("config: unknown noise type '" + type + "'");
}

}  // namespace

const char* to_string(Estimator e) {
  for (const auto& t : kEstimatorNames) {
    if (t.e == e) return t.name;
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& name) {
  for (const auto& t : kEstimatorNames) {
    if (name == t.name) return t.e;
  }
  throw InputError("unknown estimator '" + name + "'");
}

std::vector<Estimator> parse_estimators(const std::string& list) {
  std::vector<Estimator> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item == "all") {
      for (const auto& t : kEstimatorNames) out.push_back(t.e);
      continue;
    }
    out.push_back(parse_estimator(item));
  }
  if (out.empty()) throw InputError("no estimators selected");
  return out;
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::gaussian_spiked: return "gaussian_spiked";
    case Scenario::general: return "general";
    case Scenario::elliptical: return "elliptical";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "gaussian_spiked" || name == "gaussian") return Scenario::gaussian_spiked;
  if (name == "general" || name == "skew_gaussian") return Scenario::general;
  if (name == "elliptical" || name == "t") return Scenario::elliptical;
  throw InputError("unknown scenario '" + name + "'");
}

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::n: return "n";
    case SweepAxis::l: return "l";
    case SweepAxis::kappa: return "kappa";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "none" || name.empty()) return SweepAxis::none;
  if (name == "n") return SweepAxis::n;
  if (name == "l") return SweepAxis::l;
  if (name == "kappa") return SweepAxis::kappa;
  throw InputError("unknown sweep axis '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (p < 2 || n < 1 || K < 1) throw InputError("config: need p >= 2, n >= 1, K >= 1");
  if (T < 1) throw InputError("config: T must be at least 1");
  if (reps < 1) throw InputError("config: reps must be at least 1");
  if (estimators.empty()) throw InputError("config: no estimators");
  models::SpikedModelSpec{p, spikes, noise, models::CanonicalBasis{}}.validate();
  if (r() >= p) throw InputError("config: r must be below p");
  if (scenario == Scenario::elliptical && !(nu > 0.0)) throw InputError("config: nu must be positive");
  if (sweep != SweepAxis::none) {
    if (sweep_values.empty()) throw InputError("config: sweep axis given without values");
    for (std::size_t i = 1; i < sweep_values.size(); ++i) {
      if (!(sweep_values[i] > sweep_values[i - 1])) {
        throw InputError("config: sweep values must be strictly increasing");
      }
    }
    if (sweep == SweepAxis::l && r() != 1) throw InputError("config: an l sweep needs r = 1");
    for (const Point& pt : sweep_points(*this)) {
      if (pt.n < 2) throw InputError("config: sweep point gives n < 2");
      if (!(pt.spikes[0] > 0.0)) throw InputError("config: sweep point gives a non-positive spike");
    }
  }
}

ExperimentConfig experiment_config_from_json(const std::string& text, ExperimentConfig cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  try {
    if (j.contains("scenario")) cfg.scenario = parse_scenario(j["scenario"].get<std::string>());
    if (j.contains("p")) cfg.p = j["p"].get<Index>();
    if (j.contains("n")) cfg.n = j["n"].get<Index>();
    if (j.contains("K")) cfg.K = j["K"].get<Index>();
    if (j.contains("T")) cfg.T = j["T"].get<std::uint32_t>();
    if (j.contains("reps")) cfg.reps = j["reps"].get<Index>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("spikes")) cfg.spikes = j["spikes"].get<std::vector<double>>();
    if (j.contains("noise")) cfg.noise = noise_from_json(j["noise"]);
    if (j.contains("canonical_basis")) cfg.canonical_basis = j["canonical_basis"].get<bool>();
    if (j.contains("alpha_signal")) cfg.alpha_signal = j["alpha_signal"].get<double>();
    if (j.contains("alpha_noise")) cfg.alpha_noise = j["alpha_noise"].get<double>();
    if (j.contains("nu")) cfg.nu = j["nu"].get<double>();
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& e : j["estimators"]) cfg.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      cfg.sweep = parse_sweep_axis(s.value("axis", "none"));
      cfg.sweep_values = s.value("values", std::vector<double>{});
    }
    if (j.contains("inference_mode")) cfg.inference_mode = j["inference_mode"].get<bool>();
    if (j.contains("init")) {
      const std::string init = j["init"].get<std::string>();
      if (init == "oneround") cfg.init = coordinator::InitMode::one_round;
      else if (init == "random") cfg.init = coordinator::InitMode::random;
      else throw InputError("config: init must be oneround or random");
    }
    if (j.contains("transport")) {
      const std::string t = j["transport"].get<std::string>();
      if (t == "inprocess") cfg.transport = TransportKind::inprocess;
      else if (t == "tcp") cfg.transport = TransportKind::tcp;
      else throw InputError("config: transport must be inprocess or tcp");
    }
    if (j.contains("timings")) cfg.timings = j["timings"].get<bool>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["p"] = cfg.p;
  j["n"] = cfg.n;
  j["K"] = cfg.K;
  j["r"] = cfg.r();
  j["T"] = cfg.T;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["spikes"] = cfg.spikes;
  j["noise"] = noise_to_json(cfg.noise);
  j["canonical_basis"] = cfg.canonical_basis;
  j["alpha_signal"] = cfg.alpha_signal;
  j["alpha_noise"] = cfg.alpha_noise;
  j["nu"] = cfg.nu;
  std::vector<std::string> est;
  for (const Estimator e : cfg.estimators) est.emplace_back(to_string(e));
  j["estimators"] = est;
  j["sweep"] = {{"axis", to_string(cfg.sweep)}, {"values", cfg.sweep_values}};
  j["inference_mode"] = cfg.inference_mode;
  j["init"] = coordinator::to_string(cfg.init);
  j["transport"] = cfg.transport == TransportKind::inprocess ? "inprocess" : "tcp";
  j["timings"] = cfg.timings;
  return j.dump(2);
}

const std::vector<std::string>& report_columns(bool timings) {
  static const std::vector<std::string> base{
      "estimator",  "sweep_axis",      "sweep_value",        "rep",
      "p",          "n",               "K",                  "r",
      "T",          "sq_error",        "half_sq_error",      "frob_error",
      "alignment",  "ar",              "ar_relative",        "l_hat",
      "sigma2_hat", "comm_floats",     "regime",             "pooled_mse_limit",
      "oneround_mse_limit", "variance_ratio_limit", "theory_note"};
  static const std::vector<std::string> with_time = [] {
    auto v = base;
    v.push_back("wall_ms");
    return v;
  }();
  return timings ? with_time : base;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config_json = experiment_config_to_json(cfg);
  report.timings = cfg.timings;
  const Index r = cfg.r();

  bool need_cov = false;
  bool need_tau = false;
  for (const Estimator e : cfg.estimators) {
    if (e == Estimator::oneround || e == Estimator::frdpca_shifted ||
        e == Estimator::frdpca_unshifted) {
      need_cov = true;
    }
    if (e == Estimator::frdpca_kendall) need_tau = true;
  }

  const std::vector<Point> points = sweep_points(cfg);
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const Point& pt = points[pi];
    models::SpikedModelSpec spec;
    spec.p = cfg.p;
    spec.spikes = pt.spikes;
    spec.noise = cfg.noise;
    if (cfg.canonical_basis) {
      spec.basis_mode = models::CanonicalBasis{};
    } else {
      spec.basis_mode = models::RandomOrthonormalBasis{mix_seed(cfg.seed, kPopulationStream)};
    }
    const models::Population pop = models::make_population(spec);

    // Theory columns shared by every row of this point.
    ReportRow proto;
    proto.sweep_axis = to_string(cfg.sweep);
    proto.sweep_value = pt.value;
    proto.p = cfg.p;
    proto.n = pt.n;
    proto.K = cfg.K;
    proto.r = r;
    const double c = static_cast<double>(cfg.p) / static_cast<double>(pt.n);
    proto.regime = theory::to_string(theory::classify_regime(pt.spikes.back(), c, cfg.K));
    proto.pooled_mse_limit = theory::pooled_mse_limit(cfg.p, pt.n, cfg.K, pt.spikes);
    try {
      proto.oneround_mse_limit = theory::oneround_mse_limit(cfg.p, pt.n, cfg.K, pt.spikes);
      proto.variance_ratio_limit = theory::variance_ratio_limit(cfg.p, pt.n, pt.spikes);
    } catch (const RegimeError&) {
      proto.theory_note = "one-round limit undefined at or below the local threshold";
    }

    for (Index rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t data_seed =
          mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(pi) + 1), static_cast<std::uint64_t>(rep));
      const std::vector<models::DatasetShard> shards = draw(cfg, pop, pt.n, data_seed);

      std::vector<worker::Worker> cov_workers;
      std::vector<worker::Worker> tau_workers;
      if (need_cov) {
        for (const auto& s : shards) {
          cov_workers.emplace_back(s.machine_index, worker::compute_local_covariance(s));
        }
      }
      if (need_tau) {
        for (const auto& s : shards) {
          const auto policy = worker::default_pair_policy(s.n(), mix_seed(data_seed, kPairStream + s.machine_index));
          tau_workers.emplace_back(s.machine_index, worker::compute_local_kendall_tau(s, policy));
        }
      }

      auto distributed = [&](std::vector<worker::Worker>& workers, coordinator::ShiftMode shift,
                             std::uint32_t T, worker::SummaryKind kind, ReportRow& row) {
        coordinator::IterationConfig it;
        it.r = r;
        it.policy = coordinator::FixedRounds{T};
        it.shift = shift;
        it.estimator = kind;
        it.inference_mode = cfg.inference_mode;
        it.init = T == 1 ? coordinator::InitMode::one_round : cfg.init;
        it.init_seed = mix_seed(data_seed, kInitStream);
        it.p = cfg.p;
        it.local_n = pt.n;
        const coordinator::DistributedEstimate est = run_distributed(workers, cfg.transport, it);
        fill_errors(row, est.basis, pop.u);
        row.T = est.rounds_run;
        row.comm_floats = est.comm_log.data_floats();
        if (est.spiked_eigenvalue_estimates) {
          const auto& l = *est.spiked_eigenvalue_estimates;
          row.l_hat.assign(l.data(), l.data() + l.size());
        }
        if (!est.sigma2_global_per_round.empty() &&
            std::isfinite(est.sigma2_global_per_round.back())) {
          row.sigma2_hat = est.sigma2_global_per_round.back();
        }
      };

      for (const Estimator e : cfg.estimators) {
        ReportRow row = proto;
        row.estimator = to_string(e);
        row.rep = rep;
        row.T = 1;
        const auto t0 = std::chrono::steady_clock::now();
        switch (e) {
          case Estimator::oneround:
            distributed(cov_workers, coordinator::ShiftMode::shifted, 1,
                        worker::SummaryKind::covariance, row);
            break;
          case Estimator::frdpca_shifted:
            distributed(cov_workers, coordinator::ShiftMode::shifted, cfg.T,
                        worker::SummaryKind::covariance, row);
            break;
          case Estimator::frdpca_unshifted:
            distributed(cov_workers, coordinator::ShiftMode::unshifted, cfg.T,
                        worker::SummaryKind::covariance, row);
            break;
          case Estimator::frdpca_kendall:
            distributed(tau_workers, coordinator::ShiftMode::shifted, cfg.T,
                        worker::SummaryKind::kendall_tau, row);
            break;
          case Estimator::pooled: {
            const auto est = oracle::pooled_covariance_pca(shards, r);
            fill_errors(row, est.basis, pop.u);
            break;
          }
          case Estimator::pooled_kendall: {
            const Index N = cfg.K * pt.n;
            const auto est = oracle::pooled_kendall_pca(
                shards, r, oracle::default_pooled_pair_policy(N, mix_seed(data_seed, kPairStream)));
            fill_errors(row, est.basis, pop.u);
            break;
          }
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  const auto& cols = report_columns(report.timings);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const ReportRow& row : report.rows) {
    std::vector<std::string> cells{row.estimator,
                                   row.sweep_axis,
                                   fmt(row.sweep_value),
                                   std::to_string(row.rep),
                                   std::to_string(row.p),
                                   std::to_string(row.n),
                                   std::to_string(row.K),
                                   std::to_string(row.r),
                                   std::to_string(row.T),
                                   fmt(row.sq_error),
                                   fmt(row.sq_error / 2.0),
                                   fmt(row.frob_error),
                                   fmt(row.alignment),
                                   fmt(row.ar),
                                   fmt(row.ar_relative),
                                   join(row.l_hat),
                                   fmt(row.sigma2_hat),
                                   std::to_string(row.comm_floats),
                                   row.regime,
                                   fmt(row.pooled_mse_limit),
                                   fmt(row.oneround_mse_limit),
                                   fmt(row.variance_ratio_limit),
                                   row.theory_note};
    if (report.timings) cells.push_back(fmt(row.wall_ms));
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_cell(cells[i]);
    out << "\n";
  }
}

std::string report_summary_json(const ExperimentReport& report) {
  struct Acc {
    Index reps = 0;
    double sq = 0.0, sq2 = 0.0, frob = 0.0, align = 0.0, ar = 0.0, ar_rel = 0.0, wall = 0.0;
    double floats = 0.0;
    Index ar_count = 0;
    const ReportRow* first = nullptr;
  };
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, Acc> groups;
  for (const ReportRow& row : report.rows) {
    const auto key = std::make_pair(row.estimator, row.sweep_value);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    Acc& a = it->second;
    if (!a.first) a.first = &row;
    ++a.reps;
    a.sq += row.sq_error;
    a.sq2 += row.sq_error * row.sq_error;
    a.frob += row.frob_error;
    a.align += row.alignment;
    a.floats += static_cast<double>(row.comm_floats);
    a.wall += row.wall_ms;
    if (row.ar) {
      a.ar += *row.ar;
      a.ar_rel += row.ar_relative.value_or(0.0);
      ++a.ar_count;
    }
  }
  json j;
  j["kind"] = report.kind;
  j["config"] = json::parse(report.config_json.empty() ? "{}" : report.config_json);
  j["rows"] = report.rows.size();
  json arr = json::array();
  for (const auto& key : order) {
    const Acc& a = groups.at(key);
    const double m = static_cast<double>(a.reps);
    json g;
    g["estimator"] = key.first;
    g["sweep_axis"] = a.first->sweep_axis;
    g["sweep_value"] = key.second;
    g["n"] = a.first->n;
    g["reps"] = a.reps;
    g["mean_sq_error"] = a.sq / m;
    g["sd_sq_error"] =
        a.reps > 1 ? std::sqrt(std::max(0.0, (a.sq2 - a.sq * a.sq / m) / (m - 1.0))) : 0.0;
    g["mean_half_sq_error"] = a.sq / m / 2.0;
    g["mean_frob_error"] = a.frob / m;
    g["mean_alignment"] = a.align / m;
    g["mean_comm_floats"] = a.floats / m;
    g["mean_wall_ms"] = a.wall / m;
    if (a.ar_count > 0) {
      g["mean_ar"] = a.ar / static_cast<double>(a.ar_count);
      g["mean_ar_relative"] = a.ar_rel / static_cast<double>(a.ar_count);
    }
    g["regime"] = a.first->regime;
    if (a.first->pooled_mse_limit) g["pooled_mse_limit"] = *a.first->pooled_mse_limit;
    if (a.first->oneround_mse_limit) g["oneround_mse_limit"] = *a.first->oneround_mse_limit;
    if (a.first->variance_ratio_limit) g["variance_ratio_limit"] = *a.first->variance_ratio_limit;
    if (!a.first->theory_note.empty()) g["theory_note"] = a.first->theory_note;
    arr.push_back(std::move(g));
  }
  j["groups"] = std::move(arr);
  return j.dump(2);
}

coordinator::DistributedEstimate run_distributed(std::vector<worker::Worker>& workers,
                                                 TransportKind transport,
                                                 const coordinator::IterationConfig& cfg) {
  Cluster cluster(workers, transport);
  return coordinator::run_distributed_pca(cluster.session(), cfg);
}

coordinator::DistributedEstimate run_remote(const RemoteRunConfig& cfg) {
  if (cfg.workers.empty()) throw InputError("run_remote: no worker endpoints");
  netsim::Session session(std::make_unique<netsim::TcpTransport>(cfg.workers));
  coordinator::IterationConfig it;
  it.r = cfg.r;
  it.policy = coordinator::FixedRounds{cfg.T};
  it.shift = cfg.shift;
  it.estimator = cfg.kind;
  it.inference_mode = cfg.inference_mode;
  it.init = cfg.init;
  it.init_seed = mix_seed(cfg.seed, kInitStream);
  it.p = cfg.p;
  return coordinator::run_distributed_pca(session, it);
}

}  // namespace frdpca::cli
