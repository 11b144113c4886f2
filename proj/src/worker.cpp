#include "frdpca/worker.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "frdpca/errors.hpp"
#include "frdpca/rng.hpp"

namespace frdpca::worker {

namespace {

constexpr double kTiedPair = 1e-12;
constexpr Index kChunkRows = 2048;

// Accumulates normalised difference rows into a lower-triangular Gram matrix.
class KendallAccumulator {
 public:
  explicit KendallAccumulator(Index p)
      : gram_(Eigen::MatrixXd::Zero(p, p)), chunk_(kChunkRows, p) {}

  void add(const Eigen::Ref<const Eigen::MatrixXd>& rows, Index i, Index j) {
    chunk_.row(fill_) = rows.row(i) - rows.row(j);
    const double nrm = chunk_.row(fill_).norm();
    if (!(nrm >= kTiedPair)) return;
    chunk_.row(fill_) /= nrm;
    ++used_;
    if (++fill_ == kChunkRows) flush();
  }

  std::uint64_t used() const noexcept { return used_; }

  Eigen::MatrixXd finish() {
    flush();
    Eigen::MatrixXd full = gram_.selfadjointView<Eigen::Lower>();
    return full / static_cast<double>(used_);
  }

 private:
  void flush() {
    if (fill_ == 0) return;
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(chunk_.topRows(fill_).transpose());
    fill_ = 0;
  }

  Eigen::MatrixXd gram_;
  Eigen::MatrixXd chunk_;
  Index fill_ = 0;
  std::uint64_t used_ = 0;
};

// Sorted distinct indices in [0, total), Floyd's sampling without replacement.
std::vector<std::uint64_t> sample_pair_indices(std::uint64_t total, std::uint64_t count,
                                               std::uint64_t seed) {
  Engine engine(mix_seed(seed, 0x7061697273ull));
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(count) * 2);
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(engine);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

void check_basis(const LocalSummary& summary, const Basisd& u) {
  if (u.rows() != summary.matrix.dim()) {
    throw DimensionError("step: basis has " + std::to_string(u.rows()) + " rows, summary is " +
                         std::to_string(summary.matrix.dim()) + "-dimensional");
  }
}

}  // namespace

const char* to_string(SummaryKind kind) {
  return kind == SummaryKind::covariance ? "covariance" : "kendall_tau";
}

PairPolicy default_pair_policy(Index n, std::uint64_t seed) {
  if (n <= kExactKendallMaxN) return ExactPairs{};
  return SubsampledPairs{50 * static_cast<std::uint64_t>(n), seed};
}

LocalSummary compute_local_covariance(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() < 1) throw InputError("compute_local_covariance: empty shard");
  const Index p = rows.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  Eigen::MatrixXd full = gram.selfadjointView<Eigen::Lower>();
  LocalSummary s;
  s.kind = SummaryKind::covariance;
  s.matrix = SymMatrixd(full / static_cast<double>(rows.rows()));
  s.n_used = rows.rows();
  return s;
}

LocalSummary compute_local_covariance(const models::DatasetShard& shard) {
  return compute_local_covariance(shard.data);
}

LocalSummary compute_local_kendall_tau(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                       const PairPolicy& policy) {
  const Index n = rows.rows();
  if (n < 2) throw InputError("compute_local_kendall_tau: need at least 2 observations");
  const auto total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;

  KendallAccumulator acc(rows.cols());
  const auto* sub = std::get_if<SubsampledPairs>(&policy);
  if (sub == nullptr || sub->count >= total) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) acc.add(rows, i, j);
    }
  } else {
    if (sub->count == 0) throw InputError("compute_local_kendall_tau: zero pairs requested");
    const auto picks = sample_pair_indices(total, sub->count, sub->seed);
    // Walk pair indices in row-major (i < j) enumeration order.
    Index i = 0;
    std::uint64_t row_start = 0;
    for (const std::uint64_t idx : picks) {
      while (idx >= row_start + static_cast<std::uint64_t>(n - 1 - i)) {
        row_start += static_cast<std::uint64_t>(n - 1 - i);
        ++i;
      }
      const Index j = i + 1 + static_cast<Index>(idx - row_start);
      acc.add(rows, i, j);
    }
  }
  if (acc.used() == 0) throw DegenerateError("compute_local_kendall_tau: every pair is tied");

  LocalSummary s;
  s.kind = SummaryKind::kendall_tau;
  s.pairs_used = acc.used();
  s.matrix = SymMatrixd(acc.finish());
  s.n_used = n;
  return s;
}

LocalSummary compute_local_kendall_tau(const models::DatasetShard& shard,
                                       const PairPolicy& policy) {
  return compute_local_kendall_tau(shard.data, policy);
}

Basisd local_top_r(const LocalSummary& summary, Index r) {
  return sym_top_r_eig(summary.matrix, r).basis;
}

StepResult shifted_step(const LocalSummary& summary, const Basisd& u) {
  check_basis(summary, u);
  const Index p = u.rows();
  const Index r = u.cols();
  if (r >= p) {
    throw DimensionError("shifted_step: shift undefined for r=" + std::to_string(r) +
                         " >= p=" + std::to_string(p));
  }
  StepResult out;
  out.g = summary.matrix.matrix() * u.matrix();
  const double captured = (u.matrix().transpose() * out.g).trace();
  out.sigma2_local = (summary.matrix.trace() - captured) / static_cast<double>(p - r);
  out.g -= out.sigma2_local * u.matrix();
  return out;
}

Eigen::MatrixXd unshifted_step(const LocalSummary& summary, const Basisd& u) {
  check_basis(summary, u);
  return summary.matrix.matrix() * u.matrix();
}

Worker::Worker(std::uint32_t machine_index, LocalSummary summary)
    : machine_index_(machine_index), summary_(std::move(summary)) {}

const Basisd& Worker::local_basis(Index r) {
  auto it = local_bases_.find(r);
  if (it == local_bases_.end()) it = local_bases_.emplace(r, local_top_r(summary_, r)).first;
  return it->second;
}

}  // namespace frdpca::worker
