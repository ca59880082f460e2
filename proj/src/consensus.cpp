#include "pipadmm/consensus.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pipadmm/error.hpp"
#include "pipadmm/prox.hpp"

namespace pipadmm {

namespace {

double sum_sq(std::span<const double> v) {
  double acc = 0.0;
  for (double a : v) acc += a * a;
  return acc;
}

double diff_sq(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMajor to_eigen(const Matrix& m) {
  const DenseMatrix dense = m.to_dense();
  RowMajor out(static_cast<Eigen::Index>(dense.rows()), static_cast<Eigen::Index>(dense.cols()));
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    for (std::size_t j = 0; j < dense.cols(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dense(i, j);
  }
  return out;
}

enum AuxSlot : std::size_t { kLoss, kDzSq, kDuSq, kZSq, kUSq, kAuxScalars };

class ConsensusWorker final : public cluster::WorkerProgram {
 public:
  ConsensusWorker(const DesignShard& shard, const ProblemSpec& spec, const SolverConfig& config)
      : shard_(shard), spec_(spec), config_(config), solver_(shard, spec.mu) {}

  double precompute() override { return 0.0; }

  cluster::XiReport step(int iter, std::span<const double> x) override {
    cluster::XiReport report;
    report.aux.assign(kAuxScalars, 0.0);
    if (iter == 0) {
      z_.assign(x.begin(), x.end());
      u_.assign(x.size(), config_.init_value);
    } else {
      auto z_next = solver_.update(x, u_);
      std::vector<double> u_next(u_.size());
      for (std::size_t j = 0; j < u_.size(); ++j) u_next[j] = u_[j] - spec_.mu * (x[j] - z_next[j]);
      report.aux[kDzSq] = diff_sq(z_next, z_);
      report.aux[kDuSq] = diff_sq(u_next, u_);
      z_ = std::move(z_next);
      u_ = std::move(u_next);
    }
    std::vector<double> q(shard_.rows());
    shard_.matrix.multiply(x, q, config_.backend);
    double loss = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) loss += spec_.loss.sample(q[i], shard_.response[i]);
    report.aux[kLoss] = loss;
    report.aux[kZSq] = sum_sq(z_);
    report.aux[kUSq] = sum_sq(u_);
    // Payload of the x-update: z_d + u_d / mu. The state rides along so the master can average exactly.
    report.xi.resize(z_.size());
    for (std::size_t j = 0; j < z_.size(); ++j) report.xi[j] = z_[j] + u_[j] / spec_.mu;
    report.aux.insert(report.aux.end(), z_.begin(), z_.end());
    report.aux.insert(report.aux.end(), u_.begin(), u_.end());
    return report;
  }

 private:
  const DesignShard& shard_;
  const ProblemSpec& spec_;
  const SolverConfig& config_;
  ConsensusZSolver solver_;
  std::vector<double> z_, u_;
};

}  // namespace

std::vector<double> consensus_x_update(std::span<const std::vector<double>> z, std::span<const std::vector<double>> u,
                                       double mu, const ProblemSpec& spec) {
  if (z.empty() || z.size() != u.size()) throw ArgumentError("consensus_x_update: need D >= 1 matching z and u blocks");
  if (!(mu > 0.0)) throw ArgumentError("consensus_x_update: mu must be positive");
  const std::size_t n = z.front().size();
  const double d = static_cast<double>(z.size());
  std::vector<double> z_bar(n, 0.0), u_bar(n, 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (z[k].size() != n || u[k].size() != n) throw DimensionError("consensus_x_update: block " + std::to_string(k + 1) + " has the wrong length");
    for (std::size_t j = 0; j < n; ++j) {
      z_bar[j] += z[k][j];
      u_bar[j] += u[k][j];
    }
  }
  std::vector<double> a(n);
  for (std::size_t j = 0; j < n; ++j) a[j] = z_bar[j] / d + (u_bar[j] / d) / mu;
  return prox::prox_regularizer(spec, a, d * mu);
}

struct ConsensusZSolver::Impl {
  RowMajor a;
  Eigen::VectorXd atb;
  double mu = 0.0;
  bool lemma = false;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

ConsensusZSolver::ConsensusZSolver(const DesignShard& shard, double mu) : impl_(std::make_unique<Impl>()) {
  if (!(mu > 0.0)) throw ArgumentError("ConsensusZSolver: mu must be positive");
  impl_->a = to_eigen(shard.matrix);
  impl_->mu = mu;
  const auto m = impl_->a.rows();
  const auto n = impl_->a.cols();
  Eigen::Map<const Eigen::VectorXd> b(shard.response.data(), static_cast<Eigen::Index>(shard.response.size()));
  impl_->atb = impl_->a.transpose() * b;
  impl_->lemma = m < n;
  Eigen::MatrixXd gram;
  if (impl_->lemma) {
    gram = impl_->a * impl_->a.transpose();
    gram.diagonal().array() += mu;
  } else {
    gram = impl_->a.transpose() * impl_->a;
    gram.diagonal().array() += mu;
  }
  impl_->llt.compute(gram);
  if (impl_->llt.info() != Eigen::Success) {
    throw InternalError("ConsensusZSolver: Cholesky factorization failed on shard " + std::to_string(shard.index));
  }
}

ConsensusZSolver::~ConsensusZSolver() = default;
ConsensusZSolver::ConsensusZSolver(ConsensusZSolver&&) noexcept = default;
ConsensusZSolver& ConsensusZSolver::operator=(ConsensusZSolver&&) noexcept = default;

bool ConsensusZSolver::uses_inversion_lemma() const noexcept { return impl_->lemma; }

std::vector<double> ConsensusZSolver::update(std::span<const double> x_next, std::span<const double> u_d) const {
  const auto n = impl_->a.cols();
  if (static_cast<Eigen::Index>(x_next.size()) != n || static_cast<Eigen::Index>(u_d.size()) != n) {
    throw DimensionError("ConsensusZSolver: x and u must have length " + std::to_string(n));
  }
  Eigen::Map<const Eigen::VectorXd> x(x_next.data(), n);
  Eigen::Map<const Eigen::VectorXd> u(u_d.data(), n);
  const double mu = impl_->mu;
  const Eigen::VectorXd rhs = impl_->atb + mu * x - u;
  Eigen::VectorXd z;
  if (impl_->lemma) {
    // (A^T A + mu I)^{-1} = (I - A^T (A A^T + mu I)^{-1} A) / mu
    const Eigen::VectorXd inner = impl_->llt.solve(impl_->a * rhs);
    z = (rhs - impl_->a.transpose() * inner) / mu;
  } else {
    z = impl_->llt.solve(rhs);
  }
  if (!z.allFinite()) throw InternalError("ConsensusZSolver: non-finite solution");
  return {z.data(), z.data() + z.size()};
}

std::vector<double> consensus_z_update_ls(const DesignShard& shard, std::span<const double> x_next,
                                          std::span<const double> u_d, double mu) {
  return ConsensusZSolver(shard, mu).update(x_next, u_d);
}

FitResult consensus_solve(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                          const cluster::ClusterOptions& cluster_options) {
  if (spec.loss.kind != LossKind::kLeastSquares) {
    throw UnsupportedError("consensus baseline supports least_squares only, got " + std::string(to_string(spec.loss.kind)));
  }
  config.validate();
  validate_shards(shards, spec.task());
  const std::size_t n = shards.front().cols();
  spec.validate(n);
  if (config.initial_x && config.initial_x->size() != n) throw DimensionError("initial_x length mismatch");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  auto exec = cluster::spawn_cluster(
      shards,
      [&spec, &config](const DesignShard& shard) { return std::make_unique<ConsensusWorker>(shard, spec, config); },
      cluster_options);
  (void)exec->collect_eta();

  const std::size_t d_count = shards.size();
  FitResult result;
  result.lambda_used = spec.lambda;
  result.variable_count = (2 * d_count + 1) * n;

  std::vector<double> x = config.initial_x ? *config.initial_x : std::vector<double>(n, config.init_value);
  std::vector<std::vector<double>> z(d_count), u(d_count);
  auto unpack = [&](const std::vector<cluster::XiReport>& reps) {
    for (std::size_t d = 0; d < d_count; ++d) {
      const auto first = reps[d].aux.begin() + kAuxScalars;
      z[d].assign(first, first + static_cast<std::ptrdiff_t>(n));
      u[d].assign(first + static_cast<std::ptrdiff_t>(n), first + static_cast<std::ptrdiff_t>(2 * n));
    }
  };
  auto reports = exec->epoch(0, x);
  unpack(reports);
  const std::vector<std::vector<double>> none;
  auto publish = [&](int k) {
    if (!config.on_iterate) return;
    if (config.collect_state) {
      config.on_iterate(IterateView{k, x, z, u});
    } else {
      config.on_iterate(IterateView{k, x, none, none});
    }
  };
  publish(0);

  for (int k = 0; k < config.max_iter; ++k) {
    auto x_next = consensus_x_update(z, u, spec.mu, spec);
    reports = exec->epoch(k + 1, x_next);
    unpack(reports);
    double loss = 0.0, dz = 0.0, du = 0.0, zz = 0.0, uu = 0.0;
    for (const auto& rep : reports) {
      loss += rep.aux[kLoss];
      dz += rep.aux[kDzSq];
      du += rep.aux[kDuSq];
      zz += rep.aux[kZSq];
      uu += rep.aux[kUSq];
    }
    const double dx = diff_sq(x_next, x);
    const double rel = relative_change(dx + dz + du, sum_sq(x_next) + zz + uu);
    x = std::move(x_next);
    result.iterations = k + 1;
    const bool done = rel <= config.tol;
    if (config.record_trace || (k + 1) % 10 == 0 || done || k + 1 == config.max_iter) {
      // No H-seminorm for this scheme; the column carries the squared successive change instead.
      result.trace.push_back({k + 1, loss + spec.regularizer_value(x), rel, dx + dz + du, elapsed_ms()});
    }
    publish(k + 1);
    if (done) {
      result.converged = true;
      break;
    }
  }
  exec->stop(result.converged ? "converged" : "iteration limit");
  result.coefficients = std::move(x);
  result.wall_ms = elapsed_ms();
  return result;
}

}  // namespace pipadmm
