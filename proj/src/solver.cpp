#include "pipadmm/solver.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <string>

#include <spdlog/spdlog.h>

#include "pipadmm/error.hpp"
#include "pipadmm/kernels.hpp"

namespace pipadmm {

namespace {

double sum_sq(std::span<const double> v) {
  double acc = 0.0;
  for (double a : v) acc += a * a;
  return acc;
}

double diff_sq(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Layout of XiReport::aux produced by the partition-insensitive worker.
enum AuxSlot : std::size_t { kLoss, kDrSq, kDuSq, kRSq, kUSq, kAdxSq, kAuxScalars };

void check_dims(const DesignShard& shard, std::size_t x, std::size_t r, std::size_t u) {
  if (x != shard.cols() || r != shard.rows() || u != shard.rows()) {
    throw DimensionError("shard " + std::to_string(shard.index) + ": expected x of length " +
                         std::to_string(shard.cols()) + " and r/u of length " + std::to_string(shard.rows()) +
                         ", got " + std::to_string(x) + "/" + std::to_string(r) + "/" + std::to_string(u));
  }
}

// Fills r_next/u_next/loss_row from q for every row of the shard. Rows are independent.
void update_rows(const DesignShard& shard, const ProblemSpec& spec, const SolverConfig& config,
                 std::span<const double> q, std::span<const double> r, std::span<const double> u,
                 std::span<double> r_next, std::span<double> u_next, std::span<double> loss_row) {
  const double mu = spec.mu;
  const auto rows = static_cast<std::ptrdiff_t>(shard.rows());
  const bool parallel = config.backend == Backend::kOpenMP && shard.rows() >= 4096;
  std::mutex error_mutex;
  std::string error;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const double b = shard.response[i];
      const double rn = r_update_row(spec, b, q[i], u[i], r[i], config.newton);
      r_next[i] = rn;
      u_next[i] = u[i] - mu * (q[i] - rn);
      loss_row[i] = spec.loss.sample(q[i], b);
    } catch (const std::exception& e) {
      std::lock_guard lock(error_mutex);
      if (error.empty()) error = "shard " + std::to_string(shard.index) + " row " + std::to_string(i) + ": " + e.what();
    }
  }
  if (!error.empty()) throw Error(error);
}

void xi_from(const DesignShard& shard, std::span<const double> q, std::span<const double> r,
             std::span<const double> u, double mu, XiForm form, Backend backend, std::span<double> scratch,
             std::span<double> out) {
  for (std::size_t i = 0; i < scratch.size(); ++i) {
    scratch[i] = form == XiForm::kDefinitional ? q[i] - r[i] - u[i] / mu : r[i] + u[i] / mu;
  }
  shard.matrix.multiply_transpose(scratch, out, backend);
}

class PipWorker final : public cluster::WorkerProgram {
 public:
  PipWorker(const DesignShard& shard, const ProblemSpec& spec, const SolverConfig& config)
      : shard_(shard),
        spec_(spec),
        config_(config),
        q_(shard.rows()),
        q_next_(shard.rows()),
        r_(shard.rows()),
        u_(shard.rows(), config.init_value),
        r_next_(shard.rows()),
        u_next_(shard.rows()),
        loss_row_(shard.rows()),
        scratch_(shard.rows()) {}

  double precompute() override {
    return power_method_eta(shard_, spec_.mu, config_.power_tol, config_.power_max_iter, config_.eta_safety,
                            config_.backend);
  }

  cluster::XiReport step(int iter, std::span<const double> x) override {
    if (x.size() != shard_.cols()) {
      throw DimensionError("shard " + std::to_string(shard_.index) + ": broadcast x has length " +
                           std::to_string(x.size()) + ", expected " + std::to_string(shard_.cols()));
    }
    cluster::XiReport report;
    report.aux.assign(kAuxScalars, 0.0);
    if (iter == 0) {
      // r^0 = A_d x^0, u^0 = init_value.
      shard_.matrix.multiply(x, q_, config_.backend);
      r_ = q_;
      std::fill(u_.begin(), u_.end(), config_.init_value);
      double loss = 0.0;
      for (std::size_t i = 0; i < q_.size(); ++i) loss += spec_.loss.sample(q_[i], shard_.response[i]);
      report.aux[kLoss] = loss;
    } else {
      shard_.matrix.multiply(x, q_next_, config_.backend);
      update_rows(shard_, spec_, config_, q_next_, r_, u_, r_next_, u_next_, loss_row_);
      double loss = 0.0;
      for (double l : loss_row_) loss += l;
      report.aux[kLoss] = loss;
      report.aux[kDrSq] = diff_sq(r_next_, r_);
      report.aux[kDuSq] = diff_sq(u_next_, u_);
      report.aux[kAdxSq] = diff_sq(q_next_, q_);
      std::swap(q_, q_next_);
      std::swap(r_, r_next_);
      std::swap(u_, u_next_);
    }
    report.aux[kRSq] = sum_sq(r_);
    report.aux[kUSq] = sum_sq(u_);
    if (config_.collect_state) {
      report.aux.insert(report.aux.end(), r_.begin(), r_.end());
      report.aux.insert(report.aux.end(), u_.begin(), u_.end());
    }
    report.xi.resize(shard_.cols());
    xi_from(shard_, q_, r_, u_, spec_.mu, config_.xi_form, config_.backend, scratch_, report.xi);
    return report;
  }

 private:
  const DesignShard& shard_;
  const ProblemSpec& spec_;
  const SolverConfig& config_;
  std::vector<double> q_, q_next_, r_, u_, r_next_, u_next_, loss_row_, scratch_;
};

std::vector<double> reduce_xi(const std::vector<cluster::XiReport>& reports, std::size_t n, Reduction reduction) {
  if (reduction == Reduction::kOrdered || reports.size() == 1) {
    std::vector<double> sum(n, 0.0);
    for (const auto& rep : reports) {
      for (std::size_t j = 0; j < n; ++j) sum[j] += rep.xi[j];
    }
    return sum;
  }
  std::vector<std::vector<double>> level;
  level.reserve(reports.size());
  for (const auto& rep : reports) level.push_back(rep.xi);
  while (level.size() > 1) {
    std::vector<std::vector<double>> next;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      auto s = std::move(level[i]);
      for (std::size_t j = 0; j < n; ++j) s[j] += level[i + 1][j];
      next.push_back(std::move(s));
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return level.front();
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iter < 1) throw ArgumentError("max_iter must be at least 1");
  if (!(tol > 0.0)) throw ArgumentError("tol must be positive");
  if (!(eta_safety >= 1.0)) throw ArgumentError("eta_safety must be at least 1");
  if (eta_override && !(*eta_override > 0.0)) throw ArgumentError("eta override must be positive");
  if (!(newton.tol > 0.0) || newton.max_iter < 1) throw ArgumentError("invalid Newton options");
}

double power_method_eta(const DesignShard& shard, double mu, double tol, int max_iter, double safety,
                        Backend backend) {
  const std::size_t n = shard.cols();
  if (shard.rows() == 0 || n == 0 || shard.matrix.nnz() == 0) return 0.0;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> w(shard.rows());
  std::vector<double> z(n);
  double rho = 0.0;
  bool restarted = false;
  for (int it = 0; it < max_iter; ++it) {
    shard.matrix.multiply(v, w, backend);
    shard.matrix.multiply_transpose(w, z, backend);
    const double rho_next = sum_sq(w);  // v^T A^T A v with ||v|| = 1
    const double norm = std::sqrt(sum_sq(z));
    if (norm == 0.0) {
      if (restarted) return 0.0;
      // The all-ones start lies in the null space; restart from a fixed non-symmetric vector.
      restarted = true;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        v[j] = 1.0 + static_cast<double>((j * 7919) % 97) / 97.0;
        s += v[j] * v[j];
      }
      for (auto& a : v) a /= std::sqrt(s);
      rho = 0.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) v[j] = z[j] / norm;
    if (std::abs(rho_next - rho) <= tol * rho_next) return mu * rho_next * safety;
    rho = rho_next;
  }
  spdlog::warn("power_method_eta: shard {} did not converge in {} iterations; inflating estimate by 5%",
               shard.index, max_iter);
  return mu * rho * 1.05 * safety;
}

double aggregate_eta(std::span<const double> eta_d, std::optional<double> override_value) {
  if (eta_d.empty()) throw ArgumentError("aggregate_eta: no shard estimates");
  if (override_value) return *override_value;
  double eta = 0.0;
  for (double e : eta_d) {
    if (!(e >= 0.0)) throw ArgumentError("aggregate_eta: negative shard estimate");
    eta += e;
  }
  return eta;
}

std::vector<double> compute_xi(const DesignShard& shard, std::span<const double> x, std::span<const double> r_d,
                               std::span<const double> u_d, double mu, Backend backend) {
  check_dims(shard, x.size(), r_d.size(), u_d.size());
  std::vector<double> q(shard.rows());
  shard.matrix.multiply(x, q, backend);
  std::vector<double> scratch(shard.rows());
  std::vector<double> xi(shard.cols());
  xi_from(shard, q, r_d, u_d, mu, XiForm::kDefinitional, backend, scratch, xi);
  return xi;
}

std::vector<double> x_update(std::span<const double> x_k, std::span<const double> xi_sum, double eta, double mu,
                             const ProblemSpec& spec) {
  if (!(eta > 0.0)) throw ArgumentError("x_update: eta must be positive");
  if (xi_sum.size() != x_k.size()) throw DimensionError("x_update: xi_sum length mismatch");
  std::vector<double> anchor(x_k.size());
  const double step = mu / eta;
  for (std::size_t j = 0; j < x_k.size(); ++j) anchor[j] = x_k[j] - step * xi_sum[j];
  return prox::prox_regularizer(spec, anchor, eta);
}

double r_update_row(const ProblemSpec& spec, double b, double q, double u, double r_prev,
                    const prox::NewtonOptions& newton) {
  const double mu = spec.mu;
  switch (spec.loss.kind) {
    case LossKind::kLogistic:
      return prox::logistic_r_newton(b, q, u, mu, r_prev, newton).r;
    case LossKind::kHinge:
    case LossKind::kSquaredHinge:
      return prox::classification_r_update(spec.loss, b, q, u, mu);
    default:
      return prox::regression_r_update(spec.loss, b, q, u, mu);
  }
}

WorkerUpdate worker_iteration(const DesignShard& shard, std::span<const double> x_next, std::span<const double> r_d,
                              std::span<const double> u_d, const ProblemSpec& spec, const SolverConfig& config) {
  check_dims(shard, x_next.size(), r_d.size(), u_d.size());
  WorkerUpdate out;
  out.q.resize(shard.rows());
  out.r.resize(shard.rows());
  out.u.resize(shard.rows());
  out.xi.resize(shard.cols());
  shard.matrix.multiply(x_next, out.q, config.backend);
  std::vector<double> loss_row(shard.rows());
  update_rows(shard, spec, config, out.q, r_d, u_d, out.r, out.u, loss_row);
  std::vector<double> scratch(shard.rows());
  xi_from(shard, out.q, out.r, out.u, spec.mu, config.xi_form, config.backend, scratch, out.xi);
  return out;
}

double relative_change(double diff_sq_value, double curr_sq) {
  return std::sqrt(diff_sq_value) / std::max(1.0, std::sqrt(curr_sq));
}

bool stopping_check(const SolverState& w_prev, const SolverState& w_curr, double tol) {
  const auto a = w_prev.flatten();
  const auto b = w_curr.flatten();
  if (a.size() != b.size()) throw DimensionError("stopping_check: state shapes differ");
  return relative_change(diff_sq(b, a), sum_sq(b)) <= tol;
}

double h_seminorm_sq_from_norms(double eta, double mu, double dx_sq, double adx_sq, double dr_sq, double du_sq) {
  return eta * dx_sq - mu * adx_sq + mu * dr_sq + du_sq / mu;
}

double h_seminorm_sq(const HSeminorm& h, const SolverState& v) {
  double adx_sq = 0.0;
  for (const auto& shard : h.shards) {
    if (shard.cols() != v.x.size()) throw DimensionError("h_seminorm_sq: x length mismatch");
    std::vector<double> q(shard.rows());
    shard.matrix.multiply(v.x, q);
    adx_sq += sum_sq(q);
  }
  double dr_sq = 0.0;
  double du_sq = 0.0;
  for (const auto& seg : v.r) dr_sq += sum_sq(seg);
  for (const auto& seg : v.u) du_sq += sum_sq(seg);
  const double value = h_seminorm_sq_from_norms(h.eta, h.mu, sum_sq(v.x), adx_sq, dr_sq, du_sq);
  if (value < -1e-9) {
    throw InternalError("h_seminorm_sq: negative value " + std::to_string(value) + "; eta is too small");
  }
  return value;
}

SolverState state_difference(const SolverState& a, const SolverState& b) {
  if (a.x.size() != b.x.size() || a.r.size() != b.r.size() || a.u.size() != b.u.size()) {
    throw DimensionError("state_difference: state shapes differ");
  }
  SolverState out;
  out.x.resize(a.x.size());
  for (std::size_t j = 0; j < a.x.size(); ++j) out.x[j] = a.x[j] - b.x[j];
  auto seg_diff = [](const auto& p, const auto& q) {
    if (p.size() != q.size()) throw DimensionError("state_difference: segment lengths differ");
    std::vector<double> d(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) d[i] = p[i] - q[i];
    return d;
  };
  for (std::size_t d = 0; d < a.r.size(); ++d) out.r.push_back(seg_diff(a.r[d], b.r[d]));
  for (std::size_t d = 0; d < a.u.size(); ++d) out.u.push_back(seg_diff(a.u[d], b.u[d]));
  out.eta = a.eta;
  return out;
}

FitResult solve(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                const cluster::ClusterOptions& cluster_options) {
  return solve(spec, shards, config, cluster_options, nullptr);
}

FitResult solve(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                const cluster::ClusterOptions& cluster_options, cluster::TransportCounters* counters) {
  config.validate();
  validate_shards(shards, spec.task());
  const std::size_t n = shards.front().cols();
  spec.validate(n);
  if (config.initial_x && config.initial_x->size() != n) throw DimensionError("initial_x length mismatch");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  auto options = cluster_options;
  if (counters != nullptr) options.count_traffic = true;
  auto exec = cluster::spawn_cluster(
      shards,
      [&spec, &config](const DesignShard& shard) { return std::make_unique<PipWorker>(shard, spec, config); },
      options);

  const auto eta_d = exec->collect_eta();
  const double eta = aggregate_eta(eta_d, config.eta_override);
  if (!(eta > 0.0)) throw ArgumentError("solve: eta is zero (all shards empty or zero); pass an eta override");
  spdlog::debug("solve: eta = {} over {} shards", eta, shards.size());

  FitResult result;
  result.eta = eta;
  result.lambda_used = spec.lambda;
  result.variable_count = total_rows(shards) + n;

  std::vector<double> x = config.initial_x ? *config.initial_x : std::vector<double>(n, config.init_value);
  auto reports = exec->epoch(0, x);

  std::vector<std::vector<double>> r_state;
  std::vector<std::vector<double>> u_state;
  auto unpack_state = [&](const std::vector<cluster::XiReport>& reps) {
    if (!config.collect_state) return;
    r_state.assign(reps.size(), {});
    u_state.assign(reps.size(), {});
    for (std::size_t d = 0; d < reps.size(); ++d) {
      const std::size_t m_d = shards[d].rows();
      const auto first = reps[d].aux.begin() + kAuxScalars;
      r_state[d].assign(first, first + static_cast<std::ptrdiff_t>(m_d));
      u_state[d].assign(first + static_cast<std::ptrdiff_t>(m_d), first + static_cast<std::ptrdiff_t>(2 * m_d));
    }
  };
  unpack_state(reports);
  if (config.on_iterate) config.on_iterate(IterateView{0, x, r_state, u_state});

  for (int k = 0; k < config.max_iter; ++k) {
    const auto xi_sum = reduce_xi(reports, n, config.reduction);
    auto x_next = x_update(x, xi_sum, eta, spec.mu, spec);
    reports = exec->epoch(k + 1, x_next);

    double loss = 0.0, dr = 0.0, du = 0.0, rr = 0.0, uu = 0.0, adx = 0.0;
    for (const auto& rep : reports) {
      loss += rep.aux[kLoss];
      dr += rep.aux[kDrSq];
      du += rep.aux[kDuSq];
      rr += rep.aux[kRSq];
      uu += rep.aux[kUSq];
      adx += rep.aux[kAdxSq];
    }
    const double dx = diff_sq(x_next, x);
    const double rel = relative_change(dx + dr + du, sum_sq(x_next) + rr + uu);
    const double h = h_seminorm_sq_from_norms(eta, spec.mu, dx, adx, dr, du);
    x = std::move(x_next);
    result.iterations = k + 1;
    const bool done = rel <= config.tol;

    if (config.record_trace || (k + 1) % 10 == 0 || done || k + 1 == config.max_iter) {
      result.trace.push_back({k + 1, loss + spec.regularizer_value(x), rel, h, elapsed_ms()});
    }
    unpack_state(reports);
    if (config.on_iterate) config.on_iterate(IterateView{k + 1, x, r_state, u_state});
    if (done) {
      result.converged = true;
      break;
    }
  }
  exec->stop(result.converged ? "converged" : "iteration limit");
  if (counters != nullptr) *counters = exec->counters().value_or(cluster::TransportCounters{});

  result.coefficients = std::move(x);
  result.r = std::move(r_state);
  result.u = std::move(u_state);
  result.wall_ms = elapsed_ms();
  return result;
}

}  // namespace pipadmm
