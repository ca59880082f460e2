#ifndef PIPADMM_SOLVER_HPP_
#define PIPADMM_SOLVER_HPP_

// Partition-insensitive parallel ADMM.
//
// Splitting A x = r row-wise over D shards, every worker d owns (A_d, b_d, r_d, u_d)
// and the master owns x. One iteration:
//
//   master:  x+   = prox_{R, eta}( x - (mu/eta) * sum_d xi_d )
//   worker:  q    = A_d x+
//            r_d  = per-row prox of the loss around q - u_d/mu
//            u_d  = u_d - mu (q - r_d)
//            xi_d = A_d^T (q - r_d - u_d/mu)
//
// With a shared eta the iterates do not depend on how rows are split, because
// sum_d xi_d = A^T (A x - r - u/mu) for every partition.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pipadmm/cluster.hpp"
#include "pipadmm/core_types.hpp"
#include "pipadmm/prox.hpp"

namespace pipadmm {

//! Which xi formula the workers use.
enum class XiForm {
  kDefinitional,  //!< A_d^T (A_d x - r_d - u_d/mu); what the linearized x-update requires.
  kAsPrinted,     //!< A_d^T (r_d + u_d/mu); kept only for comparison experiments.
};

//! How the master reduces the D xi vectors.
enum class Reduction {
  kOrdered,   //!< Serial sum in ascending shard order. Deterministic; used by all partition tests.
  kPairwise,  //!< Pairwise tree sum; different rounding, still deterministic for fixed D.
};

//! What the per-iteration observer sees. r and u are empty unless `collect_state` is set.
struct IterateView {
  int k = 0;
  std::span<const double> x;
  std::span<const std::vector<double>> r;
  std::span<const std::vector<double>> u;
};

struct SolverConfig {
  int max_iter = 500;
  double tol = 1e-2;
  //! Every entry of x^0 and u^0.
  double init_value = 0.0;
  //! Replaces sum_d eta_d when set.
  std::optional<double> eta_override;
  //! Multiplier applied to every power-method estimate.
  double eta_safety = 1.0 + 1e-6;
  //! Trace every iteration when true, every 10th otherwise.
  bool record_trace = false;
  prox::NewtonOptions newton;
  double power_tol = 1e-8;
  int power_max_iter = 1000;
  XiForm xi_form = XiForm::kDefinitional;
  Reduction reduction = Reduction::kOrdered;
  Backend backend = Backend::kOpenMP;
  //! Ship r_d and u_d to the master every iteration (for observers and FitResult::r/u).
  bool collect_state = false;
  //! Warm start for x^0; overrides init_value for x only.
  std::optional<std::vector<double>> initial_x;
  std::function<void(const IterateView&)> on_iterate;

  void validate() const;
};

//! Spectral-norm estimate mu * ||A_d||_2^2 * safety by power iteration on A_d^T A_d, started from the
//! normalized all-ones vector. Returns 0 for an empty or zero shard.
double power_method_eta(const DesignShard& shard, double mu, double tol = 1e-8, int max_iter = 1000,
                        double safety = 1.0, Backend backend = Backend::kOpenMP);

//! sum_d eta_d in the given (ascending shard) order, or `override_value` when present.
double aggregate_eta(std::span<const double> eta_d, std::optional<double> override_value = std::nullopt);

//! A_d^T (A_d x - r_d - u_d/mu).
std::vector<double> compute_xi(const DesignShard& shard, std::span<const double> x, std::span<const double> r_d,
                               std::span<const double> u_d, double mu, Backend backend = Backend::kOpenMP);

//! prox_{R, eta}( x_k - (mu/eta) xi_sum ).
std::vector<double> x_update(std::span<const double> x_k, std::span<const double> xi_sum, double eta, double mu,
                             const ProblemSpec& spec);

//! r-update of one row, dispatching on the loss family. `r_prev` warm-starts the logistic Newton solve.
double r_update_row(const ProblemSpec& spec, double b, double q, double u, double r_prev,
                    const prox::NewtonOptions& newton);

struct WorkerUpdate {
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> xi;
  std::vector<double> q;  //!< A_d x_next
};

//! One worker step of the iteration for a freshly broadcast x_next.
WorkerUpdate worker_iteration(const DesignShard& shard, std::span<const double> x_next, std::span<const double> r_d,
                              std::span<const double> u_d, const ProblemSpec& spec, const SolverConfig& config);

//! ||w_curr - w_prev|| / max(1, ||w_curr||) <= tol over the concatenated (x, r, u).
bool stopping_check(const SolverState& w_prev, const SolverState& w_curr, double tol);
//! Same ratio from squared norms.
double relative_change(double diff_sq, double curr_sq);

//! H = blockdiag(eta I - mu A^T A, mu I, I/mu), applied implicitly through the shards.
struct HSeminorm {
  double eta = 0.0;
  double mu = 0.0;
  std::span<const DesignShard> shards;
};

//! ||v||_H^2 for a state difference v (x, r, u). Throws InternalError when the result is below -1e-9.
double h_seminorm_sq(const HSeminorm& h, const SolverState& v);
//! Same quantity from precomputed squared norms: eta dx - mu adx + mu dr + du / mu.
double h_seminorm_sq_from_norms(double eta, double mu, double dx_sq, double adx_sq, double dr_sq, double du_sq);

//! Elementwise a - b of two states of the same shape.
SolverState state_difference(const SolverState& a, const SolverState& b);

//! Runs the solver over a cluster with one worker per shard. Shards must carry indices 1..D in order.
FitResult solve(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                const cluster::ClusterOptions& cluster_options = {});

//! Like solve(), also returning the traffic counters of the run.
FitResult solve(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                const cluster::ClusterOptions& cluster_options, cluster::TransportCounters* counters);

}  // namespace pipadmm

#endif  // PIPADMM_SOLVER_HPP_
