#ifndef PIPADMM_CONSENSUS_HPP_
#define PIPADMM_CONSENSUS_HPP_

// Consensus-form parallel ADMM for regularized least squares. Each worker keeps a
// local copy z_d of the coefficients tied to x by z_d = x:
//
//   x    = prox_{R, D mu}( mean_d (z_d + u_d/mu) )
//   z_d  = (A_d^T A_d + mu I)^{-1} (A_d^T b_d + mu x - u_d)
//   u_d  = u_d - mu (x - z_d)
//
// Unlike the partition-insensitive solver its iterates depend on D.

#include <memory>
#include <span>
#include <vector>

#include "pipadmm/cluster.hpp"
#include "pipadmm/core_types.hpp"
#include "pipadmm/solver.hpp"

namespace pipadmm {

struct ConsensusState {
  std::vector<double> x;
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> u;
  int k = 0;
};

//! prox_regularizer(spec, mean(z_d) + mean(u_d)/mu, D mu), means taken in shard order.
std::vector<double> consensus_x_update(std::span<const std::vector<double>> z, std::span<const std::vector<double>> u,
                                       double mu, const ProblemSpec& spec);

//! Solves (A^T A + mu I) z = rhs for one shard with a cached Cholesky factor. Shards with fewer
//! rows than columns factor the m_d x m_d matrix A A^T + mu I and apply the inversion lemma.
class ConsensusZSolver {
 public:
  ConsensusZSolver(const DesignShard& shard, double mu);
  ~ConsensusZSolver();
  ConsensusZSolver(ConsensusZSolver&&) noexcept;
  ConsensusZSolver& operator=(ConsensusZSolver&&) noexcept;

  //! z for the given x_next and u_d.
  std::vector<double> update(std::span<const double> x_next, std::span<const double> u_d) const;
  bool uses_inversion_lemma() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

//! One-shot z-update; builds and discards the factorization.
std::vector<double> consensus_z_update_ls(const DesignShard& shard, std::span<const double> x_next,
                                          std::span<const double> u_d, double mu);

//! Runs the consensus baseline. Supports least squares only; other losses throw UnsupportedError.
//! Uses config.max_iter, tol, init_value, record_trace, initial_x and on_iterate (whose r/u spans carry
//! z_d/u_d when collect_state is set). z_d^0 = x^0, u_d^0 = init_value.
FitResult consensus_solve(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                          const cluster::ClusterOptions& cluster_options = {});

}  // namespace pipadmm

#endif  // PIPADMM_CONSENSUS_HPP_
