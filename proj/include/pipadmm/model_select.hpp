#ifndef PIPADMM_MODEL_SELECT_HPP_
#define PIPADMM_MODEL_SELECT_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "pipadmm/cluster.hpp"
#include "pipadmm/core_types.hpp"
#include "pipadmm/solver.hpp"

namespace pipadmm {

//! log(loss_sum) + support_size * (log(log m) / m) * 6 log(n).
//! loss_sum <= 0 is clamped to machine epsilon with a warning; m < 3 or n < 2 throws ArgumentError.
double hbic(double loss_sum, std::size_t support_size, std::size_t m, std::size_t n);

//! Per-unit-support penalty of hbic(): (log(log m) / m) * 6 log(n).
double hbic_penalty(std::size_t m, std::size_t n);

//! Number of |x_j| > zero_tol; coordinate 0 is skipped when `intercept` is set.
std::size_t support_size(std::span<const double> x, double zero_tol = 1e-6, bool intercept = false);

//! Smallest lambda that zeroes the l1 solution at x = 0: ||A^T g0||_inf with g0 the per-sample loss
//! gradient at q = 0, divided by the coordinate (or group) weights. Unpenalized coordinates are skipped.
double lambda_max(const ProblemSpec& spec, std::span<const DesignShard> shards);

//! `grid_size` log-spaced values from lambda_max down to ratio * lambda_max, strictly descending.
std::vector<double> lambda_grid(double lambda_max_value, int grid_size, double ratio);

struct PathOptions {
  int grid_size = 50;
  double ratio = 1e-3;
  double zero_tol = 1e-6;
  //! Start each fit at the previous solution.
  bool warm_start = true;
  cluster::ClusterOptions cluster;
};

struct PathResult {
  std::vector<double> lambdas;
  std::vector<FitResult> fits;
  std::vector<double> hbic;        //!< NaN for invalid entries.
  std::vector<std::size_t> support;
  std::vector<double> loss_sums;
  std::vector<double> objectives;
  std::vector<bool> valid;
  std::size_t selected_index = 0;

  const FitResult& selected() const { return fits.at(selected_index); }
  double selected_lambda() const { return lambdas.at(selected_index); }
};

//! Fits the whole grid in order and selects the HBIC minimizer. A fit that throws marks its entry
//! invalid; if every entry is invalid an Error is thrown.
PathResult lambda_path(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                       const PathOptions& options = {});

}  // namespace pipadmm

#endif  // PIPADMM_MODEL_SELECT_HPP_
