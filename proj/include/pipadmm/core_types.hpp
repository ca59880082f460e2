#ifndef PIPADMM_CORE_TYPES_HPP_
#define PIPADMM_CORE_TYPES_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pipadmm/matrix.hpp"

namespace pipadmm {

enum class LossKind { kLeastSquares, kQuantile, kHuber, kSvr, kHinge, kSquaredHinge, kLogistic };
enum class Task { kRegression, kClassification };
enum class RegularizerKind { kL1, kL2Squared, kGroupL21 };

//! A per-sample loss and its single shape parameter.
//!
//! Regression losses are applied to the residual `b - a^T x`, classification losses
//! to the margin: hinge and squared hinge see `1 - b a^T x`, logistic sees `b a^T x`.
struct Loss {
  LossKind kind = LossKind::kLeastSquares;
  //! tau for quantile, delta for Huber, epsilon for SVR; unused otherwise.
  double param = 0.0;

  static Loss least_squares() { return {LossKind::kLeastSquares, 0.0}; }
  static Loss quantile(double tau) { return {LossKind::kQuantile, tau}; }
  static Loss huber(double delta) { return {LossKind::kHuber, delta}; }
  static Loss svr(double epsilon) { return {LossKind::kSvr, epsilon}; }
  static Loss hinge() { return {LossKind::kHinge, 0.0}; }
  static Loss squared_hinge() { return {LossKind::kSquaredHinge, 0.0}; }
  static Loss logistic() { return {LossKind::kLogistic, 0.0}; }

  Task task() const noexcept;
  //! Scalar loss of the transformed argument (residual for regression, see above for classification).
  double scalar(double c) const;
  //! Loss of one sample with linear predictor q and response b.
  double sample(double q, double b) const;
  //! Derivative (a subgradient where nonsmooth) of sample(q, b) with respect to q.
  double sample_gradient(double q, double b) const;
  //! Throws ArgumentError when the parameter is outside its domain.
  void validate() const;
};

std::string_view to_string(LossKind kind);
//! Accepts the names produced by to_string plus a few aliases ("ls", "svm").
LossKind loss_kind_from_string(std::string_view name);
std::string_view to_string(RegularizerKind kind);
RegularizerKind regularizer_kind_from_string(std::string_view name);

//! Everything that defines the optimization problem apart from the data.
struct ProblemSpec {
  Loss loss;
  RegularizerKind regularizer = RegularizerKind::kL1;
  //! Overall regularization level.
  double lambda = 0.0;
  //! Optional multipliers: per coordinate for l1/l2, per group for group_l21. Empty means all ones.
  std::vector<double> weights;
  //! Partition of the coordinates for group_l21 (0-based indices).
  std::vector<std::vector<std::size_t>> groups;
  //! Augmented-Lagrangian penalty.
  double mu = 0.1;
  //! Coordinate 0 is an all-ones intercept column and is never penalized.
  bool intercept = false;

  Task task() const noexcept { return loss.task(); }
  //! Checks parameter domains and, for group_l21, that `groups` partitions 0..n-1.
  void validate(std::size_t n) const;
  //! Effective regularization weight of coordinate j (l1/l2) including the intercept rule.
  double coordinate_lambda(std::size_t j) const;
  //! Effective weight of group g (group_l21).
  double group_lambda(std::size_t g) const;
  //! R(x).
  double regularizer_value(std::span<const double> x) const;
};

//! One worker's contiguous row block (A_d, b_d).
struct DesignShard {
  int index = 1;  //!< 1-based shard index d.
  Matrix matrix;
  std::vector<double> response;

  std::size_t rows() const { return matrix.rows(); }
  std::size_t cols() const { return matrix.cols(); }
};

//! Throws DimensionError (naming the shard) unless all shards have `cols` columns and matching responses.
void validate_shards(std::span<const DesignShard> shards, Task task);
std::size_t total_rows(std::span<const DesignShard> shards);

//! The ADMM triple w = (x, r, u) with r and u stored per shard.
struct SolverState {
  std::vector<double> x;
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> u;
  double eta = 0.0;
  std::vector<double> eta_d;
  int k = 0;

  //! Concatenation (x, r_1..r_D, u_1..u_D).
  std::vector<double> flatten() const;
};

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double rel_w_change = 0.0;
  double h_diff_sq = 0.0;
  double wall_ms = 0.0;
};

struct FitResult {
  std::vector<double> coefficients;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceRecord> trace;
  double lambda_used = 0.0;
  double eta = 0.0;
  //! Number of iterated variables: m + n for the partition-insensitive solver, (2D+1) n for consensus.
  std::size_t variable_count = 0;
  double wall_ms = 0.0;
  //! Final (r, u) per shard; filled only when the solver was asked to collect state.
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> u;
};

//! Sum of per-sample losses at x, in global row order.
double loss_sum(const ProblemSpec& spec, std::span<const DesignShard> shards, std::span<const double> x);
//! loss_sum + R(x).
double objective_value(const ProblemSpec& spec, std::span<const DesignShard> shards, std::span<const double> x);

}  // namespace pipadmm

#endif  // PIPADMM_CORE_TYPES_HPP_
