#ifndef PIPADMM_CLI_METRICS_HPP_
#define PIPADMM_CLI_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pipadmm/core_types.hpp"
#include "pipadmm/data_io.hpp"

namespace pipadmm::cli {

struct Metrics {
  double sparsity_pct = 0.0;
  std::optional<double> train_accuracy;  //!< Percent; classification only.
  std::optional<double> test_accuracy;
  std::optional<double> mae;  //!< Regression only.
  std::optional<double> mse;
  std::optional<std::size_t> fn_count;  //!< Only with a known true support.
  std::optional<std::size_t> fp_count;
  int iterations = 0;
  double wall_ms = 0.0;
};

struct EvaluateOptions {
  //! Coordinate 0 is an intercept: excluded from sparsity and support comparisons.
  bool intercept = false;
  double zero_tol = 1e-6;
  //! True nonzero coordinates, in coefficient indexing.
  std::optional<std::vector<std::size_t>> true_support;
};

//! Percent of rows with sign(a_i^T x) == b_i, sign(0) counted as +1.
double accuracy_pct(std::span<const double> coefficients, const Dataset& data);

//! Fills sparsity, FN/FP, and either train_accuracy (classification) or mae/mse (regression) on `data`.
//! Throws DimensionError when the coefficient length differs from data.cols().
Metrics evaluate(std::span<const double> coefficients, const Dataset& data, Task task,
                 const EvaluateOptions& options = {});

}  // namespace pipadmm::cli

#endif  // PIPADMM_CLI_METRICS_HPP_
