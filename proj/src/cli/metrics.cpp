#include "pipadmm/cli/metrics.hpp"

#include <cmath>
#include <string>

#include "pipadmm/error.hpp"

namespace pipadmm::cli {

namespace {

std::vector<double> predict(std::span<const double> coefficients, const Dataset& data) {
  if (coefficients.size() != data.cols()) {
    throw DimensionError("evaluate: model has " + std::to_string(coefficients.size()) + " coefficients, data has " +
                         std::to_string(data.cols()) + " columns");
  }
  std::vector<double> q(data.rows());
  data.matrix.multiply(coefficients, q);
  return q;
}

}  // namespace

double accuracy_pct(std::span<const double> coefficients, const Dataset& data) {
  const auto q = predict(coefficients, data);
  if (q.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double sign = q[i] >= 0.0 ? 1.0 : -1.0;
    if (sign == data.response[i]) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(q.size());
}

Metrics evaluate(std::span<const double> coefficients, const Dataset& data, Task task, const EvaluateOptions& options) {
  const auto q = predict(coefficients, data);
  Metrics out;
  const std::size_t first = options.intercept ? 1 : 0;
  const std::size_t counted = coefficients.size() > first ? coefficients.size() - first : 0;
  std::size_t zeros = 0;
  for (std::size_t j = first; j < coefficients.size(); ++j) {
    if (std::abs(coefficients[j]) <= options.zero_tol) ++zeros;
  }
  out.sparsity_pct = counted == 0 ? 0.0 : 100.0 * static_cast<double>(zeros) / static_cast<double>(counted);

  if (options.true_support) {
    std::vector<bool> truth(coefficients.size(), false);
    for (std::size_t j : *options.true_support) {
      if (j >= coefficients.size()) throw DimensionError("evaluate: true support index out of range");
      truth[j] = true;
    }
    std::size_t fn = 0, fp = 0;
    for (std::size_t j = first; j < coefficients.size(); ++j) {
      const bool nonzero = std::abs(coefficients[j]) > options.zero_tol;
      if (truth[j] && !nonzero) ++fn;
      if (!truth[j] && nonzero) ++fp;
    }
    out.fn_count = fn;
    out.fp_count = fp;
  }

  if (task == Task::kClassification) {
    out.train_accuracy = accuracy_pct(coefficients, data);
  } else if (!q.empty()) {
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double e = data.response[i] - q[i];
      abs_sum += std::abs(e);
      sq_sum += e * e;
    }
    out.mae = abs_sum / static_cast<double>(q.size());
    out.mse = sq_sum / static_cast<double>(q.size());
  }
  return out;
}

}  // namespace pipadmm::cli
