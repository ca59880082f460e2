#include "pipadmm/model_select.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "pipadmm/error.hpp"

namespace pipadmm {

double hbic_penalty(std::size_t m, std::size_t n) {
  if (m < 3) throw ArgumentError("hbic: need m >= 3, got " + std::to_string(m));
  if (n < 2) throw ArgumentError("hbic: need n >= 2, got " + std::to_string(n));
  const double md = static_cast<double>(m);
  return std::log(std::log(md)) / md * 6.0 * std::log(static_cast<double>(n));
}

double hbic(double loss_sum, std::size_t support, std::size_t m, std::size_t n) {
  const double penalty = hbic_penalty(m, n);
  if (!(loss_sum > 0.0)) {
    spdlog::warn("hbic: loss sum {} is not positive; clamping to machine epsilon", loss_sum);
    loss_sum = std::numeric_limits<double>::epsilon();
  }
  return std::log(loss_sum) + static_cast<double>(support) * penalty;
}

std::size_t support_size(std::span<const double> x, double zero_tol, bool intercept) {
  if (zero_tol < 0.0) throw ArgumentError("support_size: zero_tol must be nonnegative");
  std::size_t count = 0;
  for (std::size_t j = intercept ? 1 : 0; j < x.size(); ++j) {
    if (std::abs(x[j]) > zero_tol) ++count;
  }
  return count;
}

double lambda_max(const ProblemSpec& spec, std::span<const DesignShard> shards) {
  validate_shards(shards, spec.task());
  const std::size_t n = shards.front().cols();
  std::vector<double> grad(n, 0.0);
  std::vector<double> part(n);
  for (const auto& shard : shards) {
    std::vector<double> g0(shard.rows());
    for (std::size_t i = 0; i < g0.size(); ++i) g0[i] = spec.loss.sample_gradient(0.0, shard.response[i]);
    shard.matrix.multiply_transpose(g0, part);
    for (std::size_t j = 0; j < n; ++j) grad[j] += part[j];
  }
  double best = 0.0;
  if (spec.regularizer == RegularizerKind::kGroupL21) {
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      const bool intercept_only = spec.intercept && spec.groups[g].size() == 1 && spec.groups[g][0] == 0;
      const double w = intercept_only ? 0.0 : (spec.weights.empty() ? 1.0 : spec.weights[g]);
      if (w <= 0.0) continue;
      double norm = 0.0;
      for (std::size_t j : spec.groups[g]) norm += grad[j] * grad[j];
      best = std::max(best, std::sqrt(norm) / w);
    }
    return best;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (spec.intercept && j == 0) continue;
    const double w = spec.weights.empty() ? 1.0 : spec.weights[j];
    if (w <= 0.0) continue;
    best = std::max(best, std::abs(grad[j]) / w);
  }
  return best;
}

std::vector<double> lambda_grid(double lambda_max_value, int grid_size, double ratio) {
  if (grid_size < 2) throw ArgumentError("lambda_grid: grid_size must be at least 2");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("lambda_grid: ratio must lie in (0, 1)");
  if (!(lambda_max_value > 0.0) || !std::isfinite(lambda_max_value)) {
    throw ArgumentError("lambda_grid: lambda_max must be positive and finite");
  }
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  const double log_hi = std::log(lambda_max_value);
  const double log_lo = std::log(lambda_max_value * ratio);
  for (int i = 0; i < grid_size; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    grid[static_cast<std::size_t>(i)] = std::exp(log_hi + t * (log_lo - log_hi));
  }
  grid.front() = lambda_max_value;
  return grid;
}

PathResult lambda_path(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config,
                       const PathOptions& options) {
  validate_shards(shards, spec.task());
  const std::size_t m = total_rows(shards);
  const std::size_t n = shards.front().cols();
  PathResult path;
  path.lambdas = lambda_grid(lambda_max(spec, shards), options.grid_size, options.ratio);

  SolverConfig cfg = config;
  ProblemSpec fit_spec = spec;
  for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
    fit_spec.lambda = path.lambdas[i];
    FitResult fit;
    bool ok = true;
    try {
      fit = solve(fit_spec, shards, cfg, options.cluster);
    } catch (const ClusterError& e) {
      spdlog::warn("lambda_path: fit {} (lambda={}) failed: {}", i, path.lambdas[i], e.what());
      ok = false;
    } catch (const InternalError& e) {
      spdlog::warn("lambda_path: fit {} (lambda={}) failed: {}", i, path.lambdas[i], e.what());
      ok = false;
    }
    double loss = std::numeric_limits<double>::quiet_NaN();
    double objective = loss;
    double score = loss;
    std::size_t support = 0;
    if (ok) {
      loss = loss_sum(fit_spec, shards, fit.coefficients);
      objective = loss + fit_spec.regularizer_value(fit.coefficients);
      support = support_size(fit.coefficients, options.zero_tol, spec.intercept);
      score = hbic(loss, support, m, n);
      ok = std::isfinite(score);
      if (options.warm_start) cfg.initial_x = fit.coefficients;
    }
    path.fits.push_back(std::move(fit));
    path.hbic.push_back(ok ? score : std::numeric_limits<double>::quiet_NaN());
    path.support.push_back(support);
    path.loss_sums.push_back(loss);
    path.objectives.push_back(objective);
    path.valid.push_back(ok);
  }

  bool any = false;
  for (std::size_t i = 0; i < path.hbic.size(); ++i) {
    if (!path.valid[i]) continue;
    if (!any || path.hbic[i] < path.hbic[path.selected_index]) path.selected_index = i;
    any = true;
  }
  if (!any) throw Error("lambda_path: every fit on the grid failed");
  return path;
}

}  // namespace pipadmm
