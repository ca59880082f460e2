#include "pipadmm/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pipadmm/error.hpp"

namespace pipadmm {

namespace {

double softplus_neg(double t) {
  // log(1 + exp(-t)) without overflow.
  return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

double sigmoid_neg(double t) {
  // 1 / (1 + exp(t))
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

}  // namespace

Task Loss::task() const noexcept {
  switch (kind) {
    case LossKind::kHinge:
    case LossKind::kSquaredHinge:
    case LossKind::kLogistic:
      return Task::kClassification;
    default:
      return Task::kRegression;
  }
}

double Loss::scalar(double c) const {
  switch (kind) {
    case LossKind::kLeastSquares:
      return 0.5 * c * c;
    case LossKind::kQuantile:
      return c * (param - (c < 0 ? 1.0 : 0.0));
    case LossKind::kHuber:
      return std::abs(c) <= param ? 0.5 * c * c : param * std::abs(c) - 0.5 * param * param;
    case LossKind::kSvr:
      return std::max(0.0, std::abs(c) - param);
    case LossKind::kHinge:
      return std::max(0.0, c);
    case LossKind::kSquaredHinge: {
      const double p = std::max(0.0, c);
      return 0.5 * p * p;
    }
    case LossKind::kLogistic:
      return softplus_neg(c);
  }
  return 0.0;
}

double Loss::sample(double q, double b) const {
  switch (kind) {
    case LossKind::kHinge:
    case LossKind::kSquaredHinge:
      return scalar(1.0 - b * q);
    case LossKind::kLogistic:
      return scalar(b * q);
    default:
      return scalar(b - q);
  }
}

double Loss::sample_gradient(double q, double b) const {
  switch (kind) {
    case LossKind::kLeastSquares:
      return -(b - q);
    case LossKind::kQuantile: {
      const double c = b - q;
      if (c > 0) return -param;
      if (c < 0) return 1.0 - param;
      return 0.0;
    }
    case LossKind::kHuber:
      return -std::clamp(b - q, -param, param);
    case LossKind::kSvr: {
      const double c = b - q;
      if (std::abs(c) <= param) return 0.0;
      return c > 0 ? -1.0 : 1.0;
    }
    case LossKind::kHinge:
      return 1.0 - b * q > 0 ? -b : 0.0;
    case LossKind::kSquaredHinge:
      return -b * std::max(0.0, 1.0 - b * q);
    case LossKind::kLogistic:
      return -b * sigmoid_neg(b * q);
  }
  return 0.0;
}

void Loss::validate() const {
  switch (kind) {
    case LossKind::kQuantile:
      if (!(param > 0.0 && param < 1.0)) throw ArgumentError("quantile loss: tau must lie in (0,1)");
      break;
    case LossKind::kHuber:
      if (!(param > 0.0)) throw ArgumentError("huber loss: delta must be positive");
      break;
    case LossKind::kSvr:
      if (!(param >= 0.0)) throw ArgumentError("svr loss: epsilon must be nonnegative");
      break;
    default:
      break;
  }
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kLeastSquares: return "least_squares";
    case LossKind::kQuantile: return "quantile";
    case LossKind::kHuber: return "huber";
    case LossKind::kSvr: return "svr";
    case LossKind::kHinge: return "hinge";
    case LossKind::kSquaredHinge: return "squared_hinge";
    case LossKind::kLogistic: return "logistic";
  }
  return "unknown";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "least_squares" || name == "ls" || name == "lasso") return LossKind::kLeastSquares;
  if (name == "quantile") return LossKind::kQuantile;
  if (name == "huber") return LossKind::kHuber;
  if (name == "svr") return LossKind::kSvr;
  if (name == "hinge" || name == "svm") return LossKind::kHinge;
  if (name == "squared_hinge") return LossKind::kSquaredHinge;
  if (name == "logistic") return LossKind::kLogistic;
  throw ArgumentError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::kL1: return "l1";
    case RegularizerKind::kL2Squared: return "l2";
    case RegularizerKind::kGroupL21: return "group";
  }
  return "unknown";
}

RegularizerKind regularizer_kind_from_string(std::string_view name) {
  if (name == "l1") return RegularizerKind::kL1;
  if (name == "l2" || name == "l2_squared") return RegularizerKind::kL2Squared;
  if (name == "group" || name == "group_l21") return RegularizerKind::kGroupL21;
  throw ArgumentError("unknown regularizer '" + std::string(name) + "'");
}

void ProblemSpec::validate(std::size_t n) const {
  loss.validate();
  if (!(mu > 0.0)) throw ArgumentError("mu must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be finite and nonnegative");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ArgumentError("regularization weights must be nonnegative");
  }
  if (regularizer == RegularizerKind::kGroupL21) {
    if (!weights.empty() && weights.size() != groups.size()) {
      throw DimensionError("group weights: expected one per group");
    }
    std::vector<char> seen(n, 0);
    std::size_t covered = 0;
    for (const auto& g : groups) {
      if (g.empty()) throw ArgumentError("group_l21: empty group");
      for (std::size_t j : g) {
        if (j >= n) throw ArgumentError("group_l21: index " + std::to_string(j) + " out of range");
        if (seen[j]) throw ArgumentError("group_l21: index " + std::to_string(j) + " appears in two groups");
        seen[j] = 1;
        ++covered;
      }
    }
    if (covered != n) throw ArgumentError("group_l21: groups do not cover every coordinate");
    if (intercept) {
      const auto it = std::find_if(groups.begin(), groups.end(),
                                   [](const auto& g) { return std::find(g.begin(), g.end(), 0u) != g.end(); });
      if (it->size() != 1) throw ArgumentError("group_l21: the intercept must be a singleton group");
    }
  } else if (!weights.empty() && weights.size() != n) {
    throw DimensionError("coordinate weights: expected " + std::to_string(n) + ", got " +
                         std::to_string(weights.size()));
  }
}

double ProblemSpec::coordinate_lambda(std::size_t j) const {
  if (intercept && j == 0) return 0.0;
  return weights.empty() ? lambda : lambda * weights[j];
}

double ProblemSpec::group_lambda(std::size_t g) const {
  if (intercept && groups[g].size() == 1 && groups[g][0] == 0) return 0.0;
  return weights.empty() ? lambda : lambda * weights[g];
}

double ProblemSpec::regularizer_value(std::span<const double> x) const {
  double acc = 0.0;
  switch (regularizer) {
    case RegularizerKind::kL1:
      for (std::size_t j = 0; j < x.size(); ++j) acc += coordinate_lambda(j) * std::abs(x[j]);
      break;
    case RegularizerKind::kL2Squared:
      for (std::size_t j = 0; j < x.size(); ++j) acc += coordinate_lambda(j) * x[j] * x[j];
      break;
    case RegularizerKind::kGroupL21:
      for (std::size_t g = 0; g < groups.size(); ++g) {
        double sq = 0.0;
        for (std::size_t j : groups[g]) sq += x[j] * x[j];
        acc += group_lambda(g) * std::sqrt(sq);
      }
      break;
  }
  return acc;
}

void validate_shards(std::span<const DesignShard> shards, Task task) {
  if (shards.empty()) throw ArgumentError("no shards");
  const std::size_t n = shards.front().cols();
  for (const auto& s : shards) {
    const std::string name = "shard " + std::to_string(s.index);
    if (s.cols() != n) {
      throw DimensionError(name + ": has " + std::to_string(s.cols()) + " columns, expected " + std::to_string(n));
    }
    if (s.response.size() != s.rows()) {
      throw DimensionError(name + ": response length " + std::to_string(s.response.size()) + " != rows " +
                           std::to_string(s.rows()));
    }
    for (double b : s.response) {
      if (!std::isfinite(b)) throw ArgumentError(name + ": non-finite response");
      if (task == Task::kClassification && b != 1.0 && b != -1.0) {
        throw ArgumentError(name + ": classification labels must be -1 or +1");
      }
    }
  }
}

std::size_t total_rows(std::span<const DesignShard> shards) {
  std::size_t m = 0;
  for (const auto& s : shards) m += s.rows();
  return m;
}

std::vector<double> SolverState::flatten() const {
  std::vector<double> w(x);
  for (const auto& seg : r) w.insert(w.end(), seg.begin(), seg.end());
  for (const auto& seg : u) w.insert(w.end(), seg.begin(), seg.end());
  return w;
}

double loss_sum(const ProblemSpec& spec, std::span<const DesignShard> shards, std::span<const double> x) {
  double acc = 0.0;
  for (const auto& s : shards) {
    if (s.cols() != x.size()) {
      throw DimensionError("shard " + std::to_string(s.index) + ": has " + std::to_string(s.cols()) +
                           " columns but x has length " + std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < s.rows(); ++i) acc += spec.loss.sample(s.matrix.row_dot(i, x), s.response[i]);
  }
  return acc;
}

double objective_value(const ProblemSpec& spec, std::span<const DesignShard> shards, std::span<const double> x) {
  return loss_sum(spec, shards, x) + spec.regularizer_value(x);
}

}  // namespace pipadmm
