#include "pipadmm/prox.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "pipadmm/error.hpp"

namespace pipadmm::prox {

namespace {

double sign(double v) { return (v > 0) - (v < 0); }

double shrink(double a, double kappa) { return sign(a) * std::max(std::abs(a) - kappa, 0.0); }

}  // namespace

std::vector<double> soft_threshold(std::span<const double> a, double kappa) {
  if (!(kappa >= 0.0)) throw ArgumentError("soft_threshold: kappa must be nonnegative");
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = shrink(a[j], kappa);
  return out;
}

std::vector<double> soft_threshold(std::span<const double> a, std::span<const double> kappa) {
  if (kappa.size() != a.size()) throw DimensionError("soft_threshold: kappa length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(kappa[j] >= 0.0)) throw ArgumentError("soft_threshold: kappa must be nonnegative");
    out[j] = shrink(a[j], kappa[j]);
  }
  return out;
}

std::vector<double> group_soft_threshold(std::span<const double> a, std::span<const double> kappa,
                                         const std::vector<std::vector<std::size_t>>& groups) {
  if (kappa.size() != groups.size()) throw DimensionError("group_soft_threshold: one kappa per group expected");
  std::vector<char> seen(a.size(), 0);
  std::size_t covered = 0;
  for (const auto& g : groups) {
    for (std::size_t j : g) {
      if (j >= a.size() || seen[j]) throw ArgumentError("group_soft_threshold: groups overlap or exceed the index set");
      seen[j] = 1;
      ++covered;
    }
  }
  if (covered != a.size()) throw ArgumentError("group_soft_threshold: groups do not cover the index set");

  std::vector<double> out(a.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!(kappa[g] >= 0.0)) throw ArgumentError("group_soft_threshold: kappa must be nonnegative");
    double sq = 0.0;
    for (std::size_t j : groups[g]) sq += a[j] * a[j];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) continue;
    const double scale = std::max(norm - kappa[g], 0.0) / norm;
    for (std::size_t j : groups[g]) out[j] = scale * a[j];
  }
  return out;
}

std::vector<double> ridge_prox(std::span<const double> a, double lambda, double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("ridge_prox: gamma must be positive");
  if (!(lambda >= 0.0)) throw ArgumentError("ridge_prox: lambda must be nonnegative");
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = gamma * a[j] / (2.0 * lambda + gamma);
  return out;
}

std::vector<double> ridge_prox(std::span<const double> a, std::span<const double> lambda, double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("ridge_prox: gamma must be positive");
  if (lambda.size() != a.size()) throw DimensionError("ridge_prox: lambda length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = gamma * a[j] / (2.0 * lambda[j] + gamma);
  return out;
}

std::vector<double> prox_regularizer(const ProblemSpec& spec, std::span<const double> a, double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("prox_regularizer: gamma must be positive");
  switch (spec.regularizer) {
    case RegularizerKind::kL1: {
      std::vector<double> kappa(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) kappa[j] = spec.coordinate_lambda(j) / gamma;
      return soft_threshold(a, kappa);
    }
    case RegularizerKind::kL2Squared: {
      std::vector<double> lambda(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) lambda[j] = spec.coordinate_lambda(j);
      return ridge_prox(a, lambda, gamma);
    }
    case RegularizerKind::kGroupL21: {
      std::vector<double> kappa(spec.groups.size());
      for (std::size_t g = 0; g < kappa.size(); ++g) kappa[g] = spec.group_lambda(g) / gamma;
      return group_soft_threshold(a, kappa, spec.groups);
    }
  }
  throw UnsupportedError("prox_regularizer: unsupported regularizer");
}

double prox_loss_scalar(const Loss& loss, double a, double mu) {
  if (!(mu > 0.0)) throw ArgumentError("prox_loss_scalar: mu must be positive");
  const double inv = 1.0 / mu;
  switch (loss.kind) {
    case LossKind::kLeastSquares:
      return mu * a / (1.0 + mu);
    case LossKind::kQuantile: {
      const double tau = loss.param;
      if (a > tau * inv) return a - tau * inv;
      if (a < -(1.0 - tau) * inv) return a + (1.0 - tau) * inv;
      return 0.0;
    }
    case LossKind::kHuber: {
      const double delta = loss.param;
      if (std::abs(a) <= delta * (1.0 + mu) * inv) return mu * a / (1.0 + mu);
      return a - sign(a) * delta * inv;
    }
    case LossKind::kSvr: {
      // Inside the tube the loss is flat, so the prox is the identity; on the shoulder
      // the minimizer sticks to the tube edge; beyond it the linear part shifts by 1/mu.
      const double eps = loss.param;
      const double mag = std::abs(a);
      if (mag <= eps) return a;
      if (mag <= eps + inv) return sign(a) * eps;
      return sign(a) * (mag - inv);
    }
    case LossKind::kHinge:
      if (a < 0.0) return a;
      if (a <= inv) return 0.0;
      return a - inv;
    case LossKind::kSquaredHinge:
      return a <= 0.0 ? a : mu * a / (1.0 + mu);
    case LossKind::kLogistic:
      throw UnsupportedError("prox_loss_scalar: logistic loss has no closed form; use logistic_r_newton");
  }
  throw UnsupportedError("prox_loss_scalar: unsupported loss");
}

double regression_r_update(const Loss& loss, double b, double q, double u, double mu) {
  return b - prox_loss_scalar(loss, b - q + u / mu, mu);
}

double classification_r_update(const Loss& loss, double b, double q, double u, double mu) {
  if (b != 1.0 && b != -1.0) throw ArgumentError("classification_r_update: label must be -1 or +1");
  return b - b * prox_loss_scalar(loss, 1.0 - b * q + b * u / mu, mu);
}

LogisticDerivatives logistic_derivs(double r, double b) {
  const double t = r * b;
  // s = 1 / (exp(t) + 1); second = exp(t) / (exp(t) + 1)^2, both written with exp(-|t|).
  const double e = std::exp(-std::abs(t));
  const double denom = 1.0 + e;
  const double s = t >= 0 ? e / denom : 1.0 / denom;
  const double second = e / (denom * denom);
  return {-b * s, second};
}

double logistic_stationarity(double r, double b, double anchor, double mu) {
  return logistic_derivs(r, b).first + mu * (r - anchor);
}

namespace {

double logistic_subproblem(double r, double b, double anchor, double mu) {
  const double t = r * b;
  const double softplus = t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
  return softplus + 0.5 * mu * (r - anchor) * (r - anchor);
}

}  // namespace

NewtonOutcome logistic_r_newton(double b, double q, double u, double mu, double warm_start,
                                const NewtonOptions& options) {
  if (!(mu > 0.0)) throw ArgumentError("logistic_r_newton: mu must be positive");
  if (b != 1.0 && b != -1.0) throw ArgumentError("logistic_r_newton: label must be -1 or +1");
  const double anchor = q - u / mu;

  NewtonOutcome out;
  double r = std::isfinite(warm_start) ? warm_start : anchor;
  double phi = logistic_stationarity(r, b, anchor, mu);
  for (int l = 0; l < options.max_iter && std::abs(phi) > options.tol; ++l) {
    const auto d = logistic_derivs(r, b);
    // Newton step on the stationarity equation:
    // r+ = [mu anchor + r L'' - L'] / (L'' + mu) = r - phi / (L'' + mu).
    double step = -phi / (d.second + mu);
    const double f0 = logistic_subproblem(r, b, anchor, mu);
    double candidate = r + step;
    for (int halving = 0; halving < 20 && logistic_subproblem(candidate, b, anchor, mu) > f0; ++halving) {
      step *= 0.5;
      candidate = r + step;
    }
    r = candidate;
    phi = logistic_stationarity(r, b, anchor, mu);
    out.iterations = l + 1;
  }

  if (!(std::abs(phi) <= options.tol)) {
    spdlog::debug("logistic_r_newton: no convergence after {} steps (residual {:.3e}), bisecting", options.max_iter,
                  phi);
    // The loss gradient lies in (-1, 0) * b, so the root sits between anchor and anchor + b/mu.
    double lo = b > 0 ? anchor : anchor - 1.0 / mu;
    double hi = b > 0 ? anchor + 1.0 / mu : anchor;
    r = 0.5 * (lo + hi);
    phi = logistic_stationarity(r, b, anchor, mu);
    while (std::abs(phi) > options.tol) {
      if (phi > 0) hi = r; else lo = r;
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      r = mid;
      phi = logistic_stationarity(r, b, anchor, mu);
    }
    out.used_bisection = true;
  }
  out.r = r;
  out.residual = phi;
  return out;
}

}  // namespace pipadmm::prox
