#ifndef PIPADMM_PROX_HPP_
#define PIPADMM_PROX_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "pipadmm/core_types.hpp"

namespace pipadmm::prox {

// ---------------------------------------------------------------------------
// Regularizer proximal operators: argmin_c R(c) + (gamma/2) ||c - a||^2.
// ---------------------------------------------------------------------------

//! sign(a_j) * max(|a_j| - kappa, 0). Throws ArgumentError for negative kappa.
std::vector<double> soft_threshold(std::span<const double> a, double kappa);
//! Per-coordinate thresholds; kappa.size() must equal a.size().
std::vector<double> soft_threshold(std::span<const double> a, std::span<const double> kappa);

//! Scales each group block of `a` by max(||a_g|| - kappa_g, 0) / ||a_g||.
//! `groups` must partition 0..a.size()-1; kappa holds one threshold per group.
std::vector<double> group_soft_threshold(std::span<const double> a, std::span<const double> kappa,
                                         const std::vector<std::vector<std::size_t>>& groups);

//! gamma a_j / (2 lambda_j + gamma), the prox of lambda_j c^2.
std::vector<double> ridge_prox(std::span<const double> a, double lambda, double gamma);
std::vector<double> ridge_prox(std::span<const double> a, std::span<const double> lambda, double gamma);

//! Dispatches on spec.regularizer with thresholds lambda_j / gamma. Unpenalized coordinates pass through.
std::vector<double> prox_regularizer(const ProblemSpec& spec, std::span<const double> a, double gamma);

// ---------------------------------------------------------------------------
// Scalar loss proximal operators: argmin_c L(c) + (mu/2) (c - a)^2.
// ---------------------------------------------------------------------------

//! Closed-form minimizer for every loss except logistic, which throws UnsupportedError
//! (use logistic_r_newton). Closed forms, with s = sign(a):
//!   least squares  L = c^2/2:             mu a / (1 + mu)
//!   quantile       L = c (tau - 1{c<0}):  a - tau/mu if a > tau/mu; a + (1-tau)/mu if a < -(1-tau)/mu; else 0
//!   huber          quadratic on |c|<=d:   mu a / (1 + mu) if |a| <= d (1 + mu)/mu; else a - s d/mu
//!   svr            (|c| - eps)_+:         a if |a| <= eps; s eps if |a| <= eps + 1/mu; else a - s/mu
//!   hinge          max(0, c):             a if a < 0; 0 if a <= 1/mu; else a - 1/mu
//!   squared hinge  max(0, c)^2 / 2:       a if a <= 0; else mu a / (1 + mu)
double prox_loss_scalar(const Loss& loss, double a, double mu);

//! r = b - prox(b - q + u/mu): the regression r-update for one row.
double regression_r_update(const Loss& loss, double b, double q, double u, double mu);

//! r = b - b prox(1 - b q + b u / mu): the margin-loss classification r-update. b must be +-1.
double classification_r_update(const Loss& loss, double b, double q, double u, double mu);

struct LogisticDerivatives {
  double first;   //!< d/dr log(1 + exp(-r b)) = -b / (exp(r b) + 1)
  double second;  //!< exp(r b) / (exp(r b) + 1)^2
};

//! Derivatives of the logistic loss in r at margin r b, evaluated without overflow.
LogisticDerivatives logistic_derivs(double r, double b);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
};

struct NewtonOutcome {
  double r = 0.0;
  int iterations = 0;
  bool used_bisection = false;
  double residual = 0.0;
};

//! Solves min_r log(1 + exp(-r b)) + (mu/2) (r - (q - u/mu))^2 by damped Newton iterations started at
//! `warm_start`. Falls back to bisection on the (strictly increasing) stationarity function when Newton
//! does not reach |residual| <= tol within max_iter steps.
NewtonOutcome logistic_r_newton(double b, double q, double u, double mu, double warm_start,
                                const NewtonOptions& options = {});

//! Stationarity function of the logistic r-subproblem: -b / (exp(r b) + 1) + mu (r - anchor).
double logistic_stationarity(double r, double b, double anchor, double mu);

}  // namespace pipadmm::prox

#endif  // PIPADMM_PROX_HPP_
