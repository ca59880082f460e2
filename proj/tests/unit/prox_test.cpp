#include "pipadmm/prox.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pipadmm/error.hpp"
#include "test_support.hpp"

namespace pipadmm {
namespace {

using V = std::vector<double>;

TEST(SoftThreshold, Examples) {
  EXPECT_EQ(prox::soft_threshold(V{0, 0}, 5.0), (V{0, 0}));
  EXPECT_EQ(prox::soft_threshold(V{2, -3}, 1.0), (V{1, -2}));
  EXPECT_EQ(prox::soft_threshold(V{0.5}, 1.0), (V{0}));
  EXPECT_THROW(prox::soft_threshold(V{1}, -0.1), ArgumentError);
  EXPECT_EQ(prox::soft_threshold(V{2, 2}, V{1, 3}), (V{1, 0}));
}

TEST(SoftThreshold, ShrinksTowardZero) {
  std::mt19937_64 gen(9);
  const auto a = testing::random_vector(gen, 200, -5, 5);
  const auto out = prox::soft_threshold(a, 1.3);
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_LE(std::abs(out[j]), std::abs(a[j]));
    EXPECT_TRUE(out[j] == 0.0 || std::signbit(out[j]) == std::signbit(a[j]));
  }
}

TEST(GroupSoftThreshold, Examples) {
  const auto out = prox::group_soft_threshold(V{3, 4}, V{1}, {{0, 1}});
  EXPECT_NEAR(out[0], 2.4, 1e-15);
  EXPECT_NEAR(out[1], 3.2, 1e-15);
  EXPECT_EQ(prox::group_soft_threshold(V{0.3, 0.4}, V{1}, {{0, 1}}), (V{0, 0}));
  EXPECT_EQ(prox::group_soft_threshold(V{0, 0}, V{0}, {{0, 1}}), (V{0, 0}));
  EXPECT_THROW(prox::group_soft_threshold(V{1, 2}, V{1, 1}, {{0, 1}, {1}}), ArgumentError);
  EXPECT_THROW(prox::group_soft_threshold(V{1, 2}, V{1}, {{0}}), ArgumentError);
}

TEST(GroupSoftThreshold, SingletonGroupsEqualSoftThreshold) {
  std::mt19937_64 gen(10);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < 30; ++j) groups.push_back({j});
  for (int t = 0; t < 20; ++t) {
    const auto a = testing::random_vector(gen, 30, -3, 3);
    const auto k = testing::random_vector(gen, 30, 0, 2);
    EXPECT_LE(testing::inf_diff(prox::group_soft_threshold(a, k, groups), prox::soft_threshold(a, k)), 1e-14);
  }
}

TEST(RidgeProx, Examples) {
  EXPECT_EQ(prox::ridge_prox(V{1.5, -2}, 0.0, 3.0), (V{1.5, -2}));
  EXPECT_EQ(prox::ridge_prox(V{1}, 1.0, 2.0), (V{0.5}));
  EXPECT_EQ(prox::ridge_prox(V{2, -2}, 1.0, 2.0), (V{1, -1}));
  EXPECT_THROW(prox::ridge_prox(V{1}, 1.0, 0.0), ArgumentError);
}

TEST(ProxRegularizer, Examples) {
  ProblemSpec spec;
  EXPECT_EQ(prox::prox_regularizer(spec, V{1.5, -0.2}, 2.0), (V{1.5, -0.2}));
  spec.lambda = 1.0;
  EXPECT_EQ(prox::prox_regularizer(spec, V{1.5, -0.2}, 2.0), (V{1, 0}));
  spec.intercept = true;
  EXPECT_EQ(prox::prox_regularizer(spec, V{0.2, -0.2}, 2.0), (V{0.2, 0}));
}

TEST(ProxRegularizer, GroupSingletonsAgreeWithL1) {
  std::mt19937_64 gen(11);
  ProblemSpec l1;
  l1.lambda = 0.7;
  ProblemSpec group = l1;
  group.regularizer = RegularizerKind::kGroupL21;
  for (std::size_t j = 0; j < 15; ++j) group.groups.push_back({j});
  for (int t = 0; t < 100; ++t) {
    const auto a = testing::random_vector(gen, 15, -2, 2);
    EXPECT_LE(testing::inf_diff(prox::prox_regularizer(group, a, 1.7), prox::prox_regularizer(l1, a, 1.7)), 1e-14);
  }
}

TEST(ProxRegularizer, MinimizesItsObjective) {
  // Each prox output must beat nearby perturbations on R(c) + gamma/2 ||c - a||^2.
  std::mt19937_64 gen(12);
  for (auto kind : {RegularizerKind::kL1, RegularizerKind::kL2Squared, RegularizerKind::kGroupL21}) {
    ProblemSpec spec;
    spec.regularizer = kind;
    spec.lambda = 0.8;
    spec.groups = {{0, 1, 2}, {3, 4}, {5}};
    const double gamma = 1.3;
    for (int t = 0; t < 30; ++t) {
      const auto a = testing::random_vector(gen, 6, -2, 2);
      const auto c = prox::prox_regularizer(spec, a, gamma);
      auto f = [&](const V& z) {
        double q = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) q += (z[j] - a[j]) * (z[j] - a[j]);
        return spec.regularizer_value(z) + 0.5 * gamma * q;
      };
      const double best = f(c);
      for (int p = 0; p < 50; ++p) {
        auto z = c;
        const auto d = testing::random_vector(gen, 6, -1e-3, 1e-3);
        for (std::size_t j = 0; j < 6; ++j) z[j] += d[j];
        EXPECT_GE(f(z), best - 1e-12);
      }
    }
  }
}

TEST(ProxLossScalar, Examples) {
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::least_squares(), 3.0, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::svr(0.5), 0.3, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::quantile(0.5), 2.0, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::quantile(0.5), 0.3, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::hinge(), 2.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::hinge(), -1.0, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(Loss::hinge(), 0.5, 1.0), 0.0);
  EXPECT_THROW(prox::prox_loss_scalar(Loss::logistic(), 0.5, 1.0), UnsupportedError);
  EXPECT_THROW(prox::prox_loss_scalar(Loss::least_squares(), 0.5, 0.0), ArgumentError);
}

TEST(ProxLossScalar, ExamplesAgreeWithOracle) {
  EXPECT_NEAR(testing::brute_prox(Loss::quantile(0.5), 2.0, 1.0), 1.5, 1e-6);
  EXPECT_NEAR(testing::brute_prox(Loss::quantile(0.5), 0.3, 1.0), 0.0, 1e-6);
  EXPECT_NEAR(testing::brute_prox(Loss::hinge(), 2.0, 1.0), 1.0, 1e-6);
  EXPECT_NEAR(testing::brute_prox(Loss::hinge(), 0.5, 1.0), 0.0, 1e-6);
}

TEST(ProxLossScalar, SvrPiecewiseStructure) {
  const Loss svr = Loss::svr(0.5);
  const double mu = 2.0;  // tube 0.5, middle band up to 1.0
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(svr, 0.4, mu), 0.4);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(svr, -0.8, mu), -0.5);
  EXPECT_DOUBLE_EQ(prox::prox_loss_scalar(svr, 1.7, mu), 1.2);
  for (double a : {0.4, -0.8, 0.95, 1.7, -3.0}) {
    EXPECT_NEAR(prox::prox_loss_scalar(svr, a, mu), testing::brute_prox(svr, a, mu), 1e-6) << a;
  }
}

TEST(ProxLossScalar, FirmlyNonexpansive) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> ua(-10, 10), um(0.1, 10);
  for (auto loss : {Loss::least_squares(), Loss::quantile(0.2), Loss::huber(1.0), Loss::svr(0.3), Loss::hinge(),
                    Loss::squared_hinge()}) {
    for (int t = 0; t < 300; ++t) {
      const double a1 = ua(gen), a2 = ua(gen), mu = um(gen);
      const double p1 = prox::prox_loss_scalar(loss, a1, mu), p2 = prox::prox_loss_scalar(loss, a2, mu);
      EXPECT_LE(std::abs(p1 - p2), std::abs(a1 - a2) + 1e-12);
      EXPECT_LE((p1 - p2) * (p1 - p2), (p1 - p2) * (a1 - a2) + 1e-12);
    }
  }
}

TEST(RegressionRUpdate, Examples) {
  EXPECT_DOUBLE_EQ(prox::regression_r_update(Loss::least_squares(), 1, 1, 0, 1), 1.0);
  for (auto loss : {Loss::least_squares(), Loss::quantile(0.3), Loss::huber(1.0), Loss::svr(0.2)}) {
    EXPECT_DOUBLE_EQ(prox::regression_r_update(loss, 2.5, 2.5, 0.0, 0.7), 2.5);
  }
  EXPECT_NEAR(prox::regression_r_update(Loss::quantile(0.5), 3, 1, 0, 1),
              3.0 - testing::brute_prox(Loss::quantile(0.5), 2.0, 1.0), 1e-6);
  EXPECT_NEAR(prox::regression_r_update(Loss::quantile(0.5), 3, 1, 0, 1), 1.5, 1e-6);
}

TEST(ClassificationRUpdate, Examples) {
  EXPECT_DOUBLE_EQ(prox::classification_r_update(Loss::hinge(), 1, 1, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(prox::classification_r_update(Loss::hinge(), 1, 3, 0, 1), 3.0);
  EXPECT_NEAR(testing::brute_prox(Loss::hinge(), -2.0, 1.0), -2.0, 1e-6);
  EXPECT_DOUBLE_EQ(prox::classification_r_update(Loss::squared_hinge(), -1, -3, 0, 1), -3.0);
  EXPECT_NEAR(testing::brute_prox(Loss::squared_hinge(), -2.0, 1.0), -2.0, 1e-6);
  EXPECT_THROW(prox::classification_r_update(Loss::hinge(), 0.5, 1, 0, 1), ArgumentError);
}

TEST(ClassificationRUpdate, SolvesTheRowSubproblem) {
  // r minimizes L(1 - b r) + mu/2 (r - (q - u/mu))^2; check against a direct oracle in r.
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> uq(-3, 3), um(0.2, 5);
  for (auto loss : {Loss::hinge(), Loss::squared_hinge()}) {
    for (int t = 0; t < 200; ++t) {
      const double b = t % 2 ? 1.0 : -1.0, q = uq(gen), u = uq(gen), mu = um(gen);
      const double anchor = q - u / mu;
      auto f = [&](double r) { return loss.scalar(1.0 - b * r) + 0.5 * mu * (r - anchor) * (r - anchor); };
      // The minimizer lies between the anchor and the zero set of the loss, which contains r = b.
      const double oracle = testing::brute_minimize(f, std::min(anchor, b) - 1.0, std::max(anchor, b) + 1.0);
      EXPECT_NEAR(prox::classification_r_update(loss, b, q, u, mu), oracle, 1e-5);
    }
  }
}

TEST(LogisticDerivs, Examples) {
  const auto d0 = prox::logistic_derivs(0.0, 1.0);
  EXPECT_DOUBLE_EQ(d0.first, -0.5);
  EXPECT_DOUBLE_EQ(d0.second, 0.25);
  const auto big = prox::logistic_derivs(800.0, 1.0);
  EXPECT_EQ(big.first, -0.0);
  EXPECT_GE(big.second, 0.0);
  EXPECT_LT(big.second, 1e-300);
  const auto neg = prox::logistic_derivs(-30.0, 1.0);
  EXPECT_NEAR(neg.first, -1.0, 1e-12);
  const double e30 = std::exp(-30.0);
  EXPECT_NEAR(neg.second / e30, 1.0 / ((1 + e30) * (1 + e30)), 1e-12);
  const auto huge_neg = prox::logistic_derivs(-800.0, -1.0);
  EXPECT_TRUE(std::isfinite(huge_neg.first));
  EXPECT_TRUE(std::isfinite(huge_neg.second));
}

TEST(LogisticNewton, Examples) {
  const auto out = prox::logistic_r_newton(1.0, 0.0, 0.0, 1.0, 0.0);
  const double oracle = testing::bisect([](double r) { return r - 1.0 / (std::exp(r) + 1.0); }, 0.0, 1.0);
  EXPECT_NEAR(out.r, oracle, 1e-10);
  // Root of r = 1 / (e^r + 1) evaluated to 30 digits.
  EXPECT_NEAR(out.r, 0.401058137541547, 1e-12);

  const auto sat = prox::logistic_r_newton(1.0, 100.0, 0.0, 1.0, 0.0);
  // The exact root is 100 + O(e^-100), which rounds to 100 in double precision.
  EXPECT_GE(sat.r, 100.0);
  EXPECT_LT(sat.r, 101.0);
  EXPECT_LE(std::abs(prox::logistic_stationarity(sat.r, 1.0, 100.0, 1.0)), 1e-10);

  for (double anchor : {-5.0, -0.3, 0.0, 2.0, 40.0}) {
    const auto pos = prox::logistic_r_newton(1.0, anchor, 0.0, 0.7, 0.0);
    const auto neg = prox::logistic_r_newton(-1.0, -anchor, 0.0, 0.7, 0.0);
    EXPECT_NEAR(neg.r, -pos.r, 1e-10);
  }
}

TEST(LogisticNewton, BisectionFallbackStillMeetsTolerance) {
  prox::NewtonOptions starved;
  starved.max_iter = 1;
  const auto out = prox::logistic_r_newton(1.0, 3.0, 0.5, 0.01, -500.0, starved);
  EXPECT_TRUE(out.used_bisection);
  EXPECT_LE(std::abs(prox::logistic_stationarity(out.r, 1.0, 3.0 - 0.5 / 0.01, 0.01)), 1e-10);
}

TEST(LogisticNewton, RandomDrawsMatchBisectionOracle) {
  std::mt19937_64 gen(15);
  std::uniform_real_distribution<double> ua(-20, 20), um(0.01, 10), uw(-30, 30);
  for (int t = 0; t < 500; ++t) {
    const double b = t % 2 ? 1.0 : -1.0, anchor = ua(gen), mu = um(gen);
    const auto out = prox::logistic_r_newton(b, anchor, 0.0, mu, uw(gen));
    EXPECT_LE(std::abs(out.residual), 1e-10);
    EXPECT_LE(std::abs(prox::logistic_stationarity(out.r, b, anchor, mu)), 1e-10);
    const double oracle = testing::bisect([&](double r) { return prox::logistic_stationarity(r, b, anchor, mu); },
                                          anchor - 1.0 / mu - 1.0, anchor + 1.0 / mu + 1.0);
    EXPECT_NEAR(out.r, oracle, 1e-8);
  }
}

}  // namespace
}  // namespace pipadmm
