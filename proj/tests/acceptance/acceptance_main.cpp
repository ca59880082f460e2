// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pipadmm/cli/commands.hpp"
#include "pipadmm/cli/metrics.hpp"
#include "pipadmm/cli/model_file.hpp"
#include "pipadmm/consensus.hpp"
#include "pipadmm/data_io.hpp"
#include "pipadmm/model_select.hpp"
#include "pipadmm/prox.hpp"
#include "pipadmm/solver.hpp"
#include "test_support.hpp"

namespace {

using namespace pipadmm;
using testing::inf_diff;
using testing::inf_norm;

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_inf(const std::vector<double>& a, const std::vector<double>& b) {
  return inf_diff(a, b) / std::max(1.0, inf_norm(b));
}

double cross_deviation(const std::vector<std::vector<double>>& xs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) worst = std::max(worst, rel_inf(xs[i], xs[j]));
  }
  return worst;
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("pipadmm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code == cli::kExitError) std::cerr << err.str();
  return code;
}

// ---------------------------------------------------------------------------
// 1 and 8 share the instance: gen_synthetic(seed 7, m 200, p 50), lasso, mu 0.1.
// ---------------------------------------------------------------------------

constexpr double kLambda1 = 5.0;
const std::vector<int> kWorkerCounts{1, 2, 4, 8};

double shared_eta(const Dataset& data, double mu) {
  // One eta for every D: the sum over the finest split dominates every coarser one.
  std::vector<double> eta_d;
  for (const auto& s : partition(data, 8)) eta_d.push_back(power_method_eta(s, mu, 1e-8, 1000, 1.0 + 1e-6));
  return aggregate_eta(eta_d);
}

Outcome criterion1(const fs::path& dir) {
  const auto t0 = Clock::now();
  const auto syn = gen_synthetic(7, 200, 50);
  ProblemSpec spec;
  spec.lambda = kLambda1;
  spec.mu = 0.1;
  SolverConfig cfg;
  cfg.max_iter = 100;
  cfg.tol = 1e-300;
  cfg.eta_override = shared_eta(syn.dataset, spec.mu);

  std::vector<std::vector<std::vector<double>>> iterates;
  for (int d : kWorkerCounts) {
    std::vector<std::vector<double>> xs;
    cfg.on_iterate = [&xs](const IterateView& v) { xs.emplace_back(v.x.begin(), v.x.end()); };
    (void)solve(spec, partition(syn.dataset, d), cfg);
    iterates.push_back(std::move(xs));
  }
  double worst_iter = 0.0;
  for (std::size_t t = 1; t < iterates.size(); ++t) {
    if (iterates[t].size() != iterates[0].size()) return {false, "iteration counts differ across D"};
    for (std::size_t k = 0; k < iterates[0].size(); ++k) {
      worst_iter = std::max(worst_iter, rel_inf(iterates[t][k], iterates[0][k]));
    }
  }

  // Same comparison through the command line and the model files.
  const auto data = (dir / "c1.csv").string();
  {
    std::ofstream f(data);
    write_csv(f, syn.dataset, true);
  }
  std::ostringstream eta;
  eta.precision(17);
  eta << *cfg.eta_override;
  std::vector<std::vector<double>> models;
  for (int d : kWorkerCounts) {
    const auto out = (dir / ("c1_model_" + std::to_string(d) + ".txt")).string();
    const int code = run_cli({"fit", "--data", data, "--header", "--lambda", fmt(kLambda1), "--mu", "0.1", "--eta",
                              eta.str(), "--workers", std::to_string(d), "--max-iter", "500", "--out", out});
    if (code == cli::kExitError) return {false, "fit failed for D=" + std::to_string(d)};
    models.push_back(cli::read_model_file(out).coefficients);
  }
  const double worst_model = cross_deviation(models);
  const double secs = seconds_since(t0);
  const bool pass = worst_iter <= 1e-8 && worst_model <= 1e-8 && secs < 5.0;
  return {pass, "max iterate deviation " + fmt(worst_iter) + ", model deviation " + fmt(worst_model) + ", " +
                    fmt(secs) + " s"};
}

Outcome criterion8() {
  const auto syn = gen_synthetic(7, 200, 50);
  ProblemSpec spec;
  spec.lambda = kLambda1;
  spec.mu = 0.1;
  SolverConfig cfg;
  SolverConfig pip_cfg = cfg;
  pip_cfg.eta_override = shared_eta(syn.dataset, spec.mu);
  std::vector<std::vector<double>> cons, pip;
  for (int d : kWorkerCounts) {
    const auto shards = partition(syn.dataset, d);
    cons.push_back(consensus_solve(spec, shards, cfg).coefficients);
    pip.push_back(solve(spec, shards, pip_cfg).coefficients);
  }
  const double dc = cross_deviation(cons);
  const double dp = cross_deviation(pip);
  return {dc > dp, "consensus deviation " + fmt(dc) + " vs partition-insensitive " + fmt(dp)};
}

// ---------------------------------------------------------------------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  const std::vector<Loss> losses{Loss::least_squares(), Loss::quantile(0.1), Loss::quantile(0.5), Loss::quantile(0.9),
                                 Loss::huber(0.5),      Loss::huber(1.345),  Loss::svr(0.0),      Loss::svr(0.1),
                                 Loss::svr(0.5),        Loss::hinge(),       Loss::squared_hinge()};
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> a_dist(-10.0, 10.0), mu_dist(0.1, 10.0);
  double worst = 0.0;
  for (const auto& loss : losses) {
    for (int t = 0; t < 1000; ++t) {
      const double a = a_dist(gen), mu = mu_dist(gen);
      worst = std::max(worst, std::abs(prox::prox_loss_scalar(loss, a, mu) - testing::brute_prox(loss, a, mu)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0, "max deviation " + fmt(worst) + " over 11000 draws, " + fmt(secs) + " s"};
}

Outcome criterion3() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> m_dist(2, 200), n_dist(1, 100);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = m_dist(gen), n = n_dist(gen);
    const auto a = testing::random_dense(gen, m, n);
    const auto x = testing::random_vector(gen, n);
    const auto r = testing::random_vector(gen, m);
    const auto u = testing::random_vector(gen, m);
    const double mu = std::uniform_real_distribution<double>(0.05, 5.0)(gen);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(m, 8))(gen);
    const auto sizes = d == 1 ? std::vector<std::size_t>{m} : testing::random_sizes(gen, m, d);
    const auto shards = testing::split_rows(Matrix(a), r, sizes);

    std::vector<double> sum(n, 0.0);
    std::size_t begin = 0;
    for (const auto& s : shards) {
      const auto xi = compute_xi(s, x, std::span<const double>(r.data() + begin, s.rows()),
                                 std::span<const double>(u.data() + begin, s.rows()), mu);
      for (std::size_t j = 0; j < n; ++j) sum[j] += xi[j];
      begin += s.rows();
    }
    const auto ax = testing::naive_matvec(a, x);
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = ax[i] - r[i] - u[i] / mu;
    const auto whole = testing::naive_matvec_t(a, v);
    std::vector<double> diff(n);
    for (std::size_t j = 0; j < n; ++j) diff[j] = sum[j] - whole[j];
    worst = std::max(worst, testing::l2_norm(diff) / std::max(1e-300, testing::l2_norm(whole)));
  }
  return {worst <= 1e-12, "max relative error " + fmt(worst) + " over 100 instances"};
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(4);
  DenseMatrix eye(50, 50);
  for (std::size_t i = 0; i < 50; ++i) eye(i, i) = 1.0;
  const auto b = testing::random_vector(gen, 50, -2.0, 2.0);
  const auto data = testing::make_dataset(Matrix(eye), b);
  double worst_pip = 0.0, worst_cons = 0.0;
  for (double lambda : {0.1, 0.5}) {
    ProblemSpec spec;
    spec.lambda = lambda;
    SolverConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_iter = 100000;
    const auto oracle = prox::soft_threshold(b, lambda);
    worst_pip = std::max(worst_pip, inf_diff(solve(spec, partition(data, 5), cfg).coefficients, oracle));
    worst_cons = std::max(worst_cons, inf_diff(consensus_solve(spec, partition(data, 5), cfg).coefficients, oracle));
  }
  const double secs = seconds_since(t0);
  return {worst_pip <= 1e-4 && worst_cons <= 1e-3 && secs < 2.0,
          "partition-insensitive " + fmt(worst_pip) + ", consensus " + fmt(worst_cons) + ", " + fmt(secs) + " s"};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  int monotone_failures = 0, bound_failures = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(500 + seed);
    const auto a = testing::random_dense(gen, 100, 40);
    const auto b = testing::random_vector(gen, 100, -3.0, 3.0);
    const auto shards = testing::split_rows(Matrix(a), b, {25, 25, 25, 25});
    ProblemSpec spec;
    spec.lambda = 1.0 + 0.25 * static_cast<double>(seed);

    SolverConfig star_cfg;
    star_cfg.max_iter = 5000;
    star_cfg.tol = 1e-300;
    star_cfg.collect_state = true;
    const auto star = solve(spec, shards, star_cfg);

    SolverState w0, ws;
    w0.x.assign(40, 0.0);
    ws.x = star.coefficients;
    ws.r = star.r;
    ws.u = star.u;
    for (const auto& s : shards) {
      std::vector<double> r0(s.rows());
      s.matrix.multiply(w0.x, r0);
      w0.r.push_back(std::move(r0));
      w0.u.emplace_back(s.rows(), 0.0);
    }
    const double h0 = h_seminorm_sq(HSeminorm{star.eta, spec.mu, shards}, state_difference(w0, ws));

    SolverConfig cfg;
    cfg.max_iter = 101;
    cfg.tol = 1e-300;
    cfg.record_trace = true;
    const auto fit = solve(spec, shards, cfg);
    // trace[k].h_diff_sq is ||w^k - w^{k+1}||_H^2.
    for (std::size_t k = 1; k < fit.trace.size(); ++k) {
      if (fit.trace[k].h_diff_sq > fit.trace[k - 1].h_diff_sq + 1e-10) ++monotone_failures;
    }
    for (int k : {10, 50, 100}) {
      const double hk = fit.trace[static_cast<std::size_t>(k)].h_diff_sq;
      const double bound = h0 / (k + 1);
      worst_ratio = std::max(worst_ratio, hk / bound);
      if (hk > bound) ++bound_failures;
    }
  }
  const double secs = seconds_since(t0);
  return {monotone_failures == 0 && bound_failures == 0 && secs < 30.0,
          std::to_string(monotone_failures) + " monotonicity violations, " + std::to_string(bound_failures) +
              " bound violations (max h_k/bound " + fmt(worst_ratio) + "), " + fmt(secs) + " s"};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const auto syn = gen_synthetic(2024, 500, 1000);
  const auto shards = partition(syn.dataset, 5);
  std::ostringstream detail;
  bool pass = true;
  for (const auto& loss : {Loss::least_squares(), Loss::quantile(0.5), Loss::huber(1.345)}) {
    ProblemSpec spec;
    spec.loss = loss;
    SolverConfig cfg;
    cfg.max_iter = 500;
    cfg.tol = 1e-3;
    PathOptions opt;
    opt.grid_size = 30;
    opt.ratio = 0.05;
    const auto path = lambda_path(spec, shards, cfg, opt);
    cli::EvaluateOptions eval;
    eval.true_support = syn.true_support;
    const auto m = cli::evaluate(path.selected().coefficients, syn.dataset, Task::kRegression, eval);
    const bool ok = *m.fn_count == 0 && *m.fp_count <= 2;
    pass = pass && ok;
    detail << to_string(loss.kind) << " FN=" << *m.fn_count << " FP=" << *m.fp_count << "; ";
  }
  const double secs = seconds_since(t0);
  detail << fmt(secs) << " s";
  return {pass && secs < 120.0, detail.str()};
}

Outcome criterion7() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> anchor_dist(-20.0, 20.0), mu_dist(0.01, 10.0);
  std::bernoulli_distribution coin(0.5);
  double worst_res = 0.0, worst_diff = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double b = coin(gen) ? 1.0 : -1.0;
    const double anchor = anchor_dist(gen), mu = mu_dist(gen);
    const auto got = prox::logistic_r_newton(b, anchor, 0.0, mu, 0.0);
    // Stationarity written out from the loss derivative, independent of the library helper.
    auto g = [&](double r) { return -b / (std::exp(r * b) + 1.0) + mu * (r - anchor); };
    const double lo = anchor - 1.0 / mu - 1.0, hi = anchor + 1.0 / mu + 1.0;
    const double oracle = testing::bisect(g, lo, hi);
    worst_res = std::max(worst_res, std::abs(g(got.r)));
    worst_diff = std::max(worst_diff, std::abs(got.r - oracle));
  }
  return {worst_res <= 1e-10 && worst_diff <= 1e-8,
          "max residual " + fmt(worst_res) + ", max deviation from bisection " + fmt(worst_diff)};
}

Outcome criterion9(const char* argv0) {
  const auto root = fs::absolute(argv0).lexically_normal().parent_path();
  // The script lives in the source tree; look upward from the build directory.
  fs::path script;
  for (auto p = root; !p.empty() && p != p.parent_path(); p = p.parent_path()) {
    if (fs::exists(p / "tools" / "rcv1_bench.sh")) {
      script = p / "tools" / "rcv1_bench.sh";
      break;
    }
  }
  if (script.empty()) return {false, "tools/rcv1_bench.sh not found"};
  return {true, "non-gating: full-scale rcv1 run is manual via " + script.string()};
}

Outcome criterion10(const fs::path& dir) {
  const auto syn = gen_synthetic(10, 150, 40);
  const auto data = (dir / "c10.csv").string();
  {
    std::ofstream f(data);
    write_csv(f, syn.dataset, true);
  }
  std::vector<std::string> traces;
  for (const char* name : {"c10_a.csv", "c10_b.csv"}) {
    const auto trace = (dir / name).string();
    const int code = run_cli({"fit", "--data", data, "--header", "--lambda", "3", "--workers", "4", "--transport",
                              "inprocess", "--trace-all", "--trace", trace});
    if (code == cli::kExitError) return {false, "fit failed"};
    traces.push_back(slurp(trace));
  }
  const bool same = !traces[0].empty() && traces[0] == traces[1];
  return {same, std::to_string(traces[0].size()) + " bytes, " + (same ? "identical" : "different")};
}

}  // namespace

int main(int /*argc*/, char** argv) {
  const auto dir = scratch_dir();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"partition insensitivity across D", [&] { return criterion1(dir); }},
      {"loss prox vs brute-force oracle", criterion2},
      {"xi aggregation identity", criterion3},
      {"orthogonal-design lasso", criterion4},
      {"non-ergodic H-seminorm rate", criterion5},
      {"synthetic support recovery", criterion6},
      {"logistic inner solver", criterion7},
      {"partition-sensitivity contrast", criterion8},
      {"rcv1 benchmark script", [&] { return criterion9(argv[0]); }},
      {"trace determinism", [&] { return criterion10(dir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  fs::remove_all(dir);
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
