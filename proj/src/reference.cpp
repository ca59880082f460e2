#include "pipadmm/reference.hpp"

#include <chrono>
#include <cmath>

#include "pipadmm/error.hpp"

namespace pipadmm::reference {

namespace {

double sum_sq(std::span<const double> v) {
  double acc = 0.0;
  for (double a : v) acc += a * a;
  return acc;
}

double diff_sq(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

DesignShard stack_shards(std::span<const DesignShard> shards) {
  if (shards.empty()) throw ArgumentError("stack_shards: no shards");
  std::vector<Matrix> blocks;
  DesignShard out;
  out.index = 1;
  for (const auto& s : shards) {
    blocks.push_back(s.matrix);
    out.response.insert(out.response.end(), s.response.begin(), s.response.end());
  }
  out.matrix = Matrix::vstack(blocks);
  return out;
}

FitResult solve_serial(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config_in) {
  config_in.validate();
  validate_shards(shards, spec.task());
  const std::size_t n = shards.front().cols();
  spec.validate(n);
  SolverConfig config = config_in;
  config.backend = Backend::kSerial;

  const auto start = std::chrono::steady_clock::now();
  const DesignShard all = stack_shards(shards);
  const std::size_t m = all.rows();

  const double eta_one =
      power_method_eta(all, spec.mu, config.power_tol, config.power_max_iter, config.eta_safety, Backend::kSerial);
  const double eta = config.eta_override ? *config.eta_override : eta_one;
  if (!(eta > 0.0)) throw ArgumentError("solve_serial: eta is zero; pass an eta override");

  FitResult result;
  result.eta = eta;
  result.lambda_used = spec.lambda;
  result.variable_count = m + n;

  std::vector<double> x = config.initial_x ? *config.initial_x : std::vector<double>(n, config.init_value);
  if (x.size() != n) throw DimensionError("initial_x length mismatch");
  std::vector<double> r(m);
  all.matrix.multiply(x, r, Backend::kSerial);
  std::vector<double> u(m, config.init_value);
  auto xi = compute_xi(all, x, r, u, spec.mu, Backend::kSerial);
  if (config.xi_form == XiForm::kAsPrinted) {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = r[i] + u[i] / spec.mu;
    all.matrix.multiply_transpose(v, xi, Backend::kSerial);
  }

  std::vector<std::vector<double>> r_view(1), u_view(1);
  auto publish = [&](int k) {
    if (!config.on_iterate) return;
    if (config.collect_state) {
      r_view[0] = r;
      u_view[0] = u;
      config.on_iterate(IterateView{k, x, r_view, u_view});
    } else {
      config.on_iterate(IterateView{k, x, {}, {}});
    }
  };
  publish(0);

  std::vector<double> q_prev(m);
  all.matrix.multiply(x, q_prev, Backend::kSerial);
  for (int k = 0; k < config.max_iter; ++k) {
    auto x_next = x_update(x, xi, eta, spec.mu, spec);
    auto upd = worker_iteration(all, x_next, r, u, spec, config);
    const double dx = diff_sq(x_next, x);
    const double dr = diff_sq(upd.r, r);
    const double du = diff_sq(upd.u, u);
    const double adx = diff_sq(upd.q, q_prev);
    const double rel = relative_change(dx + dr + du, sum_sq(x_next) + sum_sq(upd.r) + sum_sq(upd.u));
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) loss += spec.loss.sample(upd.q[i], all.response[i]);
    x = std::move(x_next);
    r = std::move(upd.r);
    u = std::move(upd.u);
    xi = std::move(upd.xi);
    q_prev = std::move(upd.q);
    result.iterations = k + 1;
    const bool done = rel <= config.tol;
    if (config.record_trace || (k + 1) % 10 == 0 || done || k + 1 == config.max_iter) {
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      result.trace.push_back(
          {k + 1, loss + spec.regularizer_value(x), rel,
           h_seminorm_sq_from_norms(eta, spec.mu, dx, adx, dr, du), ms});
    }
    publish(k + 1);
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.coefficients = std::move(x);
  if (config.collect_state) {
    result.r = {std::move(r)};
    result.u = {std::move(u)};
  }
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace pipadmm::reference
