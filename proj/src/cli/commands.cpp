#include "pipadmm/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pipadmm/cli/metrics.hpp"
#include "pipadmm/cli/model_file.hpp"
#include "pipadmm/consensus.hpp"
#include "pipadmm/error.hpp"
#include "pipadmm/model_select.hpp"
#include "pipadmm/solver.hpp"

namespace pipadmm::cli {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Dataset load_raw(const CommonOptions& options, const std::string& path, std::optional<std::size_t> n_hint) {
  std::string format = options.format;
  if (format.empty()) format = ends_with(path, ".csv") ? "csv" : "libsvm";
  if (format == "csv") return read_csv_file(path, options.header, options.label_column);
  if (format == "libsvm") return read_libsvm_file(path, n_hint);
  throw ArgumentError("unknown data format '" + format + "'");
}

cluster::ClusterOptions cluster_options(const CommonOptions& options) {
  cluster::ClusterOptions c;
  if (options.transport == "socket") {
    c.transport = cluster::TransportKind::kSocket;
  } else if (options.transport != "inprocess") {
    throw ArgumentError("unknown transport '" + options.transport + "'");
  }
  return c;
}

SolverConfig solver_config(const CommonOptions& options) {
  SolverConfig cfg;
  cfg.max_iter = options.max_iter;
  cfg.tol = options.tol;
  cfg.eta_override = options.eta;
  cfg.init_value = options.init;
  return cfg;
}

std::optional<std::vector<std::size_t>> support_indices(const CommonOptions& options,
                                                       const std::vector<std::size_t>& features_one_based,
                                                       std::size_t n) {
  if (features_one_based.empty()) return std::nullopt;
  std::vector<std::size_t> out;
  const std::size_t offset = options.intercept ? 1 : 0;
  for (std::size_t f : features_one_based) {
    if (f == 0 || f - 1 + offset >= n) throw ArgumentError("true support feature " + std::to_string(f) + " out of range");
    out.push_back(f - 1 + offset);
  }
  return out;
}

FitResult run_solver(const std::string& solver, const ProblemSpec& spec, const std::vector<DesignShard>& shards,
                     const SolverConfig& cfg, const cluster::ClusterOptions& copts) {
  if (solver == "pip") return solve(spec, shards, cfg, copts);
  if (solver == "consensus") return consensus_solve(spec, shards, cfg, copts);
  throw ArgumentError("unknown solver '" + solver + "' (expected pip or consensus)");
}

std::string format_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void print_metrics(std::ostream& out, const Metrics& m) {
  out << "iterations=" << m.iterations << " wall_ms=" << format_double(m.wall_ms)
      << " sparsity_pct=" << format_double(m.sparsity_pct);
  if (m.train_accuracy) out << " train_accuracy=" << format_double(*m.train_accuracy);
  if (m.test_accuracy) out << " test_accuracy=" << format_double(*m.test_accuracy);
  if (m.mae) out << " mae=" << format_double(*m.mae) << " mse=" << format_double(*m.mse);
  if (m.fn_count) out << " fn=" << *m.fn_count << " fp=" << *m.fp_count;
  out << '\n';
}

struct Loaded {
  Dataset train;
  std::optional<Dataset> test;
};

Loaded load_train_test(const CommonOptions& options) {
  if (options.data.empty()) throw ArgumentError("--data is required");
  Loaded l;
  Dataset raw = load_raw(options, options.data, std::nullopt);
  const std::size_t raw_cols = raw.cols();
  l.train = with_preferred_storage(options.intercept ? with_intercept(raw) : raw);
  if (!options.test_data.empty()) {
    Dataset t = load_raw(options, options.test_data, raw_cols);
    if (t.cols() != raw_cols) throw DimensionError("test data has " + std::to_string(t.cols()) + " columns, training data " + std::to_string(raw_cols));
    if (options.test_sample > 0) t = sample_rows(t, options.test_sample, options.seed);
    l.test = with_preferred_storage(options.intercept ? with_intercept(t) : t);
  }
  return l;
}

Metrics full_metrics(const CommonOptions& options, const FitResult& fit, const Loaded& data, Task task) {
  EvaluateOptions eo;
  eo.intercept = options.intercept;
  eo.true_support = support_indices(options, options.true_support, data.train.cols());
  Metrics m = evaluate(fit.coefficients, data.train, task, eo);
  if (data.test) {
    const Metrics t = evaluate(fit.coefficients, *data.test, task, eo);
    if (task == Task::kClassification) {
      m.test_accuracy = t.train_accuracy;
    } else {
      m.mae = t.mae;
      m.mse = t.mse;
    }
  }
  m.iterations = fit.iterations;
  m.wall_ms = fit.wall_ms;
  return m;
}

ModelFile to_model(const std::string& solver, const ProblemSpec& spec, const FitResult& fit) {
  ModelFile model;
  model.solver = solver;
  model.spec = spec;
  model.iterations = fit.iterations;
  model.converged = fit.converged;
  model.eta = fit.eta;
  model.coefficients = fit.coefficients;
  return model;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      const auto v = parse_double(item);
      if (!v || *v != std::floor(*v) || *v < 0) throw ArgumentError(std::string("bad ") + what + " entry '" + item + "'");
      out.push_back(static_cast<T>(*v));
    }
  }
  if (out.empty()) throw ArgumentError(std::string("empty ") + what + " list");
  return out;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool data_required) {
  auto* data = cmd->add_option("--data", o.data, "Training data file (LIBSVM or CSV)");
  if (data_required) data->required();
  cmd->add_option("--format", o.format, "Data format; inferred from the extension when omitted")
      ->check(CLI::IsMember({"libsvm", "csv"}));
  cmd->add_flag("--header", o.header, "CSV files have a header row");
  cmd->add_option("--label-column", o.label_column, "0-based CSV label column");
  cmd->add_option("--test", o.test_data, "Held-out data for test metrics");
  cmd->add_option("--test-sample", o.test_sample, "Randomly keep this many test rows (0 = all)");
  cmd->add_option("--tau", o.tau, "Quantile level");
  cmd->add_option("--delta", o.delta, "Huber threshold");
  cmd->add_option("--epsilon", o.epsilon, "SVR tube half-width");
  cmd->add_option("--reg", o.reg, "Regularizer")->check(CLI::IsMember({"l1", "l2", "l2_squared", "group", "group_l21"}));
  cmd->add_option("--group-size", o.group_size, "Size of the contiguous coordinate groups for --reg group");
  cmd->add_flag("--intercept", o.intercept, "Prepend an unpenalized intercept column");
  cmd->add_option("--mu", o.mu, "Augmented-Lagrangian penalty");
  cmd->add_option("--max-iter", o.max_iter, "Iteration limit");
  cmd->add_option("--tol", o.tol, "Relative-change stopping tolerance");
  cmd->add_option("--eta", o.eta, "Fixed linearization constant (replaces the power-method estimate)");
  cmd->add_option("--init", o.init, "Initial value of every entry of x and u");
  cmd->add_option("--seed", o.seed, "Seed for test-row sampling and synthetic data");
  cmd->add_option("--transport", o.transport, "Worker transport")->check(CLI::IsMember({"inprocess", "socket"}));
  cmd->add_option("--true-support", o.true_support, "1-based features with nonzero true coefficients")
      ->delimiter(',');
}

}  // namespace

void configure_logging() {
  static bool configured = false;
  if (!configured) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("pipadmm"));
    configured = true;
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("PIPADMM_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

ProblemSpec make_spec(const CommonOptions& options, double lambda, std::size_t n) {
  ProblemSpec spec;
  const LossKind kind = loss_kind_from_string(options.loss);
  spec.loss.kind = kind;
  if (kind == LossKind::kQuantile) spec.loss.param = options.tau;
  if (kind == LossKind::kHuber) spec.loss.param = options.delta;
  if (kind == LossKind::kSvr) spec.loss.param = options.epsilon;
  spec.regularizer = regularizer_kind_from_string(options.reg);
  spec.lambda = lambda;
  spec.mu = options.mu;
  spec.intercept = options.intercept;
  if (spec.regularizer == RegularizerKind::kGroupL21) {
    if (options.group_size < 1) throw ArgumentError("--group-size must be positive");
    std::size_t j = 0;
    if (options.intercept && n > 0) {
      spec.groups.push_back({0});
      j = 1;
    }
    while (j < n) {
      std::vector<std::size_t> g;
      for (std::size_t k = 0; k < options.group_size && j < n; ++k) g.push_back(j++);
      spec.groups.push_back(std::move(g));
    }
  }
  spec.validate(n);
  return spec;
}

Dataset load_dataset(const CommonOptions& options, const std::string& path) {
  Dataset raw = load_raw(options, path, std::nullopt);
  return with_preferred_storage(options.intercept ? with_intercept(raw) : raw);
}

int cmd_fit(const FitOptions& options, std::ostream& out, std::ostream& /*err*/) {
  const Loaded data = load_train_test(options);
  const ProblemSpec spec = make_spec(options, options.lambda, data.train.cols());
  const auto shards = partition(data.train, options.workers);
  SolverConfig cfg = solver_config(options);
  cfg.record_trace = options.trace_all;
  const FitResult fit = run_solver(options.solver, spec, shards, cfg, cluster_options(options));
  const Metrics metrics = full_metrics(options, fit, data, spec.task());

  if (!options.out.empty()) {
    const ModelFile model = to_model(options.solver, spec, fit);
    atomic_write(options.out, [&](std::ostream& o) { write_model(o, model); });
  }
  if (!options.trace.empty()) {
    atomic_write(options.trace, [&](std::ostream& o) { write_trace_csv(o, fit.trace, options.trace_timing); });
  }
  out << "solver=" << options.solver << " converged=" << (fit.converged ? 1 : 0)
      << " objective=" << format_double(objective_value(spec, shards, fit.coefficients)) << ' ';
  print_metrics(out, metrics);
  return fit.converged ? kExitConverged : kExitNotConverged;
}

int cmd_select(const SelectOptions& options, std::ostream& out, std::ostream& /*err*/) {
  if (options.solver != "pip") throw UnsupportedError("select runs the pip solver only");
  const Loaded data = load_train_test(options);
  const ProblemSpec spec = make_spec(options, 0.0, data.train.cols());
  const auto shards = partition(data.train, options.workers);
  const SolverConfig cfg = solver_config(options);
  PathOptions popts;
  popts.grid_size = options.grid;
  popts.ratio = options.ratio;
  popts.cluster = cluster_options(options);
  const PathResult path = lambda_path(spec, shards, cfg, popts);

  const FitResult& fit = path.selected();
  ProblemSpec chosen = spec;
  chosen.lambda = path.selected_lambda();
  if (!options.out.empty()) {
    const ModelFile model = to_model("pip", chosen, fit);
    atomic_write(options.out, [&](std::ostream& o) { write_model(o, model); });
  }
  if (!options.path_out.empty()) {
    atomic_write(options.path_out, [&](std::ostream& o) {
      o << "lambda,hbic,support,objective\n";
      for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
        o << format_double(path.lambdas[i]) << ',' << format_double(path.hbic[i]) << ',' << path.support[i] << ','
          << format_double(path.objectives[i]) << '\n';
      }
    });
  }
  const Metrics metrics = full_metrics(options, fit, data, spec.task());
  out << "selected_lambda=" << format_double(chosen.lambda) << " selected_index=" << path.selected_index
      << " hbic=" << format_double(path.hbic[path.selected_index]) << " converged=" << (fit.converged ? 1 : 0) << ' ';
  print_metrics(out, metrics);
  return fit.converged ? kExitConverged : kExitNotConverged;
}

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  if (options.repetitions < 1) throw ArgumentError("--repetitions must be positive");
  Loaded data;
  std::vector<std::size_t> truth_one_based = options.true_support;
  if (options.data.empty()) {
    auto train = gen_synthetic(options.seed, options.synthetic_m, options.synthetic_p);
    auto test = gen_synthetic(options.seed + 1, options.synthetic_m, options.synthetic_p);
    data.train = options.intercept ? with_intercept(train.dataset) : train.dataset;
    data.test = options.intercept ? with_intercept(test.dataset) : test.dataset;
    truth_one_based.clear();
    for (std::size_t j : train.true_support) truth_one_based.push_back(j + 1);
  } else {
    data = load_train_test(options);
  }
  CommonOptions base = options;
  base.true_support = truth_one_based;

  std::vector<int> d_list = options.workers_list;
  std::sort(d_list.begin(), d_list.end());
  d_list.erase(std::unique(d_list.begin(), d_list.end()), d_list.end());
  const int d_max = d_list.back();

  std::optional<Task> task;
  for (const auto& name : options.losses) {
    CommonOptions o = base;
    o.loss = name;
    const Task t = make_spec(o, 0.0, data.train.cols()).task();
    if (task && *task != t) throw ArgumentError("bench: cannot mix regression and classification losses");
    task = t;
  }
  const bool classification = *task == Task::kClassification;

  std::ostringstream table;
  std::ostringstream summary;
  table << (classification ? "model,D,NI,CT_ms,Sparsity,Train,Test\n" : "model,D,NI,CT_ms,FN,FP,MAE,MSE\n");
  summary << "model,max_cross_D_deviation,NI_min,NI_max\n";

  for (const auto& name : options.losses) {
    CommonOptions o = base;
    o.loss = name;
    ProblemSpec spec = make_spec(o, 0.0, data.train.cols());
    SolverConfig cfg = solver_config(o);

    // One eta for every D in the list: the sum over the finest partition bounds every coarser one.
    if (!cfg.eta_override) {
      const auto finest = partition(data.train, d_max);
      std::vector<double> eta_d;
      for (const auto& s : finest) {
        eta_d.push_back(power_method_eta(s, spec.mu, cfg.power_tol, cfg.power_max_iter, cfg.eta_safety));
      }
      cfg.eta_override = aggregate_eta(eta_d);
    }
    if (options.lambda) {
      spec.lambda = *options.lambda;
    } else {
      PathOptions popts;
      popts.grid_size = options.grid;
      popts.ratio = options.ratio;
      popts.cluster = cluster_options(o);
      spec.lambda = lambda_path(spec, partition(data.train, 1), cfg, popts).selected_lambda();
      spdlog::info("bench: {} selected lambda {}", name, spec.lambda);
    }

    for (const auto& solver : options.solvers) {
      if (solver == "consensus" && spec.loss.kind != LossKind::kLeastSquares) {
        err << "bench: consensus baseline skipped for loss " << name << '\n';
        continue;
      }
      const std::string model = (solver == "pip" ? "PIPADMM-" : "ADMM-") + name;
      std::vector<std::vector<double>> solutions;
      int ni_min = 0, ni_max = 0;
      for (int d : d_list) {
        const auto shards = partition(data.train, d);
        FitResult fit;
        double ms = 0.0;
        for (int rep = 0; rep < options.repetitions; ++rep) {
          fit = run_solver(solver, spec, shards, cfg, cluster_options(o));
          ms += fit.wall_ms;
        }
        ms /= options.repetitions;
        Metrics m = full_metrics(o, fit, data, spec.task());
        table << model << ',' << d << ',' << fit.iterations << ',' << format_double(ms) << ',';
        if (classification) {
          table << format_double(m.sparsity_pct) << ',' << format_opt(m.train_accuracy) << ','
                << format_opt(m.test_accuracy) << '\n';
        } else {
          table << (m.fn_count ? std::to_string(*m.fn_count) : "") << ',' << (m.fp_count ? std::to_string(*m.fp_count) : "")
                << ',' << format_opt(m.mae) << ',' << format_opt(m.mse) << '\n';
        }
        ni_min = solutions.empty() ? fit.iterations : std::min(ni_min, fit.iterations);
        ni_max = solutions.empty() ? fit.iterations : std::max(ni_max, fit.iterations);
        solutions.push_back(fit.coefficients);
      }
      double deviation = 0.0;
      double scale = 1.0;
      for (double v : solutions.front()) scale = std::max(scale, std::abs(v));
      for (const auto& s : solutions) {
        for (std::size_t j = 0; j < s.size(); ++j) deviation = std::max(deviation, std::abs(s[j] - solutions.front()[j]));
      }
      summary << model << ',' << format_double(deviation / scale) << ',' << ni_min << ',' << ni_max << '\n';
    }
  }

  if (options.out.empty()) {
    out << table.str();
  } else {
    atomic_write(options.out, [&](std::ostream& o) { o << table.str(); });
  }
  if (options.summary.empty()) {
    out << '\n' << summary.str();
  } else {
    atomic_write(options.summary, [&](std::ostream& o) { o << summary.str(); });
  }
  return kExitConverged;
}

int cmd_gen(const GenOptions& options, std::ostream& out, std::ostream& /*err*/) {
  const auto data = gen_synthetic(options.seed, options.m, options.p);
  auto body = [&](std::ostream& o) {
    if (options.format == "csv") {
      write_csv(o, data.dataset, true);
    } else if (options.format == "libsvm") {
      write_libsvm(o, data.dataset);
    } else {
      throw ArgumentError("unknown format '" + options.format + "'");
    }
  };
  if (options.out.empty()) {
    body(out);
  } else {
    atomic_write(options.out, body);
  }
  return kExitConverged;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Partition-insensitive parallel ADMM for regularized regression and classification", "pipadmm"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model at a fixed lambda");
  add_common(fit_cmd, fit, true);
  fit_cmd->add_option("--loss", fit.loss, "Loss function");
  fit_cmd->add_option("--lambda", fit.lambda, "Regularization level")->required();
  fit_cmd->add_option("--workers", fit.workers, "Number of shards / workers");
  fit_cmd->add_option("--solver", fit.solver, "Algorithm")->check(CLI::IsMember({"pip", "consensus"}));
  fit_cmd->add_option("--out", fit.out, "Model file to write");
  fit_cmd->add_option("--trace", fit.trace, "Trace CSV to write");
  fit_cmd->add_flag("--trace-timing", fit.trace_timing, "Write wall-clock times into the trace");
  fit_cmd->add_flag("--trace-all", fit.trace_all, "Trace every iteration instead of every 10th");

  SelectOptions sel;
  auto* sel_cmd = app.add_subcommand("select", "Fit a lambda path and pick the HBIC minimizer");
  add_common(sel_cmd, sel, true);
  sel_cmd->add_option("--loss", sel.loss, "Loss function");
  sel_cmd->add_option("--workers", sel.workers, "Number of shards / workers");
  sel_cmd->add_option("--solver", sel.solver, "Algorithm")->check(CLI::IsMember({"pip"}));
  sel_cmd->add_option("--grid", sel.grid, "Number of lambda values");
  sel_cmd->add_option("--ratio", sel.ratio, "Smallest lambda as a fraction of lambda_max");
  sel_cmd->add_option("--out", sel.out, "Model file for the selected fit");
  sel_cmd->add_option("--path-out", sel.path_out, "Path CSV (lambda,hbic,support,objective)");

  BenchOptions bench;
  std::string losses = "least_squares", workers_list = "1,5,10", solvers = "pip,consensus";
  auto* bench_cmd = app.add_subcommand("bench", "Compare solvers across worker counts");
  add_common(bench_cmd, bench, false);
  bench_cmd->add_option("--losses", losses, "Comma-separated loss list");
  bench_cmd->add_option("--workers-list", workers_list, "Comma-separated worker counts");
  bench_cmd->add_option("--solvers", solvers, "Comma-separated solvers (pip, consensus)");
  bench_cmd->add_option("--repetitions", bench.repetitions, "Timed repetitions per cell");
  bench_cmd->add_option("--lambda", bench.lambda, "Fixed lambda (default: HBIC selection)");
  bench_cmd->add_option("--grid", bench.grid, "Grid size for lambda selection");
  bench_cmd->add_option("--ratio", bench.ratio, "Grid ratio for lambda selection");
  bench_cmd->add_option("--m", bench.synthetic_m, "Synthetic rows (without --data)");
  bench_cmd->add_option("--p", bench.synthetic_p, "Synthetic columns (without --data)");
  bench_cmd->add_option("--out", bench.out, "Results CSV (default stdout)");
  bench_cmd->add_option("--summary", bench.summary, "Cross-D deviation CSV (default stdout)");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic heteroscedastic regression dataset");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--m", gen.m, "Rows");
  gen_cmd->add_option("--p", gen.p, "Features (at least 20)");
  gen_cmd->add_option("--format", gen.format, "Output format")->check(CLI::IsMember({"csv", "libsvm"}));
  gen_cmd->add_option("--out", gen.out, "Output file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitConverged;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << active->help();
    return kExitError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
    if (sel_cmd->parsed()) return cmd_select(sel, out, err);
    if (bench_cmd->parsed()) {
      bench.losses = parse_list<std::string>(losses, "loss");
      bench.workers_list = parse_list<int>(workers_list, "worker");
      bench.solvers = parse_list<std::string>(solvers, "solver");
      for (const auto& s : bench.solvers) {
        if (s != "pip" && s != "consensus") throw ArgumentError("unknown solver '" + s + "'");
      }
      return cmd_bench(bench, out, err);
    }
    if (gen_cmd->parsed()) return cmd_gen(gen, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace pipadmm::cli
