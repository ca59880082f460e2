#ifndef PIPADMM_CLI_COMMANDS_HPP_
#define PIPADMM_CLI_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pipadmm/core_types.hpp"
#include "pipadmm/data_io.hpp"

namespace pipadmm::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

//! Flags shared by fit, select and bench.
struct CommonOptions {
  std::string data;
  std::string format;  //!< libsvm | csv; empty infers from the extension.
  bool header = false;
  std::size_t label_column = 0;
  std::string test_data;
  std::size_t test_sample = 0;  //!< 0 keeps every test row.
  std::string loss = "least_squares";
  double tau = 0.5;
  double delta = 1.345;
  double epsilon = 0.1;
  std::string reg = "l1";
  std::size_t group_size = 1;
  bool intercept = false;
  double mu = 0.1;
  int workers = 1;
  int max_iter = 500;
  double tol = 1e-2;
  std::optional<double> eta;
  double init = 0.0;
  std::uint64_t seed = 1;
  std::string transport = "inprocess";
  std::string solver = "pip";
  std::vector<std::size_t> true_support;  //!< 1-based feature numbers.
};

struct FitOptions : CommonOptions {
  double lambda = 0.0;
  std::string out;
  std::string trace;
  bool trace_timing = false;
  bool trace_all = false;
};

struct SelectOptions : CommonOptions {
  int grid = 50;
  double ratio = 1e-3;
  std::string out;
  std::string path_out;
};

struct BenchOptions : CommonOptions {
  std::vector<std::string> losses{"least_squares"};
  std::vector<int> workers_list{1, 5, 10};
  std::vector<std::string> solvers{"pip", "consensus"};
  int repetitions = 1;
  std::optional<double> lambda;  //!< Unset selects lambda by HBIC on the single-shard fit.
  int grid = 20;
  double ratio = 1e-2;
  std::size_t synthetic_m = 500;
  std::size_t synthetic_p = 1000;
  std::string out;
  std::string summary;
};

struct GenOptions {
  std::uint64_t seed = 1;
  std::size_t m = 500;
  std::size_t p = 1000;
  std::string format = "csv";
  std::string out;
};

int cmd_fit(const FitOptions& options, std::ostream& out, std::ostream& err);
int cmd_select(const SelectOptions& options, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int cmd_gen(const GenOptions& options, std::ostream& out, std::ostream& err);

//! Parses `args` (without the program name) and dispatches to a subcommand.
//! Returns the subcommand's exit code; usage errors print help to `err` and return 1.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

//! Sets the spdlog level from the PIPADMM_LOG environment variable (trace..off, default warn)
//! and routes log output to stderr.
void configure_logging();

//! Builds the problem description from the loss/regularizer flags for `n` columns.
ProblemSpec make_spec(const CommonOptions& options, double lambda, std::size_t n);

//! Loads --data, applying the intercept column and the preferred storage.
Dataset load_dataset(const CommonOptions& options, const std::string& path);

}  // namespace pipadmm::cli

#endif  // PIPADMM_CLI_COMMANDS_HPP_
