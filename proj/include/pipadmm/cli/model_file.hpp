#ifndef PIPADMM_CLI_MODEL_FILE_HPP_
#define PIPADMM_CLI_MODEL_FILE_HPP_

// Model files are line-oriented text:
//
//   # pipadmm-model v1
//   solver pip
//   loss least_squares
//   ...
//   coefficients 3
//   0.5
//   0
//   -1.25
//
// Numbers use the shortest decimal that round-trips exactly.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pipadmm/core_types.hpp"

namespace pipadmm::cli {

inline constexpr const char* kModelHeader = "# pipadmm-model v1";

struct ModelFile {
  std::string solver = "pip";
  ProblemSpec spec;
  int iterations = 0;
  bool converged = false;
  double eta = 0.0;
  std::vector<double> coefficients;
};

void write_model(std::ostream& out, const ModelFile& model);
//! Throws ParseError (with line number) on a malformed file.
ModelFile read_model(std::istream& in);
ModelFile read_model_file(const std::string& path);

//! Writes `path` through a temporary sibling file and a rename, so a failed write leaves nothing behind.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body);

//! iter,objective,rel_w_change,h_diff_sq,wall_ms. Without `include_timing` the wall_ms column is 0 so
//! repeated runs produce identical files.
void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace, bool include_timing);

}  // namespace pipadmm::cli

#endif  // PIPADMM_CLI_MODEL_FILE_HPP_
