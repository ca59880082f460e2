#ifndef PIPADMM_DATA_IO_HPP_
#define PIPADMM_DATA_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipadmm/core_types.hpp"
#include "pipadmm/matrix.hpp"

namespace pipadmm {

struct Dataset {
  Matrix matrix;
  std::vector<double> response;
  //! Optional column names (CSV header); empty when unknown.
  std::vector<std::string> feature_names;

  std::size_t rows() const { return matrix.rows(); }
  std::size_t cols() const { return matrix.cols(); }
};

//! LIBSVM / svmlight text: "label idx:val idx:val ..." with 1-based, strictly increasing indices.
//! Blank lines and '#' comments are skipped. n is the largest index seen, or n_hint when larger.
//! Throws ParseError with the 1-based line number.
Dataset read_libsvm(std::istream& in, std::optional<std::size_t> n_hint = std::nullopt);
Dataset read_libsvm_file(const std::string& path, std::optional<std::size_t> n_hint = std::nullopt);
//! Writes every stored entry (sparse) or every nonzero (dense) in shortest round-trip form.
void write_libsvm(std::ostream& out, const Dataset& data);

//! Comma-separated numeric table; `label_column` is 0-based. Throws ParseError with row and column.
Dataset read_csv(std::istream& in, bool has_header, std::size_t label_column);
Dataset read_csv_file(const std::string& path, bool has_header, std::size_t label_column);
//! Writes the label as column 0 followed by the features; with `header`, the first line names them.
void write_csv(std::ostream& out, const Dataset& data, bool header = true);

struct SyntheticData {
  Dataset dataset;
  //! 0-based columns with nonzero true coefficients (features 6, 12, 15 and 20 counted from 1).
  std::vector<std::size_t> true_support;
};

//! Heteroscedastic design: x~ ~ N(0, Sigma) with Sigma_ij = 0.5^|i-j| drawn by the AR(1) recursion,
//! x_1 = Phi(x~_1), the rest x_j = x~_j, and y = x6 + x12 + x15 + x20 + 0.7 x1 eps with eps ~ N(0, 1)
//! drawn per row. Normals come from Box-Muller on std::mt19937_64(seed), so output is
//! reproducible across platforms. Requires p >= 20 and m >= 1.
SyntheticData gen_synthetic(std::uint64_t seed, std::size_t m, std::size_t p);

//! Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);
//! Parses a whole token as a double (a leading '+' is accepted); nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);

//! Standard normal CDF via erfc.
double normal_cdf(double x);

//! Contiguous, order-preserving blocks of floor(m/D) rows; the first m mod D shards get one extra.
//! Shard indices run 1..D. Throws ArgumentError unless 1 <= D <= m.
std::vector<DesignShard> partition(const Dataset& data, int workers);

//! Row sizes partition() would produce.
std::vector<std::size_t> partition_sizes(std::size_t m, int workers);

//! Prepends an all-ones column (coordinate 0).
Dataset with_intercept(const Dataset& data);

//! The same data in dense form when fill ratio exceeds 0.25, sparse otherwise.
Dataset with_preferred_storage(const Dataset& data);

//! Rows at the given indices, in that order.
Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows);

//! `count` distinct rows drawn uniformly without replacement (kept in ascending order); all rows when
//! count >= m.
Dataset sample_rows(const Dataset& data, std::size_t count, std::uint64_t seed);

}  // namespace pipadmm

#endif  // PIPADMM_DATA_IO_HPP_
