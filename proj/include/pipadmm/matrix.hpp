#ifndef PIPADMM_MATRIX_HPP_
#define PIPADMM_MATRIX_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace pipadmm {

//! Which implementation of the data-parallel kernels to run.
enum class Backend {
  kSerial,  //!< Plain loops; the reference the parallel kernels are tested against.
  kOpenMP,  //!< OpenMP-parallel loops. Produces bitwise-identical results to kSerial.
};

//! Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

//! Compressed sparse row matrix. Column indices are strictly increasing within each row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  explicit CsrMatrix(std::size_t cols) : cols_(cols), row_ptr_{0} {}
  //! Takes ownership of the raw arrays and validates them; throws ArgumentError when malformed.
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::uint32_t> col_idx, std::vector<double> values);

  std::size_t rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  //! Append a row. Indices must be strictly increasing and below cols().
  void push_row(std::span<const std::uint32_t> idx, std::span<const double> val);
  //! Widen the matrix; existing indices remain valid.
  void set_cols(std::size_t cols);

  std::span<const std::uint32_t> row_indices(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

//! A design matrix in either dense or CSR storage with a single mat-vec contract.
class Matrix {
 public:
  //! Storage is dense when nnz / (rows * cols) exceeds this ratio.
  static constexpr double kDenseFillThreshold = 0.25;

  Matrix() = default;
  Matrix(DenseMatrix m) : storage_(std::move(m)) {}  // NOLINT(google-explicit-constructor)
  Matrix(CsrMatrix m) : storage_(std::move(m)) {}    // NOLINT(google-explicit-constructor)

  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t nnz() const;
  bool is_sparse() const noexcept { return std::holds_alternative<CsrMatrix>(storage_); }
  double fill_ratio() const;

  const DenseMatrix& dense() const { return std::get<DenseMatrix>(storage_); }
  const CsrMatrix& sparse() const { return std::get<CsrMatrix>(storage_); }

  //! out = A x
  void multiply(std::span<const double> x, std::span<double> out, Backend backend = Backend::kOpenMP) const;
  //! out = A^T v
  void multiply_transpose(std::span<const double> v, std::span<double> out,
                          Backend backend = Backend::kOpenMP) const;
  //! a_i^T x
  double row_dot(std::size_t i, std::span<const double> x) const;
  //! Calls fn(j, value) for every stored entry of row i.
  template <typename Fn>
  void for_each_in_row(std::size_t i, Fn&& fn) const {
    if (const auto* d = std::get_if<DenseMatrix>(&storage_)) {
      const auto r = d->row(i);
      for (std::size_t j = 0; j < r.size(); ++j) fn(j, r[j]);
    } else {
      const auto& s = std::get<CsrMatrix>(storage_);
      const auto idx = s.row_indices(i);
      const auto val = s.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) fn(static_cast<std::size_t>(idx[k]), val[k]);
    }
  }

  //! Rows [begin, end) as a new matrix with the same storage kind.
  Matrix slice_rows(std::size_t begin, std::size_t end) const;
  //! Concatenate row blocks (all with equal cols). Result is sparse iff any block is sparse.
  static Matrix vstack(std::span<const Matrix> blocks);
  //! Convert storage according to kDenseFillThreshold.
  Matrix with_preferred_storage() const;
  DenseMatrix to_dense() const;
  CsrMatrix to_sparse() const;
  //! Prepend an all-ones column.
  Matrix with_leading_ones() const;

 private:
  std::variant<DenseMatrix, CsrMatrix> storage_;
};

bool operator==(const DenseMatrix& a, const DenseMatrix& b);
bool operator==(const CsrMatrix& a, const CsrMatrix& b);

}  // namespace pipadmm

#endif  // PIPADMM_MATRIX_HPP_
