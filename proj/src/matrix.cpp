#include "pipadmm/matrix.hpp"

#include <algorithm>
#include <string>

#include "pipadmm/error.hpp"
#include "pipadmm/kernels.hpp"

namespace pipadmm {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("dense matrix: expected " + std::to_string(rows * cols) + " values, got " +
                         std::to_string(values_.size()));
  }
}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::uint32_t> col_idx, std::vector<double> values)
    : cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (row_ptr_.size() != rows + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size()) {
    throw ArgumentError("csr matrix: inconsistent row pointer / index / value arrays");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_ptr_[i + 1] < row_ptr_[i]) throw ArgumentError("csr matrix: row pointer decreases at row " + std::to_string(i));
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw ArgumentError("csr matrix: column index out of range in row " + std::to_string(i));
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
        throw ArgumentError("csr matrix: column indices not strictly increasing in row " + std::to_string(i));
      }
    }
  }
}

void CsrMatrix::push_row(std::span<const std::uint32_t> idx, std::span<const double> val) {
  if (idx.size() != val.size()) throw DimensionError("csr push_row: index/value length mismatch");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= cols_) throw ArgumentError("csr push_row: column index out of range");
    if (k > 0 && idx[k] <= idx[k - 1]) throw ArgumentError("csr push_row: column indices not strictly increasing");
  }
  col_idx_.insert(col_idx_.end(), idx.begin(), idx.end());
  values_.insert(values_.end(), val.begin(), val.end());
  row_ptr_.push_back(values_.size());
}

void CsrMatrix::set_cols(std::size_t cols) {
  if (cols < cols_) throw ArgumentError("csr set_cols: cannot shrink");
  cols_ = cols;
}

std::size_t Matrix::rows() const {
  return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

std::size_t Matrix::cols() const {
  return std::visit([](const auto& m) { return m.cols(); }, storage_);
}

std::size_t Matrix::nnz() const {
  if (const auto* s = std::get_if<CsrMatrix>(&storage_)) return s->nnz();
  const auto& d = std::get<DenseMatrix>(storage_);
  return static_cast<std::size_t>(
      std::count_if(d.values().begin(), d.values().end(), [](double v) { return v != 0.0; }));
}

double Matrix::fill_ratio() const {
  const double cells = static_cast<double>(rows()) * static_cast<double>(cols());
  return cells == 0.0 ? 0.0 : static_cast<double>(nnz()) / cells;
}

void Matrix::multiply(std::span<const double> x, std::span<double> out, Backend backend) const {
  if (x.size() != cols() || out.size() != rows()) {
    throw DimensionError("multiply: matrix is " + std::to_string(rows()) + "x" + std::to_string(cols()) +
                         ", x has " + std::to_string(x.size()) + ", out has " + std::to_string(out.size()));
  }
  if (const auto* d = std::get_if<DenseMatrix>(&storage_)) {
    backend == Backend::kSerial ? kernels::serial::gemv(*d, x, out) : kernels::omp::gemv(*d, x, out);
  } else {
    const auto& s = std::get<CsrMatrix>(storage_);
    backend == Backend::kSerial ? kernels::serial::csr_gemv(s, x, out) : kernels::omp::csr_gemv(s, x, out);
  }
}

void Matrix::multiply_transpose(std::span<const double> v, std::span<double> out, Backend backend) const {
  if (v.size() != rows() || out.size() != cols()) {
    throw DimensionError("multiply_transpose: matrix is " + std::to_string(rows()) + "x" + std::to_string(cols()) +
                         ", v has " + std::to_string(v.size()) + ", out has " + std::to_string(out.size()));
  }
  if (const auto* d = std::get_if<DenseMatrix>(&storage_)) {
    backend == Backend::kSerial ? kernels::serial::gemv_t(*d, v, out) : kernels::omp::gemv_t(*d, v, out);
  } else {
    const auto& s = std::get<CsrMatrix>(storage_);
    backend == Backend::kSerial ? kernels::serial::csr_gemv_t(s, v, out) : kernels::omp::csr_gemv_t(s, v, out);
  }
}

double Matrix::row_dot(std::size_t i, std::span<const double> x) const {
  double acc = 0.0;
  for_each_in_row(i, [&](std::size_t j, double a) { acc += a * x[j]; });
  return acc;
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw ArgumentError("slice_rows: invalid row range");
  if (const auto* d = std::get_if<DenseMatrix>(&storage_)) {
    const auto first = d->values().begin() + static_cast<std::ptrdiff_t>(begin * d->cols());
    const auto last = d->values().begin() + static_cast<std::ptrdiff_t>(end * d->cols());
    return DenseMatrix(end - begin, d->cols(), std::vector<double>(first, last));
  }
  const auto& s = std::get<CsrMatrix>(storage_);
  CsrMatrix out(s.cols());
  for (std::size_t i = begin; i < end; ++i) out.push_row(s.row_indices(i), s.row_values(i));
  return out;
}

Matrix Matrix::vstack(std::span<const Matrix> blocks) {
  if (blocks.empty()) return DenseMatrix();
  const std::size_t cols = blocks.front().cols();
  bool any_sparse = false;
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw DimensionError("vstack: column count mismatch");
    any_sparse = any_sparse || b.is_sparse();
    rows += b.rows();
  }
  if (any_sparse) {
    CsrMatrix out(cols);
    for (const auto& b : blocks) {
      const CsrMatrix s = b.to_sparse();
      for (std::size_t i = 0; i < s.rows(); ++i) out.push_row(s.row_indices(i), s.row_values(i));
    }
    return out;
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& b : blocks) values.insert(values.end(), b.dense().values().begin(), b.dense().values().end());
  return DenseMatrix(rows, cols, std::move(values));
}

Matrix Matrix::with_preferred_storage() const {
  if (fill_ratio() > kDenseFillThreshold) return to_dense();
  return to_sparse();
}

DenseMatrix Matrix::to_dense() const {
  if (const auto* d = std::get_if<DenseMatrix>(&storage_)) return *d;
  const auto& s = std::get<CsrMatrix>(storage_);
  DenseMatrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto idx = s.row_indices(i);
    const auto val = s.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) out(i, idx[k]) = val[k];
  }
  return out;
}

CsrMatrix Matrix::to_sparse() const {
  if (const auto* s = std::get_if<CsrMatrix>(&storage_)) return *s;
  const auto& d = std::get<DenseMatrix>(storage_);
  CsrMatrix out(d.cols());
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    idx.clear();
    val.clear();
    const auto r = d.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(j));
        val.push_back(r[j]);
      }
    }
    out.push_row(idx, val);
  }
  return out;
}

Matrix Matrix::with_leading_ones() const {
  if (const auto* d = std::get_if<DenseMatrix>(&storage_)) {
    DenseMatrix out(d->rows(), d->cols() + 1);
    for (std::size_t i = 0; i < d->rows(); ++i) {
      out(i, 0) = 1.0;
      std::copy(d->row(i).begin(), d->row(i).end(), out.row(i).begin() + 1);
    }
    return out;
  }
  const auto& s = std::get<CsrMatrix>(storage_);
  CsrMatrix out(s.cols() + 1);
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    idx.assign(1, 0);
    val.assign(1, 1.0);
    for (auto j : s.row_indices(i)) idx.push_back(j + 1);
    val.insert(val.end(), s.row_values(i).begin(), s.row_values(i).end());
    out.push_row(idx, val);
  }
  return out;
}

bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.values() == b.values();
}

bool operator==(const CsrMatrix& a, const CsrMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.row_ptr() == b.row_ptr() && a.col_idx() == b.col_idx() &&
         a.values() == b.values();
}

}  // namespace pipadmm
