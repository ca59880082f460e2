#include "pipadmm/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace pipadmm::kernels {

namespace {

// Half-open column range owned by thread `t` of `nthreads`.
std::pair<std::size_t, std::size_t> block_of(std::size_t n, int t, int nthreads) {
  const std::size_t base = n / static_cast<std::size_t>(nthreads);
  const std::size_t extra = n % static_cast<std::size_t>(nthreads);
  const auto ut = static_cast<std::size_t>(t);
  const std::size_t begin = ut * base + std::min(ut, extra);
  return {begin, begin + base + (ut < extra ? 1 : 0)};
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace serial {

void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
}

void gemv_t(const DenseMatrix& a, std::span<const double> v, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double vi = v[i];
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * vi;
  }
}

void csr_gemv(const CsrMatrix& a, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto idx = a.row_indices(i);
    const auto val = a.row_values(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) acc += val[k] * x[idx[k]];
    out[i] = acc;
  }
}

void csr_gemv_t(const CsrMatrix& a, std::span<const double> v, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto idx = a.row_indices(i);
    const auto val = a.row_values(i);
    const double vi = v[i];
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += val[k] * vi;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc;
}

}  // namespace serial

namespace omp {

void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const bool parallel = a.rows() * a.cols() >= kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    out[static_cast<std::size_t>(i)] = serial::dot(a.row(static_cast<std::size_t>(i)), x);
  }
}

void gemv_t(const DenseMatrix& a, std::span<const double> v, std::span<double> out) {
  const bool parallel = a.rows() * a.cols() >= kParallelWorkThreshold;
#pragma omp parallel if (parallel)
  {
    const auto [begin, end] = block_of(a.cols(), omp_get_thread_num(), omp_get_num_threads());
    for (std::size_t j = begin; j < end; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double* r = a.row(i).data();
      const double vi = v[i];
      for (std::size_t j = begin; j < end; ++j) out[j] += r[j] * vi;
    }
  }
}

void csr_gemv(const CsrMatrix& a, std::span<const double> x, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const bool parallel = a.nnz() >= kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto idx = a.row_indices(i);
    const auto val = a.row_values(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) acc += val[k] * x[idx[k]];
    out[i] = acc;
  }
}

void csr_gemv_t(const CsrMatrix& a, std::span<const double> v, std::span<double> out) {
  const bool parallel = a.nnz() >= kParallelWorkThreshold;
#pragma omp parallel if (parallel)
  {
    const auto [begin, end] = block_of(a.cols(), omp_get_thread_num(), omp_get_num_threads());
    for (std::size_t j = begin; j < end; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto idx = a.row_indices(i);
      const auto val = a.row_values(i);
      const double vi = v[i];
      auto k = static_cast<std::size_t>(
          std::lower_bound(idx.begin(), idx.end(), static_cast<std::uint32_t>(begin)) - idx.begin());
      for (; k < idx.size() && idx[k] < end; ++k) out[idx[k]] += val[k] * vi;
    }
  }
}

}  // namespace omp

}  // namespace pipadmm::kernels
