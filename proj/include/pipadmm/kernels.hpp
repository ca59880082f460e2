#ifndef PIPADMM_KERNELS_HPP_
#define PIPADMM_KERNELS_HPP_

// Data-parallel inner loops of the solver. Every kernel exists twice: a serial
// reference in `kernels::serial` and an OpenMP version in `kernels::omp`. Both
// accumulate each output entry in ascending row order, so the two agree bitwise;
// tests/unit/kernels_test.cpp checks exactly that.

#include <cstddef>
#include <span>

#include "pipadmm/matrix.hpp"

namespace pipadmm::kernels {

//! Loops shorter than this many multiply-adds stay serial inside the OpenMP kernels.
inline constexpr std::size_t kParallelWorkThreshold = 1 << 15;

namespace serial {
void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> out);
void gemv_t(const DenseMatrix& a, std::span<const double> v, std::span<double> out);
void csr_gemv(const CsrMatrix& a, std::span<const double> x, std::span<double> out);
void csr_gemv_t(const CsrMatrix& a, std::span<const double> v, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace serial

namespace omp {
void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> out);
//! Parallel over column blocks; each column still sums rows in ascending order.
void gemv_t(const DenseMatrix& a, std::span<const double> v, std::span<double> out);
void csr_gemv(const CsrMatrix& a, std::span<const double> x, std::span<double> out);
//! Parallel over column blocks; each thread scans all rows for its block.
void csr_gemv_t(const CsrMatrix& a, std::span<const double> v, std::span<double> out);
}  // namespace omp

//! Number of OpenMP threads available to the parallel kernels (1 without OpenMP).
int max_threads();

}  // namespace pipadmm::kernels

#endif  // PIPADMM_KERNELS_HPP_
