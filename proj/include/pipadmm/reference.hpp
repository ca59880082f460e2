#ifndef PIPADMM_REFERENCE_HPP_
#define PIPADMM_REFERENCE_HPP_

// Single-threaded reference implementation of the partition-insensitive solver:
// one loop over the row-stacked data, no cluster, serial kernels. Tests use it as
// the oracle for the distributed driver.

#include <span>

#include "pipadmm/core_types.hpp"
#include "pipadmm/solver.hpp"

namespace pipadmm::reference {

//! Iterates on vstack(shards) as one shard. Without an eta override, eta is the power-method
//! estimate of the stacked matrix, so results match solve() with D = 1 bit for bit.
//! config.backend is ignored.
FitResult solve_serial(const ProblemSpec& spec, std::span<const DesignShard> shards, const SolverConfig& config);

//! Row-stacks the shards into a single shard with index 1.
DesignShard stack_shards(std::span<const DesignShard> shards);

}  // namespace pipadmm::reference

#endif  // PIPADMM_REFERENCE_HPP_
