#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pargrid/transport.hpp"

namespace pargrid::kernels {

/// A batch of independent work items; the per-item cost knob makes the
/// kernel's runtime tunable for speedup measurements.
struct BatchJob {
    std::size_t n_items = 0;
    std::uint64_t work_cost = 1; ///< mixing-function iterations per item
    std::uint64_t seed = 0;
};

/// Deterministic checksum in [0, 1) for one item: work_cost iterations of a
/// 64-bit mixing function seeded from (seed, item_index). Runtime scales
/// linearly with work_cost.
double batch_work(std::size_t item_index, const BatchJob& job);

/// batch_work over items 0..n_items-1, in order.
std::vector<double> run_batch_serial(const BatchJob& job);

/// Collective: items are block-partitioned over ranks, each rank processes
/// its slice, results are gathered to rank 0 in global item order. Output
/// is bit-identical to run_batch_serial for every worker count.
std::optional<std::vector<double>> run_batch_parallel(WorkerCtx& ctx, const BatchJob& job);

} // namespace pargrid::kernels
