#include "pargrid/kernels/batch.hpp"

#include <stdexcept>
#include <string>

#include "pargrid/dist_map.hpp"
#include "pargrid/kernels/mix64.hpp"

namespace pargrid::kernels {

double batch_work(std::size_t item_index, const BatchJob& job)
{
    if (item_index >= job.n_items) {
        throw std::out_of_range("batch_work: item " + std::to_string(item_index)
                                + " outside [0, " + std::to_string(job.n_items) + ")");
    }
    std::uint64_t state = job.seed ^ (0xD1B54A32D192ED03ULL * (item_index + 1));
    // Each output feeds the next state, so the chain is sequential and the
    // loop cannot be strength-reduced away.
    for (std::uint64_t i = 0; i < job.work_cost; ++i) {
        state = mix64_next(state);
    }
    return u64_to_unit(state);
}

std::vector<double> run_batch_serial(const BatchJob& job)
{
    std::vector<double> out(job.n_items);
    for (std::size_t i = 0; i < job.n_items; ++i) {
        out[i] = batch_work(i, job);
    }
    return out;
}

std::optional<std::vector<double>> run_batch_parallel(WorkerCtx& ctx, const BatchJob& job)
{
    const auto mine = block_partition(job.n_items, ctx.world_size())[
        static_cast<std::size_t>(ctx.rank())];
    std::vector<double> slice(mine.len);
    for (std::size_t k = 0; k < mine.len; ++k) {
        slice[k] = batch_work(mine.start + k, job);
    }
    auto gathered = gather(ctx, 0, slice);
    if (!gathered) {
        return std::nullopt;
    }
    return std::move(gathered->values);
}

} // namespace pargrid::kernels
