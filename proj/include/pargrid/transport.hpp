#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "pargrid/message.hpp"

namespace pargrid {

enum class Backend {
    inproc, ///< workers exchange messages through in-memory queues
    socket, ///< workers exchange byte-exact frames over loopback TCP
};

enum class ReduceOp { sum, min, max };

struct LaunchOptions {
    Backend backend = Backend::inproc;
    /// Blocking receives (and everything built on them) give up after this
    /// long and raise a deadlock-suspicion error.
    std::chrono::milliseconds timeout = std::chrono::seconds(60);
};

/// A blocking receive (or collective) waited longer than the configured
/// timeout; usually a missing or mismatched peer call.
class TimeoutError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised inside surviving workers when a peer failed and the launch is
/// being torn down.
class AbortError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
class Endpoint;
}

/// User messages must carry tags below this bound; everything above is
/// reserved for collective plumbing (see WorkerCtx::reserve_tags).
inline constexpr std::int32_t kUserTagLimit = std::int32_t{1} << 30;

/// One worker's identity within a launch plus its handle to the
/// communication fabric. Every SPMD operation executes against one; a ctx
/// must only be used from its own worker.
class WorkerCtx {
public:
    int rank() const { return rank_; }
    int world_size() const { return world_size_; }

    /// Reserves a contiguous block of internal tags. The counter starts at
    /// kUserTagLimit and advances identically on every rank as long as all
    /// ranks reserve in the same order, which SPMD code does by
    /// construction; distributed arrays use this to keep their collective
    /// traffic disjoint from user sends and from each other.
    std::int32_t reserve_tags(std::int32_t count);

    detail::Endpoint& endpoint() { return *endpoint_; }

    WorkerCtx(int rank, int world_size, detail::Endpoint* endpoint)
        : rank_(rank), world_size_(world_size), endpoint_(endpoint)
    {
    }

private:
    int rank_ = 0;
    int world_size_ = 1;
    detail::Endpoint* endpoint_ = nullptr;
    std::int32_t next_reserved_ = kUserTagLimit;
};

/// Enqueues `payload` for `dest`. Payloads have value semantics: mutating
/// the sender's copy after send never affects what dest receives.
/// Self-sends are disallowed. Tags must lie in [0, kUserTagLimit).
void send(WorkerCtx& ctx, int dest, std::int32_t tag, Payload payload);

/// Blocks until a message with matching (source, tag) arrives. Messages on
/// one (source, dest, tag) channel are delivered in send order.
Payload recv(WorkerCtx& ctx, int source, std::int32_t tag);

/// No rank returns until all ranks of the launch have entered.
void barrier(WorkerCtx& ctx);

/// Every rank returns a payload bit-identical to the root's. Non-root
/// callers ignore their `payload_at_root` argument.
Payload broadcast(WorkerCtx& ctx, int root, Payload payload_at_root = {});

/// Elementwise combination over ranks, folded in ascending-rank order so
/// floating-point results are reproducible. The combined array lands on
/// root; every other rank gets an empty result.
std::optional<std::vector<double>> reduce(WorkerCtx& ctx, int root, ReduceOp op,
                                          const std::vector<double>& value);

struct GatherResult {
    std::vector<double> values;       ///< per-rank arrays concatenated by ascending rank
    std::vector<std::size_t> lengths; ///< per-rank element counts, rank order
};

/// Concatenates per-rank arrays on root in ascending rank order; per-rank
/// lengths may differ. Non-root ranks get an empty result.
std::optional<GatherResult> gather(WorkerCtx& ctx, int root, const std::vector<double>& value);

namespace detail {

// Internal entry points that accept reserved tags; collective plumbing
// (transport collectives, darray redistribution) goes through these.
void send_raw(WorkerCtx& ctx, int dest, std::int32_t tag, Payload payload);
Payload recv_raw(WorkerCtx& ctx, int source, std::int32_t tag);

void launch_raw(int world_size, const LaunchOptions& options,
                const std::function<void(WorkerCtx&)>& program);

} // namespace detail

/// Runs `program` on world_size SPMD workers, each with its own WorkerCtx,
/// and returns after all workers complete. The first worker failure is
/// propagated as an exception naming the rank. When the program returns a
/// value, launch returns the per-rank results in rank order.
template <typename Program>
auto launch(int world_size, Program&& program, LaunchOptions options = {})
{
    using Result = std::invoke_result_t<Program&, WorkerCtx&>;
    if constexpr (std::is_void_v<Result>) {
        detail::launch_raw(world_size, options,
                           std::function<void(WorkerCtx&)>(std::forward<Program>(program)));
    } else {
        std::vector<Result> results(world_size > 0 ? static_cast<std::size_t>(world_size) : 0);
        auto& prog = program;
        detail::launch_raw(world_size, options, [&](WorkerCtx& ctx) {
            results[static_cast<std::size_t>(ctx.rank())] = prog(ctx);
        });
        return results;
    }
}

} // namespace pargrid
