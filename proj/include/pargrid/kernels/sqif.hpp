#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pargrid/dist_map.hpp"
#include "pargrid/transport.hpp"

namespace pargrid::kernels {

/// Parameters of the coupled-unit phase model swept over external flux.
/// Each unit i obeys
///   dphi_i/dt = bias - damping * sin(phi_i + 2*pi*flux*(1 + spread*s_i))
///             + coupling * (phi_{i-1} - 2*phi_i + phi_{i+1}),
/// with s_i a per-unit deterministic value in [-1, 1) drawn from (seed, i)
/// and reflective boundaries at the chain ends. The observable per flux
/// point is the time-averaged mean dphi/dt after the transient.
struct SqifParams {
    double bias = 0.0;
    std::vector<double> flux_points; ///< external-flux sample points
    double coupling = 0.0;
    double dt = 0.01;
    double damping = 1.0;
    std::size_t n_units = 1;
    double spread = 0.0; ///< per-unit parameter-spread amplitude
    double t_max = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Mean-voltage curve over the flux sample points.
struct TransferCurve {
    std::vector<double> flux;
    std::vector<double> voltage;
};

/// Per-unit parameter spread s_i in [-1, 1), deterministic in (seed, unit).
double unit_spread(std::uint64_t seed, std::size_t unit);

/// Derivative of the owned slice given its one-element halos. Pure and
/// local except for the nearest-neighbor coupling term; `unit_offset` is
/// the global index of phi[0].
std::vector<double> sqif_rhs(std::span<const double> phi, double left_halo, double right_halo,
                             double flux, const SqifParams& p, std::size_t unit_offset);

/// Supplies (left, right) halo values for a stage state, given the owned
/// slice's boundary values. Absent hook means the slice is the whole chain
/// and both ends reflect.
using HaloHook = std::function<std::pair<double, double>(double first_owned, double last_owned)>;

/// Integrates the owned slice from phi(0) = 0 with fixed-step RK4 for
/// ceil(t_max/dt) steps, exchanging halos before each of the four stages
/// when a hook is supplied. The first half of the steps is discarded as
/// transient; returns the time-average of the mean per-step dphi/dt over
/// the owned units (callers weight by unit count to combine across ranks).
double series_sqif(double flux, const SqifParams& p, BlockRange owned,
                   const HaloHook* halo_exchange = nullptr);

/// series_sqif over every flux point on the full unit range.
TransferCurve sqif_sweep_serial(const SqifParams& p);

/// Collective, task-parallel: flux points are block-partitioned over
/// ranks, each rank integrates its points over all units, and the curve is
/// gathered to rank 0 in flux order.
std::optional<TransferCurve> sqif_sweep_tp(WorkerCtx& ctx, const SqifParams& p);

/// Collective, data-parallel: units are block-partitioned over ranks,
/// every rank integrates every flux point on its slice with per-stage halo
/// exchange, and per-point voltages are combined by a unit-count-weighted
/// sum on rank 0.
std::optional<TransferCurve> sqif_sweep_dp(WorkerCtx& ctx, const SqifParams& p);

} // namespace pargrid::kernels
