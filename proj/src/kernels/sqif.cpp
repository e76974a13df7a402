#include "pargrid/kernels/sqif.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pargrid/kernels/mix64.hpp"

namespace pargrid::kernels {

void SqifParams::validate() const
{
    if (dt <= 0.0) {
        throw std::invalid_argument("sqif: dt must be > 0");
    }
    if (t_max < dt) {
        throw std::invalid_argument("sqif: t_max must be >= dt");
    }
    if (n_units < 1) {
        throw std::invalid_argument("sqif: unit count must be >= 1");
    }
    if (flux_points.empty()) {
        throw std::invalid_argument("sqif: flux point list must be non-empty");
    }
    if (spread < 0.0) {
        throw std::invalid_argument("sqif: spread must be >= 0");
    }
}

double unit_spread(std::uint64_t seed, std::size_t unit)
{
    return 2.0 * u64_to_unit(mix64_at(seed, unit)) - 1.0;
}

namespace {

// Per-unit phase offsets 2*pi*flux*(1 + spread*s_i); constant over one
// integration, so series_sqif computes them once.
std::vector<double> phase_offsets(double flux, const SqifParams& p, std::size_t unit_offset,
                                  std::size_t n)
{
    std::vector<double> offsets(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = unit_spread(p.seed, unit_offset + i);
        offsets[i] = 2.0 * std::numbers::pi * flux * (1.0 + p.spread * s);
    }
    return offsets;
}

void rhs_into(std::span<const double> phi, double left_halo, double right_halo,
              std::span<const double> offsets, const SqifParams& p, std::span<double> dphi)
{
    const std::size_t n = phi.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? left_halo : phi[i - 1];
        const double right = i + 1 == n ? right_halo : phi[i + 1];
        const double phase = phi[i] + offsets[i];
        dphi[i] = p.bias - p.damping * std::sin(phase)
            + p.coupling * (left - 2.0 * phi[i] + right);
    }
}

std::size_t step_count(const SqifParams& p)
{
    const double steps = std::ceil(p.t_max / p.dt - 1e-9);
    return steps < 1.0 ? 1 : static_cast<std::size_t>(steps);
}

} // namespace

std::vector<double> sqif_rhs(std::span<const double> phi, double left_halo, double right_halo,
                             double flux, const SqifParams& p, std::size_t unit_offset)
{
    std::vector<double> dphi(phi.size());
    const auto offsets = phase_offsets(flux, p, unit_offset, phi.size());
    rhs_into(phi, left_halo, right_halo, offsets, p, dphi);
    return dphi;
}

double series_sqif(double flux, const SqifParams& p, BlockRange owned,
                   const HaloHook* halo_exchange)
{
    p.validate();
    if (owned.end() > p.n_units) {
        throw std::invalid_argument("series_sqif: owned range exceeds the unit count");
    }
    if (owned.empty()) {
        return 0.0;
    }

    const std::size_t n = owned.len;
    const std::size_t n_steps = step_count(p);
    const std::size_t n_discard = n_steps / 2;
    const std::size_t n_keep = n_steps - n_discard;

    const auto offsets = phase_offsets(flux, p, owned.start, n);
    // Halos are exchanged (or reflected) against each stage state before
    // the stage's derivative is evaluated.
    const auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        const auto [lh, rh] = halo_exchange ? (*halo_exchange)(y.front(), y.back())
                                            : std::pair{y.front(), y.back()};
        rhs_into(y, lh, rh, offsets, p, dy);
    };

    std::vector<double> phi(n, 0.0);
    std::vector<double> stage(n);
    std::vector<double> k1(n);
    std::vector<double> k2(n);
    std::vector<double> k3(n);
    std::vector<double> k4(n);
    double voltage_sum = 0.0;

    for (std::size_t step = 0; step < n_steps; ++step) {
        rhs(phi, k1);
        for (std::size_t i = 0; i < n; ++i) {
            stage[i] = phi[i] + 0.5 * p.dt * k1[i];
        }
        rhs(stage, k2);
        for (std::size_t i = 0; i < n; ++i) {
            stage[i] = phi[i] + 0.5 * p.dt * k2[i];
        }
        rhs(stage, k3);
        for (std::size_t i = 0; i < n; ++i) {
            stage[i] = phi[i] + p.dt * k3[i];
        }
        rhs(stage, k4);

        double delta_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = p.dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            phi[i] += delta;
            delta_sum += delta;
            if (!std::isfinite(phi[i])) {
                throw std::runtime_error("series_sqif: non-finite state at step "
                                         + std::to_string(step) + ", unit "
                                         + std::to_string(owned.start + i));
            }
        }
        if (step >= n_discard) {
            voltage_sum += delta_sum / (static_cast<double>(n) * p.dt);
        }
    }
    return voltage_sum / static_cast<double>(n_keep);
}

TransferCurve sqif_sweep_serial(const SqifParams& p)
{
    p.validate();
    TransferCurve curve;
    curve.flux = p.flux_points;
    curve.voltage.reserve(p.flux_points.size());
    const BlockRange all{0, p.n_units};
    for (double x : p.flux_points) {
        curve.voltage.push_back(series_sqif(x, p, all));
    }
    return curve;
}

std::optional<TransferCurve> sqif_sweep_tp(WorkerCtx& ctx, const SqifParams& p)
{
    p.validate();
    const auto mine = block_partition(p.flux_points.size(), ctx.world_size())[
        static_cast<std::size_t>(ctx.rank())];
    const BlockRange all{0, p.n_units};
    std::vector<double> voltages(mine.len);
    for (std::size_t k = 0; k < mine.len; ++k) {
        voltages[k] = series_sqif(p.flux_points[mine.start + k], p, all);
    }
    auto gathered = gather(ctx, 0, voltages);
    if (!gathered) {
        return std::nullopt;
    }
    return TransferCurve{p.flux_points, std::move(gathered->values)};
}

std::optional<TransferCurve> sqif_sweep_dp(WorkerCtx& ctx, const SqifParams& p)
{
    p.validate();
    const int rank = ctx.rank();
    const int world = ctx.world_size();
    const auto ranges = block_partition(p.n_units, world);
    const auto mine = ranges[static_cast<std::size_t>(rank)];

    // Block sizes are non-increasing, so non-empty slices form a prefix of
    // the rank order: the chain neighbors of a non-empty rank are simply
    // rank-1 and rank+1 (when the latter is non-empty).
    const bool has_left = !mine.empty() && rank > 0;
    const bool has_right = !mine.empty() && rank + 1 < world
        && !ranges[static_cast<std::size_t>(rank + 1)].empty();
    const std::int32_t halo_tags = ctx.reserve_tags(2);
    const std::int32_t to_left = halo_tags + 0;
    const std::int32_t to_right = halo_tags + 1;

    HaloHook hook = [&](double first_owned, double last_owned) -> std::pair<double, double> {
        if (has_left) {
            detail::send_raw(ctx, rank - 1, to_left, Payload::from_f64({first_owned}));
        }
        if (has_right) {
            detail::send_raw(ctx, rank + 1, to_right, Payload::from_f64({last_owned}));
        }
        const double left = has_left
            ? detail::recv_raw(ctx, rank - 1, to_right).to_f64().front()
            : first_owned;
        const double right = has_right
            ? detail::recv_raw(ctx, rank + 1, to_left).to_f64().front()
            : last_owned;
        return {left, right};
    };
    const bool proper_subset = mine.len < p.n_units;

    const std::size_t n_points = p.flux_points.size();
    std::vector<double> weighted(n_points, 0.0);
    std::vector<double> own(n_points, 0.0);
    for (std::size_t k = 0; k < n_points; ++k) {
        own[k] = series_sqif(p.flux_points[k], p, mine, proper_subset ? &hook : nullptr);
        weighted[k] = own[k] * static_cast<double>(mine.len);
    }

    if (world == 1) {
        return TransferCurve{p.flux_points, std::move(own)};
    }
    auto combined = reduce(ctx, 0, ReduceOp::sum, weighted);
    if (!combined) {
        return std::nullopt;
    }
    for (double& v : *combined) {
        v /= static_cast<double>(p.n_units);
    }
    return TransferCurve{p.flux_points, std::move(*combined)};
}

} // namespace pargrid::kernels
