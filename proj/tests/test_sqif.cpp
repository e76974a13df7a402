#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pargrid/kernels/sqif.hpp"

using namespace pargrid;
using namespace pargrid::kernels;

namespace {

SqifParams small_params()
{
    SqifParams p;
    p.bias = 0.9;
    p.coupling = 0.5;
    p.damping = 1.0;
    p.spread = 0.05;
    p.dt = 0.01;
    p.t_max = 1.0;
    p.n_units = 12;
    p.seed = 5;
    p.flux_points = {-1.0, -0.4, 0.0, 0.3, 0.9};
    return p;
}

} // namespace

TEST_SUITE("sqif")
{
    TEST_CASE("parameter validation")
    {
        SqifParams p = small_params();
        p.dt = 0.0;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p = small_params();
        p.t_max = 0.001;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p = small_params();
        p.flux_points.clear();
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p = small_params();
        p.n_units = 0;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p = small_params();
        p.spread = -0.1;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }

    TEST_CASE("decoupled units ignore their halos")
    {
        SqifParams p = small_params();
        p.coupling = 0.0;
        p.spread = 0.0;
        const std::vector<double> phi{0.1, -0.2, 0.3};
        const auto a = sqif_rhs(phi, 100.0, -100.0, 0.25, p, 0);
        const auto b = sqif_rhs(phi, 0.0, 0.0, 0.25, p, 0);
        CHECK(oracles::bits_equal(a, b));
    }

    TEST_CASE("the coupling term vanishes on a constant state")
    {
        SqifParams p = small_params();
        p.bias = 0.0;
        p.damping = 0.0;
        p.coupling = 2.5;
        const std::vector<double> phi(6, 0.7);
        // Reflective halos equal to the constant: Laplacian of a constant.
        const auto d = sqif_rhs(phi, 0.7, 0.7, 0.4, p, 0);
        for (double v : d) {
            CHECK(v == 0.0);
        }
    }

    TEST_CASE("a sliced derivative equals the whole-vector derivative")
    {
        SqifParams p = small_params();
        p.n_units = 10;
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        std::vector<double> phi(10);
        for (auto& v : phi) {
            v = dist(rng);
        }
        const auto whole = sqif_rhs(phi, phi.front(), phi.back(), 0.6, p, 0);

        const std::vector<double> lo(phi.begin(), phi.begin() + 6);
        const std::vector<double> hi(phi.begin() + 6, phi.end());
        const auto left_part = sqif_rhs(lo, lo.front(), phi[6], 0.6, p, 0);
        const auto right_part = sqif_rhs(hi, phi[5], hi.back(), 0.6, p, 6);

        std::vector<double> stitched = left_part;
        stitched.insert(stitched.end(), right_part.begin(), right_part.end());
        CHECK(oracles::bits_equal(stitched, whole));
    }

    TEST_CASE("the origin is a fixed point of the flux-free undamped-bias system")
    {
        SqifParams p;
        p.bias = 0.0;
        p.coupling = 0.0;
        p.spread = 0.0;
        p.damping = 1.0;
        p.dt = 0.5;
        p.t_max = 0.5; // single step, and the transient rule keeps it
        p.n_units = 4;
        p.flux_points = {0.0};
        const double v = series_sqif(0.0, p, BlockRange{0, 4});
        CHECK(v == 0.0);
    }

    TEST_CASE("a full-range owned slice equals the serial sweep")
    {
        const SqifParams p = small_params();
        const auto curve = sqif_sweep_serial(p);
        REQUIRE(curve.voltage.size() == p.flux_points.size());
        for (std::size_t i = 0; i < p.flux_points.size(); ++i) {
            const double direct = series_sqif(p.flux_points[i], p, BlockRange{0, p.n_units});
            CHECK(curve.voltage[i] == direct);
        }
        for (double v : curve.voltage) {
            CHECK(std::isfinite(v));
        }
    }

    TEST_CASE("single-point sweep yields a single-point curve")
    {
        SqifParams p = small_params();
        p.flux_points = {0.25};
        const auto curve = sqif_sweep_serial(p);
        CHECK(curve.flux == std::vector<double>{0.25});
        CHECK(curve.voltage.size() == 1);
    }

    TEST_CASE("two halo-exchanging ranks match the one-rank integration")
    {
        SqifParams p = small_params();
        p.n_units = 8;
        p.flux_points = {0.3};
        const auto expect = sqif_sweep_serial(p);
        auto results = launch(2, [&](WorkerCtx& ctx) { return sqif_sweep_dp(ctx, p); });
        REQUIRE(results[0].has_value());
        CHECK(oracles::max_abs_diff(results[0]->voltage, expect.voltage) <= 1e-12);
    }

    TEST_CASE("task- and data-parallel sweeps agree with serial for every P")
    {
        const SqifParams p = small_params();
        const auto expect = sqif_sweep_serial(p);
        for (int world : {1, 2, 3}) {
            auto tp = launch(world, [&](WorkerCtx& ctx) { return sqif_sweep_tp(ctx, p); });
            auto dp = launch(world, [&](WorkerCtx& ctx) { return sqif_sweep_dp(ctx, p); });
            REQUIRE(tp[0].has_value());
            REQUIRE(dp[0].has_value());
            if (world == 1) {
                CHECK(oracles::bits_equal(tp[0]->voltage, expect.voltage));
                CHECK(oracles::bits_equal(dp[0]->voltage, expect.voltage));
            } else {
                CHECK(oracles::bits_equal(tp[0]->voltage, expect.voltage));
                CHECK(oracles::max_abs_diff(dp[0]->voltage, expect.voltage) <= 1e-12);
            }
            CHECK(oracles::max_abs_diff(tp[0]->voltage, dp[0]->voltage) <= 1e-12);
        }
    }

    TEST_CASE("idle ranks do not disturb a tiny sweep")
    {
        SqifParams p = small_params();
        p.flux_points = {-0.5, 0.0, 0.5};
        const auto expect = sqif_sweep_serial(p);
        auto tp = launch(8, [&](WorkerCtx& ctx) { return sqif_sweep_tp(ctx, p); });
        REQUIRE(tp[0].has_value());
        CHECK(oracles::bits_equal(tp[0]->voltage, expect.voltage));

        SqifParams narrow = small_params();
        narrow.n_units = 3;
        narrow.flux_points = {0.2};
        const auto nexpect = sqif_sweep_serial(narrow);
        auto dp = launch(8, [&](WorkerCtx& ctx) { return sqif_sweep_dp(ctx, narrow); });
        REQUIRE(dp[0].has_value());
        CHECK(oracles::max_abs_diff(dp[0]->voltage, nexpect.voltage) <= 1e-12);
    }

    TEST_CASE("the production-scale unit count is accepted")
    {
        SqifParams p = small_params();
        p.n_units = 768;
        p.t_max = 0.02; // two steps; existence, not physics
        p.flux_points = {0.1};
        p.validate();
        const auto curve = sqif_sweep_serial(p);
        REQUIRE(curve.voltage.size() == 1);
        CHECK(std::isfinite(curve.voltage[0]));
    }

    TEST_CASE("a diverging integration reports the failing step")
    {
        SqifParams p = small_params();
        p.coupling = 1e160;
        p.n_units = 4;
        p.spread = 0.5;
        p.flux_points = {0.37};
        try {
            series_sqif(0.37, p, BlockRange{0, 4});
            FAIL("expected divergence");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
            CHECK(std::string(e.what()).find("step") != std::string::npos);
        }
    }

    TEST_CASE("owned range past the chain end is rejected")
    {
        const SqifParams p = small_params();
        CHECK_THROWS_AS(series_sqif(0.0, p, BlockRange{10, 5}), std::invalid_argument);
    }
}
