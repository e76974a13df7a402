#include <doctest.h>

#include <chrono>

#include "oracles.hpp"
#include "pargrid/dist_map.hpp"
#include "pargrid/kernels/batch.hpp"

using namespace pargrid;
using namespace pargrid::kernels;

TEST_SUITE("batch")
{
    TEST_CASE("checksums are deterministic and index-sensitive")
    {
        const BatchJob job{16, 100, 1};
        CHECK(batch_work(0, job) == batch_work(0, job));
        CHECK(batch_work(0, job) != batch_work(1, job));
        const double v = batch_work(3, job);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK_THROWS_AS(batch_work(16, job), std::out_of_range);
    }

    TEST_CASE("doubling the work roughly doubles the wall time")
    {
        using clock = std::chrono::steady_clock;
        const auto measure = [](std::uint64_t cost) {
            const BatchJob job{4, cost, 9};
            const auto t0 = clock::now();
            run_batch_serial(job);
            return std::chrono::duration<double>(clock::now() - t0).count();
        };
        measure(3'000'000); // warm up
        const double base = measure(3'000'000);
        const double doubled = measure(6'000'000);
        const double ratio = doubled / base;
        CHECK(ratio > 1.0);
        CHECK(ratio < 3.0);
    }

    TEST_CASE("serial batch sizes")
    {
        CHECK(run_batch_serial(BatchJob{0, 10, 4}).empty());
        CHECK(run_batch_serial(BatchJob{63, 10, 4}).size() == 63);
    }

    TEST_CASE("63 items split over 4 ranks as 16,16,16,15")
    {
        const auto ranges = block_partition(63, 4);
        std::vector<std::size_t> sizes;
        for (const auto& r : ranges) {
            sizes.push_back(r.len);
        }
        CHECK(sizes == std::vector<std::size_t>{16, 16, 16, 15});
    }

    TEST_CASE("parallel output is bit-identical to serial for every P")
    {
        const BatchJob job{63, 250, 42};
        const auto expect = run_batch_serial(job);
        for (int p : {1, 2, 3, 4, 8}) {
            auto results =
                launch(p, [&](WorkerCtx& ctx) { return run_batch_parallel(ctx, job); });
            REQUIRE(results[0].has_value());
            CHECK(oracles::bits_equal(*results[0], expect));
            for (int r = 1; r < p; ++r) {
                CHECK_FALSE(results[static_cast<std::size_t>(r)].has_value());
            }
        }
    }

    TEST_CASE("zero items parallelize too")
    {
        const BatchJob job{0, 10, 7};
        auto results = launch(3, [&](WorkerCtx& ctx) { return run_batch_parallel(ctx, job); });
        REQUIRE(results[0].has_value());
        CHECK(results[0]->empty());
    }
}
