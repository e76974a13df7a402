#include <doctest.h>

#include "oracles.hpp"
#include "pargrid/kernels/sar.hpp"

using namespace pargrid;
using namespace pargrid::kernels;
using oracles::cd;

TEST_SUITE("sar")
{
    TEST_CASE("field generation is deterministic in the seed")
    {
        const SarConfig cfg{6, 5, 11};
        CHECK(oracles::bits_equal(generate_field(cfg), generate_field(cfg)));
        const SarConfig other{6, 5, 12};
        CHECK_FALSE(oracles::bits_equal(generate_field(cfg), generate_field(other)));
    }

    TEST_CASE("zero input forms a zero image")
    {
        const SarConfig cfg{5, 8, 0};
        const auto image = form_image_serial(ComplexMatrix(5, 8), cfg);
        REQUIRE(image.rows() == 8);
        REQUIRE(image.cols() == 5);
        for (std::size_t i = 0; i < image.rows(); ++i) {
            for (std::size_t j = 0; j < image.cols(); ++j) {
                CHECK(image(i, j) == 0.0);
            }
        }
    }

    TEST_CASE("an impulse spreads to constant magnitude 1/(n*m)")
    {
        const SarConfig cfg{4, 6, 0};
        ComplexMatrix f(4, 6);
        f(0, 0) = {1.0, 0.0};
        const auto image = form_image_serial(f, cfg);
        const auto expect = oracles::form_image_reference(f);
        CHECK(oracles::max_abs_diff(image, expect) <= 1e-12);
        for (std::size_t i = 0; i < image.rows(); ++i) {
            for (std::size_t j = 0; j < image.cols(); ++j) {
                CHECK(std::abs(image(i, j) - 1.0 / 24.0) <= 1e-14);
            }
        }
    }

    TEST_CASE("serial pipeline tracks the direct-summation reference")
    {
        for (auto [n, m, seed] : {std::tuple<std::size_t, std::size_t, std::uint64_t>{8, 6, 21},
                                  {16, 16, 22},
                                  {7, 13, 23},
                                  {1, 9, 24}}) {
            const SarConfig cfg{n, m, seed};
            const auto field = generate_field(cfg);
            const auto image = form_image_serial(field, cfg);
            const auto expect = oracles::form_image_reference(field);
            CHECK(oracles::max_abs_diff(image, expect) <= 1e-12);
        }
    }

    TEST_CASE("shape validation")
    {
        CHECK_THROWS_AS(form_image_serial(ComplexMatrix(2, 2), SarConfig{3, 2, 0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(generate_field(SarConfig{0, 4, 0}), std::invalid_argument);
    }

    TEST_CASE("parallel image equals serial for every world size")
    {
        const SarConfig cfg{16, 24, 77};
        const auto expect = form_image_serial(generate_field(cfg), cfg);
        for (int p : {1, 2, 3, 5}) {
            auto results = launch(p, [&](WorkerCtx& ctx) {
                return form_image_parallel(ctx, cfg);
            });
            REQUIRE(results[0].has_value());
            if (p == 1) {
                CHECK(oracles::bits_equal(*results[0], expect));
            } else {
                CHECK(oracles::max_abs_diff(*results[0], expect) <= 1e-10);
            }
            for (int r = 1; r < p; ++r) {
                CHECK_FALSE(results[static_cast<std::size_t>(r)].has_value());
            }
        }
    }

    TEST_CASE("odd shapes and more ranks than columns still agree")
    {
        const SarConfig cfg{9, 5, 3};
        const auto expect = form_image_serial(generate_field(cfg), cfg);
        auto results = launch(7, [&](WorkerCtx& ctx) { return form_image_parallel(ctx, cfg); });
        REQUIRE(results[0].has_value());
        CHECK(oracles::max_abs_diff(*results[0], expect) <= 1e-10);
    }

    TEST_CASE("repeated parallel runs reproduce the same bits")
    {
        const SarConfig cfg{12, 10, 555};
        auto one = launch(3, [&](WorkerCtx& ctx) { return form_image_parallel(ctx, cfg); });
        auto two = launch(3, [&](WorkerCtx& ctx) { return form_image_parallel(ctx, cfg); });
        REQUIRE(one[0].has_value());
        REQUIRE(two[0].has_value());
        CHECK(oracles::bits_equal(*one[0], *two[0]));
    }
}
