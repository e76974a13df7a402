#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pargrid/kernels/dft.hpp"

using namespace pargrid;
using namespace pargrid::kernels;
using oracles::cd;

TEST_SUITE("dft")
{
    TEST_CASE("inverse transform matches direct summation for many lengths")
    {
        std::mt19937_64 rng(314);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        // Powers of two, primes, composites with large prime factors.
        for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 12u, 13u, 16u, 17u, 31u, 32u, 60u,
                              127u, 128u, 373u}) {
            std::vector<cd> x(n);
            for (auto& v : x) {
                v = {dist(rng), dist(rng)};
            }
            const auto got = inverse_dft(x);
            const auto expect = oracles::idft_reference(x);
            REQUIRE(got.size() == n);
            double max_err = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                max_err = std::max(max_err, std::abs(got[k] - expect[k]));
            }
            CHECK(max_err <= 1e-12);
        }
    }

    TEST_CASE("impulse spreads to a flat spectrum of 1/N")
    {
        std::vector<cd> x(12, cd{0.0, 0.0});
        x[0] = {1.0, 0.0};
        const auto y = inverse_dft(x);
        for (const auto& v : y) {
            CHECK(std::abs(std::abs(v) - 1.0 / 12.0) <= 1e-15);
        }
    }

    TEST_CASE("empty and singleton inputs pass through")
    {
        CHECK(inverse_dft({}).empty());
        const auto one = inverse_dft({cd{2.5, -1.5}});
        REQUIRE(one.size() == 1);
        CHECK(one[0] == cd{2.5, -1.5});
    }

    TEST_CASE("row and column transforms hit the right axis")
    {
        // 1x4 matrix: idft_rows transforms it, idft_cols leaves it alone.
        ComplexMatrix m(1, 4);
        for (std::size_t j = 0; j < 4; ++j) {
            m(0, j) = {double(j), 0.0};
        }
        const auto rows_done = idft_rows(m);
        std::vector<cd> flat(4);
        for (std::size_t j = 0; j < 4; ++j) {
            flat[j] = m(0, j);
        }
        const auto expect = inverse_dft(flat);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(rows_done(0, j) == expect[j]);
        }
        const auto cols_done = idft_cols(m);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(cols_done(0, j) == m(0, j));
        }
    }

    TEST_CASE("fftshift2 moves (0,0) to the centre")
    {
        RealMatrix m(3, 4);
        m(0, 0) = 1.0;
        m(2, 3) = 2.0;
        const auto s = fftshift2(m);
        CHECK(s(1, 2) == 1.0);                  // (0+1)%3, (0+2)%4
        CHECK(s(0, 1) == 2.0);                  // (2+1)%3, (3+2)%4
        CHECK(s(0, 0) == 0.0);

        // Even extents self-invert.
        const auto e = oracles::random_real(4, 6, 77);
        CHECK(oracles::bits_equal(fftshift2(fftshift2(e)), e));
    }
}
