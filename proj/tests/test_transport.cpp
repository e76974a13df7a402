#include <doctest.h>

#include <chrono>
#include <numeric>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "pargrid/transport.hpp"

using namespace pargrid;
using namespace std::chrono_literals;

namespace {

LaunchOptions quick_timeout(std::chrono::milliseconds ms = 300ms)
{
    LaunchOptions opts;
    opts.timeout = ms;
    return opts;
}

} // namespace

TEST_SUITE("transport")
{
    TEST_CASE("launch hands every worker its own rank")
    {
        const auto one = launch(1, [](WorkerCtx& ctx) { return ctx.rank(); });
        CHECK(one == std::vector<int>{0});

        const auto four = launch(4, [](WorkerCtx& ctx) { return ctx.rank(); });
        CHECK(four == std::vector<int>{0, 1, 2, 3});

        const auto worlds = launch(3, [](WorkerCtx& ctx) { return ctx.world_size(); });
        CHECK(worlds == std::vector<int>{3, 3, 3});
    }

    TEST_CASE("launch rejects an empty world")
    {
        CHECK_THROWS_WITH_AS(launch(0, [](WorkerCtx&) {}), "world_size must be >= 1",
                             std::invalid_argument);
    }

    TEST_CASE("worker failures propagate with the rank attached")
    {
        try {
            launch(3, [](WorkerCtx& ctx) {
                if (ctx.rank() == 2) {
                    throw std::runtime_error("boom");
                }
            });
            FAIL("launch should have thrown");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("rank 2") != std::string::npos);
            CHECK(std::string(e.what()).find("boom") != std::string::npos);
        }
    }

    TEST_CASE("send and recv pair up, in order")
    {
        std::vector<double> first;
        std::vector<double> second;
        launch(2, [&](WorkerCtx& ctx) {
            if (ctx.rank() == 0) {
                send(ctx, 1, 7, Payload::from_f64(std::vector<double>{1.0, 2.0}));
                send(ctx, 1, 7, Payload::from_f64(std::vector<double>{3.0}));
            } else {
                first = recv(ctx, 0, 7).to_f64();
                second = recv(ctx, 0, 7).to_f64();
            }
        });
        CHECK(oracles::bits_equal(first, {1.0, 2.0}));
        CHECK(oracles::bits_equal(second, {3.0}));
    }

    TEST_CASE("send validates destination, tag and self-send")
    {
        CHECK_THROWS_WITH_AS(
            launch(2,
                   [](WorkerCtx& ctx) {
                       if (ctx.rank() == 0) {
                           send(ctx, 2, 0, Payload{});
                       }
                   }),
            doctest::Contains("outside [0, 2)"), std::runtime_error);

        CHECK_THROWS_WITH_AS(
            launch(2,
                   [](WorkerCtx& ctx) {
                       if (ctx.rank() == 0) {
                           send(ctx, 0, 0, Payload{});
                       }
                   }),
            doctest::Contains("self-send"), std::runtime_error);

        CHECK_THROWS_WITH_AS(
            launch(2,
                   [](WorkerCtx& ctx) {
                       if (ctx.rank() == 0) {
                           send(ctx, 1, kUserTagLimit, Payload{});
                       }
                   }),
            doctest::Contains("reserved"), std::runtime_error);
    }

    TEST_CASE("payloads are values: mutating after send changes nothing")
    {
        std::vector<double> received;
        launch(2, [&](WorkerCtx& ctx) {
            if (ctx.rank() == 0) {
                std::vector<double> buffer{10.0, 20.0};
                send(ctx, 1, 3, Payload::from_f64(buffer));
                buffer[0] = -1.0; // sender scribbles over its copy
                buffer[1] = -2.0;
            } else {
                received = recv(ctx, 0, 3).to_f64();
            }
        });
        CHECK(oracles::bits_equal(received, {10.0, 20.0}));
    }

    TEST_CASE("per-channel FIFO holds under interleaved tags")
    {
        constexpr int kPerTag = 20;
        std::vector<std::vector<double>> seen(3);
        launch(2, [&](WorkerCtx& ctx) {
            std::mt19937_64 rng(99);
            if (ctx.rank() == 0) {
                int counter[3] = {0, 0, 0};
                for (int i = 0; i < 3 * kPerTag; ++i) {
                    // Random channel order, sequential numbering per channel.
                    std::int32_t tag;
                    do {
                        tag = static_cast<std::int32_t>(rng() % 3);
                    } while (counter[tag] == kPerTag);
                    send(ctx, 1, tag,
                         Payload::from_f64(std::vector<double>{double(counter[tag]++)}));
                }
            } else {
                int remaining[3] = {kPerTag, kPerTag, kPerTag};
                for (int i = 0; i < 3 * kPerTag; ++i) {
                    std::int32_t tag;
                    do {
                        tag = static_cast<std::int32_t>(rng() % 3);
                    } while (remaining[tag] == 0);
                    remaining[tag] -= 1;
                    seen[static_cast<std::size_t>(tag)].push_back(
                        recv(ctx, 0, tag).to_f64().front());
                }
            }
        });
        for (const auto& channel : seen) {
            REQUIRE(channel.size() == kPerTag);
            for (int i = 0; i < kPerTag; ++i) {
                CHECK(channel[static_cast<std::size_t>(i)] == double(i));
            }
        }
    }

    TEST_CASE("recv without a sender times out naming the channel")
    {
        try {
            launch(2,
                   [](WorkerCtx& ctx) {
                       if (ctx.rank() == 1) {
                           recv(ctx, 0, 5);
                       }
                   },
                   quick_timeout());
            FAIL("expected a timeout");
        } catch (const std::runtime_error& e) {
            const std::string what = e.what();
            CHECK(what.find("rank 1") != std::string::npos);
            CHECK(what.find("tag 5") != std::string::npos);
            CHECK(what.find("deadlock") != std::string::npos);
        }
    }

    TEST_CASE("barrier releases nobody before the last rank enters")
    {
        using clock = std::chrono::steady_clock;
        std::vector<clock::time_point> entered(4);
        std::vector<clock::time_point> exited(4);
        launch(4, [&](WorkerCtx& ctx) {
            if (ctx.rank() == 3) {
                std::this_thread::sleep_for(60ms);
            }
            entered[static_cast<std::size_t>(ctx.rank())] = clock::now();
            barrier(ctx);
            exited[static_cast<std::size_t>(ctx.rank())] = clock::now();
        });
        for (int r = 0; r < 4; ++r) {
            CHECK(exited[static_cast<std::size_t>(r)] >= entered[3]);
        }

        launch(1, [](WorkerCtx& ctx) { barrier(ctx); }); // single rank returns at once
    }

    TEST_CASE("a missing barrier participant strands the others")
    {
        CHECK_THROWS_WITH_AS(
            launch(2,
                   [](WorkerCtx& ctx) {
                       if (ctx.rank() == 0) {
                           barrier(ctx);
                       }
                   },
                   quick_timeout()),
            doctest::Contains("deadlock"), std::runtime_error);
    }

    TEST_CASE("broadcast delivers the root payload bit-identically")
    {
        const std::vector<double> value{3.5};
        std::vector<std::vector<double>> got(4);
        launch(4, [&](WorkerCtx& ctx) {
            const Payload p =
                broadcast(ctx, 0, ctx.rank() == 0 ? Payload::from_f64(value) : Payload{});
            got[static_cast<std::size_t>(ctx.rank())] = p.to_f64();
        });
        for (const auto& v : got) {
            CHECK(oracles::bits_equal(v, value));
        }

        launch(1, [&](WorkerCtx& ctx) {
            got[0] = broadcast(ctx, 0, Payload::from_f64(std::vector<double>{1.25})).to_f64();
        });
        CHECK(oracles::bits_equal(got[0], {1.25}));

        CHECK_THROWS_WITH_AS(
            launch(4, [](WorkerCtx& ctx) { broadcast(ctx, 5, Payload{}); }),
            doctest::Contains("outside [0, 4)"), std::runtime_error);
    }

    TEST_CASE("reduce combines in ascending rank order on the root")
    {
        std::optional<std::vector<double>> at_root;
        std::optional<std::vector<double>> elsewhere = std::vector<double>{};
        launch(4, [&](WorkerCtx& ctx) {
            auto r = reduce(ctx, 0, ReduceOp::sum, {double(ctx.rank())});
            if (ctx.rank() == 0) {
                at_root = r;
            } else if (ctx.rank() == 1) {
                elsewhere = r;
            }
        });
        REQUIRE(at_root.has_value());
        CHECK(oracles::bits_equal(*at_root, {6.0}));
        CHECK_FALSE(elsewhere.has_value());

        launch(4, [&](WorkerCtx& ctx) {
            const double mine[] = {3.0, 1.0, 4.0, 1.0};
            at_root = reduce(ctx, 0, ReduceOp::max,
                             {mine[static_cast<std::size_t>(ctx.rank())]});
        });
        CHECK(oracles::bits_equal(*at_root, {4.0}));

        launch(1, [&](WorkerCtx& ctx) {
            at_root = reduce(ctx, 0, ReduceOp::min, {0.5, -0.5});
        });
        CHECK(oracles::bits_equal(*at_root, {0.5, -0.5}));
    }

    TEST_CASE("reduce names the rank that sent a mismatched shape")
    {
        CHECK_THROWS_WITH_AS(
            launch(4,
                   [](WorkerCtx& ctx) {
                       std::vector<double> v(ctx.rank() == 2 ? 3 : 1, 1.0);
                       reduce(ctx, 0, ReduceOp::sum, v);
                   }),
            doctest::Contains("rank 2"), std::runtime_error);
    }

    TEST_CASE("reduce(sum) equals the serial ascending-rank fold, bit for bit")
    {
        constexpr int kWorld = 8;
        constexpr std::size_t kLen = 64;
        std::vector<std::vector<double>> inputs(kWorld);
        std::mt19937_64 rng(4242);
        std::uniform_real_distribution<double> dist(-1e3, 1e3);
        for (auto& v : inputs) {
            v.resize(kLen);
            for (auto& x : v) {
                x = dist(rng);
            }
        }
        std::vector<double> expect = inputs[0];
        for (int r = 1; r < kWorld; ++r) {
            for (std::size_t i = 0; i < kLen; ++i) {
                expect[i] += inputs[static_cast<std::size_t>(r)][i];
            }
        }

        std::optional<std::vector<double>> got;
        launch(kWorld, [&](WorkerCtx& ctx) {
            auto r = reduce(ctx, 0, ReduceOp::sum,
                            inputs[static_cast<std::size_t>(ctx.rank())]);
            if (ctx.rank() == 0) {
                got = r;
            }
        });
        REQUIRE(got.has_value());
        CHECK(oracles::bits_equal(*got, expect));
    }

    TEST_CASE("gather concatenates by ascending rank and records lengths")
    {
        std::optional<GatherResult> got;
        launch(3, [&](WorkerCtx& ctx) {
            auto r = gather(ctx, 0, {double(ctx.rank() * ctx.rank())});
            if (ctx.rank() == 0) {
                got = r;
            }
        });
        REQUIRE(got.has_value());
        CHECK(oracles::bits_equal(got->values, {0.0, 1.0, 4.0}));
        CHECK(got->lengths == std::vector<std::size_t>{1, 1, 1});

        launch(2, [&](WorkerCtx& ctx) {
            const std::vector<double> mine = ctx.rank() == 0
                ? std::vector<double>{1.0, 2.0}
                : std::vector<double>{3.0, 4.0, 5.0};
            auto r = gather(ctx, 0, mine);
            if (ctx.rank() == 0) {
                got = r;
            }
        });
        CHECK(oracles::bits_equal(got->values, {1.0, 2.0, 3.0, 4.0, 5.0}));
        CHECK(got->lengths == std::vector<std::size_t>{2, 3});

        launch(1, [&](WorkerCtx& ctx) { got = gather(ctx, 0, {9.0}); });
        CHECK(oracles::bits_equal(got->values, {9.0}));
    }

    TEST_CASE("the socket backend carries the same traffic as inproc")
    {
        constexpr int kWorld = 4;
        // A little program exercising sends, broadcast, reduce and gather;
        // rank 0 keeps a digest vector.
        const auto program = [](WorkerCtx& ctx) -> std::vector<double> {
            std::mt19937_64 rng(1000 + static_cast<unsigned>(ctx.rank()));
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            std::vector<double> mine(5 + static_cast<std::size_t>(ctx.rank()));
            for (auto& x : mine) {
                x = dist(rng);
            }
            const int next = (ctx.rank() + 1) % ctx.world_size();
            const int prev = (ctx.rank() + ctx.world_size() - 1) % ctx.world_size();
            send(ctx, next, 11, Payload::from_f64(mine));
            const auto from_prev = recv(ctx, prev, 11).to_f64();

            const auto seedcast =
                broadcast(ctx, 0,
                          ctx.rank() == 0 ? Payload::from_f64(std::vector<double>{0.75})
                                          : Payload{})
                    .to_f64();
            auto reduced = reduce(ctx, 0, ReduceOp::sum, {from_prev.front() + seedcast.front()});
            auto gathered = gather(ctx, 0, mine);
            barrier(ctx);

            std::vector<double> digest;
            if (ctx.rank() == 0) {
                digest = gathered->values;
                digest.push_back(reduced->front());
            }
            return digest;
        };

        LaunchOptions inproc;
        LaunchOptions socket;
        socket.backend = Backend::socket;
        const auto a = launch(kWorld, program, inproc);
        const auto b = launch(kWorld, program, socket);
        REQUIRE_FALSE(a[0].empty());
        CHECK(oracles::bits_equal(a[0], b[0]));
    }

    TEST_CASE("socket backend sustains repeated launches")
    {
        for (int round = 0; round < 3; ++round) {
            LaunchOptions opts;
            opts.backend = Backend::socket;
            std::optional<std::vector<double>> got;
            launch(2, [&](WorkerCtx& ctx) {
                auto r = reduce(ctx, 0, ReduceOp::sum, {1.0, double(ctx.rank())});
                if (ctx.rank() == 0) {
                    got = r;
                }
            }, opts);
            REQUIRE(got.has_value());
            CHECK(oracles::bits_equal(*got, {2.0, 1.0}));
        }
    }
}
