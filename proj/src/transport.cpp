#include "pargrid/transport.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cerrno>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace pargrid {

namespace detail {

// Fixed tags for the transport's own collectives, above every block that
// WorkerCtx::reserve_tags can hand out.
constexpr std::int32_t kInternalTagBase = 0x7FFFFF00;
constexpr std::int32_t kTagBarrierEnter = kInternalTagBase + 0;
constexpr std::int32_t kTagBarrierExit = kInternalTagBase + 1;
constexpr std::int32_t kTagBroadcast = kInternalTagBase + 2;
constexpr std::int32_t kTagReduce = kInternalTagBase + 3;
constexpr std::int32_t kTagGather = kInternalTagBase + 4;

class Fabric;

class Mailbox {
public:
    void push(Message msg)
    {
        {
            std::lock_guard lk(m_);
            q_.push_back(std::move(msg));
        }
        cv_.notify_all();
    }

    void wake()
    {
        std::lock_guard lk(m_);
        cv_.notify_all();
    }

    Message take(int self_rank, int source, std::int32_t tag, std::chrono::milliseconds timeout,
                 const Fabric& fabric);

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<Message> q_;
};

/// Shared per-launch state: one mailbox per rank plus the abort latch that
/// tears the launch down when any worker fails.
class Fabric {
public:
    explicit Fabric(int world_size)
    {
        boxes_.reserve(static_cast<std::size_t>(world_size));
        for (int r = 0; r < world_size; ++r) {
            boxes_.push_back(std::make_unique<Mailbox>());
        }
    }
    virtual ~Fabric() = default;

    Mailbox& box(int rank) { return *boxes_[static_cast<std::size_t>(rank)]; }

    void abort(const std::string& reason)
    {
        {
            std::lock_guard lk(reason_m_);
            if (reason_.empty()) {
                reason_ = reason;
            }
        }
        aborted_.store(true, std::memory_order_release);
        for (auto& b : boxes_) {
            b->wake();
        }
    }

    bool aborted() const { return aborted_.load(std::memory_order_acquire); }

    std::string abort_reason() const
    {
        std::lock_guard lk(reason_m_);
        return reason_;
    }

private:
    std::vector<std::unique_ptr<Mailbox>> boxes_;
    std::atomic<bool> aborted_{false};
    mutable std::mutex reason_m_;
    std::string reason_;
};

Message Mailbox::take(int self_rank, int source, std::int32_t tag,
                      std::chrono::milliseconds timeout, const Fabric& fabric)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::unique_lock lk(m_);
    for (;;) {
        for (auto it = q_.begin(); it != q_.end(); ++it) {
            if (it->source == source && it->tag == tag) {
                Message msg = std::move(*it);
                q_.erase(it);
                return msg;
            }
        }
        if (fabric.aborted()) {
            throw AbortError("launch aborted while rank " + std::to_string(self_rank)
                             + " waited for (source " + std::to_string(source) + ", tag "
                             + std::to_string(tag) + "): " + fabric.abort_reason());
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            throw TimeoutError(
                "recv timeout, deadlock suspected: rank " + std::to_string(self_rank)
                + " waited " + std::to_string(timeout.count()) + " ms for (source "
                + std::to_string(source) + ", tag " + std::to_string(tag) + ")");
        }
        cv_.wait_until(lk, deadline);
    }
}

/// One worker's handle to the fabric. transmit() is the backend-specific
/// path into the destination mailbox; await() is shared.
class Endpoint {
public:
    Endpoint(Fabric& fabric, int rank, int world_size, std::chrono::milliseconds timeout)
        : fabric_(fabric), rank_(rank), world_size_(world_size), timeout_(timeout)
    {
    }
    virtual ~Endpoint() = default;

    virtual void transmit(int dest, Message msg) = 0;

    Payload await(int source, std::int32_t tag)
    {
        return fabric_.box(rank_).take(rank_, source, tag, timeout_, fabric_).payload;
    }

    int rank() const { return rank_; }

protected:
    Fabric& fabric_;
    int rank_;
    int world_size_;
    std::chrono::milliseconds timeout_;
};

class InprocEndpoint final : public Endpoint {
public:
    using Endpoint::Endpoint;

    void transmit(int dest, Message msg) override
    {
        fabric_.box(dest).push(std::move(msg));
    }
};

// ---------------------------------------------------------------------------
// Loopback socket backend. Each rank owns a listening socket; senders
// connect lazily and write byte-exact frames; one reader thread per rank
// drains every inbound connection into that rank's mailbox.
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void throw_errno(const std::string& what)
{
    throw std::runtime_error(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::byte* data, std::size_t n)
{
    while (n > 0) {
        const ssize_t k = ::send(fd, data, n, MSG_NOSIGNAL);
        if (k < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw_errno("socket send failed");
        }
        data += k;
        n -= static_cast<std::size_t>(k);
    }
}

} // namespace

class SocketFabric final : public Fabric {
public:
    SocketFabric(int world_size, std::chrono::milliseconds timeout)
        : Fabric(world_size), world_size_(world_size), timeout_(timeout)
    {
        listeners_.resize(static_cast<std::size_t>(world_size));
        for (int r = 0; r < world_size; ++r) {
            int fd = ::socket(AF_INET, SOCK_STREAM, 0);
            if (fd < 0) {
                throw_errno("socket backend setup failed for rank " + std::to_string(r)
                            + ", socket");
            }
            sockaddr_in addr{};
            addr.sin_family = AF_INET;
            addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
            addr.sin_port = 0;
            if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
                ::close(fd);
                throw_errno("socket backend setup failed for rank " + std::to_string(r) + ", bind");
            }
            if (::listen(fd, 128) < 0) {
                ::close(fd);
                throw_errno("socket backend setup failed for rank " + std::to_string(r)
                            + ", listen");
            }
            socklen_t len = sizeof addr;
            if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
                ::close(fd);
                throw_errno("socket backend setup failed for rank " + std::to_string(r)
                            + ", getsockname");
            }
            listeners_[static_cast<std::size_t>(r)] = {fd, ntohs(addr.sin_port)};
        }
    }

    ~SocketFabric() override
    {
        shutdown();
        for (auto& l : listeners_) {
            if (l.fd >= 0) {
                ::close(l.fd);
            }
        }
    }

    std::uint16_t port(int rank) const { return listeners_[static_cast<std::size_t>(rank)].port; }

    void start_readers()
    {
        readers_.reserve(listeners_.size());
        for (int r = 0; r < world_size_; ++r) {
            readers_.emplace_back([this, r] { reader_loop(r); });
        }
    }

    void shutdown()
    {
        shutting_down_.store(true, std::memory_order_release);
        for (auto& t : readers_) {
            if (t.joinable()) {
                t.join();
            }
        }
        readers_.clear();
    }

private:
    struct Listener {
        int fd = -1;
        std::uint16_t port = 0;
    };

    struct Conn {
        int fd = -1;
        std::vector<std::byte> buf;
        std::size_t off = 0;
    };

    void reader_loop(int rank)
    {
        std::vector<Conn> conns;
        const int lfd = listeners_[static_cast<std::size_t>(rank)].fd;
        try {
            while (!shutting_down_.load(std::memory_order_acquire)) {
                std::vector<pollfd> pfds;
                pfds.push_back({lfd, POLLIN, 0});
                for (const auto& c : conns) {
                    pfds.push_back({c.fd, POLLIN, 0});
                }
                const int nready = ::poll(pfds.data(), pfds.size(), 50);
                if (nready < 0) {
                    if (errno == EINTR) {
                        continue;
                    }
                    throw_errno("poll failed");
                }
                if (nready == 0) {
                    continue;
                }
                const std::size_t n_before = conns.size();
                for (std::size_t i = 0; i < n_before; ++i) {
                    if ((pfds[i + 1].revents & (POLLIN | POLLHUP | POLLERR)) == 0) {
                        continue;
                    }
                    if (!drain(conns[i], rank)) {
                        ::close(conns[i].fd);
                        conns[i].fd = -1;
                    }
                }
                std::erase_if(conns, [](const Conn& c) { return c.fd < 0; });
                if (pfds[0].revents & POLLIN) {
                    const int cfd = ::accept(lfd, nullptr, nullptr);
                    if (cfd >= 0) {
                        conns.push_back({cfd, {}, 0});
                    }
                }
            }
        } catch (const std::exception& e) {
            abort("socket reader for rank " + std::to_string(rank) + " failed: " + e.what());
        }
        for (auto& c : conns) {
            if (c.fd >= 0) {
                ::close(c.fd);
            }
        }
    }

    // Reads whatever is available and pushes every complete frame into the
    // rank's mailbox. Returns false when the peer closed the connection.
    bool drain(Conn& c, int rank)
    {
        std::byte chunk[65536];
        const ssize_t n = ::recv(c.fd, chunk, sizeof chunk, 0);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) {
                return true;
            }
            throw_errno("socket recv failed");
        }
        if (n == 0) {
            return false;
        }
        c.buf.insert(c.buf.end(), chunk, chunk + n);
        for (;;) {
            std::size_t consumed = 0;
            auto msg = try_decode_frame(
                std::span<const std::byte>(c.buf.data() + c.off, c.buf.size() - c.off), consumed);
            if (!msg) {
                break;
            }
            box(rank).push(std::move(*msg));
            c.off += consumed;
        }
        if (c.off == c.buf.size()) {
            c.buf.clear();
            c.off = 0;
        } else if (c.off > (std::size_t{1} << 20)) {
            c.buf.erase(c.buf.begin(), c.buf.begin() + static_cast<std::ptrdiff_t>(c.off));
            c.off = 0;
        }
        return true;
    }

    int world_size_;
    std::chrono::milliseconds timeout_;
    std::vector<Listener> listeners_;
    std::vector<std::thread> readers_;
    std::atomic<bool> shutting_down_{false};
};

class SocketEndpoint final : public Endpoint {
public:
    SocketEndpoint(SocketFabric& fabric, int rank, int world_size,
                   std::chrono::milliseconds timeout)
        : Endpoint(fabric, rank, world_size, timeout), sfabric_(fabric),
          conn_(static_cast<std::size_t>(world_size), -1)
    {
    }

    ~SocketEndpoint() override
    {
        for (int fd : conn_) {
            if (fd >= 0) {
                ::close(fd);
            }
        }
    }

    void transmit(int dest, Message msg) override
    {
        const auto frame = encode_frame(msg.source, msg.tag, msg.payload);
        write_all(connection(dest), frame.data(), frame.size());
    }

private:
    int connection(int dest)
    {
        int& fd = conn_[static_cast<std::size_t>(dest)];
        if (fd >= 0) {
            return fd;
        }
        fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) {
            throw_errno("socket open failed");
        }
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(sfabric_.port(dest));
        while (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            if (errno == EINTR) {
                continue;
            }
            ::close(fd);
            fd = -1;
            throw_errno("connect to rank " + std::to_string(dest) + " failed");
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return fd;
    }

    SocketFabric& sfabric_;
    std::vector<int> conn_;
};

// ---------------------------------------------------------------------------

void send_raw(WorkerCtx& ctx, int dest, std::int32_t tag, Payload payload)
{
    ctx.endpoint().transmit(dest, Message{ctx.rank(), tag, std::move(payload)});
}

Payload recv_raw(WorkerCtx& ctx, int source, std::int32_t tag)
{
    return ctx.endpoint().await(source, tag);
}

void launch_raw(int world_size, const LaunchOptions& options,
                const std::function<void(WorkerCtx&)>& program)
{
    if (world_size < 1) {
        throw std::invalid_argument("world_size must be >= 1");
    }

    std::unique_ptr<Fabric> fabric;
    SocketFabric* socket_fabric = nullptr;
    if (options.backend == Backend::socket) {
        auto f = std::make_unique<SocketFabric>(world_size, options.timeout);
        socket_fabric = f.get();
        fabric = std::move(f);
        socket_fabric->start_readers();
    } else {
        fabric = std::make_unique<Fabric>(world_size);
    }

    std::vector<std::unique_ptr<Endpoint>> endpoints;
    endpoints.reserve(static_cast<std::size_t>(world_size));
    for (int r = 0; r < world_size; ++r) {
        if (socket_fabric) {
            endpoints.push_back(std::make_unique<SocketEndpoint>(*socket_fabric, r, world_size,
                                                                 options.timeout));
        } else {
            endpoints.push_back(
                std::make_unique<InprocEndpoint>(*fabric, r, world_size, options.timeout));
        }
    }

    std::mutex fail_m;
    std::string failure;
    std::atomic<bool> failed{false};

    auto record_failure = [&](int rank, const std::string& what) {
        std::string snapshot;
        {
            std::lock_guard lk(fail_m);
            if (failure.empty()) {
                failure = "worker rank " + std::to_string(rank) + " failed: " + what;
            }
            snapshot = failure;
        }
        failed.store(true, std::memory_order_release);
        fabric->abort(snapshot);
    };

    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(world_size));
    for (int r = 0; r < world_size; ++r) {
        workers.emplace_back([&, r] {
            WorkerCtx ctx(r, world_size, endpoints[static_cast<std::size_t>(r)].get());
            try {
                program(ctx);
            } catch (const AbortError&) {
                // Torn down because a peer already failed; that failure is
                // the one worth reporting.
            } catch (const std::exception& e) {
                record_failure(r, e.what());
            } catch (...) {
                record_failure(r, "unknown error");
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    if (socket_fabric) {
        socket_fabric->shutdown();
    }
    if (failed.load(std::memory_order_acquire)) {
        std::lock_guard lk(fail_m);
        throw std::runtime_error(failure);
    }
    // An abort without a recorded worker failure came from the fabric
    // itself (for example a socket reader); it must not report success.
    if (fabric->aborted()) {
        throw std::runtime_error(fabric->abort_reason());
    }
}

} // namespace detail

std::int32_t WorkerCtx::reserve_tags(std::int32_t count)
{
    if (count < 1) {
        throw std::invalid_argument("reserve_tags: count must be >= 1");
    }
    if (next_reserved_ > detail::kInternalTagBase - count) {
        throw std::runtime_error("reserve_tags: reserved tag space exhausted");
    }
    const std::int32_t base = next_reserved_;
    next_reserved_ += count;
    return base;
}

namespace {

void check_rank_arg(const WorkerCtx& ctx, int rank, const char* what)
{
    if (rank < 0 || rank >= ctx.world_size()) {
        throw std::invalid_argument(std::string(what) + ": rank " + std::to_string(rank)
                                    + " outside [0, " + std::to_string(ctx.world_size()) + ")");
    }
}

void check_user_tag(std::int32_t tag, const char* what)
{
    if (tag < 0 || tag >= kUserTagLimit) {
        throw std::invalid_argument(std::string(what)
                                    + ": tag must be in [0, 2^30); larger tags are reserved");
    }
}

} // namespace

void send(WorkerCtx& ctx, int dest, std::int32_t tag, Payload payload)
{
    check_rank_arg(ctx, dest, "send");
    check_user_tag(tag, "send");
    if (dest == ctx.rank()) {
        throw std::invalid_argument("send: self-send is disallowed");
    }
    detail::send_raw(ctx, dest, tag, std::move(payload));
}

Payload recv(WorkerCtx& ctx, int source, std::int32_t tag)
{
    check_rank_arg(ctx, source, "recv");
    check_user_tag(tag, "recv");
    if (source == ctx.rank()) {
        throw std::invalid_argument("recv: self-receive is disallowed");
    }
    return detail::recv_raw(ctx, source, tag);
}

void barrier(WorkerCtx& ctx)
{
    const int p = ctx.world_size();
    if (p == 1) {
        return;
    }
    if (ctx.rank() == 0) {
        for (int r = 1; r < p; ++r) {
            detail::recv_raw(ctx, r, detail::kTagBarrierEnter);
        }
        for (int r = 1; r < p; ++r) {
            detail::send_raw(ctx, r, detail::kTagBarrierExit, Payload{});
        }
    } else {
        detail::send_raw(ctx, 0, detail::kTagBarrierEnter, Payload{});
        detail::recv_raw(ctx, 0, detail::kTagBarrierExit);
    }
}

Payload broadcast(WorkerCtx& ctx, int root, Payload payload_at_root)
{
    check_rank_arg(ctx, root, "broadcast");
    if (ctx.world_size() == 1) {
        return payload_at_root;
    }
    if (ctx.rank() == root) {
        for (int r = 0; r < ctx.world_size(); ++r) {
            if (r != root) {
                detail::send_raw(ctx, r, detail::kTagBroadcast, payload_at_root);
            }
        }
        return payload_at_root;
    }
    return detail::recv_raw(ctx, root, detail::kTagBroadcast);
}

std::optional<std::vector<double>> reduce(WorkerCtx& ctx, int root, ReduceOp op,
                                          const std::vector<double>& value)
{
    check_rank_arg(ctx, root, "reduce");
    if (ctx.rank() != root) {
        detail::send_raw(ctx, root, detail::kTagReduce, Payload::from_f64(value));
        return std::nullopt;
    }
    const int p = ctx.world_size();
    std::vector<std::vector<double>> contributions(static_cast<std::size_t>(p));
    contributions[static_cast<std::size_t>(root)] = value;
    for (int r = 0; r < p; ++r) {
        if (r != root) {
            contributions[static_cast<std::size_t>(r)] =
                detail::recv_raw(ctx, r, detail::kTagReduce).to_f64();
        }
    }
    for (int r = 0; r < p; ++r) {
        if (contributions[static_cast<std::size_t>(r)].size() != value.size()) {
            throw std::runtime_error(
                "reduce: shape mismatch at rank " + std::to_string(r) + " (got "
                + std::to_string(contributions[static_cast<std::size_t>(r)].size())
                + " elements, expected " + std::to_string(value.size()) + ")");
        }
    }
    // Ascending-rank fold, fixed order for reproducible floating point.
    std::vector<double> acc = contributions[0];
    for (int r = 1; r < p; ++r) {
        const auto& v = contributions[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < acc.size(); ++i) {
            switch (op) {
            case ReduceOp::sum:
                acc[i] += v[i];
                break;
            case ReduceOp::min:
                acc[i] = std::min(acc[i], v[i]);
                break;
            case ReduceOp::max:
                acc[i] = std::max(acc[i], v[i]);
                break;
            }
        }
    }
    return acc;
}

std::optional<GatherResult> gather(WorkerCtx& ctx, int root, const std::vector<double>& value)
{
    check_rank_arg(ctx, root, "gather");
    if (ctx.rank() != root) {
        detail::send_raw(ctx, root, detail::kTagGather, Payload::from_f64(value));
        return std::nullopt;
    }
    GatherResult out;
    for (int r = 0; r < ctx.world_size(); ++r) {
        std::vector<double> part =
            r == root ? value : detail::recv_raw(ctx, r, detail::kTagGather).to_f64();
        out.lengths.push_back(part.size());
        out.values.insert(out.values.end(), part.begin(), part.end());
    }
    return out;
}

} // namespace pargrid
