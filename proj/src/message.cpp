#include "pargrid/message.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

namespace pargrid {

namespace {

void store_u32_be(std::byte* out, std::uint32_t v)
{
    out[0] = static_cast<std::byte>((v >> 24) & 0xFF);
    out[1] = static_cast<std::byte>((v >> 16) & 0xFF);
    out[2] = static_cast<std::byte>((v >> 8) & 0xFF);
    out[3] = static_cast<std::byte>(v & 0xFF);
}

std::uint32_t load_u32_be(const std::byte* in)
{
    return (std::uint32_t(std::to_integer<std::uint8_t>(in[0])) << 24)
        | (std::uint32_t(std::to_integer<std::uint8_t>(in[1])) << 16)
        | (std::uint32_t(std::to_integer<std::uint8_t>(in[2])) << 8)
        | std::uint32_t(std::to_integer<std::uint8_t>(in[3]));
}

void store_f64_le(std::byte* out, double d)
{
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) {
        out[i] = static_cast<std::byte>((u >> (8 * i)) & 0xFF);
    }
}

double load_f64_le(const std::byte* in)
{
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) {
        u |= std::uint64_t(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
    }
    return std::bit_cast<double>(u);
}

} // namespace

std::size_t Payload::elem_size(PayloadKind kind)
{
    switch (kind) {
    case PayloadKind::bytes:
        return 1;
    case PayloadKind::f64:
        return sizeof(double);
    case PayloadKind::complex_f64:
        return 2 * sizeof(double);
    }
    throw std::invalid_argument("Payload: unknown element kind");
}

Payload::Payload(PayloadKind kind, std::uint32_t rows, std::uint32_t cols,
                 std::vector<std::byte> data)
    : kind_(kind), rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != elem_size(kind_) * std::size_t{rows_} * cols_) {
        throw std::invalid_argument("Payload: byte length inconsistent with kind and shape");
    }
}

Payload Payload::from_bytes(std::vector<std::byte> data)
{
    const auto n = data.size();
    if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("Payload: byte payload too large");
    }
    return Payload(PayloadKind::bytes, n == 0 ? 0 : 1, static_cast<std::uint32_t>(n),
                   std::move(data));
}

Payload Payload::from_f64(const std::vector<double>& values)
{
    std::vector<std::byte> data(values.size() * sizeof(double));
    if (!values.empty()) {
        std::memcpy(data.data(), values.data(), data.size());
    }
    return Payload(PayloadKind::f64, values.empty() ? 0 : 1,
                   static_cast<std::uint32_t>(values.size()), std::move(data));
}

Payload Payload::from_f64(const RealMatrix& m)
{
    std::vector<std::byte> data(m.size() * sizeof(double));
    if (!m.empty()) {
        std::memcpy(data.data(), m.data(), data.size());
    }
    return Payload(PayloadKind::f64, static_cast<std::uint32_t>(m.rows()),
                   static_cast<std::uint32_t>(m.cols()), std::move(data));
}

Payload Payload::from_complex(const std::vector<std::complex<double>>& values)
{
    std::vector<std::byte> data(values.size() * 2 * sizeof(double));
    if (!values.empty()) {
        std::memcpy(data.data(), values.data(), data.size());
    }
    return Payload(PayloadKind::complex_f64, values.empty() ? 0 : 1,
                   static_cast<std::uint32_t>(values.size()), std::move(data));
}

Payload Payload::from_complex(const ComplexMatrix& m)
{
    std::vector<std::byte> data(m.size() * 2 * sizeof(double));
    if (!m.empty()) {
        std::memcpy(data.data(), m.data(), data.size());
    }
    return Payload(PayloadKind::complex_f64, static_cast<std::uint32_t>(m.rows()),
                   static_cast<std::uint32_t>(m.cols()), std::move(data));
}

std::vector<double> Payload::to_f64() const
{
    if (kind_ != PayloadKind::f64) {
        throw std::runtime_error("Payload: expected f64 payload");
    }
    std::vector<double> out(elem_count());
    if (!out.empty()) {
        std::memcpy(out.data(), data_.data(), data_.size());
    }
    return out;
}

std::vector<std::complex<double>> Payload::to_complex() const
{
    if (kind_ != PayloadKind::complex_f64) {
        throw std::runtime_error("Payload: expected complex-f64 payload");
    }
    std::vector<std::complex<double>> out(elem_count());
    if (!out.empty()) {
        std::memcpy(out.data(), data_.data(), data_.size());
    }
    return out;
}

RealMatrix Payload::to_real_matrix() const
{
    return RealMatrix::from_data(rows_, cols_, to_f64());
}

ComplexMatrix Payload::to_complex_matrix() const
{
    return ComplexMatrix::from_data(rows_, cols_, to_complex());
}

std::vector<std::byte> Payload::to_bytes() const
{
    if (kind_ != PayloadKind::bytes) {
        throw std::runtime_error("Payload: expected byte payload");
    }
    return data_;
}

std::vector<std::byte> encode_frame(int source, std::int32_t tag, const Payload& payload)
{
    if (source < 0 || tag < 0) {
        throw std::invalid_argument("encode_frame: source and tag must be non-negative");
    }
    const std::size_t n = payload.byte_size();
    std::vector<std::byte> frame(kFrameHeaderSize + n);
    store_u32_be(frame.data() + 0, static_cast<std::uint32_t>(n));
    store_u32_be(frame.data() + 4, static_cast<std::uint32_t>(tag));
    store_u32_be(frame.data() + 8, static_cast<std::uint32_t>(source));
    frame[12] = static_cast<std::byte>(payload.kind());
    store_u32_be(frame.data() + 13, payload.rows());
    store_u32_be(frame.data() + 17, payload.cols());

    // Element-wise little-endian encoding; f64 and complex payloads are
    // streams of doubles, complex as (re, im) pairs.
    if (payload.kind() == PayloadKind::bytes) {
        std::memcpy(frame.data() + kFrameHeaderSize, payload.bytes().data(), n);
    } else {
        const std::size_t n_doubles = n / sizeof(double);
        const auto* src = payload.bytes().data();
        for (std::size_t i = 0; i < n_doubles; ++i) {
            double d;
            std::memcpy(&d, src + i * sizeof(double), sizeof(double));
            store_f64_le(frame.data() + kFrameHeaderSize + i * sizeof(double), d);
        }
    }
    return frame;
}

std::optional<Message> try_decode_frame(std::span<const std::byte> buf, std::size_t& consumed)
{
    consumed = 0;
    if (buf.size() < kFrameHeaderSize) {
        return std::nullopt;
    }
    const std::uint32_t n = load_u32_be(buf.data() + 0);
    const std::uint32_t tag = load_u32_be(buf.data() + 4);
    const std::uint32_t source = load_u32_be(buf.data() + 8);
    const auto kind_code = std::to_integer<std::uint8_t>(buf[12]);
    const std::uint32_t rows = load_u32_be(buf.data() + 13);
    const std::uint32_t cols = load_u32_be(buf.data() + 17);

    if (kind_code > 2) {
        throw std::runtime_error("frame: unknown element kind code "
                                 + std::to_string(int(kind_code)));
    }
    const auto kind = static_cast<PayloadKind>(kind_code);
    if (std::size_t{rows} * cols * Payload::elem_size(kind) != n) {
        throw std::runtime_error("frame: payload length inconsistent with kind and shape");
    }
    if (tag > static_cast<std::uint32_t>(std::numeric_limits<std::int32_t>::max())) {
        throw std::runtime_error("frame: tag out of range");
    }
    if (buf.size() < kFrameHeaderSize + n) {
        return std::nullopt;
    }

    const std::byte* body = buf.data() + kFrameHeaderSize;
    Message msg;
    msg.source = static_cast<int>(source);
    msg.tag = static_cast<std::int32_t>(tag);
    if (kind == PayloadKind::bytes) {
        msg.payload = Payload::from_bytes(std::vector<std::byte>(body, body + n));
    } else {
        const std::size_t n_doubles = n / sizeof(double);
        std::vector<double> values(n_doubles);
        for (std::size_t i = 0; i < n_doubles; ++i) {
            values[i] = load_f64_le(body + i * sizeof(double));
        }
        if (kind == PayloadKind::f64) {
            msg.payload = Payload::from_f64(RealMatrix::from_data(rows, cols, std::move(values)));
        } else {
            std::vector<std::complex<double>> cv(n_doubles / 2);
            for (std::size_t i = 0; i < cv.size(); ++i) {
                cv[i] = {values[2 * i], values[2 * i + 1]};
            }
            msg.payload =
                Payload::from_complex(ComplexMatrix::from_data(rows, cols, std::move(cv)));
        }
    }
    consumed = kFrameHeaderSize + n;
    return msg;
}

} // namespace pargrid
