#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pargrid/matrix.hpp"

namespace pargrid {

/// Element kind of a message payload; values double as the wire codes.
enum class PayloadKind : std::uint8_t {
    bytes = 0,
    f64 = 1,
    complex_f64 = 2,
};

/// Value-semantics message body: a declared element kind, a (rows, cols)
/// shape, and the elements in native row-major storage. The byte length is
/// always kind-element-size * rows * cols.
class Payload {
public:
    Payload() = default;

    static Payload from_bytes(std::vector<std::byte> data);
    static Payload from_f64(const std::vector<double>& values);
    static Payload from_f64(const RealMatrix& m);
    static Payload from_complex(const std::vector<std::complex<double>>& values);
    static Payload from_complex(const ComplexMatrix& m);

    PayloadKind kind() const { return kind_; }
    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }
    std::size_t elem_count() const { return std::size_t{rows_} * cols_; }
    std::size_t byte_size() const { return data_.size(); }
    const std::vector<std::byte>& bytes() const { return data_; }

    /// Converters check the declared kind and throw on mismatch.
    std::vector<double> to_f64() const;
    std::vector<std::complex<double>> to_complex() const;
    RealMatrix to_real_matrix() const;
    ComplexMatrix to_complex_matrix() const;
    std::vector<std::byte> to_bytes() const;

    static std::size_t elem_size(PayloadKind kind);

private:
    Payload(PayloadKind kind, std::uint32_t rows, std::uint32_t cols, std::vector<std::byte> data);

    PayloadKind kind_ = PayloadKind::bytes;
    std::uint32_t rows_ = 0;
    std::uint32_t cols_ = 0;
    std::vector<std::byte> data_;
};

/// One message as seen by a receiver.
struct Message {
    int source = 0;
    std::int32_t tag = 0;
    Payload payload;
};

// Wire frame used by the socket backend, bit-exact:
//   u32 BE payload byte length N
//   u32 BE tag
//   u32 BE source rank
//   u8  element kind (0 = bytes, 1 = f64, 2 = complex f64)
//   u32 BE row count
//   u32 BE column count
//   N payload bytes; f64 elements little-endian IEEE-754 row-major,
//   complex elements as (re, im) pairs.
inline constexpr std::size_t kFrameHeaderSize = 21;

std::vector<std::byte> encode_frame(int source, std::int32_t tag, const Payload& payload);

/// Decodes one frame from the front of `buf`. Returns nullopt when the
/// buffer does not yet hold a complete frame; on success sets `consumed`
/// to the frame's total byte length. Throws on malformed headers.
std::optional<Message> try_decode_frame(std::span<const std::byte> buf, std::size_t& consumed);

} // namespace pargrid
