#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

#include "pargrid/dist_map.hpp"
#include "pargrid/matrix.hpp"
#include "pargrid/transport.hpp"

namespace pargrid {

namespace detail {

template <typename T>
struct payload_traits;

template <>
struct payload_traits<double> {
    static Payload pack(const RealMatrix& m) { return Payload::from_f64(m); }
    static RealMatrix unpack(const Payload& p) { return p.to_real_matrix(); }
};

template <>
struct payload_traits<std::complex<double>> {
    static Payload pack(const ComplexMatrix& m) { return Payload::from_complex(m); }
    static ComplexMatrix unpack(const Payload& p) { return p.to_complex_matrix(); }
};

// Tag offsets inside each array's reserved block.
constexpr std::int32_t kDArrayTagSpan = 8;
constexpr std::int32_t kTagAgg = 0;
constexpr std::int32_t kTagTransposeColsToRows = 1;
constexpr std::int32_t kTagTransposeRowsToCols = 2;
constexpr std::int32_t kTagScatter = 3;

} // namespace detail

/// A distributed dense matrix: global shape, block map, and this rank's
/// local block. The local block holds the rank's slice of the distributed
/// dimension and the full extent of the other, so the blocks across ranks
/// tile the global matrix exactly once.
///
/// A DArray belongs to the worker that created it; collective operations
/// (agg, transpose_grid, scatter) must be entered by all ranks and draw
/// their message tags from a block reserved at construction, keeping
/// independent arrays and user sends out of each other's way.
template <typename T>
struct DArray {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    DistMap map;
    int rank = 0;              ///< owning worker
    Matrix<T> local;           ///< this rank's block
    std::int32_t tag_base = 0; ///< reserved collective-tag block

    std::size_t dist_extent() const
    {
        return map.dist_dim == DistDim::cols ? n_cols : n_rows;
    }

    /// This rank's slice of the distributed dimension.
    BlockRange local_range() const { return pargrid::local_range(map, dist_extent(), rank); }

    /// Local block shape implied by the map: (n_rows, slice) for a column
    /// distribution, (slice, n_cols) for a row distribution.
    std::pair<std::size_t, std::size_t> local_shape() const
    {
        const auto range = local_range();
        if (map.dist_dim == DistDim::cols) {
            return {n_rows, range.len};
        }
        return {range.len, n_cols};
    }
};

namespace detail {

inline void check_map_covers_world(const DistMap& map, const WorkerCtx& ctx)
{
    map.validate();
    if (map.size() != ctx.world_size()) {
        throw std::invalid_argument("darray: map covers " + std::to_string(map.size())
                                    + " ranks but the launch has "
                                    + std::to_string(ctx.world_size()));
    }
    for (int r = 0; r < ctx.world_size(); ++r) {
        if (map.position_of(r) < 0) {
            throw std::invalid_argument("darray: map does not cover launch rank "
                                        + std::to_string(r));
        }
    }
}

} // namespace detail

/// Zero-filled distributed matrix of the given global shape over `map`.
template <typename T>
DArray<T> dzeros(WorkerCtx& ctx, std::size_t n_rows, std::size_t n_cols, DistMap map)
{
    detail::check_map_covers_world(map, ctx);
    DArray<T> a;
    a.n_rows = n_rows;
    a.n_cols = n_cols;
    a.map = std::move(map);
    a.rank = ctx.rank();
    a.tag_base = ctx.reserve_tags(detail::kDArrayTagSpan);
    const auto [lr, lc] = a.local_shape();
    a.local = Matrix<T>(lr, lc);
    return a;
}

/// Copy of this rank's block.
template <typename T>
Matrix<T> local_part(const DArray<T>& a)
{
    return a.local;
}

/// Replaces this rank's block; purely local, other ranks are unaffected.
template <typename T>
void put_local(DArray<T>& a, Matrix<T> block)
{
    const auto [lr, lc] = a.local_shape();
    if (block.rows() != lr || block.cols() != lc) {
        throw std::invalid_argument("put_local: block is " + std::to_string(block.rows()) + "x"
                                    + std::to_string(block.cols()) + " but this rank holds "
                                    + std::to_string(lr) + "x" + std::to_string(lc));
    }
    a.local = std::move(block);
}

/// Collective: stitches the full global matrix together on rank 0 from the
/// per-rank blocks; every other rank gets an empty result.
template <typename T>
std::optional<Matrix<T>> agg(WorkerCtx& ctx, const DArray<T>& a)
{
    const std::int32_t tag = a.tag_base + detail::kTagAgg;
    if (ctx.rank() != 0) {
        detail::send_raw(ctx, 0, tag, detail::payload_traits<T>::pack(a.local));
        return std::nullopt;
    }

    Matrix<T> full(a.n_rows, a.n_cols);
    const auto place = [&](const Matrix<T>& block, const BlockRange& range) {
        if (a.map.dist_dim == DistDim::cols) {
            for (std::size_t i = 0; i < block.rows(); ++i) {
                for (std::size_t j = 0; j < block.cols(); ++j) {
                    full(i, range.start + j) = block(i, j);
                }
            }
        } else {
            for (std::size_t i = 0; i < block.rows(); ++i) {
                for (std::size_t j = 0; j < block.cols(); ++j) {
                    full(range.start + i, j) = block(i, j);
                }
            }
        }
    };

    place(a.local, a.local_range());
    for (int r = 1; r < ctx.world_size(); ++r) {
        const auto block = detail::payload_traits<T>::unpack(detail::recv_raw(ctx, r, tag));
        const auto range = pargrid::local_range(a.map, a.dist_extent(), r);
        const auto expect_rows = a.map.dist_dim == DistDim::cols ? a.n_rows : range.len;
        const auto expect_cols = a.map.dist_dim == DistDim::cols ? range.len : a.n_cols;
        if (block.rows() != expect_rows || block.cols() != expect_cols) {
            throw std::runtime_error("agg: rank " + std::to_string(r)
                                     + " sent a block of unexpected shape");
        }
        place(block, range);
    }
    return full;
}

/// Collective: distributes a full matrix held on rank 0 into blocks over
/// `map`. All ranks pass the global shape; only rank 0's `full_at_root` is
/// read.
template <typename T>
DArray<T> scatter(WorkerCtx& ctx, std::size_t n_rows, std::size_t n_cols, DistMap map,
                  const Matrix<T>& full_at_root = {})
{
    DArray<T> a = dzeros<T>(ctx, n_rows, n_cols, std::move(map));
    const std::int32_t tag = a.tag_base + detail::kTagScatter;
    const bool by_cols = a.map.dist_dim == DistDim::cols;

    if (ctx.rank() == 0) {
        if (full_at_root.rows() != n_rows || full_at_root.cols() != n_cols) {
            throw std::invalid_argument("scatter: matrix on rank 0 does not match global shape");
        }
        for (int r = 0; r < ctx.world_size(); ++r) {
            const auto range = pargrid::local_range(a.map, a.dist_extent(), r);
            Matrix<T> block(by_cols ? n_rows : range.len, by_cols ? range.len : n_cols);
            for (std::size_t i = 0; i < block.rows(); ++i) {
                for (std::size_t j = 0; j < block.cols(); ++j) {
                    block(i, j) = by_cols ? full_at_root(i, range.start + j)
                                          : full_at_root(range.start + i, j);
                }
            }
            if (r == 0) {
                a.local = std::move(block);
            } else {
                detail::send_raw(ctx, r, tag, detail::payload_traits<T>::pack(block));
            }
        }
    } else {
        put_local(a, detail::payload_traits<T>::unpack(detail::recv_raw(ctx, 0, tag)));
    }
    return a;
}

/// Collective all-to-all redistribution: flips a column-block distribution
/// to a row-block distribution (or back) without changing any element
/// value. Rank i sends rank j the intersection tile of i's slice with j's
/// slice of the other dimension; P-1 messages out, P-1 in.
template <typename T>
DArray<T> transpose_grid(WorkerCtx& ctx, const DArray<T>& a)
{
    const bool cols_to_rows = a.map.dist_dim == DistDim::cols;
    const int p = ctx.world_size();
    const std::int32_t tag = a.tag_base
        + (cols_to_rows ? detail::kTagTransposeColsToRows : detail::kTagTransposeRowsToCols);

    DistMap flipped = a.map;
    flipped.dist_dim = cols_to_rows ? DistDim::rows : DistDim::cols;
    std::swap(flipped.grid_rows, flipped.grid_cols);

    DArray<T> out;
    out.n_rows = a.n_rows;
    out.n_cols = a.n_cols;
    out.map = std::move(flipped);
    out.rank = ctx.rank();
    out.tag_base = ctx.reserve_tags(detail::kDArrayTagSpan);
    const auto [lr, lc] = out.local_shape();
    out.local = Matrix<T>(lr, lc);

    const auto my_old = a.local_range();
    const auto my_new = out.local_range();

    // Tile of my block destined for the rank at new-range `dst`: the rows
    // (cols->rows) or columns (rows->cols) of my slice that fall in dst.
    const auto cut_tile = [&](const BlockRange& dst) {
        Matrix<T> tile(cols_to_rows ? dst.len : my_old.len, cols_to_rows ? my_old.len : dst.len);
        for (std::size_t i = 0; i < tile.rows(); ++i) {
            for (std::size_t j = 0; j < tile.cols(); ++j) {
                tile(i, j) = cols_to_rows ? a.local(dst.start + i, j) : a.local(i, dst.start + j);
            }
        }
        return tile;
    };

    // Tile received from the rank owning old-range `src` lands at that
    // range's offset in the non-distributed dimension of my new block.
    const auto place_tile = [&](const Matrix<T>& tile, const BlockRange& src) {
        if (tile.rows() != (cols_to_rows ? my_new.len : src.len)
            || tile.cols() != (cols_to_rows ? src.len : my_new.len)) {
            throw std::runtime_error("transpose_grid: tile of unexpected shape");
        }
        for (std::size_t i = 0; i < tile.rows(); ++i) {
            for (std::size_t j = 0; j < tile.cols(); ++j) {
                if (cols_to_rows) {
                    out.local(i, src.start + j) = tile(i, j);
                } else {
                    out.local(src.start + i, j) = tile(i, j);
                }
            }
        }
    };

    place_tile(cut_tile(my_new), my_old);
    for (int r = 0; r < p; ++r) {
        if (r == ctx.rank()) {
            continue;
        }
        detail::send_raw(ctx, r, tag,
                         detail::payload_traits<T>::pack(
                             cut_tile(pargrid::local_range(out.map, out.dist_extent(), r))));
    }
    for (int r = 0; r < p; ++r) {
        if (r == ctx.rank()) {
            continue;
        }
        const auto tile = detail::payload_traits<T>::unpack(detail::recv_raw(ctx, r, tag));
        place_tile(tile, pargrid::local_range(a.map, a.dist_extent(), r));
    }
    return out;
}

} // namespace pargrid
