#include "pargrid/kernels/sar.hpp"

#include <cmath>
#include <stdexcept>

#include "pargrid/darray.hpp"
#include "pargrid/kernels/dft.hpp"
#include "pargrid/kernels/mix64.hpp"

namespace pargrid::kernels {

namespace {

void check_shape(const SarConfig& cfg)
{
    if (cfg.n_rows < 1 || cfg.n_cols < 1) {
        throw std::invalid_argument("sar: matrix extents must be >= 1");
    }
}

} // namespace

ComplexMatrix generate_field(const SarConfig& cfg)
{
    check_shape(cfg);
    ComplexMatrix f(cfg.n_rows, cfg.n_cols);
    std::uint64_t state = cfg.seed ^ 0xA24BAED4963EE407ULL;
    for (std::size_t i = 0; i < cfg.n_rows; ++i) {
        for (std::size_t j = 0; j < cfg.n_cols; ++j) {
            const double re = 2.0 * u64_to_unit(mix64_next(state)) - 1.0;
            const double im = 2.0 * u64_to_unit(mix64_next(state)) - 1.0;
            f(i, j) = {re, im};
        }
    }
    return f;
}

RealMatrix form_image_serial(const ComplexMatrix& field, const SarConfig& cfg)
{
    check_shape(cfg);
    if (field.rows() != cfg.n_rows || field.cols() != cfg.n_cols) {
        throw std::invalid_argument("form_image_serial: field does not match configured shape");
    }
    ComplexMatrix g = fftshift2(field);
    g = idft_cols(g);
    g = idft_rows(g);
    g = fftshift2(g);
    RealMatrix image(field.cols(), field.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            image(j, i) = std::abs(g(i, j));
        }
    }
    return image;
}

std::optional<RealMatrix> form_image_parallel(WorkerCtx& ctx, const SarConfig& cfg)
{
    check_shape(cfg);
    const std::size_t n = cfg.n_rows;
    const std::size_t m = cfg.n_cols;

    ComplexMatrix shifted_at_root;
    if (ctx.rank() == 0) {
        shifted_at_root = fftshift2(generate_field(cfg));
    }
    auto pf = scatter(ctx, n, m, DistMap::col_blocks(ctx.world_size()), shifted_at_root);

    // Each local column is a complete global column; transform in place.
    put_local(pf, idft_cols(local_part(pf)));

    // Flip to a row distribution so every row is local for the second pass.
    auto z = transpose_grid(ctx, pf);
    ComplexMatrix rows = idft_rows(local_part(z));

    // The column-axis half of the closing shift permutes within rows and is
    // local here; the row-axis half crosses ranks and runs on rank 0 after
    // aggregation. Magnitude commutes with both permutations.
    RealMatrix mag(rows.rows(), rows.cols());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        for (std::size_t j = 0; j < rows.cols(); ++j) {
            mag(i, (j + m / 2) % m) = std::abs(rows(i, j));
        }
    }
    auto zmag = dzeros<double>(ctx, n, m, z.map);
    put_local(zmag, std::move(mag));
    auto full = agg(ctx, zmag);
    if (!full) {
        return std::nullopt;
    }

    RealMatrix image(m, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ishift = (i + n / 2) % n;
        for (std::size_t j = 0; j < m; ++j) {
            image(j, ishift) = (*full)(i, j);
        }
    }
    return image;
}

} // namespace pargrid::kernels
