#pragma once

#include <cstdint>
#include <optional>

#include "pargrid/matrix.hpp"
#include "pargrid/transport.hpp"

namespace pargrid::kernels {

struct SarConfig {
    std::size_t n_rows = 1;
    std::size_t n_cols = 1;
    std::uint64_t seed = 0;
};

/// Deterministic complex input field from the config's seed, entries
/// uniform in [-1, 1) x [-1, 1)i, row-major stream order.
ComplexMatrix generate_field(const SarConfig& cfg);

/// Image-formation pipeline: pre-shift, inverse DFT down each column, then
/// along each row, post-shift, magnitude, value-transpose. Output shape is
/// (n_cols, n_rows).
RealMatrix form_image_serial(const ComplexMatrix& field, const SarConfig& cfg);

/// Collective form of the same pipeline. Rank 0 generates and pre-shifts
/// the field, scatters it column-distributed; column transforms run on
/// local data, a transpose_grid flips to a row distribution for the row
/// transforms, and the magnitudes are aggregated and finished on rank 0.
/// Matches form_image_serial on the generated field.
std::optional<RealMatrix> form_image_parallel(WorkerCtx& ctx, const SarConfig& cfg);

} // namespace pargrid::kernels
