#pragma once

#include <complex>
#include <vector>

#include "pargrid/matrix.hpp"

namespace pargrid::kernels {

/// Unit-normalized (1/N) inverse discrete Fourier transform of arbitrary
/// length: radix-2 for powers of two, Bluestein's chirp-z otherwise.
std::vector<std::complex<double>> inverse_dft(const std::vector<std::complex<double>>& x);

/// Inverse DFT applied to every column of `m` (transform runs along the
/// row index).
ComplexMatrix idft_cols(const ComplexMatrix& m);

/// Inverse DFT applied to every row of `m`.
ComplexMatrix idft_rows(const ComplexMatrix& m);

/// Circularly shifts both axes forward by floor(extent / 2):
/// out((i + r/2) % r, (j + c/2) % c) = in(i, j).
template <typename T>
Matrix<T> fftshift2(const Matrix<T>& in)
{
    const std::size_t r = in.rows();
    const std::size_t c = in.cols();
    Matrix<T> out(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out((i + r / 2) % r, (j + c / 2) % c) = in(i, j);
        }
    }
    return out;
}

} // namespace pargrid::kernels
