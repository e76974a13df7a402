#include "pargrid/kernels/dft.hpp"

#include <cmath>
#include <numbers>

namespace pargrid::kernels {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n)
{
    return n != 0 && (n & (n - 1)) == 0;
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

// In-place iterative radix-2 transform, unnormalized. sign = +1 gives the
// inverse-transform kernel exp(+2*pi*i*jk/n). Twiddles come from a table of
// direct cos/sin evaluations, not a recurrence, to hold accuracy at large n.
void fft_pow2(std::vector<cd>& a, int sign)
{
    const std::size_t n = a.size();
    if (n < 2) {
        return;
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    std::vector<cd> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k)
            / static_cast<double>(n);
        twiddle[k] = {std::cos(ang), std::sin(ang)};
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cd w = twiddle[k * step];
                const cd u = a[i + k];
                const cd v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

// Arbitrary-length inverse DFT via the chirp-z identity
//   X_k = (1/n) c_k sum_j (x_j c_j) conj(c)_{k-j},  c_j = exp(+i*pi*j^2/n),
// evaluated as one power-of-two cyclic convolution. The quadratic exponent
// is reduced mod 2n before the trig call so its angle stays in [0, 2*pi).
std::vector<cd> bluestein_inverse(const std::vector<cd>& x)
{
    const std::size_t n = x.size();
    std::vector<cd> chirp(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t q = (static_cast<std::uint64_t>(j) * j) % (2 * n);
        const double ang = std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
        chirp[j] = {std::cos(ang), std::sin(ang)};
    }

    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cd> a(m, cd{0.0, 0.0});
    std::vector<cd> b(m, cd{0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
        a[j] = x[j] * chirp[j];
    }
    b[0] = std::conj(chirp[0]);
    for (std::size_t j = 1; j < n; ++j) {
        b[j] = b[m - j] = std::conj(chirp[j]);
    }

    fft_pow2(a, -1);
    fft_pow2(b, -1);
    for (std::size_t j = 0; j < m; ++j) {
        a[j] *= b[j];
    }
    fft_pow2(a, +1);

    std::vector<cd> out(n);
    const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = a[k] * chirp[k] * scale;
    }
    return out;
}

} // namespace

std::vector<cd> inverse_dft(const std::vector<cd>& x)
{
    const std::size_t n = x.size();
    if (n <= 1) {
        return x;
    }
    if (is_pow2(n)) {
        std::vector<cd> a = x;
        fft_pow2(a, +1);
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : a) {
            v *= scale;
        }
        return a;
    }
    return bluestein_inverse(x);
}

ComplexMatrix idft_cols(const ComplexMatrix& m)
{
    ComplexMatrix out(m.rows(), m.cols());
    std::vector<cd> col(m.rows());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            col[i] = m(i, j);
        }
        const auto t = inverse_dft(col);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            out(i, j) = t[i];
        }
    }
    return out;
}

ComplexMatrix idft_rows(const ComplexMatrix& m)
{
    ComplexMatrix out(m.rows(), m.cols());
    std::vector<cd> row(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            row[j] = m(i, j);
        }
        const auto t = inverse_dft(row);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = t[j];
        }
    }
    return out;
}

} // namespace pargrid::kernels
