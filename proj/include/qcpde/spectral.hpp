#pragma once

#include <span>
#include <vector>

#include "qcpde/grid.hpp"

namespace qcpde::spectral {

/// Angular wavenumbers of one window axis in FFT order.  `full` keeps the
/// Nyquist entry (as -pi/dx); `deriv` zeroes it, which is what first
/// derivatives use so that real fields stay real.
struct Wavenumbers {
    std::vector<double> full;
    std::vector<double> deriv;
};

const Wavenumbers& wavenumbers(const Grid& grid);

/// Unnormalized forward / inverse 2-D DFT on an n x n block.  FFTW plans are
/// cached per n behind a mutex; execution uses the new-array interface and is
/// safe to call concurrently.
void forward(int n, std::span<cplx> data);
void inverse(int n, std::span<cplx> data);

/// Spectral coefficients of one Fourier mode, passed to multiplier symbols.
struct Mode {
    double kx;       // Nyquist-zeroed
    double ky;       // Nyquist-zeroed
    double kx_full;  // Nyquist kept
    double ky_full;
};

/// Applies the Fourier multiplier `symbol(Mode)` to `values` and returns the
/// resulting samples.
template <class Symbol>
std::vector<cplx> apply(const Grid& grid, std::span<const cplx> values, Symbol&& symbol) {
    const int n = grid.n();
    std::vector<cplx> buf(values.begin(), values.end());
    forward(n, buf);
    const auto& w = wavenumbers(grid);
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const Mode m{w.deriv[j], w.deriv[k], w.full[j], w.full[k]};
            buf[grid.index(j, k)] *= symbol(m) * scale;
        }
    }
    inverse(n, buf);
    return buf;
}

}  // namespace qcpde::spectral
