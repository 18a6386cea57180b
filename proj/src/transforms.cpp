#include "qcpde/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcpde/spectral.hpp"

namespace qcpde {
namespace {

constexpr cplx I{0.0, 1.0};

cplx zeta(const spectral::Mode& m) { return {m.kx, m.ky}; }

ComplexField cauchy_unnormalized(const ComplexField& g) {
    const cplx m = mean(g);
    auto periodic = spectral::apply(g.grid(), g.values(), [](const spectral::Mode& mode) {
        const cplx z = zeta(mode);
        return z == cplx{} ? cplx{} : -2.0 * I / z;
    });
    for (std::size_t i = 0; i < periodic.size(); ++i) {
        periodic[i] += m * std::conj(g.grid().node(i));
    }
    return ComplexField(g.grid(), std::move(periodic));
}

std::vector<cplx> inverse_laplacian(const RealField& g) {
    const auto c = to_complex(g);
    return spectral::apply(g.grid(), c.values(), [](const spectral::Mode& mode) {
        const double k2 = mode.kx_full * mode.kx_full + mode.ky_full * mode.ky_full;
        return k2 == 0.0 ? cplx{} : cplx(-1.0 / k2, 0.0);
    });
}

}  // namespace

ComplexField cauchy_transform(const ComplexField& g) {
    g.require_guarded_support("cauchy_transform");
    auto out = cauchy_unnormalized(g);
    const cplx at0 = out[g.grid().origin_index()];
    for (auto& v : out.data()) v -= at0;
    return out;
}

ComplexField cauchy_transform_principal(const ComplexField& g) {
    g.require_guarded_support("cauchy_transform");
    auto out = cauchy_unnormalized(g);
    const cplx shift = cauchy_at_origin(g) - out[g.grid().origin_index()];
    for (auto& v : out.data()) v += shift;
    return out;
}

ComplexField beurling_periodic(const ComplexField& g) {
    return ComplexField(g.grid(),
                        spectral::apply(g.grid(), g.values(), [](const spectral::Mode& mode) {
                            // The three pure Nyquist modes have no first-derivative
                            // symbol; the full wavenumber keeps T unitary there.
                            cplx z = zeta(mode);
                            if (z == cplx{}) z = {mode.kx_full, mode.ky_full};
                            return z == cplx{} ? cplx{} : std::conj(z) / z;
                        }));
}

ComplexField beurling_transform(const ComplexField& g) {
    g.require_guarded_support("beurling_transform");
    return beurling_periodic(g);
}

double log_potential_at_origin(const RealField& g) {
    const auto& grid = g.grid();
    const std::size_t origin = grid.origin_index();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i == origin || g[i] == 0.0) continue;
        sum += std::log(std::abs(grid.node(i))) * g[i];
    }
    sum *= grid.cell_area();
    // Exact integral of ln|w| over the origin cell [-h, h]^2.
    const double h = 0.5 * grid.spacing();
    const double cell = 2.0 * h * h *
                        (2.0 * std::log(h) + std::numbers::ln2 - 3.0 + 0.5 * std::numbers::pi);
    sum += g[origin] * cell;
    return sum / (2.0 * std::numbers::pi);
}

cplx cauchy_at_origin(const ComplexField& g) {
    const auto& grid = g.grid();
    const std::size_t origin = grid.origin_index();
    cplx sum{};
    // Principal value: the origin cell contributes nothing by symmetry.
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i == origin || g[i] == cplx{}) continue;
        sum -= g[i] / grid.node(i);
    }
    return sum * grid.cell_area() / std::numbers::pi;
}

RealField log_potential(const RealField& g) {
    g.require_guarded_support("log_potential");
    const double m = mean(g);
    const auto periodic = inverse_laplacian(g);
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = periodic[i].real() + 0.25 * m * std::norm(g.grid().node(i));
    }
    const double shift = log_potential_at_origin(g) - out[g.grid().origin_index()];
    for (auto& v : out) v += shift;
    return RealField(g.grid(), std::move(out));
}

ComplexField potential_dbar(const RealField& g) {
    g.require_guarded_support("potential_dbar");
    const double m = mean(g);
    ComplexField n_per(g.grid(), inverse_laplacian(g));
    for (auto& v : n_per.data()) v = v.real();
    auto out = d_zbar(n_per);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.25 * m * g.grid().node(i);
    return out;
}

OperatorStats beurling_stats(const Grid& grid) {
    // The L2 norm of a Fourier multiplier is the max modulus of its symbol.
    const auto& w = spectral::wavenumbers(grid);
    double max_mod = 0.0;
    for (double kx : w.deriv) {
        for (double ky : w.deriv) {
            const cplx z{kx, ky};
            if (z != cplx{}) max_mod = std::max(max_mod, std::abs(std::conj(z) / z));
        }
    }
    return {ZeroModePolicy::Drop, max_mod};
}

}  // namespace qcpde
