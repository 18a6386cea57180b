#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "qcpde/grid.hpp"

namespace qcpde {

/// Tensor-product cubic Lagrange ("bicubic") interpolation of grid samples.
/// Exact at nodes and for polynomials of degree <= 3 in each variable.
/// Stencils are clamped at the window edge instead of wrapping, because the
/// fields interpolated here (maps, potentials) are not periodic.
template <class T>
class BicubicInterpolator {
public:
    struct Jet {
        T value;
        T dx;
        T dy;
    };

    explicit BicubicInterpolator(const Field<T>& f) : field_(&f) {}

    [[nodiscard]] bool covers(cplx z) const noexcept {
        const double L = field_->grid().half_extent();
        const double top = L - field_->grid().spacing();
        return z.real() >= -L && z.real() <= top && z.imag() >= -L && z.imag() <= top;
    }

    [[nodiscard]] T value(cplx z) const { return jet(z, false).value; }
    [[nodiscard]] Jet jet(cplx z) const { return jet(z, true); }

private:
    struct Stencil {
        int base;
        std::array<double, 4> w;
        std::array<double, 4> dw;
    };

    Stencil stencil(double coord, bool derivs) const {
        const auto& g = field_->grid();
        const int n = g.n();
        const double s = (coord + g.half_extent()) / g.spacing();
        const int i0 = std::clamp(static_cast<int>(std::floor(s)), 1, n - 3);
        const double t = s - i0;
        Stencil st{i0 - 1, {}, {}};
        st.w = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
        if (derivs) {
            const double inv = 1.0 / g.spacing();
            st.dw = {-(3.0 * t * t - 6.0 * t + 2.0) / 6.0 * inv,
                     (3.0 * t * t - 4.0 * t - 1.0) / 2.0 * inv,
                     -(3.0 * t * t - 2.0 * t - 2.0) / 2.0 * inv,
                     (3.0 * t * t - 1.0) / 6.0 * inv};
        }
        return st;
    }

    Jet jet(cplx z, bool derivs) const {
        const auto& g = field_->grid();
        const Stencil sx = stencil(z.real(), derivs);
        const Stencil sy = stencil(z.imag(), derivs);
        Jet out{T{}, T{}, T{}};
        for (int a = 0; a < 4; ++a) {
            T row{};
            T row_dy{};
            for (int b = 0; b < 4; ++b) {
                const T v = (*field_)[g.index(sx.base + a, sy.base + b)];
                row += sy.w[b] * v;
                if (derivs) row_dy += sy.dw[b] * v;
            }
            out.value += sx.w[a] * row;
            if (derivs) {
                out.dx += sx.dw[a] * row;
                out.dy += sx.w[a] * row_dy;
            }
        }
        return out;
    }

    const Field<T>* field_;
};

}  // namespace qcpde
