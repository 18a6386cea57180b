#pragma once

#include "qcpde/grid.hpp"

namespace qcpde {

enum class ZeroModePolicy { Drop };

struct OperatorStats {
    ZeroModePolicy zero_mode_policy = ZeroModePolicy::Drop;
    double l2_operator_norm_estimate = 0.0;
};

/// Cauchy transform (1/pi) * integral g(w) / (z - w) dm(w), the inverse of
/// d/dzbar on compactly supported densities.
///
/// The mean-free part of g is inverted by the Fourier multiplier -2i/zeta
/// (zero mode dropped); the window mean m is restored through the trend
/// m * zbar, which is what the dropped mode contributes on the plane.  The
/// result is shifted so that (C g)(0) = 0.  For mean-free g this makes
/// d_zbar(C g) = g a discrete identity; for general g, d_zbar_core(C g) = g
/// on the core disk.
///
/// Throws SupportError unless g declares a support inside |z| <= L/2.
ComplexField cauchy_transform(const ComplexField& g);

/// Beurling transform T: the multiplier conj(zeta)/zeta with the zero mode
/// dropped.  Unimodular on every other mode, so its L2 norm is 1, and
/// T = d_z o C exactly.
ComplexField beurling_transform(const ComplexField& g);

/// Unchecked variant used inside iterations whose supports are already known.
ComplexField beurling_periodic(const ComplexField& g);

/// Logarithmic potential N^g = (1/2 pi) integral ln|z - w| g(w) dm(w).
///
/// Spectral inverse Laplacian on the mean-free part, plus the trend
/// m |z|^2 / 4 for the mean, then shifted so the value at z = 0 equals the
/// defining integral evaluated there by direct quadrature.
RealField log_potential(const RealField& g);

/// d/dzbar of the logarithmic potential, computed with the same split.
ComplexField potential_dbar(const RealField& g);

/// Direct-quadrature values of the defining integrals at z = 0.
double log_potential_at_origin(const RealField& g);
cplx cauchy_at_origin(const ComplexField& g);

/// The principal (decaying at infinity) Cauchy transform: cauchy_transform
/// shifted by the quadrature value at the origin.
ComplexField cauchy_transform_principal(const ComplexField& g);

OperatorStats beurling_stats(const Grid& grid);

}  // namespace qcpde
