#pragma once

#include "qcpde/grid.hpp"

namespace qcpde::shapes {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t);

/// exp(-4 s^2 / (1 - s^2)) with s = r/R for r < R, else 0.  Peak value 1 at r = 0.
double bump_profile(double r, double radius);

/// amplitude * bump_profile(|z - centre|, radius); the declared support is
/// the disk about 0 of radius |centre| + radius.
ComplexField radial_bump(const Grid& grid, cplx amplitude, double radius, cplx centre = {});
RealField radial_bump_real(const Grid& grid, double amplitude, double radius, cplx centre = {});

/// amplitude on |z| <= inner, smooth decay to 0 at |z| = outer.
ComplexField plateau(const Grid& grid, cplx amplitude, double inner, double outer);
RealField plateau_real(const Grid& grid, double amplitude, double inner, double outer);

/// Indicator of |z| < radius.  With mollify set, the jump is replaced by a
/// smooth transition across a collar of width 3 dx centred on the circle.
RealField disk_indicator(const Grid& grid, double radius, bool mollify = true);

}  // namespace qcpde::shapes
