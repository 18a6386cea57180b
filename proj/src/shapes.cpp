#include "qcpde/shapes.hpp"

#include <cmath>

#include "qcpde/errors.hpp"

namespace qcpde::shapes {

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double bump_profile(double r, double radius) {
    const double s = r / radius;
    if (s >= 1.0) return 0.0;
    // exp(-4 s^2 / (1 - s^2)): the factor 4 narrows the bulk enough that the
    // flat essential-singularity tail is resolved spectrally at n = 256.
    return std::exp(-4.0 * s * s / (1.0 - s * s));
}

ComplexField radial_bump(const Grid& grid, cplx amplitude, double radius, cplx centre) {
    if (!(radius > 0.0)) throw ConfigError("bump radius must be positive");
    return sample([&](cplx z) { return amplitude * bump_profile(std::abs(z - centre), radius); },
                  grid, std::abs(centre) + radius);
}

RealField radial_bump_real(const Grid& grid, double amplitude, double radius, cplx centre) {
    if (!(radius > 0.0)) throw ConfigError("bump radius must be positive");
    return sample_real(
        [&](cplx z) { return amplitude * bump_profile(std::abs(z - centre), radius); }, grid,
        std::abs(centre) + radius);
}

ComplexField plateau(const Grid& grid, cplx amplitude, double inner, double outer) {
    if (!(inner >= 0.0 && outer > inner)) throw ConfigError("plateau needs 0 <= inner < outer");
    return sample(
        [&](cplx z) {
            return amplitude * smooth_step((outer - std::abs(z)) / (outer - inner));
        },
        grid, outer);
}

RealField plateau_real(const Grid& grid, double amplitude, double inner, double outer) {
    if (!(inner >= 0.0 && outer > inner)) throw ConfigError("plateau needs 0 <= inner < outer");
    return sample_real(
        [&](cplx z) {
            return amplitude * smooth_step((outer - std::abs(z)) / (outer - inner));
        },
        grid, outer);
}

RealField disk_indicator(const Grid& grid, double radius, bool mollify) {
    if (!(radius > 0.0)) throw ConfigError("disk radius must be positive");
    if (!mollify) {
        return sample_real([&](cplx z) { return std::abs(z) < radius ? 1.0 : 0.0; }, grid,
                           radius);
    }
    const double collar = 3.0 * grid.spacing();
    return sample_real(
        [&](cplx z) { return smooth_step((radius + 0.5 * collar - std::abs(z)) / collar); },
        grid, radius + 0.5 * collar);
}

}  // namespace qcpde::shapes
