#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace qcpde {

using cplx = std::complex<double>;

/// Uniform n x n discretization of the square window [-L, L]^2.
///
/// Node (j, k) sits at z = (-L + j dx) + i(-L + k dx); j runs along x, k along
/// y, and samples are stored row-major with flat index j * n + k.  Because n
/// is even the origin is always the node (n/2, n/2).  Compact supports are
/// required to lie inside the core disk |z| <= L/2; the annulus outside it is
/// the guard band that keeps periodic wrap-around away from the data.
class Grid {
public:
    /// Throws ConfigError unless n is a power of two >= 16 and L > 0.
    static Grid make(int n, double half_extent);

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] double half_extent() const noexcept { return half_extent_; }
    [[nodiscard]] double spacing() const noexcept { return 2.0 * half_extent_ / n_; }
    [[nodiscard]] double core_radius() const noexcept { return 0.5 * half_extent_; }
    [[nodiscard]] double cell_area() const noexcept { return spacing() * spacing(); }
    [[nodiscard]] std::size_t size() const noexcept {
        return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
    }

    [[nodiscard]] std::size_t index(int j, int k) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(k);
    }
    [[nodiscard]] double x(int j) const noexcept { return -half_extent_ + j * spacing(); }
    [[nodiscard]] double y(int k) const noexcept { return -half_extent_ + k * spacing(); }
    [[nodiscard]] cplx node(int j, int k) const noexcept { return {x(j), y(k)}; }
    [[nodiscard]] cplx node(std::size_t idx) const noexcept {
        return node(static_cast<int>(idx / n_), static_cast<int>(idx % n_));
    }
    [[nodiscard]] std::size_t origin_index() const noexcept { return index(n_ / 2, n_ / 2); }
    [[nodiscard]] bool in_core(std::size_t idx) const noexcept {
        return std::abs(node(idx)) <= core_radius() * (1.0 + 1e-12);
    }

    bool operator==(const Grid&) const = default;

private:
    Grid(int n, double half_extent) : n_(n), half_extent_(half_extent) {}

    int n_;
    double half_extent_;
};

inline Grid make_grid(int n, double half_extent) { return Grid::make(n, half_extent); }

/// Samples of a scalar field on a Grid, with an optional compact-support
/// declaration.  When support_radius R is set every sample with |z| > R is
/// exactly zero.
template <class T>
class Field {
public:
    using value_type = T;

    explicit Field(const Grid& grid) : grid_(grid), data_(grid.size(), T{}) {}
    Field(const Grid& grid, std::vector<T> data, std::optional<double> support_radius = {});

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
    [[nodiscard]] std::vector<T>& data() noexcept { return data_; }
    [[nodiscard]] const std::vector<T>& data() const noexcept { return data_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    T operator[](std::size_t i) const noexcept { return data_[i]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    [[nodiscard]] T at(int j, int k) const noexcept { return data_[grid_.index(j, k)]; }

    [[nodiscard]] std::optional<double> support_radius() const noexcept { return support_; }

    /// Zeroes everything with |z| > radius and records the declaration.
    void declare_support(double radius);
    void clear_support() noexcept { support_.reset(); }

    /// Throws SupportError unless a support inside the core disk is declared.
    void require_guarded_support(const char* what) const;

private:
    Grid grid_;
    std::vector<T> data_;
    std::optional<double> support_;
};

using ComplexField = Field<cplx>;
using RealField = Field<double>;

extern template class Field<cplx>;
extern template class Field<double>;

// --- sampling -------------------------------------------------------------

ComplexField sample(const std::function<cplx(cplx)>& f, const Grid& grid,
                    std::optional<double> support_radius = {});
RealField sample_real(const std::function<double(cplx)>& f, const Grid& grid,
                      std::optional<double> support_radius = {});

// --- pointwise algebra ----------------------------------------------------

ComplexField operator+(const ComplexField& a, const ComplexField& b);
ComplexField operator-(const ComplexField& a, const ComplexField& b);
ComplexField operator*(const ComplexField& a, const ComplexField& b);
ComplexField operator*(cplx s, const ComplexField& a);
RealField operator+(const RealField& a, const RealField& b);
RealField operator-(const RealField& a, const RealField& b);
RealField operator*(const RealField& a, const RealField& b);
RealField operator*(double s, const RealField& a);

ComplexField conjugate(const ComplexField& f);
RealField real_part(const ComplexField& f);
RealField imag_part(const ComplexField& f);
ComplexField to_complex(const RealField& f);

/// Support radius of a sum/product: the larger (sum) or smaller (product) of
/// the two declarations, empty when either side is undeclared.
std::optional<double> union_support(std::optional<double> a, std::optional<double> b);
std::optional<double> intersect_support(std::optional<double> a, std::optional<double> b);

// --- spectral derivatives on the periodic window --------------------------
//
// Fourier-multiplier derivatives with the zero mode annihilated and the
// Nyquist mode dropped from first derivatives.  d_zbar = (d_x + i d_y)/2,
// d_z = (d_x - i d_y)/2.

ComplexField d_x(const ComplexField& f);
ComplexField d_y(const ComplexField& f);
ComplexField d_z(const ComplexField& f);
ComplexField d_zbar(const ComplexField& f);
ComplexField laplacian(const ComplexField& f);

RealField d_x(const RealField& f);
RealField d_y(const RealField& f);
ComplexField d_z(const RealField& f);
ComplexField d_zbar(const RealField& f);
RealField laplacian(const RealField& f);

// --- core-localized derivatives -------------------------------------------
//
// Solutions on the plane (potentials, Cauchy integrals) are not periodic on
// the window.  These variants differentiate cutoff * f, where the smooth
// radial cutoff equals 1 (to 1e-18) on the core disk and vanishes at the
// window edge, so the result is the derivative of f on |z| <= L/2 and
// meaningless outside it.

RealField core_cutoff(const Grid& grid);
ComplexField d_z_core(const ComplexField& f);
ComplexField d_zbar_core(const ComplexField& f);
RealField d_x_core(const RealField& f);
RealField d_y_core(const RealField& f);
ComplexField d_x_core(const ComplexField& f);
ComplexField d_y_core(const ComplexField& f);
RealField laplacian_core(const RealField& f);

// --- norms ----------------------------------------------------------------

/// Discrete L_p norm (sum |f|^p dx^2)^(1/p) over the window; p = infinity
/// gives the max modulus.  Throws ConfigError for p < 1.
double norm_p(const ComplexField& f, double p);
double norm_p(const RealField& f, double p);

/// Same norm restricted to nodes with |z| <= radius.
double norm_p_disk(const ComplexField& f, double p, double radius);
double norm_p_disk(const RealField& f, double p, double radius);

inline double norm_p_core(const ComplexField& f, double p) {
    return norm_p_disk(f, p, f.grid().core_radius());
}
inline double norm_p_core(const RealField& f, double p) {
    return norm_p_disk(f, p, f.grid().core_radius());
}

/// Window mean (1/n^2) * sum f.
cplx mean(const ComplexField& f);
double mean(const RealField& f);

}  // namespace qcpde
