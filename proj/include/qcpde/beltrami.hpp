#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "qcpde/grid.hpp"

namespace qcpde {

/// Complex dilatation mu with certified sup norm k < 1 and a compact support
/// inside the guard band.
class BeltramiCoefficient {
public:
    /// Inputs with k >= 1 - 1e-6 are rejected (DegeneracyError).  The support
    /// is the field's declaration, or inferred from its nonzero samples; it
    /// must lie inside |z| <= L/2 (SupportError).
    static BeltramiCoefficient make(ComplexField field);
    static BeltramiCoefficient zero(const Grid& grid);

    [[nodiscard]] const ComplexField& field() const noexcept { return field_; }
    [[nodiscard]] const Grid& grid() const noexcept { return field_.grid(); }
    [[nodiscard]] double k() const noexcept { return k_; }
    [[nodiscard]] double support_radius() const noexcept { return *field_.support_radius(); }
    [[nodiscard]] cplx operator[](std::size_t i) const noexcept { return field_[i]; }

    /// K_mu = (1 + |mu|) / (1 - |mu|).
    [[nodiscard]] RealField dilatation() const;

    static constexpr double kDegeneracyMargin = 1e-6;

private:
    BeltramiCoefficient(ComplexField f, double k) : field_(std::move(f)), k_(k) {}

    ComplexField field_;
    double k_;
};

struct LinearSolveConfig {
    double tol = 1e-11;
    int max_iter = 2000;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history;
    double contraction_ratio = 0.0;
    bool converged = false;
    double final_residual = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Right-hand side of w_zbar = mu w_z + sigma, split into a compactly
/// supported density and an optional potential part.
///
/// With `potential_density` = rho set, sigma additionally contains
/// N_zbar + mu * conj(N_zbar) where N is the logarithmic potential of rho and
/// mu is the coefficient of the equation being solved.  That part is not
/// compactly supported, so it is handled through the particular solution N
/// instead of being sampled into the iteration.
struct SourceTerm {
    ComplexField density;
    std::optional<RealField> potential_density;

    explicit SourceTerm(ComplexField d) : density(std::move(d)) {}
    SourceTerm(ComplexField d, RealField rho) : density(std::move(d)), potential_density(std::move(rho)) {}

    /// sigma sampled on the grid (non-compact when a potential part is present).
    [[nodiscard]] ComplexField sampled(const BeltramiCoefficient& mu) const;

    /// a * x + b * y, componentwise.
    static SourceTerm combine(double a, const SourceTerm& x, double b, const SourceTerm& y);
};

struct BeltramiSolution {
    ComplexField omega;     // normalized omega(0) = 0
    ComplexField omega_zbar;
    ComplexField omega_z;
    ComplexField density;  // fixed point h of the compact part, usable as a warm start
    SolveReport report;
};

/// Solves w_zbar = mu w_z + sigma for compactly supported sigma.
///
/// Iterates the density h = w_zbar through h <- mu T h + sigma starting at
/// h = sigma, stops when ||h_{m+1} - h_m|| / ||sigma|| <= tol, then sets
/// w = C h normalized at the origin.  A report with converged = false is
/// returned when max_iter is exhausted.
BeltramiSolution solve_inhomogeneous(const BeltramiCoefficient& mu, const ComplexField& sigma,
                                     const LinearSolveConfig& cfg);

/// General source form; `warm_start` seeds the density iteration.
BeltramiSolution solve_inhomogeneous(const BeltramiCoefficient& mu, const SourceTerm& source,
                                     const LinearSolveConfig& cfg,
                                     const ComplexField* warm_start = nullptr);

/// ||d_zbar w - mu d_z w - sigma||_2 / max(||sigma||_2, k ||d_z w||_2, floor),
/// with core-localized derivatives and norms over the core disk.
double residual_beltrami(const BeltramiCoefficient& mu, const ComplexField& sigma,
                         const ComplexField& omega);

/// Same quotient with the derivative fields supplied by the solver
/// (w_zbar = h, w_z = T h) instead of being recomputed from w.
double residual_beltrami(const BeltramiCoefficient& mu, const ComplexField& sigma,
                         const ComplexField& omega_zbar, const ComplexField& omega_z);

/// Principal mu-conformal map f(z) = z + C h with C h -> 0 at infinity.
class QCMap {
public:
    [[nodiscard]] const ComplexField& forward() const noexcept { return forward_; }
    [[nodiscard]] const RealField& jacobian() const noexcept { return jacobian_; }
    [[nodiscard]] const BeltramiCoefficient& mu() const noexcept { return mu_; }
    [[nodiscard]] const ComplexField& f_z() const noexcept { return f_z_; }
    [[nodiscard]] const ComplexField& f_zbar() const noexcept { return f_zbar_; }
    [[nodiscard]] const SolveReport& report() const noexcept { return report_; }
    [[nodiscard]] const Grid& grid() const noexcept { return forward_.grid(); }
    [[nodiscard]] bool is_identity() const noexcept { return identity_; }

    /// Bicubic evaluation of the forward map off the grid.
    [[nodiscard]] cplx evaluate(cplx z) const;

    /// Seed point for inversion: a source node whose image lies near w.
    [[nodiscard]] std::optional<cplx> seed(cplx w) const;

    /// Axis-aligned bounding box of the image of the whole window.
    [[nodiscard]] std::pair<cplx, cplx> image_box() const noexcept { return {box_lo_, box_hi_}; }

    static QCMap build(BeltramiCoefficient mu, ComplexField forward, ComplexField f_z,
                       ComplexField f_zbar, SolveReport report, bool identity);

private:
    QCMap(BeltramiCoefficient mu, ComplexField forward, RealField jac, ComplexField f_z,
          ComplexField f_zbar, SolveReport report, bool identity);
    void build_seed_table();

    BeltramiCoefficient mu_;
    ComplexField forward_;
    RealField jacobian_;
    ComplexField f_z_;
    ComplexField f_zbar_;
    SolveReport report_;
    bool identity_;
    cplx box_lo_{};
    cplx box_hi_{};
    cplx cell_width_{};
    int table_size_ = 0;
    std::vector<std::int64_t> table_;
};

/// Throws SolverError if the linear solve fails or the Jacobian is not
/// positive at every node ("resolution insufficient for homeomorphism
/// certification").
QCMap principal_map(const BeltramiCoefficient& mu, const LinearSolveConfig& cfg);

/// z with |f(z) - w| <= 1e-9 L by Newton iteration on the bicubic forward map
/// (at most 50 steps) from a table-lookup seed.  OutOfRangeError when w is
/// outside the image of the window, SolverError on stagnation.
cplx invert_map(const QCMap& map, cplx w);

/// max |w(z1) - w(z2)| / |z1 - z2|^(1 - 2/p) over `sample_pairs` random node
/// pairs drawn with `seed`.  Requires p > 2.
double holder_quotient(const ComplexField& omega, double p, int sample_pairs,
                       std::uint64_t seed = 0x5eed);

}  // namespace qcpde
