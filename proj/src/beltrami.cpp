#include "qcpde/beltrami.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "qcpde/errors.hpp"
#include "qcpde/interp.hpp"
#include "qcpde/transforms.hpp"

namespace qcpde {

// --- BeltramiCoefficient --------------------------------------------------

BeltramiCoefficient BeltramiCoefficient::make(ComplexField field) {
    double k = 0.0;
    double radius = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double a = std::abs(field[i]);
        if (!std::isfinite(a)) throw ConfigError("Beltrami coefficient has non-finite samples");
        k = std::max(k, a);
        if (a > 0.0) radius = std::max(radius, std::abs(field.grid().node(i)));
    }
    if (k >= 1.0 - kDegeneracyMargin) {
        throw DegeneracyError("nondegeneracy violated: sup|mu| = " + std::to_string(k) +
                              " must stay below 1");
    }
    if (!field.support_radius()) field.declare_support(radius);
    field.require_guarded_support("BeltramiCoefficient");
    return BeltramiCoefficient(std::move(field), k);
}

BeltramiCoefficient BeltramiCoefficient::zero(const Grid& grid) {
    ComplexField f(grid);
    f.declare_support(0.0);
    return BeltramiCoefficient(std::move(f), 0.0);
}

RealField BeltramiCoefficient::dilatation() const {
    std::vector<double> out(field_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double a = std::abs(field_[i]);
        out[i] = (1.0 + a) / (1.0 - a);
    }
    return RealField(field_.grid(), std::move(out));
}

void LinearSolveConfig::validate() const {
    if (!(tol > 0.0)) throw ConfigError("linear solver tol must be positive");
    if (max_iter < 1) throw ConfigError("linear solver max_iter must be >= 1");
}

nlohmann::json SolveReport::to_json() const {
    return {{"iterations", iterations},
            {"residuals", residual_history},
            {"contraction_ratio", contraction_ratio},
            {"converged", converged},
            {"final_residual", final_residual}};
}

// --- sources --------------------------------------------------------------

ComplexField SourceTerm::sampled(const BeltramiCoefficient& mu) const {
    if (!potential_density) return density;
    const auto pd = potential_dbar(*potential_density);
    auto out = density;
    out.clear_support();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += pd[i] + mu[i] * std::conj(pd[i]);
    return out;
}

SourceTerm SourceTerm::combine(double a, const SourceTerm& x, double b, const SourceTerm& y) {
    SourceTerm out(cplx(a) * x.density + cplx(b) * y.density);
    if (x.potential_density || y.potential_density) {
        const Grid& g = x.density.grid();
        RealField zero(g);
        zero.declare_support(0.0);
        const RealField& px = x.potential_density ? *x.potential_density : zero;
        const RealField& py = y.potential_density ? *y.potential_density : zero;
        out.potential_density = a * px + b * py;
    }
    return out;
}

// --- linear solve ---------------------------------------------------------

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw ConfigError(std::string(what) + ": fields live on different grids");
}

ComplexField mu_times(const BeltramiCoefficient& mu, const ComplexField& f) {
    std::vector<cplx> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu[i] * f[i];
    return ComplexField(f.grid(), std::move(out), mu.support_radius());
}

}  // namespace

BeltramiSolution solve_inhomogeneous(const BeltramiCoefficient& mu, const ComplexField& sigma,
                                     const LinearSolveConfig& cfg) {
    return solve_inhomogeneous(mu, SourceTerm(sigma), cfg);
}

BeltramiSolution solve_inhomogeneous(const BeltramiCoefficient& mu, const SourceTerm& source,
                                     const LinearSolveConfig& cfg,
                                     const ComplexField* warm_start) {
    cfg.validate();
    const Grid& grid = mu.grid();
    require_same_grid(grid, source.density.grid(), "solve_inhomogeneous");
    source.density.require_guarded_support("solve_inhomogeneous");

    // With a potential part, w = N + v where v_zbar = mu v_z + density + 2 mu N_z.
    std::optional<RealField> potential;
    std::optional<ComplexField> potential_zbar;
    ComplexField compact = source.density;
    if (source.potential_density) {
        potential = log_potential(*source.potential_density);
        potential_zbar = potential_dbar(*source.potential_density);
        compact = compact + cplx(2.0) * mu_times(mu, conjugate(*potential_zbar));
    }

    SolveReport report;
    const double sigma_norm = norm_p(compact, 2.0);
    ComplexField h = compact;
    if (warm_start && sigma_norm > 0.0) {
        require_same_grid(grid, warm_start->grid(), "solve_inhomogeneous");
        h = *warm_start;
        h.declare_support(*compact.support_radius());
    }

    if (sigma_norm == 0.0) {
        report.converged = true;
        h = compact;
    } else {
        double prev_diff = -1.0;
        const double floor = 1e-13 * sigma_norm;
        for (int m = 1; m <= cfg.max_iter; ++m) {
            ComplexField next = mu_times(mu, beurling_periodic(h)) + compact;
            const double diff = norm_p(next - h, 2.0);
            const double rel = diff / sigma_norm;
            report.residual_history.push_back(rel);
            if (prev_diff > floor && diff > floor) {
                report.contraction_ratio = std::max(report.contraction_ratio, diff / prev_diff);
            }
            prev_diff = diff;
            h = std::move(next);
            report.iterations = m;
            if (rel <= cfg.tol) {
                report.converged = true;
                break;
            }
        }
    }

    ComplexField th = beurling_periodic(h);
    if (sigma_norm > 0.0) {
        report.final_residual = norm_p(mu_times(mu, th) + compact - h, 2.0) / sigma_norm;
    }

    ComplexField omega = cauchy_transform(h);
    ComplexField omega_zbar = h;
    ComplexField omega_z = std::move(th);
    if (potential) {
        for (std::size_t i = 0; i < omega.size(); ++i) {
            omega[i] += (*potential)[i];
            omega_zbar[i] += (*potential_zbar)[i];
            omega_z[i] += std::conj((*potential_zbar)[i]);
        }
        omega_zbar.clear_support();
        const cplx at0 = omega[grid.origin_index()];
        for (auto& v : omega.data()) v -= at0;
    }
    return {std::move(omega), std::move(omega_zbar), std::move(omega_z), std::move(h),
            std::move(report)};
}

double residual_beltrami(const BeltramiCoefficient& mu, const ComplexField& sigma,
                         const ComplexField& omega) {
    require_same_grid(mu.grid(), omega.grid(), "residual_beltrami");
    return residual_beltrami(mu, sigma, d_zbar_core(omega), d_z_core(omega));
}

double residual_beltrami(const BeltramiCoefficient& mu, const ComplexField& sigma,
                         const ComplexField& wzbar, const ComplexField& wz) {
    const ComplexField& omega = wzbar;
    require_same_grid(mu.grid(), wzbar.grid(), "residual_beltrami");
    require_same_grid(mu.grid(), wz.grid(), "residual_beltrami");
    require_same_grid(mu.grid(), sigma.grid(), "residual_beltrami");
    std::vector<cplx> r(omega.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = wzbar[i] - mu[i] * wz[i] - sigma[i];
    const double num = norm_p_core(ComplexField(omega.grid(), std::move(r)), 2.0);
    const double den = std::max({norm_p_core(sigma, 2.0), mu.k() * norm_p_core(wz, 2.0),
                                 std::numeric_limits<double>::min()});
    return num / den;
}

// --- principal map --------------------------------------------------------

QCMap::QCMap(BeltramiCoefficient mu, ComplexField forward, RealField jac, ComplexField f_z,
             ComplexField f_zbar, SolveReport report, bool identity)
    : mu_(std::move(mu)),
      forward_(std::move(forward)),
      jacobian_(std::move(jac)),
      f_z_(std::move(f_z)),
      f_zbar_(std::move(f_zbar)),
      report_(std::move(report)),
      identity_(identity) {}

QCMap QCMap::build(BeltramiCoefficient mu, ComplexField forward, ComplexField f_z,
                   ComplexField f_zbar, SolveReport report, bool identity) {
    std::vector<double> jac(forward.size());
    for (std::size_t i = 0; i < jac.size(); ++i) jac[i] = std::norm(f_z[i]) - std::norm(f_zbar[i]);
    RealField jacobian(forward.grid(), std::move(jac));
    QCMap map(std::move(mu), std::move(forward), std::move(jacobian), std::move(f_z),
              std::move(f_zbar), std::move(report), identity);
    map.build_seed_table();
    return map;
}

void QCMap::build_seed_table() {
    const Grid& g = grid();
    double xlo = std::numeric_limits<double>::max(), ylo = xlo;
    double xhi = std::numeric_limits<double>::lowest(), yhi = xhi;
    for (cplx w : forward_.values()) {
        xlo = std::min(xlo, w.real());
        xhi = std::max(xhi, w.real());
        ylo = std::min(ylo, w.imag());
        yhi = std::max(yhi, w.imag());
    }
    box_lo_ = {xlo, ylo};
    box_hi_ = {xhi, yhi};
    table_size_ = std::max(16, g.n() / 4);
    const int m = table_size_;
    table_.assign(static_cast<std::size_t>(m) * m, -1);
    std::vector<double> best(table_.size(), std::numeric_limits<double>::max());

    const double cw = (xhi - xlo) / m;
    const double ch = (yhi - ylo) / m;
    auto cell_of = [&](cplx w) {
        const int a = std::clamp(static_cast<int>((w.real() - xlo) / cw), 0, m - 1);
        const int b = std::clamp(static_cast<int>((w.imag() - ylo) / ch), 0, m - 1);
        return std::pair{a, b};
    };
    for (std::size_t i = 0; i < forward_.size(); ++i) {
        const auto [a, b] = cell_of(forward_[i]);
        const cplx centre{xlo + (a + 0.5) * cw, ylo + (b + 0.5) * ch};
        const double d = std::abs(forward_[i] - centre);
        const std::size_t c = static_cast<std::size_t>(a) * m + b;
        if (d < best[c]) {
            best[c] = d;
            table_[c] = static_cast<std::int64_t>(i);
        }
    }
    // Fill empty cells from filled neighbours until the table is complete.
    bool changed = true;
    while (changed) {
        changed = false;
        auto snapshot = table_;
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                const std::size_t c = static_cast<std::size_t>(a) * m + b;
                if (snapshot[c] >= 0) continue;
                for (auto [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const int aa = a + da, bb = b + db;
                    if (aa < 0 || bb < 0 || aa >= m || bb >= m) continue;
                    const auto v = snapshot[static_cast<std::size_t>(aa) * m + bb];
                    if (v >= 0) {
                        table_[c] = v;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    cell_width_ = {cw, ch};
}

cplx QCMap::evaluate(cplx z) const {
    if (identity_) return z;
    return BicubicInterpolator<cplx>(forward_).value(z);
}

std::optional<cplx> QCMap::seed(cplx w) const {
    const double tol = grid().spacing();
    if (w.real() < box_lo_.real() - tol || w.real() > box_hi_.real() + tol ||
        w.imag() < box_lo_.imag() - tol || w.imag() > box_hi_.imag() + tol) {
        return std::nullopt;
    }
    const int m = table_size_;
    const int a = std::clamp(static_cast<int>((w.real() - box_lo_.real()) / cell_width_.real()), 0, m - 1);
    const int b = std::clamp(static_cast<int>((w.imag() - box_lo_.imag()) / cell_width_.imag()), 0, m - 1);
    const auto idx = table_[static_cast<std::size_t>(a) * m + b];
    if (idx < 0) return std::nullopt;
    return grid().node(static_cast<std::size_t>(idx));
}

QCMap principal_map(const BeltramiCoefficient& mu, const LinearSolveConfig& cfg) {
    const Grid& grid = mu.grid();
    if (mu.k() == 0.0) {
        auto forward = sample([](cplx z) { return z; }, grid);
        auto f_z = sample([](cplx) { return cplx(1.0); }, grid);
        ComplexField f_zbar(grid);
        SolveReport report;
        report.converged = true;
        return QCMap::build(mu, std::move(forward), std::move(f_z), std::move(f_zbar),
                            std::move(report), true);
    }

    auto sol = solve_inhomogeneous(mu, mu.field(), cfg);
    if (!sol.report.converged) {
        throw SolverError("principal_map: linear Beltrami solve did not converge in " +
                          std::to_string(sol.report.iterations) + " iterations");
    }
    ComplexField density = sol.omega_zbar;
    density.declare_support(mu.support_radius());
    // sol.omega is C h shifted to vanish at 0; restore the principal constant.
    const cplx shift = cauchy_at_origin(density);
    ComplexField forward(grid);
    ComplexField f_z(grid);
    for (std::size_t i = 0; i < forward.size(); ++i) {
        forward[i] = grid.node(i) + sol.omega[i] + shift;
        f_z[i] = 1.0 + sol.omega_z[i];
    }
    auto map = QCMap::build(mu, std::move(forward), std::move(f_z), std::move(sol.omega_zbar),
                            std::move(sol.report), false);
    double min_jac = std::numeric_limits<double>::max();
    for (double j : map.jacobian().values()) min_jac = std::min(min_jac, j);
    if (!(min_jac > 0.0)) {
        throw SolverError("resolution insufficient for homeomorphism certification (min J = " +
                          std::to_string(min_jac) + ")");
    }
    return map;
}

cplx invert_map(const QCMap& map, cplx w) {
    const Grid& g = map.grid();
    const double L = g.half_extent();
    auto in_window = [&](cplx z) {
        return std::abs(z.real()) <= L && std::abs(z.imag()) <= L;
    };
    if (map.is_identity()) {
        if (!in_window(w)) throw OutOfRangeError("invert_map: point outside the window image");
        return w;
    }
    const auto seed = map.seed(w);
    if (!seed) throw OutOfRangeError("invert_map: point outside the window image");

    const BicubicInterpolator<cplx> interp(map.forward());
    cplx z = *seed;
    double res = std::numeric_limits<double>::max();
    for (int it = 0; it < 50; ++it) {
        if (!in_window(z)) throw OutOfRangeError("invert_map: Newton iterate left the window");
        const auto jet = interp.jet(z);
        const cplx r = jet.value - w;
        res = std::abs(r);
        if (res <= 1e-13 * L) return z;
        const double a = jet.dx.real(), b = jet.dy.real();
        const double c = jet.dx.imag(), d = jet.dy.imag();
        const double det = a * d - b * c;
        if (det == 0.0 || !std::isfinite(det)) break;
        const double dx = -(d * r.real() - b * r.imag()) / det;
        const double dy = -(-c * r.real() + a * r.imag()) / det;
        z += cplx(dx, dy);
    }
    if (res <= 1e-9 * L) return z;
    throw SolverError("invert_map: Newton iteration stagnated at residual " +
                      std::to_string(res));
}

double holder_quotient(const ComplexField& omega, double p, int sample_pairs, std::uint64_t seed) {
    if (!(p > 2.0)) throw ConfigError("holder_quotient needs p > 2");
    if (sample_pairs < 1) throw ConfigError("holder_quotient needs at least one sample pair");
    const double alpha = 1.0 - 2.0 / p;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, omega.size() - 1);
    double best = 0.0;
    for (int s = 0; s < sample_pairs; ++s) {
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        if (i == j) j = (j + 1) % omega.size();
        const double dist = std::abs(omega.grid().node(i) - omega.grid().node(j));
        best = std::max(best, std::abs(omega[i] - omega[j]) / std::pow(dist, alpha));
    }
    return best;
}

}  // namespace qcpde
