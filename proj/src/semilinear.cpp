#include "qcpde/semilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qcpde/errors.hpp"
#include "qcpde/interp.hpp"

namespace qcpde {

const char* to_string(NonlinearityKind kind) {
    switch (kind) {
        case NonlinearityKind::Constant: return "constant";
        case NonlinearityKind::Power: return "power";
        case NonlinearityKind::SignedPower: return "signed_power";
        case NonlinearityKind::NegExp: return "neg_exp";
        case NonlinearityKind::Custom: return "custom";
    }
    return "custom";
}

// --- Nonlinearity ---------------------------------------------------------

namespace {

void require_exponent(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw ConfigError("exponent lambda must lie in (0, 1), got " + std::to_string(lambda));
    }
}

}  // namespace

Nonlinearity::Nonlinearity(NonlinearityKind kind, std::function<cplx(cplx)> q, double lambda,
                           std::string name, bool real_argument)
    : kind_(kind), q_(std::move(q)), lambda_(lambda), name_(std::move(name)),
      real_argument_(real_argument) {
    for (double t = 1.0; t <= 1e6; t *= 10.0) probes_.push_back({t, q_star(*this, t) / t});
}

Nonlinearity Nonlinearity::constant(cplx c) {
    return {NonlinearityKind::Constant, [c](cplx) { return c; }, 0.0, "constant", false};
}

Nonlinearity Nonlinearity::power(double lambda) {
    require_exponent(lambda);
    return {NonlinearityKind::Power, [lambda](cplx w) { return cplx(std::pow(std::abs(w), lambda)); },
            lambda, "power", false};
}

Nonlinearity Nonlinearity::signed_power(double lambda) {
    require_exponent(lambda);
    return {NonlinearityKind::SignedPower,
            [lambda](cplx w) {
                const double a = std::abs(w);
                return a == 0.0 ? cplx{} : std::pow(a, lambda - 1.0) * w;
            },
            lambda, "signed_power", false};
}

Nonlinearity Nonlinearity::neg_exp() {
    return {NonlinearityKind::NegExp, [](cplx w) { return cplx(std::exp(-std::abs(w))); }, 0.0,
            "neg_exp", false};
}

Nonlinearity Nonlinearity::custom(std::function<cplx(cplx)> q, std::string name) {
    if (!q) throw ConfigError("custom nonlinearity needs a callable");
    return {NonlinearityKind::Custom, std::move(q), 0.0, std::move(name), false};
}

Nonlinearity Nonlinearity::of_real(NonlinearityKind kind, std::function<double(double)> Q,
                                   double lambda, std::string name) {
    if (!Q) throw ConfigError("real nonlinearity needs a callable");
    return {kind, [Q = std::move(Q)](cplx w) { return cplx(Q(w.real())); }, lambda,
            std::move(name), true};
}

void Nonlinearity::validate() const {
    // Continuity: no jump at scale 1e-8 larger than a coarse modulus bound.
    for (double r : {0.0, 1e-3, 0.1, 1.0, 10.0, 100.0}) {
        for (int a = 0; a < 16; ++a) {
            const cplx w = std::polar(r, 2.0 * std::numbers::pi * a / 16.0);
            const cplx qw = q_(w);
            if (!std::isfinite(qw.real()) || !std::isfinite(qw.imag())) {
                throw ConfigError("nonlinearity '" + name_ + "' is not finite at |w| = " +
                                  std::to_string(r));
            }
            const double delta = 1e-8 * (1.0 + r);
            for (cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
                if (std::abs(q_(w + delta * dir) - qw) > 1e-3 * (1.0 + std::abs(qw))) {
                    throw ConfigError("nonlinearity '" + name_ + "' failed the continuity probe");
                }
            }
        }
    }
    // Sublinearity: q_*(t)/t below 1 at the largest probe and not growing at the end.
    const auto n = probes_.size();
    const bool decreasing = probes_[n - 1].ratio <= probes_[n - 2].ratio * (1.0 + 1e-12) &&
                            probes_[n - 2].ratio <= probes_[n - 3].ratio * (1.0 + 1e-12);
    if (!(probes_.back().ratio < 1.0) || !decreasing) {
        throw ConfigError("nonlinearity '" + name_ + "' is not sublinear: q_*(t)/t = " +
                          std::to_string(probes_.back().ratio) + " at t = 1e6");
    }
}

nlohmann::json Nonlinearity::to_json() const {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : probes_) probes.push_back({{"t", p.radius}, {"ratio", p.ratio}});
    nlohmann::json out{{"kind", to_string(kind_)}, {"name", name_}, {"sublinearity_probe", probes}};
    if (kind_ == NonlinearityKind::Power || kind_ == NonlinearityKind::SignedPower) {
        out["lambda"] = lambda_;
    }
    return out;
}

double q_star(const Nonlinearity& q, double t) {
    if (!(t >= 0.0)) throw ConfigError("q_star needs t >= 0");
    constexpr int radial = 256;
    constexpr int angular = 64;
    double best = std::abs(q(cplx{}));
    for (int i = 1; i <= radial; ++i) {
        const double r = t * (static_cast<double>(i) / radial);
        for (int a = 0; a < angular; ++a) {
            best = std::max(best, std::abs(q(std::polar(r, 2.0 * std::numbers::pi * a / angular))));
        }
    }
    return best;
}

// --- continuation ---------------------------------------------------------

void ContinuationConfig::validate() const {
    if (tau_steps < 1) throw ConfigError("tau_steps must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
    if (!(inner_tol > 0.0)) throw ConfigError("inner_tol must be positive");
    if (inner_max_iter < 1) throw ConfigError("inner_max_iter must be >= 1");
    if (!(blowup_guard > 1.0)) throw ConfigError("blowup_guard must exceed 1");
    linear.validate();
}

nlohmann::json ContinuationReport::to_json() const {
    auto out = summary.to_json();
    out["tau_schedule"] = tau_schedule;
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& s : steps) {
        blocks.push_back({{"tau", s.tau},
                          {"iterations", s.iterations},
                          {"residuals", s.certificates},
                          {"certificate", s.certificate},
                          {"converged", s.converged}});
    }
    out["tau_steps"] = blocks;
    out["certificate"] = certificate;
    out["apriori_radius"] = apriori_radius;
    out["source_norm_max"] = source_norm_max;
    return out;
}

SourceOperator multiply_by(const ComplexField& sigma) {
    sigma.require_guarded_support("multiply_by");
    return [sigma](const ComplexField& rho) { return SourceTerm(sigma * rho); };
}

namespace {

// Smallest r on a geometric ladder with scale * q_*(m r) <= r.
double apriori_radius(const Nonlinearity& q, double scale, double m) {
    double r = scale * 1e-6;
    for (int j = 0; j < 400; ++j, r *= 1.1) {
        if (scale * q_star(q, m * r) <= r) return r;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

SemilinearSolution solve_semilinear_operator(const BeltramiCoefficient& mu, const RealField& G,
                                             const SourceOperator& op, const Nonlinearity& q,
                                             const ContinuationConfig& cfg) {
    cfg.validate();
    q.validate();
    const Grid& grid = mu.grid();
    if (!(G.grid() == grid)) throw ConfigError("solve_semilinear: G and mu live on different grids");

    const auto source_norm = [&](const SourceTerm& s) { return norm_p_core(s.sampled(mu), 2.0); };
    const ComplexField Gc = [&] {
        auto c = to_complex(G);
        if (G.support_radius()) c.declare_support(*G.support_radius());
        return c;
    }();
    const double scale = source_norm(op(Gc));

    ContinuationReport rep;
    for (int s = 1; s <= cfg.tau_steps; ++s) {
        rep.tau_schedule.push_back(static_cast<double>(s) / cfg.tau_steps);
    }

    ComplexField rho = cplx(0.0) * Gc;
    BeltramiSolution sol = solve_inhomogeneous(mu, op(rho), cfg.linear);
    if (scale == 0.0) {
        rep.summary.converged = true;
        return {std::move(sol.omega), std::move(sol.omega_zbar), std::move(sol.omega_z),
                std::move(rho), std::move(rep)};
    }

    double m_ratio = 0.0;
    double radius = std::numeric_limits<double>::infinity();
    double radius_at = -1.0;
    bool all_converged = true;
    double prev_cert = -1.0;

    double prev_tau = 0.0;
    for (double tau : rep.tau_schedule) {
        ContinuationStep step;
        step.tau = tau;
        prev_cert = -1.0;
        // Predictor: the first step starts from tau G (rho = 0 is a fixed point
        // whenever q(0) = 0), later steps rescale the previous fixed point.
        rho = prev_tau == 0.0 ? cplx(tau) * Gc : cplx(tau / prev_tau) * rho;
        {
            const ComplexField warm = sol.density;
            sol = solve_inhomogeneous(mu, op(rho), cfg.linear, &warm);
        }
        prev_tau = tau;
        for (int it = 0;; ++it) {
            ComplexField F(grid);
            for (std::size_t i = 0; i < F.size(); ++i) F[i] = tau * G[i] * q(sol.omega[i]);
            if (G.support_radius()) F.declare_support(*G.support_radius());

            const double cert = source_norm(op(rho - F)) / scale;
            step.certificates.push_back(cert);
            rep.summary.residual_history.push_back(cert);
            if (prev_cert > 1e-14 && cert > 1e-14) {
                rep.summary.contraction_ratio = std::max(rep.summary.contraction_ratio, cert / prev_cert);
            }
            prev_cert = cert;
            step.certificate = cert;
            step.iterations = it;
            if (cert <= cfg.inner_tol) {
                step.converged = true;
                break;
            }
            if (it == cfg.inner_max_iter) break;

            rho = cplx(1.0 - cfg.damping) * rho + cplx(cfg.damping) * F;
            const SourceTerm src = op(rho);
            const ComplexField warm = sol.density;
            sol = solve_inhomogeneous(mu, src, cfg.linear, &warm);
            if (!sol.report.converged) {
                throw SolverError("inner linear Beltrami solve did not converge at tau = " +
                                  std::to_string(tau));
            }
            ++rep.summary.iterations;

            const double s_norm = source_norm(src);
            rep.source_norm_max = std::max(rep.source_norm_max, s_norm);
            if (s_norm > 0.0) m_ratio = std::max(m_ratio, norm_p(sol.omega, INFINITY) / s_norm);
            if (m_ratio > 1.01 * radius_at) {
                radius = apriori_radius(q, scale, m_ratio);
                radius_at = m_ratio;
            }
            if (s_norm > cfg.blowup_guard * radius) {
                throw BlowupError("continuation left the a priori ball at tau = " +
                                  std::to_string(tau) + ": ||L rho|| = " + std::to_string(s_norm) +
                                  " > " + std::to_string(cfg.blowup_guard) + " * " +
                                  std::to_string(radius));
            }
        }
        all_converged = all_converged && step.converged;
        rep.steps.push_back(std::move(step));
        if (!rep.steps.back().converged) break;
    }

    rep.apriori_radius = radius;
    rep.certificate = rep.steps.back().certificate;
    rep.summary.final_residual = rep.certificate;
    rep.summary.converged = all_converged && rep.steps.size() == rep.tau_schedule.size();
    return {std::move(sol.omega), std::move(sol.omega_zbar), std::move(sol.omega_z),
            std::move(rho), std::move(rep)};
}

SemilinearSolution solve_semilinear(const BeltramiCoefficient& mu, const ComplexField& sigma,
                                    const Nonlinearity& q, const ContinuationConfig& cfg) {
    RealField one(mu.grid(), std::vector<double>(mu.grid().size(), 1.0));
    return solve_semilinear_operator(mu, one, multiply_by(sigma), q, cfg);
}

// --- factorization --------------------------------------------------------

Grid image_grid_for(const QCMap& map) {
    const Grid& g = map.grid();
    double half = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i)) continue;
        const cplx w = map.forward()[i];
        half = std::max({half, std::abs(w.real()), std::abs(w.imag())});
    }
    return Grid::make(g.n(), 2.0 * half);
}

namespace {

// Image of the window boundary as a closed polygon.
std::vector<cplx> boundary_image(const QCMap& map) {
    const Grid& g = map.grid();
    const int n = g.n();
    std::vector<cplx> poly;
    poly.reserve(4 * n);
    for (int j = 0; j < n; ++j) poly.push_back(map.forward()[g.index(j, 0)]);
    for (int k = 0; k < n; ++k) poly.push_back(map.forward()[g.index(n - 1, k)]);
    for (int j = n - 1; j >= 0; --j) poly.push_back(map.forward()[g.index(j, n - 1)]);
    for (int k = n - 1; k >= 0; --k) poly.push_back(map.forward()[g.index(0, k)]);
    return poly;
}

bool inside(const std::vector<cplx>& poly, cplx w) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const cplx a = poly[i], b = poly[j];
        if ((a.imag() > w.imag()) != (b.imag() > w.imag())) {
            const double x = a.real() + (w.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
            if (w.real() < x) in = !in;
        }
    }
    return in;
}

double vekua_residual(const ComplexField& H, const ComplexField& g, const Nonlinearity* q) {
    const auto hz = d_zbar_core(H);
    ComplexField r(H.grid());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = hz[i] - g[i] * (q ? (*q)(H[i]) : cplx(1.0));
    const double gn = norm_p(g, 2.0);
    return gn > 0.0 ? norm_p_core(r, 2.0) / gn : norm_p_core(r, 2.0);
}

}  // namespace

FactorizationResult factorize(const ComplexField& omega, const BeltramiCoefficient& mu,
                              const ComplexField& sigma, const LinearSolveConfig& cfg,
                              const Nonlinearity* q) {
    if (!(omega.grid() == mu.grid()) || !(sigma.grid() == mu.grid())) {
        throw ConfigError("factorize: fields live on different grids");
    }
    QCMap map = principal_map(mu, cfg);
    if (map.is_identity()) {
        const double v = vekua_residual(omega, sigma, q);
        return {std::move(map), omega.grid(), omega, sigma, 0, v};
    }

    const Grid ig = image_grid_for(map);
    ComplexField multiplier(map.grid());
    for (std::size_t i = 0; i < multiplier.size(); ++i) {
        if (sigma[i] != cplx{}) multiplier[i] = map.f_z()[i] / map.jacobian()[i] * sigma[i];
    }
    const BicubicInterpolator<cplx> h_interp(omega);
    const BicubicInterpolator<cplx> g_interp(multiplier);
    const RealField cutoff = core_cutoff(ig);

    // Only nodes inside f(window) where the image cutoff is not negligible
    // count as failures; the rest lie outside the domain of f^-1.
    const auto poly = boundary_image(map);
    auto counts = [&](std::size_t i) { return cutoff[i] >= 1e-14 && inside(poly, ig.node(i)); };

    ComplexField H(ig);
    ComplexField g(ig);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < ig.size(); ++i) {
        cplx z;
        try {
            z = invert_map(map, ig.node(i));
        } catch (const OutOfRangeError&) {
            if (counts(i)) ++failures;
            continue;
        } catch (const SolverError&) {
            if (counts(i)) ++failures;
            continue;
        }
        H[i] = h_interp.value(z);
        g[i] = g_interp.value(z);
    }
    if (static_cast<double>(failures) > 1e-3 * static_cast<double>(ig.size())) {
        throw SolverError("factorize: map inversion failed at " + std::to_string(failures) +
                          " image nodes");
    }
    const double v = vekua_residual(H, g, q);
    return {std::move(map), ig, std::move(H), std::move(g), failures, v};
}

ComplexField compose_solution(const ComplexField& H, const QCMap& map) {
    if (map.is_identity() && H.grid() == map.grid()) return H;
    const Grid& src = map.grid();
    const double Li = H.grid().half_extent();
    const BicubicInterpolator<cplx> interp(H);
    ComplexField out(src);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const cplx w = map.forward()[i];
        if (std::abs(w.real()) <= Li && std::abs(w.imag()) <= Li) {
            out[i] = interp.value(w);
        } else if (src.in_core(i)) {
            throw OutOfRangeError("compose_solution: image grid does not cover f(core)");
        }
    }
    return out;
}

}  // namespace qcpde
