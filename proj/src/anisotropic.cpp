#include "qcpde/anisotropic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "json.hpp"
#include "qcpde/errors.hpp"
#include "qcpde/field_io.hpp"
#include "qcpde/interp.hpp"
#include "qcpde/shapes.hpp"
#include "qcpde/transforms.hpp"

namespace qcpde {

// --- matrix fields and the dictionary -------------------------------------

MatrixField MatrixField::make(RealField a11, RealField a12, RealField a22) {
    if (!(a11.grid() == a12.grid()) || !(a11.grid() == a22.grid())) {
        throw ConfigError("matrix field entries live on different grids");
    }
    for (std::size_t i = 0; i < a11.size(); ++i) {
        const double det = a11[i] * a22[i] - a12[i] * a12[i];
        if (!(std::abs(det - 1.0) <= 1e-9)) {
            throw ConfigError("matrix field needs det A = 1, found " + std::to_string(det) +
                              " at node " + std::to_string(i));
        }
        if (!((1.0 + a11[i]) * (1.0 + a22[i]) - a12[i] * a12[i] > 0.0)) {
            throw DegeneracyError("ellipticity violated: det(I + A) <= 0 at node " +
                                  std::to_string(i));
        }
    }
    a11.clear_support();
    a12.clear_support();
    a22.clear_support();
    return MatrixField(std::move(a11), std::move(a12), std::move(a22));
}

MatrixField MatrixField::identity(const Grid& grid) {
    RealField one(grid, std::vector<double>(grid.size(), 1.0));
    return MatrixField(one, RealField(grid), one);
}

cplx mu_of_matrix(double a11, double a12, double a22) {
    const double e = (1.0 + a11) * (1.0 + a22) - a12 * a12;
    return cplx(a22 - a11, -2.0 * a12) / e;
}

std::array<double, 3> matrix_of_mu(cplx mu) {
    const double d = 1.0 - std::norm(mu);
    return {std::norm(1.0 - mu) / d, -2.0 * mu.imag() / d, std::norm(1.0 + mu) / d};
}

BeltramiCoefficient mu_from_A(const MatrixField& A) {
    ComplexField mu(A.grid());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const cplx m = mu_of_matrix(A.a11()[i], A.a12()[i], A.a22()[i]);
        mu[i] = std::abs(m) < 1e-15 ? cplx{} : m;
    }
    try {
        return BeltramiCoefficient::make(std::move(mu));
    } catch (const DegeneracyError& e) {
        throw DegeneracyError(std::string("ellipticity violated: ") + e.what());
    }
}

MatrixField A_from_mu(const BeltramiCoefficient& mu) {
    const Grid& g = mu.grid();
    RealField a11(g), a12(g), a22(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto a = matrix_of_mu(mu[i]);
        a11[i] = a[0];
        a12[i] = a[1];
        a22[i] = a[2];
    }
    return MatrixField::make(std::move(a11), std::move(a12), std::move(a22));
}

MatrixField matrix_preset(const Grid& grid, double a11, double a12, double a22, double inner,
                          double outer) {
    const double det = a11 * a22 - a12 * a12;
    if (!(std::abs(det - 1.0) <= 1e-9)) throw ConfigError("matrix preset needs det A = 1");
    const cplx mu0 = mu_of_matrix(a11, a12, a22);
    if (!(std::abs(mu0) < 1.0 - BeltramiCoefficient::kDegeneracyMargin)) {
        throw DegeneracyError("ellipticity violated: |mu_A| = " + std::to_string(std::abs(mu0)));
    }
    return A_from_mu(BeltramiCoefficient::make(shapes::plateau(grid, mu0, inner, outer)));
}

// --- sources and potentials -----------------------------------------------

ComplexField sigma_from_source(const BeltramiCoefficient& mu, const RealField& g) {
    const auto pd = potential_dbar(g);
    ComplexField out(g.grid());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pd[i] + mu[i] * std::conj(pd[i]);
    return out;
}

SourceOperator potential_operator() {
    return [](const ComplexField& rho) {
        RealField r = real_part(rho);
        if (rho.support_radius()) r.declare_support(*rho.support_radius());
        ComplexField none(rho.grid());
        none.declare_support(0.0);
        return SourceTerm(std::move(none), std::move(r));
    };
}

HarmonicSourceSolution harmonic_source_solve(const RealField& g) {
    RealField h = log_potential(g);
    const double gn = norm_p(g, 2.0);
    const double cert = gn > 0.0 ? norm_p_core(laplacian_core(h) - g, 2.0) / gn : 0.0;
    if (cert > 1e-6) {
        throw SolverError("harmonic_source_solve: Laplacian certificate " + std::to_string(cert));
    }
    return {std::move(h), cert};
}

Nonlinearity preset_Q(NonlinearityKind kind, std::optional<double> lambda) {
    switch (kind) {
        case NonlinearityKind::Constant: {
            const double c = lambda.value_or(1.0);
            return Nonlinearity::of_real(kind, [c](double) { return c; }, c, "constant");
        }
        case NonlinearityKind::Power: {
            const double l = lambda.value_or(0.5);
            if (!(l > 0.0 && l < 1.0)) throw ConfigError("power preset needs lambda in (0, 1)");
            return Nonlinearity::of_real(
                kind, [l](double t) { return t > 0.0 ? std::pow(t, l) : 0.0; }, l, "power");
        }
        case NonlinearityKind::SignedPower: {
            const double l = lambda.value_or(0.5);
            if (!(l > 0.0 && l < 1.0)) {
                throw ConfigError("signed_power preset needs lambda in (0, 1)");
            }
            return Nonlinearity::of_real(
                kind,
                [l](double t) { return t == 0.0 ? 0.0 : std::pow(std::abs(t), l - 1.0) * t; }, l,
                "signed_power");
        }
        case NonlinearityKind::NegExp:
            return Nonlinearity::of_real(kind, [](double t) { return std::exp(-std::abs(t)); },
                                         0.0, "neg_exp");
        case NonlinearityKind::Custom: break;
    }
    throw ConfigError("preset_Q: no preset for a custom nonlinearity");
}

// --- weak forms -----------------------------------------------------------

namespace {

double profile(double s) {
    return std::abs(s) < 1.0 ? std::exp(-4.0 * s * s / (1.0 - s * s)) : 0.0;
}

double profile_derivative(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double d = 1.0 - s * s;
    return profile(s) * (-8.0 * s / (d * d));
}

double gradient_norm(const RealField& fx, const RealField& fy) {
    const double a = norm_p_core(fx, 2.0);
    const double b = norm_p_core(fy, 2.0);
    return std::hypot(a, b);
}

}  // namespace

WeakTestSet WeakTestSet::make(const Grid& grid, int count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("weak test set needs at least one function");
    const double L = grid.half_extent();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    WeakTestSet set;
    set.seed = seed;
    for (int c = 0; c < count; ++c) {
        const double sx = L * (0.075 + 0.075 * unit(rng));
        const double sy = L * (0.075 + 0.075 * unit(rng));
        const double room = grid.core_radius() - std::hypot(sx, sy) - grid.spacing();
        const cplx centre = std::polar(room * std::sqrt(unit(rng)), 2.0 * std::numbers::pi * unit(rng));
        TestFunction tf{RealField(grid), RealField(grid), RealField(grid), centre, sx, sy};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const cplx z = grid.node(i) - centre;
            const double u = z.real() / sx, v = z.imag() / sy;
            if (std::abs(u) >= 1.0 || std::abs(v) >= 1.0) continue;
            const double pu = profile(u), pv = profile(v);
            tf.psi[i] = pu * pv;
            tf.psi_x[i] = profile_derivative(u) / sx * pv;
            tf.psi_y[i] = pu * profile_derivative(v) / sy;
        }
        set.functions.push_back(std::move(tf));
    }
    return set;
}

double weak_residual(const RealField& u, const MatrixField& A, const RealField& G,
                     const Nonlinearity& Q, const WeakTestSet& tests) {
    const Grid& grid = u.grid();
    if (!(A.grid() == grid) || !(G.grid() == grid)) {
        throw ConfigError("weak_residual: fields live on different grids");
    }
    const RealField ux = d_x_core(u);
    const RealField uy = d_y_core(u);
    const double scale = gradient_norm(ux, uy) + norm_p(G, 2.0);
    const double dA = grid.cell_area();
    double worst = 0.0;
    for (const auto& t : tests.functions) {
        double integral = 0.0;
        double grad_psi = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (t.psi[i] == 0.0 && t.psi_x[i] == 0.0 && t.psi_y[i] == 0.0) continue;
            const auto [fx, fy] = A.apply(i, ux[i], uy[i]);
            integral += fx * t.psi_x[i] + fy * t.psi_y[i] + G[i] * Q.real(u[i]) * t.psi[i];
            grad_psi += t.psi_x[i] * t.psi_x[i] + t.psi_y[i] * t.psi_y[i];
        }
        integral *= dA;
        const double denom = std::sqrt(grad_psi * dA) * scale;
        if (denom > 0.0) worst = std::max(worst, std::abs(integral) / denom);
    }
    return worst;
}

// --- the Poisson pipeline -------------------------------------------------

PoissonSolution solve_poisson_semilinear(const MatrixField& A, const RealField& G,
                                         const Nonlinearity& Q, const ContinuationConfig& cfg) {
    if (!(A.grid() == G.grid())) throw ConfigError("solve_poisson: A and G live on different grids");
    G.require_guarded_support("solve_poisson_semilinear");
    BeltramiCoefficient mu = mu_from_A(A);
    const SourceOperator op = potential_operator();
    auto sol = solve_semilinear_operator(mu, G, op, Q, cfg);

    RealField u = real_part(sol.omega);
    const ComplexField sigma = op(sol.density).sampled(mu);
    auto fac = factorize(sol.omega, mu, sigma, cfg.linear);
    RealField h = real_part(fac.H);
    return {std::move(u), std::move(sol.omega), std::move(mu), std::move(sol.report),
            std::move(fac), std::move(h)};
}

// --- A-conjugates ---------------------------------------------------------

namespace {

// Cumulative integral of samples f (spacing dx) from index `from`, fourth
// order in the interior, trapezoidal next to the ends.
std::vector<double> cumulative(const std::vector<double>& f, int from, double dx) {
    const int n = static_cast<int>(f.size());
    auto cell = [&](int j) {  // integral over [x_j, x_{j+1}]
        if (j - 1 >= 0 && j + 2 < n) {
            return dx * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]) / 24.0;
        }
        return 0.5 * dx * (f[j] + f[j + 1]);
    };
    std::vector<double> out(n, 0.0);
    for (int j = from; j + 1 < n; ++j) out[j + 1] = out[j] + cell(j);
    for (int j = from; j - 1 >= 0; --j) out[j - 1] = out[j] - cell(j - 1);
    return out;
}

}  // namespace

RealField a_conjugate(const RealField& u, const MatrixField& A, const RealField& g) {
    const Grid& grid = u.grid();
    if (!(A.grid() == grid) || !(g.grid() == grid)) {
        throw ConfigError("a_conjugate: fields live on different grids");
    }
    const RealField ux = d_x_core(u);
    const RealField uy = d_y_core(u);
    ComplexField nzbar(grid);
    bool any_source = false;
    for (double v : g.values()) any_source = any_source || v != 0.0;
    if (any_source) nzbar = potential_dbar(g);

    RealField wx(grid), wy(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [fx, fy] = A.apply(i, ux[i], uy[i]);
        wx[i] = fx - 2.0 * nzbar[i].real();
        wy[i] = fy - 2.0 * nzbar[i].imag();
    }

    // grad v = (-wy, wx) is a gradient iff div w = 0, tested weakly:
    // |int w . grad psi| <= 1e-4 ||w||_core ||grad psi||_2 for every psi.
    const WeakTestSet tests = WeakTestSet::make(grid, 20, 0xC011);
    const double w_norm = gradient_norm(wx, wy);
    double curl = 0.0;
    for (const auto& t : tests.functions) {
        double flux = 0.0, grad_psi = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            flux += wx[i] * t.psi_x[i] + wy[i] * t.psi_y[i];
            grad_psi += t.psi_x[i] * t.psi_x[i] + t.psi_y[i] * t.psi_y[i];
        }
        const double denom = std::sqrt(grad_psi) * w_norm;
        if (denom > 0.0) curl = std::max(curl, std::abs(flux) * std::sqrt(grid.cell_area()) / denom);
    }
    if (curl > 1e-4) {
        throw SolverError("not A-harmonic with source g: relative curl " + std::to_string(curl));
    }

    const int n = grid.n();
    const int o = n / 2;
    const double dx = grid.spacing();
    std::vector<double> line(n);
    for (int j = 0; j < n; ++j) line[j] = -wy[grid.index(j, o)];
    const auto along_x = cumulative(line, o, dx);

    RealField v(grid);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) line[k] = wx[grid.index(j, k)];
        const auto along_y = cumulative(line, o, dx);
        for (int k = 0; k < n; ++k) v[grid.index(j, k)] = along_x[j] + along_y[k];
    }
    return v;
}

// --- change of variables --------------------------------------------------

ChangeOfVariablesResidual verify_change_of_variables(const RealField& T, const QCMap& map,
                                                     const MatrixField& A,
                                                     const WeakTestSet& tests) {
    const Grid& src = map.grid();
    if (!(A.grid() == src)) throw ConfigError("verify_change_of_variables: A grid mismatch");

    const RealField Tx = d_x_core(T);
    const RealField Ty = d_y_core(T);
    const RealField LT = laplacian_core(T);

    RealField Tf(src), Txf(src), Tyf(src), LTf(src);
    if (map.is_identity() && T.grid() == src) {
        Tf = T;
        Txf = Tx;
        Tyf = Ty;
        LTf = LT;
    } else {
        const double Li = T.grid().half_extent();
        const BicubicInterpolator<double> iT(T), iTx(Tx), iTy(Ty), iL(LT);
        for (std::size_t i = 0; i < src.size(); ++i) {
            const cplx w = map.forward()[i];
            if (std::abs(w.real()) > Li || std::abs(w.imag()) > Li) {
                if (src.in_core(i)) {
                    throw OutOfRangeError("verify_change_of_variables: T does not cover f(core)");
                }
                continue;
            }
            Tf[i] = iT.value(w);
            Txf[i] = iTx.value(w);
            Tyf[i] = iTy.value(w);
            LTf[i] = iL.value(w);
        }
    }

    const RealField gx = d_x_core(Tf);
    const RealField gy = d_y_core(Tf);
    RealField agx(src), agy(src);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto [a, b] = A.apply(i, gx[i], gy[i]);
        agx[i] = a;
        agy[i] = b;
    }
    const double flux = gradient_norm(agx, agy);
    const double dA = src.cell_area();

    ChangeOfVariablesResidual out{0.0, 0.0};
    for (const auto& t : tests.functions) {
        double lhs = 0.0, transport = 0.0, divergence = 0.0, grad_psi = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (t.psi[i] == 0.0 && t.psi_x[i] == 0.0 && t.psi_y[i] == 0.0) continue;
            const cplx fx = map.f_z()[i] + map.f_zbar()[i];
            const cplx fy = cplx(0.0, 1.0) * (map.f_z()[i] - map.f_zbar()[i]);
            // J M^-1 = adj(M) for M = [[Re f_x, Re f_y], [Im f_x, Im f_y]].
            const double px = fy.imag() * Txf[i] - fy.real() * Tyf[i];
            const double py = -fx.imag() * Txf[i] + fx.real() * Tyf[i];
            lhs += agx[i] * t.psi_x[i] + agy[i] * t.psi_y[i];
            transport += px * t.psi_x[i] + py * t.psi_y[i];
            divergence -= map.jacobian()[i] * LTf[i] * t.psi[i];
            grad_psi += t.psi_x[i] * t.psi_x[i] + t.psi_y[i] * t.psi_y[i];
        }
        const double denom = std::sqrt(grad_psi * dA) * flux;
        if (!(denom > 0.0)) continue;
        out.transport = std::max(out.transport, std::abs(lhs - transport) * dA / denom);
        out.divergence = std::max(out.divergence, std::abs(lhs - divergence) * dA / denom);
    }
    return out;
}

// --- manifests ------------------------------------------------------------

namespace io {

std::filesystem::path write_matrix_field(const MatrixField& A, const std::filesystem::path& dir,
                                         const std::string& stem) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    const std::pair<const char*, const RealField*> parts[] = {
        {"a11", &A.a11()}, {"a12", &A.a12()}, {"a22", &A.a22()}};
    for (const auto& [key, field] : parts) {
        const std::string name = stem + "_" + key + ".bfld";
        write_bfld(dir / name, *field);
        manifest[key] = name;
    }
    const auto path = dir / (stem + ".json");
    std::ofstream(path) << manifest.dump(2) << '\n';
    return path;
}

MatrixField read_matrix_field(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw ConfigError("cannot open matrix manifest " + manifest.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed matrix manifest " + manifest.string() + ": " + e.what());
    }
    auto entry = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw ConfigError(std::string("matrix manifest lacks \"") + key + "\"");
        }
        std::filesystem::path p = j[key].get<std::string>();
        if (p.is_relative()) p = manifest.parent_path() / p;
        return read_real(p);
    };
    return MatrixField::make(entry("a11"), entry("a12"), entry("a22"));
}

}  // namespace io

}  // namespace qcpde
