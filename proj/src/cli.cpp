#include "qcpde/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "qcpde/anisotropic.hpp"
#include "qcpde/beltrami.hpp"
#include "qcpde/errors.hpp"
#include "qcpde/field_io.hpp"
#include "qcpde/semilinear.hpp"
#include "qcpde/shapes.hpp"

namespace qcpde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<Command, const char*> kCommands[] = {
    {Command::SolveBeltrami, "solve-beltrami"}, {Command::SolveSemilinear, "solve-semilinear"},
    {Command::SolvePoisson, "solve-poisson"},   {Command::Map, "map"},
    {Command::Verify, "verify"},                {Command::Export, "export"},
};

// Thresholds used by verify.  The recomputed Beltrami residual of a
// semilinear solution is limited by the kinks of q(w) on the grid, hence the
// looser bound there.
constexpr double kLinearResidualTol = 1e-6;
constexpr double kSemilinearResidualTol = 1e-3;
constexpr double kFixedPointTol = 1e-6;
constexpr double kWeakResidualTol = 1e-4;
constexpr double kNormalizationTol = 1e-12;

void emit(std::ostream& diag, const char* level, const char* event, json extra = json::object()) {
    extra["level"] = level;
    extra["event"] = event;
    diag << extra.dump() << '\n';
}

// --- config parsing -----------------------------------------------------------

cplx parse_cplx(const json& v, const char* what) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError(std::string(what) + ": expected a number or [re, im]");
}

template <class T>
T get(const json& obj, const char* key, const char* what) {
    if (!obj.contains(key)) throw ConfigError(std::string(what) + ": missing \"" + key + "\"");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(what) + ": bad value for \"" + key + "\"");
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const char* what) {
    return obj.contains(key) ? get<T>(obj, key, what) : fallback;
}

const json& section(const json& doc, const char* key) {
    if (!doc.contains(key)) throw ConfigError(std::string("config lacks \"") + key + "\"");
    const json& s = doc.at(key);
    if (!s.is_object()) throw ConfigError(std::string("config \"") + key + "\" must be an object");
    return s;
}

Grid parse_grid(const json& doc) {
    const json& g = section(doc, "grid");
    return Grid::make(get<int>(g, "n", "grid"), get<double>(g, "L", "grid"));
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void check_file_grid(const Grid& file, const Grid& grid, const fs::path& p) {
    if (!(file == grid)) {
        throw ConfigError("field file " + p.string() + " does not match the configured grid");
    }
}

ComplexField complex_field(const json& spec, const Grid& grid, const fs::path& base, const char* what) {
    if (!spec.is_object()) throw ConfigError(std::string(what) + ": field spec must be an object");
    if (spec.contains("file")) {
        const fs::path p = resolve(base, get<std::string>(spec, "file", what));
        ComplexField f = io::read_complex(p);
        check_file_grid(f.grid(), grid, p);
        if (auto r = io::infer_support(f)) f.declare_support(*r);
        return f;
    }
    const auto name = get<std::string>(spec, "builtin", what);
    if (name == "zero") {
        ComplexField f(grid);
        f.declare_support(0.0);
        return f;
    }
    if (name == "radial_bump") {
        const json amp = spec.contains("k") ? spec.at("k") : spec.value("amplitude", json());
        if (amp.is_null()) throw ConfigError(std::string(what) + ": radial_bump needs \"k\"");
        const double R = get<double>(spec, "R", what);
        if (!(R > 0.0)) throw ConfigError(std::string(what) + ": radial_bump needs R > 0");
        const cplx centre = spec.contains("centre") ? parse_cplx(spec.at("centre"), what) : cplx{};
        return shapes::radial_bump(grid, parse_cplx(amp, what), R, centre);
    }
    if (name == "disk_indicator") {
        const double R = get<double>(spec, "R", what);
        if (!(R > 0.0)) throw ConfigError(std::string(what) + ": disk_indicator needs R > 0");
        const cplx a = spec.contains("amplitude") ? parse_cplx(spec.at("amplitude"), what) : cplx(1.0);
        RealField d = shapes::disk_indicator(grid, R, get_or<bool>(spec, "mollify", true, what));
        ComplexField f = a * to_complex(d);
        if (d.support_radius()) f.declare_support(*d.support_radius());
        return f;
    }
    if (name == "plateau") {
        const double inner = get<double>(spec, "inner", what);
        const double outer = get<double>(spec, "outer", what);
        if (!(inner >= 0.0 && outer > inner)) {
            throw ConfigError(std::string(what) + ": plateau needs 0 <= inner < outer");
        }
        return shapes::plateau(grid, parse_cplx(spec.value("amplitude", json(1.0)), what), inner, outer);
    }
    throw ConfigError(std::string(what) + ": unknown builtin \"" + name + "\"");
}

RealField real_field(const json& spec, const Grid& grid, const fs::path& base, const char* what) {
    if (spec.is_object() && spec.contains("file")) {
        const fs::path p = resolve(base, get<std::string>(spec, "file", what));
        RealField f = io::read_real(p);
        check_file_grid(f.grid(), grid, p);
        if (auto r = io::infer_support(f)) f.declare_support(*r);
        return f;
    }
    const ComplexField c = complex_field(spec, grid, base, what);
    for (cplx v : c.values()) {
        if (v.imag() != 0.0) throw ConfigError(std::string(what) + ": expected a real field");
    }
    RealField f = real_part(c);
    if (c.support_radius()) f.declare_support(*c.support_radius());
    return f;
}

BeltramiCoefficient parse_mu(const json& doc, const Grid& grid, const fs::path& base) {
    return BeltramiCoefficient::make(complex_field(doc.value("mu", json{{"builtin", "zero"}}), grid, base, "mu"));
}

NonlinearityKind parse_kind(const std::string& s) {
    if (s == "constant") return NonlinearityKind::Constant;
    if (s == "power") return NonlinearityKind::Power;
    if (s == "signed_power") return NonlinearityKind::SignedPower;
    if (s == "neg_exp") return NonlinearityKind::NegExp;
    throw ConfigError("unknown nonlinearity kind \"" + s + "\"");
}

Nonlinearity parse_q(const json& doc) {
    const json& s = section(doc, "q");
    const auto kind = parse_kind(get<std::string>(s, "kind", "q"));
    switch (kind) {
        case NonlinearityKind::Constant:
            return Nonlinearity::constant(parse_cplx(s.value("value", json(1.0)), "q"));
        case NonlinearityKind::Power:
            return Nonlinearity::power(get<double>(s, "lambda", "q"));
        case NonlinearityKind::SignedPower:
            return Nonlinearity::signed_power(get<double>(s, "lambda", "q"));
        default:
            return Nonlinearity::neg_exp();
    }
}

Nonlinearity parse_Q(const json& doc) {
    const json& s = section(doc, "Q");
    const auto kind = parse_kind(get<std::string>(s, "kind", "Q"));
    std::optional<double> lambda;
    if (s.contains("lambda")) lambda = get<double>(s, "lambda", "Q");
    if (kind == NonlinearityKind::Constant && s.contains("value")) lambda = get<double>(s, "value", "Q");
    return preset_Q(kind, lambda);
}

MatrixField parse_A(const json& doc, const Grid& grid, const fs::path& base) {
    const json& s = section(doc, "A");
    if (s.contains("file")) {
        MatrixField A = io::read_matrix_field(resolve(base, get<std::string>(s, "file", "A")));
        if (!(A.grid() == grid)) throw ConfigError("A: matrix field does not match the configured grid");
        return A;
    }
    const auto preset = get<std::string>(s, "preset", "A");
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;
    if (preset == "identity") {
        return MatrixField::identity(grid);
    } else if (preset == "diag") {
        a11 = 2.0;
        a22 = 0.5;
    } else if (preset == "shear") {
        a11 = a22 = std::sqrt(2.0);
        a12 = 1.0;
    } else if (preset != "constant") {
        throw ConfigError("A: unknown preset \"" + preset + "\"");
    }
    a11 = get_or(s, "a11", a11, "A");
    a12 = get_or(s, "a12", a12, "A");
    a22 = get_or(s, "a22", a22, "A");
    const double L = grid.half_extent();
    const double inner = get_or(s, "inner", 0.375 * L, "A");
    const double outer = get_or(s, "outer", 0.475 * L, "A");
    if (!(inner >= 0.0 && outer > inner && outer <= grid.core_radius())) {
        throw ConfigError("A: preset needs 0 <= inner < outer <= L/2");
    }
    return matrix_preset(grid, a11, a12, a22, inner, outer);
}

LinearSolveConfig parse_linear(const json& doc, LinearSolveConfig cfg) {
    if (doc.contains("solver") && doc.at("solver").contains("linear")) {
        const json& s = doc.at("solver").at("linear");
        cfg.tol = get_or(s, "tol", cfg.tol, "solver.linear");
        cfg.max_iter = get_or(s, "max_iter", cfg.max_iter, "solver.linear");
    }
    cfg.validate();
    return cfg;
}

ContinuationConfig parse_continuation(const json& doc) {
    ContinuationConfig cfg;
    if (doc.contains("solver") && doc.at("solver").contains("continuation")) {
        const json& s = doc.at("solver").at("continuation");
        const char* w = "solver.continuation";
        cfg.tau_steps = get_or(s, "tau_steps", cfg.tau_steps, w);
        cfg.damping = get_or(s, "damping", cfg.damping, w);
        cfg.inner_tol = get_or(s, "inner_tol", cfg.inner_tol, w);
        cfg.inner_max_iter = get_or(s, "inner_max_iter", cfg.inner_max_iter, w);
        cfg.blowup_guard = get_or(s, "blowup_guard", cfg.blowup_guard, w);
    }
    cfg.linear = parse_linear(doc, cfg.linear);
    cfg.validate();
    return cfg;
}

// --- artifacts ----------------------------------------------------------------

struct Artifacts {
    fs::path dir;
    std::vector<std::string> names;

    template <class F>
    void field(const std::string& name, const F& f) {
        io::write_bfld(dir / (name + ".bfld"), f);
        names.push_back(name + ".bfld");
    }
    void text(const std::string& name, const std::string& body) {
        std::ofstream out(dir / name);
        out << body;
        if (!out) throw ConfigError("cannot write " + (dir / name).string());
        names.push_back(name);
    }
    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
};

Artifacts open_artifacts(const JobConfig& job) {
    std::error_code ec;
    fs::create_directories(job.out_dir, ec);
    if (ec || !fs::is_directory(job.out_dir)) {
        throw ConfigError("cannot create output directory " + job.out_dir.string());
    }
    return {job.out_dir, {}};
}

json grid_json(const Grid& g) { return {{"n", g.n()}, {"L", g.half_extent()}}; }

void finish(Artifacts& a, const JobConfig& job, const Grid& grid, const json& report,
            const std::string& summary) {
    a.json_file("report.json", report);
    a.text("summary.txt", summary);
    json record = {{"command", to_string(job.command)}, {"config", job.doc}, {"seed", job.seed},
                   {"grid", grid_json(grid)}};
    record["artifacts"] = a.names;
    record["artifacts"].push_back("job.json");
    a.json_file("job.json", record);
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

double sup_core(const ComplexField& f) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.grid().in_core(i)) m = std::max(m, std::abs(f[i]));
    }
    return m;
}

double sup_all(const ComplexField& f) {
    double m = 0.0;
    for (cplx v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

double sup_diff(const ComplexField& a, const ComplexField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// --- commands -----------------------------------------------------------------

int solve_beltrami_cmd(const JobConfig& job, std::ostream& diag) {
    const Grid grid = parse_grid(job.doc);
    const auto mu = parse_mu(job.doc, grid, job.base_dir);
    const auto sigma = complex_field(section(job.doc, "sigma"), grid, job.base_dir, "sigma");
    const auto cfg = parse_linear(job.doc, LinearSolveConfig{});
    const auto sol = solve_inhomogeneous(mu, sigma, cfg);
    const double res = residual_beltrami(mu, sigma, sol.omega);

    auto a = open_artifacts(job);
    a.field("mu", mu.field());
    a.field("sigma", sigma);
    a.field("omega", sol.omega);
    a.field("omega_z", sol.omega_z);
    a.field("omega_zbar", sol.omega_zbar);
    json report = {{"command", "solve-beltrami"}, {"k", mu.k()}, {"solve", sol.report.to_json()},
                   {"beltrami_residual", res}};
    std::string summary = "solve-beltrami n=" + std::to_string(grid.n()) + " L=" +
                          fmt(grid.half_extent()) + " k=" + fmt(mu.k()) + "\n" +
                          "converged: " + (sol.report.converged ? "yes" : "no") + " after " +
                          std::to_string(sol.report.iterations) + " iterations\n" +
                          "contraction ratio: " + fmt(sol.report.contraction_ratio) + "\n" +
                          "beltrami residual: " + fmt(res) + "\n";
    finish(a, job, grid, report, summary);
    emit(diag, "info", "solved", {{"converged", sol.report.converged},
                                  {"iterations", sol.report.iterations},
                                  {"beltrami_residual", res}});
    return sol.report.converged ? kExitOk : kExitSolver;
}

int solve_semilinear_cmd(const JobConfig& job, std::ostream& diag) {
    const Grid grid = parse_grid(job.doc);
    const auto mu = parse_mu(job.doc, grid, job.base_dir);
    const auto sigma = complex_field(section(job.doc, "sigma"), grid, job.base_dir, "sigma");
    const auto q = parse_q(job.doc);
    q.validate();
    const auto cfg = parse_continuation(job.doc);
    const auto sol = solve_semilinear(mu, sigma, q, cfg);

    ComplexField g(grid);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = sigma[i] * q(sol.omega[i]);
    if (sigma.support_radius()) g.declare_support(*sigma.support_radius());
    const double res_fields = residual_beltrami(mu, g, sol.omega_zbar, sol.omega_z);
    const double res_recomputed = residual_beltrami(mu, g, sol.omega);

    auto a = open_artifacts(job);
    a.field("mu", mu.field());
    a.field("sigma", sigma);
    a.field("omega", sol.omega);
    a.field("omega_z", sol.omega_z);
    a.field("omega_zbar", sol.omega_zbar);
    a.field("density", sol.density);
    const bool ok = sol.report.summary.converged;
    json report = {{"command", "solve-semilinear"},
                   {"k", mu.k()},
                   {"q", q.to_json()},
                   {"continuation", sol.report.to_json()},
                   {"beltrami_residual", res_fields},
                   {"beltrami_residual_recomputed", res_recomputed}};
    std::string summary = "solve-semilinear n=" + std::to_string(grid.n()) + " L=" +
                          fmt(grid.half_extent()) + " k=" + fmt(mu.k()) + " q=" + q.name() + "\n" +
                          "converged: " + (ok ? "yes" : "no") + " after " +
                          std::to_string(sol.report.summary.iterations) + " iterations in " +
                          std::to_string(sol.report.steps.size()) + " tau steps\n" +
                          "certificate: " + fmt(sol.report.certificate) + "\n" +
                          "beltrami residual (solver derivatives): " + fmt(res_fields) + "\n" +
                          "beltrami residual (recomputed): " + fmt(res_recomputed) + "\n";
    finish(a, job, grid, report, summary);
    emit(diag, "info", "solved", {{"converged", ok},
                                  {"iterations", sol.report.summary.iterations},
                                  {"certificate", sol.report.certificate}});
    return ok ? kExitOk : kExitSolver;
}

int solve_poisson_cmd(const JobConfig& job, std::ostream& diag) {
    const Grid grid = parse_grid(job.doc);
    const MatrixField A = parse_A(job.doc, grid, job.base_dir);
    const RealField G = real_field(section(job.doc, "G"), grid, job.base_dir, "G");
    const auto Q = parse_Q(job.doc);
    const auto cfg = parse_continuation(job.doc);
    const auto sol = solve_poisson_semilinear(A, G, Q, cfg);

    const auto tests = WeakTestSet::make(grid, 20, job.seed);
    const double weak = weak_residual(sol.u, A, G, Q, tests);
    const ComplexField composed = compose_solution(sol.factorization.H, sol.factorization.map);
    const double u_sup = sup_core(to_complex(sol.u));
    double rep = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.in_core(i)) rep = std::max(rep, std::abs(sol.u[i] - composed[i].real()));
    }
    if (u_sup > 0.0) rep /= u_sup;

    auto a = open_artifacts(job);
    io::write_matrix_field(A, job.out_dir, "A");
    for (const char* n : {"A.json", "A_a11.bfld", "A_a12.bfld", "A_a22.bfld"}) a.names.push_back(n);
    a.field("G", G);
    a.field("mu", sol.mu.field());
    a.field("u", sol.u);
    a.field("omega", sol.omega);
    a.field("h", sol.h);
    const bool ok = sol.report.summary.converged;
    json report = {{"command", "solve-poisson"},
                   {"k", sol.mu.k()},
                   {"Q", Q.to_json()},
                   {"continuation", sol.report.to_json()},
                   {"weak_residual", weak},
                   {"weak_seed", job.seed},
                   {"weak_test_count", tests.functions.size()},
                   {"representation_error", rep},
                   {"vekua_residual", sol.factorization.vekua_residual},
                   {"inversion_failures", sol.factorization.inversion_failures},
                   {"image_grid", grid_json(sol.factorization.image_grid)}};
    std::string summary = "solve-poisson n=" + std::to_string(grid.n()) + " L=" +
                          fmt(grid.half_extent()) + " k(mu_A)=" + fmt(sol.mu.k()) + " Q=" + Q.name() +
                          "\n" + "converged: " + (ok ? "yes" : "no") + "\n" +
                          "certificate: " + fmt(sol.report.certificate) + "\n" +
                          "weak residual: " + fmt(weak) + " (20 test functions, seed " +
                          std::to_string(job.seed) + ")\n" +
                          "representation |u - h o f| / |u|: " + fmt(rep) + "\n";
    finish(a, job, grid, report, summary);
    emit(diag, "info", "solved", {{"converged", ok}, {"weak_residual", weak},
                                  {"representation_error", rep}});
    return ok ? kExitOk : kExitSolver;
}

int map_cmd(const JobConfig& job, std::ostream& diag) {
    const Grid grid = parse_grid(job.doc);
    const auto mu = parse_mu(job.doc, grid, job.base_dir);
    const auto cfg = parse_linear(job.doc, LinearSolveConfig{1e-13, 2000});
    const QCMap map = principal_map(mu, cfg);

    double min_j = map.jacobian()[0];
    for (double v : map.jacobian().values()) min_j = std::min(min_j, v);
    const double L = grid.half_extent();
    double ring = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx z = grid.node(i);
        if (std::max(std::abs(z.real()), std::abs(z.imag())) >= L - 2.0 * grid.spacing()) {
            ring = std::max(ring, std::abs(map.forward()[i] - z));
        }
    }
    std::mt19937_64 rng(job.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double roundtrip = 0.0;
    int samples = 0;
    while (samples < 64) {
        const cplx z(unit(rng) * grid.core_radius(), unit(rng) * grid.core_radius());
        if (std::abs(z) > grid.core_radius()) continue;
        roundtrip = std::max(roundtrip, std::abs(invert_map(map, map.evaluate(z)) - z));
        ++samples;
    }

    auto a = open_artifacts(job);
    a.field("mu", mu.field());
    a.field("forward", map.forward());
    a.field("jacobian", map.jacobian());
    json report = {{"command", "map"},
                   {"k", mu.k()},
                   {"identity", map.is_identity()},
                   {"solve", map.report().to_json()},
                   {"min_jacobian", min_j},
                   {"ring_deviation", ring},
                   {"roundtrip_error", roundtrip},
                   {"roundtrip_samples", samples},
                   {"roundtrip_seed", job.seed}};
    std::string summary = "map n=" + std::to_string(grid.n()) + " L=" + fmt(L) + " k=" + fmt(mu.k()) +
                          "\n" + "min Jacobian: " + fmt(min_j) + "\n" +
                          "boundary ring |f - z|: " + fmt(ring) + "\n" +
                          "inversion roundtrip (64 points): " + fmt(roundtrip) + "\n";
    finish(a, job, grid, report, summary);
    emit(diag, "info", "mapped", {{"min_jacobian", min_j}, {"ring_deviation", ring},
                                  {"roundtrip_error", roundtrip}});
    return kExitOk;
}

// --- verify -------------------------------------------------------------------

struct Check {
    std::string name;
    double value;
    double threshold;
    [[nodiscard]] bool pass() const { return std::isfinite(value) && value <= threshold; }
};

fs::path need(const fs::path& dir, const std::string& name) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw ConfigError("verify: missing artifact " + p.string());
    return p;
}

ComplexField artifact(const fs::path& dir, const std::string& name, const Grid& grid) {
    const fs::path p = need(dir, name);
    ComplexField f = io::read_complex(p);
    check_file_grid(f.grid(), grid, p);
    return f;
}

double relative(double num, double den) { return den > 0.0 ? num / den : num; }

std::vector<Check> verify_beltrami(const JobConfig& job, const Grid& grid) {
    const auto mu = parse_mu(job.doc, grid, job.base_dir);
    const auto sigma = complex_field(section(job.doc, "sigma"), grid, job.base_dir, "sigma");
    const auto omega = artifact(job.out_dir, "omega.bfld", grid);
    const auto cfg = parse_linear(job.doc, LinearSolveConfig{});
    const auto again = solve_inhomogeneous(mu, sigma, cfg);
    const double sup = sup_all(omega);
    return {
        {"normalization", relative(std::abs(omega[grid.origin_index()]), sup), kNormalizationTol},
        {"beltrami_residual", residual_beltrami(mu, sigma, omega), kLinearResidualTol},
        {"fixed_point", relative(sup_diff(again.omega, omega), sup), kFixedPointTol},
    };
}

std::vector<Check> verify_semilinear(const JobConfig& job, const Grid& grid) {
    const auto mu = parse_mu(job.doc, grid, job.base_dir);
    const auto sigma = complex_field(section(job.doc, "sigma"), grid, job.base_dir, "sigma");
    const auto q = parse_q(job.doc);
    const auto cfg = parse_continuation(job.doc);
    const auto omega = artifact(job.out_dir, "omega.bfld", grid);
    ComplexField g(grid);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = sigma[i] * q(omega[i]);
    if (sigma.support_radius()) g.declare_support(*sigma.support_radius());
    const auto again = solve_inhomogeneous(mu, g, cfg.linear);
    const double sup = sup_all(omega);
    return {
        {"normalization", relative(std::abs(omega[grid.origin_index()]), sup), kNormalizationTol},
        {"beltrami_residual", residual_beltrami(mu, g, omega), kSemilinearResidualTol},
        {"fixed_point", relative(sup_diff(again.omega, omega), sup), kFixedPointTol},
    };
}

std::vector<Check> verify_poisson(const JobConfig& job, const Grid& grid) {
    const MatrixField A = parse_A(job.doc, grid, job.base_dir);
    const RealField G = real_field(section(job.doc, "G"), grid, job.base_dir, "G");
    const auto Q = parse_Q(job.doc);
    const auto cfg = parse_continuation(job.doc);
    const auto omega = artifact(job.out_dir, "omega.bfld", grid);
    const fs::path up = need(job.out_dir, "u.bfld");
    const RealField u = io::read_real(up);
    check_file_grid(u.grid(), grid, up);

    const auto mu = mu_from_A(A);
    ComplexField rho(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) rho[i] = G[i] * Q(omega[i]);
    if (G.support_radius()) rho.declare_support(*G.support_radius());
    const auto again = solve_inhomogeneous(mu, potential_operator()(rho), cfg.linear);
    const double sup = sup_all(omega);
    double split = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) split = std::max(split, std::abs(u[i] - omega[i].real()));
    const auto tests = WeakTestSet::make(grid, 20, job.seed);
    return {
        {"u_is_real_part", relative(split, sup), kNormalizationTol},
        {"weak_residual", weak_residual(u, A, G, Q, tests), kWeakResidualTol},
        {"fixed_point", relative(sup_diff(again.omega, omega), sup), kFixedPointTol},
    };
}

std::vector<Check> verify_map(const JobConfig& job, const Grid& grid) {
    const auto mu = parse_mu(job.doc, grid, job.base_dir);
    const auto f = artifact(job.out_dir, "forward.bfld", grid);
    ComplexField displacement(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) displacement[i] = f[i] - grid.node(i);
    const ComplexField fz = d_z_core(displacement);
    const ComplexField fzbar = d_zbar_core(displacement);
    double min_j = INFINITY;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.in_core(i)) continue;
        const cplx a = 1.0 + fz[i];
        min_j = std::min(min_j, std::norm(a) - std::norm(fzbar[i]));
    }
    ComplexField r(grid), full(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        full[i] = 1.0 + fz[i];
        r[i] = fzbar[i] - mu[i] * full[i];
    }
    // mu = 0 leaves nothing to normalize by; the map must then be the identity.
    const double res = mu.k() > 0.0 ? norm_p_core(r, 2.0) / (mu.k() * norm_p_core(full, 2.0))
                                    : sup_core(displacement);
    return {
        {"jacobian_positive", -min_j, 0.0},
        {"beltrami_residual", res, kLinearResidualTol},
    };
}

std::vector<Check> verify_checks(const JobConfig& job, Command prior, const Grid& grid) {
    switch (prior) {
        case Command::SolveBeltrami: return verify_beltrami(job, grid);
        case Command::SolveSemilinear: return verify_semilinear(job, grid);
        case Command::SolvePoisson: return verify_poisson(job, grid);
        case Command::Map: return verify_map(job, grid);
        default: throw ConfigError("verify: job.json names a command without artifacts");
    }
}

int verify_cmd(const JobConfig& job, std::ostream& diag) {
    const fs::path record_path = need(job.out_dir, "job.json");
    std::ifstream in(record_path);
    json record;
    try {
        record = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("verify: malformed job.json: " + std::string(e.what()));
    }
    const Command prior = parse_command(get<std::string>(record, "command", "job.json"));
    const Grid grid = parse_grid(job.doc);

    const auto checks = verify_checks(job, prior, grid);
    bool all = true;
    json out = {{"command", to_string(prior)}, {"seed", job.seed}, {"checks", json::array()}};
    for (const auto& c : checks) {
        all = all && c.pass();
        out["checks"].push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold},
                                 {"pass", c.pass()}});
        emit(diag, c.pass() ? "info" : "error", "check",
             {{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass()}});
    }
    out["pass"] = all;
    std::ofstream(job.out_dir / "verify.json") << out.dump(2) << '\n';
    return all ? kExitOk : kExitSolver;
}

// --- export -------------------------------------------------------------------

int export_cmd(const JobConfig& job, std::ostream& diag) {
    if (job.format != "csv") throw ConfigError("export: unsupported format \"" + job.format + "\"");
    if (!fs::is_directory(job.out_dir)) {
        throw ConfigError("export: no such directory " + job.out_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(job.out_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".bfld") files.push_back(e.path());
    }
    if (files.empty()) throw ConfigError("export: no BFLD artifacts in " + job.out_dir.string());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        fs::path target = p;
        target.replace_extension(".csv");
        std::visit([&](const auto& f) { io::write_csv(target, f); }, io::read_bfld(p));
        emit(diag, "info", "exported", {{"source", p.filename().string()}, {"target", target.filename().string()}});
    }
    return kExitOk;
}

}  // namespace

const char* to_string(Command c) {
    for (const auto& [cmd, name] : kCommands) {
        if (cmd == c) return name;
    }
    return "unknown";
}

Command parse_command(const std::string& name) {
    for (const auto& [cmd, n] : kCommands) {
        if (name == n) return cmd;
    }
    throw ConfigError("unknown command \"" + name + "\"");
}

JobConfig JobConfig::load(Command command, const fs::path& config, const fs::path& out,
                          std::optional<std::uint64_t> seed) {
    std::ifstream in(config);
    if (!in) throw ConfigError("cannot open config " + config.string());
    JobConfig job;
    job.command = command;
    try {
        job.doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + config.string() + ": " + e.what());
    }
    if (!job.doc.is_object()) throw ConfigError("config must be a JSON object");
    static const char* kKeys[] = {"grid", "mu", "sigma", "q", "A", "G", "Q", "solver", "output", "seed"};
    for (const auto& [key, value] : job.doc.items()) {
        if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) ==
            std::end(kKeys)) {
            throw ConfigError("config has unknown key \"" + key + "\"");
        }
    }
    job.base_dir = config.parent_path();
    if (!out.empty()) {
        job.out_dir = out;
    } else if (job.doc.contains("output")) {
        job.out_dir = resolve(job.base_dir, get<std::string>(job.doc, "output", "config"));
    } else {
        throw ConfigError("no output directory: pass --out or set \"output\"");
    }
    job.seed = seed ? *seed : get_or<std::uint64_t>(job.doc, "seed", kDefaultSeed, "config");
    return job;
}

int run(const JobConfig& job, std::ostream& diag) {
    emit(diag, "info", "start", {{"command", to_string(job.command)}, {"out", job.out_dir.string()},
                                 {"seed", job.seed}});
    const auto t0 = std::chrono::steady_clock::now();
    int status = kExitConfig;
    try {
        switch (job.command) {
            case Command::SolveBeltrami: status = solve_beltrami_cmd(job, diag); break;
            case Command::SolveSemilinear: status = solve_semilinear_cmd(job, diag); break;
            case Command::SolvePoisson: status = solve_poisson_cmd(job, diag); break;
            case Command::Map: status = map_cmd(job, diag); break;
            case Command::Verify: status = verify_cmd(job, diag); break;
            case Command::Export: status = export_cmd(job, diag); break;
        }
    } catch (const SolverError& e) {
        emit(diag, "error", "solver_error", {{"message", e.what()}});
        status = kExitSolver;
    } catch (const std::logic_error& e) {  // ConfigError, SupportError, DegeneracyError, OutOfRangeError
        emit(diag, "error", "config_error", {{"message", e.what()}});
        status = kExitConfig;
    } catch (const std::exception& e) {
        emit(diag, "error", "config_error", {{"message", e.what()}});
        status = kExitConfig;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(diag, status == kExitOk ? "info" : "error", "done", {{"exit", status}, {"seconds", secs}});
    return status;
}

int run(const std::vector<std::string>& args, std::ostream& diag) {
    CLI::App app{"Beltrami and anisotropic Poisson solver suite"};
    std::string command, config, out, format = "csv";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> names;
    for (const auto& [cmd, name] : kCommands) names.emplace_back(name);
    app.add_option("command", command, "Job to run")->required()->check(CLI::IsMember(names));
    app.add_option("--config", config, "JSON job configuration")->required();
    app.add_option("--out", out, "Output directory (overrides \"output\")");
    app.add_option("--seed", seed, "Seed for randomized checks");
    app.add_option("--format", format, "Export format")->check(CLI::IsMember({"csv"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        emit(diag, "error", "config_error", {{"message", e.what()}});
        return kExitConfig;
    }

    JobConfig job;
    try {
        job = JobConfig::load(parse_command(command), config, out, seed);
    } catch (const std::exception& e) {
        emit(diag, "error", "config_error", {{"message", e.what()}});
        return kExitConfig;
    }
    job.format = format;
    return run(job, diag);
}

}  // namespace qcpde::cli
