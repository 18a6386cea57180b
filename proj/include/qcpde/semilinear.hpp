#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcpde/beltrami.hpp"

namespace qcpde {

enum class NonlinearityKind { Constant, Power, SignedPower, NegExp, Custom };

const char* to_string(NonlinearityKind kind);

struct SublinearityProbe {
    double radius;
    double ratio;  // q_*(radius) / radius
};

/// A continuous scalar map w -> q(w).  Real nonlinearities Q (the Poisson
/// layer) are carried as q(w) = Q(Re w).
class Nonlinearity {
public:
    static Nonlinearity constant(cplx c);
    /// |w|^lambda, lambda in (0, 1).
    static Nonlinearity power(double lambda);
    /// |w|^(lambda - 1) w, lambda in (0, 1); zero at w = 0.
    static Nonlinearity signed_power(double lambda);
    /// exp(-|w|).
    static Nonlinearity neg_exp();
    static Nonlinearity custom(std::function<cplx(cplx)> q, std::string name = "custom");
    /// w -> Q(Re w).
    static Nonlinearity of_real(NonlinearityKind kind, std::function<double(double)> Q,
                                double lambda, std::string name);

    [[nodiscard]] cplx operator()(cplx w) const { return q_(w); }
    [[nodiscard]] double real(double t) const { return q_(cplx(t, 0.0)).real(); }

    [[nodiscard]] NonlinearityKind kind() const noexcept { return kind_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] bool real_argument() const noexcept { return real_argument_; }
    [[nodiscard]] const std::vector<SublinearityProbe>& probes() const noexcept { return probes_; }

    /// Sampled continuity and sublinearity checks; ConfigError on failure.
    void validate() const;

    [[nodiscard]] nlohmann::json to_json() const;

private:
    Nonlinearity(NonlinearityKind kind, std::function<cplx(cplx)> q, double lambda,
                 std::string name, bool real_argument);

    NonlinearityKind kind_;
    std::function<cplx(cplx)> q_;
    double lambda_;
    std::string name_;
    bool real_argument_;
    std::vector<SublinearityProbe> probes_;
};

/// max |q(w)| over |w| <= t, from a radial x angular sample that includes
/// w = 0 and the circle |w| = t.
double q_star(const Nonlinearity& q, double t);

struct ContinuationConfig {
    int tau_steps = 8;
    double damping = 0.5;
    double inner_tol = 1e-10;
    int inner_max_iter = 400;
    double blowup_guard = 10.0;
    LinearSolveConfig linear{1e-13, 2000};

    void validate() const;
};

struct ContinuationStep {
    double tau = 0.0;
    int iterations = 0;
    std::vector<double> certificates;
    double certificate = 0.0;
    bool converged = false;
};

struct ContinuationReport {
    SolveReport summary;  // iterations summed over all steps, certificates as history
    std::vector<double> tau_schedule;
    std::vector<ContinuationStep> steps;
    double certificate = 0.0;
    double apriori_radius = 0.0;
    double source_norm_max = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct SemilinearSolution {
    ComplexField omega;
    ComplexField omega_zbar;
    ComplexField omega_z;
    ComplexField density;  // rho with source L[rho]; rho = G q(omega) at the fixed point
    ContinuationReport report;
};

/// A bounded linear map from densities to Beltrami sources.
using SourceOperator = std::function<SourceTerm(const ComplexField& rho)>;

/// rho -> sigma * rho (support of sigma).
SourceOperator multiply_by(const ComplexField& sigma);

/// Solves w_zbar = mu w_z + L[G q(w)] by continuation in tau.
///
/// For tau = 1/tau_steps, ..., 1 the density is relaxed by
/// rho <- (1 - theta) rho + theta tau G q(w^{mu, L rho}), warm started from the
/// previous tau, until ||L[rho - tau G q(w)]|| / ||L[G]|| <= inner_tol (core
/// L2 norms).  Throws BlowupError when ||L rho|| leaves blowup_guard times the
/// a priori radius; returns converged = false when inner_max_iter runs out.
SemilinearSolution solve_semilinear_operator(const BeltramiCoefficient& mu, const RealField& G,
                                             const SourceOperator& op, const Nonlinearity& q,
                                             const ContinuationConfig& cfg);

/// w_zbar = mu w_z + sigma q(w): the operator form with G = 1, L = sigma *.
SemilinearSolution solve_semilinear(const BeltramiCoefficient& mu, const ComplexField& sigma,
                                    const Nonlinearity& q, const ContinuationConfig& cfg);

/// Factorization w = H o f of a solution of w_zbar = mu w_z + sigma q(w)
/// (q = 1 when absent) through the principal map f.
struct FactorizationResult {
    QCMap map;
    Grid image_grid;
    ComplexField H;
    ComplexField g_multiplier;  // ((f_z / J) sigma) o f^-1
    std::size_t inversion_failures = 0;
    double vekua_residual = 0.0;  // ||H_wbar - g q(H)||_core / ||g||_2
};

FactorizationResult factorize(const ComplexField& omega, const BeltramiCoefficient& mu,
                              const ComplexField& sigma, const LinearSolveConfig& cfg,
                              const Nonlinearity* q = nullptr);

/// Image grid used by factorize: same n, half extent twice the half width
/// of the bounding box of f(core).
Grid image_grid_for(const QCMap& map);

/// w(z) = H(f(z)) on the source grid.  Nodes outside the core whose image
/// leaves H's window are set to 0; a core node whose image is not covered
/// throws OutOfRangeError.
ComplexField compose_solution(const ComplexField& H, const QCMap& map);

}  // namespace qcpde
