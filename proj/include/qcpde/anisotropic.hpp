#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qcpde/beltrami.hpp"
#include "qcpde/semilinear.hpp"

namespace qcpde {

/// Symmetric 2x2 matrix samples [[a11, a12], [a12, a22]] with det A = 1 and
/// det(I + A) > 0 at every node.
class MatrixField {
public:
    /// Throws ConfigError if det A deviates from 1 by more than 1e-9 or the
    /// grids differ, DegeneracyError if det(I + A) <= 0 somewhere.
    static MatrixField make(RealField a11, RealField a12, RealField a22);
    static MatrixField identity(const Grid& grid);

    [[nodiscard]] const RealField& a11() const noexcept { return a11_; }
    [[nodiscard]] const RealField& a12() const noexcept { return a12_; }
    [[nodiscard]] const RealField& a22() const noexcept { return a22_; }
    [[nodiscard]] const Grid& grid() const noexcept { return a11_.grid(); }

    /// A v at node i.
    [[nodiscard]] std::pair<double, double> apply(std::size_t i, double vx, double vy) const noexcept {
        return {a11_[i] * vx + a12_[i] * vy, a12_[i] * vx + a22_[i] * vy};
    }

private:
    MatrixField(RealField a11, RealField a12, RealField a22)
        : a11_(std::move(a11)), a12_(std::move(a12)), a22_(std::move(a22)) {}

    RealField a11_;
    RealField a12_;
    RealField a22_;
};

/// mu_A = (a22 - a11 - 2i a12) / det(I + A), pointwise.
cplx mu_of_matrix(double a11, double a12, double a22);
/// The inverse dictionary: (a11, a12, a22) with
/// a11 = |1 - mu|^2 / (1 - |mu|^2), a12 = -2 Im mu / (1 - |mu|^2),
/// a22 = |1 + mu|^2 / (1 - |mu|^2).
std::array<double, 3> matrix_of_mu(cplx mu);

/// DegeneracyError ("ellipticity violated") when |mu_A| reaches 1.
BeltramiCoefficient mu_from_A(const MatrixField& A);
MatrixField A_from_mu(const BeltramiCoefficient& mu);

/// Constant matrix A0 on |z| <= inner blended to I at |z| = outer through
/// the coefficient mu(A0) times a smooth plateau.
MatrixField matrix_preset(const Grid& grid, double a11, double a12, double a22, double inner,
                          double outer);

/// sigma = N_zbar + mu conj(N_zbar) for the logarithmic potential N of g.
ComplexField sigma_from_source(const BeltramiCoefficient& mu, const RealField& g);

/// rho -> the source of sigma_from_source(mu, Re rho), kept in split form.
SourceOperator potential_operator();

struct HarmonicSourceSolution {
    RealField h;
    double certificate;  // ||Laplacian_core(h) - g||_core / ||g||_2
};

/// h = N^g with its Laplacian certified (SolverError above 1e-6).
HarmonicSourceSolution harmonic_source_solve(const RealField& g);

/// Q presets on the real line: Power max(t, 0)^lambda, SignedPower
/// |t|^(lambda - 1) t, NegExp exp(-|t|), Constant (Q = lambda, default 1).
Nonlinearity preset_Q(NonlinearityKind kind, std::optional<double> lambda = {});

struct TestFunction {
    RealField psi;
    RealField psi_x;
    RealField psi_y;
    cplx centre;
    double scale_x;
    double scale_y;
};

/// Tensor-product bump test functions placed inside the core disk.
struct WeakTestSet {
    std::uint64_t seed = 0;
    std::vector<TestFunction> functions;

    static WeakTestSet make(const Grid& grid, int count = 20, std::uint64_t seed = 20240607);
};

/// max over psi of |int <A grad u, grad psi> + int G Q(u) psi| divided by
/// ||grad psi||_2 (||grad u||_2 + ||G||_2), gradients of u core-localized.
double weak_residual(const RealField& u, const MatrixField& A, const RealField& G,
                     const Nonlinearity& Q, const WeakTestSet& tests);

struct PoissonSolution {
    RealField u;
    ComplexField omega;
    BeltramiCoefficient mu;
    ContinuationReport report;
    FactorizationResult factorization;
    RealField h;  // Re H on the image grid, u = h o f on the core
};

/// Weak solution of div(A grad u) = G Q(u) through the Beltrami reduction:
/// mu = mu_A, w_zbar = mu w_z + L[G Q(Re w)] with L = N_zbar + mu conj(N_zbar),
/// u = Re w, followed by the factorization u = h o f.
PoissonSolution solve_poisson_semilinear(const MatrixField& A, const RealField& G,
                                         const Nonlinearity& Q, const ContinuationConfig& cfg);

/// v with grad v = H[A grad u - grad N^g], H = [[0, -1], [1, 0]], v(0) = 0.
/// Throws SolverError ("not A-harmonic with source g") when the rotated field
/// fails the curl test by more than 1e-4 relative, tested weakly against 20
/// core test functions.  v is integrated along x from 0, then along y.
RealField a_conjugate(const RealField& u, const MatrixField& A, const RealField& g);

struct ChangeOfVariablesResidual {
    double transport;   // int <A grad(T o f), grad psi> against int J <M^-1 (grad T) o f, grad psi>
    double divergence;  // int <A grad(T o f), grad psi> against -int J (Laplacian T) o f psi
};

/// Weak-form check of div[A grad(T o f)] = J (Laplacian T) o f with
/// A = A_from_mu(map.mu()), T given on an image grid covering f(core).
ChangeOfVariablesResidual verify_change_of_variables(const RealField& T, const QCMap& map,
                                                     const MatrixField& A,
                                                     const WeakTestSet& tests);

namespace io {

/// Writes <stem>_a11.bfld etc. next to a JSON manifest
/// {"a11": path, "a12": path, "a22": path}; returns the manifest path.
std::filesystem::path write_matrix_field(const MatrixField& A, const std::filesystem::path& dir,
                                         const std::string& stem);
MatrixField read_matrix_field(const std::filesystem::path& manifest);

}  // namespace io

}  // namespace qcpde
