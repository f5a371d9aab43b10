#pragma once
/// Linear solvers on the mapped domain.
///
/// All solvers work with the shifted form  sigma*u - Lap(u) = f, sigma >= 0,
/// where g * Lap(u) = d_l(a_kl d_k u) is discretized in flux form: spectral in
/// y1, finite-volume in y2 (faces at half nodes, half cells at Neumann walls).
/// Flat channels use per-mode tridiagonal solves; other geometries use
/// restarted GMRES preconditioned by the y1-averaged per-mode operator.

#include <optional>
#include <vector>

#include "slip/fields.hpp"

namespace slip {

enum class WallBC { dirichlet, neumann };

struct SolverOptions {
    double tol = 1e-10;       // relative residual target
    int max_iter = 3000;      // total GMRES iterations
    int restart = 60;
    bool force_generic = false;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;       // relative, ||b - A x|| / ||b||
    bool fast_path = false;
    double compat_defect = 0.0;  // Neumann, sigma = 0: constant removed from f
    double compat_relative = 0.0;
};

/// Per-Fourier-mode tridiagonal solver for y1-independent coefficients.
/// Spectral layout: rows x (2M) interleaved re/im.
class FlatModeSolver {
public:
    // gbar: Jacobian, a11: per node row (N2+1), a22h: per half node (N2).
    FlatModeSolver(const MappedGrid& g, double sigma, WallBC bc, double gbar,
                   const std::vector<double>& a11, const std::vector<double>& a22h);
    FlatModeSolver(const MappedGrid& g, double sigma, WallBC bc);

    /// In place. Interior rows carry the right-hand side; wall rows carry the
    /// wall values (Dirichlet) or the half-cell right-hand side (Neumann).
    void solve(double* x) const;
    /// Real solution of one mode for a real right-hand side (length N2+1).
    void solve_mode(std::size_t m, std::vector<double>& x) const;

    double sigma() const { return sigma_; }
    WallBC bc() const { return bc_; }

private:
    const MappedGrid* grid_;
    double sigma_;
    WallBC bc_;
    bool pinned_zero_mode_;
    std::size_t rows_, width_;
    Vec lo_, m_, cp_;
};

class EllipticSolver {
public:
    EllipticSolver(DomainPtr d, double sigma, WallBC bc, SolverOptions opt = {});

    bool fast() const { return fast_; }
    double sigma() const { return sigma_; }
    WallBC bc() const { return bc_; }
    const DomainPtr& domain() const { return dom_; }

    /// Dirichlet: wall rows of the result equal the given wall values.
    Field solve_dirichlet(const Field& f, const std::vector<double>& wall_bottom,
                          const std::vector<double>& wall_top, SolveStats* st = nullptr,
                          const Field* guess = nullptr) const;
    /// Neumann data n.grad u on each wall. For sigma = 0 the compatible part
    /// of f is used and the result has zero area mean.
    Field solve_neumann(const Field& f, const std::vector<double>& dn_bottom,
                        const std::vector<double>& dn_top, SolveStats* st = nullptr) const;

    /// Row operator: sigma*g*u - (flux-form L u); Dirichlet wall rows are u,
    /// Neumann wall rows exclude the wall flux.
    Field apply(const Field& u) const;
    /// Left-hand side in physical units: sigma*u - Lap u on interior rows.
    Field apply_physical(const Field& u) const;

    const FlatModeSolver& preconditioner() const { return *pre_; }

private:
    Field gmres(const Field& b, const Field* guess, SolveStats* st) const;
    void precondition(const Field& in, Field& out) const;
    Field spectral_solve(const Field& b) const;

    DomainPtr dom_;
    double sigma_;
    WallBC bc_;
    SolverOptions opt_;
    bool fast_;
    std::unique_ptr<FlatModeSolver> pre_;
};

Field solve_dirichlet(const DomainPtr& d, double sigma, const Field& f,
                      const std::vector<double>& wall_bottom, const std::vector<double>& wall_top,
                      const SolverOptions& opt = {}, SolveStats* st = nullptr);

Field solve_helmholtz_dirichlet(double sigma, const Field& rhs, const std::vector<double>& wall_bottom,
                                const std::vector<double>& wall_top, const SolverOptions& opt = {},
                                SolveStats* st = nullptr);

/// Lap(phi) = omega, phi = 0 on the bottom wall and -mean_flux on the top wall.
/// phi = phi0 - mean_flux * chi with chi the harmonic lift (0 bottom, 1 top).
class StreamfunctionSolver {
public:
    explicit StreamfunctionSolver(DomainPtr d, SolverOptions opt = {});
    Field solve(const Field& omega, double mean_flux, SolveStats* st = nullptr,
                const Field* guess = nullptr) const;
    const Field& lift() const { return chi_; }
    const EllipticSolver& poisson() const { return poisson_; }

private:
    EllipticSolver poisson_;
    Field chi_;
};

Field solve_streamfunction(const Field& omega, double mean_flux, const SolverOptions& opt = {},
                           SolveStats* st = nullptr);

/// Pressure from the velocity and temperature:
///   Lap p = -Pr^{-1} grad u : grad u^T + Ra d2 theta
///   n.grad p = -Pr^{-1} kappa u_tau^2 + 2 tau.grad((alpha+kappa) u_tau) + n2 Ra theta
/// Zero area mean. stats->compat_relative reports the removed defect.
Field solve_pressure_neumann(const VectorField& u, const Field& theta, double Ra, double Pr,
                             const SlipSpec& slip, const SolverOptions& opt = {},
                             SolveStats* st = nullptr);

/// Dirichlet inverse-Laplacian energy of each mean-free component,
/// sqrt(sum_i ||grad w_i||^2) with -Lap w_i = f_i - mean(f_i), w_i = 0 on walls.
/// A computable stand-in for a negative Sobolev norm.
double hminus1_proxy(const VectorField& f, const SolverOptions& opt = {});

}  // namespace slip
