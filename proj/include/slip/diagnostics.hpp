#pragma once
/// Nusselt estimators, energy and gradient identities, coercivity and
/// conservation monitors, and the time-series record used by every run.
///
/// All functions are pure in their inputs. States passed here must have
/// their derived fields (phi, u) available.

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "slip/dynamics.hpp"

namespace slip {

// ---------------------------------------------------------------------------
// Nusselt number

/// (1/period) int_{bottom} n.grad(theta) ds, one-sided wall derivative.
double nusselt_flux(const Field& theta);
/// Instantaneous ||grad theta||^2 / period. Its window mean is the gradient form.
double nusselt_gradient_sample(const Field& theta);
/// (1/delta)(1/period) int over h- < x2 < h- + delta of n+.(u theta - grad theta),
/// n+ the upward bottom normal extended vertically. Throws for delta >= min gap.
double nusselt_strip(const Field& theta, const VectorField& u, double delta);
/// (max h+ - min h-)^{-1} (1/period) int (u2 theta - d2 theta). A lower estimate.
double nusselt_convective(const Field& theta, const VectorField& u);

/// Piecewise-linear background profile: 1 at the bottom wall, 1/2 in the bulk,
/// 0 at the top wall, slope 1/(2 delta) in the two strips of width delta.
struct BackgroundProfile {
    double delta = 0.0;
    Field eta;
    VectorField grad_eta;
    Field mask;  // 1 inside the strips, 0 in the bulk
};

/// Requires identical profiles (h+ = 1 + h-) and 0 < delta <= 1/2.
BackgroundProfile background_profile(const DomainPtr& d, double delta);

/// Instantaneous parts of the background decomposition (not divided by period).
struct BackgroundTerms {
    double grad_eta2 = 0.0;     // ||grad eta||^2
    double advective = 0.0;     // int varsigma u.grad eta
    double grad_varsigma2 = 0.0;
    double value = 0.0;         // (grad_eta2 - 2 advective - grad_varsigma2) / period
};

/// Strip integrals are exact for the piecewise-linear interpolant in y2, so the
/// kinks of eta need not sit on grid nodes.
BackgroundTerms background_terms(const Field& theta, const VectorField& u, double delta);

struct NusseltEstimates {
    double nu_flux = 0.0;
    double nu_gradient = 0.0;
    std::vector<std::pair<double, double>> nu_strip;  // (delta, value)
    double nu_convective = 0.0;
    double delta_bg = 0.0;
    std::optional<double> nu_background;
};

NusseltEstimates nusselt_estimates(const Field& theta, const VectorField& u,
                                   const std::vector<double>& strip_deltas, double delta_bg);

// ---------------------------------------------------------------------------
// Energy and gradient identities

struct EnergyTerms {
    double kinetic = 0.0;     // ||u||^2
    double grad_u2 = 0.0;     // ||grad u||^2
    double sym_grad2 = 0.0;   // ||D u||^2
    double vort2 = 0.0;       // ||omega||^2, omega from u
    double wall_slip = 0.0;   // int alpha u_tau^2 over both walls
    double wall_kappa = 0.0;  // int kappa u_tau^2 over both walls
    double buoyancy = 0.0;    // int theta u2
};

EnergyTerms energy_terms(const VectorField& u, const Field& theta, const SlipSpec& slip);

/// |d/dt (||u||^2 / 2Pr) + 2||Du||^2 + 2 int alpha u_tau^2 - Ra int theta u2|
/// over the interval, with the dissipation and forcing terms averaged over
/// both end states, divided by the largest of the four terms.
double energy_balance_residual(const EnergyTerms& a, const EnergyTerms& b, double dt, const SimParams& p);
double energy_balance_residual(const State& prev, const State& next, const SimParams& p);

/// Pairwise relative differences of
///   A = 2||Du||^2 - int kappa u_tau^2,  B = ||grad u||^2,  C = ||omega||^2 + int kappa u_tau^2
/// as {|A-B|, |B-C|, |A-C|} / max(|A|, |B|, |C|).
std::array<double, 3> grad_identity_residuals(const VectorField& u);
std::array<double, 3> grad_identity_residuals(const EnergyTerms& e);

/// ||Lap u - perp grad omega|| / max(||Lap u||, ||perp grad omega||) on interior rows.
double laplacian_vorticity_residual(const VectorField& u);

/// Random smooth streamfunction, constant on each wall: a few Fourier-sine
/// modes plus a uniform-flux part. Deterministic in the generator state and
/// independent of the resolution.
Field random_wall_constant_phi(const DomainPtr& d, std::mt19937_64& rng, int modes = 4);

struct CoercivityResult {
    double min_ratio = 0.0, mean_ratio = 0.0, max_ratio = 0.0;
    double c2_inverse = 0.0;  // (1 + ||alpha^{-1}(1 + |kappa|)||_inf)^{-1}
    int samples = 0;
};

/// min over random fields of (||Du||^2 + int alpha u_tau^2) / (||u||^2 + ||grad u||^2).
CoercivityResult coercivity_probe(const DomainPtr& d, const SlipSpec& slip, int ensemble, std::uint64_t seed);
double coercivity_ratio(const VectorField& u, const SlipSpec& slip);

/// int_{walls} (alpha + kappa) u.grad p ds evaluated directly (first) and as
/// -int_{walls} p tau.grad((alpha + kappa) u_tau) ds (second).
std::array<double, 2> boundary_pressure_work(const VectorField& u, const Field& p, const SlipSpec& slip);

// ---------------------------------------------------------------------------
// Non-diffusive monitors

struct NdMonitors {
    double theta_l2 = 0.0, theta_l4 = 0.0;
    double u_l2 = 0.0, u_h1 = 0.0;
    double hydrostatic = 0.0;        // hminus1_proxy(grad p - theta e2)
    double theta_hat_l2 = 0.0;       // ||theta - (beta x2 + gamma)||
};

/// Solves for the pressure when s.p is empty (Ra = Pr = 1).
NdMonitors nd_monitors(State& s, const SimParams& p, double beta, double gamma);
/// hminus1_proxy(grad p - theta e2).
double hydrostatic_residual(const Field& p, const Field& theta, const SolverOptions& opt = {});

struct DecayVerdict {
    bool found = false;
    double T = 0.0;
    std::string reason;  // failed premise when not found
};

/// Premises: f >= 0, discrete f' <= C (1 + 1e-6), and the integral over the
/// last half of the series below budget (default eps times the half length).
/// Returns the first sample time after which f stays below eps.
/// Throws for fewer than 3 samples or a non-uniform time step.
DecayVerdict decay_detector(const std::vector<double>& t, const std::vector<double>& f, double C, double eps,
                            std::optional<double> budget = std::nullopt);

// ---------------------------------------------------------------------------
// Time series

struct Window {
    double t0 = 0.0, t1 = 0.0;
    bool contains(double t) const { return t >= t0 - 1e-12 && t <= t1 + 1e-12; }
};

/// Last (1 - start_fraction) of [0, T].
Window window_from_fraction(double T, double start_fraction);

/// One row per sample; the first three columns are t, step, dt.
struct DiagnosticsRecord {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t index(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    std::size_t size() const { return rows.size(); }

    /// Comment lines (prefixed "# ") precede the header line.
    void write_csv(const std::string& path, const std::vector<std::string>& comments = {}) const;
    static DiagnosticsRecord read_csv(const std::string& path);
};

/// Time-weighted trapezoid mean over the samples inside w. Throws when fewer
/// than one sample lies in the window; a single sample returns its value.
double window_average(const DiagnosticsRecord& r, const std::string& name, const Window& w);
double window_max(const DiagnosticsRecord& r, const std::string& name, const Window& w);
double column_min(const DiagnosticsRecord& r, const std::string& name);
double column_max(const DiagnosticsRecord& r, const std::string& name);

struct DiagnosticsOptions {
    std::vector<double> strip_deltas{0.05, 0.1};
    double delta_bg = 0.1;       // skipped when the profiles are not identical
    bool identities = true;      // grad-identity columns
    double beta = 1.0, gamma = 0.0;  // hydrostatic reference (non-diffusive)
};

/// Builds the record from run() samples. Columns depend on the mode.
class Recorder {
public:
    Recorder(DomainPtr d, SimParams p, DiagnosticsOptions o = {});

    void operator()(State& s, const StepInfo& info);
    Sink sink() {
        return [this](State& s, const StepInfo& i) { (*this)(s, i); };
    }
    const DiagnosticsRecord& record() const { return rec_; }

private:
    DomainPtr d_;
    SimParams p_;
    DiagnosticsOptions o_;
    bool background_;
    DiagnosticsRecord rec_;
    std::optional<VectorField> prev_u_;
    std::optional<EnergyTerms> prev_e_;
    double prev_t_ = 0.0;
};

}  // namespace slip
