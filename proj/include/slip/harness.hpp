#pragma once
/// Parameter sweeps, scaling fits, bound-shape checks and the regime tables.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slip/diagnostics.hpp"

namespace slip {

/// Norms on the sampled boundary (both walls):
///   C1 = 1 + |alpha|_{W1,inf} + |kappa|_{W1,inf} + |alpha|_inf^3 + |kappa|_inf^3
///   C2 = 1 + |alpha^{-1}(1 + |kappa|)|_inf
///   C3 = |alpha + kappa|_inf
/// W1,inf derivatives are taken along the arc length.
struct BoundCoefficients {
    double C1 = 1.0, C2 = 1.0, C3 = 0.0;
};

BoundCoefficients bound_coefficients(const Domain& d, const SlipSpec& slip);

// ---------------------------------------------------------------------------
// Fits and bounds

struct RaNu {
    double Ra = 0.0, Nu = 0.0;
};

struct FitResult {
    double beta = 0.0, stderr_beta = 0.0;
    double log_prefactor = 0.0;  // ln Nu = log_prefactor + beta ln Ra
    double residual = 0.0;       // rms of ln Nu residuals
    int n = 0;
};

/// Least-squares slope of ln Nu against ln Ra over rows with Ra in [ra_min, ra_max].
/// Throws with fewer than 3 rows in range.
FitResult fit_exponent(const std::vector<RaNu>& rows, double ra_min = 0.0,
                       double ra_max = std::numeric_limits<double>::infinity());

struct BoundReport {
    double C0 = 0.0;
    double exponent = 0.0;
    std::vector<double> margins;  // per row, in the input order
    double max_margin = 0.0;
    bool ok(double tol) const { return max_margin <= 1.0 + tol; }
};

/// Calibrates C0 = Nu / (C2^{1/2} Ra^exponent) at the smallest Ra and reports
/// Nu / (C0 C2^{1/2} Ra^exponent) for every row.
BoundReport bound_check(const std::vector<RaNu>& rows, const BoundCoefficients& c, double exponent);

// ---------------------------------------------------------------------------
// Regime tables for flat walls with slip length L_s.

enum class RegimeTable { by_slip_length, by_prandtl };

struct RegimeResult {
    RegimeTable table;
    std::vector<std::string> forms;  // distinct bound forms of every matching row
    std::vector<std::string> rows;   // the matching rows' assumptions
    std::vector<double> ra_exponents;
    bool ambiguous = false;          // more than one distinct form
};

/// Evaluates the printed inequalities in log space; rows whose inequalities
/// hold with equality (to 1e-12 relative) are included, so a threshold case
/// returns both neighbours.
RegimeResult regime_classify(double Ls, double Pr, double Ra, RegimeTable table);

struct PhysicalScaling {
    double ra_ratio = 0.0, kappa_scale = 0.0, kappa_w1inf_scale = 0.0;
};

/// Channel height ratio and temperature-difference ratio to the Rayleigh ratio
/// (d^3 dT) and the curvature scalings (d, d^2 + d).
PhysicalScaling rescale_physical(double d_ratio, double dT_ratio);

// ---------------------------------------------------------------------------
// Sweeps

struct GeometrySpec {
    std::string id = "flat";
    double period = 2.0;
    FourierProfile bottom = FourierProfile::constant(0.0);
    FourierProfile top = FourierProfile::constant(1.0);
    bool normalize = false;

    ChannelGeometry build(std::size_t n1) const;
};

struct ResolutionPolicy {
    // per_ra: n2 = max(n2_min, round_up(n2_factor Ra^{1/4}, n2_multiple)),
    // n1 = n1_per_n2 * n2 rounded to even. fixed: n1, n2 as given.
    bool per_ra = false;
    std::size_t n1 = 64, n2 = 64;
    double n2_factor = 8.0;
    std::size_t n2_min = 32, n2_multiple = 16;
    double n1_per_n2 = 1.0;

    std::pair<std::size_t, std::size_t> grid(double Ra) const;
};

struct SweepSpec {
    std::vector<double> Ra;
    std::vector<double> Pr{1.0};
    std::vector<double> alpha{1.0};
    GeometrySpec geometry;
    ResolutionPolicy resolution;
    SimParams base;            // T, cfl, dt_max, K, tolerances, mode
    InitialSpec initial;
    DiagnosticsOptions diagnostics;
    double window_start = 0.4;  // averaging window = last (1 - window_start) of T
    bool seed_per_run = false;  // seed + run index instead of one shared seed
    double sample_dt = 0.1;
    int threads = 0;            // 0: hardware concurrency

    void validate() const;
};

struct SweepRow {
    double Ra = 0.0, Pr = 0.0, alpha = 0.0, slip_length = 0.0;
    std::size_t n1 = 0, n2 = 0;
    std::uint64_t seed = 0;
    Window window;
    double nu_flux = 0.0, nu_gradient = 0.0, nu_convective = 0.0;
    std::vector<std::pair<double, double>> nu_strip;
    std::optional<double> nu_background;
    double theta_min = 0.0, theta_max = 0.0;
    double max_energy_residual = 0.0, max_coupling_residual = 0.0;
    long steps = 0;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string reason;
    DiagnosticsRecord record;
};

struct SweepRecord {
    std::vector<SweepRow> rows;
    std::optional<FitResult> fit;
    std::string fit_note;  // why the fit is absent
};

/// Runs every (Ra, Pr, alpha) combination. Failed runs are recorded with the
/// reason and the sweep continues. Rows are ordered as the nested loops
/// Pr, alpha, Ra regardless of the thread count.
SweepRecord run_sweep(const SweepSpec& spec);

/// Summary of one finished run (used by run_sweep and the simulate command).
SweepRow summarize_run(const DiagnosticsRecord& rec, const Window& w, const DiagnosticsOptions& o, const SimParams& p);

void write_sweep_csv(const std::string& path, const SweepRecord& r, const std::vector<std::string>& comments = {});
/// log10 Ra, log10 Nu, fitted log10 Nu per row; header names the columns.
void write_plot_data(const std::string& path, const SweepRecord& r);

// ---------------------------------------------------------------------------
// Identity and refinement suite

struct ConvergenceCheck {
    std::string name;                 // e.g. "curved/grad_identity_ab"
    std::vector<std::size_t> n2;
    std::vector<double> errors;
    std::vector<double> orders;       // between consecutive levels
    bool pass = false;
    std::string note;
};

struct IdentitySpec {
    std::vector<GeometrySpec> geometries;  // empty: flat and the curved default
    std::size_t n1 = 64;
    std::vector<std::size_t> n2_levels{64, 128, 256};
    int fields = 20;
    std::uint64_t seed = 1;
    double min_order = 1.8;
    // Errors below this relative level count as converged (no order measurable).
    double roundoff = 1e-11;
    std::vector<double> alphas{0.1, 1.0, 10.0};
    int coercivity_ensemble = 100;
    double coercivity_fraction = 0.01;   // of (1 + |alpha^{-1}(1+|kappa|)|)^{-1}
    double coercivity_stability = 0.2;   // relative change across two resolutions
    double fast_generic_tol = 1e-9;
    double flux_identity_tol = 1e-8;
    double corrupt_metric = 0.0;         // != 0: scale a22 by this before checking (test hook)
    bool identities = true, elliptic = true, coercivity = true;

    void validate() const;
};

/// Curved default: h- = 0.1 sin(pi x1), h+ = 1 + h-, period 2.
GeometrySpec curved_default_geometry();

/// Every check runs; failures are reported, not thrown.
std::vector<ConvergenceCheck> run_identity_suite(const IdentitySpec& spec);

/// log2(e_k / e_{k+1}) for consecutive levels (refinement ratio 2).
std::vector<double> observed_orders(const std::vector<double>& errors);

}  // namespace slip
