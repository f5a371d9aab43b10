#pragma once
/// Time integration in vorticity-streamfunction form.
///
/// Diffusive:      Pr^{-1}(w_t + u.grad w) - Lap w = Ra d1 theta,
///                 theta_t + u.grad theta = Lap theta, theta = 1 (bottom), 0 (top).
/// Non-diffusive:  Ra = Pr = 1 and theta is only transported.
/// Walls:          w = -2 (alpha + kappa) u_tau,  Lap phi = w,  u = perp grad phi,
///                 phi = 0 (bottom), -mean_flux (top).
///
/// One step is first-order IMEX: explicit dealiased advection and buoyancy,
/// implicit diffusion. Flat channels with constant slip couple the wall
/// vorticity exactly through per-mode influence functions; all other cases
/// iterate the wall coupling until it meets the tolerance.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "slip/elliptic.hpp"

namespace slip {

enum class Mode { diffusive, non_diffusive };

const char* mode_name(Mode m);

struct SimParams {
    double Ra = 100.0;
    double Pr = 1.0;
    Mode mode = Mode::diffusive;
    SlipSpec slip;
    double dt = 0.0;       // > 0: fixed step; 0: adaptive from cfl
    double cfl = 0.4;
    double dt_max = 1e-2;
    double T = 1.0;
    int K = 2;             // minimum coupling sweeps (iterated path)
    int K_max = 50;
    double coupling_tol = 1e-6;
    double mean_flux = 0.0;
    double nu_h = 0.0;     // y1 hyperviscosity on theta, non-diffusive mode only
    std::uint64_t seed = 1;
    bool force_generic = false;
    SolverOptions solver;

    void validate() const;
};

enum class InitialKind { conduction_perturbed, stratified_blob, hydrostatic, snapshot };

struct InitialSpec {
    InitialKind kind = InitialKind::conduction_perturbed;
    double amplitude = 1e-2;   // conduction_perturbed: max |perturbation|
    int modes = 4;             // conduction_perturbed: modes per direction
    // stratified_blob / hydrostatic: theta = beta x2 + gamma (+ blob)
    double beta = 1.0, gamma = 0.0;
    double blob_amplitude = 1.0, blob_x = 1.0, blob_y = 0.5, blob_width = 0.15;
    std::string omega_path, theta_path;  // snapshot
};

struct State {
    double t = 0.0;
    long step = 0;
    double dt = 0.0;  // current adaptive step
    Field omega, theta;
    // Derived from omega; valid only when derived is true.
    bool derived = false;
    Field phi;
    VectorField u;
    std::optional<Field> p;
    // Flat fast path: spectral rows (N2+1) x (N1+2) are the primary copy while
    // spectral is set, and omega/theta are refreshed by Stepper::ensure_derived.
    // Code that edits omega or theta directly must clear spectral.
    bool spectral = false;
    bool physical_stale = false;
    Vec omega_hat, theta_hat;
};

State initial_state(const DomainPtr& d, const SimParams& p, const InitialSpec& init);

/// -2 (alpha + kappa) at the wall samples.
std::vector<double> wall_coupling_coefficient(const Domain& d, const SlipSpec& slip, Side s);
/// u_tau on a wall from the streamfunction (wall-constant phi).
std::vector<double> wall_tangential_from_phi(const Field& phi, Side s);
/// max |w_wall + 2(alpha+kappa) u_tau| / max(|w_wall|, |2(alpha+kappa) u_tau|).
double wall_coupling_residual(const State& s, const SlipSpec& slip);

struct StepInfo {
    long step = 0;
    double t = 0.0;
    double dt = 0.0;
    int sweeps = 0;
    double coupling_residual = 0.0;
};

class Stepper {
public:
    Stepper(DomainPtr d, SimParams p);
    ~Stepper();

    bool fast() const { return fast_; }
    const SimParams& params() const { return p_; }
    const DomainPtr& domain() const { return d_; }

    /// Advance by dt. Throws Error on non-finite values.
    StepInfo step(State& s, double dt);
    /// One step with the chosen dt, shortened to land exactly on target.
    StepInfo advance(State& s, double target);
    /// Step size for the next step (fixed or adaptive with hysteresis).
    /// Fixed steps above the CFL limit throw with a suggested value.
    double choose_dt(State& s);
    /// CFL limit: cfl * min(dy1/|u1|, g dy2/|u2|), capped by 2 min(Pr,1)/|u|^2
    /// and dt_max.
    double cfl_dt(State& s);

    /// Refresh physical omega/theta from the spectral copy (fast path).
    void sync(State& s) const;
    /// sync plus phi and u.
    void ensure_derived(State& s) const;
    const Field& pressure(State& s) const;

private:
    struct Flat;
    struct Generic;
    StepInfo step_flat(State& s, double dt);
    StepInfo step_generic(State& s, double dt);
    double pick_dt(State& s, double lim) const;

    DomainPtr d_;
    SimParams p_;
    bool fast_;
    std::unique_ptr<Flat> flat_;
    std::unique_ptr<Generic> gen_;
};

double cfl_dt(State& s, const SimParams& p);

using Sink = std::function<void(State&, const StepInfo&)>;

struct RunOptions {
    long cadence = 100;        // steps between samples when sample_dt == 0
    double sample_dt = 0.0;    // > 0: sample at multiples of this time (steps land on them)
    std::vector<Sink> sinks;
    std::string checkpoint_dir;  // final checkpoint when non-empty
    std::string config_hash;
};

struct RunResult {
    State state;
    long steps = 0;
    long samples = 0;
    double wall_seconds = 0.0;
};

/// Advances to params.T. Sinks run at t = 0 (when T > 0), at every sample
/// point and at T.
RunResult run(const DomainPtr& d, const SimParams& p, State initial, const RunOptions& opt);

void write_checkpoint(const std::string& dir, const State& s, const std::string& config_hash);
State read_checkpoint(const std::string& dir, const DomainPtr& d, std::string* config_hash = nullptr);

}  // namespace slip
