#include "slip/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "slip/kernels.hpp"

namespace slip {

const char* mode_name(Mode m) { return m == Mode::diffusive ? "diffusive" : "non_diffusive"; }

void SimParams::validate() const {
    if (!(Ra >= 1.0) || !std::isfinite(Ra)) throw Error("params: Ra must be finite and >= 1");
    if (!(Pr > 0.0) || !std::isfinite(Pr)) throw Error("params: Pr must be finite and > 0");
    if (mode == Mode::non_diffusive && (Ra != 1.0 || Pr != 1.0))
        throw Error("params: non_diffusive mode requires Ra = Pr = 1");
    if (dt < 0.0) throw Error("params: dt must be >= 0 (0 selects adaptive stepping)");
    if (!(cfl > 0.0)) throw Error("params: cfl must be > 0");
    if (!(dt_max > 0.0)) throw Error("params: dt_max must be > 0");
    if (!(T >= 0.0)) throw Error("params: T must be >= 0");
    if (K < 1 || K_max < K) throw Error("params: need 1 <= K <= K_max");
    if (!(coupling_tol > 0.0)) throw Error("params: coupling_tol must be > 0");
    if (!(nu_h >= 0.0)) throw Error("params: nu_h must be >= 0");
    if (nu_h > 0.0 && mode == Mode::diffusive) throw Error("params: nu_h applies to non_diffusive mode only");
}

// ===========================================================================
// Wall coupling helpers

std::vector<double> wall_coupling_coefficient(const Domain& d, const SlipSpec& slip, Side s) {
    const auto& fr = d.frame(s);
    const std::size_t n1 = d.grid.n1();
    std::vector<double> c(n1);
    for (std::size_t i = 0; i < n1; ++i)
        c[i] = -2.0 * (slip.on(s).value(d.geom.x1(i), d.geom.period()) + fr.kappa[i]);
    return c;
}

std::vector<double> wall_tangential_from_phi(const Field& phi, Side s) {
    const auto& d = *phi.dom;
    const std::size_t n1 = d.grid.n1();
    std::vector<double> out(n1);
    spec::d2_wall(d.grid.rows(), n1, d.grid.dy2(), phi.v.data(), s, out.data());
    const auto& sp = d.frame(s).sprime;
    const double sign = s == Side::bottom ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n1; ++i) out[i] *= sign * sp[i] / d.map.gap(i);
    return out;
}

double wall_coupling_residual(const State& s, const SlipSpec& slip) {
    if (!s.derived) throw Error("wall_coupling_residual: derived fields not available");
    const auto& d = *s.omega.dom;
    double diff = 0.0, scale = 0.0;
    for (Side side : {Side::bottom, Side::top}) {
        auto c = wall_coupling_coefficient(d, slip, side);
        auto ut = wall_tangential_from_phi(s.phi, side);
        auto w = wall_trace(s.omega, side);
        for (std::size_t i = 0; i < c.size(); ++i) {
            diff = std::max(diff, std::abs(w[i] - c[i] * ut[i]));
            scale = std::max({scale, std::abs(w[i]), std::abs(c[i] * ut[i])});
        }
    }
    return scale > 0.0 ? diff / scale : diff;
}

// ===========================================================================
// Initial states

State initial_state(const DomainPtr& d, const SimParams& p, const InitialSpec& init) {
    State s;
    s.omega = Field(d);
    s.theta = Field(d);
    const auto& g = d->grid;
    const std::size_t n1 = g.n1(), N = g.n2();
    const double L = g.period();
    switch (init.kind) {
    case InitialKind::conduction_perturbed: {
        Field pert(d);
        if (init.amplitude != 0.0) {
            std::mt19937_64 rng(p.seed);
            std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2.0 * kPi);
            for (int m = 0; m <= init.modes; ++m)
                for (int l = 1; l <= init.modes; ++l) {
                    const double c = coef(rng), ph = phase(rng);
                    for (std::size_t j = 0; j <= N; ++j) {
                        const double sy = std::sin(l * kPi * g.y2(j));
                        for (std::size_t i = 0; i < n1; ++i)
                            pert(j, i) += c * sy * std::cos(2.0 * kPi * m * g.y1(i) / L + ph);
                    }
                }
            const double mx = lp_norm(pert, std::numeric_limits<double>::infinity());
            if (mx > 0.0) pert *= init.amplitude / mx;
        }
        for (std::size_t j = 0; j <= N; ++j)
            for (std::size_t i = 0; i < n1; ++i) {
                double v = 1.0 - g.y2(j) + pert(j, i);
                if (p.mode == Mode::diffusive) v = std::clamp(v, 0.0, 1.0);
                s.theta(j, i) = v;
            }
        break;
    }
    case InitialKind::stratified_blob:
    case InitialKind::hydrostatic: {
        const bool blob = init.kind == InitialKind::stratified_blob;
        if (blob && !(init.blob_width > 0.0)) throw Error("initial: blob_width must be > 0");
        s.theta = sample(d, [&](double x1, double x2) {
            double v = init.beta * x2 + init.gamma;
            if (blob) {
                double dx = std::remainder(x1 - init.blob_x, L);
                double dy = x2 - init.blob_y;
                v += init.blob_amplitude * std::exp(-(dx * dx + dy * dy) / (init.blob_width * init.blob_width));
            }
            return v;
        });
        break;
    }
    case InitialKind::snapshot:
        s.omega = read_snapshot_field(init.omega_path, d);
        s.theta = read_snapshot_field(init.theta_path, d);
        break;
    }
    return s;
}

// ===========================================================================
// Flat channel, constant slip: spectral state per step, exact wall coupling.

struct Stepper::Flat {
    std::size_t n1, N, R, M, W;
    double h;
    double alpha_b, alpha_t;
    FlatModeSolver poisson;
    std::unique_ptr<FlatModeSolver> hw, ht;
    double dt = -1.0;
    std::vector<double> Gb, Gt;   // R x M, real influence profiles
    std::vector<double> inv;      // 4 per mode
    std::vector<double> damp;     // hyperviscosity factor per mode
    Vec ph, rhs, tmp, nw, nt, s1, s2;
    Vec u1, u2, g1, g2, prod;
    // Step-start data (spectral state, velocity) valid for one (state, step).
    const State* prepared = nullptr;
    long prepared_step = -1;
    double rate = 0.0, umax2 = 0.0;

    Flat(const Domain& d, const SimParams& p)
        : n1(d.grid.n1()), N(d.grid.n2()), R(N + 1), M(d.grid.modes()), W(2 * M), h(d.grid.dy2()),
          alpha_b(p.slip.bottom.c0), alpha_t(p.slip.top.c0),
          poisson(d.grid, 0.0, WallBC::dirichlet) {
        for (Vec* v : {&ph, &rhs, &tmp, &nw, &nt, &s1, &s2}) v->assign(R * W, 0.0);
        for (Vec* v : {&u1, &u2, &g1, &g2, &prod}) v->assign(R * n1, 0.0);
    }

    double dbot(const std::vector<double>& x) const {
        const double* k = spec::kWall;
        return (0.5 / h) * ((((k[0] * x[0] + k[1] * x[1]) + k[2] * x[2]) + k[3] * x[3]) + k[4] * x[4]);
    }
    double dtop(const std::vector<double>& x) const {
        const double* k = spec::kWall;
        return -(0.5 / h) * ((((k[0] * x[N] + k[1] * x[N - 1]) + k[2] * x[N - 2]) + k[3] * x[N - 3]) + k[4] * x[N - 4]);
    }

    void factor(const Domain& d, const SimParams& p, double step) {
        if (step == dt) return;
        dt = step;
        hw = std::make_unique<FlatModeSolver>(d.grid, 1.0 / (p.Pr * step), WallBC::dirichlet);
        if (p.mode == Mode::diffusive)
            ht = std::make_unique<FlatModeSolver>(d.grid, 1.0 / step, WallBC::dirichlet);
        Gb.assign(R * M, 0.0);
        Gt.assign(R * M, 0.0);
        inv.assign(4 * M, 0.0);
        std::vector<double> x(R), y(R);
        for (std::size_t m = 0; m + 1 < M; ++m) {
            double D[2][2];  // D[source][wall]
            for (int src = 0; src < 2; ++src) {
                std::fill(x.begin(), x.end(), 0.0);
                x[src == 0 ? 0 : N] = 1.0;
                hw->solve_mode(m, x);
                auto& G = src == 0 ? Gb : Gt;
                for (std::size_t j = 0; j < R; ++j) G[j * M + m] = x[j];
                for (std::size_t j = 0; j < R; ++j) y[j] = (j == 0 || j == N) ? 0.0 : -x[j];
                poisson.solve_mode(m, y);
                D[src][0] = dbot(y);
                D[src][1] = dtop(y);
            }
            const double a00 = 1.0 - 2.0 * alpha_b * D[0][0], a01 = -2.0 * alpha_b * D[1][0];
            const double a10 = 2.0 * alpha_t * D[0][1], a11 = 1.0 + 2.0 * alpha_t * D[1][1];
            const double det = a00 * a11 - a01 * a10;
            inv[4 * m + 0] = a11 / det;
            inv[4 * m + 1] = -a01 / det;
            inv[4 * m + 2] = -a10 / det;
            inv[4 * m + 3] = a00 / det;
        }
        damp.assign(M, 1.0);
        if (p.nu_h > 0.0)
            for (std::size_t m = 0; m < M; ++m) {
                const double k = d.grid.wavenumber(m);
                damp[m] = std::exp(-p.nu_h * k * k * k * k * step);
            }
    }

    // phi spectral rows from omega spectral rows (interior), plus the flux lift.
    void phi_from_omega(const Domain& d, double qbar, const Vec& ws, Vec& out) const {
        for (std::size_t k = 0; k < R * W; ++k) out[k] = -ws[k];
        std::fill(out.begin(), out.begin() + W, 0.0);
        std::fill(out.begin() + N * W, out.end(), 0.0);
        poisson.solve(out.data());
        if (qbar != 0.0)
            for (std::size_t j = 0; j < R; ++j) out[j * W] -= qbar * d.grid.y2(j);
    }

    // Truncated physical velocity from phi spectral rows.
    void velocity(const Domain& d, const Vec& phs) {
        spec::d2_rows(R, W, h, phs.data(), tmp.data());
        for (double& v : tmp) v = -v;
        spec::truncate(d.grid, R, tmp.data());
        d.fft->inverse(tmp.data(), u1.data());
        spec::d1(d.grid, R, phs.data(), tmp.data());
        spec::truncate(d.grid, R, tmp.data());
        d.fft->inverse(tmp.data(), u2.data());
    }

    void to_spectral(const Domain& d, State& s) const {
        if (s.spectral) return;
        s.omega_hat.assign(R * W, 0.0);
        s.theta_hat.assign(R * W, 0.0);
        d.fft->forward(s.omega.v.data(), s.omega_hat.data());
        d.fft->forward(s.theta.v.data(), s.theta_hat.data());
        s.spectral = true;
        s.physical_stale = false;
    }

    void prepare(const Domain& d, const SimParams& p, State& s) {
        if (prepared == &s && prepared_step == s.step) return;
        to_spectral(d, s);
        phi_from_omega(d, p.mean_flux, s.omega_hat, ph);
        velocity(d, ph);
        const double dy1 = d.grid.dy1(), dy2 = d.grid.dy2();
        rate = 0.0, umax2 = 0.0;
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t k = 0; k < u1.size(); ++k) {
            const double a = std::abs(u1[k]), b = std::abs(u2[k]);
            m1 = a > m1 ? a : m1;
            m2 = b > m2 ? b : m2;
            const double q = a * a + b * b;
            umax2 = q > umax2 ? q : umax2;
        }
        rate = std::max(m1 / dy1, m2 / dy2);
        prepared = &s;
        prepared_step = s.step;
    }

    // Spectral u.grad f (dealiased) from spectral f.
    void advect(const Domain& d, const Vec& fs, Vec& out) {
        spec::d1(d.grid, R, fs.data(), tmp.data());
        spec::truncate(d.grid, R, tmp.data());
        d.fft->inverse(tmp.data(), g1.data());
        spec::d2_rows(R, W, h, fs.data(), tmp.data());
        spec::truncate(d.grid, R, tmp.data());
        d.fft->inverse(tmp.data(), g2.data());
        std::fill(prod.begin(), prod.end(), 0.0);
        kern::active().acc_mul_add2(prod.size(), u1.data(), g1.data(), u2.data(), g2.data(), prod.data());
        d.fft->forward(prod.data(), out.data());
        spec::truncate(d.grid, R, out.data());
    }
};

StepInfo Stepper::step_flat(State& s, double dt) {
    const Domain& d = *d_;
    Flat& F = *flat_;
    const auto& K = kern::active();
    const std::size_t R = F.R, W = F.W, M = F.M, N = F.N, n = R * W;
    F.factor(d, p_, dt);
    F.prepare(d, p_, s);
    F.prepared = nullptr;
    Vec& w = s.omega_hat;
    Vec& th = s.theta_hat;
    F.advect(d, w, F.nw);
    F.advect(d, th, F.nt);

    // Vorticity: sigma w - Lap w = sigma w^n - N/Pr + Ra d1 theta.
    const double sw = 1.0 / (p_.Pr * dt);
    spec::d1(d.grid, R, th.data(), F.tmp.data());
    K.axpby(n, sw, w.data(), -1.0 / p_.Pr, F.nw.data(), F.rhs.data());
    K.axpby(n, 1.0, F.rhs.data(), p_.Ra, F.tmp.data(), F.rhs.data());
    std::fill(F.rhs.begin(), F.rhs.begin() + W, 0.0);
    std::fill(F.rhs.begin() + N * W, F.rhs.end(), 0.0);
    F.hw->solve(F.rhs.data());
    F.phi_from_omega(d, p_.mean_flux, F.rhs, F.ph);
    std::vector<double> db(W), dtp(W);
    spec::d2_wall(R, W, F.h, F.ph.data(), Side::bottom, db.data());
    spec::d2_wall(R, W, F.h, F.ph.data(), Side::top, dtp.data());
    // Wall amplitudes per mode and lane, then add the influence profiles.
    std::vector<double> ca(W, 0.0), cb(W, 0.0);
    for (std::size_t m = 0; m + 1 < M; ++m) {
        const double* iv = &F.inv[4 * m];
        for (std::size_t lane = 0; lane < 2; ++lane) {
            const std::size_t c = 2 * m + lane;
            const double rb = 2.0 * F.alpha_b * db[c], rt = -2.0 * F.alpha_t * dtp[c];
            ca[c] = iv[0] * rb + iv[1] * rt;
            cb[c] = iv[2] * rb + iv[3] * rt;
        }
    }
    for (std::size_t j = 0; j < R; ++j) {
        double* row = &F.rhs[j * W];
        const double* gb = &F.Gb[j * M];
        const double* gt = &F.Gt[j * M];
        for (std::size_t c = 0; c + 2 < W; ++c) row[c] = (row[c] + ca[c] * gb[c / 2]) + cb[c] * gt[c / 2];
        row[W - 2] = row[W - 1] = 0.0;
    }
    std::swap(w, F.rhs);

    if (p_.mode == Mode::diffusive) {
        K.axpby(n, 1.0 / dt, th.data(), -1.0, F.nt.data(), F.rhs.data());
        std::fill(F.rhs.begin(), F.rhs.begin() + W, 0.0);
        std::fill(F.rhs.begin() + N * W, F.rhs.end(), 0.0);
        F.rhs[0] = 1.0;
        F.ht->solve(F.rhs.data());
        std::swap(th, F.rhs);
    } else {
        // SSP-RK3 transport with the velocity frozen at the start of the step.
        K.axpby(n, 1.0, th.data(), -dt, F.nt.data(), F.s1.data());
        F.advect(d, F.s1, F.nt);
        K.axpby(n, 1.0, F.s1.data(), -dt, F.nt.data(), F.s2.data());
        K.axpby(n, 0.75, th.data(), 0.25, F.s2.data(), F.s2.data());
        F.advect(d, F.s2, F.nt);
        K.axpby(n, 1.0, F.s2.data(), -dt, F.nt.data(), F.s1.data());
        K.axpby(n, 1.0 / 3.0, th.data(), 2.0 / 3.0, F.s1.data(), th.data());
        if (p_.nu_h > 0.0)
            for (std::size_t j = 0; j < R; ++j)
                for (std::size_t m = 0; m < M; ++m) {
                    th[j * W + 2 * m] *= F.damp[m];
                    th[j * W + 2 * m + 1] *= F.damp[m];
                }
    }
    s.physical_stale = true;
    s.derived = false;
    StepInfo info;
    info.sweeps = 1;
    return info;
}

// ===========================================================================
// Iterated wall coupling on any geometry.

struct Stepper::Generic {
    StreamfunctionSolver sf;
    std::unique_ptr<EllipticSolver> hw, ht;
    double dt = -1.0;
    std::vector<double> cb, ct;

    Generic(const DomainPtr& d, const SimParams& p)
        : sf(d, p.solver),
          cb(wall_coupling_coefficient(*d, p.slip, Side::bottom)),
          ct(wall_coupling_coefficient(*d, p.slip, Side::top)) {}

    void factor(const DomainPtr& d, const SimParams& p, double step) {
        if (step == dt) return;
        dt = step;
        SolverOptions o = p.solver;
        o.force_generic = p.force_generic;
        hw = std::make_unique<EllipticSolver>(d, 1.0 / (p.Pr * step), WallBC::dirichlet, o);
        if (p.mode == Mode::diffusive) ht = std::make_unique<EllipticSolver>(d, 1.0 / step, WallBC::dirichlet, o);
    }

    std::pair<std::vector<double>, std::vector<double>> walls(const Field& phi) const {
        auto b = wall_tangential_from_phi(phi, Side::bottom);
        auto t = wall_tangential_from_phi(phi, Side::top);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] *= cb[i], t[i] *= ct[i];
        return {b, t};
    }
};

namespace {

Field advection(const VectorField& u, const Field& f) {
    VectorField g = physical_gradient(f);
    return dealiased_product(u.x, g.x) + dealiased_product(u.y, g.y);
}

void hyperviscosity(Field& f, double nu, double dt) {
    const auto& d = *f.dom;
    const std::size_t R = d.grid.rows(), M = d.grid.modes(), W = 2 * M;
    Vec s(R * W);
    d.fft->forward(f.v.data(), s.data());
    for (std::size_t m = 0; m < M; ++m) {
        const double k = d.grid.wavenumber(m);
        const double damp = std::exp(-nu * k * k * k * k * dt);
        for (std::size_t j = 0; j < R; ++j) s[j * W + 2 * m] *= damp, s[j * W + 2 * m + 1] *= damp;
    }
    d.fft->inverse(s.data(), f.v.data());
}

}  // namespace

StepInfo Stepper::step_generic(State& s, double dt) {
    Generic& G = *gen_;
    G.factor(d_, p_, dt);
    ensure_derived(s);
    s.spectral = false;
    const std::size_t n1 = d_->grid.n1();

    Field nw = advection(s.u, s.omega);
    VectorField gth = physical_gradient(s.theta);
    const double sw = 1.0 / (p_.Pr * dt);
    Field rhs = sw * s.omega;
    for (std::size_t k = 0; k < rhs.v.size(); ++k) rhs.v[k] += -nw.v[k] / p_.Pr + p_.Ra * gth.x.v[k];

    auto [wb, wt] = G.walls(s.phi);
    Field w = s.omega, phi = s.phi;
    StepInfo info;
    for (int k = 1; k <= p_.K_max; ++k) {
        w = G.hw->solve_dirichlet(rhs, wb, wt, nullptr, &w);
        phi = G.sf.solve(w, p_.mean_flux, nullptr, &phi);
        auto [nb, nt] = G.walls(phi);
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n1; ++i) {
            diff = std::max({diff, std::abs(nb[i] - wb[i]), std::abs(nt[i] - wt[i])});
            scale = std::max({scale, std::abs(nb[i]), std::abs(nt[i])});
        }
        wb = std::move(nb);
        wt = std::move(nt);
        info.sweeps = k;
        info.coupling_residual = diff / std::max(scale, 1e-14);
        if (k >= p_.K && info.coupling_residual <= p_.coupling_tol) break;
    }
    const std::size_t N = d_->grid.n2();
    for (std::size_t i = 0; i < n1; ++i) w(0, i) = wb[i], w(N, i) = wt[i];

    Field nth = advection(s.u, s.theta);
    if (p_.mode == Mode::diffusive) {
        Field r = (1.0 / dt) * s.theta;
        r -= nth;
        s.theta = G.ht->solve_dirichlet(r, std::vector<double>(n1, 1.0), std::vector<double>(n1, 0.0), nullptr,
                                        &s.theta);
    } else {
        Field t1 = s.theta - dt * nth;
        Field t2 = t1 - dt * advection(s.u, t1);
        t2 = 0.75 * s.theta + 0.25 * t2;
        Field t3 = t2 - dt * advection(s.u, t2);
        s.theta = (1.0 / 3.0) * s.theta + (2.0 / 3.0) * t3;
        if (p_.nu_h > 0.0) hyperviscosity(s.theta, p_.nu_h, dt);
    }
    s.omega = std::move(w);
    s.phi = std::move(phi);
    s.u = perp_gradient(s.phi);
    s.derived = true;
    return info;
}

// ===========================================================================
// Stepper

Stepper::Stepper(DomainPtr d, SimParams p) : d_(std::move(d)), p_(std::move(p)) {
    p_.validate();
    p_.slip.validate(d_->geom.period(), 4 * d_->grid.n1());
    fast_ = d_->geom.flat() && std::abs(d_->geom.mean_gap() - 1.0) < 1e-14 && p_.slip.is_constant() &&
            !p_.force_generic;
    if (fast_) flat_ = std::make_unique<Flat>(*d_, p_);
    else gen_ = std::make_unique<Generic>(d_, p_);
}

Stepper::~Stepper() = default;

void Stepper::sync(State& s) const {
    if (!s.spectral || !s.physical_stale) return;
    d_->fft->inverse(s.omega_hat.data(), s.omega.v.data());
    d_->fft->inverse(s.theta_hat.data(), s.theta.v.data());
    s.physical_stale = false;
}

void Stepper::ensure_derived(State& s) const {
    sync(s);
    if (s.derived) return;
    if (fast_) {
        const Domain& d = *d_;
        const std::size_t R = d.grid.rows(), W = 2 * d.grid.modes();
        flat_->to_spectral(d, s);
        Vec ph(R * W), t(R * W);
        flat_->phi_from_omega(d, p_.mean_flux, s.omega_hat, ph);
        s.phi = Field(d_);
        d.fft->inverse(ph.data(), s.phi.v.data());
        // Walls are exactly constant.
        const std::size_t n1 = d.grid.n1(), N = d.grid.n2();
        for (std::size_t i = 0; i < n1; ++i) s.phi(0, i) = 0.0, s.phi(N, i) = -p_.mean_flux;
        s.u = VectorField(d_);
        spec::d2_rows(R, W, d.grid.dy2(), ph.data(), t.data());
        for (double& v : t) v = -v;
        d.fft->inverse(t.data(), s.u.x.v.data());
        spec::d1(d.grid, R, ph.data(), t.data());
        d.fft->inverse(t.data(), s.u.y.v.data());
    } else {
        s.phi = gen_->sf.solve(s.omega, p_.mean_flux);
        s.u = perp_gradient(s.phi);
    }
    s.derived = true;
}

const Field& Stepper::pressure(State& s) const {
    if (!s.p) {
        ensure_derived(s);
        s.p = solve_pressure_neumann(s.u, s.theta, p_.Ra, p_.Pr, p_.slip, p_.solver);
    }
    return *s.p;
}

namespace {

double limit_from(double rate, double umax2, const SimParams& p) {
    double dt = p.dt_max;
    if (rate > 0.0) dt = std::min(dt, p.cfl / rate);
    // Explicit advection against implicit diffusion stays stable for |u|^2 dt <= 2 nu.
    if (umax2 > 0.0) dt = std::min(dt, 2.0 * std::min(p.Pr, 1.0) / umax2);
    return dt;
}

double cfl_limit(const State& s, const SimParams& p) {
    const auto& d = *s.omega.dom;
    const std::size_t n1 = d.grid.n1();
    const double dy1 = d.grid.dy1(), dy2 = d.grid.dy2();
    double rate = 0.0, umax2 = 0.0;
    for (std::size_t j = 0; j < d.grid.rows(); ++j)
        for (std::size_t i = 0; i < n1; ++i) {
            const double a = std::abs(s.u.x(j, i)), b = std::abs(s.u.y(j, i));
            rate = std::max({rate, a / dy1, b / (d.map.gap(i) * dy2)});
            umax2 = std::max(umax2, a * a + b * b);
        }
    return limit_from(rate, umax2, p);
}

}  // namespace

double Stepper::cfl_dt(State& s) {
    ensure_derived(s);
    return cfl_limit(s, p_);
}

double cfl_dt(State& s, const SimParams& p) {
    if (!s.derived) {
        s.phi = solve_streamfunction(s.omega, p.mean_flux, p.solver);
        s.u = perp_gradient(s.phi);
        s.derived = true;
    }
    return cfl_limit(s, p);
}

double Stepper::choose_dt(State& s) { return pick_dt(s, cfl_dt(s)); }

double Stepper::pick_dt(State& s, double lim) const {
    if (p_.dt > 0.0) {
        if (p_.dt > lim * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "step " << s.step << ": dt = " << p_.dt << " violates the CFL limit; suggested dt = "
               << 0.9 * lim;
            throw Error(os.str());
        }
        return p_.dt;
    }
    if (s.dt <= 0.0 || s.dt > lim || s.dt < 0.6 * lim) s.dt = 0.9 * lim;
    return s.dt;
}

StepInfo Stepper::advance(State& s, double target) {
    double lim;
    if (fast_) {
        flat_->prepare(*d_, p_, s);
        lim = limit_from(flat_->rate, flat_->umax2, p_);
    } else {
        ensure_derived(s);
        lim = cfl_limit(s, p_);
    }
    double dt = pick_dt(s, lim);
    bool landed = false;
    if (s.t + dt >= target - 1e-9 * dt) {
        dt = target - s.t;
        landed = true;
    }
    StepInfo info = step(s, dt);
    if (landed) s.t = target, info.t = target;
    return info;
}

StepInfo Stepper::step(State& s, double dt) {
    if (!(dt > 0.0)) throw Error("step: dt must be positive");
    StepInfo info = fast_ ? step_flat(s, dt) : step_generic(s, dt);
    s.p.reset();
    s.t += dt;
    ++s.step;
    const Vec& wv = s.spectral ? s.omega_hat : s.omega.v;
    const Vec& tv = s.spectral ? s.theta_hat : s.theta.v;
    for (std::size_t k = 0; k < wv.size(); ++k)
        if (!std::isfinite(wv[k]) || !std::isfinite(tv[k])) {
            std::ostringstream os;
            os << "step " << s.step << " (t = " << s.t << "): non-finite values";
            throw Error(os.str());
        }
    info.step = s.step;
    info.t = s.t;
    info.dt = dt;
    return info;
}

// ===========================================================================
// Driver

RunResult run(const DomainPtr& d, const SimParams& p, State initial, const RunOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    Stepper st(d, p);
    State& s = res.state;
    s = std::move(initial);
    auto emit = [&](const StepInfo& info) {
        for (const auto& sink : opt.sinks) sink(s, info);
        ++res.samples;
    };
    if (p.T > s.t) {
        StepInfo info;
        info.step = s.step;
        info.t = s.t;
        st.ensure_derived(s);
        emit(info);
        const double t_start = s.t;
        long k_next = 1;
        auto next_sample = [&] {
            return opt.sample_dt > 0.0 ? t_start + static_cast<double>(k_next) * opt.sample_dt
                                       : std::numeric_limits<double>::infinity();
        };
        while (s.t < p.T) {
            const double target = std::min(p.T, next_sample());
            info = st.advance(s, target);
            const bool landed = s.t == target;
            ++res.steps;
            bool sample = false;
            if (opt.sample_dt > 0.0) {
                if (landed && target == next_sample()) {
                    sample = true;
                    ++k_next;
                }
            } else if (opt.cadence > 0 && s.step % opt.cadence == 0) {
                sample = true;
            }
            if (s.t >= p.T) sample = true;
            if (sample) {
                st.ensure_derived(s);
                emit(info);
            }
        }
    }
    st.ensure_derived(s);
    if (!opt.checkpoint_dir.empty()) write_checkpoint(opt.checkpoint_dir, s, opt.config_hash);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// ===========================================================================
// Checkpoints

namespace {

// Spectral rows of a real field fit in N1 doubles: re0, re_nyquist, then re/im
// of modes 1..M-2 (the imaginary parts of the mean and Nyquist modes are 0).
Field pack_spectral(const DomainPtr& d, const Vec& hat) {
    Field f(d);
    const std::size_t n1 = d->grid.n1(), W = n1 + 2;
    for (std::size_t j = 0; j < d->grid.rows(); ++j) {
        const double* r = &hat[j * W];
        double* o = f.row(j);
        o[0] = r[0];
        o[1] = r[W - 2];
        std::copy(r + 2, r + W - 2, o + 2);
    }
    return f;
}

Vec unpack_spectral(const Field& f) {
    const std::size_t n1 = f.n1(), W = n1 + 2;
    Vec hat(f.dom->grid.rows() * W, 0.0);
    for (std::size_t j = 0; j < f.dom->grid.rows(); ++j) {
        const double* o = f.row(j);
        double* r = &hat[j * W];
        r[0] = o[0];
        r[W - 2] = o[1];
        std::copy(o + 2, o + n1, r + 2);
    }
    return hat;
}

}  // namespace

void write_checkpoint(const std::string& dir, const State& s, const std::string& config_hash) {
    if (s.spectral && s.physical_stale) throw Error("checkpoint: physical fields are stale; sync first");
    std::filesystem::create_directories(dir);
    write_snapshot(dir + "/omega.slpf", "omega", s.omega);
    write_snapshot(dir + "/theta.slpf", "theta", s.theta);
    if (s.spectral) {
        write_snapshot(dir + "/omega_hat.slpf", "omega_hat", pack_spectral(s.omega.dom, s.omega_hat));
        write_snapshot(dir + "/theta_hat.slpf", "theta_hat", pack_spectral(s.omega.dom, s.theta_hat));
    } else {
        std::filesystem::remove(dir + "/omega_hat.slpf");
        std::filesystem::remove(dir + "/theta_hat.slpf");
    }
    nlohmann::json j;
    j["t"] = s.t;
    j["step"] = s.step;
    j["dt"] = s.dt;
    j["config_hash"] = config_hash;
    j["n1"] = s.omega.n1();
    j["n2"] = s.omega.n2();
    std::ofstream os(dir + "/state.json");
    if (!os) throw Error("checkpoint: cannot write " + dir + "/state.json");
    os << j.dump(2) << "\n";
}

State read_checkpoint(const std::string& dir, const DomainPtr& d, std::string* config_hash) {
    std::ifstream is(dir + "/state.json");
    if (!is) throw Error("checkpoint: cannot read " + dir + "/state.json");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw Error("checkpoint: malformed state.json: " + std::string(e.what()));
    }
    State s;
    s.t = j.at("t").get<double>();
    s.step = j.at("step").get<long>();
    s.dt = j.at("dt").get<double>();
    if (config_hash) *config_hash = j.value("config_hash", "");
    s.omega = read_snapshot_field(dir + "/omega.slpf", d);
    s.theta = read_snapshot_field(dir + "/theta.slpf", d);
    if (std::filesystem::exists(dir + "/omega_hat.slpf")) {
        s.omega_hat = unpack_spectral(read_snapshot_field(dir + "/omega_hat.slpf", d));
        s.theta_hat = unpack_spectral(read_snapshot_field(dir + "/theta_hat.slpf", d));
        s.spectral = true;
        s.physical_stale = false;
    }
    return s;
}

}  // namespace slip
