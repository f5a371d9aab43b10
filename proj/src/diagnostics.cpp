#include "slip/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "slip/harness.hpp"

namespace slip {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// int_a^b of the piecewise-linear interpolant of column values f(j), 0 <= a <= b <= 1.
template <class F>
double column_segment(F&& f, std::size_t N, double h, double a, double b) {
    if (!(b > a)) return 0.0;
    auto cell = [&](double y) {
        auto j = static_cast<std::size_t>(std::floor(y / h));
        return std::min(j, N - 1);
    };
    auto interp = [&](double y, std::size_t j) {
        const double w = (y - static_cast<double>(j) * h) / h;
        return (1.0 - w) * f(j) + w * f(j + 1);
    };
    const std::size_t ja = cell(a), jb = cell(b);
    const double fa = interp(a, ja), fb = interp(b, jb);
    if (ja == jb) return 0.5 * (b - a) * (fa + fb);
    double s = 0.5 * (static_cast<double>(ja + 1) * h - a) * (fa + f(ja + 1));
    for (std::size_t j = ja + 1; j < jb; ++j) s += 0.5 * h * (f(j) + f(j + 1));
    s += 0.5 * (b - static_cast<double>(jb) * h) * (f(jb) + fb);
    return s;
}

std::vector<double> slip_samples(const Domain& d, const SlipSpec& slip, Side s) {
    std::vector<double> a(d.grid.n1());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = slip.on(s).value(d.geom.x1(i), d.geom.period());
    return a;
}

// d/dy1 of one periodic row.
std::vector<double> row_derivative(const Domain& d, const std::vector<double>& f) {
    const std::size_t n1 = d.grid.n1(), w = 2 * d.grid.modes();
    Vec in(n1), s(w), out(n1);
    std::copy(f.begin(), f.end(), in.begin());
    d.fft_row->forward(in.data(), s.data());
    spec::d1(d.grid, 1, s.data(), s.data());
    d.fft_row->inverse(s.data(), out.data());
    return std::vector<double>(out.begin(), out.end());
}

double sq(double x) { return x * x; }

double rel3(double a, double b, double scale) { return scale > 0.0 ? std::abs(a - b) / scale : 0.0; }

void require_derived(const State& s, const char* who) {
    if (!s.derived) throw Error(std::string(who) + ": derived fields (phi, u) not available");
}

}  // namespace

// ===========================================================================
// Nusselt number

double nusselt_flux(const Field& theta) {
    const auto& d = *theta.dom;
    const std::size_t n1 = d.grid.n1();
    std::vector<double> t2(n1);
    spec::d2_wall(d.grid.rows(), n1, d.grid.dy2(), theta.v.data(), Side::bottom, t2.data());
    auto t1 = row_derivative(d, wall_trace(theta, Side::bottom));
    const auto& hp = d.geom.dh_samples(Side::bottom);
    // n ds = (h', -1) dx1 and grad theta = (t1 - (h'/g) t2, t2/g).
    double s = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
        const double g = d.map.gap(i);
        s += hp[i] * t1[i] - (1.0 + hp[i] * hp[i]) / g * t2[i];
    }
    return s * d.grid.dy1() / d.geom.period();
}

double nusselt_gradient_sample(const Field& theta) {
    const double n = lp_norm(physical_gradient(theta), 2.0);
    return n * n / theta.dom->geom.period();
}

double nusselt_strip(const Field& theta, const VectorField& u, double delta) {
    const auto& d = *theta.dom;
    if (!(delta > 0.0) || !(delta < d.geom.min_gap()))
        throw Error("nusselt_strip: need 0 < delta < min gap (" + std::to_string(d.geom.min_gap()) + ")");
    VectorField gt = physical_gradient(theta);
    const std::size_t n1 = d.grid.n1(), N = d.grid.n2();
    const auto& hp = d.geom.dh_samples(Side::bottom);
    double total = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
        const double g = d.map.gap(i), sp = std::sqrt(1.0 + hp[i] * hp[i]);
        const double n1p = -hp[i] / sp, n2p = 1.0 / sp;
        auto f = [&](std::size_t j) {
            const double th = theta(j, i);
            return n1p * (u.x(j, i) * th - gt.x(j, i)) + n2p * (u.y(j, i) * th - gt.y(j, i));
        };
        total += g * column_segment(f, N, d.grid.dy2(), 0.0, delta / g);
    }
    return total * d.grid.dy1() / (delta * d.geom.period());
}

double nusselt_convective(const Field& theta, const VectorField& u) {
    const auto& d = *theta.dom;
    VectorField gt = physical_gradient(theta);
    Field f(theta.dom);
    for (std::size_t k = 0; k < f.v.size(); ++k) f.v[k] = u.y.v[k] * theta.v[k] - gt.y.v[k];
    const double height = d.geom.max_height(Side::top) - d.geom.min_height(Side::bottom);
    return integrate_area(f) / (height * d.geom.period());
}

BackgroundProfile background_profile(const DomainPtr& d, double delta) {
    if (!d->geom.identical_profiles())
        throw Error("background_profile: requires identical wall profiles (h+ = 1 + h-)");
    if (!(delta > 0.0) || delta > 0.5) throw Error("background_profile: need 0 < delta <= 1/2");
    BackgroundProfile b;
    b.delta = delta;
    b.eta = Field(d);
    b.grad_eta = VectorField(d);
    b.mask = Field(d);
    const auto& hp = d->geom.dh_samples(Side::bottom);
    const std::size_t n1 = d->grid.n1();
    for (std::size_t j = 0; j <= d->grid.n2(); ++j) {
        const double y = d->grid.y2(j);  // x2 - h- since the gap is 1
        for (std::size_t i = 0; i < n1; ++i) {
            double e = 0.5;
            bool in = true;
            if (y <= delta)
                e = (2.0 * delta - y) / (2.0 * delta);
            else if (y >= 1.0 - delta)
                e = (1.0 - y) / (2.0 * delta);
            else
                in = false;
            b.eta(j, i) = e;
            b.mask(j, i) = in ? 1.0 : 0.0;
            b.grad_eta.x(j, i) = in ? hp[i] / (2.0 * delta) : 0.0;
            b.grad_eta.y(j, i) = in ? -1.0 / (2.0 * delta) : 0.0;
        }
    }
    for (std::size_t i = 0; i < n1; ++i) {
        if (std::abs(b.eta(0, i) - 1.0) > 1e-12 || std::abs(b.eta(d->grid.n2(), i)) > 1e-12)
            throw Error("background_profile: wall values of eta off by more than 1e-12");
    }
    return b;
}

BackgroundTerms background_terms(const Field& theta, const VectorField& u, double delta) {
    const auto& d = *theta.dom;
    if (!d.geom.identical_profiles())
        throw Error("background_terms: requires identical wall profiles (h+ = 1 + h-)");
    if (!(delta > 0.0) || delta > 0.5) throw Error("background_terms: need 0 < delta <= 1/2");
    VectorField gt = physical_gradient(theta);
    const std::size_t n1 = d.grid.n1(), N = d.grid.n2();
    const double h = d.grid.dy2(), c = 1.0 / (2.0 * delta);
    const auto& hp = d.geom.dh_samples(Side::bottom);
    auto eta = [&](double y) {
        return y <= delta ? (2.0 * delta - y) * c : (y >= 1.0 - delta ? (1.0 - y) * c : 0.5);
    };
    double ge2 = 0.0, cross = 0.0, adv = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
        ge2 += (1.0 + hp[i] * hp[i]) * c * c * 2.0 * delta;
        auto fc = [&](std::size_t j) { return c * (hp[i] * gt.x(j, i) - gt.y(j, i)); };
        auto fa = [&](std::size_t j) {
            return (theta(j, i) - eta(d.grid.y2(j))) * c * (hp[i] * u.x(j, i) - u.y(j, i));
        };
        // eta is linear inside each strip, so interpolating varsigma there is
        // as accurate as interpolating theta.
        cross += column_segment(fc, N, h, 0.0, delta) + column_segment(fc, N, h, 1.0 - delta, 1.0);
        adv += column_segment(fa, N, h, 0.0, delta) + column_segment(fa, N, h, 1.0 - delta, 1.0);
    }
    const double dx = d.grid.dy1();
    BackgroundTerms t;
    t.grad_eta2 = ge2 * dx;
    t.advective = adv * dx;
    const double gth = lp_norm(gt, 2.0);
    t.grad_varsigma2 = gth * gth - 2.0 * cross * dx + t.grad_eta2;
    t.value = (t.grad_eta2 - 2.0 * t.advective - t.grad_varsigma2) / d.geom.period();
    return t;
}

NusseltEstimates nusselt_estimates(const Field& theta, const VectorField& u,
                                   const std::vector<double>& strip_deltas, double delta_bg) {
    NusseltEstimates e;
    e.nu_flux = nusselt_flux(theta);
    e.nu_gradient = nusselt_gradient_sample(theta);
    for (double dl : strip_deltas) e.nu_strip.emplace_back(dl, nusselt_strip(theta, u, dl));
    e.nu_convective = nusselt_convective(theta, u);
    e.delta_bg = delta_bg;
    if (theta.dom->geom.identical_profiles() && delta_bg > 0.0)
        e.nu_background = background_terms(theta, u, delta_bg).value;
    return e;
}

// ===========================================================================
// Energy and gradient identities

EnergyTerms energy_terms(const VectorField& u, const Field& theta, const SlipSpec& slip) {
    const auto& d = *u.x.dom;
    EnergyTerms e;
    e.kinetic = sq(lp_norm(u, 2.0));
    TensorField g = velocity_gradient(u);
    e.grad_u2 = sq(lp_norm(g, 2.0));
    TensorField s;
    s.t[0][0] = g.t[0][0];
    s.t[1][1] = g.t[1][1];
    s.t[0][1] = 0.5 * (g.t[0][1] + g.t[1][0]);
    s.t[1][0] = s.t[0][1];
    e.sym_grad2 = sq(lp_norm(s, 2.0));
    e.vort2 = sq(lp_norm(g.t[1][0] - g.t[0][1], 2.0));
    for (Side side : {Side::bottom, Side::top}) {
        auto ut = tangential_velocity(u, side);
        auto a = slip_samples(d, slip, side);
        const auto& k = d.frame(side).kappa;
        std::vector<double> fa(ut.size()), fk(ut.size());
        for (std::size_t i = 0; i < ut.size(); ++i) {
            fa[i] = a[i] * ut[i] * ut[i];
            fk[i] = k[i] * ut[i] * ut[i];
        }
        e.wall_slip += integrate_boundary(fa, u.x.dom, side);
        e.wall_kappa += integrate_boundary(fk, u.x.dom, side);
    }
    Field tu(theta.dom);
    for (std::size_t k = 0; k < tu.v.size(); ++k) tu.v[k] = theta.v[k] * u.y.v[k];
    e.buoyancy = integrate_area(tu);
    return e;
}

double energy_balance_residual(const EnergyTerms& a, const EnergyTerms& b, double dt, const SimParams& p) {
    if (!(dt > 0.0)) throw Error("energy_balance_residual: dt must be > 0");
    const double rate = (b.kinetic - a.kinetic) / (2.0 * p.Pr * dt);
    const double diss = (a.sym_grad2 + b.sym_grad2);            // 2 ||Du||^2, averaged
    const double wall = (a.wall_slip + b.wall_slip);            // 2 int alpha u_tau^2, averaged
    const double forcing = 0.5 * p.Ra * (a.buoyancy + b.buoyancy);
    const double r = std::abs(rate + diss + wall - forcing);
    const double scale = std::max({std::abs(rate), std::abs(diss), std::abs(wall), std::abs(forcing)});
    return scale > 0.0 ? r / scale : 0.0;
}

double energy_balance_residual(const State& prev, const State& next, const SimParams& p) {
    require_derived(prev, "energy_balance_residual");
    require_derived(next, "energy_balance_residual");
    return energy_balance_residual(energy_terms(prev.u, prev.theta, p.slip), energy_terms(next.u, next.theta, p.slip),
                                   next.t - prev.t, p);
}

std::array<double, 3> grad_identity_residuals(const EnergyTerms& e) {
    const double A = 2.0 * e.sym_grad2 - e.wall_kappa;
    const double B = e.grad_u2;
    const double C = e.vort2 + e.wall_kappa;
    const double scale = std::max({std::abs(A), std::abs(B), std::abs(C)});
    return {rel3(A, B, scale), rel3(B, C, scale), rel3(A, C, scale)};
}

std::array<double, 3> grad_identity_residuals(const VectorField& u) {
    Field zero(u.x.dom);
    return grad_identity_residuals(energy_terms(u, zero, SlipSpec::constant(0.0)));
}

double laplacian_vorticity_residual(const VectorField& u) {
    VectorField lap(laplacian(u.x), laplacian(u.y));
    VectorField pg = perp_gradient(vorticity(u));
    const double a = l2_norm_interior(lap), b = l2_norm_interior(pg);
    lap.x -= pg.x;
    lap.y -= pg.y;
    const double scale = std::max(a, b);
    return scale > 0.0 ? l2_norm_interior(lap) / scale : 0.0;
}

Field random_wall_constant_phi(const DomainPtr& d, std::mt19937_64& rng, int modes) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2.0 * kPi);
    const auto& g = d->grid;
    const double L = g.period();
    Field phi(d);
    for (int m = 0; m <= modes; ++m)
        for (int l = 1; l <= modes; ++l) {
            const double c = coef(rng) / (1.0 + m * m + l * l), ph = phase(rng);
            for (std::size_t j = 0; j <= g.n2(); ++j) {
                const double sy = std::sin(l * kPi * g.y2(j));
                for (std::size_t i = 0; i < g.n1(); ++i)
                    phi(j, i) += c * sy * std::cos(2.0 * kPi * m * g.y1(i) / L + ph);
            }
        }
    // Uniform-flux part: phi varies linearly across the gap.
    const double q = 0.2 * coef(rng);
    for (std::size_t j = 0; j <= g.n2(); ++j)
        for (std::size_t i = 0; i < g.n1(); ++i) phi(j, i) += q * g.y2(j);
    return phi;
}

double coercivity_ratio(const VectorField& u, const SlipSpec& slip) {
    Field zero(u.x.dom);
    EnergyTerms e = energy_terms(u, zero, slip);
    const double den = e.kinetic + e.grad_u2;
    if (!(den > 0.0)) throw Error("coercivity_ratio: zero velocity field");
    return (e.sym_grad2 + e.wall_slip) / den;
}

CoercivityResult coercivity_probe(const DomainPtr& d, const SlipSpec& slip, int ensemble, std::uint64_t seed) {
    if (ensemble < 10) throw Error("coercivity_probe: ensemble must be >= 10");
    std::mt19937_64 rng(seed);
    CoercivityResult r;
    r.min_ratio = std::numeric_limits<double>::infinity();
    r.max_ratio = 0.0;
    double sum = 0.0;
    for (int k = 0; k < ensemble; ++k) {
        VectorField u = perp_gradient(random_wall_constant_phi(d, rng));
        const double q = coercivity_ratio(u, slip);
        r.min_ratio = std::min(r.min_ratio, q);
        r.max_ratio = std::max(r.max_ratio, q);
        sum += q;
    }
    r.mean_ratio = sum / ensemble;
    r.samples = ensemble;
    r.c2_inverse = 1.0 / bound_coefficients(*d, slip).C2;
    return r;
}

std::array<double, 2> boundary_pressure_work(const VectorField& u, const Field& p, const SlipSpec& slip) {
    const auto& d = *u.x.dom;
    VectorField gp = physical_gradient(p);
    double direct = 0.0, ibp = 0.0;
    for (Side side : {Side::bottom, Side::top}) {
        const auto& fr = d.frame(side);
        auto a = slip_samples(d, slip, side);
        auto ux = wall_trace(u.x, side), uy = wall_trace(u.y, side);
        auto px = wall_trace(gp.x, side), py = wall_trace(gp.y, side);
        auto ut = tangential_velocity(u, side);
        auto pw = wall_trace(p, side);
        const std::size_t n1 = ux.size();
        std::vector<double> fd(n1), w(n1);
        for (std::size_t i = 0; i < n1; ++i) {
            fd[i] = (a[i] + fr.kappa[i]) * (ux[i] * px[i] + uy[i] * py[i]);
            w[i] = (a[i] + fr.kappa[i]) * ut[i];
        }
        direct += integrate_boundary(fd, u.x.dom, side);
        // tau.grad = (sign / s') d/dy1 along the wall, sign = +1 bottom, -1 top.
        auto dw = row_derivative(d, w);
        const double sign = side == Side::bottom ? 1.0 : -1.0;
        double s = 0.0;
        for (std::size_t i = 0; i < n1; ++i) s += pw[i] * sign * dw[i];
        ibp -= s * d.grid.dy1();
    }
    return {direct, ibp};
}

// ===========================================================================
// Non-diffusive monitors

double hydrostatic_residual(const Field& p, const Field& theta, const SolverOptions& opt) {
    VectorField r = physical_gradient(p);
    r.y -= theta;
    return hminus1_proxy(r, opt);
}

NdMonitors nd_monitors(State& s, const SimParams& p, double beta, double gamma) {
    require_derived(s, "nd_monitors");
    if (!s.p) s.p = solve_pressure_neumann(s.u, s.theta, p.Ra, p.Pr, p.slip, p.solver);
    NdMonitors m;
    m.theta_l2 = lp_norm(s.theta, 2.0);
    m.theta_l4 = lp_norm(s.theta, 4.0);
    m.u_l2 = lp_norm(s.u, 2.0);
    m.u_h1 = std::sqrt(sq(m.u_l2) + sq(lp_norm(velocity_gradient(s.u), 2.0)));
    m.hydrostatic = hydrostatic_residual(*s.p, s.theta, p.solver);
    Field ref = sample(s.theta.dom, [&](double, double x2) { return beta * x2 + gamma; });
    m.theta_hat_l2 = lp_norm(s.theta - ref, 2.0);
    return m;
}

DecayVerdict decay_detector(const std::vector<double>& t, const std::vector<double>& f, double C, double eps,
                            std::optional<double> budget) {
    if (t.size() != f.size()) throw Error("decay_detector: time and value series differ in length");
    if (t.size() < 3) throw Error("decay_detector: need at least 3 samples");
    if (!(C > 0.0) || !(eps > 0.0)) throw Error("decay_detector: C and eps must be > 0");
    const std::size_t n = t.size();
    const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-6 * dt) throw Error("decay_detector: samples are not uniform in time");
    DecayVerdict v;
    for (std::size_t k = 0; k < n; ++k)
        if (f[k] < 0.0) {
            v.reason = "f >= 0 violated at t = " + std::to_string(t[k]);
            return v;
        }
    for (std::size_t k = 1; k < n; ++k)
        if ((f[k] - f[k - 1]) / dt > C * (1.0 + 1e-6)) {
            v.reason = "f' <= C violated at t = " + std::to_string(t[k]);
            return v;
        }
    const std::size_t half = (n - 1) / 2;
    double tail = 0.0;
    for (std::size_t k = half; k + 1 < n; ++k) tail += 0.5 * (f[k] + f[k + 1]) * dt;
    const double cap = budget ? *budget : eps * (t.back() - t[half]);
    if (!(tail < cap)) {
        v.reason = "L1 budget exceeded (tail integral " + std::to_string(tail) + " >= " + std::to_string(cap) + ")";
        return v;
    }
    if (!(f.back() < eps)) {
        v.reason = "f >= eps at the end of the horizon";
        return v;
    }
    std::size_t k = n - 1;
    while (k > 0 && f[k - 1] < eps) --k;
    v.found = true;
    v.T = t[k];
    return v;
}

// ===========================================================================
// Records

Window window_from_fraction(double T, double start_fraction) {
    if (!(start_fraction >= 0.0 && start_fraction <= 1.0)) throw Error("window: start fraction must be in [0, 1]");
    return Window{T * start_fraction, T};
}

std::size_t DiagnosticsRecord::index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error("record: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

bool DiagnosticsRecord::has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<double> DiagnosticsRecord::column(const std::string& name) const {
    const std::size_t c = index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

void DiagnosticsRecord::write_csv(const std::string& path, const std::vector<std::string>& comments) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    for (const auto& c : comments) os << "# " << c << '\n';
    for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
    os << '\n';
    char buf[32];
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", r[k]);
            os << (k ? "," : "") << buf;
        }
        os << '\n';
    }
    if (!os) throw Error("write failed: " + path);
}

DiagnosticsRecord DiagnosticsRecord::read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    DiagnosticsRecord r;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (!header) {
            while (std::getline(ss, cell, ',')) r.columns.push_back(cell);
            header = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() != r.columns.size()) throw Error(path + ": row width differs from header");
        r.rows.push_back(std::move(row));
    }
    if (!header) throw Error(path + ": missing header");
    return r;
}

double window_average(const DiagnosticsRecord& r, const std::string& name, const Window& w) {
    const std::size_t c = r.index(name), tc = r.index("t");
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : r.rows)
        if (w.contains(row[tc]) && std::isfinite(row[c])) pts.emplace_back(row[tc], row[c]);
    if (pts.empty()) throw Error("window_average: no samples of '" + name + "' in the window");
    if (pts.size() == 1) return pts[0].second;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double dt = pts[k].first - pts[k - 1].first;
        num += 0.5 * dt * (pts[k].second + pts[k - 1].second);
        den += dt;
    }
    if (!(den > 0.0)) return pts.back().second;
    return num / den;
}

double window_max(const DiagnosticsRecord& r, const std::string& name, const Window& w) {
    const std::size_t c = r.index(name), tc = r.index("t");
    double m = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& row : r.rows)
        if (w.contains(row[tc]) && std::isfinite(row[c])) {
            m = std::max(m, row[c]);
            any = true;
        }
    if (!any) throw Error("window_max: no samples of '" + name + "' in the window");
    return m;
}

double column_min(const DiagnosticsRecord& r, const std::string& name) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : r.column(name))
        if (std::isfinite(v)) m = std::min(m, v);
    return m;
}

double column_max(const DiagnosticsRecord& r, const std::string& name) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : r.column(name))
        if (std::isfinite(v)) m = std::max(m, v);
    return m;
}

namespace {

std::string delta_label(double d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", d);
    return buf;
}

}  // namespace

Recorder::Recorder(DomainPtr d, SimParams p, DiagnosticsOptions o)
    : d_(std::move(d)), p_(std::move(p)), o_(std::move(o)) {
    background_ = p_.mode == Mode::diffusive && d_->geom.identical_profiles() && o_.delta_bg > 0.0;
    auto& c = rec_.columns;
    c = {"t", "step", "dt", "theta_min", "theta_max", "theta_l2", "theta_l4", "kinetic", "grad_u2",
         "sym_grad2", "wall_slip", "u_h1", "energy_residual", "ut_proxy", "coupling_residual"};
    if (o_.identities) c.insert(c.end(), {"gid_ab", "gid_bc", "gid_ac"});
    if (p_.mode == Mode::diffusive) {
        c.insert(c.end(), {"nu_flux", "nu_gradient"});
        for (double dl : o_.strip_deltas) c.push_back("nu_strip_" + delta_label(dl));
        c.push_back("nu_convective");
        if (background_) c.push_back("nu_background_" + delta_label(o_.delta_bg));
    } else {
        c.insert(c.end(), {"hydrostatic", "theta_hat_l2"});
    }
}

void Recorder::operator()(State& s, const StepInfo& info) {
    require_derived(s, "Recorder");
    std::vector<double> row;
    row.reserve(rec_.columns.size());
    double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
    for (double v : s.theta.v) {
        tmin = std::min(tmin, v);
        tmax = std::max(tmax, v);
    }
    EnergyTerms e = energy_terms(s.u, s.theta, p_.slip);
    double eres = kNaN, ut = kNaN;
    if (prev_e_ && s.t > prev_t_) {
        eres = energy_balance_residual(*prev_e_, e, s.t - prev_t_, p_);
        VectorField du = s.u;
        du.x -= prev_u_->x;
        du.y -= prev_u_->y;
        ut = lp_norm(du, 2.0) / (s.t - prev_t_);
    }
    row.insert(row.end(), {s.t, static_cast<double>(info.step), info.dt, tmin, tmax, lp_norm(s.theta, 2.0),
                           lp_norm(s.theta, 4.0), e.kinetic, e.grad_u2, e.sym_grad2, e.wall_slip,
                           std::sqrt(e.kinetic + e.grad_u2), eres, ut, wall_coupling_residual(s, p_.slip)});
    if (o_.identities) {
        auto g = grad_identity_residuals(e);
        row.insert(row.end(), g.begin(), g.end());
    }
    if (p_.mode == Mode::diffusive) {
        row.push_back(nusselt_flux(s.theta));
        row.push_back(nusselt_gradient_sample(s.theta));
        for (double dl : o_.strip_deltas) row.push_back(nusselt_strip(s.theta, s.u, dl));
        row.push_back(nusselt_convective(s.theta, s.u));
        if (background_) row.push_back(background_terms(s.theta, s.u, o_.delta_bg).value);
    } else {
        NdMonitors m = nd_monitors(s, p_, o_.beta, o_.gamma);
        row.push_back(m.hydrostatic);
        row.push_back(m.theta_hat_l2);
    }
    rec_.rows.push_back(std::move(row));
    prev_e_ = e;
    prev_u_ = s.u;
    prev_t_ = s.t;
}

}  // namespace slip
