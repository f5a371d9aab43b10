#include "slip/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

namespace slip {

// ===========================================================================
// Bound coefficients

BoundCoefficients bound_coefficients(const Domain& d, const SlipSpec& slip) {
    const auto& g = d.geom;
    const double L = g.period();
    double a_inf = 0.0, da_inf = 0.0, k_inf = 0.0, dk_inf = 0.0, c2 = 0.0, c3 = 0.0;
    for (Side side : {Side::bottom, Side::top}) {
        const auto& fr = d.frame(side);
        const auto& prof = g.profile(side);
        const double sign = side == Side::top ? 1.0 : -1.0;
        for (std::size_t i = 0; i < g.n1(); ++i) {
            const double x = g.x1(i);
            const double a = slip.on(side).value(x, L);
            if (!(a > 0.0)) throw Error("bound_coefficients: slip coefficient must be > 0 on the walls");
            const double sp = fr.sprime[i];
            const double hp = prof.d1(x, L), hpp = prof.d2(x, L), hppp = prof.d3(x, L);
            const double k = fr.kappa[i];
            const double dk = sign * (hppp * (1.0 + hp * hp) - 3.0 * hp * hpp * hpp) / std::pow(sp, 5);
            a_inf = std::max(a_inf, std::abs(a));
            da_inf = std::max(da_inf, std::abs(slip.on(side).d1(x, L)) / sp);
            k_inf = std::max(k_inf, std::abs(k));
            dk_inf = std::max(dk_inf, std::abs(dk) / sp);
            c2 = std::max(c2, (1.0 + std::abs(k)) / a);
            c3 = std::max(c3, std::abs(a + k));
        }
    }
    BoundCoefficients c;
    c.C1 = 1.0 + (a_inf + da_inf) + (k_inf + dk_inf) + a_inf * a_inf * a_inf + k_inf * k_inf * k_inf;
    c.C2 = 1.0 + c2;
    c.C3 = c3;
    return c;
}

// ===========================================================================
// Fits and bounds

FitResult fit_exponent(const std::vector<RaNu>& rows, double ra_min, double ra_max) {
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.Ra >= ra_min && r.Ra <= ra_max) {
            if (!(r.Ra > 0.0) || !(r.Nu > 0.0)) throw Error("fit_exponent: Ra and Nu must be > 0");
            x.push_back(std::log(r.Ra));
            y.push_back(std::log(r.Nu));
        }
    const std::size_t n = x.size();
    if (n < 3) throw Error("fit_exponent: need at least 3 rows in range, have " + std::to_string(n));
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw Error("fit_exponent: all Ra values coincide");
    FitResult f;
    f.n = static_cast<int>(n);
    f.beta = sxy / sxx;
    f.log_prefactor = my - f.beta * mx;
    double ssr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = y[k] - (f.log_prefactor + f.beta * x[k]);
        ssr += e * e;
    }
    f.residual = std::sqrt(ssr / static_cast<double>(n));
    f.stderr_beta = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    return f;
}

BoundReport bound_check(const std::vector<RaNu>& rows, const BoundCoefficients& c, double exponent) {
    if (rows.empty()) throw Error("bound_check: no rows");
    auto lo = std::min_element(rows.begin(), rows.end(), [](const RaNu& a, const RaNu& b) { return a.Ra < b.Ra; });
    const double s = std::sqrt(c.C2);
    BoundReport r;
    r.exponent = exponent;
    r.C0 = lo->Nu / (s * std::pow(lo->Ra, exponent));
    r.max_margin = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        const double m = row.Nu / (r.C0 * s * std::pow(row.Ra, exponent));
        r.margins.push_back(m);
        r.max_margin = std::max(r.max_margin, m);
    }
    return r;
}

// ===========================================================================
// Regime tables

namespace {

// Inequality lhs <= rhs between monomials L_s^a Pr^b Ra^c, compared in logs.
struct Mono {
    double ls = 0.0, pr = 0.0, ra = 0.0;
};

struct Vars {
    double lls, lpr, lra;
};

double eval(const Mono& m, const Vars& v) { return m.ls * v.lls + m.pr * v.lpr + m.ra * v.lra; }

bool leq(const Mono& a, const Mono& b, const Vars& v) {
    const double x = eval(a, v), y = eval(b, v);
    const double tol = 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
    return x <= y + tol;
}

struct Cond {
    Mono lhs, rhs;
};

struct Row {
    const char* assumptions;
    std::vector<Cond> conds;
    const char* form;
    double ra_exp;
};

constexpr Mono one{};
constexpr Mono Ls{1, 0, 0};
constexpr Mono Pr{0, 1, 0};
Mono ra(double e) { return {0, 0, e}; }

const char* kRa512 = "Nu ≲ Ra^{5/12}";
const char* kLs112 = "Nu ≲ L_s^{-1/12}Pr^{-1/6}Ra^{1/2}";
const char* kLs12 = "Nu ≲ L_s^{-1/2}Pr^{-1/6}Ra^{1/2}";
const char* kLs213 = "Nu ≲ L_s^{-2/13}Ra^{5/13}";
const char* kLs13 = "Nu ≲ L_s^{-1/3}Ra^{1/3}";

const std::vector<Row>& table_by_slip_length() {
    static const std::vector<Row> t = {
        {"1 <= L_s, L_s^{-1/2}Ra^{1/2} <= Pr", {{one, Ls}, {{-0.5, 0, 0.5}, Pr}}, kRa512, 5.0 / 12.0},
        {"1 <= L_s, Pr <= L_s^{-1/2}Ra^{1/2}", {{one, Ls}, {Pr, {-0.5, 0, 0.5}}}, kLs112, 0.5},
        {"Ra^{-5/24} <= L_s <= 1, L_s^{-3}Ra^{1/2} <= Pr",
         {{ra(-5.0 / 24.0), Ls}, {Ls, one}, {{-3, 0, 0.5}, Pr}}, kRa512, 5.0 / 12.0},
        {"Ra^{-5/24} <= L_s <= 1, Pr <= L_s^{-3}Ra^{1/2}",
         {{ra(-5.0 / 24.0), Ls}, {Ls, one}, {Pr, {-3, 0, 0.5}}}, kLs12, 0.5},
        {"Ra^{-2/7} <= L_s <= Ra^{-5/24}, L_s^{-27/13}Ra^{9/13} <= Pr",
         {{ra(-2.0 / 7.0), Ls}, {Ls, ra(-5.0 / 24.0)}, {{-27.0 / 13.0, 0, 9.0 / 13.0}, Pr}}, kLs213, 5.0 / 13.0},
        {"Ra^{-2/7} <= L_s <= Ra^{-5/24}, Pr <= L_s^{-27/13}Ra^{9/13}",
         {{ra(-2.0 / 7.0), Ls}, {Ls, ra(-5.0 / 24.0)}, {Pr, {-27.0 / 13.0, 0, 9.0 / 13.0}}}, kLs12, 0.5},
        {"L_s <= Ra^{-2/7}, L_s^{-1}Ra <= Pr", {{Ls, ra(-2.0 / 7.0)}, {{-1, 0, 1}, Pr}}, kLs13, 1.0 / 3.0},
        {"L_s <= Ra^{-2/7}, Pr <= L_s^{-1}Ra", {{Ls, ra(-2.0 / 7.0)}, {Pr, {-1, 0, 1}}}, kLs12, 0.5},
    };
    return t;
}

const std::vector<Row>& table_by_prandtl() {
    static const std::vector<Row> t = {
        {"Ra^{9/7} <= Pr, Ra^{-5/24} <= L_s", {{ra(9.0 / 7.0), Pr}, {ra(-5.0 / 24.0), Ls}}, kRa512, 5.0 / 12.0},
        {"Ra^{9/7} <= Pr, Ra^{-2/7} <= L_s <= Ra^{-5/24}",
         {{ra(9.0 / 7.0), Pr}, {ra(-2.0 / 7.0), Ls}, {Ls, ra(-5.0 / 24.0)}}, kLs213, 5.0 / 13.0},
        {"Ra^{9/7} <= Pr, Pr^{-1}Ra <= L_s <= Ra^{-2/7}",
         {{ra(9.0 / 7.0), Pr}, {{0, -1, 1}, Ls}, {Ls, ra(-2.0 / 7.0)}}, kLs13, 1.0 / 3.0},
        {"Ra^{9/7} <= Pr, L_s <= Pr^{-1}Ra", {{ra(9.0 / 7.0), Pr}, {Ls, {0, -1, 1}}}, kLs12, 0.5},
        {"Ra^{8/9} <= Pr <= Ra^{9/7}, Ra^{-5/24} <= L_s",
         {{ra(8.0 / 9.0), Pr}, {Pr, ra(9.0 / 7.0)}, {ra(-5.0 / 24.0), Ls}}, kRa512, 5.0 / 12.0},
        {"Ra^{8/9} <= Pr <= Ra^{9/7}, Pr^{-13/27}Ra^{1/3} <= L_s <= Ra^{-5/24}",
         {{ra(8.0 / 9.0), Pr}, {Pr, ra(9.0 / 7.0)}, {{0, -13.0 / 27.0, 1.0 / 3.0}, Ls}, {Ls, ra(-5.0 / 24.0)}},
         kLs213, 5.0 / 13.0},
        {"Ra^{8/9} <= Pr <= Ra^{9/7}, L_s <= Pr^{-13/27}Ra^{1/3}",
         {{ra(8.0 / 9.0), Pr}, {Pr, ra(9.0 / 7.0)}, {Ls, {0, -13.0 / 27.0, 1.0 / 3.0}}}, kLs12, 0.5},
        {"Ra^{1/2} <= Pr <= Ra^{9/8}, Pr^{-1/3}Ra^{1/6} <= L_s",
         {{ra(0.5), Pr}, {Pr, ra(9.0 / 8.0)}, {{0, -1.0 / 3.0, 1.0 / 6.0}, Ls}}, kRa512, 5.0 / 12.0},
        {"Ra^{1/2} <= Pr <= Ra^{9/8}, L_s <= Pr^{-1/3}Ra^{1/6}",
         {{ra(0.5), Pr}, {Pr, ra(9.0 / 8.0)}, {Ls, {0, -1.0 / 3.0, 1.0 / 6.0}}}, kLs12, 0.5},
        {"Pr <= Ra^{1/2}, Pr^{-2}Ra <= L_s", {{Pr, ra(0.5)}, {{0, -2, 1}, Ls}}, kRa512, 5.0 / 12.0},
        {"Pr <= Ra^{1/2}, 1 <= L_s <= Pr^{-2}Ra", {{Pr, ra(0.5)}, {one, Ls}, {Ls, {0, -2, 1}}}, kLs112, 0.5},
        {"Pr <= Ra^{1/2}, L_s <= 1", {{Pr, ra(0.5)}, {Ls, one}}, kLs12, 0.5},
    };
    return t;
}

}  // namespace

RegimeResult regime_classify(double ls, double pr, double rav, RegimeTable table) {
    if (!(ls > 0.0) || !(pr > 0.0) || !(rav > 0.0)) throw Error("regime_classify: L_s, Pr and Ra must be > 0");
    const Vars v{std::log(ls), std::log(pr), std::log(rav)};
    const auto& rows = table == RegimeTable::by_slip_length ? table_by_slip_length() : table_by_prandtl();
    RegimeResult r;
    r.table = table;
    for (const auto& row : rows) {
        bool ok = true;
        for (const auto& c : row.conds) ok = ok && leq(c.lhs, c.rhs, v);
        if (!ok) continue;
        r.rows.emplace_back(row.assumptions);
        if (std::find(r.forms.begin(), r.forms.end(), row.form) == r.forms.end()) {
            r.forms.emplace_back(row.form);
            r.ra_exponents.push_back(row.ra_exp);
        }
    }
    if (r.forms.empty()) throw Error("regime_classify: no table row matches");
    r.ambiguous = r.forms.size() > 1;
    return r;
}

PhysicalScaling rescale_physical(double d_ratio, double dT_ratio) {
    if (!(d_ratio > 0.0) || !(dT_ratio > 0.0)) throw Error("rescale_physical: ratios must be > 0");
    PhysicalScaling s;
    s.ra_ratio = d_ratio * d_ratio * d_ratio * dT_ratio;
    s.kappa_scale = d_ratio;
    s.kappa_w1inf_scale = d_ratio * d_ratio + d_ratio;
    return s;
}

// ===========================================================================
// Sweeps

ChannelGeometry GeometrySpec::build(std::size_t n1) const { return build_geometry(period, bottom, top, n1, normalize); }

std::pair<std::size_t, std::size_t> ResolutionPolicy::grid(double Ra) const {
    if (!per_ra) return {n1, n2};
    const double want = n2_factor * std::pow(Ra, 0.25);
    std::size_t m = std::max<std::size_t>(n2_multiple, 1);
    std::size_t N = static_cast<std::size_t>(std::ceil(want / static_cast<double>(m))) * m;
    N = std::max(N, n2_min);
    auto N1 = static_cast<std::size_t>(std::ceil(n1_per_n2 * static_cast<double>(N) / 2.0)) * 2;
    return {std::max<std::size_t>(N1, 8), N};
}

void SweepSpec::validate() const {
    if (Ra.empty()) throw Error("sweep: Ra list is empty");
    for (std::size_t k = 0; k < Ra.size(); ++k) {
        if (!(Ra[k] >= 1.0)) throw Error("sweep: all Ra must be >= 1");
        if (k && !(Ra[k] > Ra[k - 1])) throw Error("sweep: Ra list must be strictly increasing");
    }
    if (Pr.empty() || alpha.empty()) throw Error("sweep: Pr and alpha lists must be non-empty");
    for (double p : Pr)
        if (!(p > 0.0)) throw Error("sweep: Pr must be > 0");
    for (double a : alpha)
        if (!(a > 0.0)) throw Error("sweep: alpha must be > 0");
    if (!(window_start >= 0.0 && window_start < 1.0)) throw Error("sweep: window_start must be in [0, 1)");
    if (!(sample_dt > 0.0)) throw Error("sweep: sample_dt must be > 0");
}

SweepRow summarize_run(const DiagnosticsRecord& rec, const Window& w, const DiagnosticsOptions& o, const SimParams& p) {
    SweepRow r;
    r.Ra = p.Ra;
    r.Pr = p.Pr;
    r.window = w;
    r.seed = p.seed;
    r.theta_min = column_min(rec, "theta_min");
    r.theta_max = column_max(rec, "theta_max");
    r.max_energy_residual = column_max(rec, "energy_residual");
    r.max_coupling_residual = column_max(rec, "coupling_residual");
    if (p.mode == Mode::diffusive) {
        r.nu_flux = window_average(rec, "nu_flux", w);
        r.nu_gradient = window_average(rec, "nu_gradient", w);
        r.nu_convective = window_average(rec, "nu_convective", w);
        char buf[64];
        for (double dl : o.strip_deltas) {
            std::snprintf(buf, sizeof buf, "nu_strip_%g", dl);
            r.nu_strip.emplace_back(dl, window_average(rec, buf, w));
        }
        std::snprintf(buf, sizeof buf, "nu_background_%g", o.delta_bg);
        if (rec.has(buf)) r.nu_background = window_average(rec, buf, w);
    }
    return r;
}

namespace {

struct Job {
    double Ra, Pr, alpha;
    std::size_t index;
};

SweepRow run_one(const SweepSpec& spec, const Job& job) {
    SweepRow row;
    row.Ra = job.Ra;
    row.Pr = job.Pr;
    row.alpha = job.alpha;
    row.slip_length = 0.5 / job.alpha;
    try {
        auto [n1, n2] = spec.resolution.grid(job.Ra);
        row.n1 = n1;
        row.n2 = n2;
        auto d = Domain::make(spec.geometry.build(n1), n2);
        SimParams p = spec.base;
        p.Ra = job.Ra;
        p.Pr = job.Pr;
        p.slip = SlipSpec::constant(job.alpha);
        p.seed = spec.base.seed + (spec.seed_per_run ? job.index : 0);
        p.validate();
        Recorder rec(d, p, spec.diagnostics);
        RunOptions ro;
        ro.sample_dt = spec.sample_dt;
        ro.sinks.push_back(rec.sink());
        RunResult res = run(d, p, initial_state(d, p, spec.initial), ro);
        const Window w = window_from_fraction(p.T, spec.window_start);
        SweepRow s = summarize_run(rec.record(), w, spec.diagnostics, p);
        s.alpha = row.alpha;
        s.slip_length = row.slip_length;
        s.n1 = n1;
        s.n2 = n2;
        s.steps = res.steps;
        s.wall_seconds = res.wall_seconds;
        s.record = rec.record();
        return s;
    } catch (const std::exception& e) {
        row.failed = true;
        row.reason = e.what();
        return row;
    }
}

}  // namespace

SweepRecord run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<Job> jobs;
    for (double pr : spec.Pr)
        for (double a : spec.alpha)
            for (double r : spec.Ra) jobs.push_back({r, pr, a, jobs.size()});
    SweepRecord out;
    out.rows.resize(jobs.size());
    unsigned nt = spec.threads > 0 ? static_cast<unsigned>(spec.threads) : std::thread::hardware_concurrency();
    nt = std::max(1u, std::min<unsigned>(nt, static_cast<unsigned>(jobs.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) out.rows[k] = run_one(spec, jobs[k]);
    };
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::vector<RaNu> pts;
    for (const auto& r : out.rows)
        if (!r.failed) pts.push_back({r.Ra, r.nu_flux});
    if (spec.Pr.size() * spec.alpha.size() != 1) {
        out.fit_note = "fit skipped: more than one (Pr, alpha) pair";
    } else if (pts.size() < 3) {
        out.fit_note = "fit skipped: fewer than 3 successful rows";
    } else {
        out.fit = fit_exponent(pts);
    }
    return out;
}

void write_sweep_csv(const std::string& path, const SweepRecord& r, const std::vector<std::string>& comments) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    for (const auto& c : comments) os << "# " << c << '\n';
    std::vector<double> deltas;
    for (const auto& row : r.rows)
        if (!row.failed) {
            for (const auto& s : row.nu_strip) deltas.push_back(s.first);
            break;
        }
    os << "Ra,Pr,alpha,slip_length,n1,n2,seed,window_t0,window_t1,nu_flux,nu_gradient";
    char buf[64];
    for (double dl : deltas) {
        std::snprintf(buf, sizeof buf, ",nu_strip_%g", dl);
        os << buf;
    }
    os << ",nu_convective,nu_background,theta_min,theta_max,max_energy_residual,max_coupling_residual,steps,"
          "failed,reason\n";
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& row : r.rows) {
        os << num(row.Ra) << ',' << num(row.Pr) << ',' << num(row.alpha) << ',' << num(row.slip_length) << ','
           << row.n1 << ',' << row.n2 << ',' << row.seed << ',' << num(row.window.t0) << ',' << num(row.window.t1)
           << ',' << num(row.nu_flux) << ',' << num(row.nu_gradient);
        for (std::size_t k = 0; k < deltas.size(); ++k)
            os << ',' << (k < row.nu_strip.size() ? num(row.nu_strip[k].second) : std::string("nan"));
        os << ',' << num(row.nu_convective) << ',' << (row.nu_background ? num(*row.nu_background) : "nan") << ','
           << num(row.theta_min) << ',' << num(row.theta_max) << ',' << num(row.max_energy_residual) << ','
           << num(row.max_coupling_residual) << ',' << row.steps << ',' << (row.failed ? 1 : 0) << ',';
        std::string reason = row.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        os << reason << '\n';
    }
    if (!os) throw Error("write failed: " + path);
}

void write_plot_data(const std::string& path, const SweepRecord& r) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << "# log10_Ra log10_Nu log10_Nu_fit\n";
    char buf[128];
    for (const auto& row : r.rows) {
        if (row.failed || !(row.nu_flux > 0.0)) continue;
        const double lr = std::log10(row.Ra), ln = std::log10(row.nu_flux);
        double fit = std::numeric_limits<double>::quiet_NaN();
        if (r.fit) fit = (r.fit->log_prefactor + r.fit->beta * std::log(row.Ra)) / std::log(10.0);
        std::snprintf(buf, sizeof buf, "%.10g %.10g %.10g\n", lr, ln, fit);
        os << buf;
    }
}

}  // namespace slip

namespace slip {

// ===========================================================================
// Identity suite

GeometrySpec curved_default_geometry() {
    GeometrySpec g;
    g.id = "curved";
    g.period = 2.0;
    g.bottom = FourierProfile{0.0, {}, {0.1}};
    g.top = FourierProfile{1.0, {}, {0.1}};
    return g;
}

void IdentitySpec::validate() const {
    if (n2_levels.size() < 2) throw Error("identities: need at least two n2 levels");
    for (std::size_t k = 0; k < n2_levels.size(); ++k) {
        if (n2_levels[k] < 16) throw Error("identities: n2 levels must be >= 16");
        if (k && n2_levels[k] != 2 * n2_levels[k - 1]) throw Error("identities: n2 levels must double");
    }
    if (n1 < 8 || n1 % 2) throw Error("identities: n1 must be even and >= 8");
    if (fields < 1) throw Error("identities: fields must be >= 1");
    if (coercivity_ensemble < 10) throw Error("identities: coercivity ensemble must be >= 10");
    for (double a : alphas)
        if (!(a > 0.0)) throw Error("identities: alphas must be > 0");
}

std::vector<double> observed_orders(const std::vector<double>& e) {
    std::vector<double> o;
    for (std::size_t k = 1; k < e.size(); ++k) o.push_back(std::log2(e[k - 1] / e[k]));
    return o;
}

namespace {

ConvergenceCheck judge(std::string name, const std::vector<std::size_t>& n2, std::vector<double> err,
                       const IdentitySpec& spec) {
    ConvergenceCheck c;
    c.name = std::move(name);
    c.n2 = n2;
    c.errors = std::move(err);
    c.orders = observed_orders(c.errors);
    bool floor = true;
    for (double e : c.errors) floor = floor && e <= spec.roundoff;
    if (floor) {
        c.pass = true;
        c.note = "at round-off on every level";
        return c;
    }
    c.pass = true;
    for (std::size_t k = 0; k < c.orders.size(); ++k) {
        // A level pair already at round-off carries no order information.
        if (c.errors[k + 1] <= spec.roundoff) continue;
        if (!(c.orders[k] >= spec.min_order)) c.pass = false;
    }
    if (!c.pass) c.note = "observed order below " + std::to_string(spec.min_order);
    return c;
}

ConvergenceCheck single(std::string name, std::size_t n2, double err, double tol) {
    ConvergenceCheck c;
    c.name = std::move(name);
    c.n2 = {n2};
    c.errors = {err};
    c.pass = err <= tol;
    if (!c.pass) c.note = "exceeds " + std::to_string(tol);
    return c;
}

double rel_max_error(const Field& a, const Field& b) {
    double e = 0.0, s = 0.0;
    for (std::size_t k = 0; k < a.v.size(); ++k) {
        e = std::max(e, std::abs(a.v[k] - b.v[k]));
        s = std::max(s, std::abs(b.v[k]));
    }
    return s > 0.0 ? e / s : e;
}

// Manufactured solution u = cos(k x1) sin(2 x2) + x2^3.
struct Manufactured {
    double k;
    double u(double x1, double x2) const { return std::cos(k * x1) * std::sin(2.0 * x2) + x2 * x2 * x2; }
    double lap(double x1, double x2) const {
        return -(k * k + 4.0) * std::cos(k * x1) * std::sin(2.0 * x2) + 6.0 * x2;
    }
    double ux(double x1, double x2) const { return -k * std::sin(k * x1) * std::sin(2.0 * x2); }
    double uy(double x1, double x2) const { return 2.0 * std::cos(k * x1) * std::cos(2.0 * x2) + 3.0 * x2 * x2; }
};

std::vector<double> wall_values(const DomainPtr& d, Side s, const std::function<double(double, double)>& f) {
    std::vector<double> v(d->grid.n1());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = d->geom.x1(i);
        v[i] = f(x, d->geom.h_samples(s)[i]);
    }
    return v;
}

double mean_free_error(Field a, Field b) {
    const double area = a.dom->area();
    const double ma = integrate_area(a) / area, mb = integrate_area(b) / area;
    for (double& v : a.v) v -= ma;
    for (double& v : b.v) v -= mb;
    return rel_max_error(a, b);
}

}  // namespace

std::vector<ConvergenceCheck> run_identity_suite(const IdentitySpec& spec) {
    spec.validate();
    std::vector<GeometrySpec> geoms = spec.geometries;
    if (geoms.empty()) geoms = {GeometrySpec{}, curved_default_geometry()};
    std::vector<ConvergenceCheck> out;
    const auto& levels = spec.n2_levels;
    for (const auto& gs : geoms) {
        const std::string tag = gs.id + "/";
        const ChannelGeometry geom = gs.build(spec.n1);

        {
            ConvergenceCheck c;
            c.name = tag + "metric";
            c.n2 = {levels.front()};
            try {
                CoordinateMap m = metric_coeffs(geom, levels.front());
                if (spec.corrupt_metric != 0.0) m = corrupt_metric_for_test(m, spec.corrupt_metric);
                check_metric(m);
                c.pass = true;
            } catch (const std::exception& e) {
                c.pass = false;
                c.note = std::string("ellipticity failure: ") + e.what();
            }
            out.push_back(c);
            if (!c.pass) continue;
        }

        if (spec.identities) {
            std::array<std::vector<double>, 3> gid;
            std::vector<double> lapv, bpw;
            const SlipSpec slip = SlipSpec::constant(1.0);
            for (std::size_t n2 : levels) {
                auto d = Domain::make(geom, n2);
                std::mt19937_64 rng(spec.seed);
                std::array<double, 3> g{0.0, 0.0, 0.0};
                double lv = 0.0, bp = 0.0;
                Field theta = sample(d, [&](double x1, double x2) {
                    return 1.0 - x2 + 0.1 * std::sin(2.0 * kPi * x1 / gs.period) * std::sin(kPi * x2);
                });
                for (int f = 0; f < spec.fields; ++f) {
                    VectorField u = perp_gradient(random_wall_constant_phi(d, rng));
                    auto r = grad_identity_residuals(u);
                    for (int a = 0; a < 3; ++a) g[a] = std::max(g[a], r[a]);
                    lv = std::max(lv, laplacian_vorticity_residual(u));
                    Field p = solve_pressure_neumann(u, theta, 100.0, 1.0, slip);
                    auto w = boundary_pressure_work(u, p, slip);
                    const double scale = std::max({std::abs(w[0]), std::abs(w[1]), 1e-300});
                    bp = std::max(bp, std::abs(w[0] - w[1]) / scale);
                }
                for (int a = 0; a < 3; ++a) gid[a].push_back(g[a]);
                lapv.push_back(lv);
                bpw.push_back(bp);
            }
            const char* names[3] = {"grad_identity_ab", "grad_identity_bc", "grad_identity_ac"};
            for (int a = 0; a < 3; ++a) out.push_back(judge(tag + names[a], levels, gid[a], spec));
            out.push_back(judge(tag + "laplacian_vs_perp_grad_vorticity", levels, lapv, spec));
            out.push_back(judge(tag + "boundary_pressure_work", levels, bpw, spec));
        }

        if (spec.elliptic) {
            const Manufactured ms{2.0 * kPi / gs.period};
            std::vector<double> ed, en;
            for (std::size_t n2 : levels) {
                auto d = Domain::make(geom, n2);
                Field exact = sample(d, [&](double x1, double x2) { return ms.u(x1, x2); });
                Field f = sample(d, [&](double x1, double x2) { return -ms.lap(x1, x2); });
                auto uf = [&](double x1, double x2) { return ms.u(x1, x2); };
                Field ud = solve_dirichlet(d, 0.0, f, wall_values(d, Side::bottom, uf), wall_values(d, Side::top, uf));
                ed.push_back(rel_max_error(ud, exact));
                std::vector<double> gb(d->grid.n1()), gt(d->grid.n1());
                for (Side s : {Side::bottom, Side::top}) {
                    const auto& fr = d->frame(s);
                    auto& g = s == Side::bottom ? gb : gt;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double x = d->geom.x1(i), y = d->geom.h_samples(s)[i];
                        g[i] = fr.n1[i] * ms.ux(x, y) + fr.n2[i] * ms.uy(x, y);
                    }
                }
                EllipticSolver ns(d, 0.0, WallBC::neumann);
                en.push_back(mean_free_error(ns.solve_neumann(f, gb, gt), exact));
            }
            out.push_back(judge(tag + "manufactured_dirichlet", levels, ed, spec));
            out.push_back(judge(tag + "manufactured_neumann", levels, en, spec));

            // Streamfunction flux identity on the finest level.
            auto d = Domain::make(geom, levels.back());
            std::mt19937_64 rng(spec.seed + 1);
            Field omega = laplacian(random_wall_constant_phi(d, rng));
            const double qbar = 0.37;
            Field phi = solve_streamfunction(omega, qbar);
            const double flux = mean_flux(perp_gradient(phi));
            const double top = wall_trace(phi, Side::top)[0];
            out.push_back(single(tag + "streamfunction_flux_identity", levels.back(), std::abs(flux + top), spec.flux_identity_tol));

            if (geom.flat()) {
                auto dc = Domain::make(geom, levels.front());
                Field fr = sample(dc, [&](double x1, double x2) { return -ms.lap(x1, x2); });
                auto uf = [&](double x1, double x2) { return ms.u(x1, x2); };
                auto wb = wall_values(dc, Side::bottom, uf), wt = wall_values(dc, Side::top, uf);
                SolverOptions gen;
                gen.force_generic = true;
                Field a = EllipticSolver(dc, 0.0, WallBC::dirichlet).solve_dirichlet(fr, wb, wt);
                Field b = EllipticSolver(dc, 0.0, WallBC::dirichlet, gen).solve_dirichlet(fr, wb, wt);
                out.push_back(single(tag + "fast_vs_generic", levels.front(), rel_max_error(a, b), spec.fast_generic_tol));
            }
        }

        if (spec.coercivity) {
            for (double a : spec.alphas) {
                const SlipSpec slip = SlipSpec::constant(a);
                std::vector<CoercivityResult> res;
                for (std::size_t k = 0; k < 2; ++k)
                    res.push_back(coercivity_probe(Domain::make(geom, levels[k]), slip, spec.coercivity_ensemble, spec.seed));
                ConvergenceCheck c;
                char buf[64];
                std::snprintf(buf, sizeof buf, "coercivity_alpha_%g", a);
                c.name = tag + buf;
                c.n2 = {levels[0], levels[1]};
                c.errors = {res[0].min_ratio, res[1].min_ratio};
                const double change = std::abs(res[1].min_ratio - res[0].min_ratio) / res[0].min_ratio;
                const double floor = spec.coercivity_fraction * res[1].c2_inverse;
                c.pass = res[0].min_ratio > 0.0 && res[1].min_ratio > 0.0 && change <= spec.coercivity_stability &&
                         res[1].min_ratio >= floor;
                std::snprintf(buf, sizeof buf, "C2^-1 = %.4g, change %.3g", res[1].c2_inverse, change);
                c.note = buf;
                out.push_back(c);
            }
        }
    }
    return out;
}

}  // namespace slip
