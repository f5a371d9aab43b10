#include "slip/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace slip {

// ---------------------------------------------------------------------------
// FourierProfile

bool FourierProfile::is_constant() const {
    for (double v : a)
        if (v != 0.0) return false;
    for (double v : b)
        if (v != 0.0) return false;
    return true;
}

namespace {

// Sum of m^p * (a cos + b sin) rotated by the derivative order.
double eval_series(const FourierProfile& f, double x, double period, int order) {
    double acc = order == 0 ? f.c0 : 0.0;
    const std::size_t m_max = f.order();
    for (std::size_t m = 1; m <= m_max; ++m) {
        const double k = 2.0 * kPi * static_cast<double>(m) / period;
        const double am = m <= f.a.size() ? f.a[m - 1] : 0.0;
        const double bm = m <= f.b.size() ? f.b[m - 1] : 0.0;
        const double c = std::cos(k * x), s = std::sin(k * x);
        const double kp = std::pow(k, order);
        switch (order % 4) {
            case 0: acc += kp * (am * c + bm * s); break;
            case 1: acc += kp * (-am * s + bm * c); break;
            case 2: acc += kp * (-am * c - bm * s); break;
            default: acc += kp * (am * s - bm * c); break;
        }
    }
    return acc;
}

}  // namespace

double FourierProfile::value(double x, double p) const { return eval_series(*this, x, p, 0); }
double FourierProfile::d1(double x, double p) const { return eval_series(*this, x, p, 1); }
double FourierProfile::d2(double x, double p) const { return eval_series(*this, x, p, 2); }
double FourierProfile::d3(double x, double p) const { return eval_series(*this, x, p, 3); }

// ---------------------------------------------------------------------------
// SlipSpec

double SlipSpec::slip_length() const {
    if (!is_constant() || bottom.c0 != top.c0)
        throw Error("slip length is defined only for one shared constant alpha");
    return 1.0 / (2.0 * bottom.c0);
}

void SlipSpec::validate(double period, std::size_t samples) const {
    for (Side s : {Side::bottom, Side::top}) {
        for (std::size_t i = 0; i < samples; ++i) {
            double x = period * static_cast<double>(i) / static_cast<double>(samples);
            double v = on(s).value(x, period);
            if (!(v > 0.0) || !std::isfinite(v)) {
                std::ostringstream os;
                os << "slip coefficient must be positive: alpha_" << side_name(s) << "(" << x
                   << ") = " << v;
                throw Error(os.str());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// ChannelGeometry

double ChannelGeometry::max_height(Side s) const {
    const auto& v = h_samples(s);
    return *std::max_element(v.begin(), v.end());
}

double ChannelGeometry::min_height(Side s) const {
    const auto& v = h_samples(s);
    return *std::min_element(v.begin(), v.end());
}

namespace {

bool same_series(const FourierProfile& lo, const FourierProfile& hi, double shift) {
    if (std::abs(hi.c0 - lo.c0 - shift) > 1e-12) return false;
    const std::size_t n = std::max(lo.order(), hi.order());
    for (std::size_t m = 0; m < n; ++m) {
        double la = m < lo.a.size() ? lo.a[m] : 0.0, ha = m < hi.a.size() ? hi.a[m] : 0.0;
        double lb = m < lo.b.size() ? lo.b[m] : 0.0, hb = m < hi.b.size() ? hi.b[m] : 0.0;
        if (std::abs(la - ha) > 1e-12 || std::abs(lb - hb) > 1e-12) return false;
    }
    return true;
}

}  // namespace

ChannelGeometry build_geometry(double period, const FourierProfile& h_minus,
                               const FourierProfile& h_plus, std::size_t n1, bool normalize) {
    if (!(period > 0.0)) throw Error("geometry: period must be positive");
    if (n1 < 8 || n1 % 2 != 0) throw Error("geometry: N1 must be even and >= 8");

    ChannelGeometry g;
    g.gamma_ = period;
    g.n1_ = n1;
    g.hm_ = h_minus;
    g.hp_ = h_plus;

    // Only the constant terms contribute to the period mean.
    double mean_gap = h_plus.c0 - h_minus.c0;
    if (std::abs(mean_gap - 1.0) > 1e-12) {
        if (!normalize) {
            std::ostringstream os;
            os.precision(15);
            os << "geometry: mean gap is " << mean_gap << ", expected 1 (set normalize to shift h+)";
            throw Error(os.str());
        }
        g.hp_.c0 += 1.0 - mean_gap;
        mean_gap = 1.0;
    }
    g.mean_gap_ = mean_gap;

    const std::size_t dense = 4 * n1;
    double d = INFINITY;
    for (std::size_t i = 0; i < dense; ++i) {
        double x = period * static_cast<double>(i) / static_cast<double>(dense);
        double gap = g.hp_.value(x, period) - g.hm_.value(x, period);
        if (!(gap > 0.0)) {
            std::ostringstream os;
            os << "geometry: walls touch or cross at x1 = " << x << " (gap " << gap << ")";
            throw Error(os.str());
        }
        d = std::min(d, gap);
    }
    g.d_ = d;
    g.flat_ = g.hm_.is_constant() && g.hp_.is_constant();
    g.identical_ = same_series(g.hm_, g.hp_, 1.0);

    auto fill = [&](const FourierProfile& f, std::vector<double>& v0, std::vector<double>& v1,
                    std::vector<double>& v2) {
        v0.resize(n1);
        v1.resize(n1);
        v2.resize(n1);
        for (std::size_t i = 0; i < n1; ++i) {
            double x = g.x1(i);
            v0[i] = f.value(x, period);
            v1[i] = f.d1(x, period);
            v2[i] = f.d2(x, period);
        }
    };
    fill(g.hm_, g.hm_s_, g.dhm_s_, g.d2hm_s_);
    fill(g.hp_, g.hp_s_, g.dhp_s_, g.d2hp_s_);
    return g;
}

// ---------------------------------------------------------------------------
// Frames and curvature

double curvature(const ChannelGeometry& g, Side side, double x1) {
    double hp = g.dh(side, x1), hpp = g.d2h(side, x1);
    double sp = std::sqrt(1.0 + hp * hp);
    double k = hpp / (sp * sp * sp);
    return side == Side::top ? k : -k;
}

BoundaryFrame boundary_frame(const ChannelGeometry& g, Side side) {
    BoundaryFrame f;
    f.side = side;
    const std::size_t n = g.n1();
    f.n1.resize(n);
    f.n2.resize(n);
    f.t1.resize(n);
    f.t2.resize(n);
    f.kappa.resize(n);
    f.sprime.resize(n);
    const double sign = side == Side::top ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double hp = g.dh_samples(side)[i], hpp = g.d2h_samples(side)[i];
        double sp = std::sqrt(1.0 + hp * hp);
        f.sprime[i] = sp;
        f.n1[i] = sign * (-hp) / sp;
        f.n2[i] = sign * 1.0 / sp;
        f.t1[i] = -f.n2[i];
        f.t2[i] = f.n1[i];
        f.kappa[i] = sign * hpp / (sp * sp * sp);
    }
    return f;
}

// ---------------------------------------------------------------------------
// CoordinateMap

std::array<double, 4> CoordinateMap::jac_phi(std::size_t j, std::size_t i) const {
    double g = gap_[i], s = s_[idx(j, i)];
    return {1.0, 0.0, -s / g, 1.0 / g};
}

std::array<double, 4> CoordinateMap::jac_psi(std::size_t j, std::size_t i) const {
    double g = gap_[i], s = s_[idx(j, i)];
    return {1.0, 0.0, s, g};
}

namespace {

// a_kl = |det grad Phi|^{-1} sum_m d_m Phi_k d_m Phi_l, evaluated from the Jacobian.
std::array<double, 4> metric_from_jacobian(double g, double s) {
    const double J[4] = {1.0, 0.0, -s / g, 1.0 / g};
    const double det = std::abs(J[0] * J[3] - J[1] * J[2]);
    std::array<double, 4> a{};
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) a[2 * k + l] = (J[2 * k] * J[2 * l] + J[2 * k + 1] * J[2 * l + 1]) / det;
    return a;
}

double min_eig_sym(double a11, double a12, double a22) {
    double tr = a11 + a22, det = a11 * a22 - a12 * a12;
    double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    return 0.5 * tr - disc;
}

}  // namespace

double metric_min_eigenvalue(const ChannelGeometry& geo, double x1, double y2) {
    double hm1 = geo.dh(Side::bottom, x1), hp1 = geo.dh(Side::top, x1);
    double g = geo.h(Side::top, x1) - geo.h(Side::bottom, x1);
    double s = hm1 + (hp1 - hm1) * y2;
    auto a = metric_from_jacobian(g, s);
    return min_eig_sym(a[0], a[1], a[3]);
}

void check_metric(const CoordinateMap& m) {
    const std::size_t n1 = m.n1(), n2 = m.n2();
    double c = INFINITY;
    for (std::size_t j = 0; j <= n2; ++j) {
        for (std::size_t i = 0; i < n1; ++i) {
            auto P = m.jac_psi(j, i), F = m.jac_phi(j, i);
            double e00 = P[0] * F[0] + P[1] * F[2] - 1.0;
            double e01 = P[0] * F[1] + P[1] * F[3];
            double e10 = P[2] * F[0] + P[3] * F[2];
            double e11 = P[2] * F[1] + P[3] * F[3] - 1.0;
            double err = std::max({std::abs(e00), std::abs(e01), std::abs(e10), std::abs(e11)});
            if (err > 1e-10) throw Error("metric: grad Psi * grad Phi differs from identity");
            c = std::min(c, min_eig_sym(m.a11(j, i), m.a12(j, i), m.a22(j, i)));
        }
    }
    if (!(c >= 1e-8)) {
        std::ostringstream os;
        os << "metric: ellipticity constant " << c << " below 1e-8 (degenerate geometry)";
        throw Error(os.str());
    }
}

CoordinateMap metric_coeffs(const ChannelGeometry& geo, std::size_t n2) {
    if (n2 < 8) throw Error("metric: N2 must be >= 8");
    CoordinateMap m;
    const std::size_t n1 = geo.n1();
    m.n1_ = n1;
    m.n2_ = n2;
    m.gap_.resize(n1);
    m.s_.resize((n2 + 1) * n1);
    m.a22_.resize((n2 + 1) * n1);
    m.a22h_.resize(n2 * n1);
    const auto& hm = geo.h_samples(Side::bottom);
    const auto& hp = geo.h_samples(Side::top);
    const auto& dm = geo.dh_samples(Side::bottom);
    const auto& dp = geo.dh_samples(Side::top);
    const double h = 1.0 / static_cast<double>(n2);
    double c = INFINITY;
    for (std::size_t i = 0; i < n1; ++i) m.gap_[i] = hp[i] - hm[i];
    for (std::size_t j = 0; j <= n2; ++j) {
        const double y2 = static_cast<double>(j) * h;
        for (std::size_t i = 0; i < n1; ++i) {
            const double s = dm[i] + (dp[i] - dm[i]) * y2;
            auto a = metric_from_jacobian(m.gap_[i], s);
            if (std::abs(a[1] - a[2]) > 1e-14 * (1.0 + std::abs(a[1])))
                throw Error("metric: a12 != a21");
            if (std::abs(a[0] - m.gap_[i]) > 1e-12 * m.gap_[i] || std::abs(a[1] + s) > 1e-12 * (1.0 + std::abs(s)))
                throw Error("metric: coefficient evaluation inconsistent");
            m.s_[m.idx(j, i)] = s;
            m.a22_[m.idx(j, i)] = a[3];
            c = std::min(c, min_eig_sym(a[0], a[1], a[3]));
            if (j < n2) {
                const double sh = dm[i] + (dp[i] - dm[i]) * (y2 + 0.5 * h);
                m.a22h_[m.idx(j, i)] = metric_from_jacobian(m.gap_[i], sh)[3];
            }
        }
    }
    m.ellipticity_ = c;
    check_metric(m);
    return m;
}

CoordinateMap corrupt_metric_for_test(const CoordinateMap& src, double a22_scale) {
    CoordinateMap m = src;
    for (double& v : m.a22_) v *= a22_scale;
    for (double& v : m.a22h_) v *= a22_scale;
    double c = INFINITY;
    for (std::size_t j = 0; j <= m.n2_; ++j)
        for (std::size_t i = 0; i < m.n1_; ++i)
            c = std::min(c, min_eig_sym(m.a11(j, i), m.a12(j, i), m.a22(j, i)));
    m.ellipticity_ = c;
    return m;
}

// ---------------------------------------------------------------------------
// map_points

std::vector<Point> map_points(const ChannelGeometry& g, const std::vector<Point>& pts,
                              MapDirection dir) {
    std::vector<Point> out;
    out.reserve(pts.size());
    const double L = g.period();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Point& p = pts[k];
        const double lo = g.h(Side::bottom, p.a), hi = g.h(Side::top, p.a);
        const double gap = hi - lo;
        if (dir == MapDirection::forward) {
            const double tol = 1e-14 * (1.0 + std::abs(p.b));
            if (!std::isfinite(p.a) || p.b < lo - tol || p.b > hi + tol) {
                std::ostringstream os;
                os << "map_points: point " << k << " (" << p.a << ", " << p.b << ") is outside the channel";
                throw Error(os.str());
            }
            out.push_back({p.a, (p.b - lo) / gap});
        } else {
            if (!(p.a >= 0.0 && p.a < L) || !(p.b >= 0.0 && p.b <= 1.0)) {
                std::ostringstream os;
                os << "map_points: point " << k << " (" << p.a << ", " << p.b
                   << ") is outside [0, period) x [0, 1]";
                throw Error(os.str());
            }
            out.push_back({p.a, lo + gap * p.b});
        }
    }
    return out;
}

}  // namespace slip
