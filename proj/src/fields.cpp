#include "slip/fields.hpp"

#include <algorithm>
#include <cmath>

#include "slip/kernels.hpp"

namespace slip {

// ===========================================================================
// Grid and domain

MappedGrid::MappedGrid(std::size_t n1, std::size_t n2, double period, bool dealias)
    : n1_(n1), n2_(n2), period_(period), dealias_(dealias) {
    if (n1 < 8 || n1 % 2 != 0) throw Error("grid: N1 must be even and >= 8");
    if (n2 < 8) throw Error("grid: N2 must be >= 8");
    // Keep |m| < N1/3 so products of retained modes never alias back into them.
    cutoff_ = dealias ? (n1 + 2) / 3 - 1 : n1 / 2 - 1;

    dk_.resize(modes());
    for (std::size_t m = 0; m < modes(); ++m) dk_[m] = m + 1 == modes() ? 0.0 : wavenumber(m);

    const double h = dy2();
    trap_.assign(n2 + 1, h);
    trap_.front() = trap_.back() = 0.5 * h;

    flux_w_.assign(n2 + 1, h);
    const double closure[4] = {1.0 / 16.0, 27.0 / 16.0, 11.0 / 16.0, 17.0 / 16.0};
    for (std::size_t j = 0; j < 4; ++j) {
        flux_w_[j] = closure[j] * h;
        flux_w_[n2 - j] = closure[j] * h;
    }
}

double MappedGrid::wavenumber(std::size_t m) const {
    return 2.0 * kPi * static_cast<double>(m) / period_;
}

Domain::Domain(const ChannelGeometry& g, const CoordinateMap& m, bool dealias)
    : geom(g),
      grid(g.n1(), m.n2(), g.period(), dealias),
      map(m),
      bottom(boundary_frame(g, Side::bottom)),
      top(boundary_frame(g, Side::top)),
      fft(std::make_unique<RowFFT>(g.n1(), m.n2() + 1)),
      fft_row(std::make_unique<RowFFT>(g.n1(), 1)) {}

double Domain::area() const { return geom.period() * geom.mean_gap(); }

std::shared_ptr<const Domain> Domain::make(const ChannelGeometry& g, std::size_t n2, bool dealias) {
    return std::shared_ptr<const Domain>(new Domain(g, metric_coeffs(g, n2), dealias));
}

std::shared_ptr<const Domain> Domain::make_with_map(const ChannelGeometry& g,
                                                    const CoordinateMap& m, bool dealias) {
    if (m.n1() != g.n1()) throw Error("domain: map and geometry disagree on N1");
    return std::shared_ptr<const Domain>(new Domain(g, m, dealias));
}

// ===========================================================================
// Field arithmetic

Field::Field(DomainPtr d, double fill) : dom(std::move(d)), v(dom->grid.size(), fill) {}

Field& Field::operator+=(const Field& o) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
    return *this;
}
Field& Field::operator-=(const Field& o) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
    return *this;
}
Field& Field::operator*=(double c) {
    for (double& x : v) x *= c;
    return *this;
}
Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double c, Field a) { return a *= c; }

// ===========================================================================
// Spectral helpers

namespace spec {

void d2_rows(std::size_t rows, std::size_t w, double h, const double* in, double* out) {
    const auto& K = kern::active();
    const double c = 0.5 / h;
    for (std::size_t j = 1; j + 1 < rows; ++j)
        K.axpby(w, c, in + (j + 1) * w, -c, in + (j - 1) * w, out + j * w);
    d2_wall(rows, w, h, in, Side::bottom, out);
    d2_wall(rows, w, h, in, Side::top, out + (rows - 1) * w);
}

void d2_wall(std::size_t rows, std::size_t w, double h, const double* in, Side side, double* out) {
    const double c = 0.5 / h;
    if (side == Side::bottom) {
        const double *f0 = in, *f1 = in + w, *f2 = in + 2 * w, *f3 = in + 3 * w, *f4 = in + 4 * w;
        for (std::size_t i = 0; i < w; ++i)
            out[i] = c * ((((kWall[0] * f0[i] + kWall[1] * f1[i]) + kWall[2] * f2[i]) + kWall[3] * f3[i]) +
                          kWall[4] * f4[i]);
    } else {
        const std::size_t n = rows - 1;
        const double *f0 = in + n * w, *f1 = in + (n - 1) * w, *f2 = in + (n - 2) * w,
                     *f3 = in + (n - 3) * w, *f4 = in + (n - 4) * w;
        for (std::size_t i = 0; i < w; ++i)
            out[i] = -c * ((((kWall[0] * f0[i] + kWall[1] * f1[i]) + kWall[2] * f2[i]) + kWall[3] * f3[i]) +
                           kWall[4] * f4[i]);
    }
}

void d1(const MappedGrid& g, std::size_t rows, const double* in, double* out) {
    const std::size_t M = g.modes(), w = 2 * M;
    for (std::size_t j = 0; j < rows; ++j) {
        const double* a = in + j * w;
        double* b = out + j * w;
        const double* dk = g.dk().data();
        for (std::size_t m = 0; m < M; ++m) {
            const double k = dk[m];
            const double re = a[2 * m], im = a[2 * m + 1];
            b[2 * m] = -k * im;
            b[2 * m + 1] = k * re;
        }
    }
}

void truncate(const MappedGrid& g, std::size_t rows, double* s) {
    const std::size_t M = g.modes(), w = 2 * M, c = g.cutoff();
    for (std::size_t j = 0; j < rows; ++j)
        std::fill(s + j * w + 2 * (c + 1), s + (j + 1) * w, 0.0);
}

}  // namespace spec

// ===========================================================================
// Differential operators

Field d_y1(const Field& f) {
    const auto& d = *f.dom;
    Vec s(d.grid.rows() * 2 * d.grid.modes());
    d.fft->forward(f.v.data(), s.data());
    spec::d1(d.grid, d.grid.rows(), s.data(), s.data());
    Field out(f.dom);
    d.fft->inverse(s.data(), out.v.data());
    return out;
}

Field d_y2(const Field& f) {
    Field out(f.dom);
    spec::d2_rows(f.dom->grid.rows(), f.n1(), f.dom->grid.dy2(), f.v.data(), out.v.data());
    return out;
}

namespace {

// (d_x1, d_x2) from mapped derivatives.
void chain(const Domain& d, const Field& f1, const Field& f2, Field& gx, Field& gy) {
    const std::size_t n1 = d.grid.n1();
    for (std::size_t j = 0; j < d.grid.rows(); ++j)
        for (std::size_t i = 0; i < n1; ++i) {
            const double g = d.map.gap(i), s = d.map.s(j, i);
            gx(j, i) = f1(j, i) - (s / g) * f2(j, i);
            gy(j, i) = f2(j, i) / g;
        }
}

}  // namespace

VectorField physical_gradient(const Field& f) {
    VectorField out(f.dom);
    chain(*f.dom, d_y1(f), d_y2(f), out.x, out.y);
    return out;
}

Field divergence(const VectorField& u) {
    VectorField gx = physical_gradient(u.x);
    VectorField gy = physical_gradient(u.y);
    return gx.x + gy.y;
}

VectorField perp_gradient(const Field& phi) {
    VectorField g = physical_gradient(phi);
    g.y *= -1.0;
    return VectorField(std::move(g.y), std::move(g.x));
}

Field vorticity(const VectorField& u) {
    VectorField gx = physical_gradient(u.x);
    VectorField gy = physical_gradient(u.y);
    return gy.x - gx.y;
}

TensorField velocity_gradient(const VectorField& u) {
    VectorField gx = physical_gradient(u.x);
    VectorField gy = physical_gradient(u.y);
    TensorField t;
    t.t[0][0] = std::move(gx.x);
    t.t[0][1] = std::move(gx.y);
    t.t[1][0] = std::move(gy.x);
    t.t[1][1] = std::move(gy.y);
    return t;
}

TensorField symmetric_gradient(const VectorField& u) {
    TensorField g = velocity_gradient(u);
    TensorField s;
    s.t[0][0] = g.t[0][0];
    s.t[1][1] = g.t[1][1];
    s.t[0][1] = 0.5 * (g.t[0][1] + g.t[1][0]);
    s.t[1][0] = s.t[0][1];
    return s;
}

Field trace(const TensorField& t) { return t.t[0][0] + t.t[1][1]; }

Field laplacian(const Field& f) {
    const auto& d = *f.dom;
    const std::size_t n1 = d.grid.n1(), N = d.grid.n2();
    const double h = d.grid.dy2();
    Field f1 = d_y1(f), f2 = d_y2(f);
    Field q(f.dom), r(f.dom);
    for (std::size_t j = 0; j <= N; ++j)
        for (std::size_t i = 0; i < n1; ++i) {
            const double a12 = d.map.a12(j, i);
            q(j, i) = d.map.a11(j, i) * f1(j, i) + a12 * f2(j, i);
            r(j, i) = a12 * f1(j, i);
        }
    Field dq = d_y1(q);
    Field out(f.dom);
    for (std::size_t j = 1; j < N; ++j)
        for (std::size_t i = 0; i < n1; ++i) {
            const double fp = d.map.a22_half(j, i) * (f(j + 1, i) - f(j, i)) / h + 0.5 * (r(j, i) + r(j + 1, i));
            const double fm = d.map.a22_half(j - 1, i) * (f(j, i) - f(j - 1, i)) / h + 0.5 * (r(j - 1, i) + r(j, i));
            out(j, i) = (dq(j, i) + (fp - fm) / h) / d.map.gap(i);
        }
    return out;
}

Field dealiased_product(const Field& a, const Field& b) {
    const auto& d = *a.dom;
    const std::size_t R = d.grid.rows(), w = 2 * d.grid.modes();
    Vec sa(R * w), sb(R * w);
    d.fft->forward(a.v.data(), sa.data());
    d.fft->forward(b.v.data(), sb.data());
    spec::truncate(d.grid, R, sa.data());
    spec::truncate(d.grid, R, sb.data());
    Field pa(a.dom), pb(a.dom);
    d.fft->inverse(sa.data(), pa.v.data());
    d.fft->inverse(sb.data(), pb.v.data());
    kern::active().mul(pa.v.size(), pa.v.data(), pb.v.data(), pa.v.data());
    d.fft->forward(pa.v.data(), sa.data());
    spec::truncate(d.grid, R, sa.data());
    d.fft->inverse(sa.data(), pa.v.data());
    return pa;
}

// ===========================================================================
// Integrals and norms

namespace {

template <class F>
double area_sum(const Domain& d, F&& integrand, const std::vector<double>& wy) {
    const std::size_t n1 = d.grid.n1();
    const double dx = d.grid.dy1();
    double total = 0.0;
    for (std::size_t j = 0; j < d.grid.rows(); ++j) {
        double row = 0.0;
        for (std::size_t i = 0; i < n1; ++i) row += d.map.gap(i) * integrand(j, i);
        total += wy[j] * row;
    }
    return total * dx;
}

}  // namespace

double integrate_area(const Field& f) {
    return area_sum(*f.dom, [&](std::size_t j, std::size_t i) { return f(j, i); }, f.dom->grid.trap());
}

double integrate_boundary(const std::vector<double>& samples, const DomainPtr& d, Side side) {
    const auto& sp = d->frame(side).sprime;
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) s += sp[i] * samples[i];
    return s * d->grid.dy1();
}

double integrate_boundary(const Field& f, Side side) {
    return integrate_boundary(wall_trace(f, side), f.dom, side);
}

double lp_norm(const Field& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : f.v) m = std::max(m, std::abs(x));
        return m;
    }
    if (!(p >= 1.0)) throw Error("lp_norm: p must be in [1, inf]");
    double s = area_sum(*f.dom, [&](std::size_t j, std::size_t i) { return std::pow(std::abs(f(j, i)), p); },
                        f.dom->grid.trap());
    return std::pow(s, 1.0 / p);
}

double lp_norm(const VectorField& u, double p) {
    auto mag = [&](std::size_t j, std::size_t i) { return std::hypot(u.x(j, i), u.y(j, i)); };
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t j = 0; j < u.x.dom->grid.rows(); ++j)
            for (std::size_t i = 0; i < u.x.n1(); ++i) m = std::max(m, mag(j, i));
        return m;
    }
    if (!(p >= 1.0)) throw Error("lp_norm: p must be in [1, inf]");
    double s = area_sum(*u.x.dom, [&](std::size_t j, std::size_t i) { return std::pow(mag(j, i), p); },
                        u.x.dom->grid.trap());
    return std::pow(s, 1.0 / p);
}

double lp_norm(const TensorField& t, double p) {
    auto mag = [&](std::size_t j, std::size_t i) {
        double s = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) s += t.t[a][b](j, i) * t.t[a][b](j, i);
        return std::sqrt(s);
    };
    const auto& d = *t.t[0][0].dom;
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t j = 0; j < d.grid.rows(); ++j)
            for (std::size_t i = 0; i < d.grid.n1(); ++i) m = std::max(m, mag(j, i));
        return m;
    }
    double s = area_sum(d, [&](std::size_t j, std::size_t i) { return std::pow(mag(j, i), p); }, d.grid.trap());
    return std::pow(s, 1.0 / p);
}

double h1_seminorm(const Field& f) { return lp_norm(physical_gradient(f), 2.0); }

double h1_seminorm(const VectorField& u) {
    double a = h1_seminorm(u.x), b = h1_seminorm(u.y);
    return std::sqrt(a * a + b * b);
}

double l2_norm_interior(const Field& f) {
    std::vector<double> w = f.dom->grid.trap();
    w.front() = w.back() = 0.0;
    return std::sqrt(area_sum(*f.dom, [&](std::size_t j, std::size_t i) { return f(j, i) * f(j, i); }, w));
}

double l2_norm_interior(const VectorField& u) {
    double a = l2_norm_interior(u.x), b = l2_norm_interior(u.y);
    return std::sqrt(a * a + b * b);
}

std::vector<double> wall_trace(const Field& f, Side side) {
    const std::size_t j = side == Side::bottom ? 0 : f.n2();
    return std::vector<double>(f.row(j), f.row(j) + f.n1());
}

std::vector<double> tangential_velocity(const VectorField& u, Side side) {
    const auto& fr = u.x.dom->frame(side);
    auto a = wall_trace(u.x, side), b = wall_trace(u.y, side);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] * fr.t1[i] + b[i] * fr.t2[i];
    return a;
}

std::vector<double> normal_velocity(const VectorField& u, Side side) {
    const auto& fr = u.x.dom->frame(side);
    auto a = wall_trace(u.x, side), b = wall_trace(u.y, side);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] * fr.n1[i] + b[i] * fr.n2[i];
    return a;
}

double mean_flux(const VectorField& u) {
    const auto& d = *u.x.dom;
    return area_sum(d, [&](std::size_t j, std::size_t i) { return u.x(j, i); }, d.grid.flux_weights()) / d.area();
}

}  // namespace slip
