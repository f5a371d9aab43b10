#include <cmath>
#include <random>

#include "doctest.h"
#include "slip/diagnostics.hpp"
#include "slip/elliptic.hpp"

using namespace slip;

namespace {

DomainPtr flat(std::size_t n2, std::size_t n1 = 32) {
    return Domain::make(build_geometry(2.0, FourierProfile::constant(0.0), FourierProfile::constant(1.0), n1), n2);
}
DomainPtr curved(std::size_t n2, std::size_t n1 = 32) {
    return Domain::make(build_geometry(2.0, FourierProfile{0.0, {}, {0.1}}, FourierProfile{1.0, {}, {0.1}}, n1), n2);
}

double max_abs(const Field& f) {
    double m = 0.0;
    for (double v : f.v) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> zeros(const DomainPtr& d) { return std::vector<double>(d->grid.n1(), 0.0); }

// Manufactured cycle: f = A phi, solve A u = f, compare u with phi.
double manufactured(const DomainPtr& d, bool generic) {
    Field phi = sample(d, [&](double x, double y) {
        const double y2 = y - d->geom.h(Side::bottom, x);
        return std::sin(kPi * x) * std::sin(kPi * y2);
    });
    SolverOptions o;
    o.force_generic = generic;
    EllipticSolver s(d, 0.0, WallBC::dirichlet, o);
    Field f = s.apply_physical(phi);
    SolveStats st;
    Field u = s.solve_dirichlet(f, zeros(d), zeros(d), &st);
    return max_abs(u - phi) / max_abs(phi);
}

}  // namespace

TEST_CASE("zero data gives zero") {
    auto d = flat(16);
    Field u = solve_dirichlet(d, 0.0, Field(d), zeros(d), zeros(d));
    CHECK(max_abs(u) == 0.0);
}

TEST_CASE("manufactured recovery to solver tolerance") {
    CHECK(manufactured(flat(32), false) < 1e-10);
    CHECK(manufactured(flat(32), true) < 1e-9);
    CHECK(manufactured(curved(32), false) < 1e-9);
}

TEST_CASE("flat fast path matches the generic path") {
    auto d = flat(32);
    Field f = sample(d, [](double x, double y) { return std::exp(y) * std::cos(kPi * x) + y; });
    std::vector<double> top(d->grid.n1());
    for (std::size_t i = 0; i < top.size(); ++i) top[i] = std::sin(kPi * d->grid.y1(i));
    SolverOptions g;
    g.force_generic = true;
    SolveStats s1, s2;
    Field a = solve_dirichlet(d, 0.5, f, zeros(d), top, {}, &s1);
    Field b = solve_dirichlet(d, 0.5, f, zeros(d), top, g, &s2);
    CHECK(s1.fast_path);
    CHECK_FALSE(s2.fast_path);
    CHECK(max_abs(a - b) < 1e-9);
}

TEST_CASE("helmholtz solves") {
    auto d = curved(32);
    const double sigma = 3.0;
    std::vector<double> one(d->grid.n1(), 1.0);
    SolveStats st;
    Field u = solve_helmholtz_dirichlet(sigma, Field(d, sigma), one, one, {}, &st);
    CHECK(max_abs(u - Field(d, 1.0)) < 1e-9);
    CHECK(st.residual <= 1e-8);

    // Dominant-mass limit.
    const double big = 1e4;
    Field rhs = sample(d, [](double x, double y) { return 1.0 + std::sin(kPi * x) * std::cos(kPi * y); });
    std::vector<double> lo(d->grid.n1()), hi(d->grid.n1());
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = rhs(0, i) / big;
        hi[i] = rhs(d->grid.n2(), i) / big;
    }
    Field v = solve_helmholtz_dirichlet(big, rhs, lo, hi);
    CHECK(max_abs(v - (1.0 / big) * rhs) <= 2.0 / big);
}

TEST_CASE("streamfunction") {
    auto d = flat(32);
    StreamfunctionSolver s(d);
    CHECK(max_abs(s.solve(Field(d), 0.0)) == 0.0);

    Field phi = s.solve(Field(d), 1.0);
    Field ref = sample(d, [](double, double y) { return -y; });
    CHECK(max_abs(phi - ref) < 1e-12);
    VectorField u = perp_gradient(phi);
    CHECK(max_abs(u.x - Field(d, 1.0)) < 1e-10);
    CHECK(max_abs(u.y) < 1e-10);
}

TEST_CASE("streamfunction flux identity on a curved channel") {
    auto d = curved(32);
    std::mt19937_64 rng(3);
    Field w = vorticity(perp_gradient(random_wall_constant_phi(d, rng)));
    StreamfunctionSolver s(d);
    Field phi = s.solve(w, 0.3);
    CHECK(std::abs(mean_flux(perp_gradient(phi)) - 0.3) < 1e-8);
    for (std::size_t i = 0; i < d->grid.n1(); ++i) CHECK(std::abs(phi(d->grid.n2(), i) + 0.3) < 1e-12);
}

TEST_CASE("vorticity round trip through the streamfunction converges") {
    auto err = [](std::size_t n2) {
        auto d = curved(n2);
        Field w = sample(d, [](double x, double y) { return std::cos(kPi * x) * std::exp(y) + y * y; });
        Field back = vorticity(perp_gradient(solve_streamfunction(w, 0.0)));
        return l2_norm_interior(back - w);
    };
    CHECK(std::log2(err(32) / err(64)) >= 1.8);
}

TEST_CASE("pressure") {
    auto d = flat(32);
    SlipSpec slip = SlipSpec::constant(1.0);
    VectorField zero(d);
    CHECK(max_abs(solve_pressure_neumann(zero, Field(d), 1.0, 1.0, slip)) < 1e-12);

    // Hydrostatic balance: d2 p = theta = 1 - y.
    Field theta = sample(d, [](double, double y) { return 1.0 - y; });
    Field p = solve_pressure_neumann(zero, theta, 1.0, 1.0, slip);
    Field ex = sample(d, [](double, double y) { return y - 0.5 * y * y; });
    ex -= Field(d, integrate_area(ex) / d->area());
    CHECK(max_abs(p - ex) < 1e-8);
}

TEST_CASE("neumann compatibility defect is removed and reported") {
    auto d = flat(16);
    SolveStats st;
    EllipticSolver s(d, 0.0, WallBC::neumann);
    Field u = s.solve_neumann(Field(d, 1.0), zeros(d), zeros(d), &st);
    CHECK(st.compat_defect != 0.0);
    CHECK(std::abs(integrate_area(u)) < 1e-10);
}

TEST_CASE("negative-norm proxy") {
    auto d = flat(64);
    CHECK(hminus1_proxy(VectorField(d)) == 0.0);

    VectorField f(Field(d), sample(d, [](double, double y) { return std::sin(kPi * y); }));
    const double v = hminus1_proxy(f);
    VectorField g(-3.0 * f.x, -3.0 * f.y);
    CHECK(hminus1_proxy(g) == doctest::Approx(3.0 * v).epsilon(1e-10));

    // -w'' = sin(pi y) - 2/pi, w(0) = w(1) = 0, over a period-2 channel:
    // ||w'||^2 = 2 (5/6 - 8/pi^2) / pi^2.
    const double exact = std::sqrt(2.0 * (5.0 / 6.0 - 8.0 / (kPi * kPi)) / (kPi * kPi));
    CHECK(v == doctest::Approx(exact).epsilon(1e-3));
}
