#include <cmath>
#include <random>

#include "doctest.h"
#include "slip/geometry.hpp"

using namespace slip;

namespace {

const FourierProfile kSinBottom{0.0, {}, {0.1}};   // 0.1 sin(pi x1) for period 2
const FourierProfile kSinTop{1.0, {}, {0.1}};

ChannelGeometry flat(std::size_t n1 = 64) {
    return build_geometry(2.0, FourierProfile::constant(0.0), FourierProfile::constant(1.0), n1);
}
ChannelGeometry curved(std::size_t n1 = 64) { return build_geometry(2.0, kSinBottom, kSinTop, n1); }
ChannelGeometry generic(std::size_t n1 = 64) {
    return build_geometry(2.0, FourierProfile{0.0, {0.2}, {}}, FourierProfile::constant(1.0), n1);
}

// Curvature n.(tau.grad)tau from finite differences of the unit tangent along
// arc length, independent of the closed form.
double curvature_fd(const FourierProfile& h, Side side, double x) {
    const double e = 1e-4, L = 2.0;
    auto tangent = [&](double xx) {
        const double hp = h.d1(xx, L), sp = std::sqrt(1.0 + hp * hp);
        const double sg = side == Side::bottom ? 1.0 : -1.0;
        return std::array<double, 2>{sg / sp, sg * hp / sp};
    };
    const auto tp = tangent(x + e), tm = tangent(x - e);
    const double hp = h.d1(x, L), sp = std::sqrt(1.0 + hp * hp);
    // tau.grad = sg (1/s') d/dx along the wall
    const double sg = side == Side::bottom ? 1.0 : -1.0;
    const double ds = sg * 2.0 * e * sp;
    const double dt1 = (tp[0] - tm[0]) / ds, dt2 = (tp[1] - tm[1]) / ds;
    const double n1 = side == Side::bottom ? hp / sp : -hp / sp;
    const double n2 = side == Side::bottom ? -1.0 / sp : 1.0 / sp;
    return n1 * dt1 + n2 * dt2;
}

}  // namespace

TEST_CASE("flat channel: unit gap and zero curvature") {
    auto g = flat();
    CHECK(g.flat());
    CHECK(g.min_gap() == doctest::Approx(1.0));
    for (double x : {0.0, 0.3, 1.7}) {
        CHECK(curvature(g, Side::bottom, x) == 0.0);
        CHECK(curvature(g, Side::top, x) == 0.0);
    }
}

TEST_CASE("identical sine profiles give unit gap") {
    auto g = curved();
    CHECK_FALSE(g.flat());
    CHECK(g.identical_profiles());
    CHECK(g.min_gap() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.mean_gap() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("minimum gap of a cosine bottom against dense sampling") {
    auto g = generic();
    double brute = INFINITY;
    for (int k = 0; k < 100000; ++k) {
        const double x = 2.0 * k / 100000.0;
        brute = std::min(brute, g.h(Side::top, x) - g.h(Side::bottom, x));
    }
    CHECK(g.min_gap() == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(std::abs(g.min_gap() - brute) < 1e-6);
}

TEST_CASE("curvature matches a finite-difference evaluation of n.(tau.grad)tau") {
    auto g = curved();
    for (double x : {0.5, 0.123, 1.3}) {
        CHECK(std::abs(curvature(g, Side::bottom, x) - curvature_fd(kSinBottom, Side::bottom, x)) < 1e-6);
        CHECK(std::abs(curvature(g, Side::top, x) - curvature_fd(kSinTop, Side::top, x)) < 1e-6);
    }
    // Sign: the bottom wall bulges into the fluid at x1 = 0.5 (a local maximum
    // of h-), which is concave as seen from the fluid.
    CHECK(curvature(g, Side::bottom, 0.5) > 0.0);
}

TEST_CASE("identical profiles have opposite wall curvatures") {
    auto g = curved();
    for (int k = 0; k < 64; ++k) {
        const double x = 2.0 * k / 64.0;
        CHECK(std::abs(curvature(g, Side::top, x) + curvature(g, Side::bottom, x)) < 1e-12);
    }
    auto fb = boundary_frame(g, Side::bottom), ft = boundary_frame(g, Side::top);
    for (std::size_t i = 0; i < fb.kappa.size(); ++i) {
        CHECK(std::abs(fb.kappa[i] + ft.kappa[i]) < 1e-12);
        CHECK(fb.n1[i] * fb.n1[i] + fb.n2[i] * fb.n2[i] == doctest::Approx(1.0).epsilon(1e-14));
        // tau = n^perp
        CHECK(fb.t1[i] == doctest::Approx(-fb.n2[i]));
        CHECK(fb.t2[i] == doctest::Approx(fb.n1[i]));
    }
}

TEST_CASE("wall errors") {
    // Walls crossing.
    CHECK_THROWS_AS(build_geometry(2.0, FourierProfile{0.0, {0.7}, {}}, FourierProfile{1.0, {-0.7}, {}}, 64), Error);
    // Mean gap not 1 without normalization; accepted with it.
    CHECK_THROWS_AS(build_geometry(2.0, FourierProfile::constant(0.0), FourierProfile::constant(1.5), 64), Error);
    auto g = build_geometry(2.0, FourierProfile::constant(0.0), FourierProfile::constant(1.5), 64, true);
    CHECK(g.mean_gap() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metric coefficients") {
    SUBCASE("flat is the identity") {
        auto m = metric_coeffs(flat(), 16);
        for (std::size_t j = 0; j <= 16; ++j)
            for (std::size_t i = 0; i < 64; ++i) {
                CHECK(m.a11(j, i) == 1.0);
                CHECK(m.a12(j, i) == 0.0);
                CHECK(m.a22(j, i) == doctest::Approx(1.0).epsilon(1e-15));
            }
    }
    SUBCASE("identical profiles have a11 = 1") {
        auto m = metric_coeffs(curved(), 16);
        for (std::size_t j = 0; j <= 16; ++j)
            for (std::size_t i = 0; i < 64; ++i) CHECK(m.a11(j, i) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("jacobians are mutually inverse") {
        auto m = metric_coeffs(generic(), 16);
        for (std::size_t j = 0; j <= 16; j += 5)
            for (std::size_t i = 0; i < 64; i += 7) {
                auto a = m.jac_phi(j, i), b = m.jac_psi(j, i);
                CHECK(a[0] * b[0] + a[1] * b[2] == doctest::Approx(1.0).epsilon(1e-13));
                CHECK(std::abs(a[0] * b[1] + a[1] * b[3]) < 1e-13);
                CHECK(std::abs(a[2] * b[0] + a[3] * b[2]) < 1e-13);
                CHECK(a[2] * b[1] + a[3] * b[3] == doctest::Approx(1.0).epsilon(1e-13));
            }
    }
    SUBCASE("ellipticity from random quadratic forms, stable across resolutions") {
        auto probe = [](std::size_t n1, std::size_t n2) {
            auto m = metric_coeffs(generic(n1), n2);
            std::mt19937_64 rng(5);
            std::uniform_int_distribution<std::size_t> J(0, n2), I(0, n1 - 1);
            std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
            double c = INFINITY;
            for (int k = 0; k < 1000; ++k) {
                const std::size_t j = J(rng), i = I(rng);
                const double a = ang(rng), x = std::cos(a), y = std::sin(a);
                c = std::min(c, m.a11(j, i) * x * x + 2.0 * m.a12(j, i) * x * y + m.a22(j, i) * y * y);
            }
            CHECK(c >= m.ellipticity() - 1e-12);
            return c;
        };
        const double c1 = probe(64, 32), c2 = probe(128, 64);
        CHECK(c1 > 0.0);
        CHECK(std::abs(c1 - c2) / c1 < 0.01);
    }
    SUBCASE("corrupted metric is rejected") {
        auto m = metric_coeffs(flat(), 16);
        CHECK_NOTHROW(check_metric(m));
        CHECK_THROWS_AS(check_metric(corrupt_metric_for_test(m, -1.0)), Error);
    }
}

TEST_CASE("map_points") {
    SUBCASE("flat is the identity") {
        auto out = map_points(flat(), {{0.3, 0.2}, {1.9, 0.95}}, MapDirection::forward);
        CHECK(out[0].a == 0.3);
        CHECK(out[0].b == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(out[1].b == doctest::Approx(0.95).epsilon(1e-15));
    }
    SUBCASE("bottom wall maps to y2 = 0") {
        auto g = curved();
        auto out = map_points(g, {{0.3, g.h(Side::bottom, 0.3)}}, MapDirection::forward);
        CHECK(out[0].a == doctest::Approx(0.3));
        CHECK(std::abs(out[0].b) < 1e-14);
    }
    SUBCASE("random interior points round-trip") {
        auto g = generic();
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<Point> pts;
        for (int k = 0; k < 100; ++k) {
            const double x = 2.0 * u(rng);
            const double lo = g.h(Side::bottom, x), hi = g.h(Side::top, x);
            pts.push_back({x, lo + (hi - lo) * u(rng)});
        }
        auto back = map_points(g, map_points(g, pts, MapDirection::forward), MapDirection::inverse);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            CHECK(std::abs(back[k].a - pts[k].a) < 1e-12);
            CHECK(std::abs(back[k].b - pts[k].b) < 1e-12);
        }
    }
    SUBCASE("outside points name their index") {
        try {
            map_points(flat(), {{0.1, 0.5}, {0.2, 1.5}}, MapDirection::forward);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("1") != std::string::npos);
        }
    }
}
