#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "slip/fields.hpp"

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

double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace

TEST_CASE("y1 and y2 derivatives") {
    auto d = flat(32);
    CHECK(max_abs(d_y1(Field(d, 3.0))) < 1e-14);
    CHECK(max_abs(d_y2(Field(d, 3.0))) < 1e-12);

    Field s = sample(d, [](double x, double) { return std::sin(kPi * x); });
    Field ds = d_y1(s);
    Field ex = sample(d, [](double x, double) { return kPi * std::cos(kPi * x); });
    CHECK(max_abs(ds - ex) < 1e-12);

    auto err = [](std::size_t n2) {
        auto dd = flat(n2);
        Field f = sample(dd, [](double, double y) { return y * y * y; });
        Field e = sample(dd, [](double, double y) { return 3.0 * y * y; });
        return max_abs(d_y2(f) - e);
    };
    CHECK(order(err(32), err(64)) >= 1.9);
}

TEST_CASE("perp gradient of a separable streamfunction") {
    auto err = [](std::size_t n2) {
        auto d = flat(n2);
        auto phi = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
        VectorField u = perp_gradient(sample(d, phi));
        Field ux = sample(d, [](double x, double y) { return -kPi * std::sin(kPi * x) * std::cos(kPi * y); });
        Field uy = sample(d, [](double x, double y) { return kPi * std::cos(kPi * x) * std::sin(kPi * y); });
        return std::max(max_abs(u.x - ux), max_abs(u.y - uy));
    };
    const double e1 = err(32), e2 = err(64);
    CHECK(e1 < 1e-2);
    CHECK(order(e1, e2) >= 1.8);

    auto d = flat(32);
    VectorField z = perp_gradient(Field(d, 2.5));
    CHECK(max_abs(z.x) < 1e-12);
    CHECK(max_abs(z.y) < 1e-12);
}

TEST_CASE("vorticity of perp grad phi is the Laplacian of phi") {
    auto err = [](std::size_t n2) {
        auto d = flat(n2);
        auto phi = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
        Field w = vorticity(perp_gradient(sample(d, phi)));
        Field ex = sample(d, [&](double x, double y) { return -2.0 * kPi * kPi * phi(x, y); });
        return max_abs(w - ex);
    };
    CHECK(order(err(32), err(64)) >= 1.8);
}

TEST_CASE("curved channel: perp grad is discretely divergence free") {
    // The mapped y1 and y2 derivatives commute, so the discrete divergence of
    // a perp gradient vanishes to round-off at every resolution.
    for (std::size_t n2 : {16u, 64u}) {
        auto d = curved(n2);
        Field phi = sample(d, [](double x, double y) { return std::cos(kPi * x) * y * y + 0.3 * y; });
        CHECK(lp_norm(divergence(perp_gradient(phi)), 2.0) < 1e-11);
    }
}

TEST_CASE("rigid translation and the symmetric gradient trace") {
    auto d = curved(32);
    VectorField c(Field(d, 1.0), Field(d, -2.0));
    CHECK(max_abs(vorticity(c)) < 1e-12);
    auto D = symmetric_gradient(c);
    for (auto& row : D.t)
        for (auto& f : row) CHECK(max_abs(f) < 1e-12);

    VectorField u(sample(d, [](double x, double y) { return std::sin(kPi * x) * y; }),
                  sample(d, [](double x, double y) { return std::cos(kPi * x) * y * y; }));
    CHECK(max_abs(trace(symmetric_gradient(u)) - divergence(u)) < 1e-12);
}

TEST_CASE("integrals and norms") {
    auto d = flat(32);
    CHECK(integrate_area(Field(d, 1.0)) == doctest::Approx(2.0).epsilon(1e-14));
    Field s = sample(d, [](double x, double) { return std::sin(kPi * x); });
    CHECK(lp_norm(s, 2.0) * lp_norm(s, 2.0) == doctest::Approx(1.0).epsilon(1e-13));

    // Arc length of 0.1 sin(pi x) over one period by a dense midpoint rule.
    auto c = curved(32, 64);
    double len = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double x = 2.0 * (k + 0.5) / n, hp = 0.1 * kPi * std::cos(kPi * x);
        len += std::sqrt(1.0 + hp * hp) * 2.0 / n;
    }
    CHECK(std::abs(integrate_boundary(Field(c, 1.0), Side::bottom) - len) < 1e-8);
}

TEST_CASE("wall traces and tangential velocity") {
    auto d = flat(16);
    VectorField zero(d);
    for (double v : tangential_velocity(zero, Side::bottom)) CHECK(v == 0.0);

    VectorField u(Field(d, 1.0), Field(d, 0.0));
    for (double v : tangential_velocity(u, Side::bottom)) CHECK(v == doctest::Approx(1.0));
    for (double v : tangential_velocity(u, Side::top)) CHECK(v == doctest::Approx(-1.0));

    // Curved: u = (1, 0) gives u_tau = 1/s' on the bottom, so int u_tau^2 ds = int dx / s'.
    auto c = curved(16, 64);
    VectorField uc(Field(c, 1.0), Field(c, 0.0));
    auto ut = tangential_velocity(uc, Side::bottom);
    for (double& v : ut) v *= v;
    double ref = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double x = 2.0 * (k + 0.5) / n, hp = 0.1 * kPi * std::cos(kPi * x);
        ref += 2.0 / n / std::sqrt(1.0 + hp * hp);
    }
    CHECK(std::abs(integrate_boundary(ut, c, Side::bottom) - ref) < 1e-6);

    // Wall-constant phi: no normal flow through either wall.
    Field phi = sample(c, [&](double x, double y) {
        const double y2 = (y - 0.1 * std::sin(kPi * x));
        return y2 * y2 * (1.0 - y2) * (1.0 - y2) * std::cos(kPi * x) - y2;
    });
    for (Side s : {Side::bottom, Side::top})
        for (double v : normal_velocity(perp_gradient(phi), s)) CHECK(std::abs(v) < 1e-2);
}

TEST_CASE("mean flux equals the wall difference of phi exactly") {
    auto c = curved(24);
    Field phi = sample(c, [](double x, double y) {
        const double y2 = y - 0.1 * std::sin(kPi * x);
        return -0.7 * y2 + std::sin(kPi * y2) * std::cos(kPi * x);
    });
    CHECK(std::abs(mean_flux(perp_gradient(phi)) - 0.7) < 1e-12);
}

TEST_CASE("dealiased products have no energy above the cutoff") {
    auto d = flat(8, 48);
    Field a = sample(d, [](double x, double) { return std::sin(5 * kPi * x) + std::cos(11 * kPi * x); });
    Field b = sample(d, [](double x, double) { return std::cos(13 * kPi * x); });
    Field p = dealiased_product(a, b);
    const auto& g = d->grid;
    Vec spec(d->fft->rows() * d->fft->spec_width());
    d->fft->forward(p.v.data(), spec.data());
    double high = 0.0;
    for (std::size_t j = 0; j < g.rows(); ++j)
        for (std::size_t m = g.cutoff() + 1; m < g.modes(); ++m) {
            const double* s = spec.data() + j * d->fft->spec_width() + 2 * m;
            high = std::max({high, std::abs(s[0]), std::abs(s[1])});
        }
    CHECK(high < 1e-15);
}

TEST_CASE("snapshot round trip") {
    auto d = curved(8, 16);
    Field f = sample(d, [](double x, double y) { return x * y + 0.25; });
    const auto path = (std::filesystem::temp_directory_path() / "slip_snapshot_test.bin").string();
    write_snapshot(path, "theta", f);
    std::string name;
    Field g = read_snapshot_field(path, d, &name);
    CHECK(name == "theta");
    CHECK(std::memcmp(f.v.data(), g.v.data(), f.v.size() * sizeof(double)) == 0);
    CHECK_THROWS_AS(read_snapshot_field(path, curved(16, 16)), Error);
    std::filesystem::remove(path);
}
