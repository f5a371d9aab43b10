#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "slip/common.hpp"
#include "slip/fft.hpp"
#include "slip/kernels.hpp"

using namespace slip;

namespace {

Vec random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

bool same_bits(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
    return true;
}

}  // namespace

TEST_CASE("avx2 elementwise kernels match scalar bitwise") {
    const kern::Table* v = kern::avx2();
    if (!v) {
        MESSAGE("no AVX2 on this CPU; skipped");
        return;
    }
    const kern::Table& s = kern::scalar();
    std::mt19937_64 rng(11);
    // Odd lengths exercise the remainder loop.
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 129u, 1031u}) {
        Vec a = random_vec(n, rng), b = random_vec(n, rng), c = random_vec(n, rng), d = random_vec(n, rng);
        Vec o1(n), o2(n);
        s.axpby(n, 0.3, a.data(), -1.7, b.data(), o1.data());
        v->axpby(n, 0.3, a.data(), -1.7, b.data(), o2.data());
        CHECK(same_bits(o1, o2));
        s.mul(n, a.data(), b.data(), o1.data());
        v->mul(n, a.data(), b.data(), o2.data());
        CHECK(same_bits(o1, o2));
        s.mul_sub2(n, a.data(), b.data(), c.data(), d.data(), o1.data());
        v->mul_sub2(n, a.data(), b.data(), c.data(), d.data(), o2.data());
        CHECK(same_bits(o1, o2));
        o1 = c;
        o2 = c;
        s.acc_mul_add2(n, a.data(), b.data(), c.data(), d.data(), o1.data());
        v->acc_mul_add2(n, a.data(), b.data(), c.data(), d.data(), o2.data());
        CHECK(same_bits(o1, o2));
    }
}

TEST_CASE("avx2 reductions agree with scalar to rounding") {
    const kern::Table* v = kern::avx2();
    if (!v) return;
    std::mt19937_64 rng(12);
    for (std::size_t n : {5u, 64u, 1000u}) {
        Vec a = random_vec(n, rng, 0.0, 1.0), b = random_vec(n, rng, 0.0, 1.0);
        const double ds = kern::scalar().dot(n, a.data(), b.data());
        CHECK(v->dot(n, a.data(), b.data()) == doctest::Approx(ds).epsilon(1e-13));
        const double ss = kern::scalar().sum(n, a.data());
        CHECK(v->sum(n, a.data()) == doctest::Approx(ss).epsilon(1e-13));
    }
}

TEST_CASE("batched tridiagonal solve: scalar solves the system, avx2 matches it") {
    // Diagonally dominant system per column: lo x[j-1] + dg x[j] + up x[j+1] = r.
    const std::size_t rows = 17, w = 11;
    std::mt19937_64 rng(13);
    Vec lo = random_vec(rows * w, rng), up = random_vec(rows * w, rng), dg = random_vec(rows * w, rng, 3.0, 4.0);
    Vec r = random_vec(rows * w, rng);
    Vec m(rows * w), cp(rows * w, 0.0);
    for (std::size_t i = 0; i < w; ++i) {
        double piv = dg[i];
        m[i] = 1.0 / piv;
        cp[i] = up[i] * m[i];
        for (std::size_t j = 1; j < rows; ++j) {
            piv = dg[j * w + i] - lo[j * w + i] * cp[(j - 1) * w + i];
            m[j * w + i] = 1.0 / piv;
            cp[j * w + i] = up[j * w + i] * m[j * w + i];
        }
    }
    Vec x = r;
    kern::scalar().tri_solve(rows, w, lo.data(), m.data(), cp.data(), x.data());
    double worst = 0.0;
    for (std::size_t j = 0; j < rows; ++j)
        for (std::size_t i = 0; i < w; ++i) {
            double lhs = dg[j * w + i] * x[j * w + i];
            if (j > 0) lhs += lo[j * w + i] * x[(j - 1) * w + i];
            if (j + 1 < rows) lhs += up[j * w + i] * x[(j + 1) * w + i];
            worst = std::max(worst, std::abs(lhs - r[j * w + i]));
        }
    CHECK(worst < 1e-13);
    if (const kern::Table* v = kern::avx2()) {
        Vec y = r;
        v->tri_solve(rows, w, lo.data(), m.data(), cp.data(), y.data());
        CHECK(same_bits(x, y));
    }
}

TEST_CASE("select swaps the active table and returns the previous one") {
    const kern::Table& before = kern::active();
    const kern::Table& prev = kern::select(kern::scalar());
    CHECK(&prev == &before);
    CHECK(std::string(kern::active().name) == "scalar");
    kern::select(before);
}

TEST_CASE("row FFT round trip and scaling") {
    const std::size_t n = 32, rows = 3;
    RowFFT f(n, rows);
    Vec phys(rows * n), spec(rows * f.spec_width()), back(rows * n);
    for (std::size_t j = 0; j < rows; ++j)
        for (std::size_t i = 0; i < n; ++i) phys[j * n + i] = std::cos(2.0 * kPi * (j + 1) * i / n) + 0.5;
    f.forward(phys.data(), spec.data());
    // Forward transform is scaled by 1/N1: mean in mode 0, half amplitude in mode j+1.
    for (std::size_t j = 0; j < rows; ++j) {
        const double* s = spec.data() + j * f.spec_width();
        CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(s[2 * (j + 1)] == doctest::Approx(0.5).epsilon(1e-14));
    }
    f.inverse(spec.data(), back.data());
    for (std::size_t k = 0; k < phys.size(); ++k) CHECK(back[k] == doctest::Approx(phys[k]).epsilon(1e-13));
}
