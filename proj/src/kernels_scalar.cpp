#include "slip/kernels.hpp"

namespace slip::kern {
namespace {

void axpby_s(std::size_t n, double a, const double* x, double b, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void mul_s(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_sub2_s(std::size_t n, const double* a, const double* b, const double* c,
                const double* d, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i] - c[i] * d[i];
}

void acc_mul_add2_s(std::size_t n, const double* a, const double* b, const double* c,
                    const double* d, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (out[i] + a[i] * b[i]) + c[i] * d[i];
}

void tri_solve_s(std::size_t rows, std::size_t w, const double* lo, const double* m,
                 const double* cp, double* x) {
    for (std::size_t i = 0; i < w; ++i) x[i] = x[i] * m[i];
    for (std::size_t j = 1; j < rows; ++j) {
        const double* l = lo + j * w;
        const double* mj = m + j * w;
        const double* prev = x + (j - 1) * w;
        double* xj = x + j * w;
        for (std::size_t i = 0; i < w; ++i) xj[i] = (xj[i] - l[i] * prev[i]) * mj[i];
    }
    for (std::size_t j = rows - 1; j-- > 0;) {
        const double* c = cp + j * w;
        const double* next = x + (j + 1) * w;
        double* xj = x + j * w;
        for (std::size_t i = 0; i < w; ++i) xj[i] = xj[i] - c[i] * next[i];
    }
}

double dot_s(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_s(std::size_t n, const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

const Table kScalar{"scalar", axpby_s, mul_s, mul_sub2_s, acc_mul_add2_s, tri_solve_s, dot_s, sum_s};

}  // namespace

const Table& scalar() { return kScalar; }

}  // namespace slip::kern
