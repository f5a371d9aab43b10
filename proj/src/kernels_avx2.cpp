// Compiled with -mavx2. Only reached after a runtime CPU check.
#include <immintrin.h>

#include "slip/kernels.hpp"

namespace slip::kern {
namespace {

void axpby_v(std::size_t n, double a, const double* x, double b, const double* y, double* out) {
    const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        __m256d q = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(p, q));
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void mul_v(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_sub2_v(std::size_t n, const double* a, const double* b, const double* c,
                const double* d, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d q = _mm256_mul_pd(_mm256_loadu_pd(c + i), _mm256_loadu_pd(d + i));
        _mm256_storeu_pd(out + i, _mm256_sub_pd(p, q));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i] - c[i] * d[i];
}

void acc_mul_add2_v(std::size_t n, const double* a, const double* b, const double* c,
                    const double* d, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d q = _mm256_mul_pd(_mm256_loadu_pd(c + i), _mm256_loadu_pd(d + i));
        __m256d o = _mm256_add_pd(_mm256_loadu_pd(out + i), p);
        _mm256_storeu_pd(out + i, _mm256_add_pd(o, q));
    }
    for (; i < n; ++i) out[i] = (out[i] + a[i] * b[i]) + c[i] * d[i];
}

void tri_solve_v(std::size_t rows, std::size_t w, const double* lo, const double* m,
                 const double* cp, double* x) {
    std::size_t i = 0;
    for (; i + 4 <= w; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(m + i)));
    for (; i < w; ++i) x[i] = x[i] * m[i];

    for (std::size_t j = 1; j < rows; ++j) {
        const double* l = lo + j * w;
        const double* mj = m + j * w;
        const double* prev = x + (j - 1) * w;
        double* xj = x + j * w;
        i = 0;
        for (; i + 4 <= w; i += 4) {
            __m256d t = _mm256_mul_pd(_mm256_loadu_pd(l + i), _mm256_loadu_pd(prev + i));
            t = _mm256_sub_pd(_mm256_loadu_pd(xj + i), t);
            _mm256_storeu_pd(xj + i, _mm256_mul_pd(t, _mm256_loadu_pd(mj + i)));
        }
        for (; i < w; ++i) xj[i] = (xj[i] - l[i] * prev[i]) * mj[i];
    }
    for (std::size_t j = rows - 1; j-- > 0;) {
        const double* c = cp + j * w;
        const double* next = x + (j + 1) * w;
        double* xj = x + j * w;
        i = 0;
        for (; i + 4 <= w; i += 4) {
            __m256d t = _mm256_mul_pd(_mm256_loadu_pd(c + i), _mm256_loadu_pd(next + i));
            _mm256_storeu_pd(xj + i, _mm256_sub_pd(_mm256_loadu_pd(xj + i), t));
        }
        for (; i < w; ++i) xj[i] = xj[i] - c[i] * next[i];
    }
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_v(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_v(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

const Table kAvx2{"avx2", axpby_v, mul_v, mul_sub2_v, acc_mul_add2_v, tri_solve_v, dot_v, sum_v};

}  // namespace

const Table* avx2_table_unchecked() { return &kAvx2; }

}  // namespace slip::kern
