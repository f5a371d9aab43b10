#pragma once
/// Inner-loop kernels with a scalar reference and an AVX2 variant.
///
/// Elementwise kernels are bit-identical across variants (no FMA, same
/// operation order per element). Reductions use a different summation order
/// in the vector variant and agree only to rounding.

#include <cstddef>
#include <string>

namespace slip::kern {

struct Table {
    const char* name;
    // out = a*x + b*y
    void (*axpby)(std::size_t n, double a, const double* x, double b, const double* y, double* out);
    // out = x*y
    void (*mul)(std::size_t n, const double* x, const double* y, double* out);
    // out = a*b - c*d
    void (*mul_sub2)(std::size_t n, const double* a, const double* b, const double* c,
                     const double* d, double* out);
    // out = (out + a*b) + c*d
    void (*acc_mul_add2)(std::size_t n, const double* a, const double* b, const double* c,
                         const double* d, double* out);
    // Batched tridiagonal solve, in place on x[rows][width]. Factors come from
    // tri_factor: lo = sub-diagonal, m = 1/pivot, cp = scaled super-diagonal.
    void (*tri_solve)(std::size_t rows, std::size_t width, const double* lo, const double* m,
                      const double* cp, double* x);
    double (*dot)(std::size_t n, const double* x, const double* y);
    double (*sum)(std::size_t n, const double* x);
};

const Table& scalar();
// nullptr when the CPU lacks AVX2.
const Table* avx2();

// Active table. Chosen once: SLIP_KERNELS=scalar|avx2|auto (default auto).
const Table& active();
// Override for tests; returns the previous table.
const Table& select(const Table& t);

}  // namespace slip::kern
