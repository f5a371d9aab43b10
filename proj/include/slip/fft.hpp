#pragma once
/// Batched real-to-complex transforms along y1 (one transform per grid row).
///
/// Spectral rows hold M = N1/2+1 complex coefficients, interleaved re/im, so a
/// row is 2M doubles. Forward transforms are scaled by 1/N1.

#include <cstddef>
#include <memory>

#include "slip/common.hpp"

namespace slip {

class RowFFT {
public:
    RowFFT(std::size_t n1, std::size_t rows);
    ~RowFFT();
    RowFFT(const RowFFT&) = delete;
    RowFFT& operator=(const RowFFT&) = delete;

    std::size_t n1() const { return n1_; }
    std::size_t rows() const { return rows_; }
    std::size_t modes() const { return n1_ / 2 + 1; }
    std::size_t spec_width() const { return 2 * modes(); }

    // phys: rows*n1, spec: rows*2M. Both must be 64-byte aligned.
    void forward(const double* phys, double* spec) const;
    // spec is left untouched.
    void inverse(const double* spec, double* phys) const;

private:
    std::size_t n1_, rows_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace slip
