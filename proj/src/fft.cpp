#include "slip/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace slip {

namespace {
// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct RowFFT::Impl {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    mutable Vec scratch;  // c2r destroys its input
    mutable std::mutex scratch_mutex;
};

RowFFT::RowFFT(std::size_t n1, std::size_t rows) : n1_(n1), rows_(rows), impl_(new Impl) {
    if (n1 < 2 || n1 % 2 != 0) throw Error("RowFFT: N1 must be even and >= 2");
    Vec phys(rows * n1);
    Vec spec(rows * spec_width());
    impl_->scratch.resize(rows * spec_width());
    int n = static_cast<int>(n1);
    int m = static_cast<int>(modes());
    std::lock_guard<std::mutex> lock(planner_mutex());
    impl_->fwd = fftw_plan_many_dft_r2c(1, &n, static_cast<int>(rows), phys.data(), nullptr, 1,
                                        n, reinterpret_cast<fftw_complex*>(spec.data()), nullptr,
                                        1, m, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_many_dft_c2r(1, &n, static_cast<int>(rows),
                                        reinterpret_cast<fftw_complex*>(spec.data()), nullptr, 1,
                                        m, phys.data(), nullptr, 1, n, FFTW_ESTIMATE);
    if (!impl_->fwd || !impl_->inv) throw Error("RowFFT: FFTW planning failed");
}

RowFFT::~RowFFT() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->inv) fftw_destroy_plan(impl_->inv);
}

void RowFFT::forward(const double* phys, double* spec) const {
    fftw_execute_dft_r2c(impl_->fwd, const_cast<double*>(phys),
                         reinterpret_cast<fftw_complex*>(spec));
    const double s = 1.0 / static_cast<double>(n1_);
    const std::size_t total = rows_ * spec_width();
    for (std::size_t i = 0; i < total; ++i) spec[i] *= s;
}

void RowFFT::inverse(const double* spec, double* phys) const {
    std::lock_guard<std::mutex> lock(impl_->scratch_mutex);
    std::memcpy(impl_->scratch.data(), spec, rows_ * spec_width() * sizeof(double));
    fftw_execute_dft_c2r(impl_->inv, reinterpret_cast<fftw_complex*>(impl_->scratch.data()),
                         phys);
}

}  // namespace slip
