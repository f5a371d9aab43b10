#pragma once
/// Periodic channel geometry: boundary profiles, frames, curvature and the
/// boundary-straightening map with its metric coefficients.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "slip/common.hpp"

namespace slip {

enum class Side { bottom, top };

inline const char* side_name(Side s) { return s == Side::bottom ? "bottom" : "top"; }

/// f(x) = c0 + sum_m a[m-1] cos(2 pi m x / L) + b[m-1] sin(2 pi m x / L)
struct FourierProfile {
    double c0 = 0.0;
    std::vector<double> a;
    std::vector<double> b;

    static FourierProfile constant(double c) { return FourierProfile{c, {}, {}}; }

    std::size_t order() const { return std::max(a.size(), b.size()); }
    bool is_constant() const;
    double value(double x, double period) const;
    double d1(double x, double period) const;
    double d2(double x, double period) const;
    double d3(double x, double period) const;
};

struct SlipSpec {
    FourierProfile bottom = FourierProfile::constant(1.0);
    FourierProfile top = FourierProfile::constant(1.0);

    static SlipSpec constant(double alpha) {
        return SlipSpec{FourierProfile::constant(alpha), FourierProfile::constant(alpha)};
    }
    const FourierProfile& on(Side s) const { return s == Side::bottom ? bottom : top; }
    bool is_constant() const { return bottom.is_constant() && top.is_constant(); }
    // 1/(2 alpha); only meaningful for one shared constant.
    double slip_length() const;
    void validate(double period, std::size_t samples) const;
};

class ChannelGeometry {
public:
    double period() const { return gamma_; }
    std::size_t n1() const { return n1_; }
    double min_gap() const { return d_; }
    double mean_gap() const { return mean_gap_; }
    bool flat() const { return flat_; }
    // h+ = 1 + h- up to 1e-12 (includes the flat case).
    bool identical_profiles() const { return identical_; }

    const FourierProfile& profile(Side s) const { return s == Side::bottom ? hm_ : hp_; }
    double h(Side s, double x) const { return profile(s).value(x, gamma_); }
    double dh(Side s, double x) const { return profile(s).d1(x, gamma_); }
    double d2h(Side s, double x) const { return profile(s).d2(x, gamma_); }

    double x1(std::size_t i) const { return gamma_ * static_cast<double>(i) / static_cast<double>(n1_); }
    // Samples on the y1 grid.
    const std::vector<double>& h_samples(Side s) const { return s == Side::bottom ? hm_s_ : hp_s_; }
    const std::vector<double>& dh_samples(Side s) const { return s == Side::bottom ? dhm_s_ : dhp_s_; }
    const std::vector<double>& d2h_samples(Side s) const { return s == Side::bottom ? d2hm_s_ : d2hp_s_; }
    double max_height(Side s) const;
    double min_height(Side s) const;

    friend ChannelGeometry build_geometry(double, const FourierProfile&, const FourierProfile&,
                                          std::size_t, bool);

private:
    double gamma_ = 2.0;
    std::size_t n1_ = 0;
    FourierProfile hm_, hp_;
    double d_ = 1.0, mean_gap_ = 1.0;
    bool flat_ = true, identical_ = true;
    std::vector<double> hm_s_, hp_s_, dhm_s_, dhp_s_, d2hm_s_, d2hp_s_;
};

/// Throws Error when the walls touch or cross (with the offending x1), or when
/// the mean gap differs from 1 and normalize is false. With normalize, h+ is
/// shifted so the mean gap is exactly 1.
ChannelGeometry build_geometry(double period, const FourierProfile& h_minus,
                               const FourierProfile& h_plus, std::size_t n1,
                               bool normalize = false);

struct BoundaryFrame {
    Side side;
    std::vector<double> n1, n2;    // outward unit normal
    std::vector<double> t1, t2;    // tau = n^perp, a^perp = (-a2, a1)
    std::vector<double> kappa;     // n . (tau . grad) tau
    std::vector<double> sprime;    // sqrt(1 + h'^2)
};

BoundaryFrame boundary_frame(const ChannelGeometry& g, Side side);

double curvature(const ChannelGeometry& g, Side side, double x1);

/// Metric data of the straightened domain on an N1 x (N2+1) node grid.
///
/// With g = h+ - h-, s = h-' + (h+' - h-') y2:
///   a11 = g, a12 = a21 = -s, a22 = (1 + s^2)/g
/// so that the Laplacian is g^{-1} d_l(a_kl d_k .).
class CoordinateMap {
public:
    std::size_t n1() const { return n1_; }
    std::size_t n2() const { return n2_; }
    std::size_t idx(std::size_t j, std::size_t i) const { return j * n1_ + i; }

    double gap(std::size_t i) const { return gap_[i]; }
    double s(std::size_t j, std::size_t i) const { return s_[idx(j, i)]; }
    double a11(std::size_t, std::size_t i) const { return gap_[i]; }
    double a12(std::size_t j, std::size_t i) const { return -s_[idx(j, i)]; }
    double a22(std::size_t j, std::size_t i) const { return a22_[idx(j, i)]; }
    // a22 at y2 = (j + 1/2)/N2, j = 0..N2-1.
    double a22_half(std::size_t j, std::size_t i) const { return a22h_[idx(j, i)]; }

    const std::vector<double>& gap_samples() const { return gap_; }
    const std::vector<double>& s_samples() const { return s_; }
    const std::vector<double>& a22_samples() const { return a22_; }
    const std::vector<double>& a22_half_samples() const { return a22h_; }

    // grad Phi o Psi and grad Psi at a node, row-major 2x2.
    std::array<double, 4> jac_phi(std::size_t j, std::size_t i) const;
    std::array<double, 4> jac_psi(std::size_t j, std::size_t i) const;

    double ellipticity() const { return ellipticity_; }

    friend CoordinateMap metric_coeffs(const ChannelGeometry&, std::size_t);
    // Fault-injection hook for the identity suite; pair with check_metric.
    friend CoordinateMap corrupt_metric_for_test(const CoordinateMap&, double);

private:
    std::size_t n1_ = 0, n2_ = 0;
    std::vector<double> gap_, s_, a22_, a22h_;
    double ellipticity_ = 0.0;
};

/// Throws Error when the smallest eigenvalue of a over the nodes is < 1e-8 or
/// the symmetry / Jacobian-inverse checks fail.
CoordinateMap metric_coeffs(const ChannelGeometry& g, std::size_t n2);
CoordinateMap corrupt_metric_for_test(const CoordinateMap& m, double a22_scale);
void check_metric(const CoordinateMap& m);

/// Smallest eigenvalue of the 2x2 metric at (x1, y2) evaluated analytically.
double metric_min_eigenvalue(const ChannelGeometry& g, double x1, double y2);

enum class MapDirection { forward, inverse };

struct Point {
    double a, b;
};

/// forward: x -> y = Phi(x), inverse: y -> x = Psi(y). Throws Error naming the
/// index of the first point outside the source domain.
std::vector<Point> map_points(const ChannelGeometry& g, const std::vector<Point>& pts,
                              MapDirection dir);

}  // namespace slip
