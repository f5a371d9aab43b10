#pragma once
/// Discrete fields on the straightened grid (y1, y2) in [0, period) x [0, 1]
/// and the mapped differential and integral operators.
///
/// y1: Fourier pseudo-spectral, N1 nodes. y2: N2 uniform intervals, N2+1 nodes
/// including both walls. Storage is row-major by y2 line: v[j * N1 + i].

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "slip/common.hpp"
#include "slip/fft.hpp"
#include "slip/geometry.hpp"

namespace slip {

class MappedGrid {
public:
    MappedGrid(std::size_t n1, std::size_t n2, double period, bool dealias);

    std::size_t n1() const { return n1_; }
    std::size_t n2() const { return n2_; }
    std::size_t rows() const { return n2_ + 1; }
    std::size_t size() const { return (n2_ + 1) * n1_; }
    std::size_t modes() const { return n1_ / 2 + 1; }
    double period() const { return period_; }
    double dy1() const { return period_ / static_cast<double>(n1_); }
    double dy2() const { return 1.0 / static_cast<double>(n2_); }
    double y1(std::size_t i) const { return dy1() * static_cast<double>(i); }
    double y2(std::size_t j) const { return dy2() * static_cast<double>(j); }
    bool dealias() const { return dealias_; }
    // Largest retained mode index after a quadratic product (|m| < N1/3).
    std::size_t cutoff() const { return cutoff_; }
    double wavenumber(std::size_t m) const;
    // k_m for m < M with the Nyquist entry set to 0 (derivative convention).
    const std::vector<double>& dk() const { return dk_; }

    // Trapezoid weights in y2 (sum to 1).
    const std::vector<double>& trap() const { return trap_; }
    // Weights w with sum_j w_j (D2 f)_j = f_N - f_0 exactly for the y2
    // derivative used here (positive, second order, sum to 1).
    const std::vector<double>& flux_weights() const { return flux_w_; }

private:
    std::size_t n1_, n2_;
    double period_;
    bool dealias_;
    std::size_t cutoff_;
    std::vector<double> trap_, flux_w_, dk_;
};

/// Everything that depends only on geometry and resolution.
struct Domain {
    ChannelGeometry geom;
    MappedGrid grid;
    CoordinateMap map;
    BoundaryFrame bottom, top;
    std::unique_ptr<RowFFT> fft;      // all N2+1 rows
    std::unique_ptr<RowFFT> fft_row;  // single row

    const BoundaryFrame& frame(Side s) const { return s == Side::bottom ? bottom : top; }
    double area() const;  // period * mean gap

    static std::shared_ptr<const Domain> make(const ChannelGeometry& g, std::size_t n2,
                                              bool dealias = true);
    static std::shared_ptr<const Domain> make_with_map(const ChannelGeometry& g,
                                                       const CoordinateMap& m, bool dealias = true);

private:
    Domain(const ChannelGeometry& g, const CoordinateMap& m, bool dealias);
};

using DomainPtr = std::shared_ptr<const Domain>;

struct Field {
    DomainPtr dom;
    Vec v;

    Field() = default;
    explicit Field(DomainPtr d, double fill = 0.0);

    std::size_t n1() const { return dom->grid.n1(); }
    std::size_t n2() const { return dom->grid.n2(); }
    double& operator()(std::size_t j, std::size_t i) { return v[j * n1() + i]; }
    double operator()(std::size_t j, std::size_t i) const { return v[j * n1() + i]; }
    double* row(std::size_t j) { return v.data() + j * n1(); }
    const double* row(std::size_t j) const { return v.data() + j * n1(); }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double c);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);

struct VectorField {
    Field x, y;
    VectorField() = default;
    explicit VectorField(DomainPtr d) : x(d), y(d) {}
    VectorField(Field a, Field b) : x(std::move(a)), y(std::move(b)) {}
};

/// t[a][b] = d_b u_a (physical components).
struct TensorField {
    std::array<std::array<Field, 2>, 2> t;
};

/// Sample f(x1, x2) at the physical node positions.
template <class F>
Field sample(DomainPtr d, F&& f) {
    Field out(d);
    const auto& g = d->geom;
    for (std::size_t j = 0; j <= d->grid.n2(); ++j) {
        const double y2 = d->grid.y2(j);
        for (std::size_t i = 0; i < d->grid.n1(); ++i) {
            const double lo = g.h_samples(Side::bottom)[i];
            const double x2 = lo + d->map.gap(i) * y2;
            out(j, i) = f(d->grid.y1(i), x2);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral-row helpers shared with the solvers and the time stepper.
namespace spec {

// Wall first-derivative stencil over 5 nodes (times 1/(2h)). Its error
// matches the centred interior stencil through third order.
inline constexpr double kWall[5] = {-5.0, 11.0, -10.0, 5.0, -1.0};

// D2 on a stack of rows (physical or spectral), width doubles per row.
void d2_rows(std::size_t rows, std::size_t width, double h, const double* in, double* out);
// Wall derivative of one side only; writes width values.
void d2_wall(std::size_t rows, std::size_t width, double h, const double* in, Side side, double* out);
// Multiply spectral rows by i*k_m. Nyquist is zeroed.
void d1(const MappedGrid& g, std::size_t rows, const double* in, double* out);
// Zero modes above the dealiasing cutoff (and Nyquist).
void truncate(const MappedGrid& g, std::size_t rows, double* s);

}  // namespace spec

// ---------------------------------------------------------------------------
// Differential operators.

Field d_y1(const Field& f);
Field d_y2(const Field& f);
VectorField physical_gradient(const Field& f);
Field divergence(const VectorField& u);
VectorField perp_gradient(const Field& phi);
Field vorticity(const VectorField& u);
TensorField velocity_gradient(const VectorField& u);
TensorField symmetric_gradient(const VectorField& u);
Field trace(const TensorField& t);
/// Mapped Laplacian g^{-1} d_l(a_kl d_k f) in flux form. Wall rows are zero.
Field laplacian(const Field& f);
/// Pointwise product with 2/3-rule truncation of both inputs and the result.
Field dealiased_product(const Field& a, const Field& b);

// ---------------------------------------------------------------------------
// Integrals and norms. Area integrals carry the Jacobian g = h+ - h-, boundary
// integrals the arc-length weight s'. y1: exact periodic mean, y2: trapezoid.

double integrate_area(const Field& f);
double integrate_boundary(const std::vector<double>& samples, const DomainPtr& d, Side side);
double integrate_boundary(const Field& f, Side side);
double lp_norm(const Field& f, double p);
double lp_norm(const VectorField& u, double p);
double lp_norm(const TensorField& t, double p);
double h1_seminorm(const Field& f);
double h1_seminorm(const VectorField& u);
/// Sum over nodes with wall rows excluded (used for residuals of operators
/// that are defined on interior rows only).
double l2_norm_interior(const Field& f);
double l2_norm_interior(const VectorField& u);

std::vector<double> wall_trace(const Field& f, Side side);
std::vector<double> tangential_velocity(const VectorField& u, Side side);
std::vector<double> normal_velocity(const VectorField& u, Side side);

/// Mean horizontal flux (1/|Omega|) int u1 dx, with the y2 weights adjoint to
/// the derivative so that mean_flux(perp_gradient(phi)) = phi_bottom - phi_top.
double mean_flux(const VectorField& u);

// ---------------------------------------------------------------------------
// Snapshot files: "SLPF", u32 version, u32 N1, u32 N2, u32 name length, name,
// then (N2+1) x N1 float64 values, little-endian, row-major.

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(const std::string& path, const std::string& name, const Field& f);
struct Snapshot {
    std::uint32_t n1 = 0, n2 = 0;
    std::string name;
    std::vector<double> values;
};
Snapshot read_snapshot(const std::string& path);
/// Reads into a field on d; throws Error on grid mismatch.
Field read_snapshot_field(const std::string& path, DomainPtr d, std::string* name = nullptr);

}  // namespace slip
