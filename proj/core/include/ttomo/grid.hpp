#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "ttomo/common.hpp"

namespace ttomo {

using Field = std::vector<cdouble>; // n*n row-major (iy * n + ix)

// Cartesian node-centered grid on the square [-1,1]^2, masked to the closed
// unit disk for integration. Fields are stored on the full square so that
// interpolation stencils near the rim stay regular; the mask only enters
// inner products and solver right-hand sides.
//
// Disk quadrature weights are cell areas clipped to the disk: cells crossing
// the circle are subsampled once at construction. This keeps integrals of
// smooth non-vanishing integrands at O(h^2) accuracy instead of the O(h)
// of a hard mask.
class Grid {
public:
    explicit Grid(int n);

    int n() const { return n_; }
    double h() const { return h_; }
    std::size_t size() const { return std::size_t(n_) * n_; }

    double x(int ix) const { return -1.0 + h_ * ix; }
    double y(int iy) const { return -1.0 + h_ * iy; }
    std::size_t idx(int ix, int iy) const { return std::size_t(iy) * n_ + ix; }

    bool inside_disk(int ix, int iy) const { return disk_w_[idx(ix, iy)] > 0.0; }

    // Clipped cell area around node (ix,iy); zero for nodes whose cell lies
    // outside the closed disk.
    double disk_weight(std::size_t i) const { return disk_w_[i]; }
    const std::vector<double>& disk_weights() const { return disk_w_; }

    // Nodes with |x| <= 1 - margin (used to restrict residual checks away
    // from one-sided stencil rows).
    std::vector<std::uint8_t> interior_mask(double margin) const;

    Field zero_field() const { return Field(size(), cdouble(0.0)); }

    std::uint64_t hash() const;

private:
    int n_;
    double h_;
    std::vector<double> disk_w_;
};

using GridPtr = std::shared_ptr<const Grid>;
GridPtr make_grid(int n);

// --- field algebra -----------------------------------------------------

void axpy(Field& y, cdouble a, const Field& x);
Field scaled(const Field& x, cdouble a);
void add_inplace(Field& y, const Field& x);
void sub_inplace(Field& y, const Field& x);
void mul_inplace(Field& y, const Field& x);      // pointwise
void mul_inplace(Field& y, const std::vector<double>& x);
Field conj_field(const Field& x);

// Disk L2 inner product <u,v> = sum w_i u_i conj(v_i) dA, optionally with a
// positive pointwise weight (e.g. the conformal area factor e^{2 lambda}).
cdouble disk_inner(const Grid& g, const Field& u, const Field& v,
                   const std::vector<double>* weight = nullptr);
double disk_norm(const Grid& g, const Field& u, const std::vector<double>* weight = nullptr);

// --- first-order derivatives -------------------------------------------

// Fourth-order centered stencils, biased five-point rows at the square edge.
enum class Deriv { X, Y };
void derivative(const Grid& g, const Field& u, Deriv d, Field& out);
Field derivative(const Grid& g, const Field& u, Deriv d);

// Wirtinger derivatives: dz = (dx - i dy)/2, dzbar = (dx + i dy)/2.
void d_z(const Grid& g, const Field& u, Field& out);
void d_zbar(const Grid& g, const Field& u, Field& out);

// Exact Hermitian adjoints of the derivative stencils with respect to the
// plain dot product sum_i u_i conj(v_i): <D u, v> = <u, D^H v> to rounding.
// Needed by adjoint-consistent solvers.
void derivative_transpose(const Grid& g, const Field& u, Deriv d, Field& out);
void d_z_adjoint(const Grid& g, const Field& u, Field& out);
void d_zbar_adjoint(const Grid& g, const Field& u, Field& out);

// --- interpolation ------------------------------------------------------

// Cubic Lagrange interpolation on a 4x4 stencil clamped to the square.
// Fields are defined on the full square, so evaluation anywhere in
// [-1,1]^2 is valid.
struct InterpStencil {
    int ix0, iy0;      // origin of the 4x4 block
    double wx[4], wy[4];
};

InterpStencil interp_stencil(const Grid& g, double x, double y);

inline cdouble interp_apply(const Grid& g, const Field& u, const InterpStencil& s)
{
    cdouble acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        cdouble row = 0.0;
        const std::size_t base = g.idx(s.ix0, s.iy0 + j);
        for (int i = 0; i < 4; ++i) row += s.wx[i] * u[base + i];
        acc += s.wy[j] * row;
    }
    return acc;
}

cdouble interp(const Grid& g, const Field& u, double x, double y);

// Separable 3x3 binomial smoothing with zero extension beyond the square;
// symmetric as a matrix, so it is its own transpose. Used by the inversion
// operators to bandlimit the unknowns to what the fan sampling resolves.
void binomial_smooth(const Grid& g, Field& f, int passes);

} // namespace ttomo
