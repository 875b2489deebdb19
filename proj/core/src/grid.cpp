#include "ttomo/grid.hpp"

#include <atomic>
#include <cstring>

#include "ttomo/parallel.hpp"

namespace ttomo {

namespace {
std::atomic<int> g_workers{0};
}

int worker_count()
{
    int w = g_workers.load(std::memory_order_relaxed);
    if (w <= 0) {
        w = int(std::thread::hardware_concurrency());
        if (w <= 0) w = 1;
    }
    return w;
}

void set_worker_count(int n) { g_workers.store(n, std::memory_order_relaxed); }

Grid::Grid(int n) : n_(n), h_(2.0 / (n - 1)), disk_w_(std::size_t(n) * n, 0.0)
{
    if (n < 8) throw DomainError("Grid: n must be at least 8");
    const double cell = h_ * h_;
    const double half = 0.5 * h_;
    // 16x16 subsampling of cells crossing the circle.
    const int sub = 16;
    for (int iy = 0; iy < n_; ++iy) {
        for (int ix = 0; ix < n_; ++ix) {
            const double cx = x(ix), cy = y(iy);
            const double rc = std::hypot(cx, cy);
            const double margin = half * 1.4142135623730951;
            double w;
            if (rc + margin <= 1.0) {
                w = cell;
            } else if (rc - margin >= 1.0) {
                w = 0.0;
            } else {
                int cnt = 0;
                for (int sy = 0; sy < sub; ++sy) {
                    const double py = cy - half + (sy + 0.5) * h_ / sub;
                    for (int sx = 0; sx < sub; ++sx) {
                        const double px = cx - half + (sx + 0.5) * h_ / sub;
                        if (px * px + py * py <= 1.0) ++cnt;
                    }
                }
                w = cell * double(cnt) / double(sub * sub);
            }
            disk_w_[idx(ix, iy)] = w;
        }
    }
}

std::vector<std::uint8_t> Grid::interior_mask(double margin) const
{
    std::vector<std::uint8_t> m(size(), 0);
    for (int iy = 0; iy < n_; ++iy)
        for (int ix = 0; ix < n_; ++ix)
            if (std::hypot(x(ix), y(iy)) <= 1.0 - margin) m[idx(ix, iy)] = 1;
    return m;
}

std::uint64_t Grid::hash() const
{
    std::uint64_t h = fnv1a(&n_, sizeof n_);
    return fnv1a(&h_, sizeof h_, h);
}

GridPtr make_grid(int n) { return std::make_shared<const Grid>(n); }

void axpy(Field& y, cdouble a, const Field& x)
{
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Field scaled(const Field& x, cdouble a)
{
    Field r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i];
    return r;
}

void add_inplace(Field& y, const Field& x)
{
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

void sub_inplace(Field& y, const Field& x)
{
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= x[i];
}

void mul_inplace(Field& y, const Field& x)
{
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= x[i];
}

void mul_inplace(Field& y, const std::vector<double>& x)
{
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= x[i];
}

Field conj_field(const Field& x)
{
    Field r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = std::conj(x[i]);
    return r;
}

cdouble disk_inner(const Grid& g, const Field& u, const Field& v, const std::vector<double>* weight)
{
    cdouble acc = 0.0;
    const auto& w = g.disk_weights();
    if (weight) {
        for (std::size_t i = 0; i < u.size(); ++i)
            if (w[i] > 0.0) acc += w[i] * (*weight)[i] * u[i] * std::conj(v[i]);
    } else {
        for (std::size_t i = 0; i < u.size(); ++i)
            if (w[i] > 0.0) acc += w[i] * u[i] * std::conj(v[i]);
    }
    return acc;
}

double disk_norm(const Grid& g, const Field& u, const std::vector<double>* weight)
{
    return std::sqrt(std::abs(disk_inner(g, u, u, weight)));
}

namespace {

// 1D fourth-order first derivative: centered five-point stencils inside,
// biased five-point stencils on the two rows nearest each end. Exact for
// quartics, so monomial kernels are differentiated exactly.
//
// Row layout: start offset s and five coefficients over f[s..s+4], scaled by
// 1/(12 h).
struct D1Row {
    int s;
    double c[5];
};

inline D1Row d1_row(int i, int n)
{
    if (i == 0) return {0, {-25.0, 48.0, -36.0, 16.0, -3.0}};
    if (i == 1) return {0, {-3.0, -10.0, 18.0, -6.0, 1.0}};
    if (i == n - 2) return {n - 5, {-1.0, 6.0, -18.0, 10.0, 3.0}};
    if (i == n - 1) return {n - 5, {3.0, -16.0, 36.0, -48.0, 25.0}};
    return {i - 2, {1.0, -8.0, 0.0, 8.0, -1.0}};
}

template <typename Get, typename Put>
void d1_line(int n, double inv12h, Get get, Put put)
{
    for (int i = 0; i < n; ++i) {
        const D1Row r = d1_row(i, n);
        cdouble acc = 0.0;
        for (int j = 0; j < 5; ++j) acc += r.c[j] * get(r.s + j);
        put(i, inv12h * acc);
    }
}

template <typename Get, typename Acc>
void d1_line_transpose_4(int n, double inv12h, Get get, Acc acc)
{
    for (int i = 0; i < n; ++i) {
        const D1Row r = d1_row(i, n);
        const cdouble v = inv12h * get(i);
        for (int j = 0; j < 5; ++j) acc(r.s + j, r.c[j] * v);
    }
}

} // namespace

void derivative(const Grid& g, const Field& u, Deriv d, Field& out)
{
    const int n = g.n();
    out.assign(g.size(), cdouble(0.0));
    const double inv12h = 1.0 / (12.0 * g.h());
    if (d == Deriv::X) {
        for (int iy = 0; iy < n; ++iy) {
            const std::size_t row = g.idx(0, iy);
            d1_line(
                n, inv12h, [&](int i) { return u[row + i]; },
                [&](int i, cdouble v) { out[row + i] = v; });
        }
    } else {
        for (int ix = 0; ix < n; ++ix) {
            d1_line(
                n, inv12h, [&](int i) { return u[g.idx(ix, i)]; },
                [&](int i, cdouble v) { out[g.idx(ix, i)] = v; });
        }
    }
}

Field derivative(const Grid& g, const Field& u, Deriv d)
{
    Field out;
    derivative(g, u, d, out);
    return out;
}

void d_z(const Grid& g, const Field& u, Field& out)
{
    Field ux, uy;
    derivative(g, u, Deriv::X, ux);
    derivative(g, u, Deriv::Y, uy);
    out.resize(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (ux[i] - kI * uy[i]);
}

void d_zbar(const Grid& g, const Field& u, Field& out)
{
    Field ux, uy;
    derivative(g, u, Deriv::X, ux);
    derivative(g, u, Deriv::Y, uy);
    out.resize(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (ux[i] + kI * uy[i]);
}

void derivative_transpose(const Grid& g, const Field& u, Deriv d, Field& out)
{
    const int n = g.n();
    out.assign(g.size(), cdouble(0.0));
    const double inv12h = 1.0 / (12.0 * g.h());
    if (d == Deriv::X) {
        for (int iy = 0; iy < n; ++iy) {
            const std::size_t row = g.idx(0, iy);
            d1_line_transpose_4(
                n, inv12h, [&](int i) { return u[row + i]; },
                [&](int i, cdouble v) { out[row + i] += v; });
        }
    } else {
        for (int ix = 0; ix < n; ++ix) {
            d1_line_transpose_4(
                n, inv12h, [&](int i) { return u[g.idx(ix, i)]; },
                [&](int i, cdouble v) { out[g.idx(ix, i)] += v; });
        }
    }
}

void d_z_adjoint(const Grid& g, const Field& u, Field& out)
{
    // Dx, Dy have real coefficients, so (0.5(Dx - i Dy))^H = 0.5(Dx^T + i Dy^T).
    Field tx, ty;
    derivative_transpose(g, u, Deriv::X, tx);
    derivative_transpose(g, u, Deriv::Y, ty);
    out.resize(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (tx[i] + kI * ty[i]);
}

void d_zbar_adjoint(const Grid& g, const Field& u, Field& out)
{
    Field tx, ty;
    derivative_transpose(g, u, Deriv::X, tx);
    derivative_transpose(g, u, Deriv::Y, ty);
    out.resize(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (tx[i] - kI * ty[i]);
}

namespace {

// Lagrange cubic weights for target s relative to nodes {0,1,2,3}.
inline void lagrange4(double s, double w[4])
{
    const double s1 = s - 1.0, s2 = s - 2.0, s3 = s - 3.0;
    w[0] = -(s1 * s2 * s3) / 6.0;
    w[1] = (s * s2 * s3) / 2.0;
    w[2] = -(s * s1 * s3) / 2.0;
    w[3] = (s * s1 * s2) / 6.0;
}

} // namespace

InterpStencil interp_stencil(const Grid& g, double x, double y)
{
    const int n = g.n();
    const double fx = (x + 1.0) / g.h();
    const double fy = (y + 1.0) / g.h();
    int ix = int(std::floor(fx)) - 1;
    int iy = int(std::floor(fy)) - 1;
    ix = std::max(0, std::min(ix, n - 4));
    iy = std::max(0, std::min(iy, n - 4));
    InterpStencil s;
    s.ix0 = ix;
    s.iy0 = iy;
    lagrange4(fx - ix, s.wx);
    lagrange4(fy - iy, s.wy);
    return s;
}

cdouble interp(const Grid& g, const Field& u, double x, double y)
{
    return interp_apply(g, u, interp_stencil(g, x, y));
}

void binomial_smooth(const Grid& g, Field& f, int passes)
{
    if (passes <= 0) return;
    const int n = g.n();
    Field tmp(f.size());
    for (int p = 0; p < passes; ++p) {
        // x pass
        for (int iy = 0; iy < n; ++iy) {
            const std::size_t row = g.idx(0, iy);
            for (int ix = 0; ix < n; ++ix) {
                cdouble acc = 0.5 * f[row + ix];
                if (ix > 0) acc += 0.25 * f[row + ix - 1];
                if (ix + 1 < n) acc += 0.25 * f[row + ix + 1];
                tmp[row + ix] = acc;
            }
        }
        // y pass
        for (int ix = 0; ix < n; ++ix) {
            for (int iy = 0; iy < n; ++iy) {
                cdouble acc = 0.5 * tmp[g.idx(ix, iy)];
                if (iy > 0) acc += 0.25 * tmp[g.idx(ix, iy - 1)];
                if (iy + 1 < n) acc += 0.25 * tmp[g.idx(ix, iy + 1)];
                f[g.idx(ix, iy)] = acc;
            }
        }
    }
}

} // namespace ttomo
