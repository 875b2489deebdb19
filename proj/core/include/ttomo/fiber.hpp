#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "ttomo/geometry.hpp"
#include "ttomo/grid.hpp"
#include "ttomo/metric.hpp"

namespace ttomo {

// Grid + metric pair with cached integer powers of e^{lambda}. Shared
// read-only by every module that works on the same surface model.
class Surface {
public:
    Surface(GridPtr grid, ConformalMetric metric);

    const Grid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    const ConformalMetric& metric() const { return metric_; }

    // e^{s lambda} sampled on the grid, s integer, cached.
    const std::vector<double>& exp_lambda(int s) const;
    // Area weight e^{2 lambda} of the metric surface measure.
    const std::vector<double>& area_weight() const { return exp_lambda(2); }

    std::uint64_t hash() const;

private:
    GridPtr grid_;
    ConformalMetric metric_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::vector<double>> exp_cache_;
};

using SurfacePtr = std::shared_ptr<const Surface>;
SurfacePtr make_surface(GridPtr grid, ConformalMetric metric);

// One signed fiber-frequency component u(x) e^{ik theta}.
struct ModeFunction {
    int k = 0;
    Field field;
};

// Function on SM stored as its fiber Fourier stack: u(x,theta) =
// sum_k mode_k(x) e^{ik theta}. Fields live on the full square grid; the
// disk mask only enters inner products.
class FiberFunction {
public:
    FiberFunction() = default;
    explicit FiberFunction(GridPtr g) : grid_(std::move(g)) {}

    const GridPtr& grid() const { return grid_; }
    bool empty() const { return modes_.empty(); }
    const std::map<int, Field>& modes() const { return modes_; }

    bool has_mode(int k) const { return modes_.count(k) != 0; }
    const Field& mode(int k) const; // zero field reference if absent
    Field& mode_ref(int k);         // creates zero-initialized
    void set_mode(int k, Field f);
    void clear_mode(int k) { modes_.erase(k); }

    int band_min() const { return modes_.empty() ? 0 : modes_.begin()->first; }
    int band_max() const { return modes_.empty() ? 0 : modes_.rbegin()->first; }
    int band() const; // max |k|

    cdouble evaluate(double x, double y, double theta) const;

    void scale(cdouble a);
    void add(const FiberFunction& other, cdouble a = 1.0);
    void drop_small_modes(double rel_eps);

    // Complex conjugate on SM: mode k of the result is conj(mode -k).
    FiberFunction conjugate() const;

private:
    GridPtr grid_;
    std::map<int, Field> modes_;
};

// --- Guillemin-Kazhdan ladder operators ----------------------------------
//
// In isothermal coordinates, acting on u(x) e^{ik theta}:
//   eta_plus : e^{(k-1) lambda} dz   ( e^{-k lambda} u )  at frequency k+1
//   eta_minus: e^{-(k+1) lambda} dzbar ( e^{k lambda} u ) at frequency k-1
// These are the unique weighted forms consistent with X = eta_+ + eta_- and
// the generator of the geodesic flow; the Euclidean case reduces to dz/dzbar.

enum class EtaSign { Plus, Minus };

void eta_apply(const Surface& s, int k_in, const Field& in, EtaSign sign, Field& out);
ModeFunction eta(const Surface& s, const ModeFunction& u, EtaSign sign);

// Hermitian adjoint of eta_apply as a matrix under the plain dot product
// sum_i a_i conj(b_i) (no area weights); solvers wrap their own weights.
void eta_adjoint_plain(const Surface& s, int k_in, const Field& in, EtaSign sign, Field& out);

// X u = eta_+ u + eta_- u, band grows by one. Throws DomainError when the
// result would exceed max_band.
FiberFunction apply_X(const Surface& s, const FiberFunction& u, int max_band = 96);

// X_perp = -i (eta_+ - eta_-).
FiberFunction apply_Xperp(const Surface& s, const FiberFunction& u, int max_band = 96);

// --- inner products and sampling ----------------------------------------

// <u,v>_{SM} with volume form e^{2 lambda} dx dy dtheta: modes are
// orthogonal, each contributing 2 pi times a weighted disk integral.
cdouble sm_inner(const Surface& s, const FiberFunction& u, const FiberFunction& v);
double sm_norm(const Surface& s, const FiberFunction& u);
cdouble sm_inner_mode(const Surface& s, const Field& u, const Field& v);

// Uniform angular sampling and its inverse (direct DFT over the small band).
std::vector<Field> to_angular(const FiberFunction& u, int n_theta);
FiberFunction from_angular(GridPtr grid, const std::vector<Field>& frames, int band);

// Pointwise product on SM = convolution in the fiber index, truncated to
// [band_lo, band_hi].
FiberFunction multiply(const FiberFunction& a, const FiberFunction& b, int band_lo, int band_hi);

// e^w by mode-truncated Taylor series; converges for bounded w.
FiberFunction fiber_exp(const FiberFunction& w, int band_lo, int band_hi);

} // namespace ttomo
