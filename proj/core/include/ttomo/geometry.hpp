#pragma once

#include <optional>
#include <vector>

#include "ttomo/metric.hpp"

namespace ttomo {

// Point of the unit tangent bundle in isothermal coordinates: position on the
// closed disk plus fiber angle theta, encoding v = e^{-lambda}(cos t, sin t).
struct PhasePoint {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    double r2() const { return x * x + y * y; }
};

struct FlowDeriv {
    double dx, dy, dtheta;
};

// Generator of the geodesic flow: e^{-lambda} (cos t, sin t,
// -sin t dlam/dx + cos t dlam/dy). Throws DomainError outside the closed disk.
FlowDeriv geodesic_vector_field(const ConformalMetric& m, const PhasePoint& p);

struct GeodesicPath {
    std::vector<double> t;
    std::vector<PhasePoint> samples;
    double tau = 0.0; // exit time
    double step = 0.0;
};

inline constexpr double kBoundaryTol = 1e-10; // |x|-1 tolerance defining "exit"

// Fixed-step RK4 with endpoint sub-stepping. Throws DomainError if t exceeds
// the exit time (the endpoint leaves the closed disk).
PhasePoint flow(const ConformalMetric& m, const PhasePoint& p, double t, double dt);

// First boundary-crossing time, RK4 plus bisection on the final step.
// Throws TrappingError when the step budget is exhausted.
double exit_time(const ConformalMetric& m, const PhasePoint& p, double dt,
                 double max_time = 64.0);

// Full sampled path up to exit.
GeodesicPath trace_path(const ConformalMetric& m, const PhasePoint& p, double dt,
                        double max_time = 64.0);

// Inflow-boundary fan: beta parametrizes the boundary circle, alpha in
// (-pi/2, pi/2) the angle from the inner normal (metric angle = Euclidean
// angle for conformal metrics). Midpoint nodes in alpha avoid the tangent
// endpoints; beta nodes are uniform (trapezoid on a periodic integrand).
//
// area_weight is the quadrature weight for dSigma^2 = e^{lambda} dbeta dalpha
// and mu = cos(alpha) >= 0 is the inflow measure factor.
class BoundaryFan {
public:
    BoundaryFan(const ConformalMetric& m, int n_beta, int n_alpha);

    int n_beta() const { return n_beta_; }
    int n_alpha() const { return n_alpha_; }
    std::size_t size() const { return std::size_t(n_beta_) * n_alpha_; }
    std::size_t idx(int ib, int ia) const { return std::size_t(ib) * n_alpha_ + ia; }

    double beta(int ib) const { return beta_[ib]; }
    double alpha(int ia) const { return alpha_[ia]; }
    double mu(std::size_t i) const { return mu_[i]; }
    double area_weight(std::size_t i) const { return area_w_[i]; }

    // Phase-space node: boundary point with inward direction.
    PhasePoint node(int ib, int ia) const
    {
        const double b = beta_[ib];
        return {std::cos(b), std::sin(b), b + kPi + alpha_[ia]};
    }

    std::uint64_t hash() const;

private:
    int n_beta_, n_alpha_;
    std::vector<double> beta_, alpha_;
    std::vector<double> mu_, area_w_;
};

BoundaryFan boundary_fan(const ConformalMetric& m, int n_beta, int n_alpha);

// Jacobi-field diagnostic for conjugate points: integrates J'' + K J = 0 with
// J(0)=0, J'(0)=1 along every fan geodesic and records sign changes of J
// strictly before exit. Trapped rays are recorded, not fatal.
struct ConjugatePointReport {
    struct Item {
        int ib, ia;
        double t_conjugate;
    };
    std::vector<Item> conjugate;
    std::vector<std::pair<int, int>> trapped;
    bool clean() const { return conjugate.empty() && trapped.empty(); }
};

ConjugatePointReport conjugate_point_probe(const ConformalMetric& m, const BoundaryFan& fan,
                                           double dt);

// Jacobi field along a single geodesic, for inspection and tests.
// Returns (t_i, J_i) sampled to exit.
std::vector<std::pair<double, double>> jacobi_field(const ConformalMetric& m, const PhasePoint& p,
                                                    double dt, double max_time = 64.0);

} // namespace ttomo
