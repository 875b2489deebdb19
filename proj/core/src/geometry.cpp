#include "ttomo/geometry.hpp"

#include <cmath>

namespace ttomo {

FlowDeriv geodesic_vector_field(const ConformalMetric& m, const PhasePoint& p)
{
    if (p.r2() > 1.0 + 64.0 * kBoundaryTol)
        throw DomainError("geodesic_vector_field: position outside the closed disk");
    const double el = std::exp(-m.lambda(p.x, p.y));
    const auto gl = m.grad_lambda(p.x, p.y);
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    return {el * c, el * s, el * (-s * gl[0] + c * gl[1])};
}

namespace {

// One RK4 step of size dt; no domain checks (used inside the integrator
// where transient micro-excursions past the rim are resolved by bisection).
inline PhasePoint rk4_step_raw(const ConformalMetric& m, const PhasePoint& p, double dt)
{
    auto f = [&m](const PhasePoint& q) {
        const double el = std::exp(-m.lambda(q.x, q.y));
        const auto gl = m.grad_lambda(q.x, q.y);
        const double c = std::cos(q.theta), s = std::sin(q.theta);
        return FlowDeriv{el * c, el * s, el * (-s * gl[0] + c * gl[1])};
    };
    const FlowDeriv k1 = f(p);
    const FlowDeriv k2 = f({p.x + 0.5 * dt * k1.dx, p.y + 0.5 * dt * k1.dy, p.theta + 0.5 * dt * k1.dtheta});
    const FlowDeriv k3 = f({p.x + 0.5 * dt * k2.dx, p.y + 0.5 * dt * k2.dy, p.theta + 0.5 * dt * k2.dtheta});
    const FlowDeriv k4 = f({p.x + dt * k3.dx, p.y + dt * k3.dy, p.theta + dt * k3.dtheta});
    return {p.x + dt / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx),
            p.y + dt / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy),
            p.theta + dt / 6.0 * (k1.dtheta + 2 * k2.dtheta + 2 * k3.dtheta + k4.dtheta)};
}

} // namespace

PhasePoint flow(const ConformalMetric& m, const PhasePoint& p, double t, double dt)
{
    if (dt <= 0.0) throw DomainError("flow: dt must be positive");
    if (t < 0.0) throw DomainError("flow: t must be nonnegative");
    PhasePoint q = p;
    const long steps = long(std::floor(t / dt));
    double done = 0.0;
    for (long i = 0; i < steps; ++i) {
        q = rk4_step_raw(m, q, dt);
        done += dt;
        if (q.r2() > 1.0 + 1e-6)
            throw DomainError("flow: t beyond exit time");
    }
    const double rem = t - done;
    if (rem > 1e-15) q = rk4_step_raw(m, q, rem);
    if (q.r2() > 1.0 + 1e-6) throw DomainError("flow: t beyond exit time");
    return q;
}

namespace {

struct ExitResult {
    double tau;
    PhasePoint exit_point;
};

ExitResult locate_exit(const ConformalMetric& m, const PhasePoint& p, double dt, double max_time)
{
    PhasePoint q = p;
    double t = 0.0;
    const long budget = long(std::ceil(max_time / dt)) + 4;
    for (long i = 0; i < budget; ++i) {
        const PhasePoint qn = rk4_step_raw(m, q, dt);
        if (qn.r2() >= 1.0) {
            // bisect the step length s in (0, dt]: r2(step(s)) - 1 = 0
            double lo = 0.0, hi = dt;
            PhasePoint phi = qn;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const PhasePoint pm = rk4_step_raw(m, q, mid);
                if (pm.r2() >= 1.0) {
                    hi = mid;
                    phi = pm;
                } else {
                    lo = mid;
                }
                if (std::abs(std::sqrt(phi.r2()) - 1.0) <= kBoundaryTol && (hi - lo) < 1e-14)
                    break;
            }
            return {t + hi, phi};
        }
        q = qn;
        t += dt;
    }
    throw TrappingError("exit_time: step budget exceeded, trapping suspected");
}

} // namespace

double exit_time(const ConformalMetric& m, const PhasePoint& p, double dt, double max_time)
{
    if (dt <= 0.0) throw DomainError("exit_time: dt must be positive");
    if (p.r2() > 1.0 + 64.0 * kBoundaryTol)
        throw DomainError("exit_time: start outside the closed disk");
    return locate_exit(m, p, dt, max_time).tau;
}

GeodesicPath trace_path(const ConformalMetric& m, const PhasePoint& p, double dt, double max_time)
{
    const double tau = exit_time(m, p, dt, max_time);
    GeodesicPath path;
    path.step = dt;
    path.tau = tau;
    PhasePoint q = p;
    double t = 0.0;
    path.t.push_back(t);
    path.samples.push_back(q);
    while (t + dt < tau) {
        q = rk4_step_raw(m, q, dt);
        t += dt;
        path.t.push_back(t);
        path.samples.push_back(q);
    }
    q = rk4_step_raw(m, q, tau - t);
    path.t.push_back(tau);
    path.samples.push_back(q);
    return path;
}

BoundaryFan::BoundaryFan(const ConformalMetric& m, int n_beta, int n_alpha)
    : n_beta_(n_beta), n_alpha_(n_alpha)
{
    if (n_beta < 2 || n_alpha < 2) throw DomainError("boundary_fan: need n_beta, n_alpha >= 2");
    beta_.resize(n_beta);
    for (int i = 0; i < n_beta; ++i) beta_[i] = 2.0 * kPi * i / n_beta;
    alpha_.resize(n_alpha);
    const double da = kPi / n_alpha;
    for (int j = 0; j < n_alpha; ++j) alpha_[j] = -0.5 * kPi + (j + 0.5) * da;

    mu_.resize(size());
    area_w_.resize(size());
    const double db = 2.0 * kPi / n_beta;
    for (int i = 0; i < n_beta; ++i) {
        const double el = std::exp(m.lambda(std::cos(beta_[i]), std::sin(beta_[i])));
        for (int j = 0; j < n_alpha; ++j) {
            const std::size_t k = idx(i, j);
            mu_[k] = std::cos(alpha_[j]);
            area_w_[k] = el * db * da;
        }
    }
}

std::uint64_t BoundaryFan::hash() const
{
    std::uint64_t h = fnv1a_str("fan");
    h = fnv1a(&n_beta_, sizeof n_beta_, h);
    h = fnv1a(&n_alpha_, sizeof n_alpha_, h);
    return h;
}

BoundaryFan boundary_fan(const ConformalMetric& m, int n_beta, int n_alpha)
{
    return BoundaryFan(m, n_beta, n_alpha);
}

std::vector<std::pair<double, double>> jacobi_field(const ConformalMetric& m, const PhasePoint& p,
                                                    double dt, double max_time)
{
    // State (x, y, theta, J, J'); the flow part is independent of (J, J').
    std::vector<std::pair<double, double>> out;
    const double tau = exit_time(m, p, dt, max_time);
    PhasePoint q = p;
    double J = 0.0, Jp = 1.0, t = 0.0;
    out.emplace_back(t, J);

    auto acc = [&m](const PhasePoint& s, double Jv) {
        return -m.gauss_curvature(s.x, s.y) * Jv;
    };
    while (t < tau) {
        const double step = std::min(dt, tau - t);
        if (step < 1e-15) break;
        // RK4 on the coupled 5-dim system; flow sub-states recomputed.
        const PhasePoint q2 = rk4_step_raw(m, q, 0.5 * step);
        const PhasePoint q3 = rk4_step_raw(m, q, step);
        const double k1J = Jp, k1P = acc(q, J);
        const double k2J = Jp + 0.5 * step * k1P, k2P = acc(q2, J + 0.5 * step * k1J);
        const double k3J = Jp + 0.5 * step * k2P, k3P = acc(q2, J + 0.5 * step * k2J);
        const double k4J = Jp + step * k3P, k4P = acc(q3, J + step * k3J);
        J += step / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
        Jp += step / 6.0 * (k1P + 2 * k2P + 2 * k3P + k4P);
        q = q3;
        t += step;
        out.emplace_back(t, J);
    }
    return out;
}

ConjugatePointReport conjugate_point_probe(const ConformalMetric& m, const BoundaryFan& fan,
                                           double dt)
{
    ConjugatePointReport rep;
    for (int ib = 0; ib < fan.n_beta(); ++ib) {
        for (int ia = 0; ia < fan.n_alpha(); ++ia) {
            try {
                const auto jf = jacobi_field(m, fan.node(ib, ia), dt);
                for (std::size_t s = 2; s < jf.size(); ++s) {
                    // skip the trivial zero at t=0; flag the first sign change
                    if (jf[s - 1].second > 0.0 && jf[s].second <= 0.0 &&
                        jf[s].first < jf.back().first - dt) {
                        rep.conjugate.push_back({ib, ia, jf[s].first});
                        break;
                    }
                }
            } catch (const TrappingError&) {
                rep.trapped.emplace_back(ib, ia);
            }
        }
    }
    return rep;
}

} // namespace ttomo
