#include "ttomo/solver.hpp"

#include <cmath>

namespace ttomo {

cdouble weighted_dot(const std::vector<cdouble>& a, const std::vector<cdouble>& b,
                     const std::vector<double>* w)
{
    cdouble acc = 0.0;
    if (w) {
        for (std::size_t i = 0; i < a.size(); ++i) acc += (*w)[i] * a[i] * std::conj(b[i]);
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
    }
    return acc;
}

double weighted_norm(const std::vector<cdouble>& a, const std::vector<double>* w)
{
    return std::sqrt(std::abs(weighted_dot(a, a, w)));
}

CglsResult cgls(const LinearMap& A, const std::vector<cdouble>& b, std::vector<cdouble>& x,
                const CglsOptions& opt)
{
    CglsResult res;
    const auto* wX = A.domain_weight();
    const auto* wY = A.range_weight();

    std::vector<cdouble> r(b.size()), q(b.size());
    std::vector<cdouble> s(A.domain_size()), p(A.domain_size());

    const double bnorm = weighted_norm(b, wY);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), cdouble(0.0));
        res.converged = true;
        res.rel_residual = 0.0;
        return res;
    }

    // r = b - A x
    A.forward(x, q);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - q[i];
    A.adjoint(r, s);
    p = s;
    double gamma = std::abs(weighted_dot(s, s, wX));
    const double gamma0 = gamma > 0.0 ? gamma : 1.0;

    res.history.push_back(weighted_norm(r, wY) / bnorm);
    // when convergence is judged on the normal equations, stagnation is too
    std::vector<double> normal_hist{1.0};

    for (int it = 0; it < opt.max_iter; ++it) {
        A.forward(p, q);
        const double qn = std::abs(weighted_dot(q, q, wY));
        if (qn == 0.0 || gamma == 0.0) break;
        const double alpha = gamma / qn;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
        A.adjoint(r, s);
        const double gamma_new = std::abs(weighted_dot(s, s, wX));
        const double beta = gamma_new / gamma;
        gamma = gamma_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];

        res.iterations = it + 1;
        const double rel = weighted_norm(r, wY) / bnorm;
        res.history.push_back(rel);
        if (rel <= opt.tol) {
            res.converged = true;
            res.rel_residual = rel;
            return res;
        }
        if (opt.normal_tol > 0.0 && std::sqrt(gamma / gamma0) <= opt.normal_tol) {
            res.converged = true;
            res.rel_residual = rel;
            return res;
        }
        const bool on_normal = opt.normal_tol > 0.0;
        if (on_normal) normal_hist.push_back(std::sqrt(gamma / gamma0));
        const auto& hist = on_normal ? normal_hist : res.history;
        if (int(hist.size()) > opt.stagnation_window) {
            const double prev = hist[hist.size() - 1 - opt.stagnation_window];
            if (hist.back() > prev * (1.0 - opt.stagnation_gain)) {
                res.stagnated = true;
                res.rel_residual = rel;
                return res;
            }
        }
    }
    res.rel_residual = res.history.back();
    return res;
}

double adjoint_mismatch(const LinearMap& A, std::uint64_t seed)
{
    NormalSampler rng(seed);
    std::vector<cdouble> x(A.domain_size()), y(A.range_size());
    for (auto& v : x) v = cdouble(rng(), rng());
    for (auto& v : y) v = cdouble(rng(), rng());
    std::vector<cdouble> Ax(A.range_size());
    std::vector<cdouble> Aty(A.domain_size());
    A.forward(x, Ax);
    A.adjoint(y, Aty);
    const cdouble lhs = weighted_dot(Ax, y, A.range_weight());
    const cdouble rhs = weighted_dot(x, Aty, A.domain_weight());
    const double scale = weighted_norm(Ax, A.range_weight()) * weighted_norm(y, A.range_weight()) + 1e-300;
    return std::abs(lhs - rhs) / scale;
}

} // namespace ttomo
