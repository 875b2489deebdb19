#include "ttomo/holomorphic.hpp"

#include <cmath>

namespace ttomo {

std::vector<ModeFunction> basis_ker_eta(const Surface& s, int k, EtaSign annihilator, int count)
{
    if (count < 1) throw DomainError("basis_ker_eta: count must be >= 1");
    if (k < 1) throw DomainError("basis_ker_eta: k must be >= 1");
    if (annihilator == EtaSign::Plus) {
        // ker^{-k} eta_+ = conjugates of ker^k eta_-
        auto plus_family = basis_ker_eta(s, k, EtaSign::Minus, count);
        for (auto& m : plus_family) {
            m.k = -k;
            m.field = conj_field(m.field);
        }
        return plus_family;
    }

    const Grid& g = s.grid();
    const auto& wk = s.exp_lambda(-k);

    // raw family e^{-k lambda} z^j e^{ik theta}
    std::vector<Field> raw(count, Field(g.size()));
    for (int iy = 0; iy < g.n(); ++iy) {
        for (int ix = 0; ix < g.n(); ++ix) {
            const std::size_t i = g.idx(ix, iy);
            const cdouble z(g.x(ix), g.y(iy));
            cdouble zj = 1.0;
            for (int j = 0; j < count; ++j) {
                raw[j][i] = wk[i] * zj;
                zj *= z;
            }
        }
    }

    // Gram-Schmidt in the SM inner product, two classical passes.
    std::vector<ModeFunction> basis;
    basis.reserve(count);
    for (int j = 0; j < count; ++j) {
        Field v = std::move(raw[j]);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const cdouble c = sm_inner_mode(s, v, b.field);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b.field[i];
            }
        const double nrm = std::sqrt(std::abs(sm_inner_mode(s, v, v)));
        if (nrm < 1e-14) throw ConvergenceError("basis_ker_eta: Gram-Schmidt breakdown");
        for (auto& val : v) val /= nrm;
        basis.push_back({k, std::move(v)});
    }
    return basis;
}

namespace {

double mode_sm_norm(const Surface& s, const Field& f)
{
    return std::sqrt(std::abs(sm_inner_mode(s, f, f)));
}

// Holomorphic w (modes 1, 3, 5, ... <= depth) with X w = rhs0 (a mode-0 field).
LadderResult ladder_solve(const Surface& s, const Field& rhs0, int depth)
{
    if (depth < 2) throw DomainError("integrating_factor: ladder depth must be >= 2");
    auto cauchy = cauchy_solver_for(s.grid_ptr());

    LadderResult out;
    out.w = FiberFunction(s.grid_ptr());

    ModeFunction rhs{0, rhs0};
    ModeFunction rung = cauchy->dbar_solve(s, rhs, 1, 0.0, false);
    const double first = std::max(mode_sm_norm(s, rung.field), 1e-300);
    double prev = first;
    out.w.set_mode(1, rung.field);

    for (int j = 1; j + 2 <= depth; j += 2) {
        ModeFunction next_rhs = eta(s, rung, EtaSign::Plus);
        for (auto& v : next_rhs.field) v = -v;
        rung = cauchy->dbar_solve(s, next_rhs, j + 2, 0.0, false);
        const double nrm = mode_sm_norm(s, rung.field);
        if (j > 1 && nrm > prev * 1.25)
            throw ConvergenceError(
                "integrating_factor: ladder rungs not decaying; increase depth tolerance or "
                "shrink the attenuation");
        out.w.set_mode(j + 2, rung.field);
        prev = nrm;
    }
    out.tail_norm = prev;
    out.rung_ratio = prev / first;
    return out;
}

} // namespace

LadderResult integrating_factor(const Surface& s, const Field& a, Orientation orient,
                                int ladder_depth)
{
    if (orient == Orientation::Holo) {
        return ladder_solve(s, conj_field(a), ladder_depth);
    }
    LadderResult r = ladder_solve(s, a, ladder_depth);
    FiberFunction wbar = r.w.conjugate();
    r.w = std::move(wbar);
    return r;
}

InvariantExtension invariant_extension(const Surface& s, const ModeFunction& phi, const Field& a,
                                       int ladder_depth, double residual_tol)
{
    if (phi.k == 0) throw DomainError("invariant_extension: requires |k| >= 1");
    if (phi.k < 0) {
        // mirror by conjugation: psi = conj(ext(conj(phi), conj(a)))
        ModeFunction phic{-phi.k, conj_field(phi.field)};
        InvariantExtension ext = invariant_extension(s, phic, conj_field(a), ladder_depth,
                                                     residual_tol);
        InvariantExtension out;
        out.psi = ext.psi.conjugate();
        out.flow_residual = ext.flow_residual;
        out.tail_norm = ext.tail_norm;
        return out;
    }

    const int k = phi.k;
    // precondition: phi annihilated by eta_-
    {
        const double ref = mode_sm_norm(s, phi.field) / std::sqrt(2.0 * kPi);
        const double kr = ker_residual(s, phi, EtaSign::Minus, ref);
        if (kr > 0.1)
            throw DomainError("invariant_extension: phi is not (numerically) in ker eta_-");
    }

    auto cauchy = cauchy_solver_for(s.grid_ptr());
    FiberFunction vt(s.grid_ptr());
    vt.set_mode(k, phi.field);

    ModeFunction rung = phi;
    double tail = 0.0;
    for (int j = k; j + 2 <= k + ladder_depth; j += 2) {
        ModeFunction rhs = eta(s, rung, EtaSign::Plus);
        for (auto& v : rhs.field) v = -v;
        rung = cauchy->dbar_solve(s, rhs, j + 2, 0.0, false);
        vt.set_mode(j + 2, rung.field);
        tail = mode_sm_norm(s, rung.field);
    }

    InvariantExtension out;
    bool zero_a = true;
    for (const auto& v : a)
        if (v != cdouble(0.0)) {
            zero_a = false;
            break;
        }
    if (zero_a) {
        out.psi = std::move(vt);
    } else {
        LadderResult w = integrating_factor(s, a, Orientation::Holo, ladder_depth);
        FiberFunction ew = fiber_exp(w.w, 0, ladder_depth);
        out.psi = multiply(ew, vt, k, k + ladder_depth);
    }
    out.tail_norm = tail;

    // residual of (X - conj(a)) psi over retained interior modes
    {
        FiberFunction xpsi = apply_X(s, out.psi);
        const Field abar = conj_field(a);
        FiberFunction scaled(out.psi.grid());
        for (const auto& [kk, f] : out.psi.modes()) {
            Field m = f;
            mul_inplace(m, abar);
            scaled.set_mode(kk, std::move(m));
        }
        const Grid& g = s.grid();
        const auto mask = g.interior_mask(4.0 * g.h());
        const auto& aw = s.area_weight();
        double num = 0.0;
        for (int kk = k; kk <= k + ladder_depth - 1; ++kk) {
            if (!xpsi.has_mode(kk) && !scaled.has_mode(kk)) continue;
            const Field& xm = xpsi.mode(kk);
            const Field& sm = scaled.mode(kk);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!mask[i]) continue;
                const cdouble rx = (xm.empty() ? cdouble(0.0) : xm[i]) -
                                   (sm.empty() ? cdouble(0.0) : sm[i]);
                num += g.disk_weight(i) * aw[i] * std::norm(rx);
            }
        }
        const double pn = sm_norm(s, out.psi);
        out.flow_residual = std::sqrt(2.0 * kPi * num) / (pn > 0 ? pn : 1.0);
    }
    if (out.flow_residual > residual_tol)
        throw ConvergenceError("invariant_extension: flow residual " +
                               std::to_string(out.flow_residual) + " above tolerance");
    return out;
}

} // namespace ttomo
