#include "ttomo/reconstruction.hpp"

#include <cmath>
#include <sstream>

namespace ttomo {

namespace {

Field scaled_by(const Field& f, const Field& w)
{
    Field out = f;
    mul_inplace(out, w);
    return out;
}

} // namespace

FiberFunction assemble_hform(const SurfacePtr& s, const Field& h0, const Field& h_perp,
                             const std::vector<std::pair<ModeFunction, ModeFunction>>& hk)
{
    FiberFunction h(s->grid_ptr());
    if (!h0.empty()) h.set_mode(0, h0);
    if (!h_perp.empty()) {
        FiberFunction hp(s->grid_ptr());
        hp.set_mode(0, h_perp);
        h.add(apply_Xperp(*s, hp));
    }
    for (const auto& [plus, minus] : hk) {
        if (!plus.field.empty()) axpy(h.mode_ref(plus.k), 1.0, plus.field);
        if (!minus.field.empty()) axpy(h.mode_ref(minus.k), 1.0, minus.field);
    }
    return h;
}

DecompositionResult decompose_tensor(const SurfacePtr& s, const SymmetricTensorField& f,
                                     const Attenuation& a, double cg_tol, int cg_max_iter)
{
    const int m = f.order();
    DecompositionResult out;
    out.p = FiberFunction(s->grid_ptr());
    out.hk.assign(std::max(m, 0), {});
    for (int k = 1; k <= m; ++k) {
        out.hk[k - 1].first.k = k;
        out.hk[k - 1].second.k = -k;
    }

    FiberFunction F = ell(f, 0);
    const FiberFunction F0 = F; // kept for the reassembly residual
    const Grid& g = s->grid();

    for (int k = m; k >= 2; --k) {
        for (int side = 0; side < 2; ++side) {
            const int mode = side == 0 ? k : -k;
            if (!F.has_mode(mode)) continue;
            ModeFunction fk{mode, F.mode(mode)};
            const EtaSign sign = side == 0 ? EtaSign::Plus : EtaSign::Minus;
            auto dec = elliptic_decompose(*s, fk, sign, cg_tol, cg_max_iter);

            StageReport st;
            st.name = "elliptic k=" + std::to_string(mode);
            st.iterations = dec.cg.iterations;
            st.residual = dec.h_residual;
            out.report.add(st);

            if (side == 0)
                out.hk[k - 1].first = dec.h;
            else
                out.hk[k - 1].second = dec.h;

            axpy(out.p.mode_ref(dec.g.k), 1.0, dec.g.field);
            // remainder bookkeeping: the skew eta part lands two modes down,
            // the attenuation part one mode down
            ModeFunction w = eta(*s, dec.g, side == 0 ? EtaSign::Minus : EtaSign::Plus);
            axpy(F.mode_ref(w.k), -1.0, w.field);
            if (!a.zero) axpy(F.mode_ref(dec.g.k), -1.0, scaled_by(dec.g.field, a.a));
            F.clear_mode(mode);
        }
    }

    Field p_low(g.size(), cdouble(0.0));
    out.h_perp.assign(g.size(), cdouble(0.0));
    if (m >= 1) {
        Field g0p(g.size(), cdouble(0.0)), g0m(g.size(), cdouble(0.0));
        if (F.has_mode(1)) {
            auto dec = elliptic_decompose(*s, ModeFunction{1, F.mode(1)}, EtaSign::Plus, cg_tol,
                                          cg_max_iter);
            out.hk[0].first = dec.h;
            g0p = dec.g.field;
            StageReport st;
            st.name = "elliptic k=1";
            st.iterations = dec.cg.iterations;
            st.residual = dec.h_residual;
            out.report.add(st);
        }
        if (F.has_mode(-1)) {
            auto dec = elliptic_decompose(*s, ModeFunction{-1, F.mode(-1)}, EtaSign::Minus, cg_tol,
                                          cg_max_iter);
            out.hk[0].second = dec.h;
            g0m = dec.g.field;
            StageReport st;
            st.name = "elliptic k=-1";
            st.iterations = dec.cg.iterations;
            st.residual = dec.h_residual;
            out.report.add(st);
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            p_low[i] = 0.5 * (g0p[i] + g0m[i]);
            out.h_perp[i] = 0.5 * kI * (g0p[i] - g0m[i]);
        }
        axpy(out.p.mode_ref(0), 1.0, p_low);
    }

    out.h0 = F.has_mode(0) ? F.mode(0) : Field(g.size(), cdouble(0.0));
    if (!a.zero && m >= 1) sub_inplace(out.h0, scaled_by(p_low, a.a));

    // reassembly residual
    {
        FiberFunction rebuilt = apply_X(*s, out.p);
        if (!a.zero)
            for (const auto& [k, pf] : out.p.modes())
                axpy(rebuilt.mode_ref(k), 1.0, scaled_by(pf, a.a));
        rebuilt.add(assemble_hform(s, out.h0, out.h_perp, out.hk));
        rebuilt.add(F0, -1.0);
        const double ref = sm_norm(*s, F0);
        out.residual = ref > 0 ? sm_norm(*s, rebuilt) / ref : sm_norm(*s, rebuilt);
    }
    return out;
}

// --- scalar channels -------------------------------------------------------

namespace {

class ChannelMap final : public LinearMap {
public:
    ChannelMap(const RayEngine& eng, ScalarChannel ch) : eng_(eng), ch_(std::move(ch))
    {
        const Grid& g = eng_.surface().grid();
        free_.reserve(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.disk_weight(i) > 0.0) free_.push_back(i);
        range_w_.resize(eng_.fan().size());
        for (std::size_t i = 0; i < range_w_.size(); ++i)
            range_w_[i] = eng_.fan().area_weight(i) * eng_.fan().mu(i);
    }

    std::size_t domain_size() const override { return free_.size(); }
    std::size_t range_size() const override { return eng_.fan().size(); }
    const std::vector<double>* range_weight() const override { return &range_w_; }

    void forward(const std::vector<cdouble>& x, std::vector<cdouble>& y) const override
    {
        y = eng_.transform(lift(x), ch_.weight, ch_.moment_k).values();
    }

    void adjoint(const std::vector<cdouble>& y, std::vector<cdouble>& x) const override
    {
        const Grid& g = eng_.surface().grid();
        std::vector<cdouble> coef(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) coef[i] = y[i] * range_w_[i];
        std::vector<Field> fields;
        eng_.adjoint_sweep(coef, ch_.weight, ch_.moment_k, {ch_.mode}, fields);
        if (!ch_.fold.empty())
            for (std::size_t i = 0; i < fields[0].size(); ++i)
                fields[0][i] *= std::conj(ch_.fold[i]);
        binomial_smooth(g, fields[0], ch_.smooth_passes); // S is symmetric
        x.resize(free_.size());
        for (std::size_t i = 0; i < free_.size(); ++i) x[i] = fields[0][free_[i]];
    }

    FiberFunction lift(const std::vector<cdouble>& x) const
    {
        const Grid& g = eng_.surface().grid();
        Field h = to_field(x);
        if (!ch_.fold.empty()) mul_inplace(h, ch_.fold);
        FiberFunction F(eng_.surface().grid_ptr());
        F.set_mode(ch_.mode, std::move(h));
        return F;
    }

    // the physical field h = S^passes (scattered y)
    Field to_field(const std::vector<cdouble>& x) const
    {
        const Grid& g = eng_.surface().grid();
        Field h(g.size(), cdouble(0.0));
        for (std::size_t i = 0; i < free_.size(); ++i) h[free_[i]] = x[i];
        binomial_smooth(g, h, ch_.smooth_passes);
        return h;
    }

private:
    const RayEngine& eng_;
    ScalarChannel ch_;
    std::vector<std::size_t> free_;
    std::vector<double> range_w_;
};

} // namespace

std::unique_ptr<LinearMap> make_channel_map(const RayEngine& engine, const ScalarChannel& ch)
{
    return std::make_unique<ChannelMap>(engine, ch);
}

ScalarSolveResult scalar_solve(const RayEngine& engine, const std::vector<BoundaryData>& data,
                               const std::vector<ScalarChannel>& channels, int max_iter, double tol)
{
    if (data.size() != channels.size())
        throw DomainError("scalar_solve: need one data block per channel");
    ScalarSolveResult out;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        ChannelMap A(engine, channels[c]);
        std::vector<cdouble> x(A.domain_size(), cdouble(0.0));
        CglsOptions opt;
        opt.max_iter = max_iter;
        opt.tol = tol;
        auto res = cgls(A, data[c].values(), x, opt);
        out.ok = out.ok && !res.stagnated;
        out.cg.push_back(std::move(res));
        out.fields.push_back(A.to_field(x));
    }
    return out;
}

// --- pairing reconstruction -------------------------------------------------

HkRecovery reconstruct_hk_pairing(const RayEngine& engine, const BoundaryData& data,
                                  const Attenuation& a, int k, const PairingOptions& opt)
{
    if (k < 1) throw DomainError("reconstruct_hk_pairing: k must be >= 1");
    const Surface& s = engine.surface();

    // measured attenuated data -> trace of the transport solution of
    // (X + a) u = -h (remove the full-path attenuation factor node-wise)
    std::vector<cdouble> extra;
    const std::vector<cdouble>* extra_ptr = nullptr;
    if (!a.zero) {
        extra.resize(engine.fan().size());
        const auto pa = engine.path_integrals(a.a);
        for (std::size_t i = 0; i < extra.size(); ++i) extra[i] = std::exp(pa[i]);
        extra_ptr = &extra;
    }

    HkRecovery out;
    int n = opt.n_basis;
    while (true) {
        auto basis_p = basis_ker_eta(s, k, EtaSign::Minus, n);
        auto basis_m = basis_ker_eta(s, k, EtaSign::Plus, n);
        out.coef_plus.assign(n, cdouble(0.0));
        out.coef_minus.assign(n, cdouble(0.0));
        for (int j = 0; j < n; ++j) {
            auto ext_p = invariant_extension(s, basis_p[j], a.a, opt.ladder_depth,
                                             opt.extension_tol);
            out.coef_plus[j] = engine.boundary_pairing(data, ext_p.psi, extra_ptr);
            auto ext_m = invariant_extension(s, basis_m[j], a.a, opt.ladder_depth,
                                             opt.extension_tol);
            out.coef_minus[j] = engine.boundary_pairing(data, ext_m.psi, extra_ptr);
        }

        auto tail_ratio = [&](const std::vector<cdouble>& c) {
            double head = 0.0, tail = 0.0;
            const int q = std::max(1, n / 4);
            for (int j = 0; j < q; ++j) head = std::max(head, std::abs(c[j]));
            for (int j = n - q; j < n; ++j) tail = std::max(tail, std::abs(c[j]));
            return head > 0 ? tail / head : 0.0;
        };
        out.tail_ratio_plus = tail_ratio(out.coef_plus);
        out.tail_ratio_minus = tail_ratio(out.coef_minus);
        out.n_basis_used = n;

        const bool decayed = out.tail_ratio_plus <= opt.tail_fraction &&
                             out.tail_ratio_minus <= opt.tail_fraction;
        if (decayed || n >= opt.n_basis_cap) {
            out.h_plus.k = k;
            out.h_plus.field.assign(s.grid().size(), cdouble(0.0));
            out.h_minus.k = -k;
            out.h_minus.field.assign(s.grid().size(), cdouble(0.0));
            for (int j = 0; j < n; ++j) {
                axpy(out.h_plus.field, out.coef_plus[j], basis_p[j].field);
                axpy(out.h_minus.field, out.coef_minus[j], basis_m[j].field);
            }
            if (!decayed)
                out.decay_warning = true;
            return out;
        }
        n = std::min(2 * n, opt.n_basis_cap);
    }
}

// --- attenuated tensor tomography -------------------------------------------

namespace {

// Joint map for the low-frequency stage: unknowns (h0, h_perp, c+, c-) with
// h_perp zero-trace and the +-1 solenoidal parts parametrized in the ker
// bases; the data is the attenuated transform of the assembled stack.
class LowModeMap final : public LinearMap {
public:
    LowModeMap(const RayEngine& eng, const Attenuation& a, bool with_h1, int n_basis,
               int smooth_passes = 2, bool mu_weighted = false)
        : eng_(eng), att_(a), with_h1_(with_h1), smooth_(smooth_passes)
    {
        const Grid& g = eng_.surface().grid();
        // the h_perp block enters through first derivatives whose columns are
        // O(1/h) against the O(1) columns of h0; rescaling equalizes them for
        // CG, and the extra heavily-smoothed copies of the block expose its
        // slow low-frequency content to early iterations (a BPX-style
        // multiscale parametrization, not a penalty)
        perp_scale_ = g.h();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.disk_weight(i) > 0.0) disk_.push_back(i);
        if (with_h1_) {
            for (int iy = 0; iy < g.n(); ++iy)
                for (int ix = 0; ix < g.n(); ++ix)
                    if (std::hypot(g.x(ix), g.y(iy)) < 1.0 - 1e-12)
                        interior_.push_back(g.idx(ix, iy));
            if (n_basis > 0) {
                basis_p_ = basis_ker_eta(eng_.surface(), 1, EtaSign::Minus, n_basis);
                basis_m_ = basis_ker_eta(eng_.surface(), 1, EtaSign::Plus, n_basis);
            }
        }
        range_w_.resize(eng_.fan().size());
        for (std::size_t i = 0; i < range_w_.size(); ++i)
            range_w_[i] = eng_.fan().area_weight(i) *
                          (mu_weighted ? eng_.fan().mu(i) : 1.0);
        w_ = WeightSpec::attenuated(att_);
    }

    std::size_t domain_size() const override
    {
        return disk_.size() + (with_h1_ ? kLevels * interior_.size() + 2 * basis_p_.size() : 0);
    }
    std::size_t range_size() const override { return eng_.fan().size(); }
    const std::vector<double>* range_weight() const override { return &range_w_; }

    void forward(const std::vector<cdouble>& x, std::vector<cdouble>& y) const override
    {
        y = eng_.transform(lift(x), w_, 0).values();
    }

    void adjoint(const std::vector<cdouble>& y, std::vector<cdouble>& x) const override
    {
        std::vector<cdouble> coef(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) coef[i] = y[i] * range_w_[i];
        std::vector<int> modes{0};
        if (with_h1_) {
            modes.push_back(1);
            modes.push_back(-1);
        }
        std::vector<Field> fields;
        eng_.adjoint_sweep(coef, w_, 0, modes, fields);
        x.assign(domain_size(), cdouble(0.0));
        const Grid& g = eng_.surface().grid();
        Field h0adj = fields[0];
        binomial_smooth(g, h0adj, smooth_);
        for (std::size_t i = 0; i < disk_.size(); ++i) x[i] = h0adj[disk_[i]];
        if (!with_h1_) return;
        const Surface& s = eng_.surface();
        // h_perp column: mode(+1) = -i eta_+ h, mode(-1) = +i eta_- h
        Field tp, tm;
        eta_adjoint_plain(s, 0, fields[1], EtaSign::Plus, tp);
        eta_adjoint_plain(s, 0, fields[2], EtaSign::Minus, tm);
        Field hperp_adj(g.size());
        for (std::size_t i = 0; i < hperp_adj.size(); ++i)
            hperp_adj[i] = kI * tp[i] - kI * tm[i];
        std::size_t off = disk_.size();
        for (int lev = 0; lev < kLevels; ++lev) {
            Field part = hperp_adj;
            binomial_smooth(g, part, kLevelPasses[lev]);
            for (std::size_t i = 0; i < interior_.size(); ++i)
                x[off + i] = perp_scale_ * part[interior_[i]];
            off += interior_.size();
        }
        for (std::size_t j = 0; j < basis_p_.size(); ++j) {
            cdouble acc = 0.0;
            for (std::size_t i = 0; i < fields[1].size(); ++i)
                acc += fields[1][i] * std::conj(basis_p_[j].field[i]);
            x[off + j] = acc;
        }
        off += basis_p_.size();
        for (std::size_t j = 0; j < basis_m_.size(); ++j) {
            cdouble acc = 0.0;
            for (std::size_t i = 0; i < fields[2].size(); ++i)
                acc += fields[2][i] * std::conj(basis_m_[j].field[i]);
            x[off + j] = acc;
        }
    }

    FiberFunction lift(const std::vector<cdouble>& x) const
    {
        const Surface& s = eng_.surface();
        const Grid& g = s.grid();
        FiberFunction F(s.grid_ptr());
        Field h0(g.size(), cdouble(0.0));
        for (std::size_t i = 0; i < disk_.size(); ++i) h0[disk_[i]] = x[i];
        binomial_smooth(g, h0, smooth_);
        F.set_mode(0, std::move(h0));
        if (!with_h1_) return F;

        Field hperp(g.size(), cdouble(0.0));
        std::size_t off = disk_.size();
        for (int lev = 0; lev < kLevels; ++lev) {
            Field part(g.size(), cdouble(0.0));
            for (std::size_t i = 0; i < interior_.size(); ++i)
                part[interior_[i]] = perp_scale_ * x[off + i];
            binomial_smooth(g, part, kLevelPasses[lev]);
            add_inplace(hperp, part);
            off += interior_.size();
        }
        Field ep, em;
        eta_apply(s, 0, hperp, EtaSign::Plus, ep);
        eta_apply(s, 0, hperp, EtaSign::Minus, em);

        Field mode_p(g.size(), cdouble(0.0)), mode_m(g.size(), cdouble(0.0));
        axpy(mode_p, -kI, ep);
        axpy(mode_m, kI, em);
        for (std::size_t j = 0; j < basis_p_.size(); ++j)
            axpy(mode_p, x[off + j], basis_p_[j].field);
        off += basis_p_.size();
        for (std::size_t j = 0; j < basis_m_.size(); ++j)
            axpy(mode_m, x[off + j], basis_m_[j].field);
        F.set_mode(1, std::move(mode_p));
        F.set_mode(-1, std::move(mode_m));
        return F;
    }

    // unpack pieces
    void unpack(const std::vector<cdouble>& x, Field& h0, Field& hperp, ModeFunction& h1p,
                ModeFunction& h1m) const
    {
        const Grid& g = eng_.surface().grid();
        h0.assign(g.size(), cdouble(0.0));
        for (std::size_t i = 0; i < disk_.size(); ++i) h0[disk_[i]] = x[i];
        binomial_smooth(g, h0, smooth_);
        hperp.assign(g.size(), cdouble(0.0));
        h1p = ModeFunction{1, Field(g.size(), cdouble(0.0))};
        h1m = ModeFunction{-1, Field(g.size(), cdouble(0.0))};
        if (!with_h1_) return;
        std::size_t off = disk_.size();
        for (int lev = 0; lev < kLevels; ++lev) {
            Field part(g.size(), cdouble(0.0));
            for (std::size_t i = 0; i < interior_.size(); ++i)
                part[interior_[i]] = perp_scale_ * x[off + i];
            binomial_smooth(g, part, kLevelPasses[lev]);
            add_inplace(hperp, part);
            off += interior_.size();
        }
        for (std::size_t j = 0; j < basis_p_.size(); ++j)
            axpy(h1p.field, x[off + j], basis_p_[j].field);
        off += basis_p_.size();
        for (std::size_t j = 0; j < basis_m_.size(); ++j)
            axpy(h1m.field, x[off + j], basis_m_[j].field);
    }

private:
    const RayEngine& eng_;
    const Attenuation& att_;
    bool with_h1_;
    int smooth_;
    double perp_scale_ = 1.0;
    static constexpr int kLevels = 5;
    static constexpr int kLevelPasses[kLevels] = {2, 12, 48, 192, 768};
    std::vector<std::size_t> disk_, interior_;
    std::vector<ModeFunction> basis_p_, basis_m_;
    std::vector<double> range_w_;
    WeightSpec w_;
};

} // namespace

std::unique_ptr<LinearMap> make_lowmode_map(const RayEngine& engine, const Attenuation& a,
                                            bool with_h1, int n_basis)
{
    return std::make_unique<LowModeMap>(engine, a, with_h1, n_basis);
}

namespace {

// Disk-orthonormal polynomial fields up to the given total degree; the
// optional zero-trace factor (1-r^2) keeps h_perp candidates in W_0.
std::vector<Field> poly_basis(const Surface& s, int degree, bool zero_trace)
{
    const Grid& g = s.grid();
    std::vector<Field> raw;
    for (int d = 0; d <= degree; ++d)
        for (int ax = 0; ax <= d; ++ax) {
            const int ay = d - ax;
            Field f(g.size(), cdouble(0.0));
            for (int iy = 0; iy < g.n(); ++iy)
                for (int ix = 0; ix < g.n(); ++ix) {
                    const double x = g.x(ix), y = g.y(iy);
                    const double r2 = x * x + y * y;
                    if (zero_trace && r2 >= 1.0) continue;
                    double v = (zero_trace ? (1.0 - r2) : 1.0);
                    for (int i = 0; i < ax; ++i) v *= x;
                    for (int i = 0; i < ay; ++i) v *= y;
                    f[g.idx(ix, iy)] = v;
                }
            raw.push_back(std::move(f));
        }
    // Gram-Schmidt in the metric area measure, two passes
    std::vector<Field> basis;
    for (auto& v : raw) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const cdouble c = disk_inner(g, v, b, &s.area_weight());
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
            }
        const double nrm = disk_norm(g, v, &s.area_weight());
        if (nrm < 1e-12) continue;
        for (auto& val : v) val /= nrm;
        basis.push_back(std::move(v));
    }
    return basis;
}

// Direct dense least-squares over the coarse polynomial span of
// (h0, h_perp): the separation of the two blocks is informed only weakly by
// the data (a shallow valley in the normal equations), so the coarse content
// is solved exactly instead of iterated.
struct CoarseLowmode {
    Field h0, h_perp;
    BoundaryData forward;
    double fit_residual = 0.0;
};

CoarseLowmode coarse_lowmode_fit(const RayEngine& eng, const Attenuation& a,
                                 const BoundaryData& data, int degree, bool with_perp)
{
    const Surface& s = eng.surface();
    const Grid& g = s.grid();
    const WeightSpec w = WeightSpec::attenuated(a);

    auto b0 = poly_basis(s, degree, false);
    auto bp = with_perp ? poly_basis(s, degree, true) : std::vector<Field>{};
    const std::size_t n0 = b0.size(), np = bp.size();
    const std::size_t nc = n0 + np;
    const std::size_t nd = data.values().size();

    // columns of the coarse map
    std::vector<std::vector<cdouble>> cols(nc);
    for (std::size_t j = 0; j < n0; ++j) {
        FiberFunction F(s.grid_ptr());
        F.set_mode(0, b0[j]);
        cols[j] = eng.transform(F, w).values();
    }
    for (std::size_t j = 0; j < np; ++j) {
        FiberFunction hp(s.grid_ptr());
        hp.set_mode(0, bp[j]);
        FiberFunction F = apply_Xperp(s, hp);
        cols[n0 + j] = eng.transform(F, w).values();
    }

    // plain (unweighted) normal equations with a tiny ridge for safety
    std::vector<cdouble> G(nc * nc, cdouble(0.0));
    std::vector<cdouble> rhs(nc, cdouble(0.0));
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = i; j < nc; ++j) {
            cdouble acc = 0.0;
            for (std::size_t k = 0; k < nd; ++k) acc += cols[i][k] * std::conj(cols[j][k]);
            G[j * nc + i] = acc;
            G[i * nc + j] = std::conj(acc);
        }
        cdouble acc = 0.0;
        for (std::size_t k = 0; k < nd; ++k) acc += data.values()[k] * std::conj(cols[i][k]);
        rhs[i] = std::conj(acc);
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < nc; ++i) trace += G[i * nc + i].real();
    const double ridge = 1e-12 * trace / double(nc);
    for (std::size_t i = 0; i < nc; ++i) G[i * nc + i] += ridge;

    const auto Ginv = dense_inverse(G, int(nc));
    std::vector<cdouble> coef(nc, cdouble(0.0));
    for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < nc; ++j) coef[i] += Ginv[i * nc + j] * rhs[j];

    CoarseLowmode out;
    out.h0.assign(g.size(), cdouble(0.0));
    out.h_perp.assign(g.size(), cdouble(0.0));
    for (std::size_t j = 0; j < n0; ++j) axpy(out.h0, coef[j], b0[j]);
    for (std::size_t j = 0; j < np; ++j) axpy(out.h_perp, coef[n0 + j], bp[j]);
    out.forward = BoundaryData(data.fan_ptr(), {"coarse_lowmode", 0});
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t k = 0; k < nd; ++k) out.forward.values()[k] += coef[j] * cols[j][k];
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < nd; ++k) {
        num += std::norm(data.values()[k] - out.forward.values()[k]);
        den += std::norm(data.values()[k]);
    }
    out.fit_residual = den > 0 ? std::sqrt(num / den) : 0.0;
    return out;
}

} // namespace

AttReconstruction att_tensor_tomography(const RayEngine& engine, const BoundaryData& data,
                                        const Attenuation& a, int order, const AttOptions& opt)
{
    AttReconstruction out;
    out.hk.assign(std::max(order, 0), {});
    for (int k = 1; k <= order; ++k) {
        out.hk[k - 1].first.k = k;
        out.hk[k - 1].second.k = -k;
    }

    BoundaryData working = data;
    const int k_floor = (opt.pair_k1 && order >= 1) ? 1 : 2;
    for (int k = order; k >= k_floor; --k) {
        HkRecovery rec;
        try {
            rec = reconstruct_hk_pairing(engine, working, a, k, opt.pairing);
        } catch (const std::exception& e) {
            StageReport st;
            st.name = "pairing k=" + std::to_string(k);
            st.ok = false;
            st.note = e.what();
            out.report.add(st);
            return out;
        }
        out.hk[k - 1] = {rec.h_plus, rec.h_minus};

        FiberFunction hk_f(engine.surface().grid_ptr());
        hk_f.set_mode(k, rec.h_plus.field);
        hk_f.set_mode(-k, rec.h_minus.field);
        BoundaryData fwd = engine.transform(hk_f, WeightSpec::attenuated(a), 0);
        for (std::size_t i = 0; i < working.values().size(); ++i)
            working.values()[i] -= fwd.values()[i];

        StageReport st;
        st.name = "pairing k=" + std::to_string(k);
        st.residual = std::max(rec.tail_ratio_plus, rec.tail_ratio_minus);
        st.iterations = rec.n_basis_used;
        st.ok = !rec.decay_warning;
        if (rec.decay_warning) st.note = "coefficient tail above threshold";
        out.report.add(st);
    }

    // Coarse stage: direct dense fit over polynomial (h0, h_perp); the data
    // separates the pair only through near-rim decay, which starves iterative
    // solvers, so the slow span is solved exactly up front.
    const bool with_perp = order >= 1;
    if (opt.coarse_degree >= 0) {
        auto coarse = coarse_lowmode_fit(engine, a, working, opt.coarse_degree, with_perp);
        out.h0 = coarse.h0;
        out.h_perp = coarse.h_perp;
        for (std::size_t i = 0; i < working.values().size(); ++i)
            working.values()[i] -= coarse.forward.values()[i];
        StageReport st;
        st.name = "lowmode coarse";
        st.residual = coarse.fit_residual;
        out.report.add(st);
    } else {
        out.h0.assign(engine.surface().grid().size(), cdouble(0.0));
        out.h_perp.assign(engine.surface().grid().size(), cdouble(0.0));
    }

    // Fine stage: grid-level joint CG on the remainder; when the +-1 pair came
    // from the pairing loop only (h0, h_perp) remain as unknowns.
    LowModeMap A(engine, a, with_perp, k_floor == 1 ? 0 : opt.lowmode_basis, 2,
                 opt.mu_weighted_fit);
    std::vector<cdouble> x(A.domain_size(), cdouble(0.0));
    CglsOptions copt;
    copt.max_iter = opt.max_iter;
    copt.tol = opt.tol;
    auto cg = cgls(A, working.values(), x, copt);

    StageReport st;
    st.name = "lowmode fine";
    st.iterations = cg.iterations;
    st.residual = cg.rel_residual;
    st.ok = !cg.stagnated || cg.rel_residual < 1e-3;
    if (cg.stagnated) st.note = "cg stagnation";
    out.report.add(st);

    Field h0_fine, hperp_fine;
    ModeFunction h1p, h1m;
    A.unpack(x, h0_fine, hperp_fine, h1p, h1m);
    add_inplace(out.h0, h0_fine);
    add_inplace(out.h_perp, hperp_fine);
    if (order >= 1 && k_floor != 1) out.hk[0] = {h1p, h1m};

    out.h = assemble_hform(engine.surface_ptr(), out.h0, out.h_perp, out.hk);
    return out;
}

// --- moment inversion --------------------------------------------------------

MomentInversion moment_inversion(const RayEngine& engine, const std::vector<BoundaryData>& data,
                                 const Attenuation& a, int order, const MomentOptions& opt)
{
    if (int(data.size()) != order + 1)
        throw DomainError("moment_inversion: need moment orders 0..order");
    MomentInversion out;

    // gauge representative of the current order from the zeroth moment
    auto att = att_tensor_tomography(engine, data[0], a, order, opt.att);
    for (auto& stg : att.report.stages) {
        stg.name = "order " + std::to_string(order) + " " + stg.name;
        out.report.add(stg);
    }
    FiberFunction g_hat = att.h;

    if (order == 0) {
        out.f_hat = std::move(g_hat);
    } else {
        // synthesize the moments of the recovered representative and recurse
        std::vector<BoundaryData> next(order);
        for (int k = 0; k + 1 <= order; ++k) {
            BoundaryData synth = engine.transform(g_hat, WeightSpec::attenuated(a), k + 1);
            BoundaryData diff(data[k + 1].fan_ptr(), {"moment", k});
            double den_scale = 0.0, diff_max = 0.0;
            for (std::size_t i = 0; i < synth.values().size(); ++i) {
                const cdouble d = data[k + 1].values()[i] - synth.values()[i];
                den_scale = std::max(den_scale, std::abs(data[k + 1].values()[i]) +
                                                    std::abs(synth.values()[i]));
                diff_max = std::max(diff_max, std::abs(d));
                diff.values()[i] = d / double(k + 1);
            }
            const double digits =
                den_scale == 0.0
                    ? 15.95
                    : std::min(15.95, 15.95 - std::log10(den_scale / std::max(diff_max, 1e-300)));
            out.effective_digits.push_back(digits);
            StageReport st;
            st.name = "order " + std::to_string(order) + " difference k=" + std::to_string(k);
            st.residual = digits;
            st.ok = digits >= opt.min_effective_digits;
            if (!st.ok) st.note = "cancellation below effective-digit floor";
            out.report.add(st);
            next[k] = std::move(diff);
        }
        MomentOptions nested = opt;
        auto sub = moment_inversion(engine, next, a, order - 1, nested);
        for (auto& stg : sub.report.stages) out.report.add(stg);
        for (double d : sub.effective_digits) out.effective_digits.push_back(d);

        // f = (X + a) v + g
        FiberFunction xv = apply_X(engine.surface(), sub.f_hat);
        if (!a.zero)
            for (const auto& [k, pf] : sub.f_hat.modes())
                axpy(xv.mode_ref(k), 1.0, scaled_by(pf, a.a));
        g_hat.add(xv);
        out.f_hat = std::move(g_hat);
    }

    // export the parity-m components f_q = e^{m lambda} (f_hat)_{m-2q}
    const Surface& s = engine.surface();
    SymmetricTensorField tensor(engine.surface_ptr(), order);
    const auto& w = s.exp_lambda(order);
    double par_norm = 0.0, off_norm = 0.0;
    for (const auto& [k, f] : out.f_hat.modes()) {
        const double nrm = std::abs(sm_inner_mode(s, f, f));
        const bool parity = (std::abs(k) <= order) && ((order - k) % 2 == 0);
        (parity ? par_norm : off_norm) += nrm;
    }
    out.offparity_fraction =
        par_norm + off_norm > 0 ? std::sqrt(off_norm / (par_norm + off_norm)) : 0.0;
    for (int q = 0; q <= order; ++q) {
        const int mode = order - 2 * q;
        if (!out.f_hat.has_mode(mode)) continue;
        Field c = out.f_hat.mode(mode);
        mul_inplace(c, w);
        tensor.component(q) = std::move(c);
    }
    out.tensor = std::move(tensor);
    return out;
}

// --- transverse inversion ------------------------------------------------------

TransverseInversion transverse_inversion(const RayEngine& engine,
                                         const std::vector<BoundaryData>& data, const WeightSpec& w,
                                         int order, const TransverseOptions& opt)
{
    if (int(data.size()) != order + 1)
        throw DomainError("transverse_inversion: need transverse indices 0..order");
    const Surface& s = engine.surface();
    TransverseInversion out;
    const PairingMatrix pm = pairing_matrix(order);
    const std::size_t nn = engine.fan().size();

    // node-wise application of A^{-1}
    std::vector<BoundaryData> channels;
    channels.reserve(order + 1);
    for (int q = 0; q <= order; ++q)
        channels.emplace_back(data[0].fan_ptr(), TransformTag{"channel", order - 2 * q});
    for (std::size_t i = 0; i < nn; ++i) {
        for (int q = 0; q <= order; ++q) {
            cdouble acc = 0.0;
            for (int p = 0; p <= order; ++p) acc += pm.ainv(q, p) * data[p].values()[i];
            channels[q].values()[i] = acc;
        }
    }

    // algebra-only consistency: A (A^{-1} d) = d
    {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            for (int p = 0; p <= order; ++p) {
                cdouble acc = 0.0;
                for (int q = 0; q <= order; ++q) acc += pm.a(p, q) * channels[q].values()[i];
                num += std::norm(acc - data[p].values()[i]);
                den += std::norm(data[p].values()[i]);
            }
        }
        out.algebra_residual = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    }

    SymmetricTensorField tensor(engine.surface_ptr(), order);
    std::vector<double> fold(s.exp_lambda(-order));
    Field fold_c(fold.size());
    for (std::size_t i = 0; i < fold.size(); ++i) fold_c[i] = fold[i];

    for (int q = 0; q <= order; ++q) {
        ScalarChannel ch;
        ch.mode = order - 2 * q;
        ch.weight = w;
        ch.fold = fold_c;
        auto res = scalar_solve(engine, {channels[q]}, {ch}, opt.max_iter, opt.tol);
        tensor.component(q) = std::move(res.fields[0]);
        StageReport st;
        st.name = "channel q=" + std::to_string(q);
        st.iterations = res.cg[0].iterations;
        st.residual = res.cg[0].rel_residual;
        st.ok = !res.cg[0].stagnated || res.cg[0].rel_residual < 1e-2;
        if (res.cg[0].stagnated) st.note = "cg stagnation";
        out.report.add(st);
        out.cg.push_back(std::move(res.cg[0]));
    }
    out.tensor = std::move(tensor);
    return out;
}

} // namespace ttomo
