#include "ttomo/transforms.hpp"

#include <cmath>
#include <mutex>

#include "ttomo/parallel.hpp"

namespace ttomo {

FanPtr make_fan(const ConformalMetric& m, int n_beta, int n_alpha)
{
    return std::make_shared<const BoundaryFan>(m, n_beta, n_alpha);
}

BoundaryData::BoundaryData(FanPtr fan, TransformTag tag)
    : fan_(std::move(fan)), tag_(std::move(tag)), values_(fan_->size(), cdouble(0.0))
{
}

double BoundaryData::norm_mu() const
{
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
        acc += fan_->area_weight(i) * fan_->mu(i) * std::norm(values_[i]);
    return std::sqrt(acc);
}

double BoundaryData::max_abs() const
{
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
}

double data_distance_mu(const BoundaryData& a, const BoundaryData& b)
{
    if (a.values().size() != b.values().size())
        throw DomainError("data_distance_mu: fan shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
        acc += a.fan().area_weight(i) * a.fan().mu(i) * std::norm(a.values()[i] - b.values()[i]);
    return std::sqrt(acc);
}

namespace {

// cum[0] = 0; even i by Simpson pairs, odd i by the 3-point corrected rule.
// Fourth order; cum[m] coincides with composite Simpson for even m.
template <typename T>
void cumulative_integral(const std::vector<T>& v, int m, double dt, std::vector<T>& cum)
{
    cum.resize(m + 1);
    cum[0] = T(0);
    if (m >= 1) {
        if (m >= 2)
            cum[1] = cum[0] + (dt / 12.0) * (5.0 * v[0] + 8.0 * v[1] - v[2]);
        else
            cum[1] = cum[0] + 0.5 * dt * (v[0] + v[1]);
    }
    for (int i = 2; i <= m; ++i) {
        if (i % 2 == 0)
            cum[i] = cum[i - 2] + (dt / 3.0) * (v[i - 2] + 4.0 * v[i - 1] + v[i]);
        else
            cum[i] = cum[i - 1] + (dt / 12.0) * (-v[i - 2] + 8.0 * v[i - 1] + 5.0 * v[i]);
    }
}

struct Workspace {
    std::vector<InterpStencil> stencils;
    std::vector<double> theta;
    std::vector<cdouble> avals, acum;
    std::vector<cdouble> scratch;
    bool theta_const = false;
};

struct ModeRef {
    int k;
    const Field* f;
};

std::vector<ModeRef> mode_list(const FiberFunction& F)
{
    std::vector<ModeRef> out;
    out.reserve(F.modes().size());
    for (const auto& [k, f] : F.modes()) out.push_back({k, &f});
    return out;
}

inline cdouble ipow(cdouble base, int k)
{
    if (k == 0) return 1.0;
    bool inv = k < 0;
    unsigned e = unsigned(inv ? -k : k);
    cdouble acc = 1.0, b = base;
    while (e) {
        if (e & 1u) acc *= b;
        b *= b;
        e >>= 1;
    }
    return inv ? 1.0 / acc : acc;
}

} // namespace

struct RayEngine::Impl {
    SurfacePtr surf;
    FanPtr fan;
    QuadratureSpec quad;
    int m; // even step count per chord

    double qw(int i) const
    {
        if (quad.rule == QuadratureSpec::Rule::Trapezoid)
            return (i == 0 || i == m) ? 1.5 : 3.0; // scaled by dt/3 downstream
        return (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    }

    mutable std::once_flag tau_once;
    mutable std::vector<double> tau;

    Impl(SurfacePtr s, FanPtr f, QuadratureSpec q) : surf(std::move(s)), fan(std::move(f)), quad(q)
    {
        m = std::max(8, quad.steps);
        if (m % 2) ++m;
    }

    bool euclidean() const { return surf->metric().is_euclidean(); }

    void ensure_tau() const
    {
        std::call_once(tau_once, [this] {
            tau.resize(fan->size());
            if (euclidean()) {
                for (int ib = 0; ib < fan->n_beta(); ++ib)
                    for (int ia = 0; ia < fan->n_alpha(); ++ia)
                        tau[fan->idx(ib, ia)] = std::max(0.0, 2.0 * std::cos(fan->alpha(ia)));
                return;
            }
            const double dt_loc = 0.005;
            parallel_for(fan->size(), [&](std::size_t i) {
                const int ib = int(i) / fan->n_alpha();
                const int ia = int(i) % fan->n_alpha();
                tau[i] = exit_time(surf->metric(), fan->node(ib, ia), dt_loc);
            });
        });
    }

    // Fill per-sample stencils and fiber angles for one node; optionally the
    // cumulative attenuation integral along the ray.
    void trace(int ib, int ia, const Field* a, Workspace& ws) const
    {
        const Grid& g = surf->grid();
        const std::size_t node = fan->idx(ib, ia);
        const double t_exit = tau[node];
        const double dt = t_exit / m;
        ws.stencils.resize(m + 1);
        ws.theta.resize(m + 1);

        const PhasePoint p0 = fan->node(ib, ia);
        if (euclidean()) {
            ws.theta_const = true;
            ws.theta[0] = p0.theta;
            const double cx = std::cos(p0.theta), sy = std::sin(p0.theta);
            for (int i = 0; i <= m; ++i) {
                const double t = dt * i;
                ws.stencils[i] = interp_stencil(g, p0.x + t * cx, p0.y + t * sy);
            }
        } else {
            ws.theta_const = false;
            PhasePoint q = p0;
            ws.stencils[0] = interp_stencil(g, q.x, q.y);
            ws.theta[0] = q.theta;
            for (int i = 1; i <= m; ++i) {
                q = flow(surf->metric(), q, dt, dt * 1.125); // single step
                ws.stencils[i] = interp_stencil(g, q.x, q.y);
                ws.theta[i] = q.theta;
            }
        }

        if (a) {
            ws.avals.resize(m + 1);
            for (int i = 0; i <= m; ++i) ws.avals[i] = interp_apply(g, *a, ws.stencils[i]);
            cumulative_integral(ws.avals, m, dt, ws.acum);
        }
    }
};

RayEngine::RayEngine(SurfacePtr s, FanPtr fan, QuadratureSpec q)
    : impl_(std::make_unique<Impl>(std::move(s), std::move(fan), q))
{
}

RayEngine::~RayEngine() = default;

const Surface& RayEngine::surface() const { return *impl_->surf; }
SurfacePtr RayEngine::surface_ptr() const { return impl_->surf; }
const BoundaryFan& RayEngine::fan() const { return *impl_->fan; }
FanPtr RayEngine::fan_ptr() const { return impl_->fan; }
const QuadratureSpec& RayEngine::quadrature() const { return impl_->quad; }

const std::vector<double>& RayEngine::exit_times() const
{
    impl_->ensure_tau();
    return impl_->tau;
}

std::vector<cdouble> RayEngine::path_integrals(const Field& a) const
{
    impl_->ensure_tau();
    std::vector<cdouble> out(impl_->fan->size(), cdouble(0.0));
    const int na = impl_->fan->n_alpha();
    parallel_for_chunks(impl_->fan->size(), [&](std::size_t b, std::size_t e, int) {
        Workspace ws;
        for (std::size_t i = b; i < e; ++i) {
            impl_->trace(int(i) / na, int(i) % na, &a, ws);
            out[i] = ws.acum[impl_->m];
        }
    });
    return out;
}

BoundaryData RayEngine::transform(const FiberFunction& F, const WeightSpec& w, int moment_k,
                                  TransformTag tag) const
{
    impl_->ensure_tau();
    BoundaryData out(impl_->fan, std::move(tag));
    const auto modes = mode_list(F);
    const auto wmodes = (w.kind == WeightSpec::Kind::Custom) ? mode_list(*w.custom)
                                                             : std::vector<ModeRef>{};
    const Field* afield =
        (w.kind == WeightSpec::Kind::Atten && !w.atten->zero) ? &w.atten->a : nullptr;
    const Grid& g = impl_->surf->grid();
    const int m = impl_->m;
    const int na = impl_->fan->n_alpha();

    parallel_for_chunks(impl_->fan->size(), [&](std::size_t nb, std::size_t ne, int) {
        Workspace ws;
        std::vector<cdouble> phases(modes.size());
        std::vector<cdouble> wphases(wmodes.size());
        for (std::size_t node = nb; node < ne; ++node) {
            const int ib = int(node) / na, ia = int(node) % na;
            impl_->trace(ib, ia, afield, ws);
            const double t_exit = impl_->tau[node];
            const double dt = t_exit / m;
            const cdouble atotal = afield ? ws.acum[m] : cdouble(0.0);

            if (ws.theta_const) {
                const cdouble ph = std::polar(1.0, ws.theta[0]);
                for (std::size_t j = 0; j < modes.size(); ++j) phases[j] = ipow(ph, modes[j].k);
                for (std::size_t j = 0; j < wmodes.size(); ++j) wphases[j] = ipow(ph, wmodes[j].k);
            }

            cdouble acc = 0.0;
            for (int i = 0; i <= m; ++i) {
                const double sw = impl_->qw(i);
                if (!ws.theta_const) {
                    const cdouble ph = std::polar(1.0, ws.theta[i]);
                    for (std::size_t j = 0; j < modes.size(); ++j) phases[j] = ipow(ph, modes[j].k);
                    for (std::size_t j = 0; j < wmodes.size(); ++j)
                        wphases[j] = ipow(ph, wmodes[j].k);
                }
                cdouble fv = 0.0;
                for (std::size_t j = 0; j < modes.size(); ++j)
                    fv += phases[j] * interp_apply(g, *modes[j].f, ws.stencils[i]);
                cdouble wt = 1.0;
                if (afield) wt = std::exp(-(atotal - ws.acum[i]));
                if (w.kind == WeightSpec::Kind::Custom) {
                    cdouble wv = 0.0;
                    for (std::size_t j = 0; j < wmodes.size(); ++j)
                        wv += wphases[j] * interp_apply(g, *wmodes[j].f, ws.stencils[i]);
                    wt = wv;
                }
                if (moment_k > 0) {
                    const double rem = t_exit - dt * i;
                    double mk = 1.0;
                    for (int r = 0; r < moment_k; ++r) mk *= rem;
                    wt *= mk;
                }
                acc += sw * wt * fv;
            }
            out.values()[node] = acc * (dt / 3.0);
        }
    });
    return out;
}

void RayEngine::adjoint_sweep(const std::vector<cdouble>& coef, const WeightSpec& w, int moment_k,
                              const std::vector<int>& modes, std::vector<Field>& out) const
{
    impl_->ensure_tau();
    const Field* afield =
        (w.kind == WeightSpec::Kind::Atten && !w.atten->zero) ? &w.atten->a : nullptr;
    const auto wmodes = (w.kind == WeightSpec::Kind::Custom) ? mode_list(*w.custom)
                                                             : std::vector<ModeRef>{};
    const Grid& g = impl_->surf->grid();
    const int m = impl_->m;
    const int na = impl_->fan->n_alpha();
    const int nw = std::max(1, std::min(worker_count(), int(impl_->fan->size())));

    // per-thread accumulators, reduced in thread order
    std::vector<std::vector<Field>> acc(nw);
    for (auto& fields : acc) fields.assign(modes.size(), Field(g.size(), cdouble(0.0)));

    parallel_for_chunks(impl_->fan->size(), [&](std::size_t nb, std::size_t ne, int tid) {
        Workspace ws;
        std::vector<cdouble> phases(modes.size());
        std::vector<cdouble> wphases(wmodes.size());
        auto& fields = acc[tid];
        for (std::size_t node = nb; node < ne; ++node) {
            const cdouble c = coef[node];
            if (c == cdouble(0.0)) continue;
            const int ib = int(node) / na, ia = int(node) % na;
            impl_->trace(ib, ia, afield, ws);
            const double t_exit = impl_->tau[node];
            const double dt = t_exit / m;
            const cdouble atotal = afield ? ws.acum[m] : cdouble(0.0);

            if (ws.theta_const) {
                const cdouble ph = std::polar(1.0, -ws.theta[0]); // conj phase
                for (std::size_t j = 0; j < modes.size(); ++j) phases[j] = ipow(ph, modes[j]);
                const cdouble phf = std::polar(1.0, ws.theta[0]);
                for (std::size_t j = 0; j < wmodes.size(); ++j) wphases[j] = ipow(phf, wmodes[j].k);
            }
            for (int i = 0; i <= m; ++i) {
                double sw = impl_->qw(i) * (dt / 3.0);
                if (!ws.theta_const) {
                    const cdouble ph = std::polar(1.0, -ws.theta[i]);
                    for (std::size_t j = 0; j < modes.size(); ++j) phases[j] = ipow(ph, modes[j]);
                    const cdouble phf = std::polar(1.0, ws.theta[i]);
                    for (std::size_t j = 0; j < wmodes.size(); ++j)
                        wphases[j] = ipow(phf, wmodes[j].k);
                }
                cdouble wt = 1.0;
                if (afield) wt = std::conj(std::exp(-(atotal - ws.acum[i])));
                if (w.kind == WeightSpec::Kind::Custom) {
                    cdouble wv = 0.0;
                    for (std::size_t j = 0; j < wmodes.size(); ++j)
                        wv += wphases[j] * interp_apply(g, *wmodes[j].f, ws.stencils[i]);
                    wt = std::conj(wv);
                }
                if (moment_k > 0) {
                    const double rem = t_exit - dt * i;
                    double mk = 1.0;
                    for (int r = 0; r < moment_k; ++r) mk *= rem;
                    wt *= mk;
                }
                const cdouble base = sw * wt * c;
                const InterpStencil& st = ws.stencils[i];
                for (std::size_t j = 0; j < modes.size(); ++j) {
                    const cdouble v = base * phases[j];
                    Field& dst = fields[j];
                    for (int ry = 0; ry < 4; ++ry) {
                        const std::size_t row = g.idx(st.ix0, st.iy0 + ry);
                        const double wy = st.wy[ry];
                        for (int rx = 0; rx < 4; ++rx)
                            dst[row + rx] += v * (wy * st.wx[rx]);
                    }
                }
            }
        }
    });

    out.assign(modes.size(), Field(g.size(), cdouble(0.0)));
    for (int t = 0; t < nw; ++t)
        for (std::size_t j = 0; j < modes.size(); ++j) add_inplace(out[j], acc[t][j]);
}

std::pair<FiberFunction, BoundaryData> RayEngine::transport(const FiberFunction& F,
                                                            const Attenuation& a, int n_theta,
                                                            int band) const
{
    impl_->ensure_tau();
    const Grid& g = impl_->surf->grid();
    const int m = impl_->m;
    const int na = impl_->fan->n_alpha();
    const Field* afield = a.zero ? nullptr : &a.a;

    BoundaryData trace_data(impl_->fan, {"transport_trace", 0});
    const auto modes = mode_list(F);

    // deposition buffers: value-weighted and weight-only sums
    std::vector<std::vector<cdouble>> num(n_theta, std::vector<cdouble>(g.size(), cdouble(0.0)));
    std::vector<std::vector<double>> den(n_theta, std::vector<double>(g.size(), 0.0));

    Workspace ws;
    std::vector<cdouble> phases(modes.size());
    std::vector<cdouble> integrand(m + 1), cum(m + 1);
    for (std::size_t node = 0; node < impl_->fan->size(); ++node) {
        const int ib = int(node) / na, ia = int(node) % na;
        impl_->trace(ib, ia, afield, ws);
        const double t_exit = impl_->tau[node];
        const double dt = t_exit / m;
        const cdouble atotal = afield ? ws.acum[m] : cdouble(0.0);

        if (ws.theta_const) {
            const cdouble ph = std::polar(1.0, ws.theta[0]);
            for (std::size_t j = 0; j < modes.size(); ++j) phases[j] = ipow(ph, modes[j].k);
        }
        for (int i = 0; i <= m; ++i) {
            if (!ws.theta_const) {
                const cdouble ph = std::polar(1.0, ws.theta[i]);
                for (std::size_t j = 0; j < modes.size(); ++j) phases[j] = ipow(ph, modes[j].k);
            }
            cdouble fv = 0.0;
            for (std::size_t j = 0; j < modes.size(); ++j)
                fv += phases[j] * interp_apply(g, *modes[j].f, ws.stencils[i]);
            cdouble wt = 1.0;
            if (afield) wt = std::exp(-(atotal - ws.acum[i]));
            integrand[i] = wt * fv;
        }
        cumulative_integral(integrand, m, dt, cum);
        const cdouble total = cum[m];
        trace_data.values()[node] = total;

        // deposit u(phi_t) = total - cum[t] at every sample
        for (int i = 0; i <= m; ++i) {
            const cdouble uval = total - cum[i];
            const InterpStencil& st = ws.stencils[i];
            // bilinear deposit around the sample position via the two central
            // stencil nodes (cells ix0+1..ix0+2 bracket the point by construction
            // away from edges; fall back to nearest otherwise)
            const double th = ws.theta_const ? ws.theta[0] : ws.theta[i];
            double thw = th / (2.0 * kPi) * n_theta;
            thw -= std::floor(thw / n_theta) * n_theta;
            int jt = int(std::floor(thw));
            double ft = thw - jt;
            jt %= n_theta;
            const int jt1 = (jt + 1) % n_theta;

            // recompute bilinear spatial weights from the stencil origin
            // (sample position lies within [ix0+1, ix0+2] except at clamps)
            double px = 0.0, py = 0.0;
            for (int r = 0; r < 4; ++r) {
                px += st.wx[r] * (st.ix0 + r);
                py += st.wy[r] * (st.iy0 + r);
            }
            int ix = std::min(int(std::floor(px)), g.n() - 2);
            int iy = std::min(int(std::floor(py)), g.n() - 2);
            ix = std::max(ix, 0);
            iy = std::max(iy, 0);
            const double fx = std::min(std::max(px - ix, 0.0), 1.0);
            const double fy = std::min(std::max(py - iy, 0.0), 1.0);
            const double wsp[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const std::size_t gi[4] = {g.idx(ix, iy), g.idx(ix + 1, iy), g.idx(ix, iy + 1),
                                       g.idx(ix + 1, iy + 1)};
            for (int c = 0; c < 4; ++c) {
                num[jt][gi[c]] += (1.0 - ft) * wsp[c] * uval;
                den[jt][gi[c]] += (1.0 - ft) * wsp[c];
                num[jt1][gi[c]] += ft * wsp[c] * uval;
                den[jt1][gi[c]] += ft * wsp[c];
            }
        }
    }

    std::vector<Field> frames(n_theta, Field(g.size(), cdouble(0.0)));
    for (int j = 0; j < n_theta; ++j)
        for (std::size_t i = 0; i < g.size(); ++i)
            frames[j][i] = den[j][i] > 1e-12 ? num[j][i] / den[j][i] : cdouble(0.0);

    FiberFunction u = from_angular(impl_->surf->grid_ptr(), frames, band);
    return {std::move(u), std::move(trace_data)};
}

cdouble RayEngine::boundary_pairing(const BoundaryData& d, const FiberFunction& psi,
                                    const std::vector<cdouble>* extra) const
{
    const BoundaryFan& f = *impl_->fan;
    const auto modes = mode_list(psi);
    const Grid& g = impl_->surf->grid();
    cdouble acc = 0.0;
    for (int ib = 0; ib < f.n_beta(); ++ib) {
        const double b = f.beta(ib);
        const double bx = std::cos(b), by = std::sin(b);
        // spatial interpolation of each mode is shared across alpha
        std::vector<cdouble> mode_vals(modes.size());
        for (std::size_t j = 0; j < modes.size(); ++j)
            mode_vals[j] = interp(g, *modes[j].f, bx, by);
        for (int ia = 0; ia < f.n_alpha(); ++ia) {
            const std::size_t node = f.idx(ib, ia);
            const double th = b + kPi + f.alpha(ia);
            const cdouble ph = std::polar(1.0, th);
            cdouble psival = 0.0;
            for (std::size_t j = 0; j < modes.size(); ++j)
                psival += mode_vals[j] * ipow(ph, modes[j].k);
            cdouble term = d.values()[node] * std::conj(psival) * f.mu(node) * f.area_weight(node);
            if (extra) term *= (*extra)[node];
            acc += term;
        }
    }
    return acc;
}

EnginePtr make_engine(SurfacePtr s, FanPtr fan, QuadratureSpec q)
{
    return std::make_shared<const RayEngine>(std::move(s), std::move(fan), q);
}

BoundaryData ray_transform(const SurfacePtr& s, const FiberFunction& F, const WeightSpec& w,
                           const FanPtr& fan, QuadratureSpec q)
{
    RayEngine e(s, fan, q);
    return e.transform(F, w, 0, {"ray", 0});
}

BoundaryData attenuated_transform(const SurfacePtr& s, const FiberFunction& F,
                                  const Attenuation& a, const FanPtr& fan, QuadratureSpec q)
{
    RayEngine e(s, fan, q);
    return e.transform(F, WeightSpec::attenuated(a), 0, {"attenuated", 0});
}

BoundaryData moment_transform(const SurfacePtr& s, const FiberFunction& F, const Attenuation& a,
                              int k, const FanPtr& fan, QuadratureSpec q)
{
    if (k < 0 || k > 6) throw DomainError("moment_transform: k out of the configured range [0,6]");
    RayEngine e(s, fan, q);
    return e.transform(F, WeightSpec::attenuated(a), k, {"moment", k});
}

std::pair<FiberFunction, BoundaryData> transport_solve(const SurfacePtr& s, const FiberFunction& F,
                                                       const Attenuation& a, const FanPtr& fan,
                                                       QuadratureSpec q, int n_theta, int band)
{
    RayEngine e(s, fan, q);
    return e.transport(F, a, n_theta, band);
}

std::vector<BoundaryData> transverse_collection(const SymmetricTensorField& f, const WeightSpec& w,
                                                const FanPtr& fan, QuadratureSpec q)
{
    RayEngine e(f.surface(), fan, q);
    std::vector<BoundaryData> out;
    out.reserve(f.order() + 1);
    for (int k = 0; k <= f.order(); ++k)
        out.push_back(e.transform(ell(f, k), w, 0, {"transverse", k}));
    return out;
}

} // namespace ttomo
