#include "ttomo/phantom.hpp"

#include <cmath>

#include "ttomo/holomorphic.hpp"

namespace ttomo {

double support_window(double r, double margin, double taper)
{
    const double edge = 1.0 - margin;
    if (r >= edge) return 0.0;
    if (r <= edge - taper) return 1.0;
    const double t = (edge - r) / taper; // in (0,1)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

Field gaussian_bump_field(const Grid& g, double cx, double cy, double sigma, double amp,
                          double margin)
{
    Field f(g.size());
    for (int iy = 0; iy < g.n(); ++iy)
        for (int ix = 0; ix < g.n(); ++ix) {
            const double x = g.x(ix), y = g.y(iy);
            const double r = std::hypot(x, y);
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            f[g.idx(ix, iy)] =
                amp * std::exp(-0.5 * d2 / (sigma * sigma)) * support_window(r, margin);
        }
    return f;
}

Field random_smooth_field(const Grid& g, std::uint64_t seed, int n_bumps, double amplitude,
                          double margin, double sigma_min, double sigma_span)
{
    NormalSampler rng(seed);
    Field f(g.size(), cdouble(0.0));
    for (int b = 0; b < n_bumps; ++b) {
        const double cx = 0.55 * (2.0 * rng.next_uniform() - 1.0);
        const double cy = 0.55 * (2.0 * rng.next_uniform() - 1.0);
        const double sigma = sigma_min + sigma_span * rng.next_uniform();
        const double amp = amplitude * (0.4 + 0.6 * rng.next_uniform()) *
                           (rng.next_uniform() < 0.5 ? -1.0 : 1.0);
        const Field bump = gaussian_bump_field(g, cx, cy, sigma, amp, margin);
        add_inplace(f, bump);
    }
    return f;
}

FiberFunction random_zero_trace_function(const SurfacePtr& s, int degree, std::uint64_t seed,
                                         double amplitude, double margin, double sigma_min)
{
    FiberFunction p(s->grid_ptr());
    std::uint64_t sub = seed;
    for (int k = -degree; k <= degree; ++k) {
        sub = fnv1a(&k, sizeof k, sub);
        Field re = random_smooth_field(s->grid(), sub ^ 0x51ed270b, 2, amplitude, margin,
                                       sigma_min);
        Field im = random_smooth_field(s->grid(), sub ^ 0x9e3779b9, 2, 0.5 * amplitude, margin,
                                       sigma_min);
        Field mode(re.size());
        for (std::size_t i = 0; i < mode.size(); ++i)
            mode[i] = re[i] + kI * im[i];
        p.set_mode(k, std::move(mode));
    }
    return p;
}

FiberFunction polynomial_zero_trace_function(const SurfacePtr& s, int degree, std::uint64_t seed,
                                             double amplitude, int rim_power)
{
    const Grid& g = s->grid();
    FiberFunction p(s->grid_ptr());
    NormalSampler rng(seed);
    for (int k = -degree; k <= degree; ++k) {
        // random cubic in (x, y) with O(1) complex coefficients
        cdouble c[10];
        for (auto& v : c) v = cdouble(rng(), rng()) * 0.4;
        Field mode(g.size(), cdouble(0.0));
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                const double x = g.x(ix), y = g.y(iy);
                const double r2 = x * x + y * y;
                if (r2 >= 1.0) continue;
                double w = 1.0;
                for (int i = 0; i < rim_power; ++i) w *= (1.0 - r2);
                const cdouble poly = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y +
                                     c[5] * y * y + c[6] * x * x * x + c[7] * x * x * y +
                                     c[8] * x * y * y + c[9] * y * y * y;
                mode[g.idx(ix, iy)] = amplitude * w * poly;
            }
        p.set_mode(k, std::move(mode));
    }
    return p;
}

PhantomResult generate_phantom(const SurfacePtr& s, const PhantomSpec& spec, int order)
{
    if (spec.margin < 0.05)
        throw ContractViolation("generate_phantom: support margin below 0.05");
    const Grid& g = s->grid();
    PhantomResult out{SymmetricTensorField(s, order), std::nullopt};

    switch (spec.kind) {
    case PhantomKind::GaussianBumps: {
        // real tensor: f_{m-q} = conj(f_q); build the lower half and mirror
        std::uint64_t sub = spec.seed;
        for (int q = 0; 2 * q <= order; ++q) {
            sub = fnv1a(&q, sizeof q, sub);
            Field re = random_smooth_field(g, sub ^ 0x1111, spec.n_bumps, spec.amplitude,
                                           spec.margin);
            if (2 * q == order) {
                out.tensor.component(q) = std::move(re);
            } else {
                Field im = random_smooth_field(g, sub ^ 0x2222, spec.n_bumps,
                                               0.6 * spec.amplitude, spec.margin);
                Field c(re.size());
                for (std::size_t i = 0; i < c.size(); ++i) c[i] = re[i] + kI * im[i];
                out.tensor.component(order - q) = conj_field(c);
                out.tensor.component(q) = std::move(c);
            }
        }
        break;
    }
    case PhantomKind::KerEtaElement: {
        const int k = spec.ker_k;
        if (k < 1 || k > order || (order - k) % 2 != 0)
            throw DomainError("generate_phantom: ker_eta_element needs 1 <= k <= m, m-k even");
        auto basis = basis_ker_eta(*s, k, EtaSign::Minus, int(spec.ker_coefficients.size()));
        Field plus(g.size(), cdouble(0.0));
        for (std::size_t j = 0; j < spec.ker_coefficients.size(); ++j)
            axpy(plus, spec.amplitude * spec.ker_coefficients[j], basis[j].field);
        // conjugate partner keeps the tensor real
        Field minus = conj_field(plus);
        const auto& w = s->exp_lambda(order);
        const int qp = (order - k) / 2;
        const int qm = (order + k) / 2;
        Field cp = plus, cm = minus;
        for (std::size_t i = 0; i < cp.size(); ++i) {
            cp[i] *= w[i];
            cm[i] *= w[i];
        }
        out.tensor.component(qp) = std::move(cp);
        out.tensor.component(qm) = std::move(cm);
        break;
    }
    case PhantomKind::PotentialOnly:
    case PhantomKind::Mixed: {
        FiberFunction p = random_zero_trace_function(s, order - 1, spec.seed ^ 0xabcdef,
                                                     spec.amplitude, spec.margin);
        if (order - 1 >= 0) {
            // keep only parity-(m-1) modes so X p is parity m (exportable)
            FiberFunction pf(s->grid_ptr());
            for (const auto& [k, f] : p.modes())
                if ((order - 1 - k) % 2 == 0) pf.set_mode(k, f);
            p = std::move(pf);
        }
        FiberFunction xp = apply_X(*s, p);
        const auto& w = s->exp_lambda(order);
        for (int q = 0; q <= order; ++q) {
            const int mode = order - 2 * q;
            if (!xp.has_mode(mode)) continue;
            Field c = xp.mode(mode);
            for (std::size_t i = 0; i < c.size(); ++i) c[i] *= w[i];
            out.tensor.component(q) = std::move(c);
        }
        if (spec.kind == PhantomKind::Mixed) {
            PhantomSpec bumps = spec;
            bumps.kind = PhantomKind::GaussianBumps;
            bumps.seed = spec.seed ^ 0x5eed;
            auto extra = generate_phantom(s, bumps, order);
            for (int q = 0; q <= order; ++q)
                add_inplace(out.tensor.component(q), extra.tensor.component(q));
        }
        out.planted_p = std::move(p);
        break;
    }
    }
    return out;
}

BoundaryData add_noise(const BoundaryData& data, double level, std::uint64_t seed)
{
    if (level < 0.0) throw DomainError("add_noise: level must be >= 0");
    BoundaryData out = data;
    if (level == 0.0) return out;
    const double scale = level * data.max_abs() / std::sqrt(2.0);
    NormalSampler rng(seed);
    for (auto& v : out.values()) v += scale * cdouble(rng(), rng());
    return out;
}

} // namespace ttomo
