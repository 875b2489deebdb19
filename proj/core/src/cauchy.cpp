#include "ttomo/cauchy.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>

namespace ttomo {

namespace {

std::mutex g_fftw_mutex; // fftw plan creation is not thread-safe

// Gauss-Legendre nodes/weights on [-1/2, 1/2] by Newton iteration.
void gauss_legendre_half(int n, std::vector<double>& x, std::vector<double>& w)
{
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = 0.5 * t;
        w[i] = 0.5 * 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

// Integral of 1/((ox - s) + i (oy - t)) over the unit cell [-1/2,1/2]^2.
cdouble unit_cell_integral(int ox, int oy)
{
    if (ox == 0 && oy == 0) return 0.0; // odd symmetry
    static std::vector<double> gx, gw;
    static std::once_flag once;
    std::call_once(once, [] { gauss_legendre_half(32, gx, gw); });
    cdouble acc = 0.0;
    for (std::size_t a = 0; a < gx.size(); ++a)
        for (std::size_t b = 0; b < gx.size(); ++b)
            acc += gw[a] * gw[b] / cdouble(ox - gx[a], oy - gx[b]);
    return acc;
}

} // namespace

struct CauchySolver::Impl {
    GridPtr grid;
    int n = 0, P = 0;
    std::vector<double> clip; // clipped cell fraction in [0,1]
    std::vector<cdouble> kernel_hat;
    fftw_plan fwd = nullptr, bwd = nullptr;
    mutable std::vector<cdouble> buf;
    mutable std::mutex run_mutex;

    explicit Impl(GridPtr g) : grid(std::move(g))
    {
        n = grid->n();
        P = 2 * n;
        const double h = grid->h();
        const double cell = h * h;
        clip.resize(grid->size());
        for (std::size_t i = 0; i < clip.size(); ++i) clip[i] = grid->disk_weight(i) / cell;

        std::vector<cdouble> kernel(std::size_t(P) * P, cdouble(0.0));
        for (int oy = -(n - 1); oy <= n - 1; ++oy) {
            for (int ox = -(n - 1); ox <= n - 1; ++ox) {
                cdouble I;
                if (std::abs(ox) <= 4 && std::abs(oy) <= 4)
                    I = unit_cell_integral(ox, oy);
                else
                    I = 1.0 / cdouble(ox, oy);
                const int px = (ox + P) % P;
                const int py = (oy + P) % P;
                kernel[std::size_t(py) * P + px] = (h / kPi) * I;
            }
        }

        buf.resize(std::size_t(P) * P);
        {
            std::lock_guard<std::mutex> lock(g_fftw_mutex);
            fwd = fftw_plan_dft_2d(P, P, reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD,
                                   FFTW_ESTIMATE);
            bwd = fftw_plan_dft_2d(P, P, reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
        }
        std::copy(kernel.begin(), kernel.end(), buf.begin());
        fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()));
        kernel_hat.assign(buf.begin(), buf.end());
    }

    ~Impl()
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }

    Field convolve(const Field& density) const
    {
        std::lock_guard<std::mutex> lock(run_mutex);
        std::fill(buf.begin(), buf.end(), cdouble(0.0));
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const std::size_t gi = grid->idx(ix, iy);
                buf[std::size_t(iy) * P + ix] = density[gi] * clip[gi];
            }
        auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_execute_dft(fwd, raw, raw);
        const double scale = 1.0 / (double(P) * double(P));
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= kernel_hat[i] * scale;
        fftw_execute_dft(bwd, raw, raw);
        Field out(grid->size());
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                out[grid->idx(ix, iy)] = buf[std::size_t(iy) * P + ix];
        return out;
    }
};

CauchySolver::CauchySolver(GridPtr grid) : impl_(std::make_unique<Impl>(std::move(grid))) {}
CauchySolver::~CauchySolver() = default;

Field CauchySolver::cauchy_transform(const Field& density) const { return impl_->convolve(density); }

ModeFunction CauchySolver::dbar_solve(const Surface& s, const ModeFunction& rhs, int target_k,
                                      double residual_tol, bool check) const
{
    const Grid& g = s.grid();
    if (rhs.field.size() != g.size()) throw DomainError("dbar_solve: rhs size mismatch");
    ModeFunction u;
    u.k = target_k;
    if (target_k == rhs.k + 1) {
        // eta_minus u = rhs: e^{-(k+1) lam} dzbar(e^{k lam} u~) = rhs~
        // with k = target_k, so u~ = e^{-k lam} C[e^{(k+1) lam} rhs~].
        Field density = rhs.field;
        mul_inplace(density, s.exp_lambda(target_k + 1)); // e^{(k+1) lambda}
        u.field = impl_->convolve(density);
        mul_inplace(u.field, s.exp_lambda(-target_k));
    } else if (target_k == rhs.k - 1) {
        // eta_plus u = rhs: e^{(k-1) lam} dz(e^{-k lam} u~) = rhs~, k = target_k,
        // dz phi = f solved by phi = conj(C[conj f]).
        Field density = rhs.field;
        mul_inplace(density, s.exp_lambda(1 - target_k)); // e^{(1-k) lambda}
        density = conj_field(density);
        Field phi = impl_->convolve(density);
        u.field = conj_field(phi);
        mul_inplace(u.field, s.exp_lambda(target_k));
    } else {
        throw DomainError("dbar_solve: target_k must be rhs.k +/- 1");
    }
    if (check) {
        const double res = residual(s, u, rhs);
        if (res > residual_tol)
            throw AccuracyError("dbar_solve: residual " + std::to_string(res) +
                                " above tolerance; resolution too coarse");
    }
    return u;
}

double CauchySolver::residual(const Surface& s, const ModeFunction& u, const ModeFunction& rhs) const
{
    const Grid& g = s.grid();
    Field eu;
    eta_apply(s, u.k, u.field, rhs.k == u.k - 1 ? EtaSign::Minus : EtaSign::Plus, eu);
    const auto mask = g.interior_mask(4.0 * g.h());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < eu.size(); ++i) {
        if (!mask[i]) continue;
        const double w = g.disk_weight(i);
        num += w * std::norm(eu[i] - rhs.field[i]);
        den += w * std::norm(rhs.field[i]);
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

std::shared_ptr<CauchySolver> cauchy_solver_for(const GridPtr& grid)
{
    static std::mutex m;
    static std::map<const Grid*, std::weak_ptr<CauchySolver>> registry;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = registry[grid.get()];
    if (auto sp = slot.lock()) return sp;
    auto sp = std::make_shared<CauchySolver>(grid);
    slot = sp;
    return sp;
}

} // namespace ttomo
