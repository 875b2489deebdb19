#include "ttomo/fiber.hpp"

#include <cmath>

namespace ttomo {

Surface::Surface(GridPtr grid, ConformalMetric metric)
    : grid_(std::move(grid)), metric_(std::move(metric))
{
}

const std::vector<double>& Surface::exp_lambda(int s) const
{
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = exp_cache_.find(s);
    if (it != exp_cache_.end()) return it->second;
    auto [ins, ok] = exp_cache_.emplace(s, metric_.exp_lambda_field(*grid_, double(s)));
    return ins->second;
}

std::uint64_t Surface::hash() const
{
    std::uint64_t h = grid_->hash();
    const std::uint64_t mh = metric_.hash();
    return fnv1a(&mh, sizeof mh, h);
}

SurfacePtr make_surface(GridPtr grid, ConformalMetric metric)
{
    return std::make_shared<const Surface>(std::move(grid), std::move(metric));
}

const Field& FiberFunction::mode(int k) const
{
    static const Field empty;
    auto it = modes_.find(k);
    if (it == modes_.end()) return empty;
    return it->second;
}

Field& FiberFunction::mode_ref(int k)
{
    auto it = modes_.find(k);
    if (it == modes_.end()) it = modes_.emplace(k, Field(grid_->size(), cdouble(0.0))).first;
    return it->second;
}

void FiberFunction::set_mode(int k, Field f)
{
    if (f.size() != grid_->size()) throw DomainError("FiberFunction::set_mode: size mismatch");
    modes_[k] = std::move(f);
}

int FiberFunction::band() const
{
    int b = 0;
    for (const auto& [k, f] : modes_) b = std::max(b, std::abs(k));
    return b;
}

cdouble FiberFunction::evaluate(double x, double y, double theta) const
{
    cdouble acc = 0.0;
    for (const auto& [k, f] : modes_)
        acc += interp(*grid_, f, x, y) * std::polar(1.0, k * theta);
    return acc;
}

void FiberFunction::scale(cdouble a)
{
    for (auto& [k, f] : modes_)
        for (auto& v : f) v *= a;
}

void FiberFunction::add(const FiberFunction& other, cdouble a)
{
    for (const auto& [k, f] : other.modes_) axpy(mode_ref(k), a, f);
}

void FiberFunction::drop_small_modes(double rel_eps)
{
    double top = 0.0;
    for (const auto& [k, f] : modes_)
        for (const auto& v : f) top = std::max(top, std::abs(v));
    const double cut = top * rel_eps;
    for (auto it = modes_.begin(); it != modes_.end();) {
        double m = 0.0;
        for (const auto& v : it->second) m = std::max(m, std::abs(v));
        it = (m <= cut) ? modes_.erase(it) : std::next(it);
    }
}

FiberFunction FiberFunction::conjugate() const
{
    FiberFunction out(grid_);
    for (const auto& [k, f] : modes_) out.set_mode(-k, conj_field(f));
    return out;
}

void eta_apply(const Surface& s, int k_in, const Field& in, EtaSign sign, Field& out)
{
    const Grid& g = s.grid();
    if (s.metric().is_euclidean()) {
        if (sign == EtaSign::Plus)
            d_z(g, in, out);
        else
            d_zbar(g, in, out);
        return;
    }
    Field tmp(in.size());
    if (sign == EtaSign::Plus) {
        const auto& win = s.exp_lambda(-k_in);
        const auto& wout = s.exp_lambda(k_in - 1);
        for (std::size_t i = 0; i < in.size(); ++i) tmp[i] = in[i] * win[i];
        d_z(g, tmp, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= wout[i];
    } else {
        const auto& win = s.exp_lambda(k_in);
        const auto& wout = s.exp_lambda(-(k_in + 1));
        for (std::size_t i = 0; i < in.size(); ++i) tmp[i] = in[i] * win[i];
        d_zbar(g, tmp, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= wout[i];
    }
}

ModeFunction eta(const Surface& s, const ModeFunction& u, EtaSign sign)
{
    ModeFunction out;
    out.k = u.k + (sign == EtaSign::Plus ? 1 : -1);
    eta_apply(s, u.k, u.field, sign, out.field);
    return out;
}

void eta_adjoint_plain(const Surface& s, int k_in, const Field& in, EtaSign sign, Field& out)
{
    const Grid& g = s.grid();
    if (s.metric().is_euclidean()) {
        if (sign == EtaSign::Plus)
            d_z_adjoint(g, in, out);
        else
            d_zbar_adjoint(g, in, out);
        return;
    }
    // (Diag(a) D Diag(b))^H = Diag(b) D^H Diag(a) for real diagonals a, b.
    Field tmp(in.size());
    if (sign == EtaSign::Plus) {
        const auto& wout = s.exp_lambda(k_in - 1);
        const auto& win = s.exp_lambda(-k_in);
        for (std::size_t i = 0; i < in.size(); ++i) tmp[i] = in[i] * wout[i];
        d_z_adjoint(g, tmp, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= win[i];
    } else {
        const auto& wout = s.exp_lambda(-(k_in + 1));
        const auto& win = s.exp_lambda(k_in);
        for (std::size_t i = 0; i < in.size(); ++i) tmp[i] = in[i] * wout[i];
        d_zbar_adjoint(g, tmp, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= win[i];
    }
}

FiberFunction apply_X(const Surface& s, const FiberFunction& u, int max_band)
{
    if (u.band() + 1 > max_band) throw DomainError("apply_X: band overflow");
    FiberFunction out(u.grid());
    Field tmp;
    for (const auto& [k, f] : u.modes()) {
        eta_apply(s, k, f, EtaSign::Plus, tmp);
        axpy(out.mode_ref(k + 1), 1.0, tmp);
        eta_apply(s, k, f, EtaSign::Minus, tmp);
        axpy(out.mode_ref(k - 1), 1.0, tmp);
    }
    return out;
}

FiberFunction apply_Xperp(const Surface& s, const FiberFunction& u, int max_band)
{
    if (u.band() + 1 > max_band) throw DomainError("apply_Xperp: band overflow");
    FiberFunction out(u.grid());
    Field tmp;
    for (const auto& [k, f] : u.modes()) {
        eta_apply(s, k, f, EtaSign::Plus, tmp);
        axpy(out.mode_ref(k + 1), -kI, tmp);
        eta_apply(s, k, f, EtaSign::Minus, tmp);
        axpy(out.mode_ref(k - 1), kI, tmp);
    }
    return out;
}

cdouble sm_inner_mode(const Surface& s, const Field& u, const Field& v)
{
    return 2.0 * kPi * disk_inner(s.grid(), u, v, &s.area_weight());
}

cdouble sm_inner(const Surface& s, const FiberFunction& u, const FiberFunction& v)
{
    cdouble acc = 0.0;
    for (const auto& [k, f] : u.modes())
        if (v.has_mode(k)) acc += sm_inner_mode(s, f, v.mode(k));
    return acc;
}

double sm_norm(const Surface& s, const FiberFunction& u)
{
    return std::sqrt(std::abs(sm_inner(s, u, u)));
}

std::vector<Field> to_angular(const FiberFunction& u, int n_theta)
{
    const auto& g = *u.grid();
    std::vector<Field> frames(n_theta, Field(g.size(), cdouble(0.0)));
    for (int j = 0; j < n_theta; ++j) {
        const double th = 2.0 * kPi * j / n_theta;
        for (const auto& [k, f] : u.modes()) {
            const cdouble ph = std::polar(1.0, k * th);
            axpy(frames[j], ph, f);
        }
    }
    return frames;
}

FiberFunction from_angular(GridPtr grid, const std::vector<Field>& frames, int band)
{
    const int n_theta = int(frames.size());
    if (2 * band + 1 > n_theta)
        throw DomainError("from_angular: band too large for the angular sampling");
    FiberFunction out(grid);
    for (int k = -band; k <= band; ++k) {
        Field acc(grid->size(), cdouble(0.0));
        for (int j = 0; j < n_theta; ++j) {
            const cdouble ph = std::polar(1.0 / n_theta, -k * (2.0 * kPi * j / n_theta));
            axpy(acc, ph, frames[j]);
        }
        out.set_mode(k, std::move(acc));
    }
    return out;
}

FiberFunction multiply(const FiberFunction& a, const FiberFunction& b, int band_lo, int band_hi)
{
    FiberFunction out(a.grid());
    for (const auto& [ka, fa] : a.modes()) {
        for (const auto& [kb, fb] : b.modes()) {
            const int k = ka + kb;
            if (k < band_lo || k > band_hi) continue;
            Field& dst = out.mode_ref(k);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += fa[i] * fb[i];
        }
    }
    return out;
}

FiberFunction fiber_exp(const FiberFunction& w, int band_lo, int band_hi)
{
    // sup-norm bound drives the Taylor truncation.
    double bound = 0.0;
    for (const auto& [k, f] : w.modes()) {
        double m = 0.0;
        for (const auto& v : f) m = std::max(m, std::abs(v));
        bound += m;
    }
    int n_terms = 8;
    double term = 1.0;
    for (int n = 1; n <= 64; ++n) {
        term *= bound / n;
        if (term < 1e-17) {
            n_terms = n;
            break;
        }
        n_terms = n;
    }

    FiberFunction result(w.grid());
    result.set_mode(0, Field(w.grid()->size(), cdouble(1.0)));
    FiberFunction power = result;
    for (int n = 1; n <= n_terms; ++n) {
        power = multiply(power, w, band_lo, band_hi);
        power.scale(1.0 / double(n));
        result.add(power);
    }
    return result;
}

} // namespace ttomo
