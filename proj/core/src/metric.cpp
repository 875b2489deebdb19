#include "ttomo/metric.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace ttomo {

namespace {

double poly_eval(const std::vector<double>& c, double r)
{
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * r + c[i];
    return v;
}

double poly_deriv(const std::vector<double>& c, double r)
{
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * r + double(i) * c[i];
    return v;
}

double poly_deriv2(const std::vector<double>& c, double r)
{
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 2;) v = v * r + double(i) * double(i - 1) * c[i];
    return v;
}

} // namespace

HerglotzReport herglotz_check(const std::vector<double>& c_poly, int n_r)
{
    if (n_r < 2) throw DomainError("herglotz_check: n_r must be >= 2");
    HerglotzReport rep;
    rep.margin = 1e300;
    for (int i = 0; i < n_r; ++i) {
        const double r = double(i) / double(n_r - 1);
        const double c = poly_eval(c_poly, r);
        if (c <= 0.0) throw DomainError("herglotz_check: sound speed must be positive on [0,1]");
        const double dc = poly_deriv(c_poly, r);
        const double v = (c - r * dc) / (c * c); // d/dr (r/c)
        if (v < rep.margin) {
            rep.margin = v;
            rep.worst_r = r;
        }
    }
    rep.ok = rep.margin > 0.0;
    return rep;
}

ConformalMetric ConformalMetric::euclidean()
{
    ConformalMetric m;
    m.kind_ = MetricKind::Euclidean;
    return m;
}

ConformalMetric ConformalMetric::constant_curvature(double kappa)
{
    ConformalMetric m;
    m.kind_ = MetricKind::ConstantCurvature;
    m.kappa_ = kappa;
    if (1.0 + 0.25 * kappa <= 0.0)
        throw DomainError("constant_curvature: 1 + kappa/4 r^2 must stay positive on the disk");
    return m;
}

ConformalMetric ConformalMetric::radial_sound_speed(std::vector<double> c_poly)
{
    ConformalMetric m;
    m.kind_ = MetricKind::RadialSoundSpeed;
    m.c_poly_ = std::move(c_poly);
    const auto rep = herglotz_check(m.c_poly_, 512);
    if (!rep.ok) {
        std::ostringstream os;
        os << "radial_sound_speed: Herglotz condition fails, margin " << rep.margin << " at r = "
           << rep.worst_r;
        throw DomainError(os.str());
    }
    return m;
}

ConformalMetric ConformalMetric::custom(std::function<double(double, double)> lambda,
                                        std::function<std::array<double, 2>(double, double)> grad)
{
    ConformalMetric m;
    m.kind_ = MetricKind::Custom;
    m.lam_fn_ = std::move(lambda);
    m.grad_fn_ = std::move(grad);
    return m;
}

double ConformalMetric::lambda(double x, double y) const
{
    switch (kind_) {
    case MetricKind::Euclidean:
        return 0.0;
    case MetricKind::ConstantCurvature:
        return -std::log(1.0 + 0.25 * kappa_ * (x * x + y * y));
    case MetricKind::RadialSoundSpeed:
        return -std::log(poly_eval(c_poly_, std::hypot(x, y)));
    case MetricKind::Custom:
        return lam_fn_(x, y);
    }
    return 0.0;
}

std::array<double, 2> ConformalMetric::grad_lambda(double x, double y) const
{
    switch (kind_) {
    case MetricKind::Euclidean:
        return {0.0, 0.0};
    case MetricKind::ConstantCurvature: {
        const double d = 1.0 + 0.25 * kappa_ * (x * x + y * y);
        const double f = -0.5 * kappa_ / d;
        return {f * x, f * y};
    }
    case MetricKind::RadialSoundSpeed: {
        const double r = std::hypot(x, y);
        if (r < 1e-14) return {0.0, 0.0};
        const double c = poly_eval(c_poly_, r);
        const double dc = poly_deriv(c_poly_, r);
        const double drlam = -dc / c;
        return {drlam * x / r, drlam * y / r};
    }
    case MetricKind::Custom: {
        if (grad_fn_) return grad_fn_(x, y);
        const double e = 1e-6;
        return {(lam_fn_(x + e, y) - lam_fn_(x - e, y)) / (2 * e),
                (lam_fn_(x, y + e) - lam_fn_(x, y - e)) / (2 * e)};
    }
    }
    return {0.0, 0.0};
}

double ConformalMetric::gauss_curvature(double x, double y) const
{
    switch (kind_) {
    case MetricKind::Euclidean:
        return 0.0;
    case MetricKind::ConstantCurvature:
        return kappa_;
    case MetricKind::RadialSoundSpeed: {
        // lambda = -log c(r); Laplacian in polar: lam'' + lam'/r.
        const double r = std::hypot(x, y);
        const double c = poly_eval(c_poly_, r);
        const double dc = poly_deriv(c_poly_, r);
        const double d2c = poly_deriv2(c_poly_, r);
        const double lam1 = -dc / c;
        const double lam2 = -(d2c * c - dc * dc) / (c * c);
        double lap;
        if (r < 1e-10) {
            lap = 2.0 * lam2; // radial symmetry: lam'/r -> lam'' at the origin
        } else {
            lap = lam2 + lam1 / r;
        }
        return -std::exp(-2.0 * lambda(x, y)) * lap;
    }
    case MetricKind::Custom: {
        const double e = 1e-4;
        const double lap = (lam_fn_(x + e, y) + lam_fn_(x - e, y) + lam_fn_(x, y + e) +
                            lam_fn_(x, y - e) - 4.0 * lam_fn_(x, y)) /
                           (e * e);
        return -std::exp(-2.0 * lam_fn_(x, y)) * lap;
    }
    }
    return 0.0;
}

std::vector<double> ConformalMetric::exp_lambda_field(const Grid& g, double s) const
{
    std::vector<double> f(g.size());
    for (int iy = 0; iy < g.n(); ++iy)
        for (int ix = 0; ix < g.n(); ++ix)
            f[g.idx(ix, iy)] = std::exp(s * lambda(g.x(ix), g.y(iy)));
    return f;
}

std::uint64_t ConformalMetric::hash() const
{
    std::uint64_t h = fnv1a_str("metric");
    const int k = int(kind_);
    h = fnv1a(&k, sizeof k, h);
    h = fnv1a(&kappa_, sizeof kappa_, h);
    if (!c_poly_.empty()) h = fnv1a(c_poly_.data(), c_poly_.size() * sizeof(double), h);
    return h;
}

std::string ConformalMetric::describe() const
{
    std::ostringstream os;
    switch (kind_) {
    case MetricKind::Euclidean:
        os << "euclidean";
        break;
    case MetricKind::ConstantCurvature:
        os << "constant_curvature kappa=" << kappa_;
        break;
    case MetricKind::RadialSoundSpeed: {
        os << "radial_sound_speed c=";
        for (std::size_t i = 0; i < c_poly_.size(); ++i) os << (i ? "," : "") << c_poly_[i];
        break;
    }
    case MetricKind::Custom:
        os << "custom";
        break;
    }
    return os.str();
}

} // namespace ttomo
