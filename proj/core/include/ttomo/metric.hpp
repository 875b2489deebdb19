#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ttomo/common.hpp"
#include "ttomo/grid.hpp"

namespace ttomo {

enum class MetricKind { Euclidean, ConstantCurvature, RadialSoundSpeed, Custom };

struct HerglotzReport {
    bool ok = false;
    double margin = 0.0; // min over sampled radii of d/dr (r / c(r))
    double worst_r = 0.0;
};

// Evaluates d/dr (r/c) = (c - r c') / c^2 on n_r radii in [0,1].
// Throws DomainError if c is not strictly positive there.
HerglotzReport herglotz_check(const std::vector<double>& c_poly, int n_r);

// Conformal metric g = e^{2 lambda(x,y)} (dx^2 + dy^2) on the closed unit
// disk. All model metrics are given through their conformal factor:
//   Euclidean            lambda = 0
//   ConstantCurvature(k) lambda = -log(1 + (k/4) r^2), Gauss curvature k
//   RadialSoundSpeed     lambda = -log c(r), c a polynomial in r
//   Custom               user-supplied lambda (gradient by differences if
//                        not provided)
class ConformalMetric {
public:
    static ConformalMetric euclidean();
    static ConformalMetric constant_curvature(double kappa);
    // Polynomial coefficients of c(r) in increasing powers of r. Validated
    // against the Herglotz non-trapping condition at construction.
    static ConformalMetric radial_sound_speed(std::vector<double> c_poly);
    static ConformalMetric custom(std::function<double(double, double)> lambda,
                                  std::function<std::array<double, 2>(double, double)> grad = {});

    MetricKind kind() const { return kind_; }
    bool is_euclidean() const { return kind_ == MetricKind::Euclidean; }

    double lambda(double x, double y) const;
    std::array<double, 2> grad_lambda(double x, double y) const;
    // Gauss curvature K = -e^{-2 lambda} (Laplacian lambda); analytic for the
    // model kinds, finite differences for Custom.
    double gauss_curvature(double x, double y) const;

    double kappa() const { return kappa_; }
    const std::vector<double>& c_poly() const { return c_poly_; }

    // Fields of e^{s lambda} and the area weight e^{2 lambda} sampled on a grid.
    std::vector<double> exp_lambda_field(const Grid& g, double s) const;

    std::uint64_t hash() const;
    std::string describe() const;

private:
    ConformalMetric() = default;
    MetricKind kind_ = MetricKind::Euclidean;
    double kappa_ = 0.0;
    std::vector<double> c_poly_;
    std::function<double(double, double)> lam_fn_;
    std::function<std::array<double, 2>(double, double)> grad_fn_;
};

} // namespace ttomo
