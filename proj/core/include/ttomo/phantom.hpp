#pragma once

#include <optional>

#include "ttomo/tensor.hpp"
#include "ttomo/transforms.hpp"

namespace ttomo {

// Deterministic synthetic fields. Every generated function is multiplied by
// a C^2 radial window vanishing identically beyond 1 - margin so that
// boundary conditions hold exactly.
enum class PhantomKind { GaussianBumps, KerEtaElement, PotentialOnly, Mixed };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::GaussianBumps;
    std::uint64_t seed = 7;
    double amplitude = 1.0;
    double margin = 0.08; // support margin (spec floor 0.05)
    int n_bumps = 3;
    // KerEtaElement: fiber frequency and basis coefficients
    int ker_k = 2;
    std::vector<cdouble> ker_coefficients = {cdouble(1.0)};
};

struct PhantomResult {
    SymmetricTensorField tensor;
    std::optional<FiberFunction> planted_p; // gauge part for kernel tests
};

PhantomResult generate_phantom(const SurfacePtr& s, const PhantomSpec& spec, int order);

// Smooth scalar bump fields used across the tests and pipelines.
Field gaussian_bump_field(const Grid& g, double cx, double cy, double sigma, double amp,
                          double margin);
Field random_smooth_field(const Grid& g, std::uint64_t seed, int n_bumps, double amplitude,
                          double margin, double sigma_min = 0.12, double sigma_span = 0.10);

// Radial C^2 window: identically 1 inside 1-margin-taper, 0 outside 1-margin.
double support_window(double r, double margin, double taper = 0.15);

// Zero-trace fiber function of the given degree with smooth random modes.
FiberFunction random_zero_trace_function(const SurfacePtr& s, int degree, std::uint64_t seed,
                                         double amplitude = 1.0, double margin = 0.08,
                                         double sigma_min = 0.12);

// Zero-trace modes of the form (1-r^2)^rim_power * (random cubic in x, y),
// clipped outside the closed disk. Vanishes only at the rim itself but with
// polynomially tame derivatives, which keeps finite-difference transport
// identities at quadrature accuracy (the windowed Gaussians above trade that
// for a genuine interior support margin).
FiberFunction polynomial_zero_trace_function(const SurfacePtr& s, int degree, std::uint64_t seed,
                                             double amplitude = 1.0, int rim_power = 4);

// Additive complex Gaussian noise, per-sample std = level * ||data||_inf.
BoundaryData add_noise(const BoundaryData& data, double level, std::uint64_t seed);

} // namespace ttomo
