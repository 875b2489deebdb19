#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ttomo/phantom.hpp"
#include "ttomo/reconstruction.hpp"

namespace ttomo {

// Flat sectioned key=value configuration (full grammar in the README).
// Unknown sections or keys are rejected so that misspelled settings cannot
// silently fall back to defaults.
struct RunConfig {
    // [metric]
    MetricKind metric_kind = MetricKind::Euclidean;
    double kappa = 0.0;
    std::vector<double> c_poly = {1.0};
    int grid_n = 256;

    // [fan]
    int n_beta = 360;
    int n_alpha = 180;
    int quad_steps = 2000;     // forward data generation
    int inv_quad_steps = 256;  // inversion operator quadrature

    // [phantom]
    PhantomSpec phantom;
    int order = 2;

    // [attenuation]
    std::string atten_kind = "none"; // none | gaussian | constant
    double atten_amplitude = 0.0;
    double atten_width = 0.35;
    double atten_cx = 0.0, atten_cy = 0.0;

    // [pipeline]
    std::string weight = "unit"; // unit | attenuated
    int n_basis = 16;
    int ladder_depth = 12;
    int max_iter = 300;
    double tol = 1e-6;
    double noise = 0.0;
    int moment_max = -1; // defaults to order

    // [output]
    std::filesystem::path out_dir = "out";
    bool write_images = true;
    bool write_sinograms = true;

    std::uint64_t seed = 7;
    int threads = 0; // 0 = hardware

    ConformalMetric make_metric() const;
    Attenuation make_attenuation(const Grid& g) const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& file);

// Manifest: a re-runnable config echo annotated with every tolerance and
// basis size in force; byte-identical across runs with the same config.
std::string manifest_text(const RunConfig& cfg);

} // namespace ttomo
