#include "ttomo/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ttomo {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v)
{
    std::vector<double> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

double parse_num(const std::string& v, const std::string& key)
{
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for key '" + key + "': " + v);
    }
}

int parse_int(const std::string& v, const std::string& key)
{
    const double d = parse_num(v, key);
    const int i = int(d);
    if (double(i) != d) throw ConfigError("expected integer for key '" + key + "': " + v);
    return i;
}

bool parse_bool(const std::string& v, const std::string& key)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected boolean for key '" + key + "': " + v);
}

std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

RunConfig parse_config(const std::string& text)
{
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "metric" && section != "fan" && section != "phantom" &&
                section != "attenuation" && section != "pipeline" && section != "output")
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");

        auto unknown = [&]() -> ConfigError {
            return ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key +
                               "' in section [" + section + "]");
        };

        if (section == "metric") {
            if (key == "kind") {
                if (val == "euclidean")
                    cfg.metric_kind = MetricKind::Euclidean;
                else if (val == "constant_curvature")
                    cfg.metric_kind = MetricKind::ConstantCurvature;
                else if (val == "radial_sound_speed")
                    cfg.metric_kind = MetricKind::RadialSoundSpeed;
                else
                    throw ConfigError("unknown metric kind: " + val);
            } else if (key == "kappa")
                cfg.kappa = parse_num(val, key);
            else if (key == "c_poly")
                cfg.c_poly = parse_list(val);
            else if (key == "grid_n")
                cfg.grid_n = parse_int(val, key);
            else
                throw unknown();
        } else if (section == "fan") {
            if (key == "n_beta")
                cfg.n_beta = parse_int(val, key);
            else if (key == "n_alpha")
                cfg.n_alpha = parse_int(val, key);
            else if (key == "quad_steps")
                cfg.quad_steps = parse_int(val, key);
            else if (key == "inv_quad_steps")
                cfg.inv_quad_steps = parse_int(val, key);
            else
                throw unknown();
        } else if (section == "phantom") {
            if (key == "kind") {
                if (val == "gaussian_bumps")
                    cfg.phantom.kind = PhantomKind::GaussianBumps;
                else if (val == "ker_eta_element")
                    cfg.phantom.kind = PhantomKind::KerEtaElement;
                else if (val == "potential_only")
                    cfg.phantom.kind = PhantomKind::PotentialOnly;
                else if (val == "mixed")
                    cfg.phantom.kind = PhantomKind::Mixed;
                else
                    throw ConfigError("unknown phantom kind: " + val);
            } else if (key == "order")
                cfg.order = parse_int(val, key);
            else if (key == "seed")
                cfg.phantom.seed = std::uint64_t(parse_num(val, key));
            else if (key == "amplitude")
                cfg.phantom.amplitude = parse_num(val, key);
            else if (key == "margin")
                cfg.phantom.margin = parse_num(val, key);
            else if (key == "n_bumps")
                cfg.phantom.n_bumps = parse_int(val, key);
            else if (key == "ker_k")
                cfg.phantom.ker_k = parse_int(val, key);
            else if (key == "ker_coefficients") {
                cfg.phantom.ker_coefficients.clear();
                for (double c : parse_list(val)) cfg.phantom.ker_coefficients.push_back(c);
            } else
                throw unknown();
        } else if (section == "attenuation") {
            if (key == "kind")
                cfg.atten_kind = val;
            else if (key == "amplitude")
                cfg.atten_amplitude = parse_num(val, key);
            else if (key == "width")
                cfg.atten_width = parse_num(val, key);
            else if (key == "center") {
                const auto c = parse_list(val);
                if (c.size() != 2) throw ConfigError("attenuation center needs two numbers");
                cfg.atten_cx = c[0];
                cfg.atten_cy = c[1];
            } else
                throw unknown();
        } else if (section == "pipeline") {
            if (key == "weight")
                cfg.weight = val;
            else if (key == "n_basis")
                cfg.n_basis = parse_int(val, key);
            else if (key == "ladder_depth")
                cfg.ladder_depth = parse_int(val, key);
            else if (key == "max_iter")
                cfg.max_iter = parse_int(val, key);
            else if (key == "tol")
                cfg.tol = parse_num(val, key);
            else if (key == "noise")
                cfg.noise = parse_num(val, key);
            else if (key == "moment_max")
                cfg.moment_max = parse_int(val, key);
            else
                throw unknown();
        } else if (section == "output") {
            if (key == "dir")
                cfg.out_dir = val;
            else if (key == "write_images")
                cfg.write_images = parse_bool(val, key);
            else if (key == "write_sinograms")
                cfg.write_sinograms = parse_bool(val, key);
            else
                throw unknown();
        }
    }

    if (cfg.grid_n < 16) throw ConfigError("grid_n must be at least 16");
    if (cfg.n_beta < 2 || cfg.n_alpha < 2) throw ConfigError("fan sizes must be >= 2");
    if (cfg.quad_steps < 8 || cfg.inv_quad_steps < 8)
        throw ConfigError("quadrature steps must be >= 8");
    if (cfg.order < 0 || cfg.order > 10) throw ConfigError("order must be in [0, 10]");
    if (cfg.tol <= 0.0) throw ConfigError("tol must be positive");
    if (cfg.noise < 0.0) throw ConfigError("noise must be >= 0");
    if (cfg.weight != "unit" && cfg.weight != "attenuated")
        throw ConfigError("pipeline weight must be unit or attenuated");
    if (cfg.atten_kind != "none" && cfg.atten_kind != "gaussian" && cfg.atten_kind != "constant")
        throw ConfigError("attenuation kind must be none, gaussian, or constant");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file)
{
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config file " + file.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

ConformalMetric RunConfig::make_metric() const
{
    switch (metric_kind) {
    case MetricKind::Euclidean:
        return ConformalMetric::euclidean();
    case MetricKind::ConstantCurvature:
        return ConformalMetric::constant_curvature(kappa);
    case MetricKind::RadialSoundSpeed:
        return ConformalMetric::radial_sound_speed(c_poly);
    case MetricKind::Custom:
        break;
    }
    throw ConfigError("custom metrics are not configurable from files");
}

Attenuation RunConfig::make_attenuation(const Grid& g) const
{
    if (atten_kind == "none" || atten_amplitude == 0.0) return Attenuation::none(g);
    Field a(g.size(), cdouble(0.0));
    if (atten_kind == "constant") {
        for (auto& v : a) v = atten_amplitude;
    } else {
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                const double dx = g.x(ix) - atten_cx, dy = g.y(iy) - atten_cy;
                a[g.idx(ix, iy)] =
                    atten_amplitude * std::exp(-0.5 * (dx * dx + dy * dy) / (atten_width * atten_width));
            }
    }
    return Attenuation::from_field(std::move(a));
}

std::string manifest_text(const RunConfig& cfg)
{
    std::ostringstream os;
    os << "# ttomo run manifest: a re-runnable config echo\n";
    os << "[metric]\n";
    os << "kind = "
       << (cfg.metric_kind == MetricKind::Euclidean
               ? "euclidean"
               : cfg.metric_kind == MetricKind::ConstantCurvature ? "constant_curvature"
                                                                  : "radial_sound_speed")
       << "\n";
    os << "kappa = " << fmt17(cfg.kappa) << "\n";
    os << "c_poly = ";
    for (std::size_t i = 0; i < cfg.c_poly.size(); ++i)
        os << (i ? ", " : "") << fmt17(cfg.c_poly[i]);
    os << "\n";
    os << "grid_n = " << cfg.grid_n << "\n\n";

    os << "[fan]\n";
    os << "n_beta = " << cfg.n_beta << "\n";
    os << "n_alpha = " << cfg.n_alpha << "\n";
    os << "quad_steps = " << cfg.quad_steps << "\n";
    os << "inv_quad_steps = " << cfg.inv_quad_steps << "\n\n";

    os << "[phantom]\n";
    os << "kind = "
       << (cfg.phantom.kind == PhantomKind::GaussianBumps
               ? "gaussian_bumps"
               : cfg.phantom.kind == PhantomKind::KerEtaElement
                     ? "ker_eta_element"
                     : cfg.phantom.kind == PhantomKind::PotentialOnly ? "potential_only" : "mixed")
       << "\n";
    os << "order = " << cfg.order << "\n";
    os << "seed = " << cfg.phantom.seed << "\n";
    os << "amplitude = " << fmt17(cfg.phantom.amplitude) << "\n";
    os << "margin = " << fmt17(cfg.phantom.margin) << "\n";
    os << "n_bumps = " << cfg.phantom.n_bumps << "\n";
    os << "ker_k = " << cfg.phantom.ker_k << "\n\n";

    os << "[attenuation]\n";
    os << "kind = " << cfg.atten_kind << "\n";
    os << "amplitude = " << fmt17(cfg.atten_amplitude) << "\n";
    os << "width = " << fmt17(cfg.atten_width) << "\n";
    os << "center = " << fmt17(cfg.atten_cx) << ", " << fmt17(cfg.atten_cy) << "\n\n";

    os << "[pipeline]\n";
    os << "weight = " << cfg.weight << "\n";
    os << "n_basis = " << cfg.n_basis << "\n";
    os << "ladder_depth = " << cfg.ladder_depth << "\n";
    os << "max_iter = " << cfg.max_iter << "\n";
    os << "tol = " << fmt17(cfg.tol) << "\n";
    os << "noise = " << fmt17(cfg.noise) << "\n";
    os << "moment_max = " << cfg.moment_max << "\n\n";

    os << "[output]\n";
    os << "dir = " << cfg.out_dir.string() << "\n";
    os << "write_images = " << (cfg.write_images ? "true" : "false") << "\n";
    os << "write_sinograms = " << (cfg.write_sinograms ? "true" : "false") << "\n";
    return os.str();
}

} // namespace ttomo
