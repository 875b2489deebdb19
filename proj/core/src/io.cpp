#include "ttomo/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace ttomo {

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
void put(std::ofstream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IoError("unexpected end of file");
    return v;
}

void put_magic(std::ofstream& os, const char m[4]) { os.write(m, 4); }

void check_magic(std::ifstream& is, const char m[4], const char* what)
{
    char buf[4];
    is.read(buf, 4);
    if (!is || std::memcmp(buf, m, 4) != 0)
        throw IoError(std::string("bad magic for ") + what);
}

std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_field_binary(const std::filesystem::path& p, const FiberFunction& u,
                        std::uint64_t metric_hash)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open " + p.string());
    put_magic(os, "TTFF");
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, std::uint32_t(u.grid()->n()));
    put<std::int32_t>(os, std::int32_t(u.modes().size()));
    put<std::uint64_t>(os, metric_hash);
    for (const auto& [k, f] : u.modes()) {
        put<std::int32_t>(os, k);
        os.write(reinterpret_cast<const char*>(f.data()),
                 std::streamsize(f.size() * sizeof(cdouble)));
    }
}

FiberFunction read_field_binary(const std::filesystem::path& p, GridPtr grid,
                                std::uint64_t* metric_hash)
{
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot open " + p.string());
    check_magic(is, "TTFF", "field file");
    const auto version = get<std::uint32_t>(is);
    if (version != 1) throw IoError("unsupported field file version");
    const auto n = get<std::uint32_t>(is);
    if (int(n) != grid->n()) throw IoError("field file grid size mismatch");
    const auto n_modes = get<std::int32_t>(is);
    const auto hash = get<std::uint64_t>(is);
    if (metric_hash) *metric_hash = hash;
    FiberFunction u(std::move(grid));
    for (int i = 0; i < n_modes; ++i) {
        const auto k = get<std::int32_t>(is);
        Field f(std::size_t(n) * n);
        is.read(reinterpret_cast<char*>(f.data()), std::streamsize(f.size() * sizeof(cdouble)));
        if (!is) throw IoError("unexpected end of field file");
        u.set_mode(k, std::move(f));
    }
    return u;
}

void write_field_text(const std::filesystem::path& p, const FiberFunction& u)
{
    std::ofstream os(p);
    if (!os) throw IoError("cannot open " + p.string());
    os << "# x y k re im\n";
    const Grid& g = *u.grid();
    for (const auto& [k, f] : u.modes())
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                const cdouble v = f[g.idx(ix, iy)];
                os << fmt17(g.x(ix)) << ' ' << fmt17(g.y(iy)) << ' ' << k << ' '
                   << fmt17(v.real()) << ' ' << fmt17(v.imag()) << '\n';
            }
}

void write_sinogram_text(const std::filesystem::path& p, const BoundaryData& d)
{
    std::ofstream os(p);
    if (!os) throw IoError("cannot open " + p.string());
    os << "# beta alpha re im tag\n";
    const BoundaryFan& f = d.fan();
    for (int ib = 0; ib < f.n_beta(); ++ib)
        for (int ia = 0; ia < f.n_alpha(); ++ia) {
            const cdouble v = d.at(ib, ia);
            os << fmt17(f.beta(ib)) << ' ' << fmt17(f.alpha(ia)) << ' ' << fmt17(v.real()) << ' '
               << fmt17(v.imag()) << ' ' << d.tag().kind << ':' << d.tag().index << '\n';
        }
}

void write_sinogram_binary(const std::filesystem::path& p, const BoundaryData& d)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open " + p.string());
    put_magic(os, "TTSG");
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, std::uint32_t(d.fan().n_beta()));
    put<std::uint32_t>(os, std::uint32_t(d.fan().n_alpha()));
    put<std::int32_t>(os, d.tag().index);
    std::uint32_t klen = std::uint32_t(d.tag().kind.size());
    put(os, klen);
    os.write(d.tag().kind.data(), klen);
    os.write(reinterpret_cast<const char*>(d.values().data()),
             std::streamsize(d.values().size() * sizeof(cdouble)));
}

BoundaryData read_sinogram_binary(const std::filesystem::path& p, FanPtr fan)
{
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot open " + p.string());
    check_magic(is, "TTSG", "sinogram");
    if (get<std::uint32_t>(is) != 1) throw IoError("unsupported sinogram version");
    const auto nb = get<std::uint32_t>(is);
    const auto na = get<std::uint32_t>(is);
    if (int(nb) != fan->n_beta() || int(na) != fan->n_alpha())
        throw IoError("sinogram fan shape mismatch");
    TransformTag tag;
    tag.index = get<std::int32_t>(is);
    const auto klen = get<std::uint32_t>(is);
    tag.kind.resize(klen);
    is.read(tag.kind.data(), klen);
    BoundaryData d(std::move(fan), tag);
    is.read(reinterpret_cast<char*>(d.values().data()),
            std::streamsize(d.values().size() * sizeof(cdouble)));
    if (!is) throw IoError("unexpected end of sinogram file");
    return d;
}

void write_tensor(const std::filesystem::path& dir, const std::string& stem,
                  const SymmetricTensorField& f)
{
    std::filesystem::create_directories(dir);
    const Surface& s = *f.surface();
    std::ofstream man(dir / (stem + "_manifest.txt"));
    if (!man) throw IoError("cannot open tensor manifest");
    man << "order " << f.order() << "\n";
    man << "grid_n " << s.grid().n() << "\n";
    man << "metric_hash " << s.hash() << "\n";
    for (int q = 0; q <= f.order(); ++q) {
        const std::string name = stem + "_q" + std::to_string(q) + ".bin";
        FiberFunction tmp(s.grid_ptr());
        tmp.set_mode(0, f.component(q));
        write_field_binary(dir / name, tmp, s.hash());
        man << "component " << q << " " << name << "\n";
    }
}

SymmetricTensorField read_tensor(const std::filesystem::path& manifest, const SurfacePtr& s)
{
    std::ifstream is(manifest);
    if (!is) throw IoError("cannot open " + manifest.string());
    int order = -1;
    int grid_n = 0;
    std::uint64_t hash = 0;
    std::vector<std::pair<int, std::string>> comps;
    std::string key;
    while (is >> key) {
        if (key == "order")
            is >> order;
        else if (key == "grid_n")
            is >> grid_n;
        else if (key == "metric_hash")
            is >> hash;
        else if (key == "component") {
            int q;
            std::string name;
            is >> q >> name;
            comps.emplace_back(q, name);
        } else {
            throw IoError("unknown manifest key: " + key);
        }
    }
    if (order < 0 || grid_n != s->grid().n())
        throw IoError("tensor manifest does not match the surface");
    SymmetricTensorField f(s, order);
    const auto dir = manifest.parent_path();
    for (const auto& [q, name] : comps) {
        FiberFunction tmp = read_field_binary(dir / name, s->grid_ptr());
        f.component(q) = tmp.mode(0);
    }
    return f;
}

void write_pgm(const std::filesystem::path& p, const Grid& g, const Field& f, bool imaginary)
{
    double lo = 1e300, hi = -1e300;
    for (const auto& v : f) {
        const double x = imaginary ? v.imag() : v.real();
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi <= lo) hi = lo + 1.0;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open " + p.string());
    os << "P5\n# range " << fmt17(lo) << " " << fmt17(hi) << "\n" << g.n() << " " << g.n()
       << "\n255\n";
    for (int iy = g.n() - 1; iy >= 0; --iy)
        for (int ix = 0; ix < g.n(); ++ix) {
            const cdouble v = f[g.idx(ix, iy)];
            const double x = imaginary ? v.imag() : v.real();
            const int pix = int(255.0 * (x - lo) / (hi - lo) + 0.5);
            os.put(char(std::min(255, std::max(0, pix))));
        }
}

} // namespace ttomo
