#include <bit>
#include <cstring>
#include <fstream>

#include "achart/io.hpp"

namespace achart {

namespace {

static_assert(std::endian::native == std::endian::little, "grid files assume a little-endian host");

constexpr char kMagic[8] = {'A', 'C', 'G', 'R', 'I', 'D', '0', '1'};

void put_i64(std::ofstream& os, std::int64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_f64(std::ofstream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::int64_t get_i64(std::ifstream& is) {
    std::int64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated grid file");
    return v;
}
double get_f64(std::ifstream& is) {
    double v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated grid file");
    return v;
}

}  // namespace

void write_grid(const std::filesystem::path& path, const GridField& f) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os.write(kMagic, sizeof kMagic);
    const int n = f.geom.dim();
    put_i64(os, n);
    for (int e : f.geom.extents) put_i64(os, e);
    for (double h : f.geom.spacing) put_f64(os, h);
    for (double o : f.geom.origin) put_f64(os, o);
    put_i64(os, f.rank);
    put_i64(os, static_cast<std::int64_t>(f.comp_shape.size()));
    for (int s : f.comp_shape) put_i64(os, s);
    put_i64(os, f.boundary_margin);
    os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

GridField read_grid(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("not a grid file: " + path.string());
    GridGeometry g;
    const auto n = get_i64(is);
    if (n < 1 || n > 8) throw std::runtime_error("bad grid dimension in " + path.string());
    for (int d = 0; d < n; ++d) g.extents.push_back(static_cast<int>(get_i64(is)));
    for (int d = 0; d < n; ++d) g.spacing.push_back(get_f64(is));
    for (int d = 0; d < n; ++d) g.origin.push_back(get_f64(is));
    const auto rank = get_i64(is);
    std::vector<int> shape(static_cast<std::size_t>(get_i64(is)));
    for (int& s : shape) s = static_cast<int>(get_i64(is));
    GridField f(g, shape);
    f.rank = static_cast<int>(rank);
    f.boundary_margin = static_cast<int>(get_i64(is));
    if (!is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double))))
        throw std::runtime_error("truncated grid file " + path.string());
    return f;
}

Json grid_header(const GridField& f) {
    Json j;
    j["format"] = "ACGRID01 little-endian float64, component-major, row-major points";
    j["n"] = f.geom.dim();
    j["extents"] = f.geom.extents;
    j["spacing"] = f.geom.spacing;
    j["origin"] = f.geom.origin;
    j["rank"] = f.rank;
    j["component_shape"] = f.comp_shape;
    j["boundary_margin"] = f.boundary_margin;
    return j;
}

void write_grid_with_sidecar(const std::filesystem::path& path, const GridField& f, const Json& extra) {
    write_grid(path, f);
    Json j = grid_header(f);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_json(path.string() + ".json", j);
}

}  // namespace achart
