#include "doctest.h"

#include <cstdlib>
#include <filesystem>

#include "achart/io.hpp"

using namespace achart;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("achart_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "achart");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kGrushin = R"(name: t
dim: 2
domain: {center: [0, 0], radius: 20}
fields:
  - ["1", "0"]
  - ["0", "x1"]
x0: [1, 0]
seed: 3
volume: {deltas: [0.25], samples: 4000, grid: 16}
flow: {controls: [0.5, 0.5]}
)";

}  // namespace

TEST_CASE("sha256 of known strings") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("grid files round-trip bit for bit") {
    GridGeometry g{{3, 4}, {0.5, 0.25}, {-1.0, 2.0}};
    GridField f(g, {2, 2});
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = std::sin(0.37 * static_cast<double>(i)) * 1e-3;
    f.boundary_margin = 1;
    const fs::path dir = scratch("grid");
    write_grid_with_sidecar(dir / "f.grid", f, {{"meaning", "test"}});
    const GridField r = read_grid(dir / "f.grid");
    CHECK(r.geom == f.geom);
    CHECK(r.rank == 2);
    CHECK(r.comp_shape == f.comp_shape);
    CHECK(r.boundary_margin == 1);
    CHECK(r.values == f.values);
    CHECK(fs::file_size(dir / "f.grid") == 8 + 8 + 2 * 8 * 3 + 8 + 8 + 2 * 8 + 8 + f.values.size() * 8);
    const Json side = Json::parse(read_text(dir / "f.grid.json"));
    CHECK(side["meaning"] == "test");
    CHECK(side["extents"] == Json::array({3, 4}));
    write_text(dir / "bad.grid", "not a grid");
    CHECK_THROWS(read_grid(dir / "bad.grid"));
}

TEST_CASE("config parsing and validation") {
    ExperimentConfig c = parse_config(kGrushin);
    CHECK(c.dim == 2);
    CHECK(c.fields.q() == 2);
    CHECK(c.x0 == std::vector<double>{1.0, 0.0});
    CHECK(c.seed == 3);
    CHECK(c.ball.seed == 3);
    CHECK(c.hash == sha256_hex(kGrushin));
    CHECK_THROWS_AS(parse_config(std::string(kGrushin) + "extra: 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dim: 2\nfields: [[\"1\"]]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dim: 2\nfields: [[\"1\", \"sin(\"]]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dim: 2\nfields: [[\"1\", \"0\"], [\"0\", \"1\"]]\nx0: [1]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dim: 2\nfields: [[\"1\", \"0\"], [\"0\", \"1\"]]\nchart: {s0: 0.5}\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dim: [\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dim: 2\nfields: [[\"1\", \"0\"]]\n"), ConfigError);  // q < n
}

TEST_CASE("driver exit codes and deterministic outputs") {
    const fs::path dir = scratch("cli");
    write_text(dir / "t.yaml", kGrushin);
    const std::string cfg = (dir / "t.yaml").string();
    CHECK(run({"volume", "-c", cfg, "-o", (dir / "a").string(), "--threads", "1"}) == 0);
    CHECK(run({"volume", "-c", cfg, "-o", (dir / "b").string(), "--threads", "2"}) == 0);
    CHECK(read_text(dir / "a" / "volume.json") == read_text(dir / "b" / "volume.json"));
    const Json m = Json::parse(read_text(dir / "a" / "volume_manifest.json"));
    CHECK(m["config_hash"] == sha256_hex(kGrushin));
    CHECK(m["seed"] == 3);
    CHECK(run({"volume", "-c", cfg, "-o", (dir / "c").string(), "--seed", "4"}) == 0);
    CHECK(read_text(dir / "a" / "volume.json") != read_text(dir / "c" / "volume.json"));

    CHECK(run({"flow", "-c", cfg, "-o", (dir / "f").string()}) == 0);
    CHECK(fs::exists(dir / "f" / "flow.csv"));
    CHECK(run({"distance", "-c", cfg, "-o", (dir / "d").string()}) == 1);  // no target
    CHECK(run({"flow", "-c", (dir / "missing.yaml").string()}) == 1);
    CHECK(run({"frobnicate"}) == 1);

    write_text(dir / "deg.yaml", "dim: 2\nfields: [[\"x1\", \"0\"], [\"0\", \"x1\"]]\nx0: [0, 0.3]\n");
    CHECK(run({"chart", "build", "-c", (dir / "deg.yaml").string(), "-o", (dir / "deg").string()}) == 2);

    CHECK(run({"norm", "-f", "abs(x1)^2.6", "-s", "1.6", "-o", (dir / "n").string()}) == 0);
    const Json n = Json::parse(read_text(dir / "n" / "norm.json"));
    CHECK(std::abs(n["layer_slope"].get<double>() - 1.6) < 0.15);
    CHECK(std::abs(n["fitted_exponent"].get<double>() - 2.6) < 0.15);
}

TEST_CASE("output root from the environment") {
    const fs::path dir = scratch("env");
    write_text(dir / "t.yaml", kGrushin);
    setenv("ACHART_OUT", (dir / "root").string().c_str(), 1);
    CHECK(run({"flow", "-c", (dir / "t.yaml").string(), "-o", "rel"}) == 0);
    unsetenv("ACHART_OUT");
    CHECK(fs::exists(dir / "root" / "rel" / "flow.json"));
}

TEST_CASE("chart bundle build and verify") {
    const fs::path dir = scratch("chart");
    write_text(dir / "t.yaml", std::string(kGrushin) + "chart: {half_cells: 8}\nverify: {norms: false, s: []}\n");
    const std::string out = (dir / "bundle").string();
    REQUIRE(run({"chart", "build", "-c", (dir / "t.yaml").string(), "-o", out}) == 0);
    for (const char* f : {"manifest.json", "chart.json", "phi.grid", "yhat.grid", "a_final.grid", "config.yaml"})
        CHECK(fs::exists(fs::path(out) / f));
    const GridField phi = read_grid(fs::path(out) / "phi.grid");
    CHECK(phi.comp_shape == std::vector<int>{2});
    REQUIRE(run({"chart", "verify", "--chart", out}) == 0);
    const Json v = Json::parse(read_text(fs::path(out) / "verify.json"));
    CHECK(v["bundle_phi_max_difference"] == 0.0);
    CHECK(v["items"].size() >= 9);
}
