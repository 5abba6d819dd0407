#pragma once
// Grid files, experiment configs, chart bundles and the command-line driver.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "achart/adapted.hpp"
#include "achart/ball.hpp"
#include "achart/densities.hpp"
#include "achart/distance.hpp"
#include "achart/zygmund.hpp"
#include "json.hpp"

namespace achart {

using Json = nlohmann::ordered_json;

// ---- grid files ----

/// Little-endian binary: magic "ACGRID01", int64 n, int64 extents[n], f64 spacing[n], f64 origin[n],
/// int64 rank, int64 ncomp_shape, int64 shape[...], int64 boundary_margin, then f64 values
/// (component-major, row-major points).
void write_grid(const std::filesystem::path& path, const GridField& f);
GridField read_grid(const std::filesystem::path& path);
/// Header as JSON, written next to the binary as <path>.json by write_grid_with_sidecar.
Json grid_header(const GridField& f);
void write_grid_with_sidecar(const std::filesystem::path& path, const GridField& f, const Json& extra = Json::object());

// ---- config ----

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& bytes);

struct ExperimentConfig {
    std::string name = "experiment";
    std::string hash;  // SHA-256 of the config text
    std::string text;

    int dim = 0;
    Domain domain;
    std::vector<std::vector<std::string>> field_text;
    FieldSet fields;
    std::vector<double> x0;
    std::uint64_t seed = 1;
    int threads = 0;
    double tol = 1e-10;  // flow tolerance for every stage
    std::string output;

    std::vector<double> flow_controls;
    double flow_r_end = 1.0;

    std::vector<double> distance_target;
    DistanceConfig distance;

    std::vector<double> volume_deltas;
    BallConfig ball;

    std::string norm_function;
    ZygmundConfig norm;

    double bracket_radius = 1.0;
    int bracket_cells = 8;
    CoeffMode bracket_mode = CoeffMode::MinimalNorm;

    ChartConfig chart;
    VerifyConfig verify;

    std::string weight = "1";
    DensityConfig density;
};

/// Parses YAML text. Unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---- reports ----

Json to_json(const ZygmundReport& r);
Json to_json(const FlowTrace& t);
Json to_json(const DistanceResult& d);
Json to_json(const BallEstimate& b);
Json to_json(const AdaptedChart& c);
Json to_json(const VerificationReport& r);
Json to_json(const DensityReport& r);
Json to_json(const VolumeTable& t);

/// Writes JSON with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---- chart bundles ----

/// Writes chart.json, the sample grids and config.yaml into dir.
void write_chart_bundle(const std::filesystem::path& dir, const AdaptedChart& chart, const ExperimentConfig& cfg);

/// Writes the manifest of one command run: config hash, seed, overrides and the SHA-256 of each listed file.
/// `chart build` writes manifest.json; other commands write <command>_manifest.json.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const Json& overrides, const std::vector<std::string>& files);

// ---- driver ----

/// Runs the command line. Exit codes: 0 success, 1 config, usage or I/O error, 2 numerical stage failure.
int run_cli(int argc, char** argv);

}  // namespace achart
