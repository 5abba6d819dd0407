#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "achart/io.hpp"

namespace achart {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

namespace {

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& where, T fallback) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + "." + key + ": malformed value");
    }
}

std::vector<double> get_vec(const YAML::Node& node, const std::string& key, const std::string& where,
                            std::vector<double> fallback = {}) {
    return get<std::vector<double>>(node, key, where, std::move(fallback));
}

void require_dim(const std::vector<double>& v, int n, const std::string& what) {
    if (static_cast<int>(v.size()) != n)
        throw ConfigError(what + ": expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
}

void positive(double v, const std::string& what) {
    if (!(v > 0)) throw ConfigError(what + " must be positive");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    c.text = text;
    c.hash = sha256_hex(text);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("YAML: ") + e.what());
    }
    check_keys(root, "config",
               {"name", "dim", "domain", "fields", "x0", "seed", "threads", "tol", "output", "flow", "distance",
                "volume", "norm", "bracket", "chart", "verify", "density"});
    c.name = get<std::string>(root, "name", "config", c.name);
    c.dim = get<int>(root, "dim", "config", 0);
    if (c.dim < 1 || c.dim > 3) throw ConfigError("dim must be 1, 2 or 3");
    const int n = c.dim;
    c.seed = get<std::uint64_t>(root, "seed", "config", 1);
    c.threads = get<int>(root, "threads", "config", 0);
    c.tol = get<double>(root, "tol", "config", c.tol);
    positive(c.tol, "tol");
    c.output = get<std::string>(root, "output", "config", "");

    if (const YAML::Node d = root["domain"]) {
        check_keys(d, "domain", {"center", "radius"});
        c.domain.center = get_vec(d, "center", "domain", std::vector<double>(n, 0.0));
        c.domain.radius = get<double>(d, "radius", "domain", 10.0);
    } else {
        c.domain.center.assign(n, 0.0);
        c.domain.radius = 10.0;
    }
    require_dim(c.domain.center, n, "domain.center");
    positive(c.domain.radius, "domain.radius");

    const YAML::Node f = root["fields"];
    if (!f || !f.IsSequence() || f.size() == 0) throw ConfigError("fields: expected a non-empty list of coefficient rows");
    try {
        c.field_text = f.as<std::vector<std::vector<std::string>>>();
    } catch (const YAML::Exception&) {
        throw ConfigError("fields: each field is a list of expression strings");
    }
    for (const auto& row : c.field_text)
        if (static_cast<int>(row.size()) != n) throw ConfigError("fields: every field needs dim coefficients");
    try {
        c.fields = FieldSet::parse(n, c.field_text, c.domain);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("fields: ") + e.what());
    }
    c.x0 = get_vec(root, "x0", "config", std::vector<double>(n, 0.0));
    require_dim(c.x0, n, "x0");

    if (const YAML::Node s = root["flow"]) {
        check_keys(s, "flow", {"controls", "r_end"});
        c.flow_controls = get_vec(s, "controls", "flow");
        c.flow_r_end = get<double>(s, "r_end", "flow", 1.0);
        if (!c.flow_controls.empty() && static_cast<int>(c.flow_controls.size()) != c.fields.q())
            throw ConfigError("flow.controls: expected one control per field");
    }
    if (const YAML::Node s = root["distance"]) {
        check_keys(s, "distance", {"target", "nodes_per_axis", "levels", "margin", "stencil"});
        c.distance_target = get_vec(s, "target", "distance");
        if (!c.distance_target.empty()) require_dim(c.distance_target, n, "distance.target");
        c.distance.nodes_per_axis = get<int>(s, "nodes_per_axis", "distance", c.distance.nodes_per_axis);
        c.distance.levels = get<int>(s, "levels", "distance", c.distance.levels);
        c.distance.margin = get<double>(s, "margin", "distance", c.distance.margin);
        c.distance.stencil = get<int>(s, "stencil", "distance", c.distance.stencil);
    }
    if (const YAML::Node s = root["volume"]) {
        check_keys(s, "volume", {"deltas", "samples", "grid", "pieces"});
        c.volume_deltas = get_vec(s, "deltas", "volume");
        for (double d : c.volume_deltas) positive(d, "volume.deltas entries");
        c.ball.samples = get<std::size_t>(s, "samples", "volume", c.ball.samples);
        c.ball.grid = get<int>(s, "grid", "volume", c.ball.grid);
        c.ball.pieces = get<int>(s, "pieces", "volume", c.ball.pieces);
    }
    if (const YAML::Node s = root["norm"]) {
        check_keys(s, "norm", {"function", "s", "radius", "center", "k_min", "k_max", "lattice_cells"});
        c.norm_function = get<std::string>(s, "function", "norm", "");
        c.norm.s = get<double>(s, "s", "norm", c.norm.s);
        c.norm.radius = get<double>(s, "radius", "norm", c.norm.radius);
        c.norm.center = get_vec(s, "center", "norm", std::vector<double>(n, 0.0));
        require_dim(c.norm.center, n, "norm.center");
        c.norm.k_min = get<int>(s, "k_min", "norm", c.norm.k_min);
        c.norm.k_max = get<int>(s, "k_max", "norm", c.norm.k_max);
        c.norm.lattice_cells = get<int>(s, "lattice_cells", "norm", c.norm.lattice_cells);
        positive(c.norm.s, "norm.s");
        positive(c.norm.radius, "norm.radius");
    }
    if (const YAML::Node s = root["bracket"]) {
        check_keys(s, "bracket", {"radius", "cells", "mode"});
        c.bracket_radius = get<double>(s, "radius", "bracket", c.bracket_radius);
        c.bracket_cells = get<int>(s, "cells", "bracket", c.bracket_cells);
        const auto mode = get<std::string>(s, "mode", "bracket", "minimal");
        if (mode == "minimal") c.bracket_mode = CoeffMode::MinimalNorm;
        else if (mode == "frame") c.bracket_mode = CoeffMode::Frame;
        else throw ConfigError("bracket.mode must be 'minimal' or 'frame'");
    }
    if (const YAML::Node s = root["chart"]) {
        check_keys(s, "chart", {"radius", "min_radius", "zeta", "half_cells", "s0", "gamma2", "corrector_grid",
                                "corrector_tol", "D", "box_side"});
        auto& ch = c.chart;
        ch.chart0.radius = get<double>(s, "radius", "chart", ch.chart0.radius);
        ch.chart0.min_radius = get<double>(s, "min_radius", "chart", ch.chart0.min_radius);
        ch.chart0.zeta = get<double>(s, "zeta", "chart", ch.chart0.zeta);
        ch.half_cells = get<int>(s, "half_cells", "chart", ch.half_cells);
        ch.scale.s0 = get<double>(s, "s0", "chart", ch.scale.s0);
        ch.scale.gamma2 = get<double>(s, "gamma2", "chart", ch.scale.gamma2);
        ch.corrector.grid = get<int>(s, "corrector_grid", "chart", ch.corrector.grid);
        ch.corrector.tol = get<double>(s, "corrector_tol", "chart", ch.corrector.tol);
        ch.corrector.D = get<double>(s, "D", "chart", ch.corrector.D);
        ch.corrector.box_side = get<double>(s, "box_side", "chart", ch.corrector.box_side);
        positive(ch.chart0.radius, "chart.radius");
        if (!(ch.scale.s0 > 1)) throw ConfigError("chart.s0 must exceed 1");
        if (!(ch.chart0.zeta > 0 && ch.chart0.zeta <= 1)) throw ConfigError("chart.zeta must lie in (0, 1]");
    }
    if (const YAML::Node s = root["verify"]) {
        check_keys(s, "verify", {"s", "norms", "corpus", "xi_samples", "wedge_bound", "equivalence_bound",
                                 "injectivity_pairs"});
        auto& v = c.verify;
        v.s_list = get_vec(s, "s", "verify", v.s_list);
        v.norms = get<bool>(s, "norms", "verify", v.norms);
        v.corpus = get<std::vector<std::string>>(s, "corpus", "verify", v.corpus);
        v.xi_samples = get<int>(s, "xi_samples", "verify", v.xi_samples);
        v.wedge_bound = get<double>(s, "wedge_bound", "verify", v.wedge_bound);
        v.equivalence_bound = get<double>(s, "equivalence_bound", "verify", v.equivalence_bound);
        v.injectivity_pairs = get<int>(s, "injectivity_pairs", "verify", v.injectivity_pairs);
        for (const auto& t : v.corpus) {
            try {
                parse_field_expr(t, n);
            } catch (const ParseError& e) {
                throw ConfigError("verify.corpus: " + std::string(e.what()));
            }
        }
    }
    if (const YAML::Node s = root["density"]) {
        check_keys(s, "density", {"weight", "s"});
        c.weight = get<std::string>(s, "weight", "density", c.weight);
        c.density.s = get<double>(s, "s", "density", c.density.s);
        try {
            parse_field_expr(c.weight, n);
        } catch (const ParseError& e) {
            throw ConfigError("density.weight: " + std::string(e.what()));
        }
    }
    c.chart.chart0.tol = std::min(c.chart.chart0.tol, c.tol);
    c.verify.seed = c.seed;
    c.ball.seed = c.seed;
    c.norm.seed = c.seed;
    c.distance.tol = c.tol;
    c.ball.tol = std::max(c.tol, 1e-12);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

}  // namespace achart
