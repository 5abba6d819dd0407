#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "achart/flows.hpp"
#include "achart/io.hpp"
#include "achart/parallel.hpp"

namespace achart {

namespace {

namespace fs = std::filesystem;

/// A numerical stage failed; exit code 2.
struct StageFailure : std::runtime_error {
    std::string stage;
    StageFailure(std::string s, const std::string& what) : std::runtime_error(what), stage(std::move(s)) {}
};

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> grid;
    std::optional<double> tol;
};

void add_common(CLI::App* app, CommonFlags& f, bool config_required) {
    auto* c = app->add_option("-c,--config", f.config, "YAML experiment config");
    if (config_required) c->required();
    app->add_option("-o,--out", f.out, "output directory");
    app->add_option("--seed", f.seed, "random seed override");
    app->add_option("--threads", f.threads, "worker threads (default: all cores)");
    app->add_option("--grid", f.grid, "main grid resolution of the command");
    app->add_option("--tol", f.tol, "flow tolerance override");
}

Json overrides_json(const CommonFlags& f) {
    Json j = Json::object();
    if (f.seed) j["seed"] = *f.seed;
    if (f.grid) j["grid"] = *f.grid;
    if (f.tol) j["tol"] = *f.tol;
    return j;
}

/// Applies flag overrides and the thread count; --grid is applied per command.
void apply_common(ExperimentConfig& c, const CommonFlags& f) {
    if (f.seed) {
        c.seed = *f.seed;
        c.verify.seed = c.ball.seed = c.norm.seed = c.seed;
    }
    if (f.tol) {
        if (!(*f.tol > 0)) throw ConfigError("--tol must be positive");
        c.tol = *f.tol;
        c.distance.tol = c.tol;
        c.ball.tol = c.tol;
        c.chart.chart0.tol = c.tol;
    }
    if (f.grid && *f.grid < 2) throw ConfigError("--grid must be at least 2");
    set_thread_count(f.threads ? *f.threads : c.threads);
}

/// -o wins, then the config's output entry, then out/<name>. Relative paths resolve against $ACHART_OUT when set.
fs::path output_dir(const CommonFlags& f, const ExperimentConfig& c, const std::string& fallback) {
    fs::path p = !f.out.empty() ? fs::path(f.out) : !c.output.empty() ? fs::path(c.output) : fs::path("out") / fallback;
    if (p.is_relative())
        if (const char* root = std::getenv("ACHART_OUT"); root && *root) p = fs::path(root) / p;
    fs::create_directories(p);
    return p;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

AdaptedChart build_chart_or_fail(const ExperimentConfig& c) {
    try {
        return build_full_chart(c.fields, c.x0, c.chart);
    } catch (const ChartError& e) {
        throw StageFailure(e.stage(), e.what());
    }
}

// ---- subcommands ----

void cmd_bracket(ExperimentConfig& c, const CommonFlags& f) {
    if (f.grid) c.bracket_cells = *f.grid;
    const fs::path dir = output_dir(f, c, c.name);
    const int n = c.dim, q = c.fields.q();
    BracketTable table(c.fields);
    Json j;
    Json br = Json::array();
    for (int a = 0; a < q; ++a)
        for (int b = a + 1; b < q; ++b) {
            Json comp = Json::array();
            for (const auto& e : table.brackets[a * q + b]) comp.push_back(e.str());
            br.push_back({{"i", a}, {"j", b}, {"field", comp}});
        }
    j["brackets"] = br;
    j["weak"] = table.weak;
    std::vector<double> cc(q * q * q);
    double res = 0;
    const bool ok = commutator_coeffs_at(c.fields, table, c.x0.data(), CoeffMode::MinimalNorm, {}, cc.data(), &res);
    j["x0"] = c.x0;
    j["x0_ok"] = ok;
    j["x0_coeffs"] = cc;
    j["x0_residual"] = res;
    CommutatorTensor t;
    try {
        t = commutator_coeffs(c.fields, GridGeometry::cell_centred(c.x0, c.bracket_radius, c.bracket_cells),
                              c.bracket_mode);
    } catch (const NotSpanning& e) {
        throw StageFailure("frame", e.what());
    }
    j["grid_residual"] = t.residual;
    j["grid_failed"] = t.failed;
    j["frame"] = t.frame;
    write_json(dir / "bracket.json", j);
    std::ostringstream csv;
    for (int k = 0; k < n; ++k) csv << "x" << k + 1 << ",";
    csv << "ok";
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
            for (int k = 0; k < q; ++k) csv << ",c_" << a << "_" << b << "_" << k;
    csv << "\n";
    for (std::size_t p = 0; p < t.geom.size(); ++p) {
        for (double x : t.geom.point(p)) csv << fmt(x) << ",";
        csv << int(t.ok[p]);
        for (int i = 0; i < q * q * q; ++i) csv << "," << fmt(t.c[p * q * q * q + i]);
        csv << "\n";
    }
    write_text(dir / "bracket_grid.csv", csv.str());
    write_manifest(dir, "bracket", c, overrides_json(f), {"bracket.json", "bracket_grid.csv"});
}

void cmd_flow(ExperimentConfig& c, const CommonFlags& f) {
    if (c.flow_controls.empty()) throw ConfigError("flow.controls is required for the flow command");
    const fs::path dir = output_dir(f, c, c.name);
    FlowOptions opt;
    opt.tol = c.tol;
    const FlowTrace t = exp_map(c.fields, c.flow_controls, c.x0, c.domain, opt, c.flow_r_end);
    write_json(dir / "flow.json", to_json(t));
    std::ostringstream csv;
    csv << "r";
    for (int k = 0; k < c.dim; ++k) csv << ",x" << k + 1;
    csv << "\n";
    for (std::size_t i = 0; i < t.points.size(); ++i) {
        csv << fmt(t.r[i]);
        for (double x : t.points[i]) csv << "," << fmt(x);
        csv << "\n";
    }
    write_text(dir / "flow.csv", csv.str());
    write_manifest(dir, "flow", c, overrides_json(f), {"flow.json", "flow.csv"});
    if (!t.ok()) throw StageFailure("flow", t.reason.empty() ? "flow left the domain" : t.reason);
}

void cmd_distance(ExperimentConfig& c, const CommonFlags& f) {
    if (c.distance_target.empty()) throw ConfigError("distance.target is required for the distance command");
    if (f.grid) c.distance.nodes_per_axis = *f.grid;
    const fs::path dir = output_dir(f, c, c.name);
    const DistanceResult d = cc_distance(c.fields, c.x0, c.distance_target, c.distance);
    Json j = to_json(d);
    j["x"] = c.x0;
    j["y"] = c.distance_target;
    write_json(dir / "distance.json", j);
    write_manifest(dir, "distance", c, overrides_json(f), {"distance.json"});
}

void cmd_volume(ExperimentConfig& c, const CommonFlags& f) {
    if (c.volume_deltas.empty()) throw ConfigError("volume.deltas is required for the volume command");
    if (f.grid) c.ball.grid = *f.grid;
    const fs::path dir = output_dir(f, c, c.name);
    Json arr = Json::array();
    std::ostringstream csv;
    csv << "delta,volume,hit_cells,hit_fraction,wilson_lo,wilson_hi,failed\n";
    for (double d : c.volume_deltas) {
        const BallEstimate b = cc_ball_volume(c.fields, c.x0, d, c.ball);
        arr.push_back(to_json(b));
        csv << fmt(d) << "," << fmt(b.volume) << "," << b.hit_cells << "," << fmt(b.hit_fraction) << ","
            << fmt(b.wilson_lo) << "," << fmt(b.wilson_hi) << "," << b.failed << "\n";
    }
    write_json(dir / "volume.json", {{"balls", arr}});
    write_text(dir / "volume.csv", csv.str());
    write_manifest(dir, "volume", c, overrides_json(f), {"volume.json", "volume.csv"});
}

void write_norm(const fs::path& dir, const std::string& function, int n, const ZygmundConfig& z) {
    const FieldExpr e = parse_field_expr(function, n);
    ZygmundReport r;
    try {
        r = zygmund_norm(e, n, z);
    } catch (const std::invalid_argument& ex) {
        throw StageFailure("norm", ex.what());
    }
    Json j = to_json(r);
    j["function"] = function;
    j["dim"] = n;
    j["radius"] = z.radius;
    write_json(dir / "norm.json", j);
    std::ostringstream csv;
    csv << "h,seminorm,top_sup,used_in_fit\n";
    for (const auto& s : r.per_scale)
        csv << fmt(s.h) << "," << fmt(s.seminorm) << "," << fmt(s.top_sup) << "," << int(s.used_in_fit) << "\n";
    write_text(dir / "norm_scales.csv", csv.str());
}

void cmd_chart_build(ExperimentConfig& c, const CommonFlags& f) {
    if (f.grid) c.chart.corrector.grid = *f.grid;
    const fs::path dir = output_dir(f, c, c.name);
    const AdaptedChart ch = build_chart_or_fail(c);
    write_chart_bundle(dir, ch, c);
    write_manifest(dir, "chart build", c, overrides_json(f),
                   {"config.yaml", "chart.json", "phi.grid", "phi.grid.json", "yhat.grid", "yhat.grid.json", "a_final.grid",
                    "a_final.grid.json", "b_hat.grid", "b_hat.grid.json", "a_gamma.grid", "a_gamma.grid.json",
                    "corrector_r.grid", "corrector_r.grid.json"});
    std::cout << "chart " << c.name << ": J0 = [";
    for (std::size_t i = 0; i < ch.chart0.J0.size(); ++i) std::cout << (i ? ", " : "") << ch.chart0.J0[i];
    std::cout << "], eta1 = " << ch.chart0.eta1 << ", gamma = " << ch.gamma << ", K = " << ch.K
              << ", sup|A| = " << ch.a_final_sup << ", corrector iterations = " << ch.corrector.iterations << "\n"
              << "bundle: " << dir.string() << "\n";
}

void cmd_chart_verify(ExperimentConfig& c, const CommonFlags& f, const fs::path& bundle) {
    if (f.grid) c.chart.corrector.grid = *f.grid;
    const fs::path dir = !f.out.empty() || bundle.empty() ? output_dir(f, c, c.name) : bundle;
    AdaptedChart ch = build_chart_or_fail(c);
    Json extra = Json::object();
    if (!bundle.empty() && fs::exists(bundle / "phi.grid")) {
        // The rebuilt chart must reproduce the stored samples.
        const GridField stored = read_grid(bundle / "phi.grid");
        double diff = stored.values.size() == ch.phi.values.size() ? 0.0 : INFINITY;
        for (std::size_t i = 0; std::isfinite(diff) && i < stored.values.size(); ++i)
            diff = std::max(diff, std::abs(stored.values[i] - ch.phi.values[i]));
        extra["bundle_phi_max_difference"] = std::isfinite(diff) ? Json(diff) : Json(nullptr);
    }
    const VerificationReport rep = verify_theorem(ch, c.verify);
    Json j = to_json(rep);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    j["chart"] = to_json(ch);
    write_json(dir / "verify.json", j);
    std::ostringstream csv;
    csv << "s,field,norm,exponent,required,resolved_smooth\n";
    for (const auto& e : rep.exponents)
        csv << fmt(e.s) << "," << e.field << "," << fmt(e.norm) << "," << fmt(e.exponent) << "," << fmt(e.required)
            << "," << int(e.resolved_smooth) << "\n";
    write_text(dir / "exponents.csv", csv.str());
    write_manifest(dir, "chart verify", c, overrides_json(f), {"verify.json", "exponents.csv"});
    for (const auto& it : rep.items)
        std::cout << "(" << it.id << ") " << (it.pass ? "PASS" : "FAIL") << "  " << it.description << "  value "
                  << it.value << "\n";
}

void cmd_density(ExperimentConfig& c, const CommonFlags& f) {
    if (f.grid) c.chart.corrector.grid = *f.grid;
    const fs::path dir = output_dir(f, c, c.name);
    AdaptedChart ch = build_chart_or_fail(c);
    VerifyConfig vc = c.verify;
    vc.norms = false;
    vc.s_list.clear();
    verify_theorem(ch, vc);
    const FieldExpr w = parse_field_expr(c.weight, c.dim);
    const DensityReport r = pullback_density(ch, w, c.density);
    Json j = to_json(r);
    j["weight"] = c.weight;
    j["K"] = ch.K;
    write_json(dir / "density.json", j);
    write_grid_with_sidecar(dir / "h.grid", r.h, {{"meaning", "pullback density w(Phi) |det dPhi|"}});
    write_grid_with_sidecar(dir / "h0.grid", r.h0, {{"meaning", "1 / det(K (I + A_final))"}});
    write_grid_with_sidecar(dir / "g_ratio.grid", r.g_ratio, {{"meaning", "h / h0"}});
    if (ch.radii.xi2 > 0) {
        const VolumeTable t = volume_compare(ch, w, c.ball);
        write_json(dir / "volume_table.json", to_json(t));
    } else {
        throw StageFailure("radii", "no radius xi2 found; volume comparison skipped");
    }
    write_manifest(dir, "density", c, overrides_json(f),
                   {"density.json", "volume_table.json", "h.grid", "h.grid.json", "h0.grid", "h0.grid.json", "g_ratio.grid",
                    "g_ratio.grid.json"});
}

int fail(int code, const std::string& stage, const std::string& msg) {
    std::cerr << "achart: " << (stage.empty() ? "" : "[" + stage + "] ") << msg << "\n";
    return code;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Adapted coordinate charts for families of vector fields"};
    app.require_subcommand(1);
    CommonFlags flags;
    std::string chart_dir, norm_function;
    double norm_s = 1.0, norm_radius = 1.0;
    int norm_dim = 0;

    auto* bracket = app.add_subcommand("bracket", "commutator tensor of the fields");
    auto* flow = app.add_subcommand("flow", "integral curve of the constant controls from x0");
    auto* distance = app.add_subcommand("distance", "control distance from x0 to the target");
    auto* volume = app.add_subcommand("volume", "Monte Carlo control-ball volumes at x0");
    auto* norm = app.add_subcommand("norm", "Zygmund norm report of a function");
    auto* chart = app.add_subcommand("chart", "adapted chart construction and verification");
    chart->require_subcommand(1);
    auto* build = chart->add_subcommand("build", "build a chart bundle");
    auto* verify = chart->add_subcommand("verify", "verify the chart properties");
    auto* density = app.add_subcommand("density", "density pullback and volume comparison");
    for (auto* s : {bracket, flow, distance, volume, build, density}) add_common(s, flags, true);
    add_common(norm, flags, false);
    add_common(verify, flags, false);
    norm->add_option("-f,--function", norm_function, "expression in x1..xn");
    norm->add_option("-s", norm_s, "Zygmund order");
    norm->add_option("--dim", norm_dim, "dimension (default: highest variable used)");
    norm->add_option("--radius", norm_radius, "ball radius about the origin");
    verify->add_option("--chart", chart_dir, "chart bundle directory from 'chart build'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*norm && flags.config.empty()) {
            if (norm_function.empty()) throw ConfigError("norm needs -f or a config with a norm section");
            const int n = norm_dim > 0 ? norm_dim : std::max(1, parse_field_expr(norm_function, 3).arity());
            std::ostringstream text;
            text << "norm -f " << norm_function << " -s " << fmt(norm_s) << " --dim " << n << " --radius " << fmt(norm_radius);
            ExperimentConfig c;
            c.name = "norm";
            c.text = text.str();
            c.hash = sha256_hex(c.text);
            c.norm.s = norm_s;
            c.norm.radius = norm_radius;
            c.norm.center.assign(n, 0.0);
            if (flags.grid) c.norm.lattice_cells = *flags.grid;
            apply_common(c, flags);
            const fs::path dir = output_dir(flags, c, "norm");
            write_norm(dir, norm_function, n, c.norm);
            write_manifest(dir, "norm", c, overrides_json(flags), {"norm.json", "norm_scales.csv"});
            std::cout << read_text(dir / "norm.json");
            return 0;
        }
        fs::path bundle;
        if (*verify && flags.config.empty()) {
            if (chart_dir.empty()) throw ConfigError("chart verify needs --chart or -c");
            bundle = chart_dir;
            if (const char* root = std::getenv("ACHART_OUT"); root && *root && bundle.is_relative() && !fs::exists(bundle))
                bundle = fs::path(root) / bundle;
            if (!fs::exists(bundle / "config.yaml")) throw std::runtime_error("no chart bundle at " + bundle.string());
            flags.config = (bundle / "config.yaml").string();
        }
        ExperimentConfig c = load_config(flags.config);
        apply_common(c, flags);
        if (*bracket) cmd_bracket(c, flags);
        else if (*flow) cmd_flow(c, flags);
        else if (*distance) cmd_distance(c, flags);
        else if (*volume) cmd_volume(c, flags);
        else if (*norm) {
            if (!norm_function.empty()) c.norm_function = norm_function;
            if (c.norm_function.empty()) throw ConfigError("norm.function is required");
            if (flags.grid) c.norm.lattice_cells = *flags.grid;
            if (c.norm.center.empty()) c.norm.center.assign(c.dim, 0.0);
            const fs::path dir = output_dir(flags, c, c.name);
            write_norm(dir, c.norm_function, c.dim, c.norm);
            write_manifest(dir, "norm", c, overrides_json(flags), {"norm.json", "norm_scales.csv"});
        } else if (*build) cmd_chart_build(c, flags);
        else if (*verify) cmd_chart_verify(c, flags, bundle);
        else if (*density) cmd_density(c, flags);
        return 0;
    } catch (const ConfigError& e) {
        return fail(1, "config", e.what());
    } catch (const ParseError& e) {
        return fail(1, "config", e.what());
    } catch (const StageFailure& e) {
        return fail(2, e.stage, e.what());
    } catch (const ChartError& e) {
        return fail(2, e.stage(), e.what());
    } catch (const FlowError& e) {
        return fail(2, "flow", e.what());
    } catch (const NotSpanning& e) {
        return fail(2, "frame", e.what());
    } catch (const std::exception& e) {
        return fail(1, "io", e.what());
    }
}

}  // namespace achart
