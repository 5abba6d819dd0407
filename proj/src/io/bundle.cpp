#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "achart/io.hpp"

namespace achart {

namespace {

// JSON has no infinity or NaN; those become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json nums(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json to_json(const ZygmundReport& r) {
    Json j;
    j["s"] = r.s;
    j["m"] = r.m;
    j["sigma"] = r.sigma;
    j["norm"] = num(r.norm);
    j["sup_term"] = num(r.sup_term);
    j["holder_half_term"] = num(r.holder_half_term);
    j["second_diff_term"] = num(r.second_diff_term);
    j["fitted_exponent"] = num(r.fitted_exponent);
    j["layer_slope"] = num(r.fitted_exponent - r.m);
    j["resolved_smooth"] = r.resolved_smooth;
    j["scales_used"] = r.scales_used;
    j["noise_floor"] = num(r.noise_floor);
    j["holder_pairs"] = r.holder_pairs;
    Json scales = Json::array();
    for (const auto& e : r.per_scale)
        scales.push_back({{"h", e.h}, {"seminorm", num(e.seminorm)}, {"top_sup", num(e.top_sup)}, {"used_in_fit", e.used_in_fit}});
    j["per_scale"] = scales;
    return j;
}

Json to_json(const FlowTrace& t) {
    Json j;
    j["x0"] = t.x0;
    j["controls"] = t.controls;
    j["end"] = nums(t.end);
    j["r_reached"] = t.r_reached;
    j["exited"] = t.exited;
    j["failed"] = t.failed;
    j["reason"] = t.reason;
    j["steps"] = t.step_count;
    j["error_estimate"] = num(t.error_estimate);
    return j;
}

Json to_json(const DistanceResult& d) {
    Json j;
    j["value"] = num(d.value);
    j["disconnected"] = d.disconnected;
    j["level_values"] = nums(d.level_values);
    j["refinement_gap"] = num(d.refinement_gap);
    j["dyadic_lo"] = num(d.dyadic_lo);
    j["dyadic_hi"] = num(d.dyadic_hi);
    j["edges"] = d.edges;
    j["note"] = d.note;
    return j;
}

Json to_json(const BallEstimate& b) {
    Json j;
    j["center"] = b.center;
    j["delta"] = b.delta;
    j["method"] = b.method;
    j["volume"] = b.volume;
    j["hit_cells"] = b.hit_cells;
    j["cell_volume"] = b.cell_volume;
    j["samples"] = b.samples;
    j["in_window"] = b.in_window;
    j["failed"] = b.failed;
    j["hit_fraction"] = b.hit_fraction;
    j["wilson"] = {b.wilson_lo, b.wilson_hi};
    j["pieces"] = b.pieces;
    j["degenerate"] = b.degenerate;
    j["window_origin"] = b.window.origin;
    j["window_spacing"] = b.window.spacing;
    j["window_extents"] = b.window.extents;
    return j;
}

Json to_json(const AdaptedChart& c) {
    Json j;
    j["x0"] = c.chart0.x0;
    j["J0"] = c.chart0.J0;
    j["eta1"] = c.chart0.eta1;
    j["radius_trace"] = c.chart0.radius_trace;
    j["a_sup_eta1"] = num(c.chart0.a_sup);
    j["gamma"] = c.gamma;
    j["gamma_max"] = c.scaled.gamma_max;
    j["K"] = c.K;
    j["a_gamma_norm"] = num(c.scaled.a_norm);
    j["a_norm_eta1"] = num(c.scaled.a_norm_eta1);
    j["scaling_bound"] = num(c.scaled.scaling_bound);
    j["scaling_ok"] = c.scaled.scaling_ok;
    Json trace = Json::array();
    for (const auto& [g, nrm] : c.scaled.trace) trace.push_back({{"gamma", g}, {"norm", num(nrm)}});
    j["gamma_trace"] = trace;
    const CorrectorSolution& s = c.corrector;
    j["corrector"] = {{"converged", s.converged},
                      {"iterations", s.iterations},
                      {"residual_history", nums(s.residual_history)},
                      {"residual_psi", num(s.residual_psi)},
                      {"div_residual", num(s.div_residual)},
                      {"div_assembled", num(s.div_assembled)},
                      {"det_dH_min", num(s.det_dH_min)},
                      {"ahat_sup", num(s.ahat_sup)},
                      {"r_sup", num(s.r_sup)},
                      {"dr_sup", num(s.dr_sup)},
                      {"reason", s.reason}};
    j["a_final_sup"] = num(c.a_final_sup);
    j["b_residual"] = num(c.b_residual);
    j["radii"] = {{"chi", num(c.radii.chi)}, {"xi1", num(c.radii.xi1)}, {"xi2", num(c.radii.xi2)}};
    return j;
}

Json to_json(const VerificationReport& r) {
    Json j;
    Json items = Json::array();
    for (const auto& it : r.items)
        items.push_back({{"id", it.id}, {"description", it.description}, {"pass", it.pass}, {"value", num(it.value)},
                         {"threshold", num(it.threshold)}, {"note", it.note}});
    j["items"] = items;
    j["all_pass"] = std::all_of(r.items.begin(), r.items.end(), [](const VerifyItem& i) { return i.pass; });
    Json ex = Json::array();
    for (const auto& e : r.exponents)
        ex.push_back({{"s", e.s}, {"field", e.field}, {"norm", num(e.norm)}, {"exponent", num(e.exponent)},
                      {"required", e.required}, {"resolved_smooth", e.resolved_smooth}});
    j["exponents"] = ex;
    j["input_exponents"] = nums(r.input_exponents);
    Json eq = Json::array();
    for (const auto& e : r.equivalence)
        eq.push_back({{"function", e.function}, {"euclid", num(e.euclid)}, {"adapted_j0", num(e.adapted_j0)},
                      {"adapted_x", num(e.adapted_x)}, {"ratio_j0", num(e.ratio_j0)}, {"ratio_x", num(e.ratio_x)}});
    j["equivalence"] = eq;
    j["radii"] = {{"chi", num(r.radii.chi)}, {"xi1", num(r.radii.xi1)}, {"xi2", num(r.radii.xi2)}};
    return j;
}

Json to_json(const DensityReport& r) {
    Json j;
    j["h0_identity_residual"] = num(r.h0_identity_residual);
    j["h_jacobian_residual"] = num(r.h_jacobian_residual);
    j["g_residual"] = num(r.g_residual);
    j["g_x0"] = num(r.g_x0);
    j["g_from_chart"] = num(r.g_from_chart);
    j["nu_frame"] = num(r.nu_frame);
    j["sign_constant"] = r.sign_constant;
    j["vanishing"] = r.vanishing;
    j["h_exponent"] = num(r.h_exponent);
    j["h_norm"] = num(r.h_norm);
    j["f_j"] = r.f_j;
    j["f_j_sup"] = nums(r.f_j_sup);
    return j;
}

Json to_json(const VolumeTable& t) {
    Json j;
    j["xi2"] = t.xi2;
    j["nu_ball_j0"] = num(t.nu_ball_j0);
    j["nu_ball_x"] = num(t.nu_ball_x);
    j["nu_frame"] = num(t.nu_frame);
    j["max_wedge"] = num(t.max_wedge);
    j["ratio_j0_x"] = num(t.ratio_j0_x);
    j["ratio_x_frame"] = num(t.ratio_x_frame);
    j["ratio_x_max_wedge"] = num(t.ratio_x_max_wedge);
    j["frame_over_max"] = num(t.frame_over_max);
    j["degenerate"] = t.degenerate;
    j["ball_j0"] = to_json(t.ball_j0);
    j["ball_x"] = to_json(t.ball_x);
    return j;
}

void write_chart_bundle(const std::filesystem::path& dir, const AdaptedChart& chart, const ExperimentConfig& cfg) {
    std::filesystem::create_directories(dir);
    write_text(dir / "config.yaml", cfg.text);
    write_json(dir / "chart.json", to_json(chart));
    write_grid_with_sidecar(dir / "phi.grid", chart.phi, {{"meaning", "Phi(v) on the unit-ball lattice"}});
    write_grid_with_sidecar(dir / "yhat.grid", chart.Yhat, {{"meaning", "pulled-back fields, component [j][k]"}});
    write_grid_with_sidecar(dir / "a_final.grid", chart.A_final, {{"meaning", "Yhat_J0 = K (I + A) grad"}});
    write_grid_with_sidecar(dir / "b_hat.grid", chart.b_hat, {{"meaning", "Yhat_j in the Yhat_J0 frame"}});
    write_grid_with_sidecar(dir / "a_gamma.grid", chart.scaled.A_gamma, {{"meaning", "A(gamma t) on B(5)"}});
    write_grid_with_sidecar(dir / "corrector_r.grid", chart.corrector.R, {{"meaning", "corrector R on the periodic box"}});
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const Json& overrides, const std::vector<std::string>& files) {
    Json j;
    j["tool"] = "achart";
    j["command"] = command;
    j["name"] = cfg.name;
    j["config_hash"] = cfg.hash;
    j["seed"] = cfg.seed;
    j["overrides"] = overrides;
    Json list = Json::array();
    for (const auto& f : files) list.push_back({{"file", f}, {"sha256", sha256_hex(read_text(dir / f))}});
    j["files"] = list;
    std::string name = command == "chart build" ? "manifest" : command;
    std::replace(name.begin(), name.end(), ' ', '_');
    write_json(dir / (name == "manifest" ? "manifest.json" : name + "_manifest.json"), j);
}

}  // namespace achart
