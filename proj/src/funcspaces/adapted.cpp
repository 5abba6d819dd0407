#include "achart/adapted_norm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "achart/flows.hpp"
#include "achart/parallel.hpp"
#include "achart/rng.hpp"
#include "achart/zygmund.hpp"

namespace achart {

std::vector<std::vector<double>> control_directions(int q) {
    std::vector<std::vector<double>> out;
    for (int j = 0; j < q; ++j)
        for (double sgn : {1.0, -1.0}) {
            std::vector<double> d(q, 0.0);
            d[j] = sgn;
            out.push_back(d);
        }
    const double r = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j)
            for (double si : {1.0, -1.0})
                for (double sj : {1.0, -1.0}) {
                    std::vector<double> d(q, 0.0);
                    d[i] = si * r;
                    d[j] = sj * r;
                    out.push_back(d);
                }
    return out;
}

std::vector<std::vector<int>> ordered_multi_indices(int q, int m) {
    std::vector<std::vector<int>> out{{}};
    std::size_t start = 0;
    for (int len = 1; len <= m; ++len) {
        const std::size_t end = out.size();
        for (std::size_t i = start; i < end; ++i)
            for (int j = 0; j < q; ++j) {
                auto a = out[i];
                a.push_back(j);
                out.push_back(a);
            }
        start = end;
    }
    return out;
}

FieldExpr apply_field(const FieldSet& fields, int j, const FieldExpr& f) {
    FieldExpr acc;
    for (int k = 0; k < fields.n(); ++k) acc = acc + fields.coeff(j, k) * differentiate(f, k).expr;
    return acc;
}

std::vector<std::vector<double>> lattice_points_in_ball(const std::vector<double>& centre, double radius,
                                                        int half_cells) {
    GridGeometry g = ball_lattice(centre, radius, half_cells);
    std::vector<std::vector<double>> out;
    for (std::size_t p = 0; p < g.size(); ++p) {
        auto x = g.point(p);
        double d2 = 0;
        for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - centre[k]) * (x[k] - centre[k]);
        if (std::sqrt(d2) <= radius * (1 + 1e-12)) out.push_back(x);
    }
    return out;
}

namespace {

struct Path {
    std::vector<double> a;      // control at t = 0
    std::vector<double> slope;  // d'(t), empty for constant controls
    double sup_norm = 1.0;      // sup over [0, 2h] of |d(t)|
    double stretch = 1.0;       // path runs over [0, 2 * stretch * h]
};

// Controls satisfying sum_j (sup|d_j| + |beta_j| (2h)^(1 - sigma/2))^2 = 1.
std::vector<Path> path_family(int q, double h, double sigma, const AdaptedConfig& cfg) {
    std::vector<Path> out;
    const auto dirs = control_directions(q);
    // Two-field directions run sqrt(2) longer so their displacement matches a diagonal lattice step.
    for (const auto& d : dirs) {
        int nz = 0;
        for (double v : d) nz += v != 0.0;
        out.push_back(Path{d, {}, 1.0, nz == 2 ? std::sqrt(2.0) : 1.0});
    }
    if (!cfg.linear_controls) return out;
    const double T = 2 * h;
    for (const auto& u : dirs)
        for (const auto& v : dirs) {
            if (u == v) continue;
            std::vector<double> beta(q);
            for (int j = 0; j < q; ++j) beta[j] = cfg.linear_kappa * v[j] * std::pow(T, sigma / 2 - 1);
            double S = 0, sup2_0 = 0, sup2_T = 0;
            for (int j = 0; j < q; ++j) {
                const double supd = std::max(std::fabs(u[j]), std::fabs(u[j] + beta[j] * T));
                const double c = supd + std::fabs(beta[j]) * std::pow(T, 1 - sigma / 2);
                S += c * c;
            }
            const double scale = 1.0 / std::sqrt(S);
            Path p;
            p.a.resize(q);
            p.slope.resize(q);
            for (int j = 0; j < q; ++j) {
                p.a[j] = u[j] * scale;
                p.slope[j] = beta[j] * scale;
                sup2_0 += p.a[j] * p.a[j];
                const double e = p.a[j] + p.slope[j] * T;
                sup2_T += e * e;
            }
            p.sup_norm = std::sqrt(std::max(sup2_0, sup2_T));  // |d(t)| is convex in t
            out.push_back(p);
        }
    return out;
}

// Evaluators for X^alpha f.
struct LayerSet {
    std::vector<std::vector<int>> alphas;
    std::vector<CompiledExpr> compiled;  // symbolic case
    std::vector<ScalarFn> fns;           // flow-difference case
};

LayerSet make_layers(const FieldSet& fields, const FieldExpr* fe, const ScalarFn* fn, int m, const AdaptedConfig& cfg) {
    LayerSet L;
    L.alphas = ordered_multi_indices(fields.q(), m);
    if (fe) {
        std::vector<FieldExpr> exprs;
        for (const auto& a : L.alphas) {
            FieldExpr e = *fe;
            // X^(a1,...,ak) f = X_a1(X_a2(...X_ak f)).
            for (auto it = a.rbegin(); it != a.rend(); ++it) e = apply_field(fields, *it, e);
            L.compiled.emplace_back(e);
        }
        return L;
    }
    const double tau = cfg.flow_step;
    for (const auto& a : L.alphas) {
        ScalarFn g = *fn;
        for (auto it = a.rbegin(); it != a.rend(); ++it) {
            const int j = *it;
            ScalarFn inner = g;
            g = [&fields, inner, j, tau, tol = cfg.tol](const double* x) {
                const int n = fields.n();
                std::vector<double> a(fields.q(), 0.0), x0(x, x + n);
                a[j] = 1.0;
                FlowOptions opt;
                opt.tol = tol;
                opt.record = false;
                Domain any{std::vector<double>(n, 0.0), std::numeric_limits<double>::infinity()};
                auto fwd = exp_map(fields, a, x0, any, opt, tau);
                auto bwd = exp_map(fields, a, x0, any, opt, -tau);
                return (inner(fwd.end.data()) - inner(bwd.end.data())) / (2 * tau);
            };
        }
        L.fns.push_back(g);
    }
    return L;
}

void eval_layers(const LayerSet& L, const double* x, double* out) {
    if (!L.compiled.empty())
        for (std::size_t i = 0; i < L.compiled.size(); ++i) out[i] = L.compiled[i].eval(x);
    else
        for (std::size_t i = 0; i < L.fns.size(); ++i) out[i] = L.fns[i](x);
}

struct PathResult {
    bool ok = false;
    bool flow_failed = false;
    std::vector<double> p1, p2;
};

PathResult run_path(const FieldSet& fields, const Path& P, const std::vector<double>& x, double h,
                    const RegionFn& region, double tol) {
    PathResult r;
    FlowOptions opt;
    opt.tol = tol;
    opt.record = false;
    Domain any{std::vector<double>(fields.n(), 0.0), std::numeric_limits<double>::infinity()};
    FlowTrace a, b;
    if (P.slope.empty()) {
        a = exp_map(fields, P.a, x, any, opt, h);
        if (!a.ok()) {
            r.flow_failed = true;
            return r;
        }
        b = exp_map(fields, P.a, a.end, any, opt, h);
    } else {
        const int q = fields.q();
        auto ctl = [&](double off) {
            return ControlFn([&P, q, off](double t, double* out) {
                for (int j = 0; j < q; ++j) out[j] = P.a[j] + P.slope[j] * (t + off);
            });
        };
        a = exp_map(fields, ctl(0.0), x, any, opt, h);
        if (!a.ok()) {
            r.flow_failed = true;
            return r;
        }
        b = exp_map(fields, ctl(h), a.end, any, opt, h);
    }
    if (!b.ok()) {
        r.flow_failed = true;
        return r;
    }
    if (!region(a.end.data()) || !region(b.end.data())) return r;
    r.ok = true;
    r.p1 = a.end;
    r.p2 = b.end;
    return r;
}

AdaptedNormEstimate estimate(const FieldSet& fields, const FieldExpr* fe, const ScalarFn* fn,
                             const AdaptedConfig& cfg) {
    int m;
    double sigma;
    split_order(cfg.s, m, sigma);
    const int n = fields.n(), q = fields.q();
    RegionFn region = cfg.region ? cfg.region : RegionFn([&fields](const double* x) { return fields.domain().contains(x); });
    LayerSet L = make_layers(fields, fe, fn, m, cfg);
    const std::size_t NL = L.alphas.size();
    const auto& B = cfg.base_points;
    const std::size_t NB = B.size();
    if (NB == 0) throw std::invalid_argument("x_adapted_zygmund: no base points");
    for (const auto& b : B)
        if (static_cast<int>(b.size()) != n) throw std::invalid_argument("x_adapted_zygmund: base point dimension");

    AdaptedNormEstimate est;
    std::ostringstream fam;
    fam << "constant controls on " << control_directions(q).size() << " unit directions";
    if (cfg.linear_controls) fam << " plus linear controls d(t) = alpha + beta t with slope share " << cfg.linear_kappa;
    fam << "; scales";
    for (double h : cfg.scales) fam << ' ' << h;
    est.path_family = fam.str();

    // Layer values at base points.
    std::vector<double> base_vals(NB * NL);
    std::vector<char> base_in(NB);
    parallel_for(0, NB, [&](std::size_t i) {
        base_in[i] = region(B[i].data()) ? 1 : 0;
        eval_layers(L, B[i].data(), base_vals.data() + i * NL);
    });
    std::vector<double> sup(NL, 0.0), holder(NL, 0.0), second(NL, 0.0);
    for (std::size_t i = 0; i < NB; ++i)
        if (base_in[i])
            for (std::size_t l = 0; l < NL; ++l) sup[l] = std::max(sup[l], std::fabs(base_vals[i * NL + l]));

    const double beta = sigma / 2;
    auto holder_update = [&](std::vector<double>& hol, const double* va, const double* vb, double rho) {
        if (!(rho > 0)) return;
        const double w = std::pow(rho, -beta);
        for (std::size_t l = 0; l < NL; ++l) hol[l] = std::max(hol[l], std::fabs(va[l] - vb[l]) * w);
    };

    // Second differences along paths, with path endpoint pairs feeding the Holder part.
    for (double h : cfg.scales) {
        const auto family = path_family(q, h, sigma, cfg);
        std::vector<std::vector<double>> sec_part(NB, std::vector<double>(NL, 0.0)), hol_part(NB, std::vector<double>(NL, 0.0));
        std::vector<std::size_t> ok_count(NB, 0), fail_count(NB, 0), out_count(NB, 0);
        parallel_for(0, NB, [&](std::size_t i) {
            if (!base_in[i]) return;
            std::vector<double> v1(NL), v2(NL);
            const double* v0 = base_vals.data() + i * NL;
            for (const auto& P : family) {
                const double hp = h * P.stretch;
                PathResult r = run_path(fields, P, B[i], hp, region, cfg.tol);
                if (!r.ok) {
                    ++(r.flow_failed ? fail_count[i] : out_count[i]);
                    continue;
                }
                ++ok_count[i];
                eval_layers(L, r.p1.data(), v1.data());
                eval_layers(L, r.p2.data(), v2.data());
                const double w = std::pow(hp, -sigma);
                for (std::size_t l = 0; l < NL; ++l)
                    sec_part[i][l] = std::max(sec_part[i][l], std::fabs(v2[l] - 2 * v1[l] + v0[l]) * w);
                holder_update(hol_part[i], v0, v1.data(), hp * P.sup_norm);
                holder_update(hol_part[i], v1.data(), v2.data(), hp * P.sup_norm);
                holder_update(hol_part[i], v0, v2.data(), 2 * hp * P.sup_norm);
            }
        });
        AdaptedScale row;
        row.h = h;
        for (std::size_t i = 0; i < NB; ++i) {
            row.paths += ok_count[i];
            est.failed_flows += fail_count[i];
            est.paths_outside += out_count[i];
            for (std::size_t l = 0; l < NL; ++l) {
                second[l] = std::max(second[l], sec_part[i][l]);
                holder[l] = std::max(holder[l], hol_part[i][l]);
                row.seminorm = std::max(row.seminorm, sec_part[i][l]);
            }
        }
        est.paths += row.paths;
        est.per_scale.push_back(row);
    }

    // Base point pairs with shot distance upper bounds.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (NB * (NB - 1) / 2 <= cfg.max_pairs) {
        for (std::size_t i = 0; i < NB; ++i)
            for (std::size_t j = i + 1; j < NB; ++j) pairs.push_back({i, j});
    } else {
        auto g = stream(cfg.seed, 0);
        for (std::size_t r = 0; r < cfg.max_pairs; ++r) {
            std::size_t a = static_cast<std::size_t>(uniform01(g) * NB), b = static_cast<std::size_t>(uniform01(g) * NB);
            if (a != b) pairs.push_back({a, b});
        }
    }
    DistanceConfig dc;
    dc.tol = cfg.tol;
    dc.shoot_tol = cfg.shoot_tol;
    dc.shoot_iters = 60;
    Domain any{std::vector<double>(n, 0.0), std::numeric_limits<double>::infinity()};
    const std::size_t W = static_cast<std::size_t>(std::max(1, thread_count()));
    std::vector<std::vector<double>> hol_w(W, std::vector<double>(NL, 0.0));
    std::vector<std::size_t> fail_w(W, 0);
    const std::size_t chunk = (pairs.size() + W - 1) / W;
    parallel_for(0, W, [&](std::size_t w) {
        for (std::size_t k = w * chunk; k < std::min(pairs.size(), (w + 1) * chunk); ++k) {
            const auto [a, b] = pairs[k];
            if (!base_in[a] || !base_in[b]) continue;
            auto sol = shoot(fields, B[a], B[b], any, dc);
            if (!sol) {
                ++fail_w[w];
                continue;
            }
            double rho = 0;
            for (double c : *sol) rho += c * c;
            holder_update(hol_w[w], base_vals.data() + a * NL, base_vals.data() + b * NL, std::sqrt(rho));
        }
    });
    for (std::size_t w = 0; w < W; ++w) {
        est.failed_shots += fail_w[w];
        for (std::size_t l = 0; l < NL; ++l) holder[l] = std::max(holder[l], hol_w[w][l]);
    }
    est.holder_pairs = pairs.size();

    for (std::size_t l = 0; l < NL; ++l) {
        est.sup_term += sup[l];
        est.holder_term += sup[l] + holder[l];
        est.second_diff_term += second[l];
    }
    est.value = est.holder_term + est.second_diff_term;
    return est;
}

}  // namespace

AdaptedNormEstimate x_adapted_zygmund(const FieldSet& fields, const FieldExpr& f, const AdaptedConfig& cfg) {
    return estimate(fields, &f, nullptr, cfg);
}

AdaptedNormEstimate x_adapted_zygmund(const FieldSet& fields, const ScalarFn& f, const AdaptedConfig& cfg) {
    return estimate(fields, nullptr, &f, cfg);
}

}  // namespace achart
