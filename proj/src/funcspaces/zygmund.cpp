#include "achart/zygmund.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "achart/parallel.hpp"
#include "achart/rng.hpp"

namespace achart {

void split_order(double s, int& m, double& sigma) {
    if (!(s > 0)) throw std::invalid_argument("order s must be positive");
    m = static_cast<int>(std::ceil(s)) - 1;
    sigma = s - m;
}

std::vector<std::vector<int>> multi_indices(int n, int m) {
    std::vector<std::vector<int>> out;
    for (int order = 0; order <= m; ++order) {
        std::vector<int> a(n, 0);
        // Enumerate compositions of `order` into n parts, lexicographically descending.
        std::function<void(int, int)> rec = [&](int axis, int left) {
            if (axis == n - 1) {
                a[axis] = left;
                out.push_back(a);
                return;
            }
            for (int c = left; c >= 0; --c) {
                a[axis] = c;
                rec(axis + 1, left - c);
            }
        };
        rec(0, order);
    }
    return out;
}

GridGeometry ball_lattice(const std::vector<double>& centre, double radius, int half_cells) {
    if (half_cells < 1 || !(radius > 0)) throw std::invalid_argument("ball_lattice: bad size");
    GridGeometry g;
    const int n = static_cast<int>(centre.size());
    const double h = radius / half_cells;
    g.extents.assign(n, 2 * half_cells + 1);
    g.spacing.assign(n, h);
    g.origin.resize(n);
    for (int d = 0; d < n; ++d) g.origin[d] = centre[d] - half_cells * h;
    return g;
}

GridField sample_expr(const FieldExpr& f, const GridGeometry& g) {
    GridField out(g, {});
    CompiledExpr c(f);
    parallel_for(0, g.size(), [&](std::size_t p) {
        double x[8];
        std::vector<double> big;
        double* px = x;
        if (g.dim() > 8) {
            big.resize(g.dim());
            px = big.data();
        }
        g.point(p, px);
        out.values[p] = c.eval(px);
    });
    return out;
}

GridField fd_derivative(const GridField& f, int axis) {
    const GridGeometry& g = f.geom;
    GridField out(g, f.comp_shape);
    out.boundary_margin = f.boundary_margin;
    const int N = g.extents[axis];
    if (N < 5) throw std::invalid_argument("fd_derivative: need at least 5 points per axis");
    const std::size_t st = g.stride(axis);
    const double h = g.spacing[axis];
    static const double central[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    // One-sided fourth-order stencils for offsets 0 and 1 from the left edge.
    static const double left0[5] = {-25.0 / 12, 48.0 / 12, -36.0 / 12, 16.0 / 12, -3.0 / 12};
    static const double left1[5] = {-3.0 / 12, -10.0 / 12, 18.0 / 12, -6.0 / 12, 1.0 / 12};
    for (int c = 0; c < f.ncomp(); ++c) {
        const double* v = f.comp(c);
        double* o = out.comp(c);
        parallel_for(0, g.size(), [&](std::size_t p) {
            std::vector<int> id(g.dim());
            g.unravel(p, id.data());
            const int i = id[axis];
            double acc = 0;
            if (i >= 2 && i <= N - 3) {
                for (int k = 0; k < 5; ++k) acc += central[k] * v[p + (k - 2) * st];
            } else if (i == 0) {
                for (int k = 0; k < 5; ++k) acc += left0[k] * v[p + k * st];
            } else if (i == 1) {
                for (int k = 0; k < 5; ++k) acc += left1[k] * v[p + (k - 1) * st];
            } else if (i == N - 1) {
                for (int k = 0; k < 5; ++k) acc -= left0[k] * v[p - k * st];
            } else {
                for (int k = 0; k < 5; ++k) acc -= left1[k] * v[p - (k - 1) * st];
            }
            o[p] = acc / h;
        });
    }
    return out;
}

namespace {

double uniform_spacing(const GridGeometry& g) {
    const double h = g.spacing.at(0);
    for (double s : g.spacing)
        if (std::fabs(s - h) > 1e-12 * h) throw std::invalid_argument("estimators need equal spacing on all axes");
    return h;
}

struct Region {
    const GridGeometry* g;
    std::vector<char> in;          // lattice point inside the closed ball
    std::vector<std::size_t> pts;  // indices of points inside
};

Region make_region(const GridGeometry& g, const std::vector<double>& centre, double radius) {
    Region r;
    r.g = &g;
    r.in.assign(g.size(), 0);
    std::vector<double> x(g.dim());
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.point(p, x.data());
        double d2 = 0;
        for (int k = 0; k < g.dim(); ++k) d2 += (x[k] - centre[k]) * (x[k] - centre[k]);
        if (std::sqrt(d2) <= radius * (1 + 1e-12)) {
            r.in[p] = 1;
            r.pts.push_back(p);
        }
    }
    if (r.pts.empty()) throw std::invalid_argument("estimator ball contains no lattice points");
    return r;
}

// Axis and diagonal lattice directions.
std::vector<std::vector<int>> directions(int n) {
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i) {
        std::vector<int> d(n, 0);
        d[i] = 1;
        out.push_back(d);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            std::vector<int> d(n, 0);
            d[i] = 1;
            d[j] = 1;
            out.push_back(d);
            d[j] = -1;
            out.push_back(d);
        }
    return out;
}

// sup |v(x + 2s) - 2 v(x + s) + v(x)| over x with all three points in the region, shift s = hc * dir.
double second_diff_sup(const double* v, const Region& R, int hc, const std::vector<int>& dir) {
    const GridGeometry& g = *R.g;
    const int n = g.dim();
    long off = 0;
    for (int d = 0; d < n; ++d) off += static_cast<long>(hc) * dir[d] * static_cast<long>(g.stride(d));
    const std::size_t P = R.pts.size();
    const std::size_t W = static_cast<std::size_t>(std::max(1, thread_count()));
    std::vector<double> part(W, 0.0);
    const std::size_t chunk = (P + W - 1) / W;
    parallel_for(0, W, [&](std::size_t w) {
        std::vector<int> id(n);
        double best = 0;
        for (std::size_t i = w * chunk; i < std::min(P, (w + 1) * chunk); ++i) {
            const std::size_t p = R.pts[i];
            g.unravel(p, id.data());
            bool ok = true;
            for (int d = 0; d < n && ok; ++d) {
                const int e = id[d] + 2 * hc * dir[d];
                if (e < 0 || e >= g.extents[d]) ok = false;
            }
            if (!ok) continue;
            const std::size_t p1 = static_cast<std::size_t>(static_cast<long>(p) + off);
            const std::size_t p2 = static_cast<std::size_t>(static_cast<long>(p) + 2 * off);
            if (!R.in[p1] || !R.in[p2]) continue;
            best = std::max(best, std::fabs(v[p2] - 2 * v[p1] + v[p]));
        }
        part[w] = best;
    });
    return *std::max_element(part.begin(), part.end());
}

struct PairSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    bool all = false;
};

PairSet holder_pairs(const Region& R, std::size_t max_pairs, std::uint64_t seed) {
    PairSet ps;
    const std::size_t P = R.pts.size();
    const std::size_t total = P * (P - 1) / 2;
    if (total <= max_pairs) {
        ps.all = true;
        return ps;
    }
    ps.pairs.reserve(max_pairs);
    auto gen = stream(seed, 0);
    for (std::size_t r = 0; r < max_pairs; ++r) {
        std::size_t a = static_cast<std::size_t>(uniform01(gen) * P), b = static_cast<std::size_t>(uniform01(gen) * P);
        if (a == b) continue;
        ps.pairs.push_back({R.pts[a], R.pts[b]});
    }
    // Short offsets of one and two cells.
    const GridGeometry& g = *R.g;
    const int n = g.dim();
    std::vector<std::vector<int>> offs;
    std::vector<int> o(n, -2);
    for (;;) {
        bool pos = false;
        for (int d = 0; d < n; ++d)
            if (o[d] != 0) {
                pos = o[d] > 0;
                break;
            }
        if (pos) offs.push_back(o);
        int d = n - 1;
        while (d >= 0 && o[d] == 2) o[d--] = -2;
        if (d < 0) break;
        ++o[d];
    }
    std::vector<int> id(n);
    for (std::size_t p : R.pts) {
        g.unravel(p, id.data());
        for (const auto& of : offs) {
            bool ok = true;
            long q = 0;
            for (int d = 0; d < n && ok; ++d) {
                const int e = id[d] + of[d];
                if (e < 0 || e >= g.extents[d]) ok = false;
                q += static_cast<long>(of[d]) * static_cast<long>(g.stride(d));
            }
            if (!ok) continue;
            const std::size_t pq = static_cast<std::size_t>(static_cast<long>(p) + q);
            if (R.in[pq]) ps.pairs.push_back({p, pq});
        }
    }
    return ps;
}

double holder_quotient(const double* v, const Region& R, const PairSet& ps, double beta) {
    const GridGeometry& g = *R.g;
    const int n = g.dim();
    const std::size_t W = static_cast<std::size_t>(std::max(1, thread_count()));
    std::vector<double> part(W, 0.0);
    auto dist = [&](std::size_t a, std::size_t b, int* ia, int* ib) {
        g.unravel(a, ia);
        g.unravel(b, ib);
        double s = 0;
        for (int d = 0; d < n; ++d) {
            const double t = (ia[d] - ib[d]) * g.spacing[d];
            s += t * t;
        }
        return std::sqrt(s);
    };
    if (ps.all) {
        const std::size_t P = R.pts.size();
        parallel_for(0, W, [&](std::size_t w) {
            std::vector<int> ia(n), ib(n);
            double best = 0;
            for (std::size_t i = w; i < P; i += W)
                for (std::size_t j = i + 1; j < P; ++j) {
                    const std::size_t a = R.pts[i], b = R.pts[j];
                    const double df = std::fabs(v[a] - v[b]);
                    if (df == 0) continue;
                    best = std::max(best, df / std::pow(dist(a, b, ia.data(), ib.data()), beta));
                }
            part[w] = best;
        });
    } else {
        const std::size_t P = ps.pairs.size();
        const std::size_t chunk = (P + W - 1) / W;
        parallel_for(0, W, [&](std::size_t w) {
            std::vector<int> ia(n), ib(n);
            double best = 0;
            for (std::size_t i = w * chunk; i < std::min(P, (w + 1) * chunk); ++i) {
                const auto [a, b] = ps.pairs[i];
                const double df = std::fabs(v[a] - v[b]);
                if (df == 0) continue;
                best = std::max(best, df / std::pow(dist(a, b, ia.data(), ib.data()), beta));
            }
            part[w] = best;
        });
    }
    return *std::max_element(part.begin(), part.end());
}

double sup_abs(const double* v, const Region& R) {
    double s = 0;
    for (std::size_t p : R.pts) s = std::max(s, std::fabs(v[p]));
    return s;
}

std::vector<double> centre_of(const ZygmundConfig& cfg, int n) {
    if (cfg.center.empty()) return std::vector<double>(n, 0.0);
    if (static_cast<int>(cfg.center.size()) != n) throw std::invalid_argument("estimator centre dimension mismatch");
    return cfg.center;
}

// Layer provider: derivative fields by multi-index, plus whether they are exact.
struct Layers {
    std::map<std::vector<int>, GridField> cache;
    const GridField* base = nullptr;
    const FieldExpr* expr = nullptr;
    GridGeometry geom;

    const GridField& get(const std::vector<int>& alpha) {
        auto it = cache.find(alpha);
        if (it != cache.end()) return it->second;
        int total = 0;
        for (int a : alpha) total += a;
        if (total == 0 && base) return *base;
        if (expr) {
            FieldExpr e = *expr;
            for (std::size_t d = 0; d < alpha.size(); ++d)
                for (int r = 0; r < alpha[d]; ++r) e = differentiate(e, static_cast<int>(d)).expr;
            return cache.emplace(alpha, sample_expr(e, geom)).first->second;
        }
        // Finite differences: peel one derivative off the last nonzero axis.
        std::vector<int> lower = alpha;
        int axis = static_cast<int>(alpha.size()) - 1;
        while (lower[axis] == 0) --axis;
        --lower[axis];
        GridField d = fd_derivative(get(lower), axis);
        return cache.emplace(alpha, std::move(d)).first->second;
    }
};

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ZygmundReport zygmund_scalar(Layers& L, const GridGeometry& g, const ZygmundConfig& cfg, bool exact) {
    const int n = g.dim();
    const double sp = uniform_spacing(g);
    ZygmundReport rep;
    rep.s = cfg.s;
    split_order(cfg.s, rep.m, rep.sigma);
    Region R = make_region(g, centre_of(cfg, n), cfg.radius);
    std::vector<int> hcs = scale_cells(cfg, sp);
    PairSet ps = holder_pairs(R, cfg.max_pairs, cfg.seed);
    rep.holder_pairs = ps.all ? R.pts.size() * (R.pts.size() - 1) / 2 : ps.pairs.size();
    auto dirs = directions(n);
    rep.per_scale.resize(hcs.size());
    for (std::size_t k = 0; k < hcs.size(); ++k) rep.per_scale[k].h = hcs[k] * sp;
    const double base_sup = sup_abs(L.get(std::vector<int>(n, 0)).values.data(), R);
    for (const auto& alpha : multi_indices(n, rep.m)) {
        const GridField& F = L.get(alpha);
        const double* v = F.values.data();
        LayerTerm t;
        t.alpha = alpha;
        t.sup = sup_abs(v, R);
        t.holder = holder_quotient(v, R, ps, rep.sigma / 2);
        int order = 0;
        for (int a : alpha) order += a;
        for (std::size_t k = 0; k < hcs.size(); ++k) {
            double raw = 0, normed = 0;
            for (const auto& d : dirs) {
                double len = 0;
                for (int c : d) len += c * c;
                len = std::sqrt(len) * hcs[k] * sp;
                const double s2 = second_diff_sup(v, R, hcs[k], d);
                raw = std::max(raw, s2);
                normed = std::max(normed, s2 / std::pow(len, rep.sigma));
            }
            rep.per_scale[k].seminorm = std::max(rep.per_scale[k].seminorm, normed);
            if (order == rep.m) rep.per_scale[k].top_sup = std::max(rep.per_scale[k].top_sup, raw);
            t.second_diff = std::max(t.second_diff, normed);
        }
        rep.sup_term += t.sup;
        rep.holder_half_term += t.sup + t.holder;
        rep.second_diff_term += t.second_diff;
        rep.layers.push_back(t);
    }
    rep.norm = rep.holder_half_term + rep.second_diff_term;

    // Noise floor for the order-m second differences.
    double top_sup = 0;
    for (const auto& t : rep.layers) {
        int order = 0;
        for (int a : t.alpha) order += a;
        if (order == rep.m) top_sup = std::max(top_sup, t.sup);
    }
    const double eps = 4e-16;
    double noise = cfg.noise > 0 ? cfg.noise : eps * base_sup;
    if (!exact) noise *= std::pow(1.5 / sp, rep.m);
    if (exact || rep.m == 0) noise += eps * top_sup;
    rep.noise_floor = 4 * noise;
    std::vector<double> lx, ly;
    for (auto& e : rep.per_scale)
        if (e.top_sup > 100 * rep.noise_floor) {
            e.used_in_fit = true;
            lx.push_back(std::log(e.h));
            ly.push_back(std::log(e.top_sup));
        }
    rep.scales_used = static_cast<int>(lx.size());
    if (lx.size() < 2) {
        rep.resolved_smooth = true;
        rep.fitted_exponent = rep.m + 2.0;
    } else {
        rep.fitted_exponent = rep.m + ls_slope(lx, ly);
    }
    return rep;
}

ZygmundReport aggregate(std::vector<ZygmundReport> comps) {
    std::size_t widest = 0, roughest = 0;
    for (std::size_t c = 1; c < comps.size(); ++c) {
        if (comps[c].norm > comps[widest].norm) widest = c;
        if (comps[c].fitted_exponent < comps[roughest].fitted_exponent) roughest = c;
    }
    ZygmundReport out = comps[widest];
    out.fitted_exponent = comps[roughest].fitted_exponent;
    out.resolved_smooth = comps[roughest].resolved_smooth;
    out.scales_used = comps[roughest].scales_used;
    out.components = std::move(comps);
    return out;
}

int default_kmax_expr(int n) { return n == 1 ? 10 : (n == 2 ? 7 : 4); }

}  // namespace

std::vector<int> scale_cells(const ZygmundConfig& cfg, double spacing) {
    std::vector<int> out;
    if (!cfg.scales.empty()) {
        for (double h : cfg.scales) {
            const int c = static_cast<int>(std::lround(h / spacing));
            if (c < 1) throw std::invalid_argument("grid too coarse for requested scale " + std::to_string(h));
            if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        }
        std::sort(out.rbegin(), out.rend());
        return out;
    }
    int kmax = cfg.k_max;
    const double cells_top = cfg.radius / spacing;
    if (kmax <= 0) kmax = static_cast<int>(std::floor(std::log2(cells_top / 4.0) + 1e-9));
    if (cfg.radius * std::exp2(-kmax) / spacing < 4.0 - 1e-9)
        throw std::invalid_argument("grid too coarse for requested smallest scale");
    if (kmax < cfg.k_min) throw std::invalid_argument("grid too coarse for requested smallest scale");
    for (int k = cfg.k_min; k <= kmax; ++k) out.push_back(static_cast<int>(std::lround(cfg.radius * std::exp2(-k) / spacing)));
    return out;
}

ZygmundReport zygmund_norm(const GridField& f, const ZygmundConfig& cfg) {
    if (f.ncomp() > 1) {
        std::vector<ZygmundReport> comps;
        for (int c = 0; c < f.ncomp(); ++c) comps.push_back(zygmund_norm(f.component(c), cfg));
        return aggregate(std::move(comps));
    }
    Layers L;
    L.base = &f;
    L.geom = f.geom;
    return zygmund_scalar(L, f.geom, cfg, false);
}

ZygmundReport zygmund_norm(const FieldExpr& f, int n, const ZygmundConfig& cfg) {
    ZygmundConfig c = cfg;
    int half = cfg.lattice_cells;
    if (half <= 0) {
        int kmax = cfg.k_max > 0 ? cfg.k_max : default_kmax_expr(n);
        if (cfg.k_max <= 0 && cfg.scales.empty()) c.k_max = kmax;
        half = 4 * (1 << kmax);
    }
    GridGeometry g = ball_lattice(centre_of(cfg, n), cfg.radius, half);
    GridField base = sample_expr(f, g);
    Layers L;
    L.base = &base;
    L.expr = &f;
    L.geom = g;
    return zygmund_scalar(L, g, c, true);
}

namespace {

double holder_impl(Layers& L, const GridGeometry& g, int m, double s, const ZygmundConfig& cfg) {
    const int n = g.dim();
    uniform_spacing(g);
    Region R = make_region(g, centre_of(cfg, n), cfg.radius);
    PairSet ps = holder_pairs(R, cfg.max_pairs, cfg.seed);
    double total = 0;
    for (const auto& alpha : multi_indices(n, m)) {
        const double* v = L.get(alpha).values.data();
        total += sup_abs(v, R) + (s > 0 ? holder_quotient(v, R, ps, s) : 0.0);
    }
    return total;
}

}  // namespace

double holder_norm(const GridField& f, int m, double s, const ZygmundConfig& cfg) {
    if (f.ncomp() > 1) {
        double best = 0;
        for (int c = 0; c < f.ncomp(); ++c) best = std::max(best, holder_norm(f.component(c), m, s, cfg));
        return best;
    }
    Layers L;
    L.base = &f;
    L.geom = f.geom;
    return holder_impl(L, f.geom, m, s, cfg);
}

double holder_norm(const FieldExpr& f, int n, int m, double s, const ZygmundConfig& cfg) {
    const int half = cfg.lattice_cells > 0 ? cfg.lattice_cells : (n == 1 ? 2048 : (n == 2 ? 128 : 24));
    GridGeometry g = ball_lattice(centre_of(cfg, n), cfg.radius, half);
    GridField base = sample_expr(f, g);
    Layers L;
    L.base = &base;
    L.expr = &f;
    L.geom = g;
    return holder_impl(L, g, m, s, cfg);
}

}  // namespace achart
