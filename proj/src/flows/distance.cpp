#include "achart/distance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <queue>

#include "achart/parallel.hpp"

namespace achart {

namespace {

Eigen::MatrixXd pinv_at(const FieldSet& fields, const double* p) {
    const int n = fields.n(), q = fields.q();
    std::vector<double> all(static_cast<std::size_t>(q * n));
    fields.eval_all(p, all.data());
    Eigen::MatrixXd M(n, q);
    for (int j = 0; j < q; ++j)
        for (int k = 0; k < n; ++k) M(k, j) = all[j * n + k];
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(M).pseudoInverse();
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

std::optional<std::vector<double>> shoot(const FieldSet& fields, const std::vector<double>& u,
                                         const std::vector<double>& v, const Domain& U, const DistanceConfig& cfg) {
    const int n = fields.n(), q = fields.q();
    std::vector<double> mid(n), diff(n);
    for (int k = 0; k < n; ++k) {
        mid[k] = 0.5 * (u[k] + v[k]);
        diff[k] = v[k] - u[k];
    }
    const double len = norm(diff);
    if (len == 0) return std::vector<double>(q, 0.0);
    Eigen::MatrixXd P = pinv_at(fields, mid.data());
    if (!P.allFinite()) return std::nullopt;
    Eigen::VectorXd b = P * Eigen::Map<Eigen::VectorXd>(diff.data(), n);
    FlowOptions opt;
    opt.tol = cfg.tol;
    opt.record = false;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.shoot_iters; ++it) {
        std::vector<double> a(b.data(), b.data() + q);
        FlowTrace tr = exp_map(fields, a, u, U, opt);
        if (!tr.ok()) return std::nullopt;
        Eigen::VectorXd r(n);
        for (int k = 0; k < n; ++k) r(k) = v[k] - tr.end[k];
        const double rn = r.norm();
        if (rn <= cfg.shoot_tol * std::max(len, 1e-300)) return a;
        if (rn > prev) return std::nullopt;
        prev = rn;
        b += P * r;
    }
    return std::nullopt;
}

std::size_t DistanceGraph::edge_count() const {
    std::size_t e = 0;
    for (const auto& a : adj) e += a.size();
    return e / 2;
}

std::vector<double> DistanceGraph::shortest(int src) const {
    std::vector<double> dist(nodes.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (auto [v, w] : adj[u]) {
            double nd = d + w;
            if (nd < dist[v]) {
                dist[v] = nd;
                pq.push({nd, v});
            }
        }
    }
    return dist;
}

DistanceGraph build_distance_graph(const FieldSet& fields, const std::vector<double>& lo,
                                   const std::vector<double>& hi, int per_axis,
                                   const std::vector<std::vector<double>>& extra, const DistanceConfig& cfg) {
    const int n = fields.n();
    const int s = cfg.stencil > 0 ? cfg.stencil : (n == 2 ? 4 : 2);
    DistanceGraph g;
    for (const auto& e : extra) g.nodes.push_back(e);
    const std::size_t n_extra = extra.size();

    // Lattice nodes; lattice index -> node index (-1 if outside the domain).
    std::vector<double> h(n);
    std::size_t total = 1;
    for (int d = 0; d < n; ++d) {
        h[d] = (hi[d] - lo[d]) / (per_axis - 1);
        total *= static_cast<std::size_t>(per_axis);
    }
    std::vector<long> node_of(total, -1);
    std::vector<int> idx(n);
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t r = f;
        std::vector<double> p(n);
        for (int d = n - 1; d >= 0; --d) {
            idx[d] = static_cast<int>(r % per_axis);
            r /= per_axis;
            p[d] = lo[d] + idx[d] * h[d];
        }
        if (fields.domain().contains(p.data())) {
            node_of[f] = static_cast<long>(g.nodes.size());
            g.nodes.push_back(p);
        }
    }

    // Candidate pairs: lattice offsets in the lexicographically positive half, plus extra-node links.
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::vector<int>> offsets;
    {
        std::vector<int> o(n, -s);
        for (;;) {
            bool positive = false;
            for (int d = 0; d < n; ++d)
                if (o[d] != 0) {
                    positive = o[d] > 0;
                    break;
                }
            if (positive) offsets.push_back(o);
            int d = n - 1;
            while (d >= 0 && o[d] == s) o[d--] = -s;
            if (d < 0) break;
            ++o[d];
        }
    }
    for (std::size_t f = 0; f < total; ++f) {
        if (node_of[f] < 0) continue;
        std::size_t r = f;
        for (int d = n - 1; d >= 0; --d) {
            idx[d] = static_cast<int>(r % per_axis);
            r /= per_axis;
        }
        for (const auto& o : offsets) {
            std::size_t t = 0;
            bool in = true;
            for (int d = 0; d < n && in; ++d) {
                int j = idx[d] + o[d];
                if (j < 0 || j >= per_axis) in = false;
                t = t * per_axis + static_cast<std::size_t>(j);
            }
            if (in && node_of[t] >= 0) pairs.push_back({static_cast<int>(node_of[f]), static_cast<int>(node_of[t])});
        }
    }
    for (std::size_t e = 0; e < n_extra; ++e)
        for (std::size_t v = 0; v < g.nodes.size(); ++v) {
            if (v <= e && v < n_extra) continue;
            bool close = true;
            for (int d = 0; d < n; ++d)
                if (std::fabs(g.nodes[v][d] - extra[e][d]) > s * h[d] * (1 + 1e-12)) close = false;
            if (close) pairs.push_back({static_cast<int>(e), static_cast<int>(v)});
        }

    std::vector<double> w(pairs.size());
    parallel_for(0, pairs.size(), [&](std::size_t i) {
        auto b = shoot(fields, g.nodes[pairs[i].first], g.nodes[pairs[i].second], fields.domain(), cfg);
        w[i] = b ? norm(*b) : std::numeric_limits<double>::infinity();
    });
    g.adj.resize(g.nodes.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!(w[i] <= cfg.max_delta) || !std::isfinite(w[i])) continue;
        g.adj[pairs[i].first].push_back({pairs[i].second, w[i]});
        g.adj[pairs[i].second].push_back({pairs[i].first, w[i]});
    }
    return g;
}

DistanceResult cc_distance(const FieldSet& fields, const std::vector<double>& x, const std::vector<double>& y,
                           const DistanceConfig& cfg) {
    const int n = fields.n();
    DistanceResult res;
    double span = 0;
    for (int d = 0; d < n; ++d) span = std::max(span, std::fabs(x[d] - y[d]));
    if (span == 0) {
        res.value = 0;
        res.level_values = {0.0};
        return res;
    }
    const double half = 0.5 * span * (1 + 2 * cfg.margin);
    std::vector<double> lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
        double c = 0.5 * (x[d] + y[d]);
        lo[d] = c - half;
        hi[d] = c + half;
    }
    for (int l = 0; l < std::max(1, cfg.levels); ++l) {
        const int N = (cfg.nodes_per_axis - 1) * (1 << l) + 1;
        DistanceConfig c = cfg;
        if (c.stencil <= 0) c.stencil = n == 2 ? 4 : 2;
        DistanceGraph g = build_distance_graph(fields, lo, hi, N, {x, y}, c);
        res.edges = g.edge_count();
        res.level_values.push_back(g.shortest(0)[1]);
    }
    res.value = *std::min_element(res.level_values.begin(), res.level_values.end());
    if (res.level_values.size() > 1)
        res.refinement_gap = std::fabs(res.level_values[res.level_values.size() - 2] - res.level_values.back());
    if (!std::isfinite(res.value)) {
        res.disconnected = true;
        res.note = std::isfinite(cfg.max_delta) ? "no path with hops up to max_delta " + std::to_string(cfg.max_delta)
                                                : "no path in the net";
        return res;
    }
    res.dyadic_lo = std::exp2(std::floor(std::log2(res.value)));
    res.dyadic_hi = 2 * res.dyadic_lo;
    return res;
}

}  // namespace achart
