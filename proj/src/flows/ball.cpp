#include "achart/ball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "achart/flows.hpp"
#include "achart/parallel.hpp"
#include "achart/rng.hpp"

namespace achart {

void wilson_interval(std::size_t k, std::size_t n, double& lo, double& hi) {
    if (n == 0) {
        lo = 0;
        hi = 1;
        return;
    }
    const double z = 1.959963984540054;
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double denom = 1 + z * z / nn;
    const double centre = (p + z * z / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
    lo = k == 0 ? 0.0 : std::max(0.0, centre - half);
    hi = k == n ? 1.0 : std::min(1.0, centre + half);
}

namespace {

// Uniform point in the open unit ball of R^q.
void unit_ball(std::mt19937_64& g, int q, double* out) {
    double s = 0;
    for (int j = 0; j < q; ++j) {
        out[j] = normal01(g);
        s += out[j] * out[j];
    }
    s = std::sqrt(s);
    const double r = std::pow(uniform01(g), 1.0 / q);
    for (int j = 0; j < q; ++j) out[j] = s > 0 ? out[j] / s * r : 0.0;
}

}  // namespace

bool ball_sample(const FieldSet& fields, const std::vector<double>& x0, double delta, const BallConfig& cfg,
                 std::uint64_t index, std::vector<double>& end) {
    const int q = fields.q();
    std::mt19937_64 g = stream(cfg.seed, index);
    const bool constant = uniform01(g) < cfg.constant_fraction;
    const int m = constant ? 1 : std::max(1, cfg.pieces);
    std::vector<std::vector<double>> pieces(m, std::vector<double>(q));
    for (auto& p : pieces) unit_ball(g, q, p.data());
    FlowOptions opt;
    opt.tol = cfg.tol;
    opt.record = false;
    FlowTrace tr = exp_map_piecewise(fields, pieces, delta, x0, fields.domain(), opt);
    end = tr.end;
    return tr.ok();
}

void ball_window(const FieldSet& fields, const std::vector<double>& x0, double delta, const BallConfig& cfg,
                 std::vector<double>& lo, std::vector<double>& hi) {
    const int n = fields.n();
    const std::size_t P = std::max<std::size_t>(cfg.pilot, 16);
    std::vector<std::vector<double>> ends(P);
    std::vector<char> ok(P);
    // Pilot draws use indices past the main sample range so they never coincide.
    parallel_for(0, P, [&](std::size_t i) {
        ok[i] = ball_sample(fields, x0, delta, cfg, std::numeric_limits<std::uint64_t>::max() - i, ends[i]) ? 1 : 0;
    });
    lo = x0;
    hi = x0;
    for (std::size_t i = 0; i < P; ++i) {
        if (!ok[i]) continue;
        for (int d = 0; d < n; ++d) {
            lo[d] = std::min(lo[d], ends[i][d]);
            hi[d] = std::max(hi[d], ends[i][d]);
        }
    }
    double widest = 0;
    for (int d = 0; d < n; ++d) widest = std::max(widest, hi[d] - lo[d]);
    for (int d = 0; d < n; ++d) {
        double w = hi[d] - lo[d];
        if (w < 1e-9 * widest || w == 0) w = std::max(1e-9 * widest, 1e-300);
        const double c = 0.5 * (lo[d] + hi[d]);
        lo[d] = c - 0.5 * w * (1 + 2 * cfg.window_pad);
        hi[d] = c + 0.5 * w * (1 + 2 * cfg.window_pad);
    }
}

namespace {

struct Binned {
    std::vector<long> cell;  // -1 outside window or failed
    std::size_t failed = 0;
};

Binned bin_samples(const FieldSet& fields, const std::vector<double>& x0, double delta, const GridGeometry& win,
                   const BallConfig& cfg) {
    const int n = fields.n();
    Binned b;
    b.cell.assign(cfg.samples, -1);
    std::vector<char> fail(cfg.samples, 0);
    parallel_for(0, cfg.samples, [&](std::size_t i) {
        std::vector<double> e;
        if (!ball_sample(fields, x0, delta, cfg, i, e)) {
            fail[i] = 1;
            return;
        }
        std::size_t flat = 0;
        for (int d = 0; d < n; ++d) {
            const double lo = win.origin[d] - 0.5 * win.spacing[d];
            const double u = std::floor((e[d] - lo) / win.spacing[d]);
            if (!(u >= 0 && u < win.extents[d])) return;
            flat = flat * static_cast<std::size_t>(win.extents[d]) + static_cast<std::size_t>(u);
        }
        b.cell[i] = static_cast<long>(flat);
    });
    for (char f : fail) b.failed += f;
    return b;
}

GridGeometry window_grid(const std::vector<double>& lo, const std::vector<double>& hi, int cells) {
    GridGeometry g;
    for (std::size_t d = 0; d < lo.size(); ++d) {
        const double h = (hi[d] - lo[d]) / cells;
        g.extents.push_back(cells);
        g.spacing.push_back(h);
        g.origin.push_back(lo[d] + 0.5 * h);
    }
    return g;
}

void finish(BallEstimate& est, const BallConfig& cfg) {
    est.hit_cells = static_cast<std::size_t>(std::count(est.hit_mask.begin(), est.hit_mask.end(), 1));
    est.volume = static_cast<double>(est.hit_cells) * est.cell_volume;
    est.hit_fraction = cfg.samples ? static_cast<double>(est.in_window) / static_cast<double>(cfg.samples) : 0.0;
    wilson_interval(est.in_window, cfg.samples, est.wilson_lo, est.wilson_hi);
    est.degenerate = est.hit_cells == 0;
}

BallEstimate estimate_from(const FieldSet& fields, const std::vector<double>& x0, double delta,
                           const GridGeometry& win, const Binned& b, const BallConfig& cfg) {
    BallEstimate est;
    est.center = x0;
    est.delta = delta;
    est.window = win;
    est.samples = cfg.samples;
    est.pieces = cfg.pieces;
    est.failed = b.failed;
    est.cell_volume = 1;
    for (double h : win.spacing) est.cell_volume *= h;
    est.hit_mask.assign(win.size(), 0);
    for (long c : b.cell)
        if (c >= 0) {
            est.hit_mask[static_cast<std::size_t>(c)] = 1;
            ++est.in_window;
        }
    (void)fields;
    finish(est, cfg);
    return est;
}

}  // namespace

BallEstimate cc_ball_volume_in(const FieldSet& fields, const std::vector<double>& x0, double delta,
                               const std::vector<double>& lo, const std::vector<double>& hi, const BallConfig& cfg) {
    if (!(delta > 0)) throw std::invalid_argument("cc_ball_volume: delta must be positive");
    GridGeometry win = window_grid(lo, hi, cfg.grid);
    return estimate_from(fields, x0, delta, win, bin_samples(fields, x0, delta, win, cfg), cfg);
}

BallEstimate cc_ball_volume(const FieldSet& fields, const std::vector<double>& x0, double delta,
                            const BallConfig& cfg) {
    if (!(delta > 0)) throw std::invalid_argument("cc_ball_volume: delta must be positive");
    std::vector<double> lo, hi;
    ball_window(fields, x0, delta, cfg, lo, hi);
    return cc_ball_volume_in(fields, x0, delta, lo, hi, cfg);
}

std::vector<BallEstimate> cc_ball_volume_sweep(const FieldSet& fields, const std::vector<double>& x0,
                                               std::vector<double> deltas, const BallConfig& cfg) {
    std::sort(deltas.begin(), deltas.end());
    std::vector<BallEstimate> out;
    if (deltas.empty()) return out;
    std::vector<double> lo, hi;
    ball_window(fields, x0, deltas.back(), cfg, lo, hi);
    for (double d : deltas) {
        BallEstimate e = cc_ball_volume_in(fields, x0, d, lo, hi, cfg);
        if (!out.empty()) {
            const auto& prev = out.back().hit_mask;
            for (std::size_t c = 0; c < prev.size(); ++c) e.hit_mask[c] = e.hit_mask[c] | prev[c];
            finish(e, cfg);
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace achart
