#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "achart/adapted.hpp"
#include "achart/adapted_norm.hpp"
#include "achart/parallel.hpp"
#include "achart/rng.hpp"
#include "achart/zygmund.hpp"
#include "adapted_internal.hpp"

namespace achart {

const VerifyItem* VerificationReport::find(const std::string& id) const {
    for (const auto& it : items)
        if (it.id == id) return &it;
    return nullptr;
}

bool VerificationReport::pass_range(char first, char last) const {
    for (const auto& it : items)
        if (it.id.size() == 1 && it.id[0] >= first && it.id[0] <= last && !it.pass) return false;
    return true;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VerifyItem item(const std::string& id, const std::string& desc, bool pass, double value, double threshold,
                std::string note = {}) {
    return VerifyItem{id, desc, pass, value, threshold, std::move(note)};
}

GridField slice(const GridField& f, int first, int count) {
    GridField out(f.geom, {count});
    for (int c = 0; c < count; ++c)
        for (std::size_t p = 0; p < f.npoints(); ++p) out.at(c, p) = f.at(first + c, p);
    return out;
}

// Largest dyadic radius xi_start * 2^-k whose sampled control ball stays inside Phi(B(1)).
double dyadic_inside_radius(const AdaptedChart& ch, const FieldSet& fields, double start, const VerifyConfig& cfg) {
    const int n = ch.dim();
    for (int k = 0; k < cfg.xi_levels; ++k) {
        const double xi = std::ldexp(start, -k);
        std::vector<char> in(cfg.xi_samples, 0);
        parallel_for(0, static_cast<std::size_t>(cfg.xi_samples), [&](std::size_t i) {
            std::vector<double> end, v(n);
            if (!ball_sample(fields, ch.chart0.x0, xi, cfg.ball, i, end)) return;
            in[i] = ch.inverse(end.data(), v.data()) && detail::in_unit_ball(v.data(), n, 1.0);
        });
        bool all = true;
        for (char c : in) all = all && c;
        if (all) return xi;
    }
    return 0.0;
}

}  // namespace

VerificationReport verify_theorem(AdaptedChart& ch, const VerifyConfig& cfg) {
    VerificationReport rep;
    const FieldSet& fields = ch.chart0.fields;
    const int n = fields.n(), q = fields.q();
    const std::vector<int>& J0 = ch.chart0.J0;
    const std::size_t N = ch.lattice.size();
    std::vector<std::size_t> pts;
    for (std::size_t p = 0; p < N; ++p)
        if (ch.inside[p]) pts.push_back(p);
    auto phi_at = [&](std::size_t p) {
        std::vector<double> x(n);
        for (int k = 0; k < n; ++k) x[k] = ch.phi.at(k, p);
        return x;
    };

    // (a), (b): wedges at the image points.
    {
        const auto tuples = increasing_tuples(q, n);
        double min_ratio = kInf, sup_ratio = 0;
        for (std::size_t p : pts) {
            const auto x = phi_at(p);
            const double d0 = wedge_det(fields, J0, x.data());
            min_ratio = std::min(min_ratio, std::abs(d0) / spanning_threshold(fields, x.data()));
            if (d0 == 0) {
                sup_ratio = kInf;
                continue;
            }
            for (const auto& J : tuples) sup_ratio = std::max(sup_ratio, std::abs(wedge_det(fields, J, x.data()) / d0));
        }
        rep.items.push_back(item("a", "X_J0 wedge nonzero on Phi(B(1))", min_ratio >= 1.0, min_ratio, 1.0,
                                 "value: min |wedge| over the spanning threshold"));
        rep.items.push_back(item("b", "sup over J of |wedge X_J / wedge X_J0| bounded", sup_ratio <= cfg.wedge_bound,
                                 sup_ratio, cfg.wedge_bound));
        rep.items.push_back(item("c", "X_J0 ball is an open submanifold (rank n on the sampled image)",
                                 rep.items[0].pass, min_ratio, 1.0));
    }

    // (d), (e): Jacobian sign and injectivity.
    {
        std::vector<double> dets(N, 0.0);
        parallel_for(0, pts.size(), [&](std::size_t i) {
            std::vector<double> v(n), d(n * n);
            ch.lattice.point(pts[i], v.data());
            if (!ch.eval(v.data(), nullptr, d.data())) {
                dets[pts[i]] = std::numeric_limits<double>::quiet_NaN();
                return;
            }
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> D(d.data(), n, n);
            dets[pts[i]] = D.determinant();
        });
        double lo = kInf, hi = -kInf;
        for (std::size_t p : pts) {
            lo = std::min(lo, dets[p]);
            hi = std::max(hi, dets[p]);
        }
        const bool same_sign = (lo > 0 && hi > 0) || (lo < 0 && hi < 0);
        const double min_abs = same_sign ? std::min(std::abs(lo), std::abs(hi)) : 0.0;
        rep.items.push_back(item("d", "Phi(B(1)) open: det dPhi of one sign and nonzero", same_sign && std::isfinite(min_abs),
                                 min_abs, 0.0, "value: min |det dPhi|"));

        double min_ratio = kInf, round_trip = 0;
        for (int i = 0; i < cfg.injectivity_pairs && pts.size() > 1; ++i) {
            auto g = stream(cfg.seed, static_cast<std::uint64_t>(i));
            const std::size_t a = pts[static_cast<std::size_t>(uniform01(g) * pts.size())];
            const std::size_t b = pts[static_cast<std::size_t>(uniform01(g) * pts.size())];
            if (a == b) continue;
            const auto va = ch.lattice.point(a), vb = ch.lattice.point(b);
            const auto xa = phi_at(a), xb = phi_at(b);
            double dv = 0, dx = 0;
            for (int k = 0; k < n; ++k) {
                dv += (va[k] - vb[k]) * (va[k] - vb[k]);
                dx += (xa[k] - xb[k]) * (xa[k] - xb[k]);
            }
            min_ratio = std::min(min_ratio, std::sqrt(dx / dv));
        }
        const int trips = std::min<int>(20, static_cast<int>(pts.size()));
        for (int i = 0; i < trips; ++i) {
            const std::size_t p = pts[static_cast<std::size_t>(i) * pts.size() / trips];
            const auto v = ch.lattice.point(p);
            const auto x = phi_at(p);
            std::vector<double> w(n);
            if (!ch.inverse(x.data(), w.data())) {
                round_trip = kInf;
                continue;
            }
            for (int k = 0; k < n; ++k) round_trip = std::max(round_trip, std::abs(w[k] - v[k]));
        }
        rep.items.push_back(item("e", "Phi is injective on sampled pairs and Newton-invertible",
                                 min_ratio > 0 && round_trip < 1e-8, min_ratio, 0.0,
                                 "value: min |Phi(v) - Phi(w)| / |v - w|; round trip " + std::to_string(round_trip)));
    }

    // (f): control-ball radii inside Phi(B(1)).
    if (cfg.radii) {
        const FieldSet fj0 = fields.subset(J0);
        ch.radii.xi1 = dyadic_inside_radius(ch, fj0, cfg.xi_start, cfg);
        ch.radii.xi2 = ch.radii.xi1 > 0 ? dyadic_inside_radius(ch, fields, ch.radii.xi1, cfg) : 0.0;
        std::ostringstream os;
        os << "xi1 " << ch.radii.xi1 << ", xi2 " << ch.radii.xi2 << ", chi " << ch.radii.chi;
        rep.items.push_back(item("f", "B_X(x0, xi2) and B_XJ0(x0, xi1) sampled inside Phi(B(1))",
                                 ch.radii.xi1 > 0 && ch.radii.xi2 > 0, ch.radii.xi2, 0.0, os.str()));
    }
    rep.radii = ch.radii;

    // (g): base point.
    {
        std::vector<double> zero(n, 0.0), x(n);
        double err = kInf;
        if (ch.eval(zero.data(), x.data())) {
            err = 0;
            for (int k = 0; k < n; ++k) err = std::max(err, std::abs(x[k] - ch.chart0.x0[k]));
        }
        rep.items.push_back(item("g", "Phi(0) = x0", err <= 1e-9, err, 1e-9));
    }

    // (h): Yhat_J0 = K (I + A_hat) grad with A_hat from the corrector map.
    {
        std::vector<double> worst(pts.size(), 0.0);
        parallel_for(0, pts.size(), [&](std::size_t i) {
            std::vector<double> v(n), Ah(n * n);
            ch.lattice.point(pts[i], v.data());
            if (!ch.map->A_hat(v.data(), Ah.data())) {
                worst[i] = kInf;
                return;
            }
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const double lhs = ch.Yhat.at(J0[j] * n + k, pts[i]) / ch.K;
                    const double rhs = (j == k ? 1.0 : 0.0) + Ah[j * n + k];
                    worst[i] = std::max(worst[i], std::abs(lhs - rhs));
                }
        });
        double w = 0;
        for (double v : worst) w = std::max(w, v);
        rep.items.push_back(item("h", "Yhat_J0 = K (I + A) grad with K >= 1", w < 1e-6 && ch.K >= 1.0, w, 1e-6,
                                 "K = " + std::to_string(ch.K)));
    }

    // (i): A(0) = 0 and sup |A| <= 1/2.
    {
        const std::size_t c = N / 2;
        double a0 = 0;
        for (int i = 0; i < n * n; ++i) a0 = std::max(a0, std::abs(ch.A_final.at(i, c)));
        rep.items.push_back(item("i", "A(0) = 0 and sup |A| <= 1/2 on B(1)", a0 < 1e-10 && ch.a_final_sup <= 0.5,
                                 ch.a_final_sup, 0.5, "|A(0)| = " + std::to_string(a0)));
    }

    // (j): regularity of Yhat_j.
    if (!cfg.s_list.empty()) {
        bool pass = true;
        for (double s : cfg.s_list) {
            ZygmundConfig z;
            z.s = s + 1.0;
            z.center.assign(n, 0.0);
            z.radius = 1.0;
            z.k_min = cfg.exponent_k_min;
            z.k_max = cfg.exponent_k_max;
            z.noise = cfg.exponent_noise * std::max(1.0, ch.K);
            int m;
            double sig;
            split_order(s + 1.0, m, sig);
            const double required = std::min(s + 1.0, m + 2.0) - cfg.exponent_slack;
            for (int j = 0; j < q; ++j) {
                ZygmundReport r;
                try {
                    r = zygmund_norm(slice(ch.Yhat, j * n, n), z);
                } catch (const std::invalid_argument&) {
                    // Chart lattice too coarse for the requested scales.
                    r.norm = r.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
                }
                rep.exponents.push_back({s, j, r.norm, r.fitted_exponent, required, r.resolved_smooth});
                pass = pass && r.fitted_exponent >= required;
            }
        }
        double worst = kInf;
        for (const auto& e : rep.exponents) worst = std::min(worst, e.exponent - e.required);
        rep.items.push_back(item("j", "Yhat_j fitted exponent >= s + 1 (window capped)", pass, worst, 0.0,
                                 "value: smallest margin over s and j"));
        // Coefficient regularity of the input fields near x0, for the gain table.
        double r_in = kInf;
        for (std::size_t p : pts) {
            const auto v = ch.lattice.point(p);
            double r2 = 0;
            for (double a : v) r2 += a * a;
            if (r2 < 0.81) continue;
            const auto x = phi_at(p);
            double d = 0;
            for (int k = 0; k < n; ++k) d += (x[k] - ch.chart0.x0[k]) * (x[k] - ch.chart0.x0[k]);
            r_in = std::min(r_in, std::sqrt(d));
        }
        ZygmundConfig zi;
        zi.s = cfg.s_list.front();
        zi.center = ch.chart0.x0;
        zi.radius = r_in;
        for (int j = 0; j < q && std::isfinite(r_in) && r_in > 0; ++j) {
            double e = kInf;
            for (int k = 0; k < n; ++k) e = std::min(e, zygmund_norm(fields.coeff(j, k), n, zi).fitted_exponent);
            rep.input_exponents.push_back(e);
        }
    }

    // (k), (l): norm equivalence on the corpus.
    if (cfg.norms) {
        AdaptedConfig ac;
        ac.s = cfg.norm_s;
        ac.max_pairs = 2000;
        ac.seed = cfg.seed;
        ac.region = [&ch, n](const double* x) {
            std::vector<double> v(n);
            return ch.inverse(x, v.data()) && detail::in_unit_ball(v.data(), n, 1.0);
        };
        for (int i = 0; i < cfg.norm_base_points && i < static_cast<int>(pts.size()); ++i) {
            // The centre, then points spread over the lattice.
            const std::size_t p = i == 0 ? N / 2 : pts[static_cast<std::size_t>(i) * pts.size() / (cfg.norm_base_points + 1)];
            ac.base_points.push_back(phi_at(p));
        }
        const FieldSet fj0 = fields.subset(J0);
        ZygmundConfig z;
        z.s = cfg.norm_s;
        z.center.assign(n, 0.0);
        z.radius = 1.0;
        bool pass_k = true, pass_l = true;
        double worst_k = 1.0, worst_l = 0.0;
        for (const auto& text : cfg.corpus) {
            const FieldExpr f = parse_field_expr(text, n);
            GridField fp(ch.lattice, {1});
            for (std::size_t p = 0; p < N; ++p) {
                const auto x = phi_at(p);
                fp.at(0, p) = f.eval(x.data());
            }
            EquivalenceRow row;
            row.function = text;
            row.euclid = zygmund_norm(fp, z).norm;
            row.adapted_j0 = x_adapted_zygmund(fj0, f, ac).value;
            row.adapted_x = x_adapted_zygmund(fields, f, ac).value;
            row.ratio_j0 = row.euclid / row.adapted_j0;
            row.ratio_x = row.euclid / row.adapted_x;
            for (double r : {row.ratio_j0, row.ratio_x}) {
                const double spread = std::max(r, 1.0 / r);
                worst_k = std::max(worst_k, spread);
                pass_k = pass_k && std::isfinite(spread) && spread <= cfg.equivalence_bound;
            }
            worst_l = std::max(worst_l, row.ratio_j0);
            pass_l = pass_l && row.ratio_j0 <= cfg.equivalence_bound;
            rep.equivalence.push_back(row);
        }
        rep.items.push_back(item("k", "Euclidean and adapted norms comparable on the corpus", pass_k, worst_k,
                                 cfg.equivalence_bound, "value: largest max(r, 1/r) over ratios"));
        rep.items.push_back(item("l", "norm of f o Phi bounded by the X_J0-adapted norm of f", pass_l, worst_l,
                                 cfg.equivalence_bound));
    }
    return rep;
}

}  // namespace achart
