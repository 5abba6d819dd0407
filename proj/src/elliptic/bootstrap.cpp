#include <cmath>
#include <stdexcept>

#include "achart/elliptic.hpp"

namespace achart {

namespace {

int matrix_dim(const GridField& A) {
    if (A.rank != 2 || A.comp_shape[0] != A.comp_shape[1]) throw std::invalid_argument("expected a square matrix field");
    return A.comp_shape[0];
}

// D[l](j, i) = d_l Ahat_ji at point p.
double dA(const std::vector<GridField>& d, int l, int n, int j, int i, std::size_t p) { return d[l].at(j * n + i, p); }

}  // namespace

GridField gamma_term(const GridField& Ahat, const std::vector<GridField>& dAhat) {
    const int n = matrix_dim(Ahat);
    const int m = e_components(n);
    GridField out(Ahat.geom, {m, n});
    std::vector<double> P(n * n);
    for (std::size_t p = 0; p < Ahat.npoints(); ++p)
        for (int i = 0; i < n; ++i) {
            // P = Ahat * D_i^T with (D_i)_{kl} = d_l Ahat_ki; Gamma_(j,k),i = P_jk - P_kj.
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = 0;
                    for (int l = 0; l < n; ++l) s += Ahat.at(j * n + l, p) * dA(dAhat, l, n, k, i, p);
                    P[j * n + k] = s;
                }
            for (int j = 0; j < n; ++j)
                for (int k = j + 1; k < n; ++k) out.at(curl_slot(n, j, k) * n + i, p) = P[j * n + k] - P[k * n + j];
        }
    return out;
}

GridField gamma_term_termwise(const GridField& Ahat, const std::vector<GridField>& dAhat) {
    const int n = matrix_dim(Ahat);
    const int m = e_components(n);
    GridField out(Ahat.geom, {m, n});
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
            for (int i = 0; i < n; ++i) {
                double* o = out.comp(curl_slot(n, j, k) * n + i);
                for (int l = n - 1; l >= 0; --l)
                    for (std::size_t p = 0; p < Ahat.npoints(); ++p) {
                        const double a = Ahat.at(j * n + l, p) * dA(dAhat, l, n, k, i, p);
                        const double b = Ahat.at(k * n + l, p) * dA(dAhat, l, n, j, i, p);
                        o[p] += a - b;
                    }
            }
    return out;
}

GridField chat_term(const GridField& Ahat, const GridField& c) {
    const int n = matrix_dim(Ahat);
    if (c.ncomp() != n * n * n) throw std::invalid_argument("chat_term: c must have shape {n, n, n}");
    GridField out(Ahat.geom, {e_components(n), n});
    for (std::size_t p = 0; p < Ahat.npoints(); ++p)
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                for (int i = 0; i < n; ++i) {
                    double s = 0;
                    for (int l = 0; l < n; ++l)
                        s += c.at((j * n + k) * n + l, p) * ((l == i ? 1.0 : 0.0) + Ahat.at(l * n + i, p));
                    out.at(curl_slot(n, j, k) * n + i, p) = s;
                }
    return out;
}

GridField commutator_grid(const CommutatorTensor& t) {
    const int n = static_cast<int>(t.frame.size());
    if (n == 0) throw std::invalid_argument("commutator_grid: frame-mode tensor required");
    GridField out(t.geom, {n, n, n});
    for (std::size_t p = 0; p < t.geom.size(); ++p)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    out.at((j * n + k) * n + l, p) = t.at(p, t.frame[j], t.frame[k], t.frame[l]);
    return out;
}

BootstrapReport bootstrap_check(const GridField& Ahat, const GridField& c, const BootstrapConfig& cfg) {
    const int n = matrix_dim(Ahat);
    if (!(c.geom == Ahat.geom)) throw std::invalid_argument("bootstrap_check: A_hat and c must share a lattice");
    BootstrapReport rep;
    std::vector<GridField> d;
    for (int l = 0; l < n; ++l) d.push_back(fd_derivative(Ahat, l));
    GridField gam = gamma_term(Ahat, d);
    GridField gam2 = gamma_term_termwise(Ahat, d);
    for (std::size_t k = 0; k < gam.values.size(); ++k)
        rep.gamma_agreement = std::max(rep.gamma_agreement, std::abs(gam.values[k] - gam2.values[k]));
    GridField ch = chat_term(Ahat, c);

    std::vector<double> centre = cfg.center.empty() ? std::vector<double>(n, 0.0) : cfg.center;
    std::vector<double> x(n);
    for (std::size_t p = 0; p < Ahat.npoints(); ++p) {
        Ahat.geom.point(p, x.data());
        double r2 = 0;
        for (int a = 0; a < n; ++a) r2 += (x[a] - centre[a]) * (x[a] - centre[a]);
        if (std::sqrt(r2) > cfg.radius) continue;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    const int s = curl_slot(n, j, k);
                    const double e = d[j].at(k * n + i, p) - d[k].at(j * n + i, p);
                    const double r = e + gam.at(s * n + i, p) - ch.at(s * n + i, p);
                    rep.residual_sup = std::max(rep.residual_sup, std::abs(r));
                }
            double div = 0;
            for (int j = 0; j < n; ++j) div += d[j].at(j * n + i, p);
            rep.div_sup = std::max(rep.div_sup, std::abs(div));
        }
    }
    rep.residual_sup = std::max(rep.residual_sup, rep.div_sup);

    ZygmundConfig za;
    za.s = cfg.s;
    za.center = centre;
    za.radius = cfg.radius;
    za.k_min = cfg.k_min;
    za.k_max = cfg.k_max;
    ZygmundConfig zc = za;
    zc.s = cfg.s_c;
    try {
        const ZygmundReport ra = zygmund_norm(Ahat, za);
        const ZygmundReport rc = zygmund_norm(c, zc);
        int ma;
        double sa;
        split_order(cfg.s, ma, sa);
        rep.window_cap = ma + 2.0;
        rep.exponent_ahat = ra.fitted_exponent;
        rep.exponent_chat = rc.fitted_exponent;
        rep.required = std::min(rep.exponent_chat + 1.0, rep.window_cap) - cfg.slack;
        rep.pass = rep.exponent_ahat >= rep.required;
        if (ra.resolved_smooth) rep.note = "A_hat resolved smooth at the estimator window";
    } catch (const std::invalid_argument& e) {
        rep.insufficient_scales = true;
        rep.note = e.what();
    }
    return rep;
}

}  // namespace achart
