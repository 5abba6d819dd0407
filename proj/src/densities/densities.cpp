#include "achart/densities.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "achart/parallel.hpp"
#include "achart/zygmund.hpp"

namespace achart {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double det_rows(const double* M, int n) { return Eigen::Map<const RowMat>(M, n, n).determinant(); }

double frame_density(const FieldSet& fields, const std::vector<int>& J, const FieldExpr& w, const double* x) {
    const int n = fields.n();
    std::vector<double> Z(n * n);
    for (int j = 0; j < n; ++j) fields.eval_field(J[j], x, Z.data() + j * n);
    return density_eval(w, Z.data(), n, x);
}

}  // namespace

double density_eval(const FieldExpr& weight, const double* Z, int n, const double* x) {
    return weight.eval(x) * std::abs(det_rows(Z, n));
}

double nu0_eval(const FieldSet& fields, const std::vector<int>& J0, const std::vector<Field>& Z, const double* p) {
    const int n = fields.n();
    if (static_cast<int>(Z.size()) != n) throw std::invalid_argument("nu0 needs n fields");
    const double base = wedge_det(fields, J0, p);
    if (base == 0.0) throw std::domain_error("X_J0 is singular at the evaluation point");
    std::vector<double> M(n * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) M[j * n + k] = Z[j][k].eval(p);
    return std::abs(det_rows(M.data(), n) / base);
}

std::vector<FieldExpr> divergence_rates(const FieldSet& fields, const FieldExpr& weight) {
    std::vector<FieldExpr> out;
    for (int j = 0; j < fields.q(); ++j) {
        FieldExpr div;
        for (int k = 0; k < fields.n(); ++k) div = div + differentiate(weight * fields.coeff(j, k), k).expr;
        out.push_back(div / weight);
    }
    return out;
}

DensityReport pullback_density(const AdaptedChart& ch, const FieldExpr& weight, const DensityConfig& cfg) {
    const FieldSet& fields = ch.chart0.fields;
    const int n = fields.n();
    const std::vector<int>& J0 = ch.chart0.J0;
    DensityReport rep;
    rep.lattice = ch.lattice;
    rep.inside = ch.inside;
    const std::size_t N = ch.lattice.size();
    rep.h = GridField(ch.lattice, {1});
    rep.h0 = GridField(ch.lattice, {1});
    rep.g_ratio = GridField(ch.lattice, {1});

    std::vector<double> id_res(N, 0.0), jac_res(N, 0.0), g_res(N, 0.0), g_abs(N, 0.0);
    std::vector<char> failed(N, 0);
    parallel_for(0, N, [&](std::size_t p) {
        std::vector<double> v(n), x(n), d(n * n), fd(n * n), xp(n), xm(n), M(n * n);
        ch.lattice.point(p, v.data());
        if (!ch.eval(v.data(), x.data(), d.data())) {
            failed[p] = ch.inside[p];
            return;
        }
        const double w = weight.eval(x.data());
        const double h = w * std::abs(det_rows(d.data(), n));
        for (int i = 0; i < n * n; ++i) M[i] = ch.K * ((i / n == i % n ? 1.0 : 0.0) + ch.A_final.at(i, p));
        const double detM = det_rows(M.data(), n);
        const double h0 = 1.0 / detM;
        rep.h.at(0, p) = h;
        rep.h0.at(0, p) = h0;
        rep.g_ratio.at(0, p) = h / h0;
        if (!ch.inside[p]) return;
        id_res[p] = std::abs(h0 * detM - 1.0);
        // Independent Jacobian from central differences of Phi.
        bool ok = true;
        for (int l = 0; l < n && ok; ++l) {
            std::vector<double> vp = v, vm = v;
            vp[l] += cfg.fd_step;
            vm[l] -= cfg.fd_step;
            ok = ch.eval(vp.data(), xp.data()) && ch.eval(vm.data(), xm.data());
            for (int k = 0; k < n; ++k) fd[k * n + l] = (xp[k] - xm[k]) / (2 * cfg.fd_step);
        }
        if (!ok) {
            failed[p] = 1;
            return;
        }
        const double h_fd = w * std::abs(det_rows(fd.data(), n));
        jac_res[p] = std::abs(h - h_fd) / std::max(std::abs(h), 1e-300);
        const double g = frame_density(fields, J0, weight, x.data());
        g_abs[p] = std::abs(g);
        g_res[p] = std::abs(h / h0 - g);
    });

    bool pos = true, neg = true, zero = true;
    double g_sup = 0;
    for (std::size_t p = 0; p < N; ++p) {
        if (!ch.inside[p]) continue;
        if (failed[p]) throw ChartError("compose", "Phi is not computable for the density pullback");
        const double h = rep.h.at(0, p);
        pos = pos && h > 0;
        neg = neg && h < 0;
        zero = zero && h == 0;
        rep.h0_identity_residual = std::max(rep.h0_identity_residual, id_res[p]);
        rep.h_jacobian_residual = std::max(rep.h_jacobian_residual, jac_res[p]);
        rep.g_residual = std::max(rep.g_residual, g_res[p]);
        g_sup = std::max(g_sup, g_abs[p]);
    }
    if (g_sup > 0) rep.g_residual /= g_sup;
    rep.sign_constant = pos || neg || zero;
    rep.vanishing = zero;

    rep.g_x0 = frame_density(fields, J0, weight, ch.chart0.x0.data());
    const std::size_t c = N / 2;
    rep.g_from_chart = rep.g_ratio.at(0, c);
    std::vector<int> first(n);
    for (int j = 0; j < n; ++j) first[j] = j;
    rep.nu_frame = frame_density(fields, first, weight, ch.chart0.x0.data());

    ZygmundConfig z;
    z.s = cfg.s;
    z.center.assign(n, 0.0);
    z.radius = 1.0;
    z.k_min = cfg.k_min;
    try {
        const ZygmundReport zr = zygmund_norm(rep.h, z);
        rep.h_norm = zr.norm;
        rep.h_exponent = zr.fitted_exponent;
    } catch (const std::invalid_argument&) {
        // The chart lattice is too coarse for a fit.
        rep.h_norm = rep.h_exponent = std::numeric_limits<double>::quiet_NaN();
    }

    const std::vector<FieldExpr> rates = divergence_rates(fields, weight);
    for (const auto& f : rates) {
        rep.f_j.push_back(f.str());
        double sup = 0;
        for (std::size_t p = 0; p < N; ++p) {
            if (!ch.inside[p]) continue;
            std::vector<double> x(n);
            for (int k = 0; k < n; ++k) x[k] = ch.phi.at(k, p);
            sup = std::max(sup, std::abs(f.eval(x.data())));
        }
        rep.f_j_sup.push_back(sup);
    }
    return rep;
}

VolumeTable volume_compare(const AdaptedChart& ch, const FieldExpr& weight, const BallConfig& cfg) {
    if (!(ch.radii.xi2 > 0)) throw std::invalid_argument("volume comparison needs the radius xi2 from verification");
    const FieldSet& fields = ch.chart0.fields;
    const int n = fields.n();
    VolumeTable t;
    t.xi2 = ch.radii.xi2;
    auto mass = [&](const BallEstimate& b) {
        double m = 0;
        std::vector<double> x(n);
        for (std::size_t p = 0; p < b.hit_mask.size(); ++p) {
            if (!b.hit_mask[p]) continue;
            b.window.point(p, x.data());
            m += weight.eval(x.data()) * b.cell_volume;
        }
        return m;
    };
    t.ball_j0 = cc_ball_volume(fields.subset(ch.chart0.J0), ch.chart0.x0, t.xi2, cfg);
    t.ball_x = cc_ball_volume(fields, ch.chart0.x0, t.xi2, cfg);
    t.degenerate = t.ball_j0.degenerate || t.ball_x.degenerate;
    t.nu_ball_j0 = mass(t.ball_j0);
    t.nu_ball_x = mass(t.ball_x);
    std::vector<int> first(n);
    for (int j = 0; j < n; ++j) first[j] = j;
    t.nu_frame = std::abs(frame_density(fields, first, weight, ch.chart0.x0.data()));
    for (const auto& J : increasing_tuples(fields.q(), n))
        t.max_wedge = std::max(t.max_wedge, std::abs(frame_density(fields, J, weight, ch.chart0.x0.data())));
    t.ratio_j0_x = t.nu_ball_j0 / t.nu_ball_x;
    t.ratio_x_frame = t.nu_ball_x / t.nu_frame;
    t.ratio_x_max_wedge = t.nu_ball_x / t.max_wedge;
    t.frame_over_max = t.nu_frame / t.max_wedge;
    return t;
}

}  // namespace achart
