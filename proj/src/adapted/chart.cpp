#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "achart/adapted.hpp"
#include "achart/parallel.hpp"
#include "achart/zygmund.hpp"
#include "adapted_internal.hpp"

namespace achart {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

bool AdaptedChart::eval(const double* v, double* x, double* dphi, double* Yhat) const {
    const int n = dim(), q = chart0.fields.q();
    std::vector<double> t(n), dR(n * n), s(n), xs(n), dx(n * n);
    if (!map->H_inverse(v, t.data())) return false;
    map->jet(t.data(), nullptr, dR.data(), nullptr);
    for (int k = 0; k < n; ++k) s[k] = gamma * t[k];
    if (!chart0.jet(s.data(), xs.data(), dx.data())) return false;
    if (x)
        for (int k = 0; k < n; ++k) x[k] = xs[k];
    Eigen::Map<const RowMat> DX(dx.data(), n, n), DR(dR.data(), n, n);
    const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) + DR;
    if (dphi) {
        // dPhi = dPhi0(gamma t) * gamma * (I + dR(t))^-1
        const Eigen::MatrixXd D = gamma * DX * J.inverse();
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) dphi[k * n + l] = D(k, l);
    }
    if (Yhat) {
        // Yhat_j = K (I + dR(t)) dPhi0(gamma t)^-1 X_j(Phi0(gamma t))
        std::vector<double> X(q * n);
        chart0.fields.eval_all(xs.data(), X.data());
        Eigen::PartialPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(DX)};
        for (int j = 0; j < q; ++j) {
            const Eigen::VectorXd y = K * (J * lu.solve(Eigen::Map<const Eigen::VectorXd>(X.data() + j * n, n)));
            for (int k = 0; k < n; ++k) Yhat[j * n + k] = y(k);
        }
    }
    return true;
}

bool AdaptedChart::inverse(const double* x, double* v) const {
    const int n = dim();
    std::vector<double> zero(n, 0.0), x0v(n), dphi(n * n), y(n);
    if (!eval(zero.data(), x0v.data(), dphi.data())) return false;
    Eigen::VectorXd r(n);
    for (int k = 0; k < n; ++k) r(k) = x[k] - x0v[k];
    Eigen::VectorXd V = Eigen::Map<const RowMat>(dphi.data(), n, n).partialPivLu().solve(r);
    for (int it = 0; it < 40; ++it) {
        for (int k = 0; k < n; ++k) v[k] = V(k);
        // Newton steps outside B(1.5) leave the region where the corrector map is defined.
        if (!detail::in_unit_ball(v, n, 1.5)) return false;
        if (!eval(v, y.data(), dphi.data())) return false;
        for (int k = 0; k < n; ++k) r(k) = y[k] - x[k];
        const Eigen::VectorXd step = Eigen::Map<const RowMat>(dphi.data(), n, n).partialPivLu().solve(r);
        V -= step;
        if (!std::isfinite(step.norm())) return false;
        if (step.norm() < 1e-13 * (1.0 + V.norm())) {
            for (int k = 0; k < n; ++k) v[k] = V(k);
            return true;
        }
    }
    return false;
}

AdaptedChart build_full_chart(const FieldSet& fields, const std::vector<double>& x0, const ChartConfig& cfg) {
    AdaptedChart ch;
    ch.chart0 = build_phi0_chart(fields, x0, cfg.chart0);
    ScaleConfig sc = cfg.scale;
    sc.reach = std::max(sc.reach, cfg.corrector.D + 3.5);
    ch.scaled = choose_gamma_and_rescale(ch.chart0, sc);
    ch.gamma = ch.scaled.gamma;
    ch.K = ch.scaled.K;
    const int n = fields.n(), q = fields.q();

    const Chart0& c0 = ch.chart0;
    const double gamma = ch.gamma;
    CorrectorConfig cc = cfg.corrector;
    cc.s0 = sc.s0;
    GridField Ag = corrector_sample(
        [&](const double* t, double* A) {
            std::vector<double> s(n);
            for (int k = 0; k < n; ++k) s[k] = gamma * t[k];
            if (!c0.A_at(s.data(), A))
                for (int i = 0; i < n * n; ++i) A[i] = std::numeric_limits<double>::quiet_NaN();
        },
        n, cc);
    for (double v : Ag.values)
        if (!std::isfinite(v)) throw ChartError("corrector", "A_gamma is not computable on the corrector support");
    ch.corrector = solve_corrector(Ag, cc);
    if (!ch.corrector.converged) throw ChartError("corrector", ch.corrector.reason);
    ch.map = std::make_shared<CorrectorMap>(ch.corrector, cc.upsample);

    ch.lattice = ball_lattice(std::vector<double>(n, 0.0), 1.0, cfg.half_cells);
    const std::size_t N = ch.lattice.size();
    ch.inside.assign(N, 0);
    ch.phi = GridField(ch.lattice, {n});
    ch.Yhat = GridField(ch.lattice, {q, n});
    ch.A_final = GridField(ch.lattice, {n, n});
    ch.b_hat = GridField(ch.lattice, {q, n});
    std::vector<char> ok(N, 1);
    std::vector<double> norms(N, 0.0), chi(N, 0.0), bres(N, 0.0);
    parallel_for(0, N, [&](std::size_t p) {
        std::vector<double> v(n), x(n), Y(q * n), t(n), X(q * n);
        ch.lattice.point(p, v.data());
        const bool in = detail::in_unit_ball(v.data(), n, 1.0);
        if (!ch.eval(v.data(), x.data(), nullptr, Y.data())) {
            ok[p] = !in;
            return;
        }
        ch.inside[p] = in;
        for (int k = 0; k < n; ++k) ch.phi.at(k, p) = x[k];
        std::vector<double> A(n * n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                A[j * n + k] = Y[c0.J0[j] * n + k] / ch.K - (j == k ? 1.0 : 0.0);
                ch.A_final.at(j * n + k, p) = A[j * n + k];
            }
        Eigen::MatrixXd M(n, n), XJ(n, n);  // columns: Yhat_J0 and X_J0 at Phi(v)
        fields.eval_all(x.data(), X.data());
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                M(k, j) = Y[c0.J0[j] * n + k];
                XJ(k, j) = X[c0.J0[j] * n + k];
            }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M), lx(XJ);
        for (int j = 0; j < q; ++j) {
            for (int k = 0; k < n; ++k) ch.Yhat.at(j * n + k, p) = Y[j * n + k];
            const Eigen::VectorXd bj = lu.solve(Eigen::Map<const Eigen::VectorXd>(Y.data() + j * n, n));
            const Eigen::VectorXd ba = lx.solve(Eigen::Map<const Eigen::VectorXd>(X.data() + j * n, n));
            for (int l = 0; l < n; ++l) ch.b_hat.at(j * n + l, p) = bj(l);
            if (in) bres[p] = std::max(bres[p], (bj - ba).cwiseAbs().maxCoeff());
        }
        if (in) {
            norms[p] = detail::operator_norm(A.data(), n);
            ch.map->H_inverse(v.data(), t.data());
            double r2 = 0;
            for (double a : t) r2 += a * a;
            chi[p] = gamma * std::sqrt(r2);
        }
    });
    for (std::size_t p = 0; p < N; ++p) {
        if (!ok[p]) throw ChartError("compose", "Phi is not computable on B(1)");
        ch.a_final_sup = std::max(ch.a_final_sup, norms[p]);
        ch.radii.chi = std::max(ch.radii.chi, chi[p]);
        ch.b_residual = std::max(ch.b_residual, bres[p]);
    }
    return ch;
}

}  // namespace achart
