#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "achart/adapted.hpp"
#include "achart/flows.hpp"
#include "achart/parallel.hpp"
#include "achart/zygmund.hpp"
#include "adapted_internal.hpp"

namespace achart {

namespace detail {

double operator_norm(const double* M, int n) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(M, n, n);
    return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
}

bool in_unit_ball(const double* x, int n, double r) {
    double s = 0;
    for (int k = 0; k < n; ++k) s += x[k] * x[k];
    return s <= r * r * (1 + 1e-12);
}

}  // namespace detail

bool Chart0::jet(const double* t, double* x, double* dx) const {
    Phi0Jet j = phi0_jet(fields, J0, x0, t, fields.domain(), tol);
    if (!j.ok) return false;
    const int n = fields.n();
    if (x)
        for (int k = 0; k < n; ++k) x[k] = j.x[k];
    if (dx)
        for (int k = 0; k < n * n; ++k) dx[k] = j.dx[k];
    return true;
}

bool Chart0::pullback(const double* t, double* Y) const {
    const int n = fields.n(), q = fields.q();
    std::vector<double> x(n), dx(n * n), X(q * n);
    if (!jet(t, x.data(), dx.data())) return false;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> D(dx.data(), n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(D);
    if (!(std::abs(lu.determinant()) > 0)) return false;
    fields.eval_all(x.data(), X.data());
    for (int j = 0; j < q; ++j) {
        Eigen::VectorXd v = lu.solve(Eigen::Map<const Eigen::VectorXd>(X.data() + j * n, n));
        for (int k = 0; k < n; ++k) Y[j * n + k] = v(k);
    }
    return true;
}

bool Chart0::A_at(const double* t, double* A) const {
    const int n = fields.n(), q = fields.q();
    std::vector<double> Y(q * n);
    if (!pullback(t, Y.data())) return false;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) A[j * n + k] = Y[J0[j] * n + k] - (j == k ? 1.0 : 0.0);
    return true;
}

namespace {

// Every lattice point of the closed ball maps through Phi0 with sup |A| <= 1/2.
bool probe_radius(const Chart0& c, double r, int half_cells) {
    const int n = c.fields.n();
    GridGeometry g = ball_lattice(std::vector<double>(n, 0.0), r, half_cells);
    std::vector<char> ok(g.size(), 1);
    parallel_for(0, g.size(), [&](std::size_t p) {
        std::vector<double> t(n), A(n * n);
        g.point(p, t.data());
        if (!detail::in_unit_ball(t.data(), n, r)) return;
        ok[p] = c.A_at(t.data(), A.data()) && detail::operator_norm(A.data(), n) <= 0.5;
    });
    for (char v : ok)
        if (!v) return false;
    return true;
}

// Flows from x0 succeed on every lattice point of B(r).
bool probe_reach(const Chart0& c, double r) {
    const int n = c.fields.n();
    GridGeometry g = ball_lattice(std::vector<double>(n, 0.0), r, 6);
    std::vector<char> ok(g.size(), 1);
    parallel_for(0, g.size(), [&](std::size_t p) {
        std::vector<double> t(n);
        g.point(p, t.data());
        if (detail::in_unit_ball(t.data(), n, r)) ok[p] = c.jet(t.data(), nullptr, nullptr);
    });
    for (char v : ok)
        if (!v) return false;
    return true;
}

}  // namespace

Chart0 build_phi0_chart(const FieldSet& fields, const std::vector<double>& x0, const Chart0Config& cfg) {
    const int n = fields.n(), q = fields.q();
    if (static_cast<int>(x0.size()) != n) throw ChartError("frame", "base point has the wrong dimension");
    Chart0 c;
    c.fields = fields;
    c.x0 = x0;
    c.tol = cfg.tol;
    try {
        c.J0 = select_frame(fields, x0.data(), cfg.zeta).J0;
    } catch (const std::exception& e) {
        throw ChartError("frame", e.what());
    }
    double r = cfg.radius;
    while (true) {
        c.radius_trace.push_back(r);
        if (probe_radius(c, r, cfg.probe_cells)) break;
        r *= 0.5;
        if (r < cfg.min_radius) {
            std::ostringstream os;
            os << "no radius down to " << cfg.min_radius << " keeps the flows inside the domain with sup |A| <= 1/2";
            throw ChartError("phi0", os.str());
        }
    }
    c.eta1 = r;

    c.lattice = ball_lattice(std::vector<double>(n, 0.0), r, cfg.half_cells);
    const std::size_t N = c.lattice.size();
    c.inside.assign(N, 0);
    c.Y = GridField(c.lattice, {q, n});
    c.A = GridField(c.lattice, {n, n});
    c.b = GridField(c.lattice, {q, n});
    c.c_tilde = GridField(c.lattice, {q, q, q});
    BracketTable table(fields);
    std::vector<double> norms(N, 0.0);
    parallel_for(0, N, [&](std::size_t p) {
        std::vector<double> t(n), Y(q * n), x(n), cc(q * q * q);
        c.lattice.point(p, t.data());
        if (!c.pullback(t.data(), Y.data())) return;
        c.inside[p] = detail::in_unit_ball(t.data(), n, r);
        Eigen::MatrixXd M(n, n);  // columns are the Y_J0 vectors
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) M(k, j) = Y[c.J0[j] * n + k];
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        for (int j = 0; j < q; ++j) {
            for (int k = 0; k < n; ++k) c.Y.at(j * n + k, p) = Y[j * n + k];
            Eigen::VectorXd bj = lu.solve(Eigen::Map<const Eigen::VectorXd>(Y.data() + j * n, n));
            for (int l = 0; l < n; ++l) c.b.at(j * n + l, p) = bj(l);
        }
        std::vector<double> A(n * n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                A[j * n + k] = Y[c.J0[j] * n + k] - (j == k ? 1.0 : 0.0);
                c.A.at(j * n + k, p) = A[j * n + k];
            }
        if (c.inside[p]) norms[p] = detail::operator_norm(A.data(), n);
        c.jet(t.data(), x.data(), nullptr);
        double res = 0;
        if (commutator_coeffs_at(fields, table, x.data(), CoeffMode::MinimalNorm, {}, cc.data(), &res))
            for (int i = 0; i < q * q * q; ++i) c.c_tilde.at(i, p) = cc[i];
    });
    for (double v : norms) c.a_sup = std::max(c.a_sup, v);
    return c;
}

ScaledChart choose_gamma_and_rescale(const Chart0& c, const ScaleConfig& cfg) {
    const int n = c.fields.n(), q = c.fields.q();
    ScaledChart out;
    out.gamma_max = std::min(c.eta1 / 5.0, 1.0);
    ZygmundConfig z;
    z.s = cfg.s0;
    z.center.assign(n, 0.0);
    z.radius = c.eta1;
    out.a_norm_eta1 = zygmund_norm(c.A, z).norm;
    z.radius = 5.0;
    out.lattice = ball_lattice(std::vector<double>(n, 0.0), 5.0, cfg.half_cells);
    const std::size_t N = out.lattice.size();
    std::ostringstream trace;
    for (int k = 0; k <= cfg.max_halvings; ++k) {
        const double gamma = std::ldexp(out.gamma_max, -k);
        // The corrector needs A_gamma on B(reach).
        if (!probe_reach(c, gamma * cfg.reach)) {
            out.trace.emplace_back(gamma, std::numeric_limits<double>::infinity());
            trace << " gamma " << gamma << ": flows fail on B(" << cfg.reach << ")";
            continue;
        }
        GridField Ag(out.lattice, {n, n});
        std::vector<char> ok(N, 1);
        parallel_for(0, N, [&](std::size_t p) {
            std::vector<double> t(n), A(n * n);
            out.lattice.point(p, t.data());
            for (double& v : t) v *= gamma;
            if (!c.A_at(t.data(), A.data())) {
                ok[p] = 0;
                return;
            }
            for (int i = 0; i < n * n; ++i) Ag.at(i, p) = A[i];
        });
        bool all = true;
        for (std::size_t p = 0; p < N; ++p) {
            std::vector<double> t(n);
            out.lattice.point(p, t.data());
            if (detail::in_unit_ball(t.data(), n, 5.0) && !ok[p]) all = false;
        }
        const double norm = all ? zygmund_norm(Ag, z).norm : std::numeric_limits<double>::infinity();
        out.trace.emplace_back(gamma, norm);
        trace << " gamma " << gamma << ": norm " << norm;
        if (norm <= cfg.gamma2) {
            out.gamma = gamma;
            out.K = 1.0 / gamma;
            out.a_norm = norm;
            out.A_gamma = std::move(Ag);
            break;
        }
    }
    if (out.gamma == 0.0) throw ChartError("gamma", "no dyadic gamma meets the threshold " + std::to_string(cfg.gamma2) + ";" + trace.str());
    out.scaling_bound = 91.0 * out.gamma * out.a_norm_eta1 * 1.1;
    out.scaling_ok = out.a_norm <= out.scaling_bound;

    out.c_gamma = GridField(out.lattice, {q, q, q});
    BracketTable table(c.fields);
    parallel_for(0, N, [&](std::size_t p) {
        std::vector<double> t(n), x(n), cc(q * q * q);
        out.lattice.point(p, t.data());
        for (double& v : t) v *= out.gamma;
        double res = 0;
        if (!c.jet(t.data(), x.data(), nullptr)) return;
        if (commutator_coeffs_at(c.fields, table, x.data(), CoeffMode::MinimalNorm, {}, cc.data(), &res))
            for (int i = 0; i < q * q * q; ++i) out.c_gamma.at(i, p) = out.gamma * cc[i];
    });
    return out;
}

}  // namespace achart
