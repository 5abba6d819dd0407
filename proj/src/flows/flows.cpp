#include "achart/flows.hpp"

#include <cmath>

namespace achart {

namespace {

FlowTrace to_trace(OdeResult&& r, const std::vector<double>& x0, int n) {
    FlowTrace tr;
    tr.x0 = x0;
    tr.r = std::move(r.ts);
    tr.points = std::move(r.ys);
    tr.end.assign(r.y.begin(), r.y.begin() + n);
    tr.r_reached = r.t;
    tr.exited = r.exited;
    tr.failed = r.failed;
    tr.reason = r.reason;
    tr.step_count = r.steps;
    tr.error_estimate = r.error_estimate;
    return tr;
}

OdeOptions ode_options(const FlowOptions& opt) {
    OdeOptions o;
    o.tol = opt.tol;
    o.record = opt.record;
    o.max_steps = opt.max_steps;
    return o;
}

}  // namespace

FlowTrace exp_map(const FieldSet& fields, const std::vector<double>& a, const std::vector<double>& x0,
                  const Domain& U, const FlowOptions& opt, double r_end) {
    const int n = fields.n(), q = fields.q();
    if (static_cast<int>(a.size()) != q || static_cast<int>(x0.size()) != n)
        throw std::invalid_argument("exp_map: control or point dimension mismatch");
    std::vector<int> active;
    for (int j = 0; j < q; ++j)
        if (a[j] != 0.0) active.push_back(j);
    std::vector<double> buf(n);
    auto rhs = [&](double, const double* y, double* dy) {
        for (int k = 0; k < n; ++k) dy[k] = 0;
        for (int j : active) {
            fields.eval_field(j, y, buf.data());
            for (int k = 0; k < n; ++k) dy[k] += a[j] * buf[k];
        }
    };
    auto inside = [&](const double* y) { return U.contains(y); };
    FlowTrace tr = to_trace(integrate(rhs, x0, 0.0, r_end, ode_options(opt), inside), x0, n);
    tr.controls = a;
    return tr;
}

FlowTrace exp_map(const FieldSet& fields, const ControlFn& a, const std::vector<double>& x0, const Domain& U,
                  const FlowOptions& opt, double r_end) {
    const int n = fields.n(), q = fields.q();
    if (static_cast<int>(x0.size()) != n) throw std::invalid_argument("exp_map: point dimension mismatch");
    std::vector<double> buf(static_cast<std::size_t>(q * n)), ctl(q);
    auto rhs = [&](double r, const double* y, double* dy) {
        a(r, ctl.data());
        fields.eval_all(y, buf.data());
        for (int k = 0; k < n; ++k) {
            double s = 0;
            for (int j = 0; j < q; ++j) s += ctl[j] * buf[j * n + k];
            dy[k] = s;
        }
    };
    auto inside = [&](const double* y) { return U.contains(y); };
    return to_trace(integrate(rhs, x0, 0.0, r_end, ode_options(opt), inside), x0, n);
}

FlowTrace exp_map_piecewise(const FieldSet& fields, const std::vector<std::vector<double>>& pieces, double scale,
                            const std::vector<double>& x0, const Domain& U, const FlowOptions& opt) {
    const int m = static_cast<int>(pieces.size());
    FlowTrace total;
    total.x0 = x0;
    total.end = x0;
    if (opt.record) {
        total.r.push_back(0.0);
        total.points.push_back(x0);
    }
    for (int i = 0; i < m; ++i) {
        std::vector<double> a = pieces[i];
        for (double& v : a) v *= scale;
        FlowTrace seg = exp_map(fields, a, total.end, U, opt, 1.0 / m);
        if (opt.record)
            for (std::size_t s = 1; s < seg.r.size(); ++s) {
                total.r.push_back(static_cast<double>(i) / m + seg.r[s]);
                total.points.push_back(seg.points[s]);
            }
        total.end = seg.end;
        total.r_reached = static_cast<double>(i) / m + seg.r_reached;
        total.step_count += seg.step_count;
        total.error_estimate += seg.error_estimate;
        if (!seg.ok()) {
            total.exited = seg.exited;
            total.failed = seg.failed;
            total.reason = seg.reason;
            break;
        }
    }
    return total;
}

std::vector<double> embed_controls(int q, const std::vector<int>& J0, const double* t) {
    std::vector<double> a(q, 0.0);
    for (std::size_t i = 0; i < J0.size(); ++i) a[J0[i]] = t[i];
    return a;
}

std::vector<double> phi0(const FieldSet& fields, const std::vector<int>& J0, const std::vector<double>& x0,
                         const double* t, const Domain& U, double tol) {
    FlowOptions opt;
    opt.tol = tol;
    opt.record = false;
    FlowTrace tr = exp_map(fields, embed_controls(fields.q(), J0, t), x0, U, opt);
    if (!tr.ok()) throw FlowError("phi0: " + tr.reason);
    return tr.end;
}

Phi0Jet phi0_jet(const FieldSet& fields, const std::vector<int>& J0, const std::vector<double>& x0, const double* t,
                 const Domain& U, double tol) {
    const int n = fields.n();
    if (static_cast<int>(J0.size()) != n) throw std::invalid_argument("phi0_jet: J0 must have n entries");
    // State: x (n), then V (n x n) with V[k*n + l] = d x_k / d t_l.
    std::vector<double> y(static_cast<std::size_t>(n + n * n), 0.0);
    for (int k = 0; k < n; ++k) y[k] = x0[k];
    std::vector<double> X(n), Jac(static_cast<std::size_t>(n * n)), A(static_cast<std::size_t>(n * n));
    auto rhs = [&](double, const double* s, double* ds) {
        const double* V = s + n;
        double* dV = ds + n;
        for (int k = 0; k < n; ++k) ds[k] = 0;
        for (int i = 0; i < n * n; ++i) A[i] = 0;
        for (int i = 0; i < n; ++i) {
            fields.eval_field(J0[i], s, X.data());
            for (int k = 0; k < n; ++k) {
                ds[k] += t[i] * X[k];
                dV[k * n + i] = X[k];  // explicit dependence on t_i
            }
            if (t[i] != 0.0) {
                fields.eval_jacobian(J0[i], s, Jac.data());
                for (int p = 0; p < n * n; ++p) A[p] += t[i] * Jac[p];
            }
        }
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                double acc = 0;
                for (int m = 0; m < n; ++m) acc += A[k * n + m] * V[m * n + l];
                dV[k * n + l] += acc;
            }
    };
    auto inside = [&](const double* s) { return U.contains(s); };
    OdeOptions opt;
    opt.tol = tol;
    OdeResult r = integrate(rhs, y, 0.0, 1.0, opt, inside);
    Phi0Jet jet;
    jet.x.assign(r.y.begin(), r.y.begin() + n);
    jet.dx.assign(r.y.begin() + n, r.y.end());
    jet.ok = r.ok();
    jet.reason = r.reason;
    return jet;
}

}  // namespace achart
