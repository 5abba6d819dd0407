#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "achart/elliptic.hpp"
#include "achart/parallel.hpp"
#include "elliptic_internal.hpp"

namespace achart {

namespace {

// The data cutoff and the equation cutoff both equal 1 on B(D) and vanish outside B(D + kCutWidth).
// Wide erf transitions keep the Fourier tail of the cut fields below the grid resolution.
constexpr double kCutWidth = 2.5;
// Samples of A reach one unit past the cutoff support to feed the difference stencils.
constexpr double kSampleRadius = kCutWidth + 1.0;
// Compensation modes of the Laplacian inverse vanish on B(D + kShellIn).
constexpr double kShellIn = 0.25;
double cutoff(const double* t, int n, double D) { return radial_cutoff(t, n, D, D + kCutWidth, StepProfile::Erf); }

bool in_ball(const GridGeometry& g, std::size_t p, double r) {
    std::vector<double> x(g.dim());
    g.point(p, x.data());
    double s = 0;
    for (double v : x) s += v * v;
    return s <= r * r * (1 + 1e-12);
}

// Cut-off A and its first derivatives dA[(j*n + k)*n + l] = d_l (chi A)_jk.
// Derivatives of the samples are eighth-order central differences, used only where chi > 0.
void cut_data(const GridField& Araw, double D, GridField& A, GridField& dA) {
    const GridGeometry& g = Araw.geom;
    const int n = g.dim();
    const std::size_t N = g.size();
    A = GridField(g, {n, n});
    dA = GridField(g, {n, n, n});
    std::vector<double> t(n), grad(n);
    for (std::size_t p = 0; p < N; ++p) {
        g.point(p, t.data());
        const double chi = cutoff(t.data(), n, D);
        if (chi == 0.0) continue;
        radial_cutoff_gradient(t.data(), n, D, D + kCutWidth, grad.data(), StepProfile::Erf);
        for (int c = 0; c < n * n; ++c) {
            A.at(c, p) = chi * Araw.at(c, p);
            for (int l = 0; l < n; ++l) {
                const std::size_t st = g.stride(l);
                const double h = g.spacing[l];
                auto v = [&](int off) { return Araw.at(c, p + off * static_cast<std::ptrdiff_t>(st)); };
                const double d = (672.0 * (v(1) - v(-1)) - 168.0 * (v(2) - v(-2)) + 32.0 * (v(3) - v(-3)) - 3.0 * (v(4) - v(-4))) / (840.0 * h);
                dA.at(c * n + l, p) = chi * d + grad[l] * Araw.at(c, p);
            }
        }
    }
}

struct PsiParts {
    GridField dR;    // dR[k][l] = d R_k / d t_l
    GridField Ahat;  // Ahat[j][k]
    GridField psi;   // vector
    std::vector<double> det;  // det(I + dR) per point
};

PsiParts psi_parts(const Spectral& sp, const GridField& A, const GridField& dA, const GridField& R) {
    const GridGeometry& g = sp.geometry();
    const int n = g.dim();
    const std::size_t N = g.size();
    PsiParts out;
    out.dR = GridField(g, {n, n});
    for (int k = 0; k < n; ++k) {
        std::vector<double*> dst(n);
        for (int l = 0; l < n; ++l) dst[l] = out.dR.comp(k * n + l);
        sp.gradient(R.comp(k), dst);
    }
    // d2R[(k*n + a)*n + b] = d_a d_b R_k
    std::vector<std::vector<double>> d2R(n * n * n, std::vector<double>(N));
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                sp.second_derivative(R.comp(k), a, b, d2R[(k * n + a) * n + b].data());
                if (a != b) d2R[(k * n + b) * n + a] = d2R[(k * n + a) * n + b];
            }
    out.Ahat = GridField(g, {n, n});
    out.psi = GridField(g, {n});
    out.det.assign(N, 0.0);
    parallel_for(0, N, [&](std::size_t p) {
        auto a = [&](int j, int k) { return A.at(j * n + k, p); };
        auto da = [&](int j, int k, int l) { return dA.at((j * n + k) * n + l, p); };
        auto dr = [&](int k, int l) { return out.dR.at(k * n + l, p); };
        auto d2r = [&](int k, int x, int y) { return d2R[(k * n + x) * n + y][p]; };
        Eigen::MatrixXd J(n, n);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) J(k, l) = (k == l ? 1.0 : 0.0) + dr(k, l);
        out.det[p] = J.determinant();
        const Eigen::MatrixXd M = J.inverse();
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double v = dr(k, j) + a(j, k);
                for (int m = 0; m < n; ++m) v += a(j, m) * dr(k, m);
                out.Ahat.at(j * n + k, p) = v;
            }
        for (int k = 0; k < n; ++k) {
            double s = 0;
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    // d_l Ahat_jk by the product rule.
                    double d = d2r(k, l, j) + da(j, k, l);
                    for (int m = 0; m < n; ++m) d += da(j, m, l) * dr(k, m) + a(j, m) * d2r(k, l, m);
                    s += d * M(l, j);
                }
            out.psi.at(k, p) = s;
        }
    });
    return out;
}

double sup_on_ball(const GridField& f, double r) {
    double s = 0;
    for (std::size_t p = 0; p < f.npoints(); ++p) {
        if (!in_ball(f.geom, p, r)) continue;
        for (int c = 0; c < f.ncomp(); ++c) s = std::max(s, std::abs(f.at(c, p)));
    }
    return s;
}

// Sup over nodes t with |t + R(t)| <= r of the v-divergence of the assembled A_hat,
// from spectral t-derivatives of A_hat and the chain rule through (I + dR)^-1.
double assembled_divergence(const Spectral& sp, const PsiParts& parts, const GridField& R, double r) {
    const GridGeometry& g = sp.geometry();
    const int n = g.dim();
    const std::size_t N = g.size();
    std::vector<std::vector<double>> d(n * n * n, std::vector<double>(N));
    for (int c = 0; c < n * n; ++c) {
        std::vector<double*> dst(n);
        for (int l = 0; l < n; ++l) dst[l] = d[c * n + l].data();
        sp.gradient(parts.Ahat.comp(c), dst);
    }
    double worst = 0;
    std::vector<double> t(n);
    Eigen::MatrixXd J(n, n);
    for (std::size_t p = 0; p < N; ++p) {
        g.point(p, t.data());
        double r2 = 0;
        for (int k = 0; k < n; ++k) r2 += (t[k] + R.at(k, p)) * (t[k] + R.at(k, p));
        if (r2 > r * r) continue;
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) J(k, l) = (k == l ? 1.0 : 0.0) + parts.dR.at(k * n + l, p);
        const Eigen::MatrixXd M = J.inverse();
        for (int k = 0; k < n; ++k) {
            double s = 0;
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) s += d[(j * n + k) * n + l][p] * M(l, j);
            worst = std::max(worst, std::abs(s));
        }
    }
    return worst;
}

int default_factor(int n) { return n == 1 ? 8 : (n == 2 ? 4 : 2); }

double divergence_check(const CorrectorSolution& sol, const CorrectorConfig& cfg) {
    const int n = sol.geom.dim();
    CorrectorMap map(sol, cfg.upsample);
    const double hv = cfg.check_spacing;
    const int half = static_cast<int>(std::ceil(cfg.check_radius / hv)) + 2;
    GridGeometry lat;
    lat.extents.assign(n, 2 * half + 1);
    lat.spacing.assign(n, hv);
    lat.origin.assign(n, -half * hv);
    const std::size_t N = lat.size();
    std::vector<double> Ah(N * n * n, std::numeric_limits<double>::quiet_NaN());
    parallel_for(0, N, [&](std::size_t p) {
        std::vector<double> v(n);
        lat.point(p, v.data());
        double r2 = 0;
        for (double x : v) r2 += x * x;
        if (std::sqrt(r2) > cfg.check_radius + 2.5 * hv * std::sqrt(double(n))) return;
        map.A_hat(v.data(), Ah.data() + p * n * n);
    });
    double worst = 0;
    std::vector<int> idx(n);
    for (std::size_t p = 0; p < N; ++p) {
        if (!in_ball(lat, p, cfg.check_radius)) continue;
        lat.unravel(p, idx.data());
        for (int k = 0; k < n; ++k) {
            double div = 0;
            for (int j = 0; j < n; ++j) {
                const std::size_t st = lat.stride(j);
                auto val = [&](int off) { return Ah[(p + off * static_cast<std::ptrdiff_t>(st)) * n * n + j * n + k]; };
                div += (-val(2) + 8.0 * val(1) - 8.0 * val(-1) + val(-2)) / (12.0 * hv);
            }
            if (!std::isfinite(div)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, std::abs(div));
        }
    }
    return worst;
}

}  // namespace

GridField corrector_sample(const MatrixFn& A, int n, const CorrectorConfig& cfg) {
    GridGeometry g = GridGeometry::periodic_centred(n, cfg.box_side, cfg.grid);
    GridField out(g, {n, n});
    std::vector<double> t(n), a(n * n);
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.point(p, t.data());
        double r2 = 0;
        for (double v : t) r2 += v * v;
        if (std::sqrt(r2) > cfg.D + kSampleRadius) continue;
        A(t.data(), a.data());
        for (int c = 0; c < n * n; ++c) out.at(c, p) = a[c];
    }
    return out;
}

CorrectorSolution solve_corrector(const MatrixFn& A, int n, const CorrectorConfig& cfg) {
    return solve_corrector(corrector_sample(A, n, cfg), cfg);
}

CorrectorSolution solve_corrector(const GridField& Ain, const CorrectorConfig& cfg) {
    const GridGeometry& g = Ain.geom;
    const int n = g.dim();
    if (Ain.ncomp() != n * n) throw std::invalid_argument("solve_corrector: A must be an n x n matrix field");
    const double half = 0.5 * g.extents[0] * g.spacing[0];
    if (half < cfg.D + kSampleRadius) throw std::invalid_argument("solve_corrector: box too small for the cutoffs");
    const std::size_t N = g.size();

    CorrectorSolution sol;
    sol.geom = g;
    sol.gamma2_estimate = cfg.gamma2;
    GridField dA;
    cut_data(Ain, cfg.D, sol.A, dA);
    std::vector<double> t(n);
    std::vector<double> psi_cut(N);
    for (std::size_t p = 0; p < N; ++p) {
        g.point(p, t.data());
        psi_cut[p] = cutoff(t.data(), n, cfg.D);
    }
    sol.R = GridField(g, {n});
    if (cfg.gamma2 > 0) {
        ZygmundConfig zc;
        zc.s = cfg.s0;
        zc.center.assign(n, 0.0);
        zc.radius = cfg.D + 1.0;
        sol.a_norm = zygmund_norm(sol.A, zc).norm;
        if (sol.a_norm > cfg.gamma2) {
            sol.reason = "A norm " + std::to_string(sol.a_norm) + " above threshold " + std::to_string(cfg.gamma2);
            sol.dR = GridField(g, {n, n});
            return sol;
        }
    }

    Spectral sp(g);
    LaplaceInverse lap(sp, cfg.D + kShellIn, half - 0.25, StepProfile::Erf);

    int increases = 0;
    double prev = std::numeric_limits<double>::infinity();
    PsiParts parts;
    std::vector<double> lapR(N), f(N);
    for (int it = 1; it <= cfg.max_iter; ++it) {
        parts = psi_parts(sp, sol.A, dA, sol.R);
        const double res = sup_on_ball(parts.psi, cfg.D);
        sol.iterations = it;
        sol.residual_history.push_back(res);
        sol.residual_psi = res;
        if (!std::isfinite(res)) {
            sol.reason = "non-finite residual";
            break;
        }
        if (res < cfg.tol) {
            sol.converged = true;
            break;
        }
        increases = res > prev ? increases + 1 : 0;
        prev = res;
        if (increases >= 3) {
            sol.reason = "non-contraction: residual increased 3 times, last " + std::to_string(res) +
                         "; try a smaller gamma";
            break;
        }
        if (it == cfg.max_iter) {
            sol.reason = "iteration limit reached, residual " + std::to_string(res);
            break;
        }
        // R <- -P(Psi(A, R) - lap R) with the Laplacian right inverse P.
        GridField Rn(g, {n});
        for (int k = 0; k < n; ++k) {
            sp.laplacian(sol.R.comp(k), lapR.data());
            for (std::size_t p = 0; p < N; ++p) f[p] = -psi_cut[p] * (parts.psi.at(k, p) - lapR[p]);
            lap.solve(f.data(), Rn.comp(k));
        }
        sol.R = std::move(Rn);
    }
    sol.dR = parts.dR;
    sol.det_dH_min = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < N; ++p) {
        if (!in_ball(g, p, cfg.D)) continue;
        sol.det_dH_min = std::min(sol.det_dH_min, parts.det[p]);
    }
    sol.ahat_sup = sup_on_ball(parts.Ahat, cfg.D);
    sol.r_sup = sup_on_ball(sol.R, cfg.D);
    sol.dr_sup = sup_on_ball(sol.dR, cfg.D);
    if (sol.converged) {
        sol.div_residual = divergence_check(sol, cfg);
        sol.div_assembled = assembled_divergence(sp, parts, sol.R, cfg.check_radius);
        if (sol.det_dH_min < 0.5) {
            sol.converged = false;
            sol.reason = "det dH below 1/2: " + std::to_string(sol.det_dH_min);
        }
    } else {
        sol.div_residual = std::numeric_limits<double>::infinity();
    }
    return sol;
}

CorrectorMap::CorrectorMap(const CorrectorSolution& sol, int factor) : n_(sol.geom.dim()) {
    if (factor <= 0) factor = default_factor(n_);
    Spectral sp(sol.geom);
    const int comps = n_ + n_ * n_;
    std::vector<double> vals;
    GridGeometry ug = sp.upsampled_geometry(factor);
    vals.reserve(ug.size() * comps);
    auto push = [&](const double* src) {
        auto u = sp.upsample(src, factor);
        vals.insert(vals.end(), u.begin(), u.end());
    };
    for (int k = 0; k < n_; ++k) push(sol.R.comp(k));
    for (int c = 0; c < n_ * n_; ++c) push(sol.dR.comp(c));
    interp_ = PeriodicInterpolator(ug, std::move(vals), comps);
    a_interp_ = PeriodicInterpolator(sol.geom, sol.A.values, n_ * n_);
}

void CorrectorMap::jet(const double* t, double* R, double* dR, double* A) const {
    if (R || dR) {
        std::vector<double> all(interp_.ncomp());
        interp_.eval(t, all.data());
        if (R)
            for (int k = 0; k < n_; ++k) R[k] = all[k];
        if (dR)
            for (int c = 0; c < n_ * n_; ++c) dR[c] = all[n_ + c];
    }
    if (A) a_interp_.eval(t, A);
}

void CorrectorMap::H(const double* t, double* v) const {
    std::vector<double> R(n_);
    jet(t, R.data(), nullptr, nullptr);
    for (int k = 0; k < n_; ++k) v[k] = t[k] + R[k];
}

bool CorrectorMap::H_inverse(const double* v, double* t, int* iterations) const {
    std::vector<double> R(n_), dR(n_ * n_);
    for (int k = 0; k < n_; ++k) t[k] = v[k];
    Eigen::MatrixXd J(n_, n_);
    Eigen::VectorXd F(n_);
    for (int it = 1; it <= 20; ++it) {
        jet(t, R.data(), dR.data(), nullptr);
        for (int k = 0; k < n_; ++k) {
            F(k) = t[k] + R[k] - v[k];
            for (int l = 0; l < n_; ++l) J(k, l) = (k == l ? 1.0 : 0.0) + dR[k * n_ + l];
        }
        const Eigen::VectorXd step = J.partialPivLu().solve(F);
        double size = 0;
        for (int k = 0; k < n_; ++k) {
            t[k] -= step(k);
            size = std::max(size, std::abs(step(k)));
        }
        if (iterations) *iterations = it;
        if (!std::isfinite(size)) return false;
        if (size < 1e-12) return true;
    }
    return false;
}

bool CorrectorMap::A_hat(const double* v, double* out) const {
    std::vector<double> t(n_), dR(n_ * n_), A(n_ * n_);
    const bool ok = H_inverse(v, t.data());
    jet(t.data(), nullptr, dR.data(), A.data());
    for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) {
            double s = dR[k * n_ + j] + A[j * n_ + k];
            for (int l = 0; l < n_; ++l) s += A[j * n_ + l] * dR[k * n_ + l];
            out[j * n_ + k] = s;
        }
    return ok;
}

Gamma2Sweep gamma2_sweep(const MatrixFn& profile, int n, const std::vector<int>& grids, const CorrectorConfig& cfg,
                         double eps0, int steps) {
    Gamma2Sweep out;
    out.grids = grids;
    for (std::size_t gi = 0; gi < grids.size(); ++gi) {
        CorrectorConfig c = cfg;
        c.grid = grids[gi];
        c.gamma2 = 0;
        GridField base = corrector_sample(profile, n, c);
        if (gi == 0) {
            GridField cut, dcut;
            cut_data(base, c.D, cut, dcut);
            ZygmundConfig zc;
            zc.s = cfg.s0;
            zc.center.assign(n, 0.0);
            zc.radius = cfg.D + 1.0;
            out.profile_norm = zygmund_norm(cut, zc).norm;
        }
        double best = 0;
        std::vector<double> tried;
        std::vector<char> success;
        for (int k = 0; k < steps; ++k) {
            const double eps = eps0 * std::ldexp(1.0, k);
            GridField A = base;
            for (double& v : A.values) v *= eps;
            CorrectorSolution s = solve_corrector(A, c);
            const bool ok = s.converged && s.div_residual < 1e-6;
            tried.push_back(eps);
            success.push_back(ok);
            if (!ok) break;
            best = eps;
        }
        out.eps_max.push_back(best);
        out.tried.push_back(tried);
        out.success.push_back(success);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double e : out.eps_max) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    out.within_factor_2 = lo > 0 && hi <= 2.0 * lo;
    return out;
}

}  // namespace achart
