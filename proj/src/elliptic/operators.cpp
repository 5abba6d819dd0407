#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "achart/elliptic.hpp"
#include "elliptic_internal.hpp"

namespace achart {

int e_components(int n) { return n * (n - 1) / 2 + 1; }

int curl_slot(int n, int j, int k) {
    if (j >= k) throw std::invalid_argument("curl_slot: need j < k");
    int s = 0;
    for (int a = 0; a < j; ++a) s += n - 1 - a;
    return s + (k - j - 1);
}

namespace detail {

void derivative(const Spectral* sp, const GridGeometry& g, DiffMethod m, const double* in, int axis, double* out) {
    if (m == DiffMethod::Spectral) {
        sp->derivative(in, axis, out);
        return;
    }
    const std::size_t N = g.size();
    const std::size_t st = g.stride(axis);
    const int ext = g.extents[axis];
    const double h = g.spacing[axis];
    for (std::size_t p = 0; p < N; ++p) {
        const int i = static_cast<int>((p / st) % ext);
        auto at = [&](int off) {
            int j = (i + off) % ext;
            if (j < 0) j += ext;
            return in[p + (static_cast<std::ptrdiff_t>(j) - i) * static_cast<std::ptrdiff_t>(st)];
        };
        out[p] = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
    }
}

std::size_t centre_index(const GridGeometry& g) {
    std::vector<int> idx(g.dim());
    for (int d = 0; d < g.dim(); ++d) {
        const double u = -g.origin[d] / g.spacing[d];
        idx[d] = static_cast<int>(std::lround(u));
        if (std::abs(u - idx[d]) > 1e-9 || idx[d] < 0 || idx[d] >= g.extents[d])
            throw std::invalid_argument("grid has no point at the origin");
    }
    return g.ravel(idx.data());
}

std::vector<std::vector<double>> shell_directions(int n) {
    std::vector<std::vector<double>> dirs;
    // All nonzero vectors in {-1, 0, 1}^n, normalised.
    const int total = static_cast<int>(std::pow(3, n));
    for (int t = 0; t < total; ++t) {
        int r = t;
        double norm = 0;
        std::vector<double> d(n);
        for (int a = 0; a < n; ++a) {
            d[a] = r % 3 - 1;
            r /= 3;
            norm += d[a] * d[a];
        }
        if (norm == 0) continue;
        for (double& x : d) x /= std::sqrt(norm);
        dirs.push_back(d);
    }
    return dirs;
}

std::vector<std::vector<double>> shell_bumps(const GridGeometry& g, double shell_radius, double bump_radius,
                                             StepProfile profile) {
    const int n = g.dim();
    std::vector<std::vector<double>> out;
    std::vector<double> x(n), y(n);
    for (const auto& d : shell_directions(n)) {
        std::vector<double> b(g.size());
        for (std::size_t p = 0; p < g.size(); ++p) {
            g.point(p, x.data());
            for (int a = 0; a < n; ++a) y[a] = x[a] - shell_radius * d[a];
            b[p] = radial_cutoff(y.data(), n, 0.0, bump_radius, profile);
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<std::vector<double>> shell_modes(const GridGeometry& g, double r_in, double r_out, StepProfile profile) {
    const int n = g.dim();
    std::vector<std::vector<double>> out(n + 1, std::vector<double>(g.size()));
    std::vector<double> x(n);
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.point(p, x.data());
        const double S = 1.0 - radial_cutoff(x.data(), n, r_in, r_out, profile);
        out[0][p] = S;
        for (int d = 0; d < n; ++d) {
            const double L = g.extents[d] * g.spacing[d];
            out[1 + d][p] = S * std::sin(2.0 * M_PI * x[d] / L);
        }
    }
    return out;
}

std::vector<double> min_norm_inverse(const std::vector<double>& M, int rows, int cols) {
    Eigen::MatrixXd A(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) A(r, c) = M[r * cols + c];
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    Eigen::MatrixXd P = cod.pseudoInverse();
    std::vector<double> out(static_cast<std::size_t>(cols) * rows);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) out[c * rows + r] = P(c, r);
    return out;
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

namespace {

void check_vector(const GridField& A, int comps, const char* what) {
    if (A.ncomp() != comps) throw std::invalid_argument(std::string(what) + ": wrong component count");
}

}  // namespace

GridField apply_E(const GridField& A, DiffMethod method) {
    const int n = A.geom.dim();
    check_vector(A, n, "apply_E");
    std::unique_ptr<Spectral> sp;
    if (method == DiffMethod::Spectral) sp = std::make_unique<Spectral>(A.geom);
    const std::size_t N = A.npoints();
    // dA[k*n + l] = d A_k / d t_l
    std::vector<std::vector<double>> dA(n * n, std::vector<double>(N));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) detail::derivative(sp.get(), A.geom, method, A.comp(k), l, dA[k * n + l].data());
    GridField out(A.geom, {e_components(n)});
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            double* o = out.comp(curl_slot(n, j, k));
            for (std::size_t p = 0; p < N; ++p) o[p] = dA[k * n + j][p] - dA[j * n + k][p];
        }
    double* div = out.comp(e_components(n) - 1);
    for (int j = 0; j < n; ++j)
        for (std::size_t p = 0; p < N; ++p) div[p] += dA[j * n + j][p];
    return out;
}

GridField apply_E_adjoint(const GridField& G, DiffMethod method) {
    const int n = G.geom.dim();
    check_vector(G, e_components(n), "apply_E_adjoint");
    std::unique_ptr<Spectral> sp;
    if (method == DiffMethod::Spectral) sp = std::make_unique<Spectral>(G.geom);
    const std::size_t N = G.npoints();
    GridField out(G.geom, {n});
    std::vector<double> tmp(N);
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            const double* c = G.comp(curl_slot(n, j, k));
            // curl_jk = d_j A_k - d_k A_j: adjoint sends it to -d_j c in slot k and +d_k c in slot j.
            detail::derivative(sp.get(), G.geom, method, c, j, tmp.data());
            for (std::size_t p = 0; p < N; ++p) out.at(k, p) -= tmp[p];
            detail::derivative(sp.get(), G.geom, method, c, k, tmp.data());
            for (std::size_t p = 0; p < N; ++p) out.at(j, p) += tmp[p];
        }
    const double* div = G.comp(e_components(n) - 1);
    for (int k = 0; k < n; ++k) {
        detail::derivative(sp.get(), G.geom, method, div, k, tmp.data());
        for (std::size_t p = 0; p < N; ++p) out.at(k, p) -= tmp[p];
    }
    return out;
}

GridGeometry elliptic_box(int n, double D, int count) { return GridGeometry::periodic_centred(n, 4.0 * D, count); }

namespace {

// E* (-Laplacian)^-1 applied to data components.
GridField e_star_inverse(const Spectral& sp, const std::vector<std::vector<double>>& data) {
    const GridGeometry& g = sp.geometry();
    GridField v(g, {static_cast<int>(data.size())});
    for (std::size_t c = 0; c < data.size(); ++c) {
        sp.solve_poisson(data[c].data(), v.comp(static_cast<int>(c)));
        for (std::size_t p = 0; p < v.npoints(); ++p) v.at(static_cast<int>(c), p) = -v.at(static_cast<int>(c), p);
    }
    return apply_E_adjoint(v, DiffMethod::Spectral);
}

// dB(0) as a row-major n x n matrix, dB[k*n + l] = d B_k / d t_l.
std::vector<double> gradient_at(const Spectral& sp, const GridField& B, std::size_t centre) {
    const int n = B.geom.dim();
    std::vector<double> dB(n * n);
    std::vector<double> tmp(B.npoints());
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            sp.derivative(B.comp(k), l, tmp.data());
            dB[k * n + l] = tmp[centre];
        }
    return dB;
}

std::vector<double> sym_tracefree(const std::vector<double>& dB, int n) {
    std::vector<double> out;
    double tr = 0;
    for (int a = 0; a < n; ++a) tr += dB[a * n + a];
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            if (a < b) out.push_back(0.5 * (dB[a * n + b] + dB[b * n + a]));
            else if (a < n - 1) out.push_back(dB[a * n + a] - tr / n);
        }
    return out;
}

}  // namespace

EInverse::EInverse(const GridGeometry& geom, const RightInverseConfig& cfg)
    : cfg_(cfg), sp_(std::make_unique<Spectral>(geom)) {
    const int n = geom.dim();
    const int m = e_components(n);
    for (int d = 0; d < n; ++d)
        if (std::abs(geom.extents[d] * geom.spacing[d] - 4.0 * cfg.D) > 1e-9 * cfg.D)
            throw std::invalid_argument("right_inverse_P: grid must span a periodic box of side 4D");
    centre_ = detail::centre_index(geom);
    const std::size_t N = geom.size();
    cutoff_.resize(N);
    std::vector<double> x(n);
    for (std::size_t p = 0; p < N; ++p) {
        geom.point(p, x.data());
        cutoff_[p] = radial_cutoff(x.data(), n, cfg.inner * cfg.D, cfg.support * cfg.D);
    }
    bumps_ = detail::shell_bumps(geom, 1.5 * cfg.D, 0.4 * cfg.D);
    const int nb = static_cast<int>(bumps_.size());
    const int ns = n * (n + 1) / 2 - 1;
    rows_ = m + ns;
    cols_ = m * nb;
    std::vector<double> M(static_cast<std::size_t>(rows_) * cols_, 0.0);
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < nb; ++i) {
            std::vector<std::vector<double>> d(m, std::vector<double>(N, 0.0));
            d[c] = bumps_[i];
            GridField Bi = e_star_inverse(*sp_, d);
            const int col = c * nb + i;
            M[c * cols_ + col] = detail::mean(bumps_[i]);
            const auto s = sym_tracefree(gradient_at(*sp_, Bi, centre_), n);
            for (int r = 0; r < ns; ++r) M[(m + r) * cols_ + col] = s[r];
        }
    matrix_ = M;
    pinv_ = detail::min_norm_inverse(M, rows_, cols_);
}

EInverse::~EInverse() = default;

const GridGeometry& EInverse::geometry() const { return sp_->geometry(); }

RightInverseResult EInverse::apply(const GridField& g) const {
    const GridGeometry& geom = sp_->geometry();
    if (!(g.geom == geom)) throw std::invalid_argument("right_inverse_P: grid mismatch");
    const int n = geom.dim();
    const int m = e_components(n);
    check_vector(g, m, "right_inverse_P");
    const std::size_t N = geom.size();
    std::vector<std::vector<double>> data(m, std::vector<double>(N));
    for (std::size_t p = 0; p < N; ++p)
        for (int c = 0; c < m; ++c) data[c][p] = cutoff_[p] * g.at(c, p);
    RightInverseResult res;
    for (int c = 0; c < m; ++c) res.mean_removed.push_back(detail::mean(data[c]));

    GridField B = e_star_inverse(*sp_, data);
    const int ns = rows_ - m;
    const int nb = static_cast<int>(bumps_.size());
    // Adds the compensation for the given constraint data; returns the least-squares residual.
    auto compensate = [&](const std::vector<double>& rhs) {
        std::vector<double> coef(cols_, 0.0);
        for (int c = 0; c < cols_; ++c)
            for (int r = 0; r < rows_; ++r) coef[c] += pinv_[c * rows_ + r] * rhs[r];
        double scale = 1, resid = 0;
        for (int r = 0; r < rows_; ++r) {
            double acc = 0;
            for (int c = 0; c < cols_; ++c) acc += matrix_[r * cols_ + c] * coef[c];
            resid = std::max(resid, std::abs(acc - rhs[r]));
            scale = std::max(scale, std::abs(rhs[r]));
        }
        std::vector<std::vector<double>> comp(m, std::vector<double>(N, 0.0));
        for (int c = 0; c < m; ++c)
            for (int i = 0; i < nb; ++i) {
                const double w = coef[c * nb + i];
                for (std::size_t p = 0; p < N; ++p) comp[c][p] += w * bumps_[i][p];
            }
        GridField Bc = e_star_inverse(*sp_, comp);
        for (std::size_t k = 0; k < B.values.size(); ++k) B.values[k] += Bc.values[k];
        return resid / scale;
    };
    std::vector<double> rhs(rows_);
    for (int c = 0; c < m; ++c) rhs[c] = -res.mean_removed[c];
    auto s0 = sym_tracefree(gradient_at(*sp_, B, centre_), n);
    for (int r = 0; r < ns; ++r) rhs[m + r] = -s0[r];
    res.compensation_residual = compensate(rhs);
    res.mean_flag = res.compensation_residual > 1e-10;
    // A second pass removes the rounding left in the gradient constraint.
    std::fill(rhs.begin(), rhs.end(), 0.0);
    s0 = sym_tracefree(gradient_at(*sp_, B, centre_), n);
    for (int r = 0; r < ns; ++r) rhs[m + r] = -s0[r];
    compensate(rhs);
    for (int k = 0; k < n; ++k) {
        const double b0 = B.at(k, centre_);
        for (std::size_t p = 0; p < N; ++p) B.at(k, p) -= b0;
    }
    double v0 = 0, g0 = 0;
    for (int k = 0; k < n; ++k) v0 += B.at(k, centre_) * B.at(k, centre_);
    for (double v : gradient_at(*sp_, B, centre_)) g0 += v * v;
    res.value_at_0 = std::sqrt(v0);
    res.gradient_at_0 = std::sqrt(g0);
    res.B = std::move(B);
    return res;
}

RightInverseResult right_inverse_P(const GridField& g, const RightInverseConfig& cfg) {
    return EInverse(g.geom, cfg).apply(g);
}

LaplaceInverse::LaplaceInverse(const Spectral& sp, double shell_inner, double shell_outer, StepProfile profile)
    : sp_(&sp) {
    const GridGeometry& g = sp.geometry();
    const int n = g.dim();
    centre_ = detail::centre_index(g);
    bumps_ = detail::shell_modes(g, shell_inner, shell_outer, profile);
    const int nb = static_cast<int>(bumps_.size());
    rows_ = n + 1;
    std::vector<double> M(static_cast<std::size_t>(rows_) * nb);
    std::vector<double> tmp(g.size());
    for (int i = 0; i < nb; ++i) {
        std::vector<double> u(g.size());
        sp.solve_poisson(bumps_[i].data(), u.data());
        M[0 * nb + i] = detail::mean(bumps_[i]);
        means_.push_back(M[0 * nb + i]);
        for (int d = 0; d < n; ++d) {
            sp.derivative(u.data(), d, tmp.data());
            M[(1 + d) * nb + i] = tmp[centre_];
        }
        responses_.push_back(std::move(u));
    }
    pinv_ = detail::min_norm_inverse(M, rows_, nb);
}

double LaplaceInverse::solve(const double* f, double* u) const {
    const GridGeometry& g = sp_->geometry();
    const int n = g.dim();
    const std::size_t N = g.size();
    std::vector<double> rhs(rows_), tmp(N);
    rhs[0] = -sp_->solve_poisson(f, u);
    for (int d = 0; d < n; ++d) {
        sp_->derivative(u, d, tmp.data());
        rhs[1 + d] = -tmp[centre_];
    }
    const int nb = static_cast<int>(bumps_.size());
    double mean_left = -rhs[0];
    for (int i = 0; i < nb; ++i) {
        double c = 0;
        for (int r = 0; r < rows_; ++r) c += pinv_[i * rows_ + r] * rhs[r];
        for (std::size_t p = 0; p < N; ++p) u[p] += c * responses_[i][p];
        mean_left += c * means_[i];
    }
    const double u0 = u[centre_];
    for (std::size_t p = 0; p < N; ++p) u[p] -= u0;
    double worst = std::abs(mean_left);
    for (int d = 0; d < n; ++d) {
        sp_->derivative(u, d, tmp.data());
        worst = std::max(worst, std::abs(tmp[centre_]));
    }
    return worst;
}

}  // namespace achart
