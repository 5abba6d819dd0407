#include "achart/vectorfield.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "achart/parallel.hpp"

namespace achart {

BracketResult lie_bracket(const Field& X, const Field& Y) {
    const int n = static_cast<int>(X.size());
    if (static_cast<int>(Y.size()) != n) throw std::invalid_argument("lie_bracket: dimension mismatch");
    BracketResult out;
    out.field.resize(n);
    std::vector<std::vector<Derivative>> dX(n), dY(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            dX[k].push_back(differentiate(X[k], i));
            dY[k].push_back(differentiate(Y[k], i));
        }
    for (int k = 0; k < n; ++k) {
        // Summing the two halves separately keeps [Y,X] = -[X,Y] bit-for-bit.
        FieldExpr plus, minus;
        for (int i = 0; i < n; ++i) {
            FieldExpr a = X[i] * dY[k][i].expr, b = Y[i] * dX[k][i].expr;
            plus = plus + a;
            minus = minus + b;
            double v = 1;
            out.weak = out.weak || (dY[k][i].weak && !(a.is_constant(&v) && v == 0));
            out.weak = out.weak || (dX[k][i].weak && !(b.is_constant(&v) && v == 0));
        }
        FieldExpr acc = plus - minus;
        out.field[k] = acc;
    }
    return out;
}

namespace {

Eigen::MatrixXd frame_matrix(const FieldSet& fields, const std::vector<int>& J, const double* p) {
    const int n = fields.n();
    Eigen::MatrixXd M(n, static_cast<int>(J.size()));
    std::vector<double> v(n);
    for (std::size_t c = 0; c < J.size(); ++c) {
        fields.eval_field(J[c], p, v.data());
        for (int k = 0; k < n; ++k) M(k, static_cast<int>(c)) = v[k];
    }
    return M;
}

}  // namespace

double wedge_det(const FieldSet& fields, const std::vector<int>& J, const double* p) {
    if (static_cast<int>(J.size()) != fields.n()) throw std::invalid_argument("wedge_det: tuple must have n entries");
    return frame_matrix(fields, J, p).determinant();
}

double spanning_threshold(const FieldSet& fields, const double* p) {
    std::vector<int> all(fields.q());
    for (int j = 0; j < fields.q(); ++j) all[j] = j;
    Eigen::MatrixXd M = frame_matrix(fields, all, p);
    double maxnorm = M.colwise().norm().maxCoeff();
    return 1e-12 * std::pow(maxnorm, fields.n());
}

double wedge_ratio(const std::vector<int>& J, const std::vector<int>& J0, const FieldSet& fields, const double* p) {
    double d0 = wedge_det(fields, J0, p);
    double thr = spanning_threshold(fields, p);
    if (std::fabs(d0) < thr || d0 == 0) throw SingularFrame("wedge_ratio: J0 frame is singular at the point", std::fabs(d0));
    return wedge_det(fields, J, p) / d0;
}

std::vector<std::vector<int>> increasing_tuples(int q, int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) t[i] = i;
    if (n > q) return out;
    for (;;) {
        out.push_back(t);
        int i = n - 1;
        while (i >= 0 && t[i] == q - n + i) --i;
        if (i < 0) break;
        ++t[i];
        for (int k = i + 1; k < n; ++k) t[k] = t[k - 1] + 1;
    }
    return out;
}

FrameSelection select_frame(const FieldSet& fields, const double* x0, double zeta) {
    if (!(zeta > 0 && zeta <= 1)) throw std::invalid_argument("select_frame: zeta must be in (0,1]");
    auto tuples = increasing_tuples(fields.q(), fields.n());
    std::vector<double> dets;
    double best = 0;
    for (const auto& J : tuples) {
        dets.push_back(wedge_det(fields, J, x0));
        best = std::max(best, std::fabs(dets.back()));
    }
    const double thr = spanning_threshold(fields, x0);
    if (best == 0 || best < thr) throw NotSpanning("fields do not span at x0");
    FrameSelection sel;
    sel.max_abs_det = best;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        if (std::fabs(dets[i]) >= zeta * best) {
            sel.J0 = tuples[i];
            sel.det_J0 = dets[i];
            break;
        }
    }
    sel.zeta_achieved = std::fabs(sel.det_J0) / best;
    for (std::size_t i = 0; i < tuples.size(); ++i) sel.all_ratios[tuples[i]] = dets[i] / sel.det_J0;
    return sel;
}

BracketTable::BracketTable(const FieldSet& fields) : q(fields.q()) {
    brackets.resize(static_cast<std::size_t>(q * q));
    compiled.resize(static_cast<std::size_t>(q * q * fields.n()));
    for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j) {
            BracketResult b = lie_bracket(fields.field(i), fields.field(j));
            weak = weak || b.weak;
            brackets[static_cast<std::size_t>(i * q + j)] = b.field;
            for (int k = 0; k < fields.n(); ++k)
                compiled[static_cast<std::size_t>((i * q + j) * fields.n() + k)] = CompiledExpr(b.field[k]);
        }
}

void BracketTable::eval(int i, int j, int n, const double* p, double* out) const {
    if (i == j) {
        for (int k = 0; k < n; ++k) out[k] = 0;
        return;
    }
    const double s = i < j ? 1.0 : -1.0;
    const int a = std::min(i, j), b = std::max(i, j);
    for (int k = 0; k < n; ++k) out[k] = s * compiled[static_cast<std::size_t>((a * q + b) * n + k)].eval(p);
}

bool commutator_coeffs_at(const FieldSet& fields, const BracketTable& table, const double* p, CoeffMode mode,
                          const std::vector<int>& frame, double* c, double* residual) {
    const int n = fields.n(), q = fields.q();
    std::fill(c, c + q * q * q, 0.0);
    std::vector<int> cols;
    if (mode == CoeffMode::Frame) {
        cols = frame;
    } else {
        cols.resize(q);
        for (int j = 0; j < q; ++j) cols[j] = j;
    }
    Eigen::MatrixXd M = frame_matrix(fields, cols, p);
    const double thr = spanning_threshold(fields, p);
    bool spans = false;
    if (mode == CoeffMode::Frame) {
        spans = std::fabs(M.determinant()) >= thr && M.determinant() != 0;
    } else {
        for (const auto& J : increasing_tuples(q, n)) {
            double d = std::fabs(wedge_det(fields, J, p));
            if (d >= thr && d > 0) {
                spans = true;
                break;
            }
        }
    }
    if (!spans) return false;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    Eigen::VectorXd b(n);
    double res = 0;
    std::vector<double> full(q), all(static_cast<std::size_t>(q * n));
    fields.eval_all(p, all.data());
    for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j) {
            table.eval(i, j, n, p, b.data());
            Eigen::VectorXd sol = mode == CoeffMode::Frame ? Eigen::VectorXd(M.partialPivLu().solve(b)) : Eigen::VectorXd(cod.solve(b));
            std::fill(full.begin(), full.end(), 0.0);
            for (std::size_t a = 0; a < cols.size(); ++a) full[cols[a]] = sol(static_cast<int>(a));
            double err2 = 0;
            for (int k = 0; k < n; ++k) {
                double s = b(k);
                for (int l = 0; l < q; ++l) s -= full[l] * all[l * n + k];
                err2 += s * s;
            }
            res = std::max(res, std::sqrt(err2));
            for (int k = 0; k < q; ++k) {
                c[(i * q + j) * q + k] = full[k];
                c[(j * q + i) * q + k] = -full[k];
            }
        }
    if (residual) *residual = res;
    return true;
}

CommutatorTensor commutator_coeffs(const FieldSet& fields, const GridGeometry& region, CoeffMode mode, std::vector<int> frame) {
    CommutatorTensor T;
    const int q = fields.q();
    T.q = q;
    T.mode = mode;
    T.geom = region;
    if (mode == CoeffMode::Frame && frame.empty()) {
        std::vector<double> centre(region.dim());
        for (int d = 0; d < region.dim(); ++d) centre[d] = region.origin[d] + 0.5 * (region.extents[d] - 1) * region.spacing[d];
        frame = select_frame(fields, centre.data()).J0;
    }
    if (mode == CoeffMode::Frame && static_cast<int>(frame.size()) != fields.n())
        throw std::invalid_argument("commutator_coeffs: frame must have n entries");
    T.frame = frame;
    BracketTable table(fields);
    const std::size_t np = region.size();
    const std::size_t block = static_cast<std::size_t>(q * q * q);
    T.c.assign(np * block, 0.0);
    T.ok.assign(np, 0);
    std::vector<double> res(np, 0.0);
    parallel_for(0, np, [&](std::size_t p) {
        std::vector<double> x = region.point(p);
        T.ok[p] = commutator_coeffs_at(fields, table, x.data(), mode, frame, T.c.data() + p * block, &res[p]) ? 1 : 0;
    });
    for (std::size_t p = 0; p < np; ++p) {
        if (!T.ok[p]) ++T.failed;
        else T.residual = std::max(T.residual, res[p]);
    }
    if (static_cast<double>(T.failed) > 1e-3 * static_cast<double>(np))
        throw NotSpanning("commutator_coeffs: frame fails to span at " + std::to_string(T.failed) + " of " +
                          std::to_string(np) + " grid points");
    return T;
}

}  // namespace achart
