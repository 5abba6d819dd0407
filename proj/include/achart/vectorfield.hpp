#pragma once
// Pointwise linear algebra of a field family: brackets, wedges, frames, commutator coefficients.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "achart/fieldspec.hpp"
#include "achart/grid.hpp"

namespace achart {

using Field = std::vector<FieldExpr>;

struct BracketResult {
    Field field;
    bool weak = false;  // some derivative on the way carried a weak-derivative flag
};

/// [X,Y]^k = sum_i X^i d_i Y^k - Y^i d_i X^k.
BracketResult lie_bracket(const Field& X, const Field& Y);

/// Determinant of the n x n matrix whose columns are the fields J(0..n-1) at p.
double wedge_det(const FieldSet& fields, const std::vector<int>& J, const double* p);

class SingularFrame : public std::runtime_error {
public:
    SingularFrame(const std::string& what, double det) : std::runtime_error(what), det_(det) {}
    double det() const { return det_; }

private:
    double det_;
};

class NotSpanning : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scale-free spanning test: |det| >= 1e-12 * (max column norm)^n.
double spanning_threshold(const FieldSet& fields, const double* p);

/// det(M_J) / det(M_J0) at p. Throws SingularFrame if the J0 wedge is below the spanning threshold.
double wedge_ratio(const std::vector<int>& J, const std::vector<int>& J0, const FieldSet& fields, const double* p);

/// All strictly increasing n-tuples from {0..q-1}, in lexicographic order.
std::vector<std::vector<int>> increasing_tuples(int q, int n);

struct FrameSelection {
    std::vector<int> J0;
    double zeta_achieved = 1.0;
    double det_J0 = 0.0;
    double max_abs_det = 0.0;
    std::map<std::vector<int>, double> all_ratios;
};

/// Picks the lexicographically first increasing tuple whose |wedge| is at least
/// zeta times the maximum. zeta = 1 gives the maximal frame.
FrameSelection select_frame(const FieldSet& fields, const double* x0, double zeta = 1.0);

enum class CoeffMode { MinimalNorm, Frame };

/// Symbolic brackets [X_i, X_j] for i < j.
struct BracketTable {
    int q = 0;
    std::vector<Field> brackets;  // index i*q + j, filled for i < j
    std::vector<CompiledExpr> compiled;
    bool weak = false;

    explicit BracketTable(const FieldSet& fields);
    BracketTable() = default;
    /// out[k] = [X_i, X_j]^k(p) for any i, j (antisymmetry applied).
    void eval(int i, int j, int n, const double* p, double* out) const;
};

/// c[(i*q + j)*q + k] at one point. Returns false when the frame does not span there.
/// Frame mode only fills the entries k in `frame`.
bool commutator_coeffs_at(const FieldSet& fields, const BracketTable& table, const double* p, CoeffMode mode,
                          const std::vector<int>& frame, double* c, double* residual);

struct CommutatorTensor {
    int q = 0;
    CoeffMode mode = CoeffMode::MinimalNorm;
    std::vector<int> frame;
    GridGeometry geom;
    std::vector<double> c;  // per point, q*q*q block
    std::vector<char> ok;   // per point success
    double residual = 0.0;
    std::size_t failed = 0;

    double at(std::size_t p, int i, int j, int k) const { return c[p * q * q * q + (i * q + j) * q + k]; }
};

/// Commutator coefficients on every grid point. Throws NotSpanning when more
/// than 0.1% of points fail. Frame mode with an empty frame uses J0 at the grid centre.
CommutatorTensor commutator_coeffs(const FieldSet& fields, const GridGeometry& region,
                                   CoeffMode mode = CoeffMode::MinimalNorm, std::vector<int> frame = {});

}  // namespace achart
