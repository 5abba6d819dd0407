#pragma once
// Symbolic coefficient expressions for vector fields on R^n.

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace achart {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, PowInt, PowAbs, Sin, Cos, Exp, Abs, Sign };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;  // Const value, or real exponent for PowAbs
    int index = 0;       // Var index (0-based) or integer exponent for PowInt
    NodePtr a, b;
};

/// Immutable expression tree over x1..xn. Constructors fold constants and
/// drop neutral constants (x+0, x*1, x^1); nothing else is simplified.
class FieldExpr {
public:
    FieldExpr();  // the constant 0
    explicit FieldExpr(NodePtr node) : node_(std::move(node)) {}

    static FieldExpr constant(double c);
    static FieldExpr variable(int k);  // k is 0-based

    const Node& root() const { return *node_; }
    const NodePtr& ptr() const { return node_; }

    double eval(const double* x) const;
    bool is_constant(double* value = nullptr) const;
    /// Largest variable index used plus one (0 for constants).
    int arity() const;
    /// Canonical text; parse(str()) reproduces the same tree.
    std::string str() const;
    bool equals(const FieldExpr& other) const;
    /// Replace variable k by subs[k].
    FieldExpr substitute(const std::vector<FieldExpr>& subs) const;

private:
    NodePtr node_;
};

FieldExpr operator+(const FieldExpr& a, const FieldExpr& b);
FieldExpr operator-(const FieldExpr& a, const FieldExpr& b);
FieldExpr operator*(const FieldExpr& a, const FieldExpr& b);
FieldExpr operator/(const FieldExpr& a, const FieldExpr& b);
FieldExpr operator-(const FieldExpr& a);
FieldExpr pow(const FieldExpr& a, int k);
/// |a|^r for real r.
FieldExpr powabs(const FieldExpr& a, double r);
FieldExpr sin(const FieldExpr& a);
FieldExpr cos(const FieldExpr& a);
FieldExpr exp(const FieldExpr& a);
FieldExpr abs(const FieldExpr& a);
FieldExpr sign(const FieldExpr& a);

/// Result of symbolic differentiation. When an abs/sign/powabs node was
/// differentiated the derivative only holds away from the zeros of its
/// argument; those arguments are listed in weak_loci.
struct Derivative {
    FieldExpr expr;
    bool weak = false;
    std::vector<FieldExpr> weak_loci;

    /// True if x lies within tol of a weak locus.
    bool weak_at(const double* x, double tol = 0.0) const;
};

Derivative differentiate(const FieldExpr& e, int k);

class ParseError : public std::runtime_error {
public:
    ParseError(int column, const std::string& msg);
    int column() const { return column_; }

private:
    int column_;
};

/// Grammar: expr := term (('+'|'-') term)*; term := factor (('*'|'/') factor)*;
/// factor := atom ('^' number)?; atom := number | x<digits> | func '(' expr ')' | '(' expr ')' | '-' atom.
/// func is one of sin, cos, exp, abs, sign. A non-integer exponent needs an abs(...) base.
FieldExpr parse_field_expr(std::string_view text, int n);

/// Flat postfix program for fast repeated evaluation. Same results as FieldExpr::eval.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const FieldExpr& e);
    double eval(const double* x) const;

private:
    struct Instr {
        Op op;
        int index;
        double value;
    };
    std::vector<Instr> code_;
    int depth_ = 0;
};

/// Ambient ball on which the fields are defined.
struct Domain {
    std::vector<double> center;
    double radius = 1.0;
    bool contains(const double* x) const;
};

/// q vector fields on R^n given by a q x n matrix of coefficient expressions.
class FieldSet {
public:
    FieldSet() = default;
    FieldSet(int n, std::vector<std::vector<FieldExpr>> coeffs, Domain domain);
    static FieldSet parse(int n, const std::vector<std::vector<std::string>>& text, Domain domain);

    int n() const { return n_; }
    int q() const { return q_; }
    const Domain& domain() const { return domain_; }
    const FieldExpr& coeff(int j, int k) const { return coeffs_[j][k]; }
    const std::vector<FieldExpr>& field(int j) const { return coeffs_[j]; }
    /// Whether any coefficient Jacobian entry carries a weak-derivative flag.
    bool weak_jacobian() const { return weak_; }

    void eval_field(int j, const double* x, double* out) const;
    /// out[j*n + k] = X_j^k(x).
    void eval_all(const double* x, double* out) const;
    /// J[k*n + l] = d X_j^k / d x_l.
    void eval_jacobian(int j, const double* x, double* J) const;
    const FieldExpr& jacobian_expr(int j, int k, int l) const { return jac_[(j * n_ + k) * n_ + l]; }

    std::vector<std::vector<std::string>> texts() const;
    /// Same fields restricted to a subset of indices.
    FieldSet subset(const std::vector<int>& idx) const;

private:
    int n_ = 0, q_ = 0;
    std::vector<std::vector<FieldExpr>> coeffs_;
    Domain domain_;
    std::vector<CompiledExpr> comp_;
    std::vector<FieldExpr> jac_;
    std::vector<CompiledExpr> jac_comp_;
    bool weak_ = false;
};

}  // namespace achart
