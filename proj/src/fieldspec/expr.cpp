#include <charconv>
#include <cmath>
#include <functional>

#include "achart/fieldspec.hpp"

namespace achart {

namespace {

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0, int index = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = value;
    n->index = index;
    return n;
}

bool const_of(const FieldExpr& e, double& v) { return e.is_constant(&v); }
bool is_value(const FieldExpr& e, double target) {
    double v;
    return e.is_constant(&v) && v == target;
}

double ipow(double base, int k) {
    double result = 1.0;
    double b = base;
    unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
    while (e) {
        if (e & 1u) result *= b;
        b *= b;
        e >>= 1u;
    }
    return k < 0 ? 1.0 / result : result;
}

double sgn(double u) { return static_cast<double>((u > 0) - (u < 0)); }

double apply_unary(Op op, double u, const Node& n) {
    switch (op) {
        case Op::Neg: return -u;
        case Op::PowInt: return ipow(u, n.index);
        case Op::PowAbs: return std::pow(std::fabs(u), n.value);
        case Op::Sin: return std::sin(u);
        case Op::Cos: return std::cos(u);
        case Op::Exp: return std::exp(u);
        case Op::Abs: return std::fabs(u);
        case Op::Sign: return sgn(u);
        default: return 0.0;
    }
}

double eval_node(const Node& n, const double* x) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return x[n.index];
        case Op::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
        case Op::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
        case Op::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
        case Op::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
        default: return apply_unary(n.op, eval_node(*n.a, x), n);
    }
}

FieldExpr unary(Op op, const FieldExpr& a, double value = 0.0, int index = 0) {
    double c;
    if (const_of(a, c)) {
        Node tmp;
        tmp.op = op;
        tmp.value = value;
        tmp.index = index;
        return FieldExpr::constant(apply_unary(op, c, tmp));
    }
    return FieldExpr(make(op, a.ptr(), nullptr, value, index));
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool is_atomic_text(const Node& n) {
    switch (n.op) {
        case Op::Var:
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Abs:
        case Op::Sign: return true;
        case Op::Const: return n.value >= 0;
        default: return false;
    }
}

void print_node(const Node& n, std::string& out) {
    switch (n.op) {
        case Op::Const:
            if (n.value < 0 || std::signbit(n.value)) {
                out += "(-";
                out += format_double(-n.value);
                out += ")";
            } else {
                out += format_double(n.value);
            }
            return;
        case Op::Var:
            out += "x" + std::to_string(n.index + 1);
            return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? " * " : " / ";
            out += "(";
            print_node(*n.a, out);
            out += sym;
            print_node(*n.b, out);
            out += ")";
            return;
        }
        case Op::Neg:
            out += "-(";
            print_node(*n.a, out);
            out += ")";
            return;
        case Op::PowInt:
            if (is_atomic_text(*n.a) && n.a->op != Op::Const) {
                print_node(*n.a, out);
            } else {
                out += "(";
                print_node(*n.a, out);
                out += ")";
            }
            out += "^" + std::to_string(n.index);
            return;
        case Op::PowAbs: {
            out += "abs(";
            print_node(*n.a, out);
            out += ")^";
            std::string r = format_double(n.value);
            if (r.find_first_of(".e") == std::string::npos) r += ".0";
            out += r;
            return;
        }
        case Op::Sin: out += "sin("; break;
        case Op::Cos: out += "cos("; break;
        case Op::Exp: out += "exp("; break;
        case Op::Abs: out += "abs("; break;
        case Op::Sign: out += "sign("; break;
    }
    print_node(*n.a, out);
    out += ")";
}

bool nodes_equal(const Node& x, const Node& y) {
    if (&x == &y) return true;
    if (x.op != y.op) return false;
    switch (x.op) {
        case Op::Const: return x.value == y.value || (std::isnan(x.value) && std::isnan(y.value));
        case Op::Var: return x.index == y.index;
        case Op::PowInt: return x.index == y.index && nodes_equal(*x.a, *y.a);
        case Op::PowAbs: return x.value == y.value && nodes_equal(*x.a, *y.a);
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: return nodes_equal(*x.a, *y.a) && nodes_equal(*x.b, *y.b);
        default: return nodes_equal(*x.a, *y.a);
    }
}

int arity_node(const Node& n) {
    switch (n.op) {
        case Op::Const: return 0;
        case Op::Var: return n.index + 1;
        default: {
            int r = arity_node(*n.a);
            if (n.b) r = std::max(r, arity_node(*n.b));
            return r;
        }
    }
}

FieldExpr rebuild(const Node& n, const FieldExpr& a, const FieldExpr& b) {
    switch (n.op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
        case Op::Neg: return -a;
        case Op::PowInt: return pow(a, n.index);
        case Op::PowAbs: return powabs(a, n.value);
        case Op::Sin: return sin(a);
        case Op::Cos: return cos(a);
        case Op::Exp: return exp(a);
        case Op::Abs: return abs(a);
        case Op::Sign: return sign(a);
        default: return a;
    }
}

FieldExpr substitute_node(const NodePtr& n, const std::vector<FieldExpr>& subs) {
    switch (n->op) {
        case Op::Const: return FieldExpr(n);
        case Op::Var:
            if (n->index >= static_cast<int>(subs.size())) throw std::invalid_argument("substitute: variable out of range");
            return subs[n->index];
        default: {
            FieldExpr a = substitute_node(n->a, subs);
            FieldExpr b = n->b ? substitute_node(n->b, subs) : FieldExpr();
            return rebuild(*n, a, b);
        }
    }
}

}  // namespace

FieldExpr::FieldExpr() : node_(make(Op::Const)) {}

FieldExpr FieldExpr::constant(double c) { return FieldExpr(make(Op::Const, nullptr, nullptr, c)); }

FieldExpr FieldExpr::variable(int k) {
    if (k < 0) throw std::invalid_argument("variable index must be nonnegative");
    return FieldExpr(make(Op::Var, nullptr, nullptr, 0.0, k));
}

double FieldExpr::eval(const double* x) const { return eval_node(*node_, x); }

bool FieldExpr::is_constant(double* value) const {
    if (node_->op != Op::Const) return false;
    if (value) *value = node_->value;
    return true;
}

int FieldExpr::arity() const { return arity_node(*node_); }

std::string FieldExpr::str() const {
    std::string out;
    print_node(*node_, out);
    return out;
}

bool FieldExpr::equals(const FieldExpr& other) const { return nodes_equal(*node_, *other.node_); }

FieldExpr FieldExpr::substitute(const std::vector<FieldExpr>& subs) const { return substitute_node(node_, subs); }

FieldExpr operator+(const FieldExpr& a, const FieldExpr& b) {
    double x, y;
    bool ca = const_of(a, x), cb = const_of(b, y);
    if (ca && cb) return FieldExpr::constant(x + y);
    if (ca && x == 0) return b;
    if (cb && y == 0) return a;
    return FieldExpr(make(Op::Add, a.ptr(), b.ptr()));
}

FieldExpr operator-(const FieldExpr& a, const FieldExpr& b) {
    double x, y;
    bool ca = const_of(a, x), cb = const_of(b, y);
    if (ca && cb) return FieldExpr::constant(x - y);
    if (cb && y == 0) return a;
    if (ca && x == 0) return -b;
    return FieldExpr(make(Op::Sub, a.ptr(), b.ptr()));
}

FieldExpr operator*(const FieldExpr& a, const FieldExpr& b) {
    double x, y;
    bool ca = const_of(a, x), cb = const_of(b, y);
    if (ca && cb) return FieldExpr::constant(x * y);
    if ((ca && x == 0) || (cb && y == 0)) return FieldExpr::constant(0.0);
    if (ca && x == 1) return b;
    if (cb && y == 1) return a;
    return FieldExpr(make(Op::Mul, a.ptr(), b.ptr()));
}

FieldExpr operator/(const FieldExpr& a, const FieldExpr& b) {
    double x, y;
    bool ca = const_of(a, x), cb = const_of(b, y);
    if (ca && cb && y != 0) return FieldExpr::constant(x / y);
    if (cb && y == 1) return a;
    if (ca && x == 0 && !(cb && y == 0)) return FieldExpr::constant(0.0);
    return FieldExpr(make(Op::Div, a.ptr(), b.ptr()));
}

FieldExpr operator-(const FieldExpr& a) { return unary(Op::Neg, a); }

FieldExpr pow(const FieldExpr& a, int k) {
    if (k < 0) throw std::invalid_argument("pow: negative integer exponent");
    if (k == 0) return FieldExpr::constant(1.0);
    if (k == 1) return a;
    return unary(Op::PowInt, a, 0.0, k);
}

FieldExpr powabs(const FieldExpr& a, double r) {
    if (r == 0) return FieldExpr::constant(1.0);
    return unary(Op::PowAbs, a, r);
}

FieldExpr sin(const FieldExpr& a) { return unary(Op::Sin, a); }
FieldExpr cos(const FieldExpr& a) { return unary(Op::Cos, a); }
FieldExpr exp(const FieldExpr& a) { return unary(Op::Exp, a); }
FieldExpr abs(const FieldExpr& a) { return unary(Op::Abs, a); }
FieldExpr sign(const FieldExpr& a) { return unary(Op::Sign, a); }

bool Derivative::weak_at(const double* x, double tol) const {
    for (const auto& e : weak_loci)
        if (std::fabs(e.eval(x)) <= tol) return true;
    return false;
}

namespace {

struct Differ {
    int k;
    Derivative* out;

    void flag(const FieldExpr& arg) {
        out->weak = true;
        for (const auto& e : out->weak_loci)
            if (e.equals(arg)) return;
        out->weak_loci.push_back(arg);
    }

    FieldExpr d(const NodePtr& p) {
        const Node& n = *p;
        FieldExpr self(p);
        switch (n.op) {
            case Op::Const: return FieldExpr::constant(0.0);
            case Op::Var: return FieldExpr::constant(n.index == k ? 1.0 : 0.0);
            default: break;
        }
        FieldExpr a(n.a);
        FieldExpr da = d(n.a);
        switch (n.op) {
            case Op::Add: return da + d(n.b);
            case Op::Sub: return da - d(n.b);
            case Op::Mul: {
                FieldExpr b(n.b);
                return da * b + a * d(n.b);
            }
            case Op::Div: {
                FieldExpr b(n.b);
                FieldExpr db = d(n.b);
                if (is_value(db, 0)) return da / b;
                return (da * b - a * db) / pow(b, 2);
            }
            case Op::Neg: return -da;
            case Op::PowInt: return FieldExpr::constant(n.index) * pow(a, n.index - 1) * da;
            case Op::Sin: return cos(a) * da;
            case Op::Cos: return -(sin(a) * da);
            case Op::Exp: return self * da;
            default: break;
        }
        if (is_value(da, 0)) return FieldExpr::constant(0.0);
        flag(a);
        switch (n.op) {
            case Op::Abs: return sign(a) * da;
            case Op::Sign: return FieldExpr::constant(0.0);
            case Op::PowAbs: return FieldExpr::constant(n.value) * powabs(a, n.value - 1.0) * sign(a) * da;
            default: throw std::logic_error("differentiate: unknown node");
        }
    }
};

}  // namespace

Derivative differentiate(const FieldExpr& e, int k) {
    if (k < 0) throw std::invalid_argument("differentiate: negative variable index");
    Derivative out;
    Differ dd{k, &out};
    out.expr = dd.d(e.ptr());
    return out;
}

CompiledExpr::CompiledExpr(const FieldExpr& e) {
    int depth = 0;
    std::function<void(const Node&)> emit = [&](const Node& n) {
        switch (n.op) {
            case Op::Const:
            case Op::Var:
                code_.push_back({n.op, n.index, n.value});
                ++depth;
                depth_ = std::max(depth_, depth);
                return;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
                emit(*n.a);
                emit(*n.b);
                code_.push_back({n.op, 0, 0.0});
                --depth;
                return;
            default:
                emit(*n.a);
                code_.push_back({n.op, n.index, n.value});
                return;
        }
    };
    emit(e.root());
}

double CompiledExpr::eval(const double* x) const {
    constexpr int kLocal = 64;
    double local[kLocal];
    std::vector<double> heap;
    double* st = local;
    if (depth_ > kLocal) {
        heap.resize(depth_);
        st = heap.data();
    }
    int sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::Const: st[sp++] = in.value; break;
            case Op::Var: st[sp++] = x[in.index]; break;
            case Op::Add: --sp; st[sp - 1] = st[sp - 1] + st[sp]; break;
            case Op::Sub: --sp; st[sp - 1] = st[sp - 1] - st[sp]; break;
            case Op::Mul: --sp; st[sp - 1] = st[sp - 1] * st[sp]; break;
            case Op::Div: --sp; st[sp - 1] = st[sp - 1] / st[sp]; break;
            case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::PowInt: st[sp - 1] = ipow(st[sp - 1], in.index); break;
            case Op::PowAbs: st[sp - 1] = std::pow(std::fabs(st[sp - 1]), in.value); break;
            case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
            case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case Op::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
            case Op::Sign: st[sp - 1] = sgn(st[sp - 1]); break;
        }
    }
    return sp > 0 ? st[0] : 0.0;
}

}  // namespace achart
