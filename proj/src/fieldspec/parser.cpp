#include <cctype>
#include <charconv>
#include <cmath>

#include "achart/fieldspec.hpp"

namespace achart {

ParseError::ParseError(int column, const std::string& msg)
    : std::runtime_error("column " + std::to_string(column) + ": " + msg), column_(column) {}

namespace {

class Parser {
public:
    Parser(std::string_view text, int n) : s_(text), n_(n) {}

    FieldExpr run() {
        skip();
        if (pos_ >= s_.size()) fail("empty expression");
        FieldExpr e = expr();
        skip();
        if (pos_ < s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
        return e;
    }

private:
    std::string_view s_;
    int n_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(static_cast<int>(pos_) + 1, msg); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    FieldExpr expr() {
        FieldExpr e = term();
        for (;;) {
            if (accept('+')) e = e + term();
            else if (accept('-')) e = e - term();
            else return e;
        }
    }

    FieldExpr term() {
        FieldExpr e = factor();
        for (;;) {
            if (accept('*')) e = e * factor();
            else if (accept('/')) e = e / factor();
            else return e;
        }
    }

    struct Atom {
        FieldExpr e;
        bool abs_call = false;
        FieldExpr abs_arg;
    };

    FieldExpr factor() {
        Atom a = atom();
        if (!accept('^')) return a.e;
        skip();
        bool integral = true;
        double r = number(&integral);
        if (integral) {
            if (r > 1e6) fail("integer exponent too large");
            return pow(a.e, static_cast<int>(r));
        }
        if (!a.abs_call) fail("non-integer exponent requires an abs(...) base");
        return powabs(a.abs_arg, r);
    }

    double number(bool* integral) {
        skip();
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t d0 = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            return pos_ - d0;
        };
        std::size_t whole = digits();
        std::size_t frac = 0;
        bool is_int = true;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            frac = digits();
            is_int = false;
        }
        if (whole + frac == 0) {
            pos_ = start;
            fail("expected number");
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
            else is_int = false;
        }
        double v = 0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc()) {
            pos_ = start;
            fail("malformed number");
        }
        if (integral) *integral = is_int;
        return v;
    }

    Atom atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '-') {
            ++pos_;
            Atom inner = atom();
            return {-inner.e};
        }
        if (c == '(') {
            ++pos_;
            FieldExpr e = expr();
            if (!accept(')')) fail("expected ')'");
            return {e};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return {FieldExpr::constant(number(nullptr))};
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string_view name = s_.substr(start, pos_ - start);
            if (name == "x" && pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                std::size_t d0 = pos_;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
                long idx = 0;
                std::from_chars(s_.data() + d0, s_.data() + pos_, idx);
                if (idx < 1 || idx > n_) {
                    pos_ = start;
                    fail("variable index out of range: x" + std::string(s_.substr(d0, pos_ - d0)) +
                         " (dimension " + std::to_string(n_) + ")");
                }
                return {FieldExpr::variable(static_cast<int>(idx - 1))};
            }
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            name = s_.substr(start, pos_ - start);
            FieldExpr (*fn)(const FieldExpr&) = nullptr;
            if (name == "sin") fn = &sin;
            else if (name == "cos") fn = &cos;
            else if (name == "exp") fn = &exp;
            else if (name == "abs") fn = &abs;
            else if (name == "sign") fn = &sign;
            else {
                pos_ = start;
                fail("unknown identifier '" + std::string(name) + "'");
            }
            if (!accept('(')) fail("expected '(' after function name");
            FieldExpr arg = expr();
            if (!accept(')')) fail("expected ')'");
            Atom out{fn(arg)};
            if (name == "abs") {
                out.abs_call = true;
                out.abs_arg = arg;
            }
            return out;
        }
        fail(std::string("unexpected '") + c + "'");
    }
};

}  // namespace

FieldExpr parse_field_expr(std::string_view text, int n) {
    if (n < 1) throw std::invalid_argument("parse_field_expr: dimension must be >= 1");
    return Parser(text, n).run();
}

}  // namespace achart
