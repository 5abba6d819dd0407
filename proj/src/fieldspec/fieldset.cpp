#include <cmath>

#include "achart/fieldspec.hpp"
#include "achart/rng.hpp"

namespace achart {

bool Domain::contains(const double* x) const {
    double r2 = 0;
    for (std::size_t d = 0; d < center.size(); ++d) r2 += (x[d] - center[d]) * (x[d] - center[d]);
    return r2 < radius * radius;
}

FieldSet::FieldSet(int n, std::vector<std::vector<FieldExpr>> coeffs, Domain domain)
    : n_(n), q_(static_cast<int>(coeffs.size())), coeffs_(std::move(coeffs)), domain_(std::move(domain)) {
    if (n_ < 1) throw std::invalid_argument("FieldSet: dimension must be >= 1");
    if (q_ < n_) throw std::invalid_argument("FieldSet: need q >= n fields");
    if (static_cast<int>(domain_.center.size()) != n_) throw std::invalid_argument("FieldSet: domain centre has wrong dimension");
    if (!(domain_.radius > 0)) throw std::invalid_argument("FieldSet: domain radius must be positive");
    for (const auto& f : coeffs_) {
        if (static_cast<int>(f.size()) != n_) throw std::invalid_argument("FieldSet: field with wrong component count");
        for (const auto& e : f)
            if (e.arity() > n_) throw std::invalid_argument("FieldSet: expression uses a variable beyond x" + std::to_string(n_));
    }
    comp_.reserve(static_cast<std::size_t>(q_ * n_));
    for (const auto& f : coeffs_)
        for (const auto& e : f) comp_.emplace_back(e);
    jac_.reserve(static_cast<std::size_t>(q_ * n_ * n_));
    for (int j = 0; j < q_; ++j)
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l) {
                Derivative d = differentiate(coeffs_[j][k], l);
                weak_ = weak_ || d.weak;
                jac_.push_back(d.expr);
                jac_comp_.emplace_back(d.expr);
            }
    // Spot-check that the coefficients are finite on the domain.
    std::vector<double> x(n_), v(static_cast<std::size_t>(q_ * n_));
    for (int s = 0; s < 64; ++s) {
        auto g = stream(0xd0a1, static_cast<std::uint64_t>(s));
        double r2 = 0;
        for (int d = 0; d < n_; ++d) {
            x[d] = normal01(g);
            r2 += x[d] * x[d];
        }
        double scale = s == 0 ? 0.0 : domain_.radius * std::pow(uniform01(g), 1.0 / n_) / std::sqrt(r2);
        for (int d = 0; d < n_; ++d) x[d] = domain_.center[d] + scale * x[d];
        eval_all(x.data(), v.data());
        for (double c : v)
            if (!std::isfinite(c)) throw std::invalid_argument("FieldSet: coefficient not finite on the domain");
    }
}

FieldSet FieldSet::parse(int n, const std::vector<std::vector<std::string>>& text, Domain domain) {
    std::vector<std::vector<FieldExpr>> coeffs;
    for (const auto& f : text) {
        std::vector<FieldExpr> comps;
        for (const auto& s : f) comps.push_back(parse_field_expr(s, n));
        coeffs.push_back(std::move(comps));
    }
    return FieldSet(n, std::move(coeffs), std::move(domain));
}

void FieldSet::eval_field(int j, const double* x, double* out) const {
    for (int k = 0; k < n_; ++k) out[k] = comp_[static_cast<std::size_t>(j * n_ + k)].eval(x);
}

void FieldSet::eval_all(const double* x, double* out) const {
    for (std::size_t i = 0; i < comp_.size(); ++i) out[i] = comp_[i].eval(x);
}

void FieldSet::eval_jacobian(int j, const double* x, double* J) const {
    const std::size_t base = static_cast<std::size_t>(j * n_ * n_);
    for (int i = 0; i < n_ * n_; ++i) J[i] = jac_comp_[base + static_cast<std::size_t>(i)].eval(x);
}

std::vector<std::vector<std::string>> FieldSet::texts() const {
    std::vector<std::vector<std::string>> out;
    for (const auto& f : coeffs_) {
        std::vector<std::string> comps;
        for (const auto& e : f) comps.push_back(e.str());
        out.push_back(std::move(comps));
    }
    return out;
}

FieldSet FieldSet::subset(const std::vector<int>& idx) const {
    std::vector<std::vector<FieldExpr>> c;
    for (int j : idx) c.push_back(coeffs_.at(static_cast<std::size_t>(j)));
    return FieldSet(n_, std::move(c), domain_);
}

}  // namespace achart
