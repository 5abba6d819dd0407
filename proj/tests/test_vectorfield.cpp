#include "doctest.h"

#include <cmath>
#include <random>

#include "achart/vectorfield.hpp"

using namespace achart;

namespace {

Domain ball2(double r = 10) { return Domain{{0.0, 0.0}, r}; }

FieldSet family_dx_dy_xdy() { return FieldSet::parse(2, {{"1", "0"}, {"0", "1"}, {"0", "x1"}}, ball2()); }

Field fld(const std::vector<std::string>& t, int n) {
    Field f;
    for (const auto& s : t) f.push_back(parse_field_expr(s, n));
    return f;
}

double eval_component(const Field& f, int k, const double* p) { return f[k].eval(p); }

}  // namespace

TEST_CASE("bracket examples") {
    double p[2] = {0.7, -1.3};
    auto b = lie_bracket(fld({"1", "0"}, 2), fld({"0", "x1"}, 2));
    CHECK(b.field[0].eval(p) == 0.0);
    CHECK(b.field[1].eval(p) == 1.0);
    CHECK_FALSE(b.weak);

    auto z = lie_bracket(fld({"1", "0"}, 2), fld({"0", "1"}, 2));
    CHECK(z.field[0].is_constant());
    CHECK(z.field[1].is_constant());
    CHECK(z.field[0].eval(p) == 0.0);

    // [x dy, y dx] = x dx - y dy, checked against central differences of the coefficient products.
    Field X = fld({"0", "x1"}, 2), Y = fld({"x2", "0"}, 2);
    auto c = lie_bracket(X, Y);
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int t = 0; t < 5; ++t) {
        double q[2] = {U(g), U(g)};
        CHECK(c.field[0].eval(q) == doctest::Approx(q[0]).epsilon(1e-12));
        CHECK(c.field[1].eval(q) == doctest::Approx(-q[1]).epsilon(1e-12));
        const double h = 1e-5;
        for (int k = 0; k < 2; ++k) {
            double fd = 0;
            for (int i = 0; i < 2; ++i) {
                double qp[2] = {q[0], q[1]}, qm[2] = {q[0], q[1]};
                qp[i] += h;
                qm[i] -= h;
                fd += X[i].eval(q) * (eval_component(Y, k, qp) - eval_component(Y, k, qm)) / (2 * h);
                fd -= Y[i].eval(q) * (eval_component(X, k, qp) - eval_component(X, k, qm)) / (2 * h);
            }
            double ex = c.field[k].eval(q);
            CHECK(std::fabs(fd - ex) <= 1e-6 * std::max(1.0, std::fabs(ex)));
        }
    }
}

TEST_CASE("bracket weak flag propagates") {
    auto b = lie_bracket(fld({"1", "0"}, 2), fld({"0", "abs(x1)"}, 2));
    CHECK(b.weak);
    auto s = lie_bracket(fld({"1", "0"}, 2), fld({"0", "abs(x2)"}, 2));
    CHECK_FALSE(s.weak);
}

TEST_CASE("antisymmetry, bilinearity and Jacobi identity") {
    Field X = fld({"x1^2*x2", "1+x3", "x2"}, 3);
    Field Y = fld({"x3", "x1*x2^3", "2-x1"}, 3);
    Field Z = fld({"1", "x3^2", "x1*x2*x3"}, 3);
    auto add = [](const Field& a, const Field& b) {
        Field r;
        for (std::size_t i = 0; i < a.size(); ++i) r.push_back(a[i] + b[i]);
        return r;
    };
    auto XY = lie_bracket(X, Y).field, YX = lie_bracket(Y, X).field;
    auto J1 = lie_bracket(X, lie_bracket(Y, Z).field).field;
    auto J2 = lie_bracket(Y, lie_bracket(Z, X).field).field;
    auto J3 = lie_bracket(Z, lie_bracket(X, Y).field).field;
    auto lin = lie_bracket(add(X, Z), Y).field;
    auto ZY = lie_bracket(Z, Y).field;
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int t = 0; t < 20; ++t) {
        double p[3] = {U(g), U(g), U(g)};
        for (int k = 0; k < 3; ++k) {
            CHECK(XY[k].eval(p) == -YX[k].eval(p));
            CHECK(std::fabs(J1[k].eval(p) + J2[k].eval(p) + J3[k].eval(p)) < 1e-10);
            CHECK(std::fabs(lin[k].eval(p) - XY[k].eval(p) - ZY[k].eval(p)) < 1e-12);
        }
    }
}

TEST_CASE("wedge ratios") {
    auto F = family_dx_dy_xdy();
    double p[2] = {3, 1};
    CHECK(wedge_ratio({0, 2}, {0, 1}, F, p) == doctest::Approx(3.0));
    CHECK(wedge_ratio({0, 1}, {0, 1}, F, p) == 1.0);
    CHECK(wedge_ratio({1, 2}, {0, 1}, F, p) == 0.0);
    double z[2] = {0, 0};
    bool threw = false;
    try {
        wedge_ratio({0, 1}, {1, 2}, F, z);
    } catch (const SingularFrame& e) {
        threw = true;
        CHECK(e.det() == 0.0);
    }
    CHECK(threw);
}

TEST_CASE("frame selection") {
    auto F = family_dx_dy_xdy();
    double p[2] = {3, 1};
    auto s = select_frame(F, p);
    CHECK(s.J0 == std::vector<int>{0, 2});
    CHECK(s.zeta_achieved == 1.0);
    CHECK(s.all_ratios.size() == 3);
    for (auto& [J, r] : s.all_ratios) CHECK(std::fabs(r) <= 1.0);

    auto F2 = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}}, ball2());
    double q[2] = {-0.4, 2.5};
    CHECK(select_frame(F2, q).J0 == std::vector<int>{0, 1});

    // Tie at x1 = 1 keeps the lexicographically first tuple.
    double t[2] = {1, 0};
    CHECK(select_frame(F, t).J0 == std::vector<int>{0, 1});

    auto F3 = FieldSet::parse(2, {{"x1", "0"}, {"0", "x1"}}, ball2());
    double o[2] = {0, 0};
    CHECK_THROWS_AS(select_frame(F3, o), NotSpanning);

    // zeta < 1 admits the first tuple within the factor.
    auto s2 = select_frame(F, p, 0.3);
    CHECK(s2.J0 == std::vector<int>{0, 1});
    CHECK(s2.zeta_achieved == doctest::Approx(1.0 / 3.0));
    for (auto& [J, r] : s2.all_ratios) CHECK(std::fabs(r) <= 1.0 / s2.zeta_achieved + 1e-12);
}

TEST_CASE("random family frame invariant") {
    auto F = FieldSet::parse(3,
                             {{"1", "x1", "0"},
                              {"x2", "1", "x3^2"},
                              {"0", "sin(x1)", "1"},
                              {"x1*x2", "0", "cos(x2)"},
                              {"exp(x3)", "x1", "x2"}},
                             Domain{{0, 0, 0}, 5});
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 10; ++t) {
        double p[3] = {U(g), U(g), U(g)};
        auto s = select_frame(F, p);
        for (const auto& J : increasing_tuples(5, 3)) CHECK(std::fabs(wedge_ratio(J, s.J0, F, p)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("commutator coefficients") {
    auto F = family_dx_dy_xdy();
    auto geom = GridGeometry::cell_centred({0.0, 0.0}, 3.0, 12);

    auto Tf = commutator_coeffs(F, geom, CoeffMode::Frame, {0, 1});
    CHECK(Tf.failed == 0);
    CHECK(Tf.residual < 1e-12);
    for (std::size_t p = 0; p < geom.size(); ++p)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) {
                    double expect = 0;
                    if (i == 0 && j == 2 && k == 1) expect = 1;
                    if (i == 2 && j == 0 && k == 1) expect = -1;
                    CHECK(Tf.at(p, i, j, k) == doctest::Approx(expect));
                }

    BracketTable tab(F);
    double c[27], res = 1;
    double x[2] = {2, 0.5};
    REQUIRE(commutator_coeffs_at(F, tab, x, CoeffMode::MinimalNorm, {}, c, &res));
    CHECK(c[(0 * 3 + 2) * 3 + 0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(c[(0 * 3 + 2) * 3 + 1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(c[(0 * 3 + 2) * 3 + 2] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(c[(2 * 3 + 0) * 3 + 2] == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(res < 1e-12);

    auto Tm = commutator_coeffs(F, geom);
    CHECK(Tm.residual < 1e-8);
    for (std::size_t p = 0; p < geom.size(); ++p)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) CHECK(Tm.at(p, i, j, k) == -Tm.at(p, j, i, k));

    auto C = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}}, ball2());
    auto Tc = commutator_coeffs(C, geom);
    CHECK(Tc.residual == 0.0);
    for (double v : Tc.c) CHECK(v == 0.0);
}

TEST_CASE("commutator coefficients on a polynomial family") {
    auto F = FieldSet::parse(2, {{"1", "x2^2"}, {"x1*x2", "1"}, {"x1^2", "x1-x2"}}, ball2());
    auto geom = GridGeometry::cell_centred({0.0, 0.0}, 0.4, 10);
    auto T = commutator_coeffs(F, geom);
    CHECK(T.failed == 0);
    CHECK(T.residual < 1e-8);
}

TEST_CASE("non-spanning region fails globally") {
    auto F = FieldSet::parse(2, {{"x1", "0"}, {"0", "x1"}}, ball2());
    auto geom = GridGeometry::cell_centred({0.0, 0.0}, 1.0, 4);  // no point on x1 = 0
    auto T = commutator_coeffs(F, geom);
    CHECK(T.failed == 0);
    GridGeometry g0{{5, 1}, {0.5, 1.0}, {-1.0, 0.0}};  // includes x1 = 0
    CHECK_THROWS_AS(commutator_coeffs(F, g0), NotSpanning);
}
