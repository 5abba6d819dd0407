#include <cmath>
#include <random>

#include "achart/adapted_norm.hpp"
#include "achart/zygmund.hpp"
#include "doctest.h"

using namespace achart;

namespace {

FieldExpr ex(const std::string& s, int n) { return parse_field_expr(s, n); }

const std::vector<std::string> corpus2 = {
    "sin(x1)*cos(x2)", "exp(x1*x2)", "x1^2-x2^3", "1/(2+x1^2+x2^2)", "cos(x1+2*x2)",
    "x1*exp(x2)",      "sin(x1*x2)+x1", "(1+x1)^3*x2", "exp(-(x1^2))*x2^2", "cos(x1)*sin(x2)+0.5"};

ZygmundConfig cfg2(double s, double radius = 1.0) {
    ZygmundConfig c;
    c.s = s;
    c.radius = radius;
    c.k_max = 4;
    c.max_pairs = 200000;
    return c;
}

}  // namespace

TEST_CASE("split and multi-indices") {
    int m;
    double sg;
    split_order(2.6, m, sg);
    CHECK(m == 2);
    CHECK(sg == doctest::Approx(0.6));
    split_order(1.0, m, sg);
    CHECK(m == 0);
    CHECK(sg == 1.0);
    CHECK(multi_indices(2, 2).size() == 6);
    CHECK(ordered_multi_indices(3, 2).size() == 13);
}

TEST_CASE("affine functions have no second-difference part") {
    ZygmundConfig c = cfg2(1.0);
    auto r = zygmund_norm(ex("3*x1-2*x2+1", 2), 2, c);
    CHECK(r.second_diff_term < 1e-12);
    CHECK(r.norm == doctest::Approx(r.holder_half_term));
    CHECK(r.norm >= r.sup_term);
    for (const auto& e : r.per_scale) CHECK(e.seminorm >= 0.0);
}

TEST_CASE("abs(x) and x^2 seminorms in one dimension") {
    ZygmundConfig c;
    c.s = 1.0;
    auto r = zygmund_norm(ex("abs(x1)", 1), 1, c);
    CHECK(std::fabs(r.second_diff_term - 2.0) < 0.02);

    // Dense-grid oracle: 10^6 points, h = 1/4.
    double best = 0;
    const int N = 1000000;
    for (int i = 0; i <= N; ++i) {
        double x = -1 + 2.0 * i / N, h = 0.25;
        if (x + 2 * h > 1) break;
        best = std::max(best, std::fabs(std::fabs(x + 2 * h) - 2 * std::fabs(x + h) + std::fabs(x)) / h);
    }
    CHECK(std::fabs(r.second_diff_term - best) < 0.01 * best);

    ZygmundConfig q = c;
    q.scales = {0.25, 0.5, 0.75, 1.0};
    q.lattice_cells = 256;
    auto s = zygmund_norm(ex("x1^2", 1), 1, q);
    CHECK(std::fabs(s.second_diff_term - 2.0) < 0.04);
    CHECK(s.per_scale.front().h == doctest::Approx(1.0));
    CHECK(s.per_scale.front().seminorm == doctest::Approx(2.0));
}

TEST_CASE("fitted exponents of power singularities") {
    ZygmundConfig c;
    c.s = 2.0;
    auto a = zygmund_norm(ex("abs(x1)^1.3", 1), 1, c);
    CHECK(std::fabs(a.fitted_exponent - 1.3) < 0.1);
    auto b = zygmund_norm(ex("abs(x1)^2.6", 1), 1, c);
    CHECK(std::fabs(b.fitted_exponent - 2.6) < 0.1);
    c.s = 1.0;
    auto d = zygmund_norm(ex("abs(x1)^2.6", 1), 1, c);
    CHECK(std::fabs(d.fitted_exponent - 2.0) < 0.1);
    auto e = zygmund_norm(ex("abs(x1)^1.3", 1), 1, c);
    CHECK(std::fabs(e.fitted_exponent - 1.3) < 0.1);
    CHECK(a.scales_used >= 4);

    auto p = zygmund_norm(ex("3*x1+1", 1), 1, c);
    CHECK(p.resolved_smooth);
    CHECK(p.fitted_exponent == 2.0);

    // Two-dimensional kink along x1 = 0.
    ZygmundConfig c2;
    c2.s = 2.0;
    auto k = zygmund_norm(ex("abs(x1)^1.6*sign(x1)+x2^2", 2), 2, c2);
    CHECK(std::fabs(k.fitted_exponent - 1.6) < 0.1);
}

TEST_CASE("grid input with finite-difference derivatives") {
    ZygmundConfig c;
    c.s = 2.0;
    c.radius = 1.0;
    GridGeometry g = ball_lattice({0.0, 0.0}, 1.05, 269);
    auto f = ex("abs(x1)^1.6*sign(x1)+sin(x2)", 2);
    GridField F = sample_expr(f, g);
    c.k_max = 6;
    auto r = zygmund_norm(F, c);
    CHECK(std::fabs(r.fitted_exponent - 1.6) < 0.15);
    // Smooth input: finite differences reproduce the symbolic estimate.
    auto sm = ex("sin(x1)*cos(2*x2)+x1*x2", 2);
    auto rg = zygmund_norm(sample_expr(sm, g), c);
    auto re = zygmund_norm(sm, 2, c);
    CHECK(std::fabs(rg.norm - re.norm) < 0.02 * re.norm);

    GridField too_coarse = sample_expr(f, ball_lattice({0.0, 0.0}, 1.0, 8));
    ZygmundConfig cc = c;
    cc.k_max = 6;
    CHECK_THROWS_AS(zygmund_norm(too_coarse, cc), std::invalid_argument);

    // Vector-valued: norm is the component max, exponent the component min.
    GridField V(g, {2});
    GridField a = sample_expr(ex("x1^2", 2), g), b = sample_expr(f, g);
    std::copy(a.values.begin(), a.values.end(), V.comp(0));
    std::copy(b.values.begin(), b.values.end(), V.comp(1));
    auto rv = zygmund_norm(V, c);
    CHECK(rv.components.size() == 2);
    CHECK(rv.fitted_exponent == doctest::Approx(r.fitted_exponent));
}

TEST_CASE("Holder norms") {
    ZygmundConfig c;
    c.radius = 1.0;
    CHECK(holder_norm(ex("-2.5", 1), 1, 0, 0.7, c) == doctest::Approx(2.5));
    CHECK(holder_norm(ex("x1", 1), 1, 0, 1.0, c) == doctest::Approx(2.0));

    // H^{1,0.5} against C^{1.5}: ratio recorded over the corpus.
    double lo = 1e300, hi = 0;
    for (const auto& s : corpus2) {
        auto f = ex(s, 2);
        ZygmundConfig z = cfg2(1.5);
        const double H = holder_norm(f, 2, 1, 0.5, z);
        const double Z = zygmund_norm(f, 2, z).norm;
        lo = std::min(lo, H / Z);
        hi = std::max(hi, H / Z);
    }
    MESSAGE("H^{1,0.5}/C^{1.5} ratio range " << lo << " .. " << hi);
    CHECK(lo > 0.1);
    CHECK(hi < 10);
}

TEST_CASE("estimate grows under refinement") {
    ZygmundConfig c;
    c.s = 1.5;
    c.max_pairs = 100000000;
    double prev = 0;
    for (int half : {8, 16, 32}) {
        GridGeometry g = ball_lattice({0.0, 0.0}, 1.0, half);
        auto F = sample_expr(ex("sin(3*x1)*x2+abs(x1-0.3)^1.7", 2), g);
        c.k_max = static_cast<int>(std::log2(half / 4.0));
        c.k_min = 1;
        auto r = zygmund_norm(F, c);
        CHECK(r.norm >= prev);
        prev = r.norm;
    }
}

TEST_CASE("scaling, algebra, composition and inverse on the corpus") {
    const double eta1 = 1.0, gamma = 0.2;
    for (const auto& s : corpus2) {
        auto f0 = ex(s, 2);
        double c0[2] = {0, 0};
        auto f = f0 - FieldExpr::constant(f0.eval(c0));  // f(0) = 0
        auto fg = f.substitute({FieldExpr::constant(gamma) * FieldExpr::variable(0),
                                FieldExpr::constant(gamma) * FieldExpr::variable(1)});
        ZygmundConfig big = cfg2(1.5, 5.0);
        ZygmundConfig small = cfg2(1.5, eta1);
        const double lhs = zygmund_norm(fg, 2, big).norm;
        const double rhs = 91 * gamma * zygmund_norm(f, 2, small).norm * 1.1;
        CHECK(lhs <= rhs);
    }

    const int m = 1;
    const double Cmn = std::pow(2.0, m + 1);
    double worst = 0;
    for (std::size_t i = 0; i < corpus2.size(); ++i) {
        auto f = ex(corpus2[i], 2), g = ex(corpus2[(i + 3) % corpus2.size()], 2);
        ZygmundConfig z = cfg2(1.5);
        const double nf = zygmund_norm(f, 2, z).norm, ng = zygmund_norm(g, 2, z).norm;
        const double nfg = zygmund_norm(f * g, 2, z).norm;
        worst = std::max(worst, nfg / (nf * ng));
        CHECK(nfg <= 4 * Cmn * nf * ng);
    }
    MESSAGE("algebra constant C_{1,2} = " << Cmn << ", worst observed ratio " << worst);

    // Composition with a smooth diffeomorphism and inversion of 1 + small function stay bounded.
    auto gx = ex("x1+0.2*sin(x2)", 2), gy = ex("x2+0.1*x1^2", 2);
    for (const auto& s : corpus2) {
        auto f = ex(s, 2);
        ZygmundConfig z = cfg2(1.5, 0.8);
        const double nf = zygmund_norm(f, 2, cfg2(1.5, 1.0)).norm;
        const double nc = zygmund_norm(f.substitute({gx, gy}), 2, z).norm;
        CHECK(std::isfinite(nc));
        CHECK(nc <= 20 * nf);
        auto inv = FieldExpr::constant(1.0) / (FieldExpr::constant(2.0) + FieldExpr::constant(0.5) * sin(f));
        CHECK(std::isfinite(zygmund_norm(inv, 2, z).norm));
    }
}

TEST_CASE("adapted estimator basics") {
    auto F = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}}, Domain{{0, 0}, 2.0});
    AdaptedConfig a;
    a.s = 1.5;
    a.base_points = lattice_points_in_ball({0, 0}, 0.4, 4);
    a.region = [](const double* x) { return std::hypot(x[0], x[1]) <= 1.0 + 1e-12; };
    auto c = x_adapted_zygmund(F, ex("4.5", 2), a);
    CHECK(c.second_diff_term == 0.0);
    CHECK(c.value == doctest::Approx(4.5));
    CHECK(c.failed_flows == 0);
    CHECK_FALSE(c.path_family.empty());
}

TEST_CASE("adapted estimator with coordinate fields matches the Euclidean one") {
    auto F = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}}, Domain{{0, 0}, 2.0});
    for (const char* s : {"sin(x1)*cos(x2)", "exp(x1*x2)", "x1^2-x2^3", "cos(x1+2*x2)"}) {
        auto f = ex(s, 2);
        ZygmundConfig z;
        z.s = 1.5;
        z.k_min = 2;
        z.k_max = 4;
        z.lattice_cells = 64;
        z.max_pairs = 2000000;
        auto e = zygmund_norm(f, 2, z);
        AdaptedConfig a;
        a.s = 1.5;
        a.base_points = lattice_points_in_ball({0, 0}, 1.0, 16);
        a.region = [](const double* x) { return std::hypot(x[0], x[1]) <= 1.0 + 1e-9; };
        a.scales = {0.25, 0.125, 0.0625};
        auto r = x_adapted_zygmund(F, f, a);
        CHECK(std::fabs(r.value - e.norm) < 0.05 * e.norm);
    }
}

TEST_CASE("adapted estimator is invariant under affine pushforward") {
    auto F = FieldSet::parse(2, {{"1", "x1"}, {"x2", "1"}, {"0", "1+x1^2"}}, Domain{{0, 0}, 5.0});
    auto f = ex("sin(x1)*exp(x2)", 2);
    // y = L x + b with L = [[2, 1], [0.5, 1.5]], b = (0.3, -0.2).
    const double L[2][2] = {{2, 1}, {0.5, 1.5}}, b[2] = {0.3, -0.2};
    const double det = L[0][0] * L[1][1] - L[0][1] * L[1][0];
    const double Li[2][2] = {{L[1][1] / det, -L[0][1] / det}, {-L[1][0] / det, L[0][0] / det}};
    auto y1 = FieldExpr::variable(0) - FieldExpr::constant(b[0]), y2 = FieldExpr::variable(1) - FieldExpr::constant(b[1]);
    std::vector<FieldExpr> xin = {FieldExpr::constant(Li[0][0]) * y1 + FieldExpr::constant(Li[0][1]) * y2,
                                  FieldExpr::constant(Li[1][0]) * y1 + FieldExpr::constant(Li[1][1]) * y2};
    std::vector<std::vector<FieldExpr>> pushed;
    for (int j = 0; j < 3; ++j) {
        auto X = F.field(j);
        auto a0 = X[0].substitute(xin), a1 = X[1].substitute(xin);
        pushed.push_back({FieldExpr::constant(L[0][0]) * a0 + FieldExpr::constant(L[0][1]) * a1,
                          FieldExpr::constant(L[1][0]) * a0 + FieldExpr::constant(L[1][1]) * a1});
    }
    FieldSet G(2, pushed, Domain{{0, 0}, 50.0});
    auto fy = f.substitute(xin);

    AdaptedConfig a;
    a.s = 1.5;
    a.tol = 1e-13;
    a.shoot_tol = 1e-13;
    a.linear_controls = true;
    a.base_points = lattice_points_in_ball({0, 0}, 0.3, 3);
    a.region = [](const double* x) { return std::hypot(x[0], x[1]) <= 0.8; };
    AdaptedConfig ay = a;
    ay.base_points.clear();
    for (const auto& p : a.base_points)
        ay.base_points.push_back({L[0][0] * p[0] + L[0][1] * p[1] + b[0], L[1][0] * p[0] + L[1][1] * p[1] + b[1]});
    ay.region = [&](const double* y) {
        double u[2] = {y[0] - b[0], y[1] - b[1]};
        double x[2] = {Li[0][0] * u[0] + Li[0][1] * u[1], Li[1][0] * u[0] + Li[1][1] * u[1]};
        return std::hypot(x[0], x[1]) <= 0.8;
    };
    auto rx = x_adapted_zygmund(F, f, a);
    auto ry = x_adapted_zygmund(G, fy, ay);
    CHECK(rx.paths == ry.paths);
    CHECK(std::fabs(rx.value - ry.value) < 1e-10 * rx.value);
}

TEST_CASE("flow-difference layers agree with symbolic layers") {
    auto F = FieldSet::parse(2, {{"1", "x1"}, {"x2", "1"}}, Domain{{0, 0}, 5.0});
    auto f = ex("sin(x1)+x1*x2", 2);
    AdaptedConfig a;
    a.s = 1.5;
    a.base_points = lattice_points_in_ball({0, 0}, 0.3, 2);
    a.region = [](const double* x) { return std::hypot(x[0], x[1]) <= 0.8; };
    a.max_pairs = 50;
    CompiledExpr cf(f);
    auto r1 = x_adapted_zygmund(F, f, a);
    auto r2 = x_adapted_zygmund(F, ScalarFn([&](const double* x) { return cf.eval(x); }), a);
    CHECK(std::fabs(r1.value - r2.value) < 1e-5 * r1.value);
}
