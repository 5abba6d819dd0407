#include "doctest.h"

#include <cmath>

#include "achart/densities.hpp"

using namespace achart;

namespace {

Domain ball2(double r = 50) { return Domain{{0.0, 0.0}, r}; }

Field fld(const std::vector<std::string>& t) {
    Field f;
    for (const auto& s : t) f.push_back(parse_field_expr(s, 2));
    return f;
}

}  // namespace

TEST_CASE("nu0 is normalised, multilinear and alternating") {
    auto F = FieldSet::parse(2, {{"1", "x2"}, {"x1", "2"}, {"0", "1"}}, ball2());
    const std::vector<int> J0 = {0, 1};
    double p[2] = {0.3, -0.4};
    CHECK(nu0_eval(F, J0, {F.field(0), F.field(1)}, p) == doctest::Approx(1.0));
    CHECK(nu0_eval(F, J0, {fld({"2", "2*x2"}), F.field(1)}, p) == doctest::Approx(2.0));
    CHECK(nu0_eval(F, J0, {F.field(2), F.field(2)}, p) == 0.0);
    // Additivity in the first slot at three points.
    for (auto [a, b] : {std::pair{0.1, 0.2}, std::pair{-0.7, 0.5}, std::pair{1.1, -0.9}}) {
        double q[2] = {a, b};
        const double lhs = nu0_eval(F, J0, {fld({"1+x1", "x2+x1*x2"}), F.field(2)}, q);
        // (X_1 + x1 d1 ... ) wedge d2: only the d1 component contributes.
        const double wedge = std::abs(1 * 2 - b * a);
        CHECK(lhs == doctest::Approx(std::abs(1 + a) / wedge));
    }
    auto S = FieldSet::parse(2, {{"x1", "0"}, {"0", "1"}}, ball2());
    double o[2] = {0.0, 0.0};
    CHECK_THROWS_AS(nu0_eval(S, J0, {S.field(0), S.field(1)}, o), std::domain_error);
}

TEST_CASE("divergence rates of the weighted density") {
    auto F = FieldSet::parse(2, {{"1", "0"}, {"0", "x1"}}, ball2());
    auto rates = divergence_rates(F, parse_field_expr("exp(x1)", 2));
    double p[2] = {0.4, 0.2};
    CHECK(rates[0].eval(p) == doctest::Approx(1.0));
    CHECK(std::abs(rates[1].eval(p)) < 1e-14);
}

TEST_CASE("Lebesgue density and coordinate fields") {
    auto F = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}}, ball2());
    ChartConfig cfg;
    cfg.chart0.radius = 5.0;
    cfg.half_cells = 8;
    AdaptedChart ch = build_full_chart(F, {0.0, 0.0}, cfg);
    REQUIRE(ch.K == 1.0);
    DensityReport r = pullback_density(ch, FieldExpr::constant(1.0));
    for (std::size_t p = 0; p < r.lattice.size(); ++p) {
        if (!r.inside[p]) continue;
        CHECK(r.h.at(0, p) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(r.h0.at(0, p) == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK(r.sign_constant);
    CHECK(r.nu_frame == 1.0);

    VerifyConfig vc;
    vc.norms = false;
    vc.s_list.clear();
    vc.xi_samples = 40;
    verify_theorem(ch, vc);
    BallConfig bc;
    bc.samples = 40000;
    VolumeTable t = volume_compare(ch, FieldExpr::constant(1.0), bc);
    CHECK(t.nu_ball_x == doctest::Approx(M_PI * t.xi2 * t.xi2).epsilon(0.05));
    CHECK(t.frame_over_max <= 1.0);
}

TEST_CASE("scaled chart gives h0 = K^-n") {
    // A = 0 with the default radius 1 forces gamma = 1/5 and K = 5.
    auto F = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}}, ball2());
    ChartConfig cfg;
    cfg.half_cells = 6;
    AdaptedChart ch = build_full_chart(F, {0.0, 0.0}, cfg);
    REQUIRE(ch.K == doctest::Approx(5.0));
    DensityReport r = pullback_density(ch, FieldExpr::constant(1.0));
    CHECK(r.h0.at(0, r.lattice.size() / 2) == doctest::Approx(1.0 / 25.0));
    CHECK(r.h.at(0, r.lattice.size() / 2) == doctest::Approx(1.0 / 25.0));
}

TEST_CASE("exponential weight through a curved chart") {
    auto F = FieldSet::parse(2, {{"1", "0"}, {"0", "1"}, {"0", "x1"}}, ball2());
    ChartConfig cfg;
    cfg.half_cells = 10;
    AdaptedChart ch = build_full_chart(F, {0.5, 0.2}, cfg);
    DensityReport r = pullback_density(ch, parse_field_expr("exp(x1)", 2));
    CHECK(r.sign_constant);
    CHECK_FALSE(r.vanishing);
    CHECK(r.h_jacobian_residual < 1e-6);
    CHECK(r.h0_identity_residual < 1e-8);
    CHECK(std::abs(r.g_from_chart - r.g_x0) < 1e-10);
    CHECK(r.g_residual < 1e-8);
    CHECK(r.g_x0 == doctest::Approx(std::exp(0.5)));
    CHECK(r.nu_frame == doctest::Approx(std::exp(0.5)));
}
