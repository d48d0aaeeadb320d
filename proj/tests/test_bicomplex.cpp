#include <gtest/gtest.h>

#include "support.hpp"

using namespace varcalc;
using vt::Gen;

namespace {

constexpr int kCases = 200;

Form d(const Context& c, const Form& f) { return d_h(c, f); }

// i o I on top forms, zero elsewhere
Form incl_euler(const Context& ctx, const Form& f) {
    auto g = f.grading();
    if (!g || g->q != ctx.dim) return Form();
    return interior_euler(ctx, f);
}

Form h_or_zero(const Context& ctx, const Form& f) {
    auto g = f.grading();
    if (!g || g->q == 0) return Form();
    return h_horizontal(ctx, f);
}

Form d_or_zero(const Context& ctx, const Form& f) {
    auto g = f.grading();
    if (!g || g->q == ctx.dim) return Form();
    return d(ctx, f);
}

Form proj_or_zero(const Context& ctx, const Form& f) {
    auto g = f.grading();
    if (!g || g->q != ctx.dim) return Form();
    return projector(ctx, f);
}

}  // namespace

TEST(Bicomplex, TotalDerivativeOfScalar) {
    Context ctx = vt::make_context(2);
    Form f = d(ctx, jet(ctx, 0));
    Form want = jet(ctx, 0, MultiIndex{}.plus(0)) * dx(0) + jet(ctx, 0, MultiIndex{}.plus(1)) * dx(1);
    EXPECT_EQ(f, want);
}

TEST(Bicomplex, VerticalLeibniz) {
    Context ctx = vt::make_context(1);
    Form u = jet(ctx, 0);
    EXPECT_EQ(d_v(ctx, u * u), (u * leg(ctx, 0)) * Rational(2));
    EXPECT_TRUE(d_v(ctx, jet(ctx, 2) * dx(0)).is_zero());
}

TEST(Bicomplex, InteriorEulerOneIntegrationByParts) {
    Context ctx = vt::make_context(2);
    Form c = jet(ctx, 0) * jet(ctx, 1, MultiIndex{}.plus(1));
    Form w = c * leg(ctx, 0, MultiIndex{}.plus(0)) * vol(ctx);
    Form want = -(total_derivative(ctx, c, 0) * leg(ctx, 0) * vol(ctx));
    EXPECT_EQ(interior_euler(ctx, w), want);
}

TEST(Bicomplex, VerticalHomotopyLinearTerm) {
    Context ctx = vt::make_context(2);
    EXPECT_EQ(h_vertical(ctx, leg(ctx, 0) * vol(ctx)), jet(ctx, 0) * vol(ctx));
}

TEST(Bicomplex, GradingErrors) {
    Context ctx = vt::make_context(2);
    EXPECT_THROW(interior_euler(ctx, leg(ctx, 0) * dx(0)), Error);
    EXPECT_THROW(h_horizontal(ctx, jet(ctx, 0) * dx(0)), Error);
    EXPECT_THROW(h_zero(ctx, leg(ctx, 0) * dx(0)), Error);
    EXPECT_TRUE(h_horizontal(ctx, Form()).is_zero());
}

class Identities : public ::testing::TestWithParam<int> {};

TEST_P(Identities, HorizontalNilpotence) {
    Gen g(11 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        int q = g.uniform(0, ctx.dim - 2 < 0 ? 0 : ctx.dim - 2);
        Form a = g.form(ctx, g.uniform(0, 2), q);
        ASSERT_TRUE(d(ctx, d(ctx, a)).is_zero());
    }
}

TEST_P(Identities, AnticommutingDifferentials) {
    Gen g(21 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, g.uniform(0, 2), g.uniform(0, ctx.dim - 1));
        ASSERT_TRUE((d(ctx, d_v(ctx, a)) + d_v(ctx, d(ctx, a))).is_zero());
        ASSERT_TRUE(d_v(ctx, d_v(ctx, a)).is_zero());
    }
}

TEST_P(Identities, InteriorEulerRetraction) {
    Gen g(31 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, g.uniform(1, 2), ctx.dim);
        Form s = interior_euler(ctx, a);
        ASSERT_EQ(interior_euler(ctx, s), s);
    }
}

TEST_P(Identities, HorizontalHomotopy) {
    Gen g(41 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        int q = g.uniform(0, ctx.dim);
        Form a = g.form(ctx, g.uniform(1, 2), q);
        Form rhs = h_or_zero(ctx, d_or_zero(ctx, a)) + d(ctx, h_or_zero(ctx, a)) + incl_euler(ctx, a);
        ASSERT_EQ(rhs, a) << "q=" << q << " case " << i;
    }
}

TEST_P(Identities, HorizontalSideConditions) {
    Gen g(51 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, g.uniform(1, 2), ctx.dim);
        // h vanishes on source forms, and I kills the exact part of the decomposition
        ASSERT_TRUE(h_horizontal(ctx, interior_euler(ctx, a)).is_zero());
        ASSERT_TRUE(interior_euler(ctx, d(ctx, h_horizontal(ctx, a))).is_zero());
        // exterior Euler operator is nilpotent
        Form b = g.form(ctx, g.uniform(0, 1), ctx.dim);
        ASSERT_TRUE(exterior_euler(ctx, exterior_euler(ctx, b)).is_zero());
    }
}

TEST_P(Identities, TakensPrimitive) {
    Gen g(61 + GetParam());
    Context ctx = vt::make_context(GetParam());
    if (ctx.dim < 2) GTEST_SKIP();
    for (int i = 0; i < kCases / 2; ++i) {
        Form beta = g.form(ctx, g.uniform(1, 2), g.uniform(0, ctx.dim - 2));
        Form db = d(ctx, beta);
        ASSERT_EQ(d(ctx, h_horizontal(ctx, db)), db);
    }
}

TEST_P(Identities, VerticalHomotopy) {
    Gen g(71 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, g.uniform(0, 2), g.uniform(0, ctx.dim));
        Form rhs = h_vertical(ctx, d_v(ctx, a)) + d_v(ctx, h_vertical(ctx, a)) + zero_section(ctx, a);
        ASSERT_EQ(rhs, a) << "case " << i;
        ASSERT_TRUE((h_vertical(ctx, d(ctx, a)) + d(ctx, h_vertical(ctx, a))).is_zero());
        Form ha = h_vertical(ctx, a);
        ASSERT_TRUE(h_vertical(ctx, ha).is_zero());
        ASSERT_TRUE(zero_section(ctx, ha).is_zero());
        Form c = g.constant_form(ctx, g.uniform(0, ctx.dim));
        ASSERT_TRUE(h_vertical(ctx, c).is_zero());
    }
}

TEST_P(Identities, VerticalHomotopyWithFunctions) {
    Gen g(81 + GetParam());
    Context ctx = vt::make_context(GetParam(), true);
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, g.uniform(0, 2), g.uniform(0, ctx.dim), 3, 2, 2, true);
        Form rhs = h_vertical(ctx, d_v(ctx, a)) + d_v(ctx, h_vertical(ctx, a)) + zero_section(ctx, a);
        ASSERT_TRUE(vt::equal_by_evaluation(ctx, rhs, a, g)) << "case " << i;
        ASSERT_TRUE(vt::equal_by_evaluation(ctx, h_vertical(ctx, h_vertical(ctx, a)), Form(), g));
    }
}

TEST_P(Identities, EulerProjectors) {
    Gen g(91 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, 0, ctx.dim);
        Form pa = projector(ctx, a);
        ASSERT_EQ(projector(ctx, pa), pa);
        Form p0 = projector0(ctx, a);
        ASSERT_EQ(projector0(ctx, p0), p0);
        if (ctx.dim >= 1) {
            Form z = g.form(ctx, 0, ctx.dim - 1);
            ASSERT_TRUE(projector(ctx, d(ctx, z)).is_zero());
        }
        ASSERT_TRUE(projector(ctx, g.constant_form(ctx, ctx.dim)).is_zero());
    }
}

TEST_P(Identities, ZeroHomotopy) {
    Gen g(101 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, 0, g.uniform(0, ctx.dim));
        Form rhs = d(ctx, h_zero(ctx, a)) + h_zero(ctx, d_or_zero(ctx, a)) + proj_or_zero(ctx, a) + zero_section(ctx, a);
        ASSERT_EQ(rhs, a) << "case " << i;
    }
}

TEST_P(Identities, Cone) {
    Gen g(111 + GetParam());
    Context ctx = vt::make_context(GetParam());
    for (int i = 0; i < kCases / 2; ++i) {
        int q = g.uniform(0, ctx.dim);
        ConePair x{q > 0 ? g.constant_form(ctx, q - 1) : Form(), g.form(ctx, 0, q)};
        ConePair dd = cone_d(ctx, cone_d(ctx, x));
        ASSERT_TRUE(dd.a.is_zero() && dd.b.is_zero());
        ConePair hx = cone_h(ctx, x);
        ConePair dh = cone_d(ctx, hx);
        ConePair hd = cone_h(ctx, cone_d(ctx, x));
        Form pb = proj_or_zero(ctx, x.b);
        ASSERT_EQ(dh.a + hd.a, x.a) << "case " << i;
        ASSERT_EQ(dh.b + hd.b + pb, x.b) << "case " << i;
    }
}

INSTANTIATE_TEST_SUITE_P(Dims, Identities, ::testing::Values(1, 2, 3));

TEST(Evolutionary, ProlongationAndContraction) {
    Context ctx = vt::make_context(2);
    int xi = ctx.add_comp({"xi", 0, Kind::Parameter, "xi"});
    EvolutionaryField v;
    v.comps[0] = jet(ctx, xi, MultiIndex{}.plus(1));
    EXPECT_EQ(prolong(ctx, v, jet(ctx, 0, MultiIndex{}.plus(0))), jet(ctx, xi, MultiIndex{}.plus(0).plus(1)));
    EXPECT_EQ(insert(ctx, v, leg(ctx, 0)), v.comps[0]);
    EXPECT_TRUE(lie_derivative(ctx, v, vol(ctx)).is_zero());
}

TEST(Evolutionary, CommutationIdentities) {
    Gen g(7);
    Context ctx = vt::make_context(2);
    for (int i = 0; i < 100; ++i) {
        EvolutionaryField v;
        v.comps[0] = g.form(ctx, 0, 0, 2, 2, 1);
        v.comps[1] = g.form(ctx, 0, 0, 2, 2, 1);
        Form a = g.form(ctx, g.uniform(0, 2), g.uniform(0, 1));
        // prolongation commutes with total derivatives and agrees with the Cartan formula
        ASSERT_EQ(prolong(ctx, v, total_derivative(ctx, a, 1)), total_derivative(ctx, prolong(ctx, v, a), 1));
        ASSERT_EQ(prolong(ctx, v, a), lie_derivative(ctx, v, a));
        ASSERT_TRUE((insert(ctx, v, d(ctx, a)) + d(ctx, insert(ctx, v, a))).is_zero());
        ASSERT_EQ(lie_derivative(ctx, v, d(ctx, a)), d(ctx, lie_derivative(ctx, v, a)));
        Form w = g.form(ctx, 2, 1);
        ASSERT_TRUE(insert(ctx, v, insert(ctx, v, w)).is_zero());
    }
}

TEST(Hodge, FlatMinkowskiVolume) {
    Context ctx;
    ctx.set_flat({-1, 1, 1, 1});
    Form s = hodge_star(ctx, Form::scalar(1));
    EXPECT_EQ(s, vol(ctx));
    // a ^ *b = <a,b> vol
    EXPECT_EQ(dx(1) * hodge_star(ctx, dx(1)), vol(ctx));
    EXPECT_EQ(dx(0) * hodge_star(ctx, dx(0)), -vol(ctx));
    EXPECT_EQ((dx(0) * dx(2)) * hodge_star(ctx, dx(0) * dx(2)), -vol(ctx));
    EXPECT_EQ(hodge_star(ctx, hodge_star(ctx, dx(1))), dx(1));
}
