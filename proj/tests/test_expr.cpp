#include <gtest/gtest.h>

#include "support.hpp"

using namespace varcalc;
using vt::Gen;

namespace {

constexpr int kCases = 200;

int total_degree(const Form& f) {
    auto g = f.grading();
    return g ? g->p + g->q + g->g : 0;
}

// Single random homogeneous term, so that the Koszul sign is well defined.
Form random_term(const Context& ctx, Gen& g) {
    Form f;
    do {
        f = g.form(ctx, g.uniform(0, 2), g.uniform(0, ctx.dim), 1, 2, 2);
    } while (f.is_zero());
    if (g.uniform(0, 2) == 0) f = f * jet(ctx, 3, g.mi(ctx, 1));
    return f;
}

}  // namespace

TEST(Expr, RepeatedLegVanishes) {
    Context ctx = vt::make_context(1);
    EXPECT_TRUE((leg(ctx, 0) * leg(ctx, 0) * dx(0)).is_zero());
}

TEST(Expr, HorizontalAntisymmetry) {
    Context ctx = vt::make_context(2);
    Form phi = jet(ctx, 0);
    EXPECT_TRUE((phi * (dx(0) * dx(1) + dx(1) * dx(0))).is_zero());
    EXPECT_EQ(dx(0) * dx(1), -(dx(1) * dx(0)));
}

TEST(Expr, NormalizeIsIdempotent) {
    Context ctx = vt::make_context(3, true, true);
    Gen g(11);
    for (int i = 0; i < kCases; ++i) {
        Form f = g.form(ctx, g.uniform(0, 2), g.uniform(0, 3), 4, 3, 2);
        Form once = f;
        once.normalize();
        Form twice = once;
        twice.normalize();
        EXPECT_EQ(once, twice);
        EXPECT_EQ(once, f);
    }
}

TEST(Expr, GradedCommutativity) {
    Context ctx = vt::make_context(3, false, true);
    Gen g(12);
    for (int i = 0; i < kCases; ++i) {
        Form a = random_term(ctx, g), b = random_term(ctx, g);
        int s = (total_degree(a) * total_degree(b)) % 2 ? -1 : 1;
        EXPECT_EQ(a * b, (b * a) * Rational(s));
    }
}

TEST(Expr, Associativity) {
    Context ctx = vt::make_context(3, true, true);
    Gen g(13);
    for (int i = 0; i < kCases; ++i) {
        Form a = g.form(ctx, g.uniform(0, 1), g.uniform(0, 1), 2, 2, 1);
        Form b = g.form(ctx, g.uniform(0, 1), g.uniform(0, 1), 2, 2, 1);
        Form c = g.form(ctx, g.uniform(0, 1), g.uniform(0, 1), 2, 2, 1);
        EXPECT_EQ((a * b) * c, a * (b * c));
    }
}

TEST(Expr, OddGeneratorSquaresToZero) {
    Context ctx = vt::make_context(2, false, true);
    Form c = jet(ctx, 3);
    EXPECT_TRUE((c * c).is_zero());
    Form c1 = jet(ctx, 3, MultiIndex{}.plus(1));
    EXPECT_EQ(c * c1, -(c1 * c));
}

TEST(Expr, JetCutoff) {
    Context ctx = vt::make_context(1);
    ctx.cutoff = 2;
    Form u2 = jet(ctx, 0, MultiIndex{}.plus(0, 2));
    try {
        total_derivative(ctx, u2, 0);
        FAIL() << "expected JetCutoffExceeded";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "JetCutoffExceeded");
    }
}

TEST(Expr, EvaluateAtPoint) {
    Context ctx = vt::make_context(2);
    Point pt{[](const Atom& a) -> std::optional<Rational> {
        if (a.kind == AtomKind::Jet) return frac(3, 2);
        if (a.kind == AtomKind::Horiz) return Rational(1);
        return std::nullopt;
    }};
    EXPECT_EQ(evaluate(ctx, jet(ctx, 0) * dx(0), pt), frac(3, 2));
    EXPECT_EQ(evaluate(ctx, Form(), pt), 0);
    Point empty{[](const Atom&) -> std::optional<Rational> { return std::nullopt; }};
    try {
        evaluate(ctx, jet(ctx, 0), empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "UnassignedSymbol");
    }
}

TEST(Expr, NilpotenceByEvaluation) {
    Context ctx = vt::make_context(3);
    Gen g(14);
    for (int i = 0; i < 50; ++i) {
        Form a = g.form(ctx, 1, 1, 3, 3, 2);
        Form dda = d_h(ctx, d_h(ctx, a));
        EXPECT_EQ(evaluate(ctx, dda, g.point()), 0);
    }
}

TEST(Expr, SubstituteZero) {
    Context ctx = vt::make_context(1);
    Form u = jet(ctx, 0);
    EXPECT_TRUE(substitute(ctx, u * u * dx(0), {{0, Form()}}).is_zero());
}

TEST(Expr, SubstituteProlongsToDerivatives) {
    Context ctx = vt::make_context(2);
    Form v = jet(ctx, 1);
    Form image = v * v;
    Form f = jet(ctx, 0, MultiIndex{}.plus(1)) * dx(0);
    Form want = total_derivative(ctx, image, 1) * dx(0);
    EXPECT_EQ(substitute(ctx, f, {{0, image}}), want);
}

TEST(Expr, SubstituteRejectsGhostMismatch) {
    Context ctx = vt::make_context(1, false, true);
    try {
        substitute(ctx, jet(ctx, 0), {{0, jet(ctx, 3)}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "GhostDegreeMismatch");
    }
}

TEST(Expr, LambdaScalingMatchesTermwise) {
    Context ctx = vt::make_context(2);
    Gen g(15);
    for (int i = 0; i < 50; ++i) {
        Form f = g.form(ctx, 0, 1, 3, 3, 1);
        Form lam = Form::atom(Atom::lambda(1));
        Form scaled = substitute(ctx, f, {{0, lam * jet(ctx, 0)}, {1, lam * jet(ctx, 1)}});
        // termwise oracle: each term picks lambda^(number of dynamic jets)
        Form want;
        for (const auto& t : f.terms) {
            int k = 0;
            for (const auto& x : t.fac)
                if (x.atom.kind == AtomKind::Jet && ctx.dynamic(x.atom.id)) k += x.pow;
            Form one;
            one.terms.push_back(t);
            want += one * Form::atom(Atom::lambda(1), k);
        }
        EXPECT_EQ(scaled, want);
    }
}
