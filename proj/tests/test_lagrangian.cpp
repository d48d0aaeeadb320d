#include <gtest/gtest.h>

#include <filesystem>

#include "varcalc/lagrangian.hpp"

using namespace varcalc;

namespace {

std::string theory_path(const std::string& name) { return std::string(VARCALC_THEORY_DIR) + "/" + name; }

Theory load(const std::string& name) { return build_theory(load_theory(theory_path(name))); }

std::vector<Theory> corpus() {
    std::vector<Theory> out;
    for (const auto& e : std::filesystem::directory_iterator(VARCALC_THEORY_DIR))
        if (e.path().extension() == ".thy") out.push_back(build_theory(load_theory(e.path().string())));
    return out;
}

std::string code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

Form F(const Theory& t, const std::string& text) { return parse_form(t.def, text); }

}  // namespace

TEST(Lagrangian, BuildInvariantsOnCorpus) {
    for (const Theory& t : corpus()) {
        const Context& ctx = t.ctx();
        EXPECT_EQ(d_v(ctx, t.L), t.EL + d_h(ctx, t.theta)) << t.def.name;
        EXPECT_EQ(d_h(ctx, t.omega), d_v(ctx, t.EL)) << t.def.name;
        EXPECT_TRUE(interior_euler(ctx, d_v(ctx, t.EL)).is_zero()) << t.def.name;
        EXPECT_EQ(projector(ctx, t.Lh), t.Lh) << t.def.name;
    }
}

TEST(Lagrangian, ZeroLagrangianHasZeroCaches) {
    TheoryDef d = parse_theory("[dimension]\n2\n[signature]\n- +\n[fields]\nphi : scalar\n[lagrangian]\nL := 0\n");
    Theory t = build_theory(d);
    EXPECT_TRUE(t.EL.is_zero());
    EXPECT_TRUE(t.theta.is_zero());
    EXPECT_TRUE(t.omega.is_zero());
    EXPECT_TRUE(t.Lh.is_zero());
}

TEST(Lagrangian, PointParticle) {
    Theory t = load("point_particle.thy");
    EXPECT_EQ(t.EL, F(t, "(-m*q_,00 - V'(q))*delta(q)*dt"));
    EXPECT_EQ(t.Lh, F(t, "(-1/2*m*q_,00*q - V(q) + V(0))*dt"));
    // momentum term of theta; the anticommuting differentials put a minus sign in front of p dq
    EXPECT_EQ(t.theta, F(t, "-m*q_,0*delta(q)"));
}

TEST(Lagrangian, ScalarPotential) {
    Theory t = load("scalar_field.thy");
    EXPECT_EQ(t.theta, -F(t, "star(d(phi))^delta(phi)"));
}

TEST(Lagrangian, ProjectorOutputs) {
    Theory m = load("maxwell_first_order.thy");
    EXPECT_EQ(m.Lh, F(m, "1/2*(B^d(A) - d(B)^A) - 1/2*B^star(B)"));
    Theory cs = load("chern_simons_su2.thy");
    EXPECT_EQ(cs.Lh, cs.L);
}

TEST(Lagrangian, FirstOrderMaxwellEquations) {
    Theory t = load("maxwell_first_order.thy");
    EXPECT_EQ(t.EL, F(t, "delta(B)^(d(A) - star(B)) + delta(A)^d(B)"));
}

TEST(Lagrangian, Equivalence) {
    Theory pp = load("point_particle.thy");
    Theory shifted = build_theory(pp.def, pp.L + F(pp, "dt"));
    Equivalence e = lagrangians_equivalent(pp, shifted);
    EXPECT_TRUE(e.equivalent);
    EXPECT_EQ(e.constant_part, F(pp, "dt"));

    Theory coupled = build_theory(pp.def, pp.L + F(pp, "q**2*dt"));
    Equivalence ne = lagrangians_equivalent(pp, coupled);
    EXPECT_FALSE(ne.equivalent);
    EXPECT_EQ(ne.el_difference, F(pp, "2*q*delta(q)*dt"));

    Theory m = load("maxwell_first_order.thy");
    Theory mh = build_theory(m.def, m.Lh);
    Equivalence w = lagrangians_equivalent(m, mh);
    ASSERT_TRUE(w.equivalent);
    const Context& ctx = m.ctx();
    EXPECT_TRUE(w.constant_part.is_zero());
    EXPECT_EQ(d_h(ctx, w.primitive), F(m, "-1/2*d(B^A)"));
}

TEST(Lagrangian, SymmetryChecks) {
    Theory sf = load("scalar_free.thy");
    for (const auto& s : sf.def.symmetries) EXPECT_TRUE(is_symmetry(sf, s.rho)) << s.name;

    // rescaling phi by a constant parameter does not preserve a generic potential
    Theory sp = load("scalar_field.thy");
    const Context& ctx = sp.ctx();
    EvolutionaryField scale;
    int phi = ctx.find_comp("phi");
    scale.comps[phi] = jet(ctx, ctx.find_comp("s")) * jet(ctx, phi);
    EXPECT_FALSE(is_symmetry(sp, scale));
    EXPECT_EQ(code_of([&] { noether_cone(sp, scale); }), "NotASymmetry");

    EXPECT_TRUE(is_symmetry(sp, EvolutionaryField{}));
}

TEST(Lagrangian, SymmetryIndependentOfRepresentative) {
    for (const Theory& t : corpus()) {
        Theory th = build_theory(t.def, t.Lh);
        for (const auto& s : t.def.symmetries) EXPECT_EQ(is_symmetry(t, s.rho), is_symmetry(th, s.rho)) << t.def.name;
    }
}

TEST(Lagrangian, SourcedMaxwellConeCurrent) {
    Theory t = load("maxwell_sourced.thy");
    const SymmetryDef& g = *t.def.symmetry("gauge");
    EXPECT_EQ(t.EL, F(t, "(d(star(F)) - j_ext)^delta(A)"));
    ConeCurrent c = noether_cone(t, g.rho);
    EXPECT_EQ(c.S, F(t, "j_ext^d(xi)"));
    // fixed by Noether I given S and E L above: d(-*F^dxi) = -S + i E L
    EXPECT_EQ(c.J, -F(t, "star(F)^d(xi)"));
    EXPECT_TRUE(verify_noether1(t, g.rho, c).pass);
}

TEST(Lagrangian, PerturbedCurrentFailsNoether1) {
    Theory t = load("maxwell_sourced.thy");
    const SymmetryDef& g = *t.def.symmetry("gauge");
    ConeCurrent c = noether_cone(t, g.rho);
    c.J += F(t, "xi*A[0]*dx1*dx2*dx3");
    Report r = verify_noether1(t, g.rho, c);
    EXPECT_FALSE(r.pass);
    EXPECT_FALSE(r.forms.front().second.is_zero());
}

TEST(Lagrangian, ShiftCurrent) {
    Theory t = load("scalar_free.thy");
    const SymmetryDef& s = *t.def.symmetry("shift");
    ConeCurrent c = noether_cone(t, s.rho);
    EXPECT_TRUE(c.S.is_zero());
    // i_rho passes the odd contraction through the 3-form *dphi, undoing the sign of theta
    EXPECT_EQ(c.J, F(t, "s*star(d(phi))"));
}

TEST(Lagrangian, ZeroActionHasZeroCurrent) {
    Theory t = load("maxwell.thy");
    ConeCurrent c = noether_cone(t, EvolutionaryField{});
    EXPECT_TRUE(c.S.is_zero());
    EXPECT_TRUE(c.J.is_zero());
}

TEST(Lagrangian, DualCurrentDecomposition) {
    Theory t = load("maxwell.thy");
    const Context& ctx = t.ctx();
    std::vector<int> xi = parameter_components(*t.def.symmetry("gauge"));
    for (const char* text : {"d(xi)^star(F)", "xi*star(F)", "d(xi)^A[0]_,1*dx2*dx3", "xi*A[1]*dx0 + d(xi)*A[2]_,3"}) {
        Form in = F(t, text);
        DualSplit s = decompose_dual_current(ctx, in, xi);
        EXPECT_EQ(s.f + d_h(ctx, s.k), in) << text;
    }
    DualSplit z = decompose_dual_current(ctx, Form(), xi);
    EXPECT_TRUE(z.f.is_zero() && z.k.is_zero());
    EXPECT_EQ(code_of([&] { decompose_dual_current(ctx, F(t, "xi**2*dx0"), xi); }), "NonlinearParameter");
    EXPECT_EQ(code_of([&] { decompose_dual_current(ctx, F(t, "A[0]*dx0"), xi); }), "NonlinearParameter");
}

TEST(Lagrangian, SourcedMaxwellNoether2) {
    Theory t = load("maxwell_sourced.thy");
    NoetherData n = noether2(t, *t.def.symmetry("gauge"));
    EXPECT_EQ(n.C, F(t, "d(star(F))*xi"));
    EXPECT_EQ(n.K, -F(t, "star(F)*xi"));
    EXPECT_EQ(n.j, F(t, "xi*j_ext"));
    EXPECT_TRUE(n.s.is_zero());
    EXPECT_EQ(n.S, n.s - d_h(t.ctx(), n.j));
    EXPECT_TRUE(n.onshell.is_zero());
    EXPECT_TRUE(reduce_on_shell(t, n.C - n.j).is_zero());
}

TEST(Lagrangian, YangMillsHasNoExternalCurrent) {
    Theory t = load("yang_mills_su2.thy");
    NoetherData n = noether2(t, *t.def.symmetry("gauge"));
    EXPECT_TRUE(n.S.is_zero());
    EXPECT_TRUE(n.j.is_zero());
    EXPECT_EQ(n.J, n.C + d_h(t.ctx(), n.K));
    EXPECT_TRUE(n.onshell.is_zero());
}

TEST(Lagrangian, Noether2ReconstructsCurrent) {
    for (const Theory& t : corpus())
        for (const auto& s : t.def.symmetries) {
            bool local = true;
            for (const auto& p : s.params) local = local && p.kind == Kind::Parameter;
            if (!local) {
                EXPECT_EQ(code_of([&] { noether2(t, s); }), "NotLocal") << t.def.name;
                continue;
            }
            NoetherData n = noether2(t, s);
            EXPECT_EQ(n.J, n.C + d_h(t.ctx(), n.K)) << t.def.name;
            EXPECT_EQ(n.S, n.s - d_h(t.ctx(), n.j)) << t.def.name;
            EXPECT_TRUE(n.onshell.is_zero()) << t.def.name << " " << render(t.ctx(), n.onshell);
        }
}

TEST(Lagrangian, BFConstraintCurrent) {
    Theory t = load("bf_abelian_4d.thy");
    NoetherData n = noether2(t, *t.def.symmetry("gauge"));
    // the constraint current is a combination of the equations of motion dA and dB times the parameters
    EXPECT_TRUE(reduce_on_shell(t, n.C).is_zero());
    EXPECT_FALSE(n.K.is_zero());
    EXPECT_EQ(n.J, n.C + d_h(t.ctx(), n.K));
}

TEST(Lagrangian, ReduceOnShell) {
    Theory pp = load("point_particle.thy");
    EXPECT_TRUE(reduce_on_shell(pp, F(pp, "(m*q_,00 + V'(q))*dt")).is_zero());
    EXPECT_TRUE(reduce_on_shell(pp, F(pp, "(m*q_,000 + q_,0*V''(q))*dt")).is_zero());
    Form plain = F(pp, "q*q_,0*dt");
    EXPECT_EQ(reduce_on_shell(pp, plain), plain);

    TheoryDef d = parse_theory("[dimension]\n1\n[signature]\n-\n[fields]\nq : scalar\n[lagrangian]\nL := q*dx0\n");
    Theory lin = build_theory(d);
    EXPECT_EQ(code_of([&] { reduce_on_shell(lin, parse_form(d, "q_,0*dx0")); }), "NoSolvedForm");
}

TEST(Lagrangian, IdentityCatalogOnCorpus) {
    for (const Theory& t : corpus()) {
        EXPECT_TRUE(verify_theory_identity(t, "dbom").pass) << t.def.name;
        for (const auto& s : t.def.symmetries)
            for (const auto& id : identity_catalog()) {
                Report r = verify_identity(t, s, id);
                EXPECT_TRUE(r.pass || !r.applicable) << t.def.name << " " << s.name << " " << id << " "
                                                      << render(t.ctx(), r.forms.front().second);
            }
    }
}

TEST(Lagrangian, CatalogRejectsUnknownName) {
    Theory t = load("maxwell.thy");
    EXPECT_EQ(code_of([&] { verify_identity(t, t.def.symmetries.front(), "nope"); }), "UnknownIdentity");
}

TEST(Lagrangian, YangMillsBracketIdentities) {
    Theory t = load("yang_mills_su2.thy");
    const SymmetryDef& g = *t.def.symmetry("gauge");
    for (const char* id : {"equi-dJ", "inv-C", "jext=0"}) {
        Report r = verify_identity(t, g, id);
        EXPECT_TRUE(r.applicable) << id;
        EXPECT_TRUE(r.pass) << id;
    }
}
