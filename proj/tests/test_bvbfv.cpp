#include <gtest/gtest.h>

#include <algorithm>

#include "varcalc/bvbfv.hpp"

using namespace varcalc;

namespace {

std::string theory_path(const std::string& name) { return std::string(VARCALC_THEORY_DIR) + "/" + name; }

Theory load(const std::string& name) { return build_theory(load_theory(theory_path(name))); }

std::string code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

int comp(const Context& c, const std::string& name) {
    int k = c.find_comp(name);
    EXPECT_GE(k, 0) << name;
    return k;
}

Form J(const Context& c, const std::string& name, const MultiIndex& mi = {}) { return jet(c, comp(c, name), mi); }

MultiIndex D(int mu) { return MultiIndex{}.plus(mu, 1); }

Form vol4() { return dx(0) * dx(1) * dx(2) * dx(3); }

const char* kBroken = R"(
[structure broken]
dim 3
f 1 0 1 = 1
f 0 0 2 = 1
[dimension]
4
[signature]
- + + +
[fields]
A : form 1 lie broken
[lagrangian]
F := d(A) + 1/2*[A,A]
L := tr(1/2*F^star(F))
[symmetry gauge]
parameter xi : form 0 lie broken
A := d(xi) + [A,xi]
)";

}  // namespace

TEST(BV, MaxwellExtension) {
    Theory t = load("maxwell.thy");
    BVTheory bv = bv_extend(t, *t.def.symmetry("gauge"));
    const Context& C = *bv.ctx;
    ASSERT_EQ(bv.ghosts.size(), 1u);
    EXPECT_EQ(C.comps[bv.ghosts[0]].ghost, 1);
    EXPECT_EQ(C.comps[comp(C, "A†[2]")].ghost, -1);
    EXPECT_EQ(C.comps[comp(C, "c_xi†")].ghost, -2);

    Form expect = t.L;
    for (int mu = 0; mu < 4; ++mu)
        expect += J(C, "A†[" + std::to_string(mu) + "]") * J(C, "c_xi", D(mu)) * vol4();
    EXPECT_EQ(bv.L, expect);
    for (int mu = 0; mu < 4; ++mu)
        EXPECT_EQ(bv.Q.comps.at(comp(C, "A[" + std::to_string(mu) + "]")), J(C, "c_xi", D(mu)));
    EXPECT_FALSE(bv.Q.comps.count(comp(C, "c_xi")));

    EXPECT_TRUE(check_q_nilpotent(bv).pass);
    Report cme = verify_cme(bv);
    EXPECT_TRUE(cme.pass) << cme.note;
    EXPECT_EQ(d_h(C, cme.forms.back().second), cme.forms[0].second);
}

TEST(BV, YangMillsGhostTerm) {
    Theory t = load("yang_mills_su2.thy");
    BVTheory bv = bv_extend(t, *t.def.symmetry("gauge"));
    const Context& C = *bv.ctx;
    EXPECT_EQ(bv.ghost_coeff, frac(-1, 2));
    // -1/2 f^a_bc c^b c^c with f = epsilon
    for (int a = 0; a < 3; ++a) {
        int b = (a + 1) % 3, c = (a + 2) % 3;
        Form cb = J(C, "c_xi{" + std::to_string(b) + "}"), cc = J(C, "c_xi{" + std::to_string(c) + "}");
        EXPECT_EQ(bv.Q.comps.at(comp(C, "c_xi{" + std::to_string(a) + "}")), -(cb * cc));
    }
    EXPECT_EQ(ghost_degrees(bv.L), std::set<int>{0});
    Form ghost_term = bv.L - t.L;
    for (const auto& [u, a] : bv.antifield_of) {
        Bindings keep;
        for (const auto& [v, b] : bv.antifield_of)
            if (v != u) keep[b] = Form();
        Form part = substitute(C, ghost_term, keep);
        EXPECT_EQ(part, jet(C, a) * bv.Qce.comps.at(u) * vol4()) << C.comps[u].name;
    }
    EXPECT_TRUE(check_q_nilpotent(bv).pass);
    EXPECT_TRUE(verify_cme(bv).pass);
}

TEST(BV, CorpusGaugeTheories) {
    for (const char* name : {"maxwell_sourced.thy", "bf_abelian_4d.thy", "bf_su2_4d.thy", "chern_simons_su2.thy"}) {
        Theory t = load(name);
        BVTheory bv = bv_extend(t, t.def.symmetries[0]);
        EXPECT_TRUE(check_q_nilpotent(bv).pass) << name;
        EXPECT_TRUE(verify_cme(bv).pass) << name;
    }
}

TEST(BV, TrivialSymmetry) {
    Theory t = load("maxwell.thy");
    SymmetryDef sym = *t.def.symmetry("gauge");
    sym.rho.comps.clear();
    BVTheory bv = bv_extend(t, sym);
    EXPECT_EQ(bv.L, t.L);
    EXPECT_FALSE(bv.Q.comps.count(bv.ghosts[0]));
    EXPECT_TRUE(check_q_nilpotent(bv).pass);
    EXPECT_TRUE(verify_cme(bv).pass);
}

TEST(BV, WrongGhostCoefficient) {
    Theory t = load("yang_mills_su2.thy");
    BVTheory bv = bv_extend(t, *t.def.symmetry("gauge"), {frac(3, 2)});
    Report r = verify_cme(bv);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.note, "CMEFails");
    EXPECT_FALSE(r.forms[1].second.is_zero());
    EXPECT_FALSE(check_q_nilpotent(bv).pass);
}

TEST(BV, BrokenStructureConstants) {
    Theory t = build_theory(parse_theory(kBroken));
    BVTheory bv = bv_extend(t, t.def.symmetries[0]);
    Report r = check_q_nilpotent(bv);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.note, "ResidualNonzero");
    bool on_ghost = false;
    for (const auto& [label, f] : r.forms)
        if (label.rfind("Q^2(c_xi", 0) == 0) on_ghost = true;
    EXPECT_TRUE(on_ghost);
}

TEST(BV, GlobalSymmetryIsNotLocal) {
    Theory t = load("scalar_field.thy");
    ASSERT_FALSE(t.def.symmetries.empty());
    EXPECT_EQ(code_of([&] { bv_extend(t, t.def.symmetries[0]); }), "NotLocal");
}

TEST(Bracket, AntisymmetryAndConstants) {
    Theory t = load("yang_mills_su2.thy");
    BVTheory bv = bv_extend(t, *t.def.symmetry("gauge"));
    const Context& C = *bv.ctx;
    std::vector<Form> fs = {
        J(C, "A{0}[1]") * J(C, "c_xi{2}") * vol4(),
        J(C, "A†{1}[1]") * J(C, "A{2}[2]", D(0)) * vol4(),
        J(C, "c_xi†{0}") * J(C, "c_xi{1}") * J(C, "c_xi{2}") * vol4(),
        J(C, "A{0}[0]") * J(C, "A{0}[0]") * J(C, "A†{0}[3]") * vol4(),
        J(C, "c_xi{0}", D(1)) * J(C, "A†{2}[1]") * vol4(),
        bv.L,
    };
    auto gh = [](const Form& f) { return *ghost_degrees(f).begin(); };
    for (const Form& f : fs)
        for (const Form& g : fs) {
            Form fg = bv_bracket(bv, f, g), gf = bv_bracket(bv, g, f);
            // i_X is even exactly when X has odd ghost degree
            int s = (gh(f) * gh(g)) % 2 ? -1 : 1;
            EXPECT_EQ(fg, gf * s);
        }
    for (const Form& f : fs) EXPECT_TRUE(bv_bracket(bv, f, Form::scalar(5) * vol4()).is_zero());

    Context all = C;
    for (auto& c : all.comps)
        if (c.kind != Kind::Constant) c.kind = Kind::Dynamic;
    for (size_t i = 0; i + 2 < fs.size(); ++i) {
        const Form &f = fs[i], &g = fs[i + 1], &h = fs[i + 2];
        int s = ((gh(f) + 1) * (gh(g) + 1)) % 2 ? -1 : 1;
        Form jac = bv_bracket(bv, f, bv_bracket(bv, g, h)) - bv_bracket(bv, bv_bracket(bv, f, g), h) -
                   bv_bracket(bv, g, bv_bracket(bv, f, h)) * s;
        EXPECT_TRUE(jac.is_zero() || projector(all, jac).is_zero()) << i;
    }
}

TEST(Bracket, NotHamiltonian) {
    Theory t = load("maxwell.thy");
    const Context& C = t.ctx();
    Form omega = leg(C, comp(C, "A[0]")) * leg(C, comp(C, "A[1]")) * vol4();
    EXPECT_EQ(code_of([&] { hamiltonian_vector_field(C, omega, J(C, "A[2]") * J(C, "A[2]") * vol4()); }),
              "NotHamiltonian");
}

TEST(BFV, MaxwellConstraint) {
    Theory t = load("maxwell.thy");
    SigmaTheory s = restrict_to_slice(t, {});
    BFVTheory bfv = bfv_extend(t, *t.def.symmetry("gauge"), s);
    const Context& C = *bfv.ctx;
    Form gauss;
    for (int i = 1; i <= 3; ++i) gauss -= J(C, "Pi_A[" + std::to_string(i) + "]", D(i - 1));
    EXPECT_EQ(bfv.L, J(C, "c_xi") * gauss * s.vol);
    EXPECT_EQ(bfv_constraint(bfv), J(C, "xi") * gauss * s.vol);
    EXPECT_EQ(bfv_constraint(bfv), bfv.constraint);
    EXPECT_EQ(bfv.omega, s.omega + leg(C, comp(C, "Pi_c_xi")) * leg(C, comp(C, "c_xi")) * s.vol);
    EXPECT_EQ(C.comps[comp(C, "Pi_c_xi")].ghost, -1);
    EXPECT_TRUE(verify_bfv_master(bfv).pass);
}

TEST(BFV, YangMillsGhostTerm) {
    Theory t = load("yang_mills_su2.thy");
    SigmaTheory s = restrict_to_slice(t, {});
    BFVTheory bfv = bfv_extend(t, *t.def.symmetry("gauge"), s);
    const Context& C = *bfv.ctx;
    EXPECT_EQ(ghost_degrees(bfv.L), std::set<int>{1});
    EXPECT_EQ(bfv_constraint(bfv), bfv.constraint);
    for (int a = 0; a < 3; ++a) {
        int b = (a + 1) % 3, c = (a + 2) % 3;
        Form cb = J(C, "c_xi{" + std::to_string(b) + "}"), cc = J(C, "c_xi{" + std::to_string(c) + "}");
        EXPECT_EQ(bfv.Q.comps.at(comp(C, "c_xi{" + std::to_string(a) + "}")), -(cb * cc));
    }
    Report r = verify_bfv_master(bfv);
    EXPECT_TRUE(r.pass) << r.note;
}

TEST(BFV, ZeroConstraintIsPureGhostTerm) {
    Theory t = load("yang_mills_su2.thy");
    SigmaTheory s = restrict_to_slice(t, {});
    BFVTheory bfv = bfv_extend(t, *t.def.symmetry("gauge"), s);
    Bindings zero;
    for (int f : s.fields) zero[f] = Form();
    Form pure = substitute(*bfv.ctx, bfv.L, zero);
    EXPECT_FALSE(pure.is_zero());
    for (const auto& term : pure.terms) {
        int ghosts = 0, momenta = 0;
        for (const auto& x : term.fac) {
            if (x.atom.kind != AtomKind::Jet) continue;
            if (x.atom.ghost == 1) ghosts += x.pow;
            if (x.atom.ghost == -1) momenta += x.pow;
        }
        EXPECT_EQ(ghosts, 2);
        EXPECT_EQ(momenta, 1);
    }
}

TEST(BVBFV, MaxwellAndAbelianBF) {
    for (const char* name : {"maxwell.thy", "bf_abelian_4d.thy", "yang_mills_su2.thy", "bf_su2_4d.thy"}) {
        Theory t = load(name);
        const SymmetryDef& sym = t.def.symmetries[0];
        BVTheory bv = bv_extend(t, sym);
        BFVTheory bfv = bfv_extend(t, sym, restrict_to_slice(t, {}));
        Report r = verify_bvbfv(bv, bfv);
        EXPECT_TRUE(r.pass) << name << ": " << r.note;
        ASSERT_GE(r.forms.size(), 2u);
        EXPECT_TRUE(r.forms[0].second.is_zero()) << name;
        EXPECT_TRUE(r.forms[1].second.is_zero()) << name;
    }
}

TEST(BVBFV, OppositeOrientation) {
    Theory t = load("maxwell.thy");
    const SymmetryDef& sym = *t.def.symmetry("gauge");
    BVTheory bv = bv_extend(t, sym);
    SigmaTheory s = restrict_to_slice(t, {});
    BFVTheory bfv = bfv_extend(t, sym, s);
    Report r = verify_bvbfv(bv, bfv, -1);
    EXPECT_FALSE(r.pass);
    EXPECT_NE(r.note.find("symplectic condition fails"), std::string::npos);
    // the ghost pairing flips with the orientation, the field part does not
    EXPECT_TRUE(verify_bvbfv(bv, bfv, 1).pass);
    SigmaTheory b = restrict_to_slice(bv.as_theory(), {});
    Form body;
    for (const auto& term : b.omega_raw.terms)
        if (std::all_of(term.fac.begin(), term.fac.end(), [](const Factor& x) { return x.atom.ghost == 0; }))
            body += Form::product(term.coef, term.fac);
    ASSERT_FALSE(body.is_zero());
    EXPECT_EQ(r.forms[0].second, -(body * 2));
}

TEST(Witness, MaxwellCandidates) {
    Theory t = load("maxwell.thy");
    BVTheory bv = bv_extend(t, *t.def.symmetry("gauge"));
    const Context& C = *bv.ctx;
    EXPECT_EQ(cohomology_witness(bv, parse_form(t.def, "star(d(A))^star(d(A))")), Witness::Closed);
    EXPECT_EQ(cohomology_witness(bv, parse_form(t.def, "A^star(A)")), Witness::Neither);
    Form x = J(C, "A†[1]", D(2)) * J(C, "A[0]") * vol4();
    Form qx = prolong(C, bv.Q, x);
    ASSERT_FALSE(qx.is_zero());
    EXPECT_EQ(cohomology_witness(bv, qx, x), Witness::Exact);
    EXPECT_STREQ(witness_name(Witness::Exact), "exact");
}
