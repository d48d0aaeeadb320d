#pragma once
// Lagrangian field theories, symmetries and Noether currents.

#include <optional>
#include <string>
#include <vector>

#include "varcalc/parser.hpp"

namespace varcalc {

// Outcome of a verification: named forms (residuals first) and a verdict.
struct Report {
    std::string name;
    bool pass = true;
    bool applicable = true;
    std::string note;
    std::vector<std::pair<std::string, Form>> forms;
    std::shared_ptr<const Context> ctx;  // chart of the forms when it differs from the caller's
};

struct Theory {
    TheoryDef def;
    Form L, EL, theta, omega, Lh;
    std::vector<int> dyn;        // dynamic component ids
    std::map<int, Form> E;       // EL component: coefficient of delta(comp) in EL, as a (0,n) form
    std::vector<JetRule> solved;  // on-shell substitutions
    std::vector<int> unsolved;   // EL components without a solved form

    const Context& ctx() const { return *def.ctx; }
};

Theory build_theory(const TheoryDef& def);
// Same fields and symmetries, another Lagrangian.
Theory build_theory(const TheoryDef& def, const Form& L);

struct Equivalence {
    bool equivalent = false;
    Form el_difference;   // E L' - E L
    Form constant_part;   // p*0*(L' - L)
    Form primitive;       // h0(L' - L), with L' - L = d(primitive) + constant_part
};
Equivalence lagrangians_equivalent(const Theory& a, const Theory& b);

bool is_symmetry(const Theory& t, const EvolutionaryField& rho);

struct ConeCurrent {
    Form S;  // 0* L_rho L
    Form J;  // h0 L_rho L + i_rho theta
};
ConeCurrent noether_cone(const Theory& t, const EvolutionaryField& rho);
// Residual dJ + S - i_rho E L.
Report verify_noether1(const Theory& t, const EvolutionaryField& rho, const ConeCurrent& c);

// F = f + dk for a form F linear in the parameter components.
struct DualSplit {
    Form f, k;
};
DualSplit decompose_dual_current(const Context& ctx, const Form& F, const std::vector<int>& params);

struct NoetherData {
    Form S, J, C, K;
    Form s, j;            // S = s - dj, C = j on shell
    Form onshell;         // reduce_on_shell(C - j)
};
NoetherData noether2(const Theory& t, const SymmetryDef& sym);

std::vector<int> parameter_components(const SymmetryDef& sym);

Form reduce_on_shell(const Theory& t, const Form& f);

// Scalar density of a top form: the coefficient of its dx monomial.
Form top_density(const Form& f);
// Solution of the linear equation s = 0 for the jet (comp, mi), when its
// coefficient is an invertible constant.
std::optional<Form> solve_linear(const Context& ctx, const Form& s, int comp, const MultiIndex& mi);

// Copies of a symmetry's parameters in an extended context, with the bracket.
struct ParamCopies {
    std::shared_ptr<Context> ctx;
    std::vector<Bindings> copy;  // parameter component -> its k-th copy
    bool abelian = true;
    // [x, y] for parameter values given componentwise
    Bindings bracket(const Bindings& x, const Bindings& y) const;

    const TheoryDef* def = nullptr;
    const SymmetryDef* sym = nullptr;
};
ParamCopies copy_parameters(const Context& ctx, const TheoryDef& def, const SymmetryDef& sym, int count);
Bindings identity_bindings(const Context& ctx, const std::vector<int>& comps);
// rho with its parameter replaced by the given value.
EvolutionaryField rebind(const Context& ctx, const EvolutionaryField& rho, const Bindings& b);

const std::vector<std::string>& identity_catalog();
Report verify_identity(const Theory& t, const SymmetryDef& sym, const std::string& name);
// Theory-only entries of the catalog (no symmetry needed).
Report verify_theory_identity(const Theory& t, const std::string& name);

}  // namespace varcalc
