#include "varcalc/lagrangian.hpp"

#include <algorithm>
#include <set>

namespace varcalc {

namespace {

// Orderly ranking on jets: derivative order, then multi-index, then component.
bool rank_less(const std::pair<int, MultiIndex>& a, const std::pair<int, MultiIndex>& b) {
    if (a.second.order() != b.second.order()) return a.second.order() < b.second.order();
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
}

std::vector<std::pair<int, MultiIndex>> dynamic_jets(const Context& ctx, const Form& f) {
    std::vector<std::pair<int, MultiIndex>> out;
    for (const auto& j : jets_in(f))
        if (ctx.dynamic(j.first)) out.push_back(j);
    return out;
}

bool is_top(const Context& ctx, const Form& f) {
    auto g = f.grading();
    return g && g->q == ctx.dim;
}

}  // namespace

Form top_density(const Form& f) {
    Form out;
    for (auto& [coef, mono] : split_by(f, [](const Atom& a) { return a.kind == AtomKind::Horiz; })) out += coef;
    return out;
}

std::optional<Form> solve_linear(const Context& ctx, const Form& s, int comp, const MultiIndex& mi) {
    Form a = contract_leg(ctx, d_v(ctx, s), comp, mi);
    if (a.terms.size() != 1 || !field_independent(ctx, a)) return std::nullopt;
    const Term& t = a.terms[0];
    std::vector<Factor> inv;
    for (const auto& f : t.fac) {
        if (f.atom.kind != AtomKind::Jet || ctx.comps[f.atom.id].kind != Kind::Constant) return std::nullopt;
        inv.push_back({f.atom, -f.pow});
    }
    Form inverse = Form::product(1 / t.coef, inv);
    Form u = jet(ctx, comp, mi);
    return (a * u - s) * inverse;
}

Theory build_theory(const TheoryDef& def) { return build_theory(def, def.lagrangian); }

Theory build_theory(const TheoryDef& def, const Form& L) {
    Theory t;
    t.def = def;
    t.L = L;
    const Context& ctx = *def.ctx;
    for (size_t c = 0; c < ctx.comps.size(); ++c)
        if (ctx.dynamic(static_cast<int>(c))) t.dyn.push_back(static_cast<int>(c));
    if (!L.is_zero()) {
        Form dL = d_v(ctx, L);
        t.EL = interior_euler(ctx, dL);
        t.theta = dL.is_zero() ? Form() : h_horizontal(ctx, dL);
        t.omega = d_v(ctx, t.theta);
        t.Lh = projector(ctx, L);
        if (!(dL - t.EL - d_h(ctx, t.theta)).is_zero())
            throw Error("InvariantViolation", "dv L differs from E L + d theta");
        if (!(d_h(ctx, t.omega) - d_v(ctx, t.EL)).is_zero())
            throw Error("InvariantViolation", "d omega differs from dv E L");
    }
    for (int c : t.dyn) {
        Form e = contract_leg(ctx, t.EL, c, {});
        if (!e.is_zero()) t.E[c] = e;
    }

    // declared solved forms first, then orderly leaders for the rest
    std::set<int> done;
    for (const auto& decl : def.onshell) {
        int c = ctx.find_comp(decl.field_comp);
        if (c < 0 || !ctx.dynamic(c)) throw Error("UndeclaredIdentifier", "on-shell component " + decl.field_comp);
        Form lead = parse_form(ctx, decl.jet);
        if (lead.terms.size() != 1 || lead.terms[0].fac.size() != 1 || lead.terms[0].fac[0].atom.kind != AtomKind::Jet)
            throw Error("NoSolvedForm", "leading derivative must be a single jet: " + decl.jet);
        const Atom& u = lead.terms[0].fac[0].atom;
        auto it = t.E.find(c);
        if (it == t.E.end()) throw Error("NoSolvedForm", "no Euler-Lagrange component for " + decl.field_comp);
        Form s = substitute_jets(ctx, top_density(it->second), t.solved);
        auto v = solve_linear(ctx, s, u.id, u.mi);
        if (!v) throw Error("NoSolvedForm", "cannot solve for " + decl.jet);
        t.solved.push_back({u.id, u.mi, *v});
        done.insert(c);
    }
    for (const auto& [c, e] : t.E) {
        if (done.count(c)) continue;
        Form s = substitute_jets(ctx, top_density(e), t.solved);
        if (s.is_zero()) continue;
        auto jets = dynamic_jets(ctx, s);
        if (jets.empty()) {
            t.unsolved.push_back(c);
            continue;
        }
        auto lead = *std::max_element(jets.begin(), jets.end(), rank_less);
        auto v = solve_linear(ctx, s, lead.first, lead.second);
        if (!v) {
            t.unsolved.push_back(c);
            continue;
        }
        t.solved.push_back({lead.first, lead.second, *v});
    }
    return t;
}

Form reduce_on_shell(const Theory& t, const Form& f) {
    if (t.solved.empty() && !dynamic_jets(t.ctx(), f).empty())
        throw Error("NoSolvedForm", "theory has no solved Euler-Lagrange equations");
    return substitute_jets(t.ctx(), f, t.solved);
}

Equivalence lagrangians_equivalent(const Theory& a, const Theory& b) {
    const Context& ctx = a.ctx();
    Equivalence e;
    Form delta = b.L - a.L;
    e.el_difference = b.EL - a.EL;
    e.equivalent = e.el_difference.is_zero();
    bool same_projection = (b.Lh - a.Lh).is_zero();
    if (same_projection != e.equivalent) throw Error("InvariantViolation", "E and P disagree on equivalence");
    if (e.equivalent && !delta.is_zero()) {
        e.constant_part = zero_section(ctx, delta);
        e.primitive = h_zero(ctx, delta);
    }
    return e;
}

bool is_symmetry(const Theory& t, const EvolutionaryField& rho) {
    if (t.L.is_zero()) return true;
    return projector(t.ctx(), lie_derivative(t.ctx(), rho, t.L)).is_zero();
}

ConeCurrent noether_cone(const Theory& t, const EvolutionaryField& rho) {
    const Context& ctx = t.ctx();
    ConeCurrent c;
    if (t.L.is_zero()) return c;
    Form X = lie_derivative(ctx, rho, t.L);
    if (!projector(ctx, X).is_zero()) throw Error("NotASymmetry", "P(L_rho L) is nonzero");
    c.S = zero_section(ctx, X);
    c.J = h_zero(ctx, X) + insert(ctx, rho, t.theta);
    return c;
}

Report verify_noether1(const Theory& t, const EvolutionaryField& rho, const ConeCurrent& c) {
    const Context& ctx = t.ctx();
    Report r;
    r.name = "N1";
    Form res = d_h(ctx, c.J) + c.S - insert(ctx, rho, t.EL);
    r.pass = res.is_zero();
    r.forms = {{"residual", res}, {"dJ", d_h(ctx, c.J)}, {"S", c.S}, {"i_rho EL", insert(ctx, rho, t.EL)}};
    return r;
}

std::vector<int> parameter_components(const SymmetryDef& sym) {
    std::vector<int> out;
    for (const auto& p : sym.params) out.insert(out.end(), p.comps.begin(), p.comps.end());
    return out;
}

namespace {

// Chart where the parameters are the only fields.
Context promote(const Context& ctx, const std::vector<int>& params) {
    Context p = ctx;
    for (auto& c : p.comps)
        if (c.kind == Kind::Dynamic) c.kind = Kind::Parameter;
    for (int c : params) p.comps[c].kind = Kind::Dynamic;
    return p;
}

void check_linear(const Form& F, const std::vector<int>& params) {
    for (const auto& t : F.terms) {
        int deg = 0;
        for (const auto& f : t.fac) {
            if (f.atom.kind == AtomKind::Jet && std::count(params.begin(), params.end(), f.atom.id)) deg += f.pow;
            if ((f.atom.kind == AtomKind::Func || f.atom.kind == AtomKind::Fiber) &&
                mentions(Form::atom(f.atom), [&](int c) { return std::count(params.begin(), params.end(), c) > 0; }))
                deg += 2;
        }
        if (deg != 1) throw Error("NonlinearParameter", "term is not linear in the parameter");
    }
}

}  // namespace

DualSplit decompose_dual_current(const Context& ctx, const Form& F, const std::vector<int>& params) {
    DualSplit out;
    if (F.is_zero()) return out;
    check_linear(F, params);
    Context p = promote(ctx, params);
    Form Fc = d_v(p, F);
    auto g = F.grading();
    Form inner;
    if (g->q < p.dim) inner += h_horizontal(p, d_h(p, Fc));
    if (g->q == p.dim) inner += interior_euler(p, Fc);
    out.f = h_vertical(p, inner);
    if (g->q > 0) out.k = -h_vertical(p, h_horizontal(p, Fc));
    return out;
}

NoetherData noether2(const Theory& t, const SymmetryDef& sym) {
    for (const auto& p : sym.params)
        if (p.kind != Kind::Parameter) throw Error("NotLocal", "parameter " + p.name + " is global");
    std::vector<int> params = parameter_components(sym);
    NoetherData n;
    ConeCurrent c = noether_cone(t, sym.rho);
    n.S = c.S;
    n.J = c.J;
    DualSplit ck = decompose_dual_current(t.ctx(), n.J, params);
    n.C = ck.f;
    n.K = ck.k;
    DualSplit sj = decompose_dual_current(t.ctx(), n.S, params);
    n.s = sj.f;
    // with Koszul signs the on-shell value of C is -k, so j carries that sign and S = s - dj
    n.j = -sj.k;
    Form diff = n.C - n.j;
    n.onshell = diff.is_zero() ? diff : reduce_on_shell(t, diff);
    return n;
}

// ---------------------------------------------------------------- identity catalog

const std::vector<std::string>& identity_catalog() {
    static const std::vector<std::string> names = {"dbom",    "N1",     "flow-density", "hamflow-closed",
                                                   "inv-eom", "equi-dJ", "inv-C",       "jext=0"};
    return names;
}

Report verify_theory_identity(const Theory& t, const std::string& name) {
    const Context& ctx = t.ctx();
    Report r;
    r.name = name;
    if (name == "dbom") {
        Form res = d_h(ctx, t.omega) - d_v(ctx, t.EL);
        r.pass = res.is_zero();
        r.forms = {{"residual", res}};
        return r;
    }
    throw Error("UnknownIdentity", name);
}

namespace {

// Second copy of the parameters and the bracket of two parameters.
struct ParamPair {
    ParamCopies pc;
    Bindings to_eta, to_bracket;
    bool abelian = true;
    const Context& ctx() const { return *pc.ctx; }
};

ParamPair pair_params(const Theory& t, const SymmetryDef& sym) {
    ParamPair pp;
    pp.pc = copy_parameters(t.ctx(), t.def, sym, 1);
    pp.to_eta = pp.pc.copy[0];
    pp.to_bracket = pp.pc.bracket(identity_bindings(t.ctx(), parameter_components(sym)), pp.to_eta);
    pp.abelian = pp.pc.abelian;
    return pp;
}

Report reduced(const Theory& t, Report r, const Form& raw) {
    Form res = raw.is_zero() ? raw : reduce_on_shell(t, raw);
    r.pass = res.is_zero();
    r.forms.insert(r.forms.begin(), {"residual", res});
    r.forms.push_back({"before reduction", raw});
    return r;
}

}  // namespace

Bindings identity_bindings(const Context& ctx, const std::vector<int>& comps) {
    Bindings b;
    for (int c : comps) b[c] = jet(ctx, c);
    return b;
}

EvolutionaryField rebind(const Context& ctx, const EvolutionaryField& rho, const Bindings& b) {
    EvolutionaryField out;
    for (const auto& [c, f] : rho.comps) out.comps[c] = substitute(ctx, f, b);
    return out;
}

ParamCopies copy_parameters(const Context& ctx, const TheoryDef& def, const SymmetryDef& sym, int count) {
    ParamCopies pc;
    pc.ctx = std::make_shared<Context>(ctx);
    pc.def = &def;
    pc.sym = &sym;
    for (int k = 0; k < count; ++k) {
        Bindings b;
        for (const auto& p : sym.params)
            for (int c : p.comps) {
                Component copy = pc.ctx->comps[c];
                copy.name += std::string(k + 1, '~');
                b[c] = jet(*pc.ctx, pc.ctx->add_comp(copy));
            }
        pc.copy.push_back(b);
    }
    for (const auto& p : sym.params) {
        const Algebra* A = p.lie.empty() ? nullptr : def.algebra(p.lie);
        if (A && !A->abelian()) {
            if (p.degree != 0) throw Error("NoBracket", "Lie-valued form parameters of positive degree");
            pc.abelian = false;
        }
    }
    return pc;
}

Bindings ParamCopies::bracket(const Bindings& x, const Bindings& y) const {
    Bindings out;
    auto val = [](const Bindings& b, int c) { auto it = b.find(c); return it == b.end() ? Form() : it->second; };
    for (const auto& p : sym->params) {
        const Algebra* A = p.lie.empty() ? nullptr : def->algebra(p.lie);
        for (size_t k = 0; k < p.comps.size(); ++k) {
            Form br;
            if (A && !A->abelian()) {
                int a = p.lie_index[k];
                for (int b = 0; b < A->dim; ++b)
                    for (int c = 0; c < A->dim; ++c)
                        if (A->F(a, b, c) != 0) br += val(x, p.comps[b]) * val(y, p.comps[c]) * A->F(a, b, c);
            }
            out[p.comps[k]] = br;
        }
    }
    return out;
}

Report verify_identity(const Theory& t, const SymmetryDef& sym, const std::string& name) {
    const Context& ctx = t.ctx();
    const EvolutionaryField& rho = sym.rho;
    if (name == "dbom") return verify_theory_identity(t, name);
    Report r;
    r.name = name;
    bool local = std::all_of(sym.params.begin(), sym.params.end(), [](const FieldDecl& p) { return p.kind == Kind::Parameter; });
    if (name == "N1") return verify_noether1(t, rho, noether_cone(t, rho));
    if (name == "flow-density" || name == "hamflow-closed") {
        ConeCurrent c = noether_cone(t, rho);
        Form Y = insert(ctx, rho, t.omega) + d_v(ctx, c.J);
        Form exact = ctx.dim > 1 && !Y.is_zero() ? d_h(ctx, h_horizontal(ctx, Y)) : Form();
        Form lee = lie_derivative(ctx, rho, t.EL);
        if (name == "flow-density") {
            Form res = Y - exact + (lee.is_zero() ? lee : h_horizontal(ctx, lee));
            r.pass = res.is_zero();
            r.forms = {{"residual", res}};
            return r;
        }
        return reduced(t, r, Y - exact);
    }
    if (name == "inv-eom") {
        Form lee = lie_derivative(ctx, rho, t.EL);
        return reduced(t, r, lee.is_zero() ? lee : interior_euler(ctx, lee));
    }
    if (name == "equi-dJ") {
        ParamPair pp = pair_params(t, sym);
        const Context& c2 = pp.ctx();
        ConeCurrent c = noether_cone(t, rho);
        Form dJ = d_h(c2, c.J);
        Form lhs = lie_derivative(c2, rho, substitute(c2, dJ, pp.to_eta));
        Form rhs = substitute(c2, dJ, pp.to_bracket) + substitute(c2, c.S, pp.to_bracket);
        Form raw = lhs - rhs;
        // the corollary rests on inv-eom, so it holds on shell in general
        Form res = raw.is_zero() ? raw : substitute_jets(c2, raw, t.solved);
        r.pass = res.is_zero();
        if (!raw.is_zero() && r.pass) r.note = "holds on shell";
        r.forms = {{"residual", res}, {"before reduction", raw}};
        return r;
    }
    if (name == "inv-C" || name == "jext=0") {
        if (!local) {
            r.applicable = false;
            r.note = "global symmetry";
            return r;
        }
        ParamPair pp = pair_params(t, sym);
        const Context& c2 = pp.ctx();
        NoetherData n = noether2(t, sym);
        Form Ceta = substitute(c2, n.C, pp.to_eta);
        Form drift = lie_derivative(c2, rho, Ceta) - substitute(c2, n.C, pp.to_bracket);
        if (name == "inv-C") {
            Form res = drift.is_zero() ? drift : substitute_jets(c2, drift, t.solved);
            r.pass = res.is_zero();
            r.forms = {{"residual", res}, {"before reduction", drift}};
            return r;
        }
        Form jb = substitute(c2, n.j, pp.to_bracket);
        r.pass = jb.is_zero();
        r.note = drift.is_zero() ? "C is equivariant" : "C is not equivariant off shell";
        r.forms = {{"residual", jb}, {"j", n.j}, {"equivariance defect of C", drift}};
        return r;
    }
    throw Error("UnknownIdentity", name);
}

}  // namespace varcalc
