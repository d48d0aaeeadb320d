#include "varcalc/bvbfv.hpp"

#include <algorithm>

namespace varcalc {

namespace {

void collect_comps(const Form& f, std::set<int>& out) {
    for (const auto& t : f.terms)
        for (const auto& x : t.fac) {
            const Atom& a = x.atom;
            if (a.kind == AtomKind::Jet || a.kind == AtomKind::Vert) out.insert(a.id);
            if ((a.kind == AtomKind::Func || a.kind == AtomKind::Fiber) && a.args)
                for (const auto& g : *a.args) collect_comps(g, out);
        }
}

std::set<int> leg_comps(const Form& f) {
    std::set<int> out;
    for (const auto& t : f.terms)
        for (const auto& x : t.fac)
            if (x.atom.kind == AtomKind::Vert) {
                if (x.atom.mi.order() > 0) throw Error("NotCanonical", "symplectic form has differentiated legs");
                out.insert(x.atom.id);
            }
    return out;
}

int single_ghost(const Form& f, const char* what) {
    std::set<int> g = ghost_degrees(f);
    if (g.size() > 1) throw Error("GhostDegreeMismatch", std::string(what) + " is not homogeneous in ghost degree");
    return g.empty() ? 0 : *g.begin();
}

std::optional<Rational> constant_of(const Form& f) {
    if (f.is_zero()) return Rational(0);
    if (f.terms.size() != 1 || !f.terms[0].fac.empty()) return std::nullopt;
    return f.terms[0].coef;
}

std::string dagger(const std::string& name) {
    size_t k = name.find_first_of("{[");
    if (k == std::string::npos) return name + "†";
    return name.substr(0, k) + "†" + name.substr(k);
}

std::string ghost_name(const SymmetryDef& sym, size_t k, const std::string& comp) {
    const std::string& p = sym.params[k].name;
    std::string base = k < sym.ghost_names.size() ? sym.ghost_names[k] : "c_" + p;
    return base + comp.substr(p.size());
}

Form volume(int n) {
    Form v = Form::scalar(1);
    for (int k = 0; k < n; ++k) v = v * dx(k);
    return v;
}

// [c,c]^a = f^a_bc c^b c^c for the Lie-valued parameters, zero otherwise.
std::map<int, Form> ghost_brackets(const Context& ctx, const TheoryDef& def, const SymmetryDef& sym,
                                   const std::map<int, int>& ghost_of) {
    std::map<int, Form> out;
    for (const auto& p : sym.params) {
        if (p.lie.empty()) continue;
        const Algebra* A = def.algebra(p.lie);
        if (!A || A->abelian()) continue;
        if (p.shape == Shape::Form && p.degree > 0)
            throw Error("NoBracket", "no bracket for Lie-valued form parameter " + p.name);
        for (size_t i = 0; i < p.comps.size(); ++i) {
            Form s;
            for (size_t j = 0; j < p.comps.size(); ++j)
                for (size_t k = 0; k < p.comps.size(); ++k) {
                    const Rational& f = A->F(p.lie_index[i], p.lie_index[j], p.lie_index[k]);
                    if (f != 0) s += jet(ctx, ghost_of.at(p.comps[j])) * jet(ctx, ghost_of.at(p.comps[k])) * f;
                }
            if (!s.is_zero()) out[ghost_of.at(p.comps[i])] = s;
        }
    }
    return out;
}

// Coefficient lambda in Q c = lambda [c,c] making Q^2 vanish on the fields.
Rational ce_coefficient(const Context& ctx, const EvolutionaryField& field_part, const std::map<int, Form>& br) {
    if (br.empty()) return frac(-1, 2);
    for (Rational lam : {frac(-1, 2), frac(1, 2)}) {
        EvolutionaryField q = field_part;
        for (const auto& [c, b] : br) q.comps[c] = b * lam;
        bool ok = true;
        for (const auto& [u, v] : field_part.comps)
            if (!prolong(ctx, q, v).is_zero()) ok = false;
        if (ok) return lam;
    }
    return frac(-1, 2);
}

// Replaces parameter jets by the same jets of their ghosts, the parameter
// factor moving to the front.
Form to_ghosts(const Context& ctx, const Form& f, const std::map<int, int>& ghost_of) {
    Form out;
    for (const auto& t : f.terms) {
        std::vector<Factor> rest, front;
        for (const auto& x : t.fac) {
            auto it = x.atom.kind == AtomKind::Jet ? ghost_of.find(x.atom.id) : ghost_of.end();
            if (it == ghost_of.end()) {
                rest.push_back(x);
                continue;
            }
            if (x.pow != 1 || !front.empty()) throw Error("NotLocal", "symmetry action is not linear in the parameters");
            front.push_back({Atom::jet(ctx, it->second, x.atom.mi), 1});
        }
        if (front.empty()) continue;
        front.insert(front.end(), rest.begin(), rest.end());
        out += Form::product(t.coef, front);
    }
    return out;
}

bool local_symmetry(const SymmetryDef& sym) {
    return !sym.params.empty() &&
           std::all_of(sym.params.begin(), sym.params.end(), [](const FieldDecl& p) { return p.kind == Kind::Parameter; });
}

Form body_of(const Context& ctx, const Form& f) {
    Bindings zero;
    for (size_t c = 0; c < ctx.comps.size(); ++c)
        if (ctx.comps[c].ghost != 0) zero[static_cast<int>(c)] = Form();
    return substitute(ctx, f, zero);
}

Context all_dynamic(const Context& ctx) {
    Context a = ctx;
    for (auto& c : a.comps)
        if (c.kind != Kind::Constant) c.kind = Kind::Dynamic;
    return a;
}

Report master_report(const std::string& name, const Context& ctx, const Form& omega, const Form& L, const char* fail) {
    Report r;
    r.name = name;
    Form B = graded_bracket(ctx, omega, L, L);
    Form P = B.is_zero() ? Form() : projector(ctx, B);
    Form Z = B.is_zero() ? Form() : zero_section(ctx, B);
    r.forms.push_back({"{L,L}", B});
    r.forms.push_back({"P({L,L})", P});
    r.forms.push_back({"0*({L,L})", Z});
    r.pass = P.is_zero() && Z.is_zero();
    if (!r.pass) {
        r.note = fail;
        return r;
    }
    Form prim = B.is_zero() ? Form() : h_zero(ctx, B);
    if (!(d_h(ctx, prim) == B)) throw Error("InvariantViolation", "primitive of the master bracket does not reproduce it");
    r.forms.push_back({"primitive", prim});
    return r;
}

}  // namespace

std::set<int> ghost_degrees(const Form& f) {
    std::set<int> out;
    for (const auto& t : f.terms) {
        int g = 0;
        for (const auto& x : t.fac)
            if (x.atom.kind == AtomKind::Jet || x.atom.kind == AtomKind::Vert) g += x.atom.ghost * x.pow;
        out.insert(g);
    }
    return out;
}

EvolutionaryField hamiltonian_vector_field(const Context& ctx, const Form& omega, const Form& F) {
    EvolutionaryField X;
    if (F.is_zero()) return X;
    int k = single_ghost(omega, "symplectic form");
    int gF = single_ghost(F, "Hamiltonian form");
    std::set<int> legs = leg_comps(omega);
    Form rhs = interior_euler(ctx, d_v(ctx, F));
    for (int w : leg_comps(rhs))
        if (!legs.count(w)) throw Error("NotHamiltonian", "no symplectic partner for " + ctx.comps[w].name);

    // unknown components as placeholder jets
    Context ext = ctx;
    std::map<int, int> unknown;  // placeholder -> component
    EvolutionaryField Y;
    for (int v : legs) {
        int x = ext.add_comp({"X." + ctx.comps[v].name, ctx.comps[v].ghost + gF - k, Kind::Dynamic, ""});
        unknown[x] = v;
        Y.comps[v] = jet(ext, x);
    }
    Form eq = interior_euler(ext, insert(ext, Y, omega)) - rhs;
    Bindings solved;
    for (int w : legs) {
        Form Cw = top_density(contract_leg(ext, eq, w, {}));
        if (Cw.is_zero()) continue;
        std::set<int> present;
        collect_comps(Cw, present);
        std::vector<int> xs;
        for (int c : present)
            if (unknown.count(c)) xs.push_back(c);
        if (xs.size() != 1) throw Error("NotHamiltonian", "source equation for " + ctx.comps[w].name + " is not solvable");
        auto v = solve_linear(ext, Cw, xs[0], {});
        if (!v) throw Error("NotHamiltonian", "cannot solve for the component along " + ctx.comps[unknown[xs[0]]].name);
        solved[xs[0]] = *v;
    }
    for (const auto& [x, v] : unknown) {
        auto it = solved.find(x);
        if (it == solved.end() || it->second.is_zero()) continue;
        std::set<int> present;
        collect_comps(it->second, present);
        for (int c : present)
            if (unknown.count(c)) throw Error("NotHamiltonian", "coupled source equations");
        X.comps[v] = it->second;
    }
    if (!(interior_euler(ctx, insert(ctx, X, omega)) == rhs))
        throw Error("NotHamiltonian", "no vector field reproduces the source form");
    return X;
}

Form graded_bracket(const Context& ctx, const Form& omega, const Form& F, const Form& G) {
    EvolutionaryField XF = hamiltonian_vector_field(ctx, omega, F);
    EvolutionaryField XG = hamiltonian_vector_field(ctx, omega, G);
    if (XF.empty() || XG.empty()) return Form();
    Form fg = insert(ctx, XF, insert(ctx, XG, omega));
    Form gf = insert(ctx, XG, insert(ctx, XF, omega));
    bool sign = insertion_odd(ctx, XF) && insertion_odd(ctx, XG);
    if (!(fg == (sign ? -gf : gf))) throw Error("InvariantViolation", "bracket is not graded antisymmetric");
    return fg;
}

Theory BVTheory::as_theory() const {
    Theory t;
    t.def = body.def;
    t.def.ctx = ctx;
    t.L = L;
    t.EL = EL;
    t.theta = theta;
    t.omega = d_v(*ctx, theta);
    for (size_t c = 0; c < ctx->comps.size(); ++c)
        if (ctx->dynamic(static_cast<int>(c))) t.dyn.push_back(static_cast<int>(c));
    return t;
}

BVTheory bv_extend(const Theory& t, const SymmetryDef& sym, const BVOptions& opt) {
    if (!sym.params.empty() && !local_symmetry(sym)) throw Error("NotLocal", "symmetry " + sym.name + " has global parameters");
    BVTheory bv;
    bv.body = t;
    bv.sym = &sym;
    bv.ctx = std::make_shared<Context>(t.ctx());
    Context& C = *bv.ctx;
    const int n = C.dim;

    for (size_t k = 0; k < sym.params.size(); ++k) {
        const FieldDecl& p = sym.params[k];
        for (int pc : p.comps) {
            std::string name = ghost_name(sym, k, C.comps[pc].name);
            bv.ghost_of[pc] = C.add_comp({name, p.ghost + 1, Kind::Dynamic, name.substr(0, name.find_first_of("{["))});
            bv.ghosts.push_back(bv.ghost_of[pc]);
        }
    }
    bv.fields = t.dyn;
    std::vector<int> gens = bv.fields;
    gens.insert(gens.end(), bv.ghosts.begin(), bv.ghosts.end());
    for (int u : gens) {
        const Component& c = C.comps[u];
        Component a{dagger(c.name), -1 - c.ghost, Kind::Dynamic, dagger(c.field)};
        bv.antifield_of[u] = C.add_comp(a);
        bv.antifields.push_back(bv.antifield_of[u]);
    }

    for (const auto& [u, v] : sym.rho.comps) {
        Form q = to_ghosts(C, v, bv.ghost_of);
        if (!q.is_zero()) bv.Qce.comps[u] = q;
    }
    auto br = ghost_brackets(C, t.def, sym, bv.ghost_of);
    bv.ghost_coeff = ce_coefficient(C, bv.Qce, br);
    for (const auto& [c, b] : br) bv.Qce.comps[c] = b * bv.ghost_coeff;

    bv.vol = volume(n);
    bv.L = t.L;
    for (const auto& [u, q] : bv.Qce.comps) {
        Rational scale = std::count(bv.ghosts.begin(), bv.ghosts.end(), u) ? opt.ghost_scale : Rational(1);
        bv.L += jet(C, bv.antifield_of.at(u)) * q * bv.vol * scale;
    }
    for (int u : gens) bv.omega += leg(C, bv.antifield_of.at(u)) * leg(C, u) * bv.vol;

    if (!(body_of(C, bv.L) == t.L)) throw Error("InvariantViolation", "body of L_BV differs from L");
    if (!bv.L.is_zero() && ghost_degrees(bv.L) != std::set<int>{0})
        throw Error("GhostDegreeMismatch", "L_BV has terms of nonzero ghost degree");

    bv.Q = hamiltonian_vector_field(C, bv.omega, bv.L);
    Form dL = d_v(C, bv.L);
    bv.EL = interior_euler(C, dL);
    bv.theta = dL.is_zero() ? Form() : h_horizontal(C, dL);
    return bv;
}

Report check_q_nilpotent(const BVTheory& bv) {
    Report r;
    r.name = "Q^2";
    const Context& C = *bv.ctx;
    for (size_t u = 0; u < C.comps.size(); ++u) {
        if (!C.dynamic(static_cast<int>(u))) continue;
        auto it = bv.Q.comps.find(static_cast<int>(u));
        Form q2 = it == bv.Q.comps.end() ? Form() : prolong(C, bv.Q, it->second);
        if (!q2.is_zero()) {
            r.pass = false;
            r.forms.push_back({"Q^2(" + C.comps[u].name + ")", q2});
        }
    }
    if (!r.pass) r.note = "ResidualNonzero";
    return r;
}

Form bv_bracket(const BVTheory& bv, const Form& F, const Form& G) { return graded_bracket(*bv.ctx, bv.omega, F, G); }

Report verify_cme(const BVTheory& bv) { return master_report("cme", *bv.ctx, bv.omega, bv.L, "CMEFails"); }

BFVTheory bfv_extend(const Theory& t, const SymmetryDef& sym, const SigmaTheory& s, const BVOptions& opt) {
    if (!local_symmetry(sym)) throw Error("NotLocal", "symmetry " + sym.name + " has no local parameters");
    BFVTheory bfv;
    bfv.sigma = s;
    bfv.sigma.ctx = std::make_shared<Context>(*s.ctx);
    SigmaTheory& sc = bfv.sigma;
    std::vector<int> params = parameter_components(sym);

    Form H;
    CocycleTable ct;
    try {
        H = sigma_noether(t, sym, sc);
        ct = compute_ce_cocycle(t, sym, sc, H);
    } catch (const Error& e) {
        if (e.code() == "DoesNotDescend" || e.code() == "NotExact")
            throw Error("NotStronglyHamiltonian", e.what());
        throw;
    }
    bfv.constraint = split_constraint_flux(sc, H, params).constraint - ct.j_sigma;

    bfv.ctx = std::make_shared<Context>(*sc.ctx);
    Context& C = *bfv.ctx;
    std::set<int> present;
    collect_comps(bfv.constraint, present);
    for (size_t k = 0; k < sym.params.size(); ++k) {
        const FieldDecl& p = sym.params[k];
        for (int pc : p.comps) {
            if (!present.count(pc)) continue;
            std::string name = ghost_name(sym, k, C.comps[pc].name);
            int g = C.add_comp({name, p.ghost + 1, Kind::Dynamic, name.substr(0, name.find_first_of("{["))});
            bfv.ghost_of[pc] = g;
            bfv.ghosts.push_back(g);
        }
    }
    for (int g : bfv.ghosts) {
        int m = C.add_comp({"Pi_" + C.comps[g].name, -C.comps[g].ghost, Kind::Dynamic, "Pi_" + C.comps[g].field});
        bfv.momentum_of[g] = m;
        bfv.momenta.push_back(m);
    }

    Form linear = to_ghosts(C, bfv.constraint, bfv.ghost_of);

    // the ghost term follows the bulk Chevalley-Eilenberg differential
    std::map<int, Form> br;
    if (!bfv.ghosts.empty()) {
        std::map<int, int> all_ghosts;
        Context probe = t.ctx();
        for (int pc : params) all_ghosts[pc] = probe.add_comp({"c." + probe.comps[pc].name, probe.comps[pc].ghost + 1, Kind::Dynamic, ""});
        EvolutionaryField fp;
        for (const auto& [u, v] : sym.rho.comps) fp.comps[u] = to_ghosts(probe, v, all_ghosts);
        bfv.ghost_coeff = ce_coefficient(probe, fp, ghost_brackets(probe, t.def, sym, all_ghosts));
        br = ghost_brackets(C, t.def, sym, bfv.ghost_of);
    }
    Form vol = sc.vol;
    bfv.omega = sc.omega;
    for (int g : bfv.ghosts) bfv.omega += leg(C, bfv.momentum_of.at(g)) * leg(C, g) * vol;

    Rational mu = bfv.ghost_coeff * opt.ghost_scale;
    for (int attempt = 0; attempt < 2; ++attempt) {
        bfv.L = linear;
        for (const auto& [g, b] : br) bfv.L += jet(C, bfv.momentum_of.at(g)) * b * vol * mu;
        bfv.Q = hamiltonian_vector_field(C, bfv.omega, bfv.L);
        if (br.empty()) break;
        const auto& [g0, b0] = *br.begin();
        auto it = bfv.Q.comps.find(g0);
        Form want = b0 * bfv.ghost_coeff * opt.ghost_scale;
        if (it != bfv.Q.comps.end() && it->second == want) break;
        mu = -mu;
    }

    if (!bfv.L.is_zero() && ghost_degrees(bfv.L) != std::set<int>{1})
        throw Error("GhostDegreeMismatch", "L_BFV has terms of ghost degree other than 1");
    if (!(body_of(C, bfv.omega) == sc.omega)) throw Error("InvariantViolation", "body of omega_BFV differs from omega_Sigma");
    return bfv;
}

Form bfv_constraint(const BFVTheory& bfv) {
    const Context& C = *bfv.ctx;
    Form E = interior_euler(C, d_v(C, bfv.L));
    Bindings zero;
    for (int g : bfv.ghosts) zero[g] = Form();
    for (int m : bfv.momenta) zero[m] = Form();
    Form out;
    for (const auto& [pc, g] : bfv.ghost_of) out += jet(C, pc) * substitute(C, contract_leg(C, E, g, {}), zero);
    return out;
}

Report verify_bfv_master(const BFVTheory& bfv) {
    Report r = master_report("bfv-master", *bfv.ctx, bfv.omega, bfv.L, "MasterEquationFails");
    const Context& C = *bfv.ctx;
    for (const auto& [u, v] : bfv.Q.comps) {
        Form q2 = prolong(C, bfv.Q, v);
        if (!q2.is_zero()) {
            r.pass = false;
            r.note = "ResidualNonzero";
            r.forms.push_back({"Q^2(" + C.comps[u].name + ")", q2});
        }
    }
    return r;
}

Report verify_bvbfv(const BVTheory& bv, const BFVTheory& bfv, int orientation) {
    Report r;
    r.name = "bv-bfv";
    Theory bt = bv.as_theory();
    SliceSpec slice = bfv.sigma.slice;
    slice.corner = -1;
    SigmaTheory B = restrict_to_slice(bt, slice);
    const Context& F = *bfv.ctx;
    const Context& M = *bv.ctx;
    int tr = slice.transverse;

    // ghost momenta correspond to the restricted antifields paired with the ghosts
    std::map<int, std::pair<int, Rational>> partner;
    for (int g : bfv.ghosts) {
        int bg = B.ctx->find_comp(F.comps[g].name);
        if (bg < 0 || !B.partners.count(bg) || B.partners.at(bg).size() != 1)
            throw Error("InvariantViolation", "no boundary partner for " + F.comps[g].name);
        int p = B.partners.at(bg)[0];
        auto w1 = constant_of(top_density(contract_leg(*B.ctx, contract_leg(*B.ctx, B.omega_raw, p, {}), bg, {})));
        int m = bfv.momentum_of.at(g);
        auto w2 = constant_of(top_density(contract_leg(F, contract_leg(F, bfv.omega, m, {}), g, {})));
        if (!w1 || !w2 || *w2 == 0) throw Error("InvariantViolation", "non-constant ghost pairing");
        partner[m] = {p, *w1 * orientation / *w2};
    }
    Bindings momenta(bfv.sigma.momentum_of.begin(), bfv.sigma.momentum_of.end());
    std::function<Form(const Form&)> pi = [&](const Form& f) {
        AtomRule rule = [&](const Atom& a) -> Form {
            switch (a.kind) {
                case AtomKind::Jet:
                case AtomKind::Vert: {
                    auto it = partner.find(a.id);
                    int id;
                    Rational k = 1;
                    if (it != partner.end()) {
                        id = it->second.first;
                        k = it->second.second;
                    } else {
                        id = B.ctx->find_comp(F.comps[a.id].name);
                        if (id < 0) throw Error("InvariantViolation", "no bulk counterpart of " + F.comps[a.id].name);
                    }
                    return (a.kind == AtomKind::Jet ? jet(*B.ctx, id, a.mi) : leg(*B.ctx, id, a.mi)) * k;
                }
                case AtomKind::Func: {
                    std::vector<Form> args;
                    for (const auto& g : *a.args) args.push_back(pi(g));
                    return Form::atom(Atom::func(a.id, a.mi, args));
                }
                default:
                    return Form::atom(a);
            }
        };
        return map_atoms(substitute(F, f, momenta), rule);
    };

    r.ctx = B.ctx;
    Form r1 = B.omega_raw * orientation - pi(bfv.omega);
    r.forms.push_back({"iota*(dv theta_BV) - pi*(omega_BFV)", r1});

    Report cme = verify_cme(bv);
    Form r2;
    if (!cme.pass) {
        r2 = cme.forms[0].second;
    } else {
        Form prim = cme.forms.back().second;
        // {L,L} = 2 i_Q i_Q omega / 2 and theta carries the opposite sign, so
        // the slice image of its primitive is -2 L_BFV
        Form diff = pull_back(B, prim) * orientation + pi(bfv.L) * 2;
        Context all = all_dynamic(*B.ctx);
        r2 = diff.is_zero() || B.ctx->dim == 0 ? diff : projector0(all, diff);
    }
    r.forms.push_back({"iota*(h {L_BV,L_BV}) + 2 pi*(L_BFV) mod d", r2});

    EvolutionaryField Qr;
    for (const auto& [c, v] : bv.Q.comps) Qr.comps[c] = pull_back(B, v);
    auto transverse = B.transverse;
    for (const auto& [key, T] : transverse) {
        auto it = bv.Q.comps.find(key.first);
        if (it != bv.Q.comps.end())
            Qr.comps[T] = pull_back(B, total_derivative(M, it->second, MultiIndex{}.plus(tr, key.second)));
    }
    std::vector<int> gens = bfv.sigma.fields;
    gens.insert(gens.end(), bfv.ghosts.begin(), bfv.ghosts.end());
    gens.insert(gens.end(), bfv.momenta.begin(), bfv.momenta.end());
    bool q_ok = true;
    for (int u : gens) {
        auto it = bfv.Q.comps.find(u);
        Form rhs = it == bfv.Q.comps.end() ? Form() : pi(it->second);
        Form res = prolong(*B.ctx, Qr, pi(jet(F, u))) - rhs;
        if (!res.is_zero()) {
            q_ok = false;
            r.forms.push_back({"Q_BV pi*(" + F.comps[u].name + ") - pi*(Q_BFV " + F.comps[u].name + ")", res});
        }
    }

    std::vector<std::string> failed;
    if (!r1.is_zero()) failed.push_back("symplectic");
    if (!r2.is_zero()) failed.push_back("master");
    if (!q_ok) failed.push_back("intertwining");
    r.pass = failed.empty();
    for (const auto& f : failed) r.note += (r.note.empty() ? "" : ", ") + f + " condition fails";
    return r;
}

const char* witness_name(Witness w) {
    switch (w) {
        case Witness::Closed: return "closed";
        case Witness::Exact: return "exact";
        default: return "neither";
    }
}

Witness cohomology_witness(const BVTheory& bv, const Form& candidate, const std::optional<Form>& certificate) {
    const Context& C = *bv.ctx;
    if (certificate && prolong(C, bv.Q, *certificate) == candidate) return Witness::Exact;
    return prolong(C, bv.Q, candidate).is_zero() ? Witness::Closed : Witness::Neither;
}

}  // namespace varcalc
