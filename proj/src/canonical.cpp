#include "varcalc/canonical.hpp"

#include <algorithm>

namespace varcalc {

namespace {

using Matrix = std::vector<std::vector<Rational>>;

// Gauss-Jordan inverse; nullopt when singular.
std::optional<Matrix> invert(Matrix a) {
    size_t n = a.size();
    Matrix inv(n, std::vector<Rational>(n, Rational(0)));
    for (size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        while (piv < n && a[piv][col] == 0) ++piv;
        if (piv == n) return std::nullopt;
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        Rational p = a[col][col];
        for (size_t j = 0; j < n; ++j) {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0) continue;
            Rational m = a[r][col];
            for (size_t j = 0; j < n; ++j) {
                a[r][j] -= m * a[col][j];
                inv[r][j] -= m * inv[col][j];
            }
        }
    }
    return inv;
}

// Component ids of jets and legs in f, including function arguments.
void collect_comps(const Form& f, std::set<int>& out) {
    for (const auto& t : f.terms)
        for (const auto& x : t.fac) {
            const Atom& a = x.atom;
            if (a.kind == AtomKind::Jet || a.kind == AtomKind::Vert) out.insert(a.id);
            if ((a.kind == AtomKind::Func || a.kind == AtomKind::Fiber) && a.args)
                for (const auto& g : *a.args) collect_comps(g, out);
        }
}

std::set<MultiIndex> legs_of(const Form& f, int comp) {
    std::set<MultiIndex> out;
    for (const auto& t : f.terms)
        for (const auto& x : t.fac)
            if (x.atom.kind == AtomKind::Vert && x.atom.id == comp) out.insert(x.atom.mi);
    return out;
}

std::string with_suffix(const std::string& name, const std::string& suffix) {
    size_t k = name.find_first_of("{[");
    if (k == std::string::npos) return name + "_" + suffix;
    return name.substr(0, k) + "_" + suffix + name.substr(k);
}

int transverse_comp(SigmaTheory& s, int comp, int order) {
    auto key = std::make_pair(comp, order);
    auto it = s.transverse.find(key);
    if (it != s.transverse.end()) return it->second;
    const Context& M = *s.bulk;
    int t = s.slice.transverse;
    std::string dir = static_cast<int>(M.coords.size()) > t ? M.coords[t] : "d" + std::to_string(t);
    std::string suffix;
    for (int k = 0; k < order; ++k) suffix += dir;
    Component c = M.comps[comp];
    c.name = with_suffix(c.name, suffix);
    int id = s.ctx->add_comp(c);
    s.transverse[key] = id;
    return id;
}

MultiIndex tangential(const SigmaTheory& s, const MultiIndex& mi) {
    MultiIndex out;
    for (size_t mu = 0; mu < s.sigma_dir.size(); ++mu)
        if (s.sigma_dir[mu] >= 0) out.c[s.sigma_dir[mu]] = mi.c[mu];
    return out;
}

// Pullback to the slice, with transverse jets as independent fields.
Form to_raw(SigmaTheory& s, const Form& f) {
    int t = s.slice.transverse;
    AtomRule rule = [&](const Atom& a) -> Form {
        switch (a.kind) {
            case AtomKind::Jet:
            case AtomKind::Vert: {
                int k = a.mi.c[t];
                int comp = k == 0 ? a.id : transverse_comp(s, a.id, k);
                MultiIndex J = tangential(s, a.mi);
                return a.kind == AtomKind::Jet ? jet(*s.ctx, comp, J) : leg(*s.ctx, comp, J);
            }
            case AtomKind::Horiz:
                return a.id == t ? Form() : dx(s.sigma_dir[a.id]);
            case AtomKind::Func: {
                std::vector<Form> args;
                for (const auto& g : *a.args) args.push_back(to_raw(s, g));
                return Form::atom(Atom::func(a.id, a.mi, args));
            }
            case AtomKind::Fiber:
                return Form::atom(Atom::fiber(a.id, to_raw(s, (*a.args)[0])));
            default:
                return Form::atom(a);
        }
    };
    return map_atoms(f, rule);
}

Form eliminate(const SigmaTheory& s, Form f) {
    for (const auto& r : s.momenta) f = substitute(*s.ctx, f, {{r.comp, r.value}});
    return f;
}

bool is_transverse(const SigmaTheory& s, int comp) {
    for (const auto& [k, v] : s.transverse)
        if (v == comp) return true;
    return false;
}

Context promoted(const Context& ctx, const std::vector<int>& params) {
    Context p = ctx;
    for (auto& c : p.comps)
        if (c.kind == Kind::Dynamic) c.kind = Kind::Parameter;
    for (int c : params) p.comps[c].kind = Kind::Dynamic;
    return p;
}

}  // namespace

Form pull_back(SigmaTheory& s, const Form& bulk) { return to_raw(s, bulk); }

bool SigmaTheory::is_field(int comp) const { return std::count(fields.begin(), fields.end(), comp) > 0; }

SigmaTheory restrict_to_slice(const Theory& t, const SliceSpec& slice) {
    const Context& M = t.ctx();
    int n = M.dim;
    if (slice.transverse < 0 || slice.transverse >= n) throw Error("InvalidSlice", "transverse direction out of range");
    if (slice.corner >= n || slice.corner == slice.transverse || slice.corner < -1)
        throw Error("InvalidSlice", "corner direction must be a slice direction");
    SigmaTheory s;
    s.slice = slice;
    s.bulk = &M;
    s.ctx = std::make_shared<Context>();
    Context& S = *s.ctx;
    S.dim = n - 1;
    S.cutoff = M.cutoff;
    S.comps = M.comps;
    S.funcs = M.funcs;
    for (int mu = 0, k = 0; mu < n; ++mu) {
        if (mu == slice.transverse) {
            s.sigma_dir.push_back(-1);
            continue;
        }
        s.sigma_dir.push_back(k++);
        if (static_cast<int>(M.coords.size()) == n) S.coords.push_back(M.coords[mu]);
    }
    for (int a = 0; a < n; ++a) {
        if (a == slice.transverse) continue;
        std::vector<Rational> row;
        for (int b = 0; b < n; ++b)
            if (b != slice.transverse) row.push_back(M.metric[a][b]);
        S.metric.push_back(row);
    }
    s.vol = Form::scalar(1);
    for (int k = 0; k < S.dim; ++k) s.vol = s.vol * dx(k);
    if (auto ginv = invert(M.metric)) {
        int tr = slice.transverse;
        s.null = (*ginv)[tr][tr] == 0;
        if (s.null) {
            std::vector<int> gen;
            for (int mu = 0; mu < n; ++mu)
                if (mu != tr && (*ginv)[tr][mu] != 0) gen.push_back(s.sigma_dir[mu]);
            if (gen.size() == 1) s.ruling = gen[0];
        }
    }
    if (t.L.is_zero() || t.theta.is_zero()) return s;

    s.theta_raw = to_raw(s, t.theta);
    s.omega_raw = d_v(S, s.theta_raw);
    if (!(to_raw(s, t.omega) == s.omega_raw)) throw Error("InvariantViolation", "pullback of omega is not dv of the pulled back theta");

    // momenta conjugate to the restricted fields replace transverse jets
    Form cur = s.theta_raw;
    std::set<int> eliminated;
    for (int c = 0; c < static_cast<int>(M.comps.size()); ++c) {
        if (!M.dynamic(c)) continue;
        Form Q = contract_leg(S, cur, c, {});
        if (Q.is_zero()) continue;
        Form P = top_density(Q);
        std::set<int> present;
        collect_comps(P, present);
        for (const auto& [key, T] : s.transverse) {
            if (!M.dynamic(key.first) || eliminated.count(T) || !present.count(T)) continue;
            Component pc = M.comps[c];
            pc.name = "Pi_" + pc.name;
            int pi = S.add_comp(pc);
            auto v = solve_linear(S, P - jet(S, pi), T, {});
            if (!v) {
                S.comps.pop_back();
                continue;
            }
            Form raw = P;
            for (const auto& [q, e] : s.momentum_of) raw = substitute(S, raw, {{q, e}});
            s.momentum_of[pi] = raw;
            s.momenta.push_back({T, {}, *v});
            eliminated.insert(T);
            cur = substitute(S, cur, {{T, *v}});
            break;
        }
    }
    s.theta = cur;
    s.omega = d_v(S, s.theta);
    Bindings back(s.momentum_of.begin(), s.momentum_of.end());
    if (!(substitute(S, s.omega, back) == s.omega_raw))
        throw Error("InvariantViolation", "momentum variables do not reproduce the pulled back omega");

    std::set<int> present;
    collect_comps(s.theta, present);
    for (int c : present)
        if (S.dynamic(c)) s.fields.push_back(c);

    std::vector<std::string> lonely;
    for (int a : s.fields) {
        Form src;
        for (const auto& J : legs_of(s.omega, a)) {
            Form part = total_derivative(S, contract_leg(S, s.omega, a, J), J);
            src += J.order() % 2 ? -part : part;
        }
        std::set<int> with;
        for (const auto& t2 : src.terms)
            for (const auto& x : t2.fac)
                if (x.atom.kind == AtomKind::Vert) with.insert(x.atom.id);
        if (with.empty()) lonely.push_back(S.comps[a].name);
        s.partners[a] = std::vector<int>(with.begin(), with.end());
    }
    if (!lonely.empty()) {
        std::string list;
        for (const auto& n2 : lonely) list += (list.empty() ? "" : ", ") + n2;
        throw Error("DegenerateSlice", "no symplectic partner for " + list);
    }
    return s;
}

Form to_slice(SigmaTheory& s, const Form& bulk) {
    Form f = eliminate(s, to_raw(s, bulk));
    std::set<int> comps;
    collect_comps(f, comps);
    std::string bad;
    for (int c : comps) {
        const Component& k = s.ctx->comps[c];
        bool offending = (k.kind == Kind::Parameter && is_transverse(s, c)) || (k.kind == Kind::Dynamic && !s.is_field(c));
        if (offending) bad += (bad.empty() ? "" : ", ") + k.name;
    }
    if (!bad.empty()) throw Error("DoesNotDescend", "not expressible in slice fields: " + bad);
    return f;
}

Form sigma_noether(const Theory& t, const SymmetryDef& sym, SigmaTheory& s) {
    if (sym.rho.empty()) return Form();
    return to_slice(s, noether_cone(t, sym.rho).J);
}

ConstraintFlux split_constraint_flux(const SigmaTheory& s, const Form& H, const std::vector<int>& params) {
    DualSplit d = decompose_dual_current(*s.ctx, H, params);
    return {d.f, d.k};
}

EvolutionaryField sigma_action(const Theory& t, const SymmetryDef& sym, SigmaTheory& s) {
    const Context& M = t.ctx();
    int tr = s.slice.transverse;
    EvolutionaryField raw;
    // transverse derivatives are taken on shell
    auto onshell = [&](const Form& f) { return t.solved.empty() ? f : substitute_jets(M, f, t.solved); };
    for (const auto& [c, v] : sym.rho.comps) raw.comps[c] = to_raw(s, onshell(v));
    auto transverse = s.transverse;
    for (const auto& [key, T] : transverse) {
        auto it = sym.rho.comps.find(key.first);
        if (it == sym.rho.comps.end()) continue;
        raw.comps[T] = to_raw(s, onshell(total_derivative(M, it->second, MultiIndex{}.plus(tr, key.second))));
    }
    EvolutionaryField out;
    for (int u : s.fields) {
        Form v;
        if (s.momentum_of.count(u)) {
            v = prolong(*s.ctx, raw, s.momentum_of.at(u));
        } else if (raw.comps.count(u)) {
            v = raw.comps.at(u);
        } else {
            continue;
        }
        v = eliminate(s, v);
        std::set<int> comps;
        collect_comps(v, comps);
        for (int c : comps) {
            const Component& k = s.ctx->comps[c];
            if ((k.kind == Kind::Parameter && is_transverse(s, c)) || (k.kind == Kind::Dynamic && !s.is_field(c)))
                throw Error("DoesNotDescend", "action on " + s.name(u) + " involves " + k.name);
        }
        if (!v.is_zero()) out.comps[u] = v;
    }
    return out;
}

CocycleTable compute_ce_cocycle(const Theory& t, const SymmetryDef& sym, SigmaTheory& s, const Form& H_in) {
    Form H = H_in.is_zero() ? sigma_noether(t, sym, s) : H_in;
    EvolutionaryField rho = sigma_action(t, sym, s);
    bool local = std::all_of(sym.params.begin(), sym.params.end(), [](const FieldDecl& p) { return p.kind == Kind::Parameter; });
    CocycleTable out;
    if (local) out.j_sigma = to_slice(s, noether2(t, sym).j);

    ParamCopies pc = copy_parameters(*s.ctx, t.def, sym, 2);
    out.ctx = pc.ctx;
    const Context& C = *pc.ctx;
    std::vector<int> params = parameter_components(sym);
    Bindings xi = identity_bindings(C, params), eta = pc.copy[0], zeta = pc.copy[1];

    auto lie = [&](const Bindings& x, const Form& f) { return lie_derivative(C, rebind(C, rho, x), f); };
    auto cochain = [&](const Bindings& x, const Bindings& y) {
        Bindings br = pc.bracket(x, y);
        return lie(x, substitute(C, H, y)) - substitute(C, H, br) + substitute(C, out.j_sigma, br);
    };

    Context all = C;
    for (auto& c : all.comps)
        if (c.kind != Kind::Constant) c.kind = Kind::Dynamic;
    auto primitive = [&](const Form& R) {
        if (R.is_zero()) return Form();
        if (C.dim == 0 || !projector0(all, R).is_zero()) throw Error("NotExact", "cocycle residual is not d-exact: " + render(C, R));
        Form k = h_zero(all, R);
        if (!(d_h(all, k) == R)) throw Error("InvariantViolation", "primitive does not reproduce the residual");
        return k;
    };

    out.residual = cochain(xi, eta);
    out.kappa = primitive(out.residual);

    Form defect = lie(xi, cochain(eta, zeta)) - lie(eta, cochain(xi, zeta)) + lie(zeta, cochain(xi, eta)) -
                         cochain(pc.bracket(xi, eta), zeta) + cochain(pc.bracket(xi, zeta), eta) -
                         cochain(pc.bracket(eta, zeta), xi);
    out.cocycle_defect = C.dim == 0 || defect.is_zero() ? defect : projector0(all, defect);

    // table over basis pairs of Lie-valued parameters
    for (const auto& p : sym.params) {
        if (p.lie.empty()) continue;
        const Algebra* A = t.def.algebra(p.lie);
        for (int a = 0; a < A->dim; ++a)
            for (int b = 0; b < A->dim; ++b) {
                Bindings x, y;
                for (int c : params) {
                    x[c] = Form();
                    y[c] = Form();
                }
                x[p.comps[a]] = xi.at(p.comps[a]);
                y[p.comps[b]] = eta.at(p.comps[b]);
                Form R = cochain(x, y);
                out.entries.push_back({p.name + "(" + std::to_string(a) + "," + std::to_string(b) + ")", R, primitive(R)});
            }
    }
    if (out.entries.empty()) out.entries.push_back({"generic", out.residual, out.kappa});
    return out;
}

int CornerData::h(int a) const { return a; }
int CornerData::c(int a) const { return dim + a; }

CornerData make_corner(std::vector<std::string> generators, std::vector<Rational> f, std::vector<Rational> k) {
    CornerData cd;
    cd.dim = static_cast<int>(generators.size());
    int N = cd.dim;
    cd.generators = std::move(generators);
    cd.f = f.empty() ? std::vector<Rational>(N * N * N, Rational(0)) : std::move(f);
    cd.k = k.empty() ? std::vector<Rational>(N * N, Rational(0)) : std::move(k);
    if (static_cast<int>(cd.f.size()) != N * N * N || static_cast<int>(cd.k.size()) != N * N)
        throw Error("DimensionMismatch", "corner structure tables do not match the generator count");
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            if (cd.k[a * N + b] != -cd.k[b * N + a]) throw Error("InvalidStructure", "k is not antisymmetric");
            for (int c = 0; c < N; ++c)
                if (cd.f[(a * N + b) * N + c] != -cd.f[(a * N + c) * N + b])
                    throw Error("InvalidStructure", "structure constants are not antisymmetric");
        }
    cd.ring = std::make_shared<Context>();
    Context& R = *cd.ring;
    R.set_flat({1});
    for (int a = 0; a < N; ++a) R.add_comp({"h{" + std::to_string(a) + "}", 0, Kind::Dynamic, "h"});
    for (int a = 0; a < N; ++a) R.add_comp({"c{" + std::to_string(a) + "}", 1, Kind::Dynamic, "c"});
    auto F = [&](int a, int b, int c) { return cd.f[(a * N + b) * N + c]; };
    for (int a = 0; a < N; ++a) cd.alpha += jet(R, cd.h(a)) * jet(R, cd.c(a));
    for (int b = 0; b < N; ++b)
        for (int c = 0; c < N; ++c) {
            Form pi = Form::scalar(cd.k[b * N + c]);
            for (int a = 0; a < N; ++a)
                if (F(a, b, c) != 0) {
                    pi += jet(R, cd.h(a)) * F(a, b, c);
                    cd.S += jet(R, cd.h(a)) * jet(R, cd.c(b)) * jet(R, cd.c(c)) * (F(a, b, c) / 2);
                }
            if (cd.k[b * N + c] != 0) cd.S += jet(R, cd.c(b)) * jet(R, cd.c(c)) * (cd.k[b * N + c] / 2);
            cd.Pi.push_back(pi);
        }
    return cd;
}

CornerData corner_data(const Theory& t, const SymmetryDef& sym, SigmaTheory& s, const Form& flux,
                       const std::vector<Rational>& k) {
    if (s.slice.corner < 0) throw Error("InvalidSlice", "slice declares no corner");
    if (flux.is_zero()) throw Error("NoFlux", "flux form vanishes");
    int cs = s.sigma_dir[s.slice.corner];
    Form onb;
    for (const auto& term : flux.terms) {
        bool normal = false;
        for (const auto& x : term.fac)
            if (x.atom.kind == AtomKind::Horiz && x.atom.id == cs) normal = true;
        if (!normal) onb.terms.push_back(term);
    }
    Form dens = top_density(onb);
    std::vector<int> params = parameter_components(sym);
    Context P = promoted(*s.ctx, params);
    for (const auto& [c, mi] : jets_in(dens))
        if (std::count(params.begin(), params.end(), c) && mi.order() > 0)
            throw Error("NotPointwise", "corner flux involves derivatives of " + s.name(c));
    Form dd = d_v(P, dens);
    std::vector<std::string> names;
    std::vector<Form> fluxes;
    std::vector<std::pair<const FieldDecl*, int>> origin;
    for (const auto& p : sym.params)
        for (size_t i = 0; i < p.comps.size(); ++i) {
            Form coef = contract_leg(P, dd, p.comps[i], {});
            if (coef.is_zero()) continue;
            names.push_back(s.name(p.comps[i]));
            fluxes.push_back(coef);
            origin.push_back({&p, static_cast<int>(i)});
        }
    if (names.empty()) throw Error("NoFlux", "flux vanishes on the corner");
    int N = static_cast<int>(names.size());
    std::vector<Rational> f(N * N * N, Rational(0));
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) {
                const FieldDecl* pa = origin[a].first;
                if (pa != origin[b].first || pa != origin[c].first || pa->lie.empty()) continue;
                const Algebra* A = t.def.algebra(pa->lie);
                f[(a * N + b) * N + c] = A->F(pa->lie_index[origin[a].second], pa->lie_index[origin[b].second],
                                              pa->lie_index[origin[c].second]);
            }
    CornerData cd = make_corner(names, f, k);
    cd.flux = fluxes;
    cd.membership = dens;
    return cd;
}

namespace {

Form d_by(const Form& f, int comp, bool odd) {
    return derive(f, odd, [comp](const Atom& a) {
        return a.kind == AtomKind::Jet && a.id == comp && a.mi.order() == 0 ? Form::scalar(1) : Form();
    });
}

// Right derivative by an odd generator, termwise from the left one.
Form d_right_odd(const Form& f, int comp) {
    Form out;
    for (const auto& t : f.terms) {
        Form one;
        one.terms.push_back(t);
        Form l = d_by(one, comp, true);
        out += one.odd() ? l : -l;
    }
    return out;
}

}  // namespace

Form corner_bracket(const CornerData& cd, const Form& a, const Form& b) {
    Form out;
    for (int i = 0; i < cd.dim; ++i) {
        out += d_by(a, cd.h(i), false) * d_by(b, cd.c(i), true);
        out -= d_right_odd(a, cd.c(i)) * d_by(b, cd.h(i), false);
    }
    return out;
}

std::vector<Form> schouten_jacobiator(const CornerData& cd) {
    int N = cd.dim;
    auto Pi = [&](int a, int b) -> const Form& { return cd.Pi[a * N + b]; };
    std::vector<Form> J;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) {
                Form s;
                for (int d = 0; d < N; ++d)
                    s += Pi(a, d) * d_by(Pi(b, c), cd.h(d), false) + Pi(b, d) * d_by(Pi(c, a), cd.h(d), false) +
                         Pi(c, d) * d_by(Pi(a, b), cd.h(d), false);
                J.push_back(s);
            }
    return J;
}

Report verify_corner_master(const CornerData& cd) {
    Report r;
    r.name = "corner-master";
    Form ss = corner_bracket(cd, cd.S, cd.S);
    std::vector<Form> J = schouten_jacobiator(cd);
    bool jacobi = std::all_of(J.begin(), J.end(), [](const Form& f) { return f.is_zero(); });
    if (ss.is_zero() != jacobi) throw Error("VerdictMismatch", "master equation and Jacobi identity disagree");
    r.pass = jacobi;
    if (!r.pass) r.note = "MasterEquationFails";
    r.forms.push_back({"{S,S}", ss});
    int N = cd.dim;
    for (int i = 0; i < static_cast<int>(J.size()); ++i)
        if (!J[i].is_zero())
            r.forms.push_back({"[Pi,Pi](" + std::to_string(i / (N * N)) + "," + std::to_string(i / N % N) + "," +
                                   std::to_string(i % N) + ")",
                               J[i]});
    return r;
}

Report casimir_report(const CornerData& cd) {
    Report r;
    r.name = "casimir";
    int N = cd.dim;
    const Context& R = *cd.ring;
    auto F = [&](int a, int b, int c) { return cd.f[(a * N + b) * N + c]; };
    std::vector<Form> candidates;
    bool abelian = std::all_of(cd.f.begin(), cd.f.end(), [](const Rational& x) { return x == 0; });
    if (abelian) {
        for (int a = 0; a < N; ++a) candidates.push_back(jet(R, cd.h(a)));
    } else {
        Matrix B(N, std::vector<Rational>(N, Rational(0)));
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                for (int c = 0; c < N; ++c)
                    for (int d = 0; d < N; ++d) B[a][b] += F(c, a, d) * F(d, b, c);
        auto Binv = invert(B);
        if (!Binv) {
            r.applicable = false;
            r.note = "degenerate Killing form";
            return r;
        }
        Form C;
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                if ((*Binv)[a][b] != 0) C += jet(R, cd.h(a)) * jet(R, cd.h(b)) * (*Binv)[a][b];
        candidates.push_back(C);
    }
    for (size_t i = 0; i < candidates.size(); ++i) {
        r.forms.push_back({"C" + std::to_string(i), candidates[i]});
        for (int b = 0; b < N; ++b) {
            Form br;
            for (int c = 0; c < N; ++c) br += cd.Pi[b * N + c] * d_by(candidates[i], cd.h(c), false);
            if (!br.is_zero()) r.pass = false;
            r.forms.push_back({"{C" + std::to_string(i) + ",h" + std::to_string(b) + "}", br});
        }
    }
    return r;
}

}  // namespace varcalc
