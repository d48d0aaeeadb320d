#include "varcalc/bicomplex.hpp"

#include <algorithm>
#include <set>

namespace varcalc {

namespace {

using LegSet = std::set<std::pair<int, MultiIndex>>;

void collect_legs(const Form& f, LegSet& out) {
    for (const auto& t : f.terms)
        for (const auto& x : t.fac)
            if (x.atom.kind == AtomKind::Vert) out.insert({x.atom.id, x.atom.mi});
}

// Split a form into pieces of fixed (p, q).
std::map<std::pair<int, int>, Form> by_degree(const Form& f) {
    std::map<std::pair<int, int>, Form> out;
    for (const auto& t : f.terms) {
        int p = 0, q = 0;
        for (const auto& x : t.fac) {
            if (x.atom.kind == AtomKind::Vert) p += x.pow;
            if (x.atom.kind == AtomKind::Horiz) q += x.pow;
        }
        out[{p, q}].terms.push_back(t);
    }
    return out;
}

Form sum_of(std::vector<Term>&& terms) {
    Form f;
    f.terms = std::move(terms);
    f.normalize();
    return f;
}

void append(std::vector<Term>& acc, const Form& f) { acc.insert(acc.end(), f.terms.begin(), f.terms.end()); }

Rational binom(int n, int k) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return Rational(r);
}

}  // namespace

Form contract_dx(const Form& f, int mu) {
    return derive(f, true, [&](const Atom& a) {
        if (a.kind == AtomKind::Horiz && a.id == mu) return Form::scalar(1);
        return Form();
    });
}

Form contract_leg(const Context& ctx, const Form& f, int comp, const MultiIndex& mi) {
    bool odd = (ctx.comps[comp].ghost + 1) % 2 != 0;
    return derive(f, odd, [&](const Atom& a) {
        if (a.kind == AtomKind::Vert && a.id == comp && a.mi == mi) return Form::scalar(1);
        return Form();
    });
}

Form d_h(const Context& ctx, const Form& f) {
    std::vector<Term> acc;
    for (int mu = 0; mu < ctx.dim; ++mu) {
        Form dmu = total_derivative(ctx, f, mu);
        if (dmu.is_zero()) continue;
        append(acc, dx(mu) * dmu);
    }
    return sum_of(std::move(acc));
}

Form d_v(const Context& ctx, const Form& f) { return vertical_d(ctx, f); }

static void require_top(const Context& ctx, const std::pair<int, int>& pq, const char* op) {
    if (pq.second != ctx.dim || pq.first < 1)
        throw Error("GradingError", std::string(op) + " needs p>=1 and q=n, got (" + std::to_string(pq.first) + "," +
                                        std::to_string(pq.second) + ")");
}

Form interior_euler(const Context& ctx, const Form& f) {
    std::vector<Term> acc;
    for (const auto& [pq, part] : by_degree(f)) {
        require_top(ctx, pq, "interior Euler operator");
        LegSet legs;
        collect_legs(part, legs);
        std::map<int, std::vector<Term>> src;
        for (const auto& [comp, b] : legs) {
            Form c = contract_leg(ctx, part, comp, b);
            Form t = total_derivative(ctx, c, b);
            if (b.order() % 2) t = -t;
            append(src[comp], t);
        }
        Rational scale = frac(1, pq.first);
        for (auto& [comp, terms] : src) {
            Form e = sum_of(std::move(terms));
            append(acc, (leg(ctx, comp) * e) * scale);
        }
    }
    return sum_of(std::move(acc));
}

Form exterior_euler(const Context& ctx, const Form& f) {
    for (const auto& [pq, part] : by_degree(f))
        if (pq.second != ctx.dim) throw Error("GradingError", "exterior Euler operator needs q=n");
    return interior_euler(ctx, vertical_d(ctx, f));
}

Form higher_euler(const Context& ctx, const Form& f, int comp, const MultiIndex& c) {
    LegSet legs;
    collect_legs(f, legs);
    std::vector<Term> acc;
    for (const auto& [k, beta] : legs) {
        if (k != comp || !beta.covers(c)) continue;
        MultiIndex b = beta.minus(c);
        Rational w = 1;
        for (int i = 0; i < kMaxDim; ++i) w *= binom(beta.c[i], c.c[i]);
        if (b.order() % 2) w = -w;
        Form t = total_derivative(ctx, contract_leg(ctx, f, comp, beta), b);
        append(acc, t * w);
    }
    return sum_of(std::move(acc));
}

// Enumerate all multi-indices c with c <= some element of tops.
static std::set<MultiIndex> lower_sets(const std::vector<MultiIndex>& tops) {
    std::set<MultiIndex> out;
    for (const auto& top : tops) {
        std::set<MultiIndex> seen;
        std::vector<MultiIndex> stack{MultiIndex{}};
        while (!stack.empty()) {
            MultiIndex m = stack.back();
            stack.pop_back();
            if (!seen.insert(m).second) continue;
            out.insert(m);
            for (int i = 0; i < kMaxDim; ++i)
                if (m.c[i] < top.c[i]) stack.push_back(m.plus(i));
        }
    }
    return out;
}

Form h_horizontal(const Context& ctx, const Form& f) {
    const int n = ctx.dim;
    std::vector<Term> acc;
    for (const auto& [pq, part] : by_degree(f)) {
        auto [p, q] = pq;
        if (p < 1) throw Error("GradingError", "horizontal homotopy needs p>=1");
        if (q == 0) continue;
        for (int j = 0; j < n; ++j) {
            Form eta = contract_dx(part, j);
            if (eta.is_zero()) continue;
            LegSet legs;
            collect_legs(eta, legs);
            std::map<int, std::vector<MultiIndex>> tops;
            for (const auto& [comp, mi] : legs) tops[comp].push_back(mi);
            for (const auto& [comp, ms] : tops) {
                for (const MultiIndex& c : lower_sets(ms)) {
                    if (c.c[j] == 0) continue;
                    Form e = higher_euler(ctx, eta, comp, c);
                    if (e.is_zero()) continue;
                    Rational w = frac(c.c[j], (n - q + c.order()) * p);
                    MultiIndex a = c;
                    a.c[j] -= 1;
                    Form t = total_derivative(ctx, leg(ctx, comp) * e, a);
                    append(acc, t * w);
                }
            }
        }
    }
    return sum_of(std::move(acc));
}

Form h_horizontal_special(const Context& ctx, const Form& f) {
    auto proj = [&](const Form& x) {
        Form top, rest;
        for (const auto& t : x.terms) {
            int q = 0;
            for (const auto& a : t.fac)
                if (a.atom.kind == AtomKind::Horiz) ++q;
            (q == ctx.dim ? top : rest).terms.push_back(t);
        }
        if (top.is_zero()) return x;
        return x - interior_euler(ctx, top);
    };
    auto h1 = [&](const Form& x) { return proj(h_horizontal(ctx, proj(x))); };
    return h1(d_h(ctx, h1(f)));
}

// ---------------------------------------------------------------- vertical side

namespace {

bool is_dynamic_leg(const Context& ctx, const Atom& a) { return a.kind == AtomKind::Vert && ctx.dynamic(a.id); }

// Contraction with the radial (Euler) vector field.
Form radial_contract(const Context& ctx, const Form& f) {
    return derive(f, true, [&](const Atom& a) {
        if (is_dynamic_leg(ctx, a)) return Form::atom(Atom::jet(ctx, a.id, a.mi));
        return Form();
    });
}

struct Candidate {
    size_t term;
    Atom base;  // function atom with unscaled arguments and zero derivative orders
    int arg;
    std::vector<Factor> rest;
    Rational coef;
};

// Un-scale function arguments: every argument must be lambda-free or exactly
// lambda times one dynamic jet of order zero or higher.
std::optional<std::vector<Form>> unscale_args(const Context& ctx, const Atom& fn, int level) {
    std::vector<Form> base;
    for (const auto& arg : *fn.args) {
        bool dep = false;
        for (const auto& t : arg.terms)
            for (const auto& x : t.fac)
                if (atom_depends_on_lambda(x.atom, level)) dep = true;
        if (!dep) {
            base.push_back(arg);
            continue;
        }
        if (arg.terms.size() != 1) return std::nullopt;
        const Term& t = arg.terms[0];
        if (t.coef != 1 || t.fac.size() != 2) return std::nullopt;
        const Factor& j = t.fac[0];
        const Factor& l = t.fac[1];
        if (j.atom.kind != AtomKind::Jet || j.pow != 1 || !ctx.dynamic(j.atom.id) || j.atom.odd) return std::nullopt;
        if (l.atom.kind != AtomKind::Lambda || l.atom.id != level || l.pow != 1) return std::nullopt;
        base.push_back(Form::atom(j.atom));
    }
    return base;
}

// Fold sum_k c R x_k (d_k F)(lambda x) into c R (F(x) - F(x|0)).
Form recognize_antiderivatives(const Context& ctx, Form& integrand, int level) {
    std::vector<Candidate> cands;
    for (size_t i = 0; i < integrand.terms.size(); ++i) {
        const Term& t = integrand.terms[i];
        int ndep = 0;
        size_t at = 0;
        for (size_t k = 0; k < t.fac.size(); ++k)
            if (atom_depends_on_lambda(t.fac[k].atom, level)) {
                ++ndep;
                at = k;
            }
        if (ndep != 1) continue;
        const Factor& fn = t.fac[at];
        if (fn.atom.kind != AtomKind::Func || fn.pow != 1 || fn.atom.mi.order() != 1) continue;
        int k = 0;
        while (fn.atom.mi.c[k] == 0) ++k;
        auto base = unscale_args(ctx, fn.atom, level);
        if (!base) continue;
        const Form& xk = (*base)[k];
        if (xk.terms.size() != 1 || xk.terms[0].fac.size() != 1) continue;
        const Atom& xa = xk.terms[0].fac[0].atom;
        if (xa.kind != AtomKind::Jet || !ctx.dynamic(xa.id)) continue;
        // the remaining monomial must contain x_k
        std::vector<Factor> rest;
        bool removed = false;
        for (size_t m = 0; m < t.fac.size(); ++m) {
            if (m == at) continue;
            Factor fc = t.fac[m];
            if (!removed && fc.atom == xa) {
                removed = true;
                if (--fc.pow == 0) continue;
            }
            rest.push_back(fc);
        }
        if (!removed) continue;
        Atom b = Atom::func(fn.atom.id, MultiIndex{}, *base);
        cands.push_back({i, b, k, std::move(rest), t.coef});
    }
    std::vector<bool> used(integrand.terms.size(), false);
    std::vector<Term> folded;
    std::vector<bool> taken(cands.size(), false);
    for (size_t i = 0; i < cands.size(); ++i) {
        if (taken[i]) continue;
        const auto& ci = cands[i];
        const auto& args = *ci.base.args;
        std::vector<int> need;
        for (size_t k = 0; k < args.size(); ++k) {
            const Form& a = args[k];
            if (a.terms.size() == 1 && a.terms[0].fac.size() == 1 && a.terms[0].fac[0].atom.kind == AtomKind::Jet &&
                ctx.dynamic(a.terms[0].fac[0].atom.id))
                need.push_back(static_cast<int>(k));
        }
        std::vector<size_t> group;
        for (int k : need) {
            bool ok = false;
            for (size_t j = i; j < cands.size(); ++j) {
                if (taken[j]) continue;
                const auto& cj = cands[j];
                if (cj.arg == k && cj.base == ci.base && cj.coef == ci.coef && compare_monomial(cj.rest, ci.rest) == 0) {
                    group.push_back(j);
                    ok = true;
                    break;
                }
            }
            if (!ok) break;
        }
        if (group.size() != need.size()) continue;
        for (size_t j : group) {
            taken[j] = true;
            used[cands[j].term] = true;
        }
        std::vector<Form> zero_args = args;
        for (int k : need) zero_args[k] = Form();
        Form val = Form::atom(ci.base) - Form::atom(Atom::func(ci.base.id, MultiIndex{}, zero_args));
        append(folded, Form::product(ci.coef, ci.rest) * val);
    }
    std::vector<Term> rest;
    for (size_t i = 0; i < integrand.terms.size(); ++i)
        if (!used[i]) rest.push_back(integrand.terms[i]);
    integrand = sum_of(std::move(rest));
    return sum_of(std::move(folded));
}

}  // namespace

Form h_vertical(const Context& ctx, const Form& f) {
    Form r = radial_contract(ctx, f);
    if (r.is_zero()) return r;
    const int level = max_lambda_level(r) + 1;
    Bindings b;
    Form lam = Form::atom(Atom::lambda(level));
    for (size_t c = 0; c < ctx.comps.size(); ++c)
        if (ctx.dynamic(static_cast<int>(c))) b[static_cast<int>(c)] = lam * jet(ctx, static_cast<int>(c));
    Form scaled = substitute(ctx, r, b);
    // divide by lambda
    for (auto& t : scaled.terms) {
        bool done = false;
        for (size_t k = 0; k < t.fac.size(); ++k)
            if (t.fac[k].atom.kind == AtomKind::Lambda && t.fac[k].atom.id == level) {
                if (--t.fac[k].pow == 0) t.fac.erase(t.fac.begin() + k);
                done = true;
                break;
            }
        if (!done) throw Error("NonScalableTerm", "coefficient is singular at the zero section");
    }
    scaled.normalize();
    Form out = recognize_antiderivatives(ctx, scaled, level);
    return out + make_fiber(scaled, level);
}

Form zero_section(const Context& ctx, const Form& f) {
    Bindings b;
    for (size_t c = 0; c < ctx.comps.size(); ++c)
        if (ctx.dynamic(static_cast<int>(c))) b[static_cast<int>(c)] = Form();
    return substitute(ctx, f, b);
}

static void require_p0(const Form& f, const char* op) {
    for (const auto& [pq, part] : by_degree(f))
        if (pq.first != 0) throw Error("GradingError", std::string(op) + " needs p=0");
}

Form h_zero(const Context& ctx, const Form& f) {
    require_p0(f, "h0");
    return -h_vertical(ctx, h_horizontal(ctx, vertical_d(ctx, f)));
}

Form projector(const Context& ctx, const Form& f) {
    for (const auto& [pq, part] : by_degree(f))
        if (pq.first != 0 || pq.second != ctx.dim) throw Error("GradingError", "Euler projector needs (0,n)");
    return h_vertical(ctx, interior_euler(ctx, vertical_d(ctx, f)));
}

Form projector0(const Context& ctx, const Form& f) { return projector(ctx, f) + zero_section(ctx, f); }

bool field_independent(const Context& ctx, const Form& f) {
    for (const auto& t : f.terms)
        for (const auto& x : t.fac)
            if (x.atom.kind == AtomKind::Vert) return false;
    return !mentions(f, [&](int c) { return ctx.dynamic(c); });
}

ConePair cone_d(const Context& ctx, const ConePair& x) {
    if (!field_independent(ctx, x.a)) throw Error("NotConstant", "cone component depends on fields");
    return {-d_h(ctx, x.a), d_h(ctx, x.b) + x.a};
}

ConePair cone_h(const Context& ctx, const ConePair& x) {
    if (!field_independent(ctx, x.a)) throw Error("NotConstant", "cone component depends on fields");
    return {zero_section(ctx, x.b), h_zero(ctx, x.b)};
}

// ---------------------------------------------------------------- evolutionary fields

bool EvolutionaryField::empty() const {
    for (const auto& [c, f] : comps)
        if (!f.is_zero()) return false;
    return true;
}

bool insertion_odd(const Context& ctx, const EvolutionaryField& v) {
    std::optional<bool> par;
    for (const auto& [c, rho] : v.comps) {
        if (rho.is_zero()) continue;
        if (!rho.homogeneous()) throw Error("GhostDegreeMismatch", "inhomogeneous component for " + ctx.comps[c].name);
        bool leg_odd = (ctx.comps[c].ghost + 1) % 2 != 0;
        bool p = rho.odd() != leg_odd;
        if (par && *par != p) throw Error("GhostDegreeMismatch", "components of mixed parity");
        par = p;
    }
    return par.value_or(true);
}

Form insert(const Context& ctx, const EvolutionaryField& v, const Form& f) {
    bool odd = insertion_odd(ctx, v);
    return derive(f, odd, [&](const Atom& a) -> Form {
        if (a.kind != AtomKind::Vert) return Form();
        auto it = v.comps.find(a.id);
        if (it == v.comps.end()) return Form();
        return total_derivative(ctx, it->second, a.mi);
    });
}

Form prolong(const Context& ctx, const EvolutionaryField& v, const Form& f) {
    bool iodd = insertion_odd(ctx, v);
    std::function<Form(const Form&)> self;
    AtomRule rule = [&](const Atom& a) -> Form {
        switch (a.kind) {
        case AtomKind::Jet: {
            auto it = v.comps.find(a.id);
            if (it == v.comps.end()) return Form();
            return total_derivative(ctx, it->second, a.mi);
        }
        case AtomKind::Vert: {
            auto it = v.comps.find(a.id);
            if (it == v.comps.end()) return Form();
            Form r = vertical_d(ctx, total_derivative(ctx, it->second, a.mi));
            return iodd ? r : -r;
        }
        case AtomKind::Func: {
            Form out;
            const auto& args = *a.args;
            for (size_t k = 0; k < args.size(); ++k) {
                Form da = self(args[k]);
                if (da.is_zero()) continue;
                out += Form::atom(Atom::func(a.id, a.mi.plus(static_cast<int>(k)), args)) * da;
            }
            return out;
        }
        case AtomKind::Fiber:
            return make_fiber(self((*a.args)[0]), a.id);
        default:
            return Form();
        }
    };
    self = [&](const Form& x) { return derive(x, !iodd, rule); };
    return self(f);
}

Form lie_derivative(const Context& ctx, const EvolutionaryField& v, const Form& f) {
    bool iodd = insertion_odd(ctx, v);
    Form a = insert(ctx, v, vertical_d(ctx, f));
    Form b = vertical_d(ctx, insert(ctx, v, f));
    return iodd ? a + b : a - b;
}

// ---------------------------------------------------------------- Hodge star

namespace {

Rational det(std::vector<std::vector<Rational>> m) {
    const size_t n = m.size();
    Rational d = 1;
    for (size_t i = 0; i < n; ++i) {
        size_t piv = i;
        while (piv < n && m[piv][i] == 0) ++piv;
        if (piv == n) return 0;
        if (piv != i) {
            std::swap(m[piv], m[i]);
            d = -d;
        }
        d *= m[i][i];
        for (size_t r = i + 1; r < n; ++r) {
            if (m[r][i] == 0) continue;
            Rational k = m[r][i] / m[i][i];
            for (size_t c = i; c < n; ++c) m[r][c] -= k * m[i][c];
        }
    }
    return d;
}

std::vector<std::vector<Rational>> inverse(const std::vector<std::vector<Rational>>& g) {
    const size_t n = g.size();
    std::vector<std::vector<Rational>> a(n, std::vector<Rational>(2 * n, 0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) a[i][j] = g[i][j];
        a[i][n + i] = 1;
    }
    for (size_t i = 0; i < n; ++i) {
        size_t piv = i;
        while (piv < n && a[piv][i] == 0) ++piv;
        if (piv == n) throw Error("DegenerateMetric", "metric is singular");
        std::swap(a[piv], a[i]);
        Rational k = a[i][i];
        for (auto& x : a[i]) x /= k;
        for (size_t r = 0; r < n; ++r) {
            if (r == i || a[r][i] == 0) continue;
            Rational f = a[r][i];
            for (size_t c = 0; c < 2 * n; ++c) a[r][c] -= f * a[i][c];
        }
    }
    std::vector<std::vector<Rational>> inv(n, std::vector<Rational>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) inv[i][j] = a[i][n + j];
    return inv;
}

int perm_sign(const std::vector<int>& v) {
    int s = 1;
    for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j)
            if (v[i] > v[j]) s = -s;
    return s;
}

Rational rational_sqrt(const Rational& x) {
    mpz_class num = x.get_num(), den = x.get_den();
    if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
        throw Error("IrrationalVolume", "sqrt|det g| is not rational");
    mpz_class a, b;
    mpz_sqrt(a.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(b.get_mpz_t(), den.get_mpz_t());
    Rational r(a, b);
    r.canonicalize();
    return r;
}

void subsets(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < n; ++i) {
        cur.push_back(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace

Form hodge_star(const Context& ctx, const Form& f) {
    const int n = ctx.dim;
    auto ginv = inverse(ctx.metric);
    Rational vol_factor = rational_sqrt(abs(det(ctx.metric)));
    std::map<std::vector<int>, Form> cache;
    auto star_basis = [&](const std::vector<int>& I) -> const Form& {
        auto it = cache.find(I);
        if (it != cache.end()) return it->second;
        const int k = static_cast<int>(I.size());
        std::vector<std::vector<int>> js;
        std::vector<int> cur;
        subsets(n, k, 0, cur, js);
        Form out;
        for (const auto& J : js) {
            std::vector<std::vector<Rational>> m(k, std::vector<Rational>(k));
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) m[a][b] = ginv[I[a]][J[b]];
            Rational w = k ? det(m) : Rational(1);
            if (w == 0) continue;
            std::vector<int> perm = J;
            std::vector<Factor> legs;
            for (int mu = 0; mu < n; ++mu)
                if (std::find(J.begin(), J.end(), mu) == J.end()) {
                    perm.push_back(mu);
                    legs.push_back({Atom::horiz(mu), 1});
                }
            out += Form::product(w * vol_factor * perm_sign(perm), legs);
        }
        return cache.emplace(I, std::move(out)).first->second;
    };
    std::vector<Term> acc;
    for (const auto& t : f.terms) {
        std::vector<int> I;
        std::vector<Factor> rest;
        for (const auto& x : t.fac) {
            if (x.atom.kind == AtomKind::Horiz)
                I.push_back(x.atom.id);
            else
                rest.push_back(x);
        }
        append(acc, Form::product(t.coef, rest) * star_basis(I));
    }
    return sum_of(std::move(acc));
}

}  // namespace varcalc
