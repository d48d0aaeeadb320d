#include "varcalc/expr.hpp"

#include <algorithm>
#include <cstdlib>

namespace varcalc {

// ---------------------------------------------------------------- context

int Context::find_comp(const std::string& name) const {
    for (size_t i = 0; i < comps.size(); ++i)
        if (comps[i].name == name) return static_cast<int>(i);
    return -1;
}

int Context::find_func(const std::string& name) const {
    for (size_t i = 0; i < funcs.size(); ++i)
        if (funcs[i].name == name) return static_cast<int>(i);
    return -1;
}

int Context::add_comp(Component c) {
    if (find_comp(c.name) >= 0) throw Error("DuplicateIdentifier", c.name);
    comps.push_back(std::move(c));
    return static_cast<int>(comps.size()) - 1;
}

int Context::add_func(FunctionSymbol f) {
    if (find_func(f.name) >= 0) throw Error("DuplicateIdentifier", f.name);
    funcs.push_back(std::move(f));
    return static_cast<int>(funcs.size()) - 1;
}

void Context::set_flat(const std::vector<int>& signature) {
    dim = static_cast<int>(signature.size());
    metric.assign(dim, std::vector<Rational>(dim, 0));
    for (int i = 0; i < dim; ++i) metric[i][i] = signature[i];
}

int default_cutoff() {
    if (const char* s = std::getenv("VARCALC_JET_CUTOFF")) {
        int v = std::atoi(s);
        if (v > 0) return v;
    }
    return 6;
}

// ---------------------------------------------------------------- atoms

Atom Atom::jet(const Context& ctx, int comp, const MultiIndex& mi) {
    Atom a;
    a.kind = AtomKind::Jet;
    a.id = static_cast<int16_t>(comp);
    a.ghost = static_cast<int8_t>(ctx.comps[comp].ghost);
    a.odd = (a.ghost % 2) != 0;
    a.mi = mi;
    if (mi.order() > ctx.cutoff)
        throw Error("JetCutoffExceeded", ctx.comps[comp].name + " at order " + std::to_string(mi.order()));
    return a;
}

Atom Atom::vert(const Context& ctx, int comp, const MultiIndex& mi) {
    Atom a = jet(ctx, comp, mi);
    a.kind = AtomKind::Vert;
    a.odd = !a.odd;
    return a;
}

Atom Atom::horiz(int mu) {
    Atom a;
    a.kind = AtomKind::Horiz;
    a.id = static_cast<int16_t>(mu);
    a.odd = true;
    return a;
}

Atom Atom::lambda(int level) {
    Atom a;
    a.kind = AtomKind::Lambda;
    a.id = static_cast<int16_t>(level);
    return a;
}

Atom Atom::func(int f, const MultiIndex& der, std::vector<Form> args) {
    Atom a;
    a.kind = AtomKind::Func;
    a.id = static_cast<int16_t>(f);
    a.mi = der;
    a.args = std::make_shared<const std::vector<Form>>(std::move(args));
    return a;
}

Atom Atom::fiber(int level, Form inner) {
    Atom a;
    a.kind = AtomKind::Fiber;
    a.id = static_cast<int16_t>(level);
    a.args = std::make_shared<const std::vector<Form>>(std::vector<Form>{std::move(inner)});
    return a;
}

static int cmp_mi(const MultiIndex& a, const MultiIndex& b) {
    int oa = a.order(), ob = b.order();
    if (oa != ob) return oa < ob ? -1 : 1;
    // higher count in a lower direction sorts first (q_,00 < q_,01 < q_,11)
    for (int i = 0; i < kMaxDim; ++i)
        if (a.c[i] != b.c[i]) return a.c[i] > b.c[i] ? -1 : 1;
    return 0;
}

int compare(const Atom& a, const Atom& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    switch (a.kind) {
    case AtomKind::Jet:
    case AtomKind::Vert:
        if (a.ghost != b.ghost) return a.ghost < b.ghost ? -1 : 1;
        if (a.id != b.id) return a.id < b.id ? -1 : 1;
        return cmp_mi(a.mi, b.mi);
    case AtomKind::Lambda:
    case AtomKind::Horiz:
        if (a.id != b.id) return a.id < b.id ? -1 : 1;
        return 0;
    case AtomKind::Func: {
        if (a.id != b.id) return a.id < b.id ? -1 : 1;
        if (int c = cmp_mi(a.mi, b.mi)) return c;
        const auto& x = *a.args;
        const auto& y = *b.args;
        if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
        for (size_t i = 0; i < x.size(); ++i)
            if (int c = compare(x[i], y[i])) return c;
        return 0;
    }
    case AtomKind::Fiber:
        if (a.id != b.id) return a.id < b.id ? -1 : 1;
        return compare((*a.args)[0], (*b.args)[0]);
    }
    return 0;
}

int compare_monomial(const std::vector<Factor>& a, const std::vector<Factor>& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        if (int c = compare(a[i].atom, b[i].atom)) return c;
        if (a[i].pow != b[i].pow) return a[i].pow < b[i].pow ? -1 : 1;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

int compare(const Form& a, const Form& b) {
    size_t n = std::min(a.terms.size(), b.terms.size());
    for (size_t i = 0; i < n; ++i) {
        if (int c = compare_monomial(a.terms[i].fac, b.terms[i].fac)) return c;
        int c = cmp(a.terms[i].coef, b.terms[i].coef);
        if (c) return c < 0 ? -1 : 1;
    }
    if (a.terms.size() != b.terms.size()) return a.terms.size() < b.terms.size() ? -1 : 1;
    return 0;
}

// ---------------------------------------------------------------- products

// Merge two canonically ordered monomials; returns false when the product vanishes.
static bool mul_fac(const std::vector<Factor>& a, const std::vector<Factor>& b, std::vector<Factor>& out,
                    int& sign) {
    out.clear();
    out.reserve(a.size() + b.size());
    int odd_rem = 0;
    for (const auto& f : a)
        if (f.atom.odd) ++odd_rem;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        int c = compare(a[i].atom, b[j].atom);
        if (c < 0) {
            if (a[i].atom.odd) --odd_rem;
            out.push_back(a[i++]);
        } else if (c > 0) {
            if (b[j].atom.odd && (odd_rem & 1)) sign = -sign;
            out.push_back(b[j++]);
        } else {
            if (a[i].atom.odd) return false;
            int p = a[i].pow + b[j].pow;
            if (p != 0) out.push_back({a[i].atom, p});
            ++i;
            ++j;
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return true;
}

Form Form::scalar(const Rational& r) {
    Form f;
    if (r != 0) f.terms.push_back({r, {}});
    return f;
}

Form Form::atom(const Atom& a, int pow) {
    Form f;
    if (pow == 0) return scalar(1);
    if (a.odd && pow > 1) return f;
    f.terms.push_back({Rational(1), {{a, pow}}});
    return f;
}

Form Form::product(const Rational& c, const std::vector<Factor>& fac) {
    std::vector<Factor> v;
    int sign = 1;
    for (const auto& f : fac) {
        if (f.pow == 0) continue;
        if (f.atom.odd && f.pow > 1) return Form();
        // insert from the right, swapping past larger atoms
        size_t pos = v.size();
        while (pos > 0 && compare(v[pos - 1].atom, f.atom) > 0) {
            if (f.atom.odd && v[pos - 1].atom.odd) sign = -sign;
            --pos;
        }
        if (pos > 0 && compare(v[pos - 1].atom, f.atom) == 0) {
            if (f.atom.odd) return Form();
            // the atom is even: moving it does not change the sign
            v[pos - 1].pow += f.pow;
            if (v[pos - 1].pow == 0) v.erase(v.begin() + (pos - 1));
            continue;
        }
        v.insert(v.begin() + pos, f);
    }
    Form out;
    if (c != 0) out.terms.push_back({c * sign, std::move(v)});
    out.normalize();
    return out;
}

namespace {

struct FiberKey {
    std::vector<Factor> rest;
    int level;
};

}  // namespace

// Canonical fiber terms: coefficient folded into the inner integrand and
// terms sharing the same outer monomial merged.
static void merge_fibers(std::vector<Term>& terms) {
    bool any = false;
    for (const auto& t : terms)
        for (const auto& f : t.fac)
            if (f.atom.kind == AtomKind::Fiber) any = true;
    if (!any) return;
    std::vector<Term> keep;
    std::vector<std::pair<FiberKey, Form>> groups;
    for (auto& t : terms) {
        int nfib = 0;
        size_t at = 0;
        for (size_t i = 0; i < t.fac.size(); ++i)
            if (t.fac[i].atom.kind == AtomKind::Fiber) {
                ++nfib;
                at = i;
            }
        if (nfib != 1 || t.fac[at].pow != 1) {
            keep.push_back(std::move(t));
            continue;
        }
        FiberKey key{t.fac, t.fac[at].atom.id};
        key.rest.erase(key.rest.begin() + at);
        Form inner = (*t.fac[at].atom.args)[0] * t.coef;
        bool found = false;
        for (auto& g : groups)
            if (g.first.level == key.level && compare_monomial(g.first.rest, key.rest) == 0) {
                g.second += inner;
                found = true;
                break;
            }
        if (!found) groups.push_back({std::move(key), std::move(inner)});
    }
    for (auto& g : groups) {
        if (g.second.is_zero()) continue;
        Form f = make_fiber(g.second, g.first.level);
        // f is lambda-free outer part times at most one fiber; rest is lambda-free too
        Form r = Form::product(1, g.first.rest) * f;
        for (auto& t : r.terms) keep.push_back(std::move(t));
    }
    terms = std::move(keep);
}

void Form::normalize() {
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return compare_monomial(a.fac, b.fac) < 0; });
    std::vector<Term> out;
    out.reserve(terms.size());
    for (auto& t : terms) {
        if (!out.empty() && compare_monomial(out.back().fac, t.fac) == 0) {
            out.back().coef += t.coef;
        } else {
            if (!out.empty() && out.back().coef == 0) out.pop_back();
            out.push_back(std::move(t));
        }
    }
    if (!out.empty() && out.back().coef == 0) out.pop_back();
    terms = std::move(out);
    bool has_fiber = false;
    for (const auto& t : terms) {
        for (const auto& f : t.fac)
            if (f.atom.kind == AtomKind::Fiber) has_fiber = true;
    }
    if (has_fiber) {
        bool canonical = true;
        // already canonical when every fiber term has coefficient 1 and distinct outer monomials
        std::vector<std::vector<Factor>> seen;
        for (const auto& t : terms) {
            int nfib = 0;
            size_t at = 0;
            for (size_t i = 0; i < t.fac.size(); ++i)
                if (t.fac[i].atom.kind == AtomKind::Fiber) {
                    ++nfib;
                    at = i;
                }
            if (nfib != 1) continue;
            if (t.coef != 1) canonical = false;
            auto rest = t.fac;
            rest.erase(rest.begin() + at);
            rest.push_back({Atom::lambda(t.fac[at].atom.id), 0});
            for (const auto& s : seen)
                if (compare_monomial(s, rest) == 0) canonical = false;
            seen.push_back(std::move(rest));
        }
        if (!canonical) {
            merge_fibers(terms);
            normalize();
        }
    }
}

Form& Form::operator+=(const Form& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    normalize();
    return *this;
}

Form& Form::operator-=(const Form& o) {
    for (const auto& t : o.terms) terms.push_back({-t.coef, t.fac});
    normalize();
    return *this;
}

Form Form::operator+(const Form& o) const {
    Form r = *this;
    r += o;
    return r;
}

Form Form::operator-(const Form& o) const {
    Form r = *this;
    r -= o;
    return r;
}

Form Form::operator-() const {
    Form r = *this;
    for (auto& t : r.terms) t.coef = -t.coef;
    return r;
}

Form Form::operator*(const Rational& r) const {
    if (r == 0) return Form();
    Form out = *this;
    for (auto& t : out.terms) t.coef *= r;
    if (r != 1) out.normalize();  // fiber terms refold their coefficient
    return out;
}

Form operator*(const Form& a, const Form& b) {
    Form out;
    if (a.is_zero() || b.is_zero()) return out;
    out.terms.reserve(a.terms.size() * b.terms.size());
    std::vector<Factor> buf;
    for (const auto& x : a.terms)
        for (const auto& y : b.terms) {
            int sign = 1;
            if (!mul_fac(x.fac, y.fac, buf, sign)) continue;
            Rational c = x.coef * y.coef;
            if (sign < 0) c = -c;
            out.terms.push_back({c, buf});
        }
    out.normalize();
    return out;
}

bool Form::operator==(const Form& o) const { return compare(*this, o) == 0; }

static Grading term_grading(const Term& t) {
    Grading g;
    for (const auto& f : t.fac) {
        switch (f.atom.kind) {
        case AtomKind::Vert:
            g.p += f.pow;
            g.g += f.atom.ghost * f.pow;
            break;
        case AtomKind::Horiz:
            g.q += f.pow;
            break;
        case AtomKind::Jet:
            g.g += f.atom.ghost * f.pow;
            break;
        default:
            break;
        }
    }
    return g;
}

std::optional<Grading> Form::grading() const {
    if (terms.empty()) return std::nullopt;
    return term_grading(terms.front());
}

bool Form::homogeneous() const {
    if (terms.empty()) return true;
    Grading g0 = term_grading(terms.front());
    for (const auto& t : terms)
        if (!(term_grading(t) == g0)) return false;
    return true;
}

bool Form::odd() const {
    if (terms.empty()) return false;
    int n = 0;
    for (const auto& f : terms.front().fac)
        if (f.atom.odd) ++n;
    return n & 1;
}

// ---------------------------------------------------------------- lambda

bool atom_depends_on_lambda(const Atom& a, int level) {
    auto form_depends = [&](const Form& f) {
        for (const auto& t : f.terms)
            for (const auto& x : t.fac)
                if (atom_depends_on_lambda(x.atom, level)) return true;
        return false;
    };
    switch (a.kind) {
    case AtomKind::Lambda:
        return a.id == level;
    case AtomKind::Func:
        for (const auto& x : *a.args)
            if (form_depends(x)) return true;
        return false;
    case AtomKind::Fiber:
        return a.id != level && form_depends((*a.args)[0]);
    default:
        return false;
    }
}

int max_lambda_level(const Form& f) {
    int m = -1;
    for (const auto& t : f.terms)
        for (const auto& x : t.fac) {
            if (x.atom.kind == AtomKind::Lambda) m = std::max(m, int(x.atom.id));
            if (x.atom.kind == AtomKind::Fiber) m = std::max(m, int(x.atom.id));
            if (x.atom.args)
                for (const auto& a : *x.atom.args) m = std::max(m, max_lambda_level(a));
        }
    return m;
}

Form make_fiber(const Form& integrand, int level) {
    struct Group {
        std::vector<Factor> outer;
        Form inner;
    };
    std::vector<Group> groups;
    Form out;
    for (const auto& t : integrand.terms) {
        std::vector<Factor> outer, dep;
        for (const auto& f : t.fac) {
            if (atom_depends_on_lambda(f.atom, level))
                dep.push_back(f);
            else
                outer.push_back(f);
        }
        // dependent atoms are even, so splitting keeps the sign
        Form inner = Form::product(t.coef, dep);
        bool found = false;
        for (auto& g : groups)
            if (compare_monomial(g.outer, outer) == 0) {
                g.inner += inner;
                found = true;
                break;
            }
        if (!found) groups.push_back({std::move(outer), std::move(inner)});
    }
    for (auto& g : groups) {
        Rational exact = 0;
        Form rest;
        for (const auto& t : g.inner.terms) {
            if (t.fac.empty()) {
                exact += t.coef;
            } else if (t.fac.size() == 1 && t.fac[0].atom.kind == AtomKind::Lambda && t.fac[0].atom.id == level &&
                       t.fac[0].pow >= 0) {
                exact += t.coef / Rational(t.fac[0].pow + 1);
            } else {
                rest.terms.push_back(t);
            }
        }
        Form outer = Form::product(1, g.outer);
        if (exact != 0) {
            Form e = outer * exact;
            out.terms.insert(out.terms.end(), e.terms.begin(), e.terms.end());
        }
        if (!rest.is_zero()) {
            Form fib;
            fib.terms.push_back({Rational(1), {{Atom::fiber(level, rest), 1}}});
            Form prod = outer * fib;
            out.terms.insert(out.terms.end(), prod.terms.begin(), prod.terms.end());
        }
    }
    out.normalize();
    return out;
}

// ---------------------------------------------------------------- derivations

Form derive(const Form& f, bool odd, const AtomRule& rule) {
    std::map<Atom, Form> memo;
    auto image = [&](const Atom& a) -> const Form& {
        auto it = memo.find(a);
        if (it != memo.end()) return it->second;
        return memo.emplace(a, rule(a)).first->second;
    };
    Form out;
    std::vector<Factor> left, right, buf1, buf2;
    for (const auto& t : f.terms) {
        int parity = 0;
        for (size_t k = 0; k < t.fac.size(); ++k) {
            const Factor& fk = t.fac[k];
            const Form& img = image(fk.atom);
            if (!img.is_zero()) {
                left.assign(t.fac.begin(), t.fac.begin() + k);
                right.clear();
                if (fk.pow != 1) right.push_back({fk.atom, fk.pow - 1});
                right.insert(right.end(), t.fac.begin() + k + 1, t.fac.end());
                Rational c = t.coef * fk.pow;
                if (odd && (parity & 1)) c = -c;
                for (const auto& it : img.terms) {
                    int sign = 1;
                    if (!mul_fac(left, it.fac, buf1, sign)) continue;
                    if (!mul_fac(buf1, right, buf2, sign)) continue;
                    Rational cc = c * it.coef;
                    if (sign < 0) cc = -cc;
                    out.terms.push_back({cc, buf2});
                }
            }
            if (fk.atom.odd) parity += fk.pow;
        }
    }
    out.normalize();
    return out;
}

Form map_atoms(const Form& f, const AtomRule& rule) {
    std::map<Atom, Form> memo;
    Form out;
    for (const auto& t : f.terms) {
        Form acc = Form::scalar(t.coef);
        for (const auto& fk : t.fac) {
            auto it = memo.find(fk.atom);
            if (it == memo.end()) it = memo.emplace(fk.atom, rule(fk.atom)).first;
            const Form& img = it->second;
            if (fk.pow < 0) {
                if (!(img == Form::atom(fk.atom)))
                    throw Error("GhostDegreeMismatch", "negative power of a substituted atom");
                acc = acc * Form::atom(fk.atom, fk.pow);
                continue;
            }
            for (int p = 0; p < fk.pow; ++p) acc = acc * img;
            if (acc.is_zero()) break;
        }
        out.terms.insert(out.terms.end(), acc.terms.begin(), acc.terms.end());
    }
    out.normalize();
    return out;
}

Form total_derivative(const Context& ctx, const Form& f, int mu) {
    AtomRule rule = [&](const Atom& a) -> Form {
        switch (a.kind) {
        case AtomKind::Jet:
            if (ctx.comps[a.id].kind == Kind::Constant) return Form();
            return Form::atom(Atom::jet(ctx, a.id, a.mi.plus(mu)));
        case AtomKind::Vert:
            return Form::atom(Atom::vert(ctx, a.id, a.mi.plus(mu)));
        case AtomKind::Func: {
            Form out;
            const auto& args = *a.args;
            for (size_t k = 0; k < args.size(); ++k) {
                Form da = total_derivative(ctx, args[k], mu);
                if (da.is_zero()) continue;
                out += Form::atom(Atom::func(a.id, a.mi.plus(static_cast<int>(k)), args)) * da;
            }
            return out;
        }
        case AtomKind::Fiber:
            return make_fiber(total_derivative(ctx, (*a.args)[0], mu), a.id);
        default:
            return Form();
        }
    };
    return derive(f, false, rule);
}

Form total_derivative(const Context& ctx, const Form& f, const MultiIndex& a) {
    Form r = f;
    for (int mu = 0; mu < kMaxDim; ++mu)
        for (int k = 0; k < a.c[mu]; ++k) {
            if (r.is_zero()) return r;
            r = total_derivative(ctx, r, mu);
        }
    return r;
}

Form vertical_d(const Context& ctx, const Form& f) {
    AtomRule rule = [&](const Atom& a) -> Form {
        switch (a.kind) {
        case AtomKind::Jet:
            if (!ctx.dynamic(a.id)) return Form();
            return Form::atom(Atom::vert(ctx, a.id, a.mi));
        case AtomKind::Func: {
            Form out;
            const auto& args = *a.args;
            for (size_t k = 0; k < args.size(); ++k) {
                Form da = vertical_d(ctx, args[k]);
                if (da.is_zero()) continue;
                out += Form::atom(Atom::func(a.id, a.mi.plus(static_cast<int>(k)), args)) * da;
            }
            return out;
        }
        case AtomKind::Fiber:
            return make_fiber(vertical_d(ctx, (*a.args)[0]), a.id);
        default:
            return Form();
        }
    };
    return derive(f, true, rule);
}

// ---------------------------------------------------------------- substitution

Form substitute(const Context& ctx, const Form& f, const Bindings& b) {
    if (b.empty()) return f;
    std::map<std::pair<int, MultiIndex>, Form> dmemo;
    auto bound = [&](int comp, const MultiIndex& mi) -> const Form& {
        auto key = std::make_pair(comp, mi);
        auto it = dmemo.find(key);
        if (it != dmemo.end()) return it->second;
        Form v = total_derivative(ctx, b.at(comp), mi);
        return dmemo.emplace(key, std::move(v)).first->second;
    };
    AtomRule rule = [&](const Atom& a) -> Form {
        switch (a.kind) {
        case AtomKind::Jet: {
            auto it = b.find(a.id);
            if (it == b.end()) return Form::atom(a);
            const Form& v = bound(a.id, a.mi);
            if (!v.is_zero() && (v.odd() != a.odd || !v.homogeneous()))
                throw Error("GhostDegreeMismatch", "binding for " + ctx.comps[a.id].name);
            return v;
        }
        case AtomKind::Vert: {
            auto it = b.find(a.id);
            if (it == b.end()) return Form::atom(a);
            return vertical_d(ctx, bound(a.id, a.mi));
        }
        case AtomKind::Func: {
            std::vector<Form> args;
            for (const auto& x : *a.args) args.push_back(substitute(ctx, x, b));
            return Form::atom(Atom::func(a.id, a.mi, std::move(args)));
        }
        case AtomKind::Fiber:
            return make_fiber(substitute(ctx, (*a.args)[0], b), a.id);
        default:
            return Form::atom(a);
        }
    };
    return map_atoms(f, rule);
}

Form substitute_jets(const Context& ctx, const Form& f, const std::vector<JetRule>& rules, int max_rounds) {
    if (rules.empty()) return f;
    Form cur = f;
    for (int round = 0; round < max_rounds; ++round) {
        bool changed = false;
        AtomRule rule = [&](const Atom& a) -> Form {
            switch (a.kind) {
            case AtomKind::Jet:
                for (const auto& r : rules)
                    if (r.comp == a.id && a.mi.covers(r.mi)) {
                        changed = true;
                        return total_derivative(ctx, r.value, a.mi.minus(r.mi));
                    }
                return Form::atom(a);
            case AtomKind::Func: {
                std::vector<Form> args;
                for (const auto& x : *a.args) {
                    Form y = substitute_jets(ctx, x, rules, max_rounds);
                    if (!(y == x)) changed = true;
                    args.push_back(std::move(y));
                }
                return Form::atom(Atom::func(a.id, a.mi, std::move(args)));
            }
            default:
                return Form::atom(a);
            }
        };
        Form next = map_atoms(cur, rule);
        cur = std::move(next);
        if (!changed) return cur;
    }
    throw Error("NoSolvedForm", "on-shell substitution did not terminate");
}

// ---------------------------------------------------------------- evaluation

namespace {

// Polynomial in lambda levels with rational coefficients.
struct LPoly {
    std::map<std::vector<int>, Rational> c;

    static LPoly constant(const Rational& r) {
        LPoly p;
        if (r != 0) p.c[{}] = r;
        return p;
    }
    static LPoly var(int level) {
        LPoly p;
        std::vector<int> e(level + 1, 0);
        e[level] = 1;
        p.c[e] = 1;
        return p;
    }
    static std::vector<int> trim(std::vector<int> e) {
        while (!e.empty() && e.back() == 0) e.pop_back();
        return e;
    }
    LPoly operator+(const LPoly& o) const {
        LPoly r = *this;
        for (const auto& [e, v] : o.c) {
            r.c[e] += v;
            if (r.c[e] == 0) r.c.erase(e);
        }
        return r;
    }
    LPoly operator*(const LPoly& o) const {
        LPoly r;
        for (const auto& [e1, v1] : c)
            for (const auto& [e2, v2] : o.c) {
                std::vector<int> e(std::max(e1.size(), e2.size()), 0);
                for (size_t i = 0; i < e1.size(); ++i) e[i] += e1[i];
                for (size_t i = 0; i < e2.size(); ++i) e[i] += e2[i];
                e = trim(e);
                r.c[e] += v1 * v2;
                if (r.c[e] == 0) r.c.erase(e);
            }
        return r;
    }
    std::optional<Rational> as_constant() const {
        if (c.empty()) return Rational(0);
        if (c.size() == 1 && c.begin()->first.empty()) return c.begin()->second;
        return std::nullopt;
    }
    LPoly integrate(int level) const {
        LPoly r;
        for (const auto& [e, v] : c) {
            std::vector<int> e2 = e;
            int k = level < int(e2.size()) ? e2[level] : 0;
            if (level < int(e2.size())) e2[level] = 0;
            e2 = trim(e2);
            r.c[e2] += v / Rational(k + 1);
            if (r.c[e2] == 0) r.c.erase(e2);
        }
        return r;
    }
};

LPoly eval_rec(const Context& ctx, const Form& f, const Point& pt);

LPoly eval_func(const Context& ctx, const Atom& a, const Point& pt) {
    const auto& sym = ctx.funcs[a.id];
    if (!sym.model) throw Error("UnassignedSymbol", "function " + sym.name + " has no model");
    std::vector<LPoly> args;
    for (const auto& x : *a.args) args.push_back(eval_rec(ctx, x, pt));
    LPoly out;
    for (const auto& [exps, coef] : sym.model->coeffs) {
        Rational c = coef;
        bool zero = false;
        std::vector<int> e = exps;
        e.resize(args.size(), 0);
        for (size_t k = 0; k < args.size(); ++k) {
            int d = a.mi.c[k];
            if (d > e[k]) {
                zero = true;
                break;
            }
            for (int j = 0; j < d; ++j) c *= (e[k] - j);
            e[k] -= d;
        }
        if (zero || c == 0) continue;
        LPoly m = LPoly::constant(c);
        for (size_t k = 0; k < args.size(); ++k)
            for (int j = 0; j < e[k]; ++j) m = m * args[k];
        out = out + m;
    }
    return out;
}

LPoly eval_rec(const Context& ctx, const Form& f, const Point& pt) {
    LPoly total;
    for (const auto& t : f.terms) {
        LPoly acc = LPoly::constant(t.coef);
        for (const auto& fk : t.fac) {
            LPoly v;
            switch (fk.atom.kind) {
            case AtomKind::Lambda:
                v = LPoly::var(fk.atom.id);
                break;
            case AtomKind::Func:
                v = eval_func(ctx, fk.atom, pt);
                break;
            case AtomKind::Fiber:
                v = eval_rec(ctx, (*fk.atom.args)[0], pt).integrate(fk.atom.id);
                break;
            default: {
                auto r = pt.value(fk.atom);
                if (!r) throw Error("UnassignedSymbol", "atom without assignment");
                v = LPoly::constant(*r);
            }
            }
            if (fk.pow < 0) {
                auto cst = v.as_constant();
                if (!cst || *cst == 0) throw Error("UnassignedSymbol", "negative power of a non-invertible value");
                Rational inv = 1 / *cst;
                for (int j = 0; j < -fk.pow; ++j) acc = acc * LPoly::constant(inv);
            } else {
                for (int j = 0; j < fk.pow; ++j) acc = acc * v;
            }
        }
        total = total + acc;
    }
    return total;
}

}  // namespace

Rational evaluate(const Context& ctx, const Form& f, const Point& pt) {
    LPoly r = eval_rec(ctx, f, pt);
    auto c = r.as_constant();
    if (!c) throw Error("UnassignedSymbol", "free lambda in evaluated form");
    return *c;
}

// ---------------------------------------------------------------- helpers

std::vector<std::pair<Form, std::vector<Factor>>> split_by(const Form& f,
                                                           const std::function<bool(const Atom&)>& pred) {
    std::vector<std::pair<Form, std::vector<Factor>>> out;
    for (const auto& t : f.terms) {
        std::vector<Factor> sel, rest;
        int sign = 1;
        int odd_sel = 0;
        for (const auto& fk : t.fac) {
            if (pred(fk.atom)) {
                sel.push_back(fk);
                if (fk.atom.odd) odd_sel += fk.pow;
            } else {
                // moving this atom left past the selected odd atoms
                if (fk.atom.odd && (odd_sel & 1)) sign = -sign;
                rest.push_back(fk);
            }
        }
        Form coef = Form::product(sign * t.coef, rest);
        bool found = false;
        for (auto& o : out)
            if (compare_monomial(o.second, sel) == 0) {
                o.first += coef;
                found = true;
                break;
            }
        if (!found) out.push_back({std::move(coef), std::move(sel)});
    }
    std::vector<std::pair<Form, std::vector<Factor>>> nz;
    for (auto& o : out)
        if (!o.first.is_zero()) nz.push_back(std::move(o));
    return nz;
}

Form jet(const Context& ctx, int comp, const MultiIndex& mi) { return Form::atom(Atom::jet(ctx, comp, mi)); }
Form leg(const Context& ctx, int comp, const MultiIndex& mi) { return Form::atom(Atom::vert(ctx, comp, mi)); }
Form dx(int mu) { return Form::atom(Atom::horiz(mu)); }

Form vol(const Context& ctx) {
    Form v = Form::scalar(1);
    for (int mu = 0; mu < ctx.dim; ++mu) v = v * dx(mu);
    return v;
}

bool mentions(const Form& f, const std::function<bool(int)>& pred) {
    for (const auto& t : f.terms)
        for (const auto& fk : t.fac) {
            if ((fk.atom.kind == AtomKind::Jet || fk.atom.kind == AtomKind::Vert) && pred(fk.atom.id)) return true;
            if (fk.atom.args)
                for (const auto& a : *fk.atom.args)
                    if (mentions(a, pred)) return true;
        }
    return false;
}

static void collect_jets(const Form& f, std::vector<std::pair<int, MultiIndex>>& out) {
    for (const auto& t : f.terms)
        for (const auto& fk : t.fac) {
            if (fk.atom.kind == AtomKind::Jet) {
                auto key = std::make_pair(int(fk.atom.id), fk.atom.mi);
                if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
            }
            if (fk.atom.args)
                for (const auto& a : *fk.atom.args) collect_jets(a, out);
        }
}

std::vector<std::pair<int, MultiIndex>> jets_in(const Form& f) {
    std::vector<std::pair<int, MultiIndex>> out;
    collect_jets(f, out);
    return out;
}

}  // namespace varcalc
