#pragma once
// Random local forms and evaluation points shared by the test suites.

#include <random>

#include "varcalc/bicomplex.hpp"

namespace vt {

using namespace varcalc;

inline Context make_context(int n, bool with_func = false, bool with_ghost = false) {
    Context ctx;
    std::vector<int> sig(n, 1);
    sig[0] = -1;
    ctx.set_flat(sig);
    ctx.add_comp({"u", 0, Kind::Dynamic, "u"});
    ctx.add_comp({"v", 0, Kind::Dynamic, "v"});
    ctx.add_comp({"b", 0, Kind::Background, "b"});
    if (with_ghost) ctx.add_comp({"c", 1, Kind::Dynamic, "c"});
    if (with_func) {
        PolyModel m;
        m.coeffs[{0}] = Rational(2);
        m.coeffs[{1}] = Rational(-1);
        m.coeffs[{3}] = frac(1, 3);
        ctx.add_func({"V", 1, m});
    }
    return ctx;
}

struct Gen {
    std::mt19937_64 rng;
    explicit Gen(uint64_t seed) : rng(seed) {}

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    Rational coef() {
        int a = uniform(-5, 5);
        if (a == 0) a = 1;
        return frac(a, uniform(1, 3));
    }
    MultiIndex mi(const Context& ctx, int max_order) {
        MultiIndex m;
        int k = uniform(0, max_order);
        for (int i = 0; i < k; ++i) m.c[uniform(0, ctx.dim - 1)] += 1;
        return m;
    }
    int comp(const Context& ctx, bool dynamic_only) {
        for (;;) {
            int c = uniform(0, static_cast<int>(ctx.comps.size()) - 1);
            if (!dynamic_only || ctx.dynamic(c)) return c;
        }
    }
    // Random (p, q) form with polynomial coefficients of degree <= deg.
    Form form(const Context& ctx, int p, int q, int terms = 3, int deg = 3, int max_order = 2, bool funcs = false) {
        Form out;
        for (int t = 0; t < terms; ++t) {
            Form m = Form::scalar(coef());
            int d = uniform(0, deg);
            for (int k = 0; k < d; ++k) m = m * jet(ctx, comp(ctx, false), mi(ctx, max_order));
            if (funcs && !ctx.funcs.empty() && uniform(0, 1)) {
                Form arg = jet(ctx, comp(ctx, true), mi(ctx, 1));
                int der = uniform(0, 1);
                MultiIndex dm;
                dm.c[0] = static_cast<uint8_t>(der);
                m = m * Form::atom(Atom::func(0, dm, {arg}));
            }
            for (int k = 0; k < p; ++k) m = m * leg(ctx, comp(ctx, true), mi(ctx, max_order));
            std::vector<int> dirs(ctx.dim);
            for (int i = 0; i < ctx.dim; ++i) dirs[i] = i;
            std::shuffle(dirs.begin(), dirs.end(), rng);
            for (int k = 0; k < q; ++k) m = m * dx(dirs[k]);
            out += m;
        }
        return out;
    }
    // Random field-independent form of horizontal degree q.
    Form constant_form(const Context& ctx, int q) {
        Form out;
        for (int t = 0; t < 2; ++t) {
            Form m = Form::scalar(coef());
            if (uniform(0, 1)) m = m * jet(ctx, 2, mi(ctx, 1));
            std::vector<int> dirs(ctx.dim);
            for (int i = 0; i < ctx.dim; ++i) dirs[i] = i;
            std::shuffle(dirs.begin(), dirs.end(), rng);
            for (int k = 0; k < q; ++k) m = m * dx(dirs[k]);
            out += m;
        }
        return out;
    }
    Point point() {
        auto table = std::make_shared<std::map<std::string, Rational>>();
        auto self = this;
        uint64_t salt = rng();
        return Point{[table, self, salt](const Atom& a) -> std::optional<Rational> {
            std::string key = std::to_string(int(a.kind)) + ":" + std::to_string(a.id) + ":";
            for (auto c : a.mi.c) key += std::to_string(int(c)) + ",";
            auto it = table->find(key);
            if (it != table->end()) return it->second;
            std::seed_seq s{salt, static_cast<uint64_t>(std::hash<std::string>{}(key))};
            std::mt19937 r(s);
            Rational v = frac(std::uniform_int_distribution<int>(-9, 9)(r), std::uniform_int_distribution<int>(1, 4)(r));
            (void)self;
            table->emplace(key, v);
            return v;
        }};
    }
};

// Equality up to evaluation at several random points (for forms carrying
// function symbols whose canonical representatives need not coincide).
inline bool equal_by_evaluation(const Context& ctx, const Form& a, const Form& b, Gen& g, int points = 5) {
    Form diff = a - b;
    for (int i = 0; i < points; ++i)
        if (evaluate(ctx, diff, g.point()) != 0) return false;
    return true;
}

}  // namespace vt
