#include "varcalc/suite.hpp"

#include <algorithm>

namespace varcalc {

namespace {

bool top(const Context& ctx, const Form& f) {
    auto g = f.grading();
    return g && g->q == ctx.dim;
}

int q_of(const Form& f) {
    auto g = f.grading();
    return g ? g->q : -1;
}

Form d_or_zero(const Context& ctx, const Form& f) { return f.is_zero() || top(ctx, f) ? Form() : d_h(ctx, f); }
Form h_or_zero(const Context& ctx, const Form& f) { return f.is_zero() || q_of(f) == 0 ? Form() : h_horizontal(ctx, f); }
Form euler_or_zero(const Context& ctx, const Form& f) { return top(ctx, f) ? interior_euler(ctx, f) : Form(); }
Form proj_or_zero(const Context& ctx, const Form& f) { return top(ctx, f) ? projector(ctx, f) : Form(); }

// Residual of one identity on one random form; zero when it holds.
using Check = std::function<Form(const Context&, RandomForms&)>;

const std::map<std::string, Check>& checks() {
    static const std::map<std::string, Check> table = {
        {"retraction",
         [](const Context& c, RandomForms& g) {
             Form s = interior_euler(c, g.form(c, g.uniform(1, 2), c.dim));
             return interior_euler(c, s) - s;
         }},
        {"horizontal-homotopy",
         [](const Context& c, RandomForms& g) {
             Form a = g.form(c, g.uniform(1, 2), g.uniform(0, c.dim));
             return h_or_zero(c, d_or_zero(c, a)) + d_or_zero(c, h_or_zero(c, a)) + euler_or_zero(c, a) - a;
         }},
        {"horizontal-side",
         [](const Context& c, RandomForms& g) {
             Form a = g.form(c, g.uniform(1, 2), c.dim);
             return h_horizontal(c, interior_euler(c, a)) + interior_euler(c, d_h(c, h_horizontal(c, a)));
         }},
        {"vertical-homotopy",
         [](const Context& c, RandomForms& g) {
             Form a = g.form(c, g.uniform(0, 2), g.uniform(0, c.dim));
             return h_vertical(c, d_v(c, a)) + d_v(c, h_vertical(c, a)) + zero_section(c, a) - a;
         }},
        {"vertical-anticommutes",
         [](const Context& c, RandomForms& g) {
             Form a = g.form(c, g.uniform(0, 2), g.uniform(0, c.dim - 1));
             return h_vertical(c, d_h(c, a)) + d_h(c, h_vertical(c, a));
         }},
        {"vertical-side",
         [](const Context& c, RandomForms& g) {
             Form ha = h_vertical(c, g.form(c, g.uniform(0, 2), g.uniform(0, c.dim)));
             return h_vertical(c, ha) + zero_section(c, ha) + h_vertical(c, g.constant_form(c, g.uniform(0, c.dim)));
         }},
        {"projectors",
         [](const Context& c, RandomForms& g) {
             Form a = g.form(c, 0, c.dim);
             Form p = projector(c, a), p0 = projector0(c, a);
             return (projector(c, p) - p) + (projector0(c, p0) - p0);
         }},
        {"zero-homotopy",
         [](const Context& c, RandomForms& g) {
             Form a = g.form(c, 0, g.uniform(0, c.dim));
             return d_or_zero(c, h_zero(c, a)) + h_zero(c, d_or_zero(c, a)) + proj_or_zero(c, a) + zero_section(c, a) - a;
         }},
    };
    return table;
}

}  // namespace

Context RandomForms::chart(int dim) {
    Context ctx;
    std::vector<int> sig(dim, 1);
    sig[0] = -1;
    ctx.set_flat(sig);
    ctx.add_comp({"u", 0, Kind::Dynamic, "u"});
    ctx.add_comp({"v", 0, Kind::Dynamic, "v"});
    ctx.add_comp({"b", 0, Kind::Background, "b"});
    return ctx;
}

int RandomForms::uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng); }

Form RandomForms::form(const Context& ctx, int p, int q, int terms, int deg, int max_order) {
    auto mi = [&](int order) {
        MultiIndex m;
        int k = uniform(0, order);
        for (int i = 0; i < k; ++i) m.c[uniform(0, ctx.dim - 1)] += 1;
        return m;
    };
    auto comp = [&](bool dynamic_only) {
        for (;;) {
            int c = uniform(0, static_cast<int>(ctx.comps.size()) - 1);
            if (!dynamic_only || ctx.dynamic(c)) return c;
        }
    };
    Form out;
    for (int t = 0; t < terms; ++t) {
        int a = uniform(-5, 5);
        Form m = Form::scalar(frac(a ? a : 1, uniform(1, 3)));
        int d = uniform(0, deg);
        for (int k = 0; k < d; ++k) m = m * jet(ctx, comp(false), mi(max_order));
        for (int k = 0; k < p; ++k) m = m * leg(ctx, comp(true), mi(max_order));
        std::vector<int> dirs(ctx.dim);
        for (int i = 0; i < ctx.dim; ++i) dirs[i] = i;
        std::shuffle(dirs.begin(), dirs.end(), rng);
        for (int k = 0; k < q; ++k) m = m * dx(dirs[k]);
        out += m;
    }
    return out;
}

Form RandomForms::constant_form(const Context& ctx, int q) {
    Form out;
    int bg = ctx.find_comp("b");
    for (int t = 0; t < 2; ++t) {
        int a = uniform(-5, 5);
        Form m = Form::scalar(frac(a ? a : 1, uniform(1, 3)));
        if (bg >= 0 && uniform(0, 1)) {
            MultiIndex mi;
            if (uniform(0, 1)) mi.c[uniform(0, ctx.dim - 1)] = 1;
            m = m * jet(ctx, bg, mi);
        }
        std::vector<int> dirs(ctx.dim);
        for (int i = 0; i < ctx.dim; ++i) dirs[i] = i;
        std::shuffle(dirs.begin(), dirs.end(), rng);
        for (int k = 0; k < q; ++k) m = m * dx(dirs[k]);
        out += m;
    }
    return out;
}

const std::vector<std::string>& homotopy_identities() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, c] : checks()) v.push_back(k);
        return v;
    }();
    return names;
}

Report check_homotopy_identity(const std::string& name, int dim, uint64_t seed, int cases) {
    auto it = checks().find(name);
    if (it == checks().end()) throw Error("UnknownIdentity", name);
    Report r;
    r.name = name + " (dim " + std::to_string(dim) + ")";
    auto ctx = std::make_shared<Context>(RandomForms::chart(dim));
    r.ctx = ctx;
    RandomForms g(seed * 1000003 + static_cast<uint64_t>(dim) * 131 + static_cast<uint64_t>(std::distance(checks().begin(), it)) * 7919);
    int failed = 0;
    for (int k = 0; k < cases; ++k) {
        Form res = it->second(*ctx, g);
        if (res.is_zero()) continue;
        if (!failed) r.forms.push_back({"residual (case " + std::to_string(k) + ")", res});
        ++failed;
    }
    r.pass = failed == 0;
    r.note = std::to_string(cases - failed) + "/" + std::to_string(cases) + " cases";
    return r;
}

std::vector<Report> homotopy_suite(uint64_t seed, int cases, int max_dim) {
    std::vector<Report> out;
    for (const auto& name : homotopy_identities())
        for (int dim = 1; dim <= max_dim; ++dim) out.push_back(check_homotopy_identity(name, dim, seed, cases));
    return out;
}

}  // namespace varcalc
