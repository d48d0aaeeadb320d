#include "varcalc/render.hpp"

#include "json.hpp"

namespace varcalc {

std::string render_rational(const Rational& r) { return r.get_str(); }

static std::string suffix(const MultiIndex& mi) {
    if (mi.order() == 0) return "";
    std::string s = "_,";
    for (int i = 0; i < kMaxDim; ++i)
        for (int k = 0; k < mi.c[i]; ++k) s += static_cast<char>('0' + i);
    return s;
}

std::string render_atom(const Context& ctx, const Atom& a) {
    switch (a.kind) {
    case AtomKind::Jet:
        return ctx.comps[a.id].name + suffix(a.mi);
    case AtomKind::Vert:
        return "delta(" + ctx.comps[a.id].name + suffix(a.mi) + ")";
    case AtomKind::Horiz:
        return "dx" + std::to_string(a.id);
    case AtomKind::Lambda:
        return "lambda@" + std::to_string(a.id);
    case AtomKind::Fiber:
        return "int@" + std::to_string(a.id) + "(" + render(ctx, (*a.args)[0]) + ")";
    case AtomKind::Func: {
        const auto& args = *a.args;
        std::string s = ctx.funcs[a.id].name;
        int ord = a.mi.order();
        if (args.size() == 1 && ord > 0 && ord <= 3) {
            s += std::string(ord, '\'');
        } else if (ord > 0) {
            s += "^(";
            for (size_t k = 0; k < args.size(); ++k) {
                if (k) s += ",";
                s += std::to_string(a.mi.c[k]);
            }
            s += ")";
        }
        s += "(";
        for (size_t k = 0; k < args.size(); ++k) {
            if (k) s += ",";
            s += render(ctx, args[k]);
        }
        return s + ")";
    }
    }
    return "?";
}

static std::string render_term(const Context& ctx, const Term& t, bool first) {
    std::string s;
    Rational c = t.coef;
    bool neg = c < 0;
    if (neg) c = -c;
    if (first)
        s = neg ? "-" : "";
    else
        s = neg ? " - " : " + ";
    std::string body;
    for (const auto& f : t.fac) {
        if (!body.empty()) body += "*";
        body += render_atom(ctx, f.atom);
        if (f.pow != 1) body += "**" + std::to_string(f.pow);
    }
    if (body.empty()) return s + render_rational(c);
    if (c != 1) return s + render_rational(c) + "*" + body;
    return s + body;
}

std::string render(const Context& ctx, const Form& f) {
    if (f.is_zero()) return "0";
    std::string s;
    for (size_t i = 0; i < f.terms.size(); ++i) s += render_term(ctx, f.terms[i], i == 0);
    return s;
}

std::string render_json(const Context& ctx, const Form& f) {
    nlohmann::json j;
    auto g = f.grading();
    j["text"] = render(ctx, f);
    if (g && f.homogeneous())
        j["grading"] = {{"p", g->p}, {"q", g->q}, {"g", g->g}};
    else
        j["grading"] = nullptr;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : f.terms) {
        nlohmann::json jt;
        jt["coef"] = render_rational(t.coef);
        nlohmann::json fac = nlohmann::json::array();
        for (const auto& x : t.fac) fac.push_back({{"atom", render_atom(ctx, x.atom)}, {"pow", x.pow}});
        jt["factors"] = fac;
        terms.push_back(jt);
    }
    j["terms"] = terms;
    return j.dump();
}

}  // namespace varcalc
