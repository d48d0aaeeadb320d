// varcalc: batch front end for the variational bicomplex engine.
//
// Exit codes: 0 when every requested assertion passes, 1 on an assertion
// failure or a computational error, 2 on usage or parse errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "varcalc/bvbfv.hpp"
#include "varcalc/mechred.hpp"
#include "varcalc/suite.hpp"

using namespace varcalc;
using json = nlohmann::ordered_json;

namespace {

// Errors that map to exit code 2.
struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Line {
    std::string name, text;
    json data;
};

struct Check {
    std::string name;
    bool pass = true, applicable = true;
    std::string note;
    std::vector<std::pair<std::string, std::string>> forms;
};

// Buffered report; emitted once in insertion order.
struct Sink {
    std::string command, theory, file;
    std::optional<uint64_t> seed;
    std::optional<int> cases;
    std::vector<Line> lines;
    std::vector<Check> checks;

    void form(const std::string& name, const Context& ctx, const Form& f) {
        lines.push_back({name, render(ctx, f), json::parse(render_json(ctx, f))});
    }
    void text(const std::string& name, const std::string& s) { lines.push_back({name, s, s}); }
    void number(const std::string& name, double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        lines.push_back({name, buf, v});
    }
    void check(const Report& r, const Context& fallback) {
        const Context& ctx = r.ctx ? *r.ctx : fallback;
        Check c{r.name, r.pass, r.applicable, r.note, {}};
        for (const auto& [k, f] : r.forms) c.forms.push_back({k, render(ctx, f)});
        checks.push_back(std::move(c));
    }
    void check(const std::string& name, bool pass, const std::string& note = "") { checks.push_back({name, pass, true, note, {}}); }

    bool pass() const {
        for (const auto& c : checks)
            if (c.applicable && !c.pass) return false;
        return true;
    }

    json to_json() const {
        json j;
        j["schema"] = "varcalc.report.v1";
        j["command"] = command;
        if (!theory.empty()) j["theory"] = theory;
        if (!file.empty()) j["file"] = file;
        if (seed) j["seed"] = *seed;
        if (cases) j["cases"] = *cases;
        j["pass"] = pass();
        j["outputs"] = json::array();
        for (const auto& l : lines) j["outputs"].push_back({{"name", l.name}, {"text", l.text}, {"value", l.data}});
        j["checks"] = json::array();
        for (const auto& c : checks) {
            json f = json::array();
            for (const auto& [k, v] : c.forms) f.push_back({{"name", k}, {"text", v}});
            j["checks"].push_back(
                {{"name", c.name}, {"pass", c.pass}, {"applicable", c.applicable}, {"note", c.note}, {"forms", f}});
        }
        return j;
    }

    void emit(std::ostream& out, bool as_json, const std::string& prefix = "") const {
        if (as_json) {
            out << to_json().dump(2) << "\n";
            return;
        }
        if (!theory.empty()) out << prefix << "theory " << theory << "\n";
        if (seed) out << prefix << "seed " << *seed << " cases " << *cases << "\n";
        for (const auto& l : lines) out << prefix << l.name << " = " << l.text << "\n";
        for (const auto& c : checks) {
            out << prefix << (!c.applicable ? "SKIP " : c.pass ? "PASS " : "FAIL ") << c.name;
            if (!c.note.empty()) out << " [" << c.note << "]";
            out << "\n";
            if (c.applicable && !c.pass)
                for (const auto& [k, v] : c.forms) out << prefix << "  " << k << " = " << v << "\n";
        }
    }
};

struct Options {
    bool json = false, all = false;
    uint64_t seed = 0;
    int cases = 200;
    std::string slice, corner, symmetry, identity, with;
    std::vector<std::string> files;
};

// ---------------------------------------------------------------- theory input

std::string resolve(const std::string& path) {
    if (std::filesystem::exists(path)) return path;
    for (const char* dir : std::initializer_list<const char*>{std::getenv("VARCALC_THEORY_PATH"), VARCALC_THEORY_DIR}) {
        if (!dir) continue;
        std::filesystem::path p = std::filesystem::path(dir) / path;
        if (std::filesystem::exists(p)) return p.string();
    }
    return path;
}

TheoryDef load(const std::string& path) {
    try {
        return load_theory(path);
    } catch (const ParseError& e) {
        std::string msg = e.message();
        if (msg.rfind(path + ": ", 0) == 0) msg = msg.substr(path.size() + 2);
        throw Usage(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.col()) + ": " + e.code() + ": " + msg);
    } catch (const Error& e) {
        throw Usage(path + ": " + e.what());
    }
}

Form parse_in(const TheoryDef& def, const std::string& text, const std::string& where) {
    try {
        return parse_form(def, text);
    } catch (const ParseError& e) {
        throw Usage(where + ":" + std::to_string(e.line()) + ":" + std::to_string(e.col()) + ": " + e.code() + ": " +
                    e.message());
    } catch (const Error& e) {
        throw Usage(where + ": " + e.what());
    }
}

// "t=0" or "x1=0": a coordinate name, or x<index>, set to zero.
int coordinate(const Context& ctx, const std::string& spec, const char* flag) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw Usage(std::string(flag) + ": expected NAME=0, got '" + spec + "'");
    std::string name = spec.substr(0, eq), value = spec.substr(eq + 1);
    if (value != "0") throw Usage(std::string(flag) + ": only coordinate hyperplanes NAME=0 are supported");
    for (int i = 0; i < static_cast<int>(ctx.coords.size()); ++i)
        if (ctx.coords[i] == name) return i;
    if (ctx.coords.empty() && name == "t") return 0;
    if (name.size() > 1 && name[0] == 'x' && name.find_first_not_of("0123456789", 1) == std::string::npos) {
        int i = std::stoi(name.substr(1));
        if (i < ctx.dim) return i;
    }
    throw Usage(std::string(flag) + ": unknown coordinate '" + name + "'");
}

SliceSpec slice_of(const Theory& t, const Options& o, bool need_corner) {
    SliceSpec s;
    if (!o.slice.empty()) s.transverse = coordinate(t.ctx(), o.slice, "--slice");
    if (!o.corner.empty()) {
        s.corner = coordinate(t.ctx(), o.corner, "--corner");
        if (s.corner == s.transverse) throw Usage("--corner: must differ from the slice direction");
    } else if (need_corner) {
        for (int i = 0; i < t.ctx().dim; ++i)
            if (i != s.transverse) {
                s.corner = i;
                break;
            }
    }
    return s;
}

std::vector<const SymmetryDef*> symmetries(const Theory& t, const Options& o, bool required) {
    std::vector<const SymmetryDef*> out;
    if (!o.symmetry.empty()) {
        const SymmetryDef* s = t.def.symmetry(o.symmetry);
        if (!s) throw Usage("--symmetry: theory " + t.def.name + " has no symmetry '" + o.symmetry + "'");
        out.push_back(s);
    } else {
        for (const auto& s : t.def.symmetries) out.push_back(&s);
    }
    if (required && out.empty()) throw Usage("theory " + t.def.name + " declares no symmetry");
    return out;
}

const SymmetryDef& one_symmetry(const Theory& t, const Options& o) { return *symmetries(t, o, true).front(); }

void field(Sink& out, const std::string& prefix, const Context& ctx, const EvolutionaryField& v) {
    for (const auto& [c, f] : v.comps) out.form(prefix + "(" + ctx.comps[c].name + ")", ctx, f);
}

std::string names(const Context& ctx, const std::vector<int>& comps) {
    std::string s;
    for (int c : comps) s += (s.empty() ? "" : " ") + ctx.comps[c].name;
    return s;
}

// ---------------------------------------------------------------- commands

void cmd_simple(const std::string& what, const Theory& t, Sink& out) {
    const Context& ctx = t.ctx();
    if (what == "el") out.form("EL", ctx, t.EL);
    if (what == "theta") out.form("theta", ctx, t.theta);
    if (what == "omega") {
        out.form("omega", ctx, t.omega);
        out.check(verify_theory_identity(t, "dbom"), ctx);
    }
    if (what == "project") out.form("Lh", ctx, t.Lh);
}

void cmd_equiv(const Theory& t, const Options& o, Sink& out) {
    const Context& ctx = t.ctx();
    Form other = t.Lh;
    std::string label = "Lh";
    if (!o.with.empty()) {
        other = parse_in(t.def, o.with, "--with");
        label = "--with";
    } else if (o.files.size() > 1) {
        std::string path = resolve(o.files[1]);
        TheoryDef d = load(path);
        other = parse_in(t.def, d.lagrangian_text, path + ":" + std::to_string(d.lagrangian_line));
        label = path;
    }
    Equivalence e = lagrangians_equivalent(t, build_theory(t.def, other));
    out.form("L", ctx, t.L);
    out.form("L'", ctx, other);
    out.form("EL' - EL", ctx, e.el_difference);
    if (e.equivalent) {
        out.form("constant part", ctx, e.constant_part);
        out.form("primitive", ctx, e.primitive);
    }
    Report r;
    r.name = "L equivalent to " + label;
    r.pass = e.equivalent;
    r.forms = {{"EL' - EL", e.el_difference}};
    out.check(r, ctx);
}

void cmd_noether(const Theory& t, const Options& o, Sink& out) {
    const Context& ctx = t.ctx();
    for (const SymmetryDef* s : symmetries(t, o, true)) {
        ConeCurrent c = noether_cone(t, s->rho);
        out.form(s->name + ": S", ctx, c.S);
        out.form(s->name + ": J", ctx, c.J);
        Report r = verify_noether1(t, s->rho, c);
        r.name = s->name + ": " + r.name;
        out.check(r, ctx);
    }
}

void cmd_noether2(const Theory& t, const Options& o, Sink& out) {
    const Context& ctx = t.ctx();
    for (const SymmetryDef* s : symmetries(t, o, true)) {
        NoetherData n = noether2(t, *s);
        const std::string p = s->name + ": ";
        for (const auto& [k, f] : std::vector<std::pair<std::string, const Form*>>{
                 {"S", &n.S}, {"J", &n.J}, {"C", &n.C}, {"K", &n.K}, {"s", &n.s}, {"j", &n.j}})
            out.form(p + k, ctx, *f);
        Report split{p + "J = C + dK", true, true, "", {{"residual", n.J - n.C - d_h(ctx, n.K)}}, nullptr};
        split.pass = split.forms[0].second.is_zero();
        Report source{p + "S = s - dj", true, true, "", {{"residual", n.S - n.s + d_h(ctx, n.j)}}, nullptr};
        source.pass = source.forms[0].second.is_zero();
        Report shell{p + "C - j = 0 on shell", n.onshell.is_zero(), true, "", {{"residual", n.onshell}}, nullptr};
        for (const Report* r : {&split, &source, &shell}) out.check(*r, ctx);
    }
}

void cmd_verify(const Theory& t, const Options& o, Sink& out) {
    const Context& ctx = t.ctx();
    const auto& catalog = identity_catalog();
    const auto& homotopy = homotopy_identities();
    std::vector<std::string> ids, suites;
    if (o.all || o.identity.empty()) {
        ids = catalog;
        suites = homotopy;
    } else if (std::find(catalog.begin(), catalog.end(), o.identity) != catalog.end()) {
        ids = {o.identity};
    } else if (std::find(homotopy.begin(), homotopy.end(), o.identity) != homotopy.end()) {
        suites = {o.identity};
    } else {
        throw Usage("--identity: unknown identity '" + o.identity + "'");
    }
    auto syms = symmetries(t, o, false);
    for (const auto& id : ids) {
        if (syms.empty() || id == "dbom") {
            if (id == "dbom") out.check(verify_theory_identity(t, id), ctx);
            if (id == "dbom") continue;
        }
        for (const SymmetryDef* s : syms) {
            Report r = verify_identity(t, *s, id);
            r.name = s->name + ": " + r.name;
            out.check(r, ctx);
        }
    }
    if (!suites.empty()) {
        out.seed = o.seed;
        out.cases = o.cases;
        for (const auto& name : suites)
            for (int dim = 1; dim <= 3; ++dim) out.check(check_homotopy_identity(name, dim, o.seed, o.cases), ctx);
    }
}

void sigma_data(SigmaTheory& s, Sink& out) {
    const Context& sc = *s.ctx;
    out.text("slice", std::string(s.null ? "null" : "non-null") + ", transverse x" + std::to_string(s.slice.transverse));
    out.text("fields", names(sc, s.fields));
    for (const auto& [a, ps] : s.partners) out.text("pairs " + s.name(a), names(sc, ps));
    for (const auto& [m, f] : s.momentum_of) out.form(s.name(m), sc, f);
    out.form("theta_Sigma", sc, s.theta);
    out.form("omega_Sigma", sc, s.omega);
}

void cmd_canonical(const Theory& t, const Options& o, Sink& out) {
    SigmaTheory s = restrict_to_slice(t, slice_of(t, o, false));
    const Context& sc = *s.ctx;
    sigma_data(s, out);
    for (const SymmetryDef* sym : symmetries(t, o, false)) {
        bool local = true;
        for (const auto& p : sym->params) local = local && p.kind == Kind::Parameter;
        const std::string p = sym->name + ": ";
        Form H = sigma_noether(t, *sym, s);
        out.form(p + "H", sc, H);
        if (!local) continue;
        ConstraintFlux cf = split_constraint_flux(s, H, parameter_components(*sym));
        out.form(p + "H_o", sc, cf.constraint);
        out.form(p + "h", sc, cf.flux);
        Report split{p + "H = H_o + d h", true, true, "", {{"residual", H - cf.constraint - d_h(sc, cf.flux)}}, nullptr};
        split.pass = split.forms[0].second.is_zero();
        out.check(split, sc);
        try {
            CocycleTable ct = compute_ce_cocycle(t, *sym, s, H);
            for (const auto& e : ct.entries) {
                out.form(p + "residual " + e.label, *ct.ctx, e.residual);
                out.form(p + "kappa " + e.label, *ct.ctx, e.kappa);
            }
            out.form(p + "j_Sigma", *ct.ctx, ct.j_sigma);
            Report cocycle{p + "kappa is a 2-cocycle", ct.cocycle_defect.is_zero(), true, "",
                           {{"defect", ct.cocycle_defect}}, ct.ctx};
            out.check(cocycle, sc);
        } catch (const Error& e) {
            out.checks.push_back({p + "kappa table", false, false, e.code(), {}});
        }
    }
}

void cmd_corner(const Theory& t, const Options& o, Sink& out) {
    SigmaTheory s = restrict_to_slice(t, slice_of(t, o, true));
    const Context& sc = *s.ctx;
    const SymmetryDef& sym = one_symmetry(t, o);
    ConstraintFlux cf = split_constraint_flux(s, sigma_noether(t, sym, s), parameter_components(sym));
    CornerData cd = corner_data(t, sym, s, cf.flux);
    const Context& R = *cd.ring;
    std::string gens;
    for (const auto& g : cd.generators) gens += (gens.empty() ? "" : " ") + g;
    out.text("generators", gens);
    for (int a = 0; a < cd.dim; ++a) out.form("h_d " + cd.generators[a], sc, cd.flux[a]);
    out.form("membership", sc, cd.membership);
    out.form("alpha", R, cd.alpha);
    out.form("S", R, cd.S);
    for (int b = 0; b < cd.dim; ++b)
        for (int c = b + 1; c < cd.dim; ++c)
            out.form("Pi " + cd.generators[b] + " " + cd.generators[c], R, cd.Pi[b * cd.dim + c]);
    out.check(verify_corner_master(cd), R);
    out.check(casimir_report(cd), R);
}

void bv_data(const BVTheory& bv, Sink& out) {
    const Context& c = *bv.ctx;
    out.text("symmetry", bv.sym->name);
    out.text("fields", names(c, bv.fields));
    out.text("ghosts", names(c, bv.ghosts));
    out.text("antifields", names(c, bv.antifields));
    out.text("ghost coefficient", render_rational(bv.ghost_coeff));
    out.form("L_BV", c, bv.L);
    out.form("omega_BV", c, bv.omega);
    field(out, "Q", c, bv.Q);
}

void cmd_bv(const std::string& what, const Theory& t, const Options& o, Sink& out) {
    BVTheory bv = bv_extend(t, one_symmetry(t, o));
    const Context& c = *bv.ctx;
    if (what == "bv") bv_data(bv, out);
    out.check(check_q_nilpotent(bv), c);
    if (what == "cme") out.check(verify_cme(bv), c);
}

void cmd_bvbfv(const Theory& t, const Options& o, Sink& out) {
    const SymmetryDef& sym = one_symmetry(t, o);
    BVTheory bv = bv_extend(t, sym);
    SigmaTheory s = restrict_to_slice(t, slice_of(t, o, false));
    BFVTheory bfv = bfv_extend(t, sym, s);
    const Context& c = *bfv.ctx;
    out.text("ghosts", names(c, bfv.ghosts));
    out.text("momenta", names(c, bfv.momenta));
    out.form("constraint", c, bfv.constraint);
    out.form("L_BFV", c, bfv.L);
    out.form("omega_BFV", c, bfv.omega);
    field(out, "Q_BFV", c, bfv.Q);
    out.check(verify_cme(bv), *bv.ctx);
    out.check(verify_bfv_master(bfv), c);
    out.check(verify_bvbfv(bv, bfv), c);
}

// ---------------------------------------------------------------- mechanics

struct MechOptions {
    std::string system = "kepler", integrator = "rk4", csv;
    double k = 1, mass = 1, eps = 0, t = 10, dt = 1e-3;
    int axis = 0;
    size_t stride = 1;
    std::vector<double> q{1, 0, 0}, p{0, 1, 0};
    mech::Tolerances tol = mech::tolerances();
};

mech::MechSystem system_of(const MechOptions& m) {
    mech::MechSystem s;
    if (m.system == "kepler") s = mech::central(mech::kepler(m.k), m.mass);
    else if (m.system == "harmonic") s = mech::central(mech::harmonic(m.k), m.mass);
    else if (m.system == "free") s = mech::free_particle(static_cast<int>(m.q.size()), m.mass);
    else throw Usage("--system: expected kepler, harmonic or free");
    if (m.eps != 0) s = mech::perturbed(s, m.eps, m.axis);
    if (static_cast<int>(m.q.size()) != s.dim || static_cast<int>(m.p.size()) != s.dim)
        throw Usage("--q/--p: expected " + std::to_string(s.dim) + " components");
    return s;
}

std::string num(double v, const char* fmt = "%.17g") {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

int cmd_mech(const std::string& what, const MechOptions& m, const Options& o, Sink& out) {
    mech::MechSystem s = system_of(m);
    mech::Integrator method = m.integrator == "rk4"        ? mech::Integrator::RK4
                              : m.integrator == "leapfrog" ? mech::Integrator::Leapfrog
                                                           : throw Usage("--integrator: expected rk4 or leapfrog");
    mech::PhasePoint x0{m.q, m.p};
    out.theory = s.name;
    std::ofstream file;
    if (!m.csv.empty()) {
        file.open(m.csv);
        if (!file) throw Usage("--csv: cannot write " + m.csv);
    }
    bool csv_stdout = m.csv.empty() && !o.json;
    std::ostream* csv = !m.csv.empty() ? static_cast<std::ostream*>(&file) : csv_stdout ? &std::cout : nullptr;
    if (what == "flow") {
        mech::Trajectory tr = mech::flow(s, x0, m.t, m.dt, method, m.stride);
        if (csv) {
            *csv << "t";
            for (int i = 0; i < s.dim; ++i) *csv << ",q" << i + 1;
            for (int i = 0; i < s.dim; ++i) *csv << ",p" << i + 1;
            *csv << ",H\n";
            for (size_t k = 0; k < tr.x.size(); ++k) {
                *csv << num(tr.t[k]);
                for (double v : tr.x[k].q) *csv << "," << num(v);
                for (double v : tr.x[k].p) *csv << "," << num(v);
                *csv << "," << num(s.H(tr.x[k])) << "\n";
            }
        }
        out.text("integrator", mech::integrator_name(method));
        out.number("samples", static_cast<double>(tr.x.size()));
        out.number("H(t_final) - H(0)", s.H(tr.x.back()) - s.H(x0));
    } else if (what == "conserve") {
        mech::DriftReport d = mech::check_conservation(s, mech::flow(s, x0, m.t, m.dt, method, m.stride));
        out.text("integrator", mech::integrator_name(method));
        for (size_t i = 0; i < d.J.size(); ++i) out.number("drift J" + std::to_string(i + 1), d.J[i]);
        out.number("drift H", d.H);
        out.number("drift l^2", d.casimir);
        if (s.generators.empty()) {
            out.checks.push_back({"momentum conserved", true, false, "no declared symmetry", {}});
        } else {
            out.check("momentum conserved", d.max_J() <= m.tol.conservation, "tolerance " + num(m.tol.conservation, "%g"));
            out.check("l^2 conserved", d.casimir <= m.tol.casimir, "tolerance " + num(m.tol.casimir, "%g"));
        }
    } else {
        mech::ReducedState r0 = mech::reduce_so3(x0);
        mech::ReducedTrajectory tr = mech::reduced_flow(s, r0, m.t, m.dt);
        if (csv) {
            *csv << "t,r,pr,l\n";
            for (size_t k = 0; k < tr.x.size(); k += m.stride)
                *csv << num(tr.t[k]) << "," << num(tr.x[k].r) << "," << num(tr.x[k].pr) << "," << num(tr.x[k].ell) << "\n";
        }
        out.number("l", r0.ell);
        double defect = mech::commuting_defect(s, x0, m.t, m.dt);
        out.number("commuting defect", defect);
        out.check("reduction commutes with the flow", defect <= m.tol.commuting, "tolerance " + num(m.tol.commuting, "%g"));
    }
    out.emit(std::cout, o.json, csv_stdout ? "# " : "");
    return out.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varcalc: variational bicomplex calculator"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    MechOptions m;
    app.add_flag("--json", o.json, "emit a varcalc.report.v1 JSON document");
    app.add_option("--seed", o.seed, "seed of randomized suites")->capture_default_str();
    app.add_option("--cases", o.cases, "cases per randomized suite")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--slice", o.slice, "coordinate slice, e.g. t=0");
    app.add_option("--corner", o.corner, "corner hyperplane within the slice, e.g. x1=0");
    app.add_option("--symmetry", o.symmetry, "symmetry name");
    auto* identity = app.add_option("--identity", o.identity, "catalog or homotopy identity name");
    app.add_flag("--all", o.all, "every identity")->excludes(identity);

    struct Cmd {
        const char* name;
        const char* help;
        int files;
    };
    const std::vector<Cmd> cmds = {
        {"el", "Euler-Lagrange form", 1},
        {"theta", "presymplectic potential current", 1},
        {"omega", "presymplectic current", 1},
        {"project", "Euler projection of the Lagrangian", 1},
        {"equiv", "equivalence with the projection, a second theory or --with", 2},
        {"noether", "Noether cone current and the first theorem", 1},
        {"noether2", "constraint, flux and external currents", 1},
        {"verify", "identity catalog and homotopy suites", 1},
        {"canonical", "slice phase space, constraints, fluxes and cocycle table", 1},
        {"corner", "corner algebra and its master equation", 1},
        {"bv", "BV extension", 1},
        {"cme", "classical master equation", 1},
        {"bvbfv", "BFV extension on the slice and BV-BFV compatibility", 1},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->fallthrough();
        if (c.files == 1) sub->add_option("file", o.files, "theory file")->required()->expected(1);
        else sub->add_option("files", o.files, "theory files")->required()->expected(1, 2);
        if (std::string(c.name) == "equiv") sub->add_option("--with", o.with, "alternative Lagrangian");
        subs[c.name] = sub;
    }

    CLI::App* mech_cmd = app.add_subcommand("mech", "finite-dimensional mechanics with SO(3) symmetry");
    mech_cmd->require_subcommand(1);
    mech_cmd->fallthrough();
    mech_cmd->add_option("--system", m.system, "kepler, harmonic or free")->capture_default_str();
    mech_cmd->add_option("--k", m.k, "potential strength")->capture_default_str();
    mech_cmd->add_option("--mass", m.mass, "mass")->capture_default_str()->check(CLI::PositiveNumber);
    mech_cmd->add_option("--eps", m.eps, "symmetry-breaking term eps q_axis")->capture_default_str();
    mech_cmd->add_option("--axis", m.axis, "axis of the breaking term")->capture_default_str()->check(CLI::Range(0, 2));
    mech_cmd->add_option("--q", m.q, "initial position")->delimiter(',')->capture_default_str();
    mech_cmd->add_option("--p", m.p, "initial momentum")->delimiter(',')->capture_default_str();
    mech_cmd->add_option("--t", m.t, "final time")->capture_default_str();
    mech_cmd->add_option("--dt", m.dt, "step size")->capture_default_str();
    mech_cmd->add_option("--integrator", m.integrator, "rk4 or leapfrog")->capture_default_str();
    mech_cmd->add_option("--stride", m.stride, "sample every n-th step")->capture_default_str()->check(CLI::PositiveNumber);
    mech_cmd->add_option("--csv", m.csv, "write the trajectory to a file");
    mech_cmd->add_option("--tol-conservation", m.tol.conservation)->capture_default_str();
    mech_cmd->add_option("--tol-casimir", m.tol.casimir)->capture_default_str();
    mech_cmd->add_option("--tol-commuting", m.tol.commuting)->capture_default_str();
    std::map<std::string, CLI::App*> mech_subs;
    for (const char* n : {"flow", "reduce", "conserve"}) {
        mech_subs[n] = mech_cmd->add_subcommand(n);
        mech_subs[n]->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    Sink out;
    try {
        if (mech_cmd->parsed()) {
            for (const auto& [n, sub] : mech_subs)
                if (sub->parsed()) {
                    out.command = "mech " + n;
                    return cmd_mech(n, m, o, out);
                }
        }
        std::string name;
        for (const auto& [n, sub] : subs)
            if (sub->parsed()) name = n;
        out.command = name;
        std::string path = resolve(o.files.front());
        TheoryDef def = load(path);
        out.file = path;
        out.theory = def.name;
        Theory t = build_theory(def);
        if (name == "el" || name == "theta" || name == "omega" || name == "project") cmd_simple(name, t, out);
        else if (name == "equiv") cmd_equiv(t, o, out);
        else if (name == "noether") cmd_noether(t, o, out);
        else if (name == "noether2") cmd_noether2(t, o, out);
        else if (name == "verify") cmd_verify(t, o, out);
        else if (name == "canonical") cmd_canonical(t, o, out);
        else if (name == "corner") cmd_corner(t, o, out);
        else if (name == "bv" || name == "cme") cmd_bv(name, t, o, out);
        else if (name == "bvbfv") cmd_bvbfv(t, o, out);
    } catch (const Usage& e) {
        std::cerr << "varcalc: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "varcalc: " << (out.file.empty() ? "" : out.file + ": ") << e.what() << "\n";
        return 1;
    }
    out.emit(std::cout, o.json);
    return out.pass() ? 0 : 1;
}
