#pragma once
// Restriction to a coordinate slice, Sigma-Noether forms and corner data.

#include <set>
#include <string>
#include <vector>

#include "varcalc/lagrangian.hpp"

namespace varcalc {

struct SliceSpec {
    int transverse = 0;  // direction normal to the slice
    int corner = -1;     // bounded slice direction, -1 for none
};

// Fields on the slice chart.  Tangential restrictions keep the component ids
// of the spacetime chart; transverse jets and momenta are appended.
struct SigmaTheory {
    SliceSpec slice;
    std::shared_ptr<Context> ctx;     // slice chart, dimension n - 1
    const Context* bulk = nullptr;    // spacetime chart
    std::vector<int> sigma_dir;       // spacetime direction -> slice direction, -1 for the transverse one
    std::map<std::pair<int, int>, int> transverse;  // (component, order) -> slice component
    std::vector<JetRule> momenta;     // eliminated transverse fields in terms of momenta
    std::map<int, Form> momentum_of;  // momentum component -> its expression in the raw slice fields
    std::vector<int> fields;          // slice fields after elimination
    std::map<int, std::vector<int>> partners;  // pairing table of omega
    Form theta_raw, omega_raw;        // images of the pulled back theta and omega
    Form theta, omega;                // in slice fields
    Form vol;                         // coordinate volume of the slice chart
    bool null = false;                // normal covector is null
    int ruling = -1;                  // slice direction of the null generator, if null

    bool is_field(int comp) const;
    std::string name(int comp) const { return ctx->comps[comp].name; }
};

SigmaTheory restrict_to_slice(const Theory& t, const SliceSpec& slice);

// Pullback to the slice chart with transverse jets as independent fields.
Form pull_back(SigmaTheory& s, const Form& bulk);
// Pullback to the slice followed by elimination of transverse fields; the
// result must only involve slice fields and tangential parameter jets.
Form to_slice(SigmaTheory& s, const Form& bulk);

Form sigma_noether(const Theory& t, const SymmetryDef& sym, SigmaTheory& s);

struct ConstraintFlux {
    Form constraint;  // H_o
    Form flux;        // h, with H = H_o + d h
};
ConstraintFlux split_constraint_flux(const SigmaTheory& s, const Form& H, const std::vector<int>& params);

// Action of the symmetry on the slice fields.
EvolutionaryField sigma_action(const Theory& t, const SymmetryDef& sym, SigmaTheory& s);

struct CocycleEntry {
    std::string label;  // basis pair
    Form residual;      // L_xi H_eta - H_[xi,eta] + j([xi,eta])
    Form kappa;         // primitive of the residual
};
struct CocycleTable {
    std::shared_ptr<Context> ctx;  // slice chart with parameter copies
    Form residual, kappa;          // generic parameters
    std::vector<CocycleEntry> entries;
    Form cocycle_defect;           // Chevalley-Eilenberg differential on generic triples, modulo d-exact forms
    Form j_sigma;
};
// H defaults to the slice Noether form of the symmetry when empty.
CocycleTable compute_ce_cocycle(const Theory& t, const SymmetryDef& sym, SigmaTheory& s, const Form& H = Form());

struct CornerData {
    std::vector<std::string> generators;  // boundary parameter components
    std::vector<Form> flux;               // h_d per generator, on the slice fields
    Form membership;                      // corner density of h; constraint gauge parameters make it vanish
    std::shared_ptr<Context> ring;        // corner ring: h{a} (even), c{a} (ghost 1)
    int dim = 0;
    std::vector<Rational> f;              // f[a][b][c] = f^a_bc
    std::vector<Rational> k;              // k[b][c], antisymmetric
    Form alpha, S;
    std::vector<Form> Pi;                 // Pi[b*dim+c] = f^a_bc h_a + k_bc

    int h(int a) const;                   // ring component of h_a
    int c(int a) const;                   // ring component of c^a
};

// Corner ring data from structure constants and a constant 2-cochain.
CornerData make_corner(std::vector<std::string> generators, std::vector<Rational> f, std::vector<Rational> k);
CornerData corner_data(const Theory& t, const SymmetryDef& sym, SigmaTheory& s, const Form& flux,
                       const std::vector<Rational>& k = {});

// Degree -1 bracket on the corner ring.
Form corner_bracket(const CornerData& cd, const Form& a, const Form& b);
// Schouten self-bracket components J^{abc} of Pi.
std::vector<Form> schouten_jacobiator(const CornerData& cd);

Report verify_corner_master(const CornerData& cd);
// Quadratic Killing Casimir (or the linear ones when the bracket vanishes) and
// their Poisson brackets with every h_a.
Report casimir_report(const CornerData& cd);

}  // namespace varcalc
