#pragma once
// Graded BV and BFV extensions, master equations and their compatibility.

#include <optional>

#include "varcalc/canonical.hpp"

namespace varcalc {

// X with I i_X omega = I dv F, solved componentwise against the source form.
EvolutionaryField hamiltonian_vector_field(const Context& ctx, const Form& omega, const Form& F);
// {F, G} = i_XF i_XG omega.
Form graded_bracket(const Context& ctx, const Form& omega, const Form& F, const Form& G);

// Total ghost degrees occurring in the terms of f.
std::set<int> ghost_degrees(const Form& f);

struct BVOptions {
    Rational ghost_scale = 1;  // multiplies the ghost-ghost term of L_BV
};

struct BVTheory {
    std::shared_ptr<Context> ctx;
    Theory body;                    // theory being extended
    const SymmetryDef* sym = nullptr;
    std::map<int, int> ghost_of;      // parameter component -> ghost
    std::map<int, int> antifield_of;  // field or ghost -> antifield
    std::vector<int> fields, ghosts, antifields;
    Rational ghost_coeff;             // Q_CE c = ghost_coeff [c,c]
    EvolutionaryField Qce, Q;
    Form L, EL, theta, omega, vol;

    std::string name(int comp) const { return ctx->comps[comp].name; }
    // the extended theory as a plain theory on the graded chart
    Theory as_theory() const;
};

BVTheory bv_extend(const Theory& t, const SymmetryDef& sym, const BVOptions& opt = {});

// Q^2 on every generator.
Report check_q_nilpotent(const BVTheory& bv);
Form bv_bracket(const BVTheory& bv, const Form& F, const Form& G);
// {L_BV, L_BV} lies in the image of d: P of it and its constant part vanish.
Report verify_cme(const BVTheory& bv);

struct BFVTheory {
    std::shared_ptr<Context> ctx;
    SigmaTheory sigma;
    std::map<int, int> ghost_of;     // parameter component -> ghost
    std::map<int, int> momentum_of;  // ghost -> ghost momentum
    std::vector<int> ghosts, momenta;
    Rational ghost_coeff;
    Form constraint;                 // H_o - j_Sigma
    Form L, omega;
    EvolutionaryField Q;

    std::string name(int comp) const { return ctx->comps[comp].name; }
};

BFVTheory bfv_extend(const Theory& t, const SymmetryDef& sym, const SigmaTheory& s, const BVOptions& opt = {});
// Linear-in-ghost part of I dv L_BFV, paired back with the parameters.
Form bfv_constraint(const BFVTheory& bfv);
Report verify_bfv_master(const BFVTheory& bfv);

// The three compatibility conditions on the slice chart. orientation = -1
// pulls the bulk data back with the opposite orientation.
Report verify_bvbfv(const BVTheory& bv, const BFVTheory& bfv, int orientation = 1);

enum class Witness { Closed, Exact, Neither };
const char* witness_name(Witness w);
Witness cohomology_witness(const BVTheory& bv, const Form& candidate, const std::optional<Form>& certificate = std::nullopt);

}  // namespace varcalc
