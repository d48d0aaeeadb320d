#pragma once
// Operator suite of the variational bicomplex on a single chart.

#include "varcalc/expr.hpp"

namespace varcalc {

// Left contraction by the coordinate vector field dual to dx^mu.
Form contract_dx(const Form& f, int mu);
// Left contraction by the vertical vector dual to the leg of (comp, mi).
Form contract_leg(const Context& ctx, const Form& f, int comp, const MultiIndex& mi);

Form d_h(const Context& ctx, const Form& f);
Form d_v(const Context& ctx, const Form& f);

Form interior_euler(const Context& ctx, const Form& f);  // I, on (p>=1, n)
Form exterior_euler(const Context& ctx, const Form& f);  // E = I dv, on (p, n)
// Higher Euler operator E^c_comp applied to a form.
Form higher_euler(const Context& ctx, const Form& f, int comp, const MultiIndex& c);

Form h_horizontal(const Context& ctx, const Form& f);  // h^>= on p>=1
Form h_vertical(const Context& ctx, const Form& f);    // radial homotopy
Form zero_section(const Context& ctx, const Form& f);  // p*0*
Form h_zero(const Context& ctx, const Form& f);        // -h_v h^>= dv on p=0
Form projector(const Context& ctx, const Form& f);     // P = h_v I dv on (0,n)
Form projector0(const Context& ctx, const Form& f);    // P + p*0*

// Special homotopy post-processing (off by default everywhere).
Form h_horizontal_special(const Context& ctx, const Form& f);

bool field_independent(const Context& ctx, const Form& f);

struct ConePair {
    Form a;  // form on M, shifted
    Form b;  // local (0, k) form
    bool operator==(const ConePair& o) const { return a == o.a && b == o.b; }
};
ConePair cone_d(const Context& ctx, const ConePair& x);
ConePair cone_h(const Context& ctx, const ConePair& x);

// Evolutionary vector field: components for (some) dynamic field components.
struct EvolutionaryField {
    std::map<int, Form> comps;
    bool empty() const;
};

// Parity of the contraction i_v (true when odd).
bool insertion_odd(const Context& ctx, const EvolutionaryField& v);
Form insert(const Context& ctx, const EvolutionaryField& v, const Form& f);
// Prolonged action, extended to legs so that it agrees with the Lie derivative.
Form prolong(const Context& ctx, const EvolutionaryField& v, const Form& f);
Form lie_derivative(const Context& ctx, const EvolutionaryField& v, const Form& f);

// Hodge star for the constant metric of the chart with volume dx^0...dx^{n-1}.
Form hodge_star(const Context& ctx, const Form& f);

}  // namespace varcalc
