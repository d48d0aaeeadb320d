#pragma once
// Deterministic text and JSON renderings of local forms.

#include <string>

#include "varcalc/expr.hpp"

namespace varcalc {

std::string render_atom(const Context& ctx, const Atom& a);
// Re-parseable text; "0" for the zero form.
std::string render(const Context& ctx, const Form& f);
// JSON document (as text) carrying grading and the term list.
std::string render_json(const Context& ctx, const Form& f);
std::string render_rational(const Rational& r);

}  // namespace varcalc
