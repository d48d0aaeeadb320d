#pragma once
// Theory files (.thy) and the expression DSL.

#include <memory>
#include <string>
#include <vector>

#include "varcalc/bicomplex.hpp"
#include "varcalc/render.hpp"

namespace varcalc {

// Diagnostic with a source position (1-based).
class ParseError : public Error {
public:
    ParseError(std::string code, int line, int col, const std::string& msg)
        : Error(std::move(code), std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line_(line), col_(col), msg_(msg) {}
    int line() const { return line_; }
    int col() const { return col_; }
    const std::string& message() const { return msg_; }

private:
    int line_, col_;
    std::string msg_;
};

enum class Shape { Scalar, Vector, Form };

struct FieldDecl {
    std::string name;
    Shape shape = Shape::Scalar;
    int degree = 0;  // form degree, or vector length
    int ghost = 0;
    std::string lie;  // algebra name, empty when none
    Kind kind = Kind::Dynamic;
    std::vector<int> comps;  // component ids in the context
    std::vector<std::vector<int>> form_index;  // per component: increasing dx indices
    std::vector<int> lie_index;                // per component: algebra basis index (or -1)

    bool operator==(const FieldDecl& o) const {
        return name == o.name && shape == o.shape && degree == o.degree && ghost == o.ghost && lie == o.lie &&
               kind == o.kind && comps == o.comps;
    }
};

struct Algebra {
    std::string name;
    int dim = 0;
    std::vector<Rational> f;      // f[a*dim*dim + b*dim + c] = f^a_{bc}
    std::vector<Rational> kappa;  // kappa[a*dim + b]

    const Rational& F(int a, int b, int c) const { return f[(a * dim + b) * dim + c]; }
    Rational& F(int a, int b, int c) { return f[(a * dim + b) * dim + c]; }
    const Rational& K(int a, int b) const { return kappa[a * dim + b]; }
    bool abelian() const;
    bool operator==(const Algebra& o) const {
        return name == o.name && dim == o.dim && f == o.f && kappa == o.kappa;
    }
};

// Parsed expression tree.
struct Ast {
    enum class Op { Num, Ident, Add, Sub, Neg, Mul, Div, Pow, Call, Bracket, Pairing, Deriv, Func };
    Op op = Op::Num;
    Rational num;
    std::string name;  // identifier, call target or function name
    MultiIndex der;    // derivative suffix, or function derivative orders
    int level = -1;    // lambda / fiber level
    std::vector<std::shared_ptr<Ast>> kids;
    int line = 1, col = 1;
};
using AstPtr = std::shared_ptr<Ast>;

AstPtr parse_expression(const std::string& text, int line = 1, int col = 1);

struct Definition {
    std::string name;
    std::string text;
    int line = 0;
};

struct ActionDecl {
    std::string field;
    std::string text;
    int line = 0;
};

struct SymmetryDef {
    std::string name;
    std::vector<FieldDecl> params;
    std::vector<ActionDecl> actions;
    std::vector<std::string> ghost_names;  // one per parameter (BV ghost base name)
    EvolutionaryField rho;
};

struct OnShellDecl {
    std::string field_comp;  // EL component, named by its field component
    std::string jet;         // leading jet text, e.g. A[1]_,01
};

struct TheoryDef {
    std::string name;
    std::shared_ptr<Context> ctx;
    std::vector<FieldDecl> fields;   // dynamic fields, in order
    std::vector<FieldDecl> backgrounds;
    std::vector<std::string> constants;
    std::vector<std::pair<std::string, int>> functions;  // name, arity
    std::vector<Algebra> algebras;
    std::vector<Definition> definitions;  // in file order (lagrangian and sources sections)
    std::vector<std::string> source_names;  // definitions that are external currents
    std::string lagrangian_text;
    int lagrangian_line = 0;
    Form lagrangian;
    std::vector<SymmetryDef> symmetries;
    std::vector<OnShellDecl> onshell;
    bool explicit_metric = false;

    const Algebra* algebra(const std::string& name) const;
    const FieldDecl* field(const std::string& name) const;  // dynamic, background or parameter
    const SymmetryDef* symmetry(const std::string& name) const;
};

// Value of an elaborated expression: a plain form, a Lie-algebra valued form
// (one form per basis element) or a vector of forms.
struct Value {
    enum class Type { Plain, Lie, Vec };
    Type type = Type::Plain;
    std::string alg;
    std::vector<Form> c;

    static Value plain(Form f) { return {Type::Plain, "", {std::move(f)}}; }
    const Form& form() const { return c.at(0); }
};

struct Elaborator {
    const TheoryDef& def;
    std::map<std::string, Value> env;  // definitions

    explicit Elaborator(const TheoryDef& d) : def(d) {}
    Value eval(const Ast& a) const;
    Form eval_form(const std::string& text, int line = 1) const;
    Value eval_text(const std::string& text, int line = 1) const;
};

TheoryDef parse_theory(const std::string& text);
TheoryDef load_theory(const std::string& path);
std::string render_theory(const TheoryDef& t);
bool same_theory(const TheoryDef& a, const TheoryDef& b);

// Parse a plain form in the context of a theory (definitions available).
Form parse_form(const TheoryDef& t, const std::string& text);
// Parse a plain form over a bare context (component, function, dx names only).
Form parse_form(const Context& ctx, const std::string& text);

// Build a field's Value from its components (form fields carry dx legs).
Value field_value(const Context& ctx, const FieldDecl& f);

}  // namespace varcalc
