#pragma once
// Exact super-commutative polynomial algebra of local forms.
//
// A Form is a sorted sum of Terms; each Term is a rational coefficient times a
// canonically ordered product of Atoms (jet coordinates, function
// applications, fiber integrals, vertical legs, horizontal legs).  Products
// carry Koszul signs by total degree parity.

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varcalc {

using Rational = mpq_class;

// Canonicalized quotient a/b.
inline Rational frac(long a, long b) {
    Rational r(a, b);
    r.canonicalize();
    return r;
}

constexpr int kMaxDim = 6;

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct MultiIndex {
    std::array<uint8_t, kMaxDim> c{};

    int order() const {
        int s = 0;
        for (auto v : c) s += v;
        return s;
    }
    MultiIndex plus(int mu, int k = 1) const {
        MultiIndex r = *this;
        r.c[mu] = static_cast<uint8_t>(r.c[mu] + k);
        return r;
    }
    bool covers(const MultiIndex& o) const {
        for (int i = 0; i < kMaxDim; ++i)
            if (c[i] < o.c[i]) return false;
        return true;
    }
    MultiIndex minus(const MultiIndex& o) const {
        MultiIndex r;
        for (int i = 0; i < kMaxDim; ++i) r.c[i] = static_cast<uint8_t>(c[i] - o.c[i]);
        return r;
    }
    MultiIndex operator+(const MultiIndex& o) const {
        MultiIndex r;
        for (int i = 0; i < kMaxDim; ++i) r.c[i] = static_cast<uint8_t>(c[i] + o.c[i]);
        return r;
    }
    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;
};

enum class Kind { Dynamic, Parameter, Background, Constant };

struct Component {
    std::string name;
    int ghost = 0;
    Kind kind = Kind::Dynamic;
    std::string field;  // owning declared field, informational
};

// Multivariate polynomial with rational coefficients, used as an evaluable
// model of a function symbol.
struct PolyModel {
    std::map<std::vector<int>, Rational> coeffs;  // exponent vector -> coefficient
};

struct FunctionSymbol {
    std::string name;
    int arity = 1;
    std::optional<PolyModel> model;
};

class Form;

struct Context {
    int dim = 1;
    std::vector<std::vector<Rational>> metric;  // constant metric g_{mu nu}
    std::vector<Component> comps;
    std::vector<FunctionSymbol> funcs;
    int cutoff = 6;
    std::vector<std::string> coords;  // optional coordinate names

    int find_comp(const std::string& name) const;
    int find_func(const std::string& name) const;
    int add_comp(Component c);
    int add_func(FunctionSymbol f);
    bool dynamic(int comp) const { return comps[comp].kind == Kind::Dynamic; }
    void set_flat(const std::vector<int>& signature);
};

using ContextPtr = std::shared_ptr<const Context>;

// Jet cutoff taken from VARCALC_JET_CUTOFF when set, 6 otherwise.
int default_cutoff();

enum class AtomKind : uint8_t { Jet, Func, Fiber, Lambda, Vert, Horiz };

struct Atom {
    AtomKind kind = AtomKind::Jet;
    int8_t ghost = 0;
    bool odd = false;
    int16_t id = 0;  // component, function symbol, lambda level or direction
    MultiIndex mi;   // jet multi-index, or derivative orders of a function
    std::shared_ptr<const std::vector<Form>> args;  // function arguments, or {inner} of a fiber

    static Atom jet(const Context& ctx, int comp, const MultiIndex& mi = {});
    static Atom vert(const Context& ctx, int comp, const MultiIndex& mi = {});
    static Atom horiz(int mu);
    static Atom lambda(int level);
    static Atom func(int f, const MultiIndex& der, std::vector<Form> args);
    static Atom fiber(int level, Form inner);
};

int compare(const Atom& a, const Atom& b);
inline bool operator<(const Atom& a, const Atom& b) { return compare(a, b) < 0; }
inline bool operator==(const Atom& a, const Atom& b) { return compare(a, b) == 0; }

struct Factor {
    Atom atom;
    int pow = 1;
};

struct Term {
    Rational coef;
    std::vector<Factor> fac;  // canonical order, odd atoms with pow 1
};

int compare_monomial(const std::vector<Factor>& a, const std::vector<Factor>& b);

struct Grading {
    int p = 0, q = 0, g = 0;
    bool operator==(const Grading&) const = default;
};

class Form {
public:
    std::vector<Term> terms;

    Form() = default;
    static Form scalar(const Rational& r);
    static Form atom(const Atom& a, int pow = 1);
    // Product of atoms in the given order; sign from reordering is absorbed.
    static Form product(const Rational& c, const std::vector<Factor>& fac);

    bool is_zero() const { return terms.empty(); }
    Form operator+(const Form& o) const;
    Form operator-(const Form& o) const;
    Form operator-() const;
    Form& operator+=(const Form& o);
    Form& operator-=(const Form& o);
    Form operator*(const Rational& r) const;
    friend Form operator*(const Form& a, const Form& b);  // graded product

    bool operator==(const Form& o) const;
    bool operator!=(const Form& o) const { return !(*this == o); }

    // Grading of each term must agree; nullopt for the zero form.
    std::optional<Grading> grading() const;
    bool homogeneous() const;
    bool odd() const;  // parity of total degree (form must be homogeneous)

    void normalize();  // sort and merge terms, drop zeros
};

int compare(const Form& a, const Form& b);

bool atom_depends_on_lambda(const Atom& a, int level);
int max_lambda_level(const Form& f);

// Leibniz application of a derivation of the given parity, determined by its
// action on single atoms.
using AtomRule = std::function<Form(const Atom&)>;
Form derive(const Form& f, bool odd, const AtomRule& rule);

// Algebra homomorphism determined by atom images (images must preserve parity).
Form map_atoms(const Form& f, const AtomRule& rule);

// Integral over [0,1] of an integrand in Lambda(level): lambda-free factors
// are pulled out, pure powers integrated exactly, the rest kept as a fiber node.
Form make_fiber(const Form& integrand, int level);

// Total derivative D_mu, acting on coefficients and on vertical legs.
Form total_derivative(const Context& ctx, const Form& f, int mu);
Form total_derivative(const Context& ctx, const Form& f, const MultiIndex& a);
// Vertical differential (left acting, odd).
Form vertical_d(const Context& ctx, const Form& f);

// Substitution of jets of components (and their total derivatives) by
// expressions; legs of bound dynamic components map to the vertical
// differential of the image.
using Bindings = std::map<int, Form>;  // component -> expression for its 0-jet
Form substitute(const Context& ctx, const Form& f, const Bindings& b);
// Substitution of specific jets (solved forms) with prolongation to higher jets.
struct JetRule {
    int comp;
    MultiIndex mi;
    Form value;
};
Form substitute_jets(const Context& ctx, const Form& f, const std::vector<JetRule>& rules,
                     int max_rounds = 64);

// Evaluation against an assignment of rationals to atoms (legs included).
struct Point {
    std::function<std::optional<Rational>(const Atom&)> value;
};
Rational evaluate(const Context& ctx, const Form& f, const Point& pt);

// Coefficient of each monomial in the given family of atoms (e.g. legs):
// splits f = sum_k c_k * m_k with m_k products of atoms selected by pred.
std::vector<std::pair<Form, std::vector<Factor>>> split_by(const Form& f,
                                                           const std::function<bool(const Atom&)>& pred);

// Convenience builders.
Form jet(const Context& ctx, int comp, const MultiIndex& mi = {});
Form leg(const Context& ctx, int comp, const MultiIndex& mi = {});
Form dx(int mu);
Form vol(const Context& ctx);

// True when some atom in f (recursively) is a jet of a component satisfying pred.
bool mentions(const Form& f, const std::function<bool(int comp)>& pred);
// Set of (comp, multi-index) jets appearing in f (coefficients only, recursive).
std::vector<std::pair<int, MultiIndex>> jets_in(const Form& f);

}  // namespace varcalc
