#include "varcalc/parser.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <fstream>
#include <sstream>

namespace varcalc {

bool Algebra::abelian() const {
    for (const auto& x : f)
        if (x != 0) return false;
    return true;
}

const Algebra* TheoryDef::algebra(const std::string& n) const {
    for (const auto& a : algebras)
        if (a.name == n) return &a;
    return nullptr;
}

const FieldDecl* TheoryDef::field(const std::string& n) const {
    for (const auto& f : fields)
        if (f.name == n) return &f;
    for (const auto& f : backgrounds)
        if (f.name == n) return &f;
    for (const auto& s : symmetries)
        for (const auto& p : s.params)
            if (p.name == n) return &p;
    return nullptr;
}

const SymmetryDef* TheoryDef::symmetry(const std::string& n) const {
    for (const auto& s : symmetries)
        if (s.name == n) return &s;
    return nullptr;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { End, Num, Ident, Op };

struct Token {
    Tok kind = Tok::End;
    std::string text;   // operator text, identifier name (with indices)
    mpz_class num;
    MultiIndex der;     // derivative suffix
    bool has_der = false;
    int primes = 0;     // function derivative primes
    int level = -1;     // lambda@k / int@k
    int line = 1, col = 1;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

const std::string kWedge = "\xe2\x88\xa7";  // U+2227

class Lexer {
public:
    Lexer(const std::string& s, int line, int col) : s_(s), line_(line), col0_(col) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            Token t = next();
            out.push_back(t);
            if (t.kind == Tok::End) break;
        }
        return out;
    }

private:
    const std::string& s_;
    size_t i_ = 0;
    int line_;
    int col0_;

    int col() const { return col0_ + static_cast<int>(i_); }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError("SyntaxError", line_, col(), msg); }

    Token next() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        Token t;
        t.line = line_;
        t.col = col();
        if (i_ >= s_.size()) return t;
        if (s_.compare(i_, kWedge.size(), kWedge) == 0) {
            i_ += kWedge.size();
            t.kind = Tok::Op;
            t.text = "^";
            return t;
        }
        unsigned char c = s_[i_];
        if (std::isdigit(c)) {
            size_t j = i_;
            while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
            t.kind = Tok::Num;
            t.num = mpz_class(s_.substr(i_, j - i_));
            i_ = j;
            return t;
        }
        if (ident_start(c)) {
            size_t j = i_;
            while (j < s_.size() && ident_char(static_cast<unsigned char>(s_[j]))) {
                if (s_.compare(j, kWedge.size(), kWedge) == 0) break;
                if (s_[j] == '_' && j + 1 < s_.size() && s_[j + 1] == ',') break;
                ++j;
            }
            t.kind = Tok::Ident;
            t.text = s_.substr(i_, j - i_);
            i_ = j;
            // lambda@k, int@k
            if (i_ < s_.size() && s_[i_] == '@') {
                ++i_;
                size_t k = i_;
                while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
                if (k == i_) fail("expected level after '@'");
                t.level = std::stoi(s_.substr(i_, k - i_));
                i_ = k;
                return t;
            }
            // {a} and [I] component indices
            for (char open : {'{', '['}) {
                char close = open == '{' ? '}' : ']';
                if (i_ < s_.size() && s_[i_] == open) {
                    size_t k = i_ + 1;
                    while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
                    if (k > i_ + 1 && k < s_.size() && s_[k] == close) {
                        t.text += s_.substr(i_, k + 1 - i_);
                        i_ = k + 1;
                    }
                }
            }
            while (i_ < s_.size() && s_[i_] == '\'') {
                ++t.primes;
                ++i_;
            }
            if (i_ + 1 < s_.size() && s_[i_] == '_' && s_[i_ + 1] == ',') {
                i_ += 2;
                size_t k = i_;
                while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
                    int mu = s_[k] - '0';
                    if (mu >= kMaxDim) fail("direction index out of range");
                    t.der.c[mu] += 1;
                    ++k;
                }
                if (k == i_) fail("expected direction digits after '_,'");
                t.has_der = true;
                i_ = k;
            }
            return t;
        }
        static const char* two[] = {"**", ":="};
        for (const char* op : two)
            if (s_.compare(i_, 2, op) == 0) {
                t.kind = Tok::Op;
                t.text = op;
                i_ += 2;
                return t;
            }
        if (std::string("+-*/^(),[]<>").find(static_cast<char>(c)) != std::string::npos) {
            t.kind = Tok::Op;
            t.text = std::string(1, static_cast<char>(c));
            ++i_;
            return t;
        }
        fail(std::string("unexpected character '") + static_cast<char>(c) + "'");
    }
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

    AstPtr parse_all() {
        if (peek().kind == Tok::End) fail_expected({"expression"});
        AstPtr e = expr();
        if (peek().kind != Tok::End) fail_expected({"+", "-", "*", "^", "end of expression"});
        return e;
    }

private:
    std::vector<Token> t_;
    size_t p_ = 0;

    const Token& peek(size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
    bool is_op(const char* s, size_t k = 0) const { return peek(k).kind == Tok::Op && peek(k).text == s; }
    Token take() { return t_[std::min(p_++, t_.size() - 1)]; }

    [[noreturn]] void fail_expected(std::initializer_list<const char*> exp) const {
        std::string m = "expected one of {";
        bool first = true;
        for (const char* e : exp) {
            if (!first) m += ", ";
            m += e;
            first = false;
        }
        m += "}";
        const Token& t = peek();
        if (t.kind == Tok::End)
            m += " but found end of input";
        else
            m += " but found '" + (t.kind == Tok::Num ? t.num.get_str() : t.text) + "'";
        throw ParseError("SyntaxError", t.line, t.col, m);
    }
    void expect(const char* s) {
        if (!is_op(s)) fail_expected({s});
        take();
    }
    AstPtr node(Ast::Op op, const Token& at) {
        auto a = std::make_shared<Ast>();
        a->op = op;
        a->line = at.line;
        a->col = at.col;
        return a;
    }

    AstPtr expr() {
        AstPtr lhs = term();
        while (is_op("+") || is_op("-")) {
            Token op = take();
            AstPtr rhs = term();
            AstPtr n = node(op.text == "+" ? Ast::Op::Add : Ast::Op::Sub, op);
            n->kids = {lhs, rhs};
            lhs = n;
        }
        return lhs;
    }
    AstPtr term() {
        AstPtr lhs = unary();
        while (is_op("*") || is_op("^") || is_op("/")) {
            Token op = take();
            AstPtr rhs = unary();
            AstPtr n = node(op.text == "/" ? Ast::Op::Div : Ast::Op::Mul, op);
            n->kids = {lhs, rhs};
            lhs = n;
        }
        return lhs;
    }
    AstPtr unary() {
        if (is_op("-")) {
            Token op = take();
            AstPtr n = node(Ast::Op::Neg, op);
            n->kids = {unary()};
            return n;
        }
        return power();
    }
    AstPtr power() {
        AstPtr base = primary();
        if (is_op("**")) {
            Token op = take();
            bool neg = false;
            if (is_op("-")) {
                take();
                neg = true;
            }
            if (peek().kind != Tok::Num) fail_expected({"integer exponent"});
            Token k = take();
            AstPtr n = node(Ast::Op::Pow, op);
            n->num = neg ? -Rational(k.num) : Rational(k.num);
            n->kids = {base};
            return n;
        }
        return base;
    }
    // V^(1,0)(...) lookahead
    bool func_derivative_ahead() const {
        if (!is_op("^") || !is_op("(", 1)) return false;
        size_t k = 2;
        for (;;) {
            if (peek(k).kind != Tok::Num) return false;
            ++k;
            if (is_op(")", k)) break;
            if (!is_op(",", k)) return false;
            ++k;
        }
        return is_op("(", k + 1);
    }
    std::vector<AstPtr> args() {
        std::vector<AstPtr> out;
        expect("(");
        if (is_op(")")) {
            take();
            return out;
        }
        out.push_back(expr());
        while (is_op(",")) {
            take();
            out.push_back(expr());
        }
        expect(")");
        return out;
    }
    AstPtr primary() {
        const Token& t = peek();
        if (t.kind == Tok::Num) {
            Token n = take();
            AstPtr a = node(Ast::Op::Num, n);
            a->num = Rational(n.num);
            return a;
        }
        if (t.kind == Tok::Ident) {
            Token id = take();
            if (id.primes > 0 || func_derivative_ahead() || is_op("(")) {
                AstPtr a = node(Ast::Op::Call, id);
                a->name = id.text;
                a->level = id.level;
                if (id.primes > 0) {
                    a->op = Ast::Op::Func;
                    a->der.c[0] = static_cast<uint8_t>(id.primes);
                } else if (is_op("^")) {
                    a->op = Ast::Op::Func;
                    take();
                    take();
                    int k = 0;
                    for (;;) {
                        Token n = take();
                        if (k >= kMaxDim) throw ParseError("SyntaxError", n.line, n.col, "too many derivative orders");
                        a->der.c[k++] = static_cast<uint8_t>(n.num.get_si());
                        if (is_op(")")) break;
                        take();
                    }
                    take();
                }
                a->kids = args();
                return a;
            }
            AstPtr a = node(Ast::Op::Ident, id);
            a->name = id.text;
            a->level = id.level;
            if (id.has_der) a->der = id.der;
            return a;
        }
        if (is_op("(")) {
            take();
            AstPtr e = expr();
            expect(")");
            return e;
        }
        if (is_op("[")) {
            Token op = take();
            AstPtr a = node(Ast::Op::Bracket, op);
            AstPtr x = expr();
            expect(",");
            AstPtr y = expr();
            expect("]");
            a->kids = {x, y};
            return a;
        }
        if (is_op("<")) {
            Token op = take();
            AstPtr a = node(Ast::Op::Pairing, op);
            AstPtr x = expr();
            expect(",");
            AstPtr y = expr();
            expect(">");
            a->kids = {x, y};
            return a;
        }
        fail_expected({"number", "identifier", "(", "[", "<"});
    }
};

}  // namespace

AstPtr parse_expression(const std::string& text, int line, int col) {
    Lexer lx(text, line, col);
    Parser p(lx.run());
    return p.parse_all();
}

// ---------------------------------------------------------------- elaboration

namespace {

[[noreturn]] void fail_at(const Ast& a, const std::string& code, const std::string& msg) {
    throw ParseError(code, a.line, a.col, msg);
}

Value map_value(const Value& v, const std::function<Form(const Form&)>& fn) {
    Value r = v;
    for (auto& x : r.c) x = fn(x);
    return r;
}

bool is_zero_value(const Value& v) {
    for (const auto& x : v.c)
        if (!x.is_zero()) return false;
    return true;
}

// Same (p, q) on every term; ghost degree may vary.
bool bihomogeneous(const Form& f) {
    std::optional<Grading> first;
    for (const auto& t : f.terms) {
        Form one;
        one.terms.push_back(t);
        auto g = one.grading();
        if (!g) continue;
        if (first && (first->p != g->p || first->q != g->q)) return false;
        if (!first) first = g;
    }
    return true;
}

std::optional<Rational> as_number(const Value& v) {
    if (v.type != Value::Type::Plain) return std::nullopt;
    const Form& f = v.form();
    if (f.is_zero()) return Rational(0);
    if (f.terms.size() == 1 && f.terms[0].fac.empty()) return f.terms[0].coef;
    return std::nullopt;
}

}  // namespace

Value field_value(const Context& ctx, const FieldDecl& f) {
    Value v;
    if (!f.lie.empty()) {
        v.type = Value::Type::Lie;
        v.alg = f.lie;
    } else if (f.shape == Shape::Vector) {
        v.type = Value::Type::Vec;
    }
    int nslots = 1;
    if (!f.lie.empty()) {
        int m = 0;
        for (int li : f.lie_index) m = std::max(m, li + 1);
        nslots = m;
    } else if (f.shape == Shape::Vector) {
        nslots = f.degree;
    }
    v.c.assign(nslots, Form());
    for (size_t k = 0; k < f.comps.size(); ++k) {
        Form term = jet(ctx, f.comps[k]);
        if (f.shape == Shape::Form)
            for (int mu : f.form_index[k]) term = term * dx(mu);
        int slot = 0;
        if (!f.lie.empty())
            slot = f.lie_index[k];
        else if (f.shape == Shape::Vector)
            slot = static_cast<int>(k);
        v.c[slot] += term;
    }
    return v;
}

static Value call_builtin(const Elaborator& el, const Ast& a);

static Value wedge(const Elaborator& el, const Value& x, const Value& y, const Ast& at) {
    using T = Value::Type;
    if (x.type == T::Plain && y.type == T::Plain) return Value::plain(x.form() * y.form());
    if (x.type == T::Plain) return map_value(y, [&](const Form& f) { return x.form() * f; });
    if (y.type == T::Plain) return map_value(x, [&](const Form& f) { return f * y.form(); });
    if (x.type == T::Lie && y.type == T::Lie) {
        if (x.alg != y.alg) fail_at(at, "GradingMismatch", "product of forms valued in different algebras");
        const Algebra* A = el.def.algebra(x.alg);
        if (!A) fail_at(at, "MissingStructureConstants", "algebra " + x.alg);
        const int n = A->dim;
        for (int b = 0; b < n; ++b)
            for (int c = b; c < n; ++c)
                if (!(x.c[b] * y.c[c] + x.c[c] * y.c[b]).is_zero())
                    fail_at(at, "GradingMismatch", "Lie-valued product with a nonzero symmetric part; use [X,Y] or tr(...)");
        Value r{T::Lie, x.alg, std::vector<Form>(n)};
        for (int a = 0; a < n; ++a) {
            std::vector<Term> acc;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    if (A->F(a, b, c) == 0) continue;
                    Form t = (x.c[b] * y.c[c]) * (A->F(a, b, c) / 2);
                    acc.insert(acc.end(), t.terms.begin(), t.terms.end());
                }
            r.c[a].terms = std::move(acc);
            r.c[a].normalize();
        }
        return r;
    }
    fail_at(at, "GradingMismatch", "unsupported product of vector-valued forms; use dot(X,Y)");
}

static Value add(const Value& x, const Value& y, bool sub, const Ast& at) {
    if (x.type != y.type || x.c.size() != y.c.size() || x.alg != y.alg) {
        if (is_zero_value(x)) return sub ? map_value(y, [](const Form& f) { return -f; }) : y;
        if (is_zero_value(y)) return x;
        fail_at(at, "GradingMismatch", "sum of differently valued forms");
    }
    Value r = x;
    for (size_t k = 0; k < r.c.size(); ++k) r.c[k] = sub ? r.c[k] - y.c[k] : r.c[k] + y.c[k];
    for (size_t k = 0; k < r.c.size(); ++k)
        if (!bihomogeneous(r.c[k])) fail_at(at, "GradingMismatch", "sum of forms of different degrees");
    return r;
}

static void flatten_product(const AstPtr& a, std::vector<AstPtr>& out) {
    if (a->op == Ast::Op::Mul) {
        flatten_product(a->kids[0], out);
        flatten_product(a->kids[1], out);
    } else {
        out.push_back(a);
    }
}

static Value trace(const Elaborator& el, const AstPtr& a) {
    switch (a->op) {
    case Ast::Op::Add:
    case Ast::Op::Sub:
        return add(trace(el, a->kids[0]), trace(el, a->kids[1]), a->op == Ast::Op::Sub, *a);
    case Ast::Op::Neg:
        return map_value(trace(el, a->kids[0]), [](const Form& f) { return -f; });
    default:
        break;
    }
    std::vector<AstPtr> fs;
    flatten_product(a, fs);
    Value left = el.eval(*fs[0]);
    for (size_t k = 1; k + 1 < fs.size(); ++k) left = wedge(el, left, el.eval(*fs[k]), *fs[k]);
    if (fs.size() == 1) {
        if (left.type == Value::Type::Plain) return left;
        fail_at(*a, "GradingMismatch", "tr of a single Lie-valued form");
    }
    Value right = el.eval(*fs.back());
    if (left.type == Value::Type::Plain || right.type == Value::Type::Plain) {
        Value w = wedge(el, left, right, *a);
        if (w.type == Value::Type::Plain) return w;
        fail_at(*a, "GradingMismatch", "tr needs a product of two Lie-valued factors");
    }
    if (left.type != Value::Type::Lie || right.type != Value::Type::Lie || left.alg != right.alg)
        fail_at(*a, "GradingMismatch", "tr needs Lie-valued factors of one algebra");
    const Algebra* A = el.def.algebra(left.alg);
    if (!A) fail_at(*a, "MissingStructureConstants", "algebra " + left.alg);
    std::vector<Term> acc;
    for (int x = 0; x < A->dim; ++x)
        for (int y = 0; y < A->dim; ++y) {
            if (A->K(x, y) == 0) continue;
            Form t = (left.c[x] * right.c[y]) * A->K(x, y);
            acc.insert(acc.end(), t.terms.begin(), t.terms.end());
        }
    Form f;
    f.terms = std::move(acc);
    f.normalize();
    return Value::plain(f);
}

static Value ident(const Elaborator& el, const Ast& a) {
    const Context& ctx = *el.def.ctx;
    if (a.level >= 0) {
        if (a.name != "lambda") fail_at(a, "SyntaxError", "only lambda@k is a level variable");
        return Value::plain(Form::atom(Atom::lambda(a.level)));
    }
    auto with_der = [&](Value v) {
        if (a.der.order() == 0) return v;
        return map_value(v, [&](const Form& f) { return total_derivative(ctx, f, a.der); });
    };
    auto it = el.env.find(a.name);
    if (it != el.env.end()) return with_der(it->second);
    int c = ctx.find_comp(a.name);
    if (c >= 0) return Value::plain(jet(ctx, c, a.der));
    if (const FieldDecl* f = el.def.field(a.name)) return with_der(field_value(ctx, *f));
    if (a.der.order() == 0) {
        if (a.name.size() > 2 && a.name.rfind("dx", 0) == 0 &&
            std::all_of(a.name.begin() + 2, a.name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            int mu = std::stoi(a.name.substr(2));
            if (mu >= ctx.dim) fail_at(a, "DimensionMismatch", a.name + " exceeds the chart dimension");
            return Value::plain(dx(mu));
        }
        if (a.name.size() > 1 && a.name[0] == 'd')
            for (size_t mu = 0; mu < ctx.coords.size(); ++mu)
                if (ctx.coords[mu] == a.name.substr(1)) return Value::plain(dx(static_cast<int>(mu)));
    }
    fail_at(a, "UndeclaredIdentifier", a.name);
}

Value Elaborator::eval(const Ast& a) const {
    const Context& ctx = *def.ctx;
    switch (a.op) {
    case Ast::Op::Num:
        return Value::plain(Form::scalar(a.num));
    case Ast::Op::Ident:
        return ident(*this, a);
    case Ast::Op::Add:
    case Ast::Op::Sub:
        return add(eval(*a.kids[0]), eval(*a.kids[1]), a.op == Ast::Op::Sub, a);
    case Ast::Op::Neg:
        return map_value(eval(*a.kids[0]), [](const Form& f) { return -f; });
    case Ast::Op::Mul:
        return wedge(*this, eval(*a.kids[0]), eval(*a.kids[1]), a);
    case Ast::Op::Div: {
        auto r = as_number(eval(*a.kids[1]));
        if (!r || *r == 0) fail_at(a, "GradingMismatch", "division only by nonzero rational numbers");
        Rational inv = 1 / *r;
        return map_value(eval(*a.kids[0]), [&](const Form& f) { return f * inv; });
    }
    case Ast::Op::Pow: {
        Value b = eval(*a.kids[0]);
        if (b.type != Value::Type::Plain) fail_at(a, "GradingMismatch", "power of a valued form");
        long k = a.num.get_num().get_si();
        const Form& f = b.form();
        if (k < 0) {
            if (f.terms.size() != 1 || f.terms[0].coef != 1 || f.terms[0].fac.size() != 1 || f.terms[0].fac[0].pow != 1)
                fail_at(a, "GradingMismatch", "negative powers only of single symbols");
            const Atom& at = f.terms[0].fac[0].atom;
            if (at.kind != AtomKind::Jet || ctx.comps[at.id].kind != Kind::Constant)
                fail_at(a, "GradingMismatch", "negative powers only of constants");
            return Value::plain(Form::atom(at, static_cast<int>(k)));
        }
        Form r = Form::scalar(1);
        for (long i = 0; i < k; ++i) r = r * f;
        return Value::plain(r);
    }
    case Ast::Op::Bracket:
    case Ast::Op::Pairing: {
        Value x = eval(*a.kids[0]), y = eval(*a.kids[1]);
        if (x.type != Value::Type::Lie || y.type != Value::Type::Lie || x.alg != y.alg)
            fail_at(a, "GradingMismatch", "bracket and pairing need Lie-valued forms of one algebra");
        const Algebra* A = def.algebra(x.alg);
        if (!A) fail_at(a, "MissingStructureConstants", "algebra " + x.alg);
        const int n = A->dim;
        if (a.op == Ast::Op::Pairing) {
            Form out;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q)
                    if (A->K(p, q) != 0) out += (x.c[p] * y.c[q]) * A->K(p, q);
            return Value::plain(out);
        }
        Value r{Value::Type::Lie, x.alg, std::vector<Form>(n)};
        for (int p = 0; p < n; ++p)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    if (A->F(p, b, c) != 0) r.c[p] += (x.c[b] * y.c[c]) * A->F(p, b, c);
        return r;
    }
    case Ast::Op::Call:
        return call_builtin(*this, a);
    case Ast::Op::Func: {
        int fid = ctx.find_func(a.name);
        if (fid < 0) fail_at(a, "UndeclaredIdentifier", "function " + a.name);
        std::vector<Form> args;
        for (const auto& k : a.kids) {
            Value v = eval(*k);
            if (v.type == Value::Type::Lie) fail_at(*k, "GradingMismatch", "Lie-valued function argument");
            for (const auto& x : v.c) args.push_back(x);
        }
        if (static_cast<int>(args.size()) != ctx.funcs[fid].arity)
            fail_at(a, "GradingMismatch", "wrong number of arguments to " + a.name);
        for (const auto& x : args) {
            auto g = x.grading();
            if (g && (g->p != 0 || g->q != 0 || x.odd())) fail_at(a, "GradingMismatch", "function arguments must be even scalars");
        }
        return Value::plain(Form::atom(Atom::func(fid, a.der, std::move(args))));
    }
    }
    fail_at(a, "SyntaxError", "unknown node");
}

static Value call_builtin(const Elaborator& el, const Ast& a) {
    const Context& ctx = *el.def.ctx;
    auto one = [&]() -> Value {
        if (a.kids.size() != 1) fail_at(a, "SyntaxError", a.name + " takes one argument");
        return el.eval(*a.kids[0]);
    };
    if (a.level >= 0) {
        if (a.name != "int") fail_at(a, "SyntaxError", "only int@k takes a level");
        Value v = one();
        return Value::plain(make_fiber(v.form(), a.level));
    }
    if (a.name == "d") return map_value(one(), [&](const Form& f) { return d_h(ctx, f); });
    if (a.name == "delta") return map_value(one(), [&](const Form& f) { return vertical_d(ctx, f); });
    if (a.name == "star") return map_value(one(), [&](const Form& f) { return hodge_star(ctx, f); });
    if (a.name == "tr") {
        if (a.kids.size() != 1) fail_at(a, "SyntaxError", "tr takes one argument");
        return trace(el, a.kids[0]);
    }
    if (a.name == "dot") {
        if (a.kids.size() != 2) fail_at(a, "SyntaxError", "dot takes two arguments");
        Value x = el.eval(*a.kids[0]), y = el.eval(*a.kids[1]);
        if (x.type != Value::Type::Vec || y.type != Value::Type::Vec || x.c.size() != y.c.size())
            fail_at(a, "GradingMismatch", "dot needs vectors of equal length");
        Form out;
        for (size_t k = 0; k < x.c.size(); ++k) out += x.c[k] * y.c[k];
        return Value::plain(out);
    }
    Ast f = a;
    f.op = Ast::Op::Func;
    return el.eval(f);
}

Value Elaborator::eval_text(const std::string& text, int line) const {
    AstPtr a = parse_expression(text, line, 1);
    return eval(*a);
}

Form Elaborator::eval_form(const std::string& text, int line) const {
    AstPtr a = parse_expression(text, line, 1);
    Value v = eval(*a);
    if (v.type != Value::Type::Plain) fail_at(*a, "GradingMismatch", "expected a plain form");
    if (!bihomogeneous(v.form())) fail_at(*a, "GradingMismatch", "inhomogeneous form");
    return v.form();
}

Form parse_form(const TheoryDef& t, const std::string& text) {
    Elaborator el(t);
    for (const auto& d : t.definitions) el.env[d.name] = el.eval_text(d.text, d.line);
    return el.eval_form(text);
}

Form parse_form(const Context& ctx, const std::string& text) {
    TheoryDef t;
    t.ctx = std::make_shared<Context>(ctx);
    Elaborator el(t);
    return el.eval_form(text);
}

// ---------------------------------------------------------------- theory files

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

Rational parse_rational(const std::string& s, int line, int col) {
    try {
        Rational r(s);
        r.canonicalize();
        return r;
    } catch (...) {
        throw ParseError("SyntaxError", line, col, "expected a rational number, found '" + s + "'");
    }
}

int parse_int(const std::string& s, int line, int col) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw ParseError("SyntaxError", line, col, "expected an integer, found '" + s + "'");
    return std::stoi(s);
}

void subsets(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < n; ++i) {
        cur.push_back(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

struct Loader {
    TheoryDef t;
    Elaborator* el = nullptr;
    bool have_dim = false, have_metric = false;

    Context& ctx() { return *t.ctx; }

    [[noreturn]] void fail(int line, const std::string& code, const std::string& msg, int col = 1) {
        throw ParseError(code, line, col, msg);
    }

    void require_dim(int line) {
        if (!have_dim) fail(line, "SyntaxError", "dimension must be declared first");
    }

    // NAME : shape [lie ALG] [ghost G] [background] [global] [ghostname NAME]
    FieldDecl field_decl(const std::string& text, int line, Kind kind, std::string* ghost_name = nullptr) {
        require_dim(line);
        auto colon = text.find(':');
        if (colon == std::string::npos) fail(line, "SyntaxError", "expected 'name : shape'");
        FieldDecl f;
        f.name = trim(text.substr(0, colon));
        if (f.name.empty() || !ident_start(static_cast<unsigned char>(f.name[0])))
            fail(line, "SyntaxError", "expected a field name");
        auto w = words(text.substr(colon + 1));
        size_t i = 0;
        auto need = [&](const char* what) -> const std::string& {
            if (i >= w.size()) fail(line, "SyntaxError", std::string("expected ") + what);
            return w[i++];
        };
        const std::string& shape = need("shape {scalar, vector, form}");
        if (shape == "scalar") {
            f.shape = Shape::Scalar;
        } else if (shape == "vector") {
            f.shape = Shape::Vector;
            f.degree = parse_int(need("vector length"), line, 1);
        } else if (shape == "form") {
            f.shape = Shape::Form;
            f.degree = parse_int(need("form degree"), line, 1);
            if (f.degree > ctx().dim) fail(line, "DimensionMismatch", "form degree exceeds the dimension");
        } else {
            fail(line, "SyntaxError", "expected one of {scalar, vector, form} but found '" + shape + "'");
        }
        f.kind = kind;
        while (i < w.size()) {
            const std::string& key = w[i++];
            if (key == "lie") {
                f.lie = need("algebra name");
                if (!t.algebra(f.lie)) fail(line, "MissingStructureConstants", "algebra " + f.lie + " is not declared");
            } else if (key == "ghost") {
                const std::string& g = need("ghost degree");
                try {
                    f.ghost = std::stoi(g);
                } catch (...) {
                    fail(line, "SyntaxError", "expected ghost degree");
                }
            } else if (key == "background") {
                f.kind = Kind::Background;
            } else if (key == "global") {
                f.kind = Kind::Constant;
            } else if (key == "ghostname" && ghost_name) {
                *ghost_name = need("ghost name");
            } else {
                fail(line, "SyntaxError", "unexpected '" + key + "' in field declaration");
            }
        }
        if (t.field(f.name) || ctx().find_comp(f.name) >= 0) fail(line, "DuplicateIdentifier", f.name);
        add_components(f);
        return f;
    }

    void add_components(FieldDecl& f) {
        std::vector<std::vector<int>> idx;
        if (f.shape == Shape::Form) {
            std::vector<int> cur;
            subsets(ctx().dim, f.degree, 0, cur, idx);
        } else if (f.shape == Shape::Vector) {
            for (int k = 0; k < f.degree; ++k) idx.push_back({k});
        } else {
            idx.push_back({});
        }
        int lie_dim = 0;
        if (!f.lie.empty()) lie_dim = t.algebra(f.lie)->dim;
        for (int a = 0; a < std::max(lie_dim, 1); ++a)
            for (const auto& I : idx) {
                std::string n = f.name;
                if (lie_dim) n += "{" + std::to_string(a) + "}";
                if (!I.empty()) {
                    n += "[";
                    for (int k : I) n += std::to_string(k);
                    n += "]";
                }
                int id = ctx().add_comp({n, f.ghost, f.kind, f.name});
                f.comps.push_back(id);
                f.form_index.push_back(f.shape == Shape::Form ? I : std::vector<int>{});
                f.lie_index.push_back(lie_dim ? a : -1);
            }
    }

    void definition(const std::string& text, int line, bool source) {
        auto pos = text.find(":=");
        std::string name = trim(text.substr(0, pos));
        std::string body = trim(text.substr(pos + 2));
        if (name.empty()) fail(line, "SyntaxError", "expected a name before ':='");
        int col = static_cast<int>(text.find_first_not_of(" \t", pos + 2)) + 1;
        Value v = el->eval(*parse_expression(body, line, col));
        if (source) {
            if (v.type != Value::Type::Plain) fail(line, "GradingMismatch", "external current must be a plain form");
            if (!field_independent(ctx(), v.form()))
                fail(line, "GradingMismatch", "external current must be field independent");
            if (!d_h(ctx(), v.form()).is_zero())
                fail(line, "SourceNotClosed", "external current " + name + " is not closed");
            t.source_names.push_back(name);
        }
        el->env[name] = v;
        t.definitions.push_back({name, body, line});
    }
};

}  // namespace

TheoryDef parse_theory(const std::string& text) {
    Loader L;
    L.t.ctx = std::make_shared<Context>();
    L.ctx().cutoff = default_cutoff();
    Elaborator el(L.t);
    L.el = &el;

    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string s;
        while (std::getline(in, s)) lines.push_back(s);
    }
    std::string section, arg;
    SymmetryDef* sym = nullptr;
    Algebra* alg = nullptr;
    bool any = false;
    for (size_t li = 0; li < lines.size(); ++li) {
        int line = static_cast<int>(li) + 1;
        std::string raw = lines[li];
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::string s = trim(raw);
        if (s.empty()) continue;
        int col = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
        any = true;
        if (s.front() == '[' && s.back() == ']' && s.find(',') == std::string::npos) {
            auto w = words(s.substr(1, s.size() - 2));
            if (w.empty()) L.fail(line, "SyntaxError", "empty section header", col);
            section = w[0];
            arg = w.size() > 1 ? w[1] : "";
            static const std::vector<std::string> known = {"dimension", "signature",  "metric",     "coordinates",
                                                           "fields",    "constants",  "functions",  "structure",
                                                           "lagrangian", "symmetry",  "sources",    "onshell"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                L.fail(line, "SyntaxError", "unknown section '" + section + "'", col + 1);
            if (section != "dimension" && section != "structure" && !L.have_dim)
                L.fail(line, "SyntaxError", "dimension must be declared first", col);
            sym = nullptr;
            alg = nullptr;
            if (section == "symmetry") {
                if (arg.empty()) L.fail(line, "SyntaxError", "symmetry needs a name", col);
                L.t.symmetries.push_back({arg, {}, {}, {}, {}});
                sym = &L.t.symmetries.back();
            } else if (section == "structure") {
                if (arg.empty()) L.fail(line, "SyntaxError", "structure needs an algebra name", col);
                L.t.algebras.push_back({arg, 0, {}, {}});
                alg = &L.t.algebras.back();
            } else if (section == "metric") {
                L.ctx().metric.clear();
            }
            continue;
        }
        if (section.empty()) {
            auto w = words(s);
            if (w.size() == 2 && w[0] == "theory") {
                L.t.name = w[1];
                continue;
            }
            L.fail(line, "SyntaxError", "expected one of {theory NAME, [section]}", col);
        }
        if (section == "dimension") {
            int n = parse_int(s, line, col);
            if (n < 1 || n > kMaxDim) L.fail(line, "DimensionMismatch", "dimension must be between 1 and 6", col);
            L.ctx().dim = n;
            L.have_dim = true;
        } else if (section == "signature") {
            std::vector<int> sig;
            for (const auto& w : words(s)) {
                if (w == "+" || w == "+1" || w == "1")
                    sig.push_back(1);
                else if (w == "-" || w == "-1")
                    sig.push_back(-1);
                else
                    L.fail(line, "SyntaxError", "expected one of {+, -} in signature", col);
            }
            if (static_cast<int>(sig.size()) != L.ctx().dim)
                L.fail(line, "DimensionMismatch", "signature length differs from the dimension", col);
            int n = L.ctx().dim;
            L.ctx().set_flat(sig);
            L.ctx().dim = n;
            L.have_metric = true;
        } else if (section == "metric") {
            std::vector<Rational> row;
            for (const auto& w : words(s)) row.push_back(parse_rational(w, line, col));
            if (static_cast<int>(row.size()) != L.ctx().dim)
                L.fail(line, "DimensionMismatch", "metric row length differs from the dimension", col);
            L.ctx().metric.push_back(row);
            if (static_cast<int>(L.ctx().metric.size()) > L.ctx().dim)
                L.fail(line, "DimensionMismatch", "too many metric rows", col);
            L.have_metric = true;
            L.t.explicit_metric = true;
        } else if (section == "coordinates") {
            auto w = words(s);
            if (static_cast<int>(w.size()) != L.ctx().dim)
                L.fail(line, "DimensionMismatch", "number of coordinates differs from the dimension", col);
            L.ctx().coords = w;
        } else if (section == "structure") {
            auto w = words(s);
            if (w.size() == 2 && w[0] == "dim") {
                int n = parse_int(w[1], line, col);
                alg->dim = n;
                alg->f.assign(n * n * n, 0);
                alg->kappa.assign(n * n, 0);
                for (int a = 0; a < n; ++a) alg->kappa[a * n + a] = 1;
            } else if (w.size() == 6 && w[0] == "f" && w[4] == "=") {
                if (!alg->dim) L.fail(line, "SyntaxError", "structure needs 'dim N' first", col);
                int a = parse_int(w[1], line, col), b = parse_int(w[2], line, col), c = parse_int(w[3], line, col);
                if (a >= alg->dim || b >= alg->dim || c >= alg->dim) L.fail(line, "DimensionMismatch", "index out of range", col);
                Rational r = parse_rational(w[5], line, col);
                alg->F(a, b, c) = r;
                alg->F(a, c, b) = -r;
            } else if (w.size() == 5 && w[0] == "kappa" && w[3] == "=") {
                if (!alg->dim) L.fail(line, "SyntaxError", "structure needs 'dim N' first", col);
                int a = parse_int(w[1], line, col), b = parse_int(w[2], line, col);
                if (a >= alg->dim || b >= alg->dim) L.fail(line, "DimensionMismatch", "index out of range", col);
                Rational r = parse_rational(w[4], line, col);
                alg->kappa[a * alg->dim + b] = r;
                alg->kappa[b * alg->dim + a] = r;
            } else {
                L.fail(line, "SyntaxError", "expected one of {dim N, f a b c = r, kappa a b = r}", col);
            }
        } else if (section == "fields") {
            L.t.fields.push_back(L.field_decl(s, line, Kind::Dynamic));
            if (L.t.fields.back().kind == Kind::Background) {
                L.t.backgrounds.push_back(L.t.fields.back());
                L.t.fields.pop_back();
            }
        } else if (section == "constants") {
            for (auto w : words(s)) {
                if (!w.empty() && w.back() == ',') w.pop_back();
                if (L.t.field(w) || L.ctx().find_comp(w) >= 0) L.fail(line, "DuplicateIdentifier", w, col);
                L.ctx().add_comp({w, 0, Kind::Constant, w});
                L.t.constants.push_back(w);
            }
        } else if (section == "functions") {
            auto colon = s.find(':');
            auto w = words(colon == std::string::npos ? "" : s.substr(colon + 1));
            if (colon == std::string::npos || w.size() != 2 || w[0] != "function")
                L.fail(line, "SyntaxError", "expected 'NAME : function ARITY'", col);
            std::string name = trim(s.substr(0, colon));
            int arity = parse_int(w[1], line, col);
            L.ctx().add_func({name, arity, std::nullopt});
            L.t.functions.push_back({name, arity});
        } else if (section == "sources") {
            if (s.find(":=") != std::string::npos)
                L.definition(s, line, true);
            else
                L.t.backgrounds.push_back(L.field_decl(s, line, Kind::Background));
        } else if (section == "lagrangian") {
            if (s.find(":=") == std::string::npos) L.fail(line, "SyntaxError", "expected 'name := expression'", col);
            std::string name = trim(s.substr(0, s.find(":=")));
            if (name == "L") {
                if (!L.t.lagrangian_text.empty()) L.fail(line, "SyntaxError", "Lagrangian declared twice", col);
                auto pos = s.find(":=");
                L.t.lagrangian_text = trim(s.substr(pos + 2));
                L.t.lagrangian_line = line;
                int c2 = static_cast<int>(raw.find(":=")) + 3;
                while (c2 <= static_cast<int>(raw.size()) && std::isspace(static_cast<unsigned char>(raw[c2 - 1]))) ++c2;
                AstPtr a = parse_expression(L.t.lagrangian_text, line, c2);
                Value v = el.eval(*a);
                if (v.type != Value::Type::Plain) L.fail(line, "GradingMismatch", "Lagrangian must be a plain form", col);
                Form lf = v.form();
                auto g = lf.grading();
                if (!lf.homogeneous() || (g && (g->p != 0 || g->q != L.ctx().dim || g->g != 0)))
                    L.fail(line, "GradingMismatch", "Lagrangian must be a (0,n) form of ghost degree 0", col);
                L.t.lagrangian = lf;
            } else {
                L.definition(s, line, false);
            }
        } else if (section == "symmetry") {
            auto w = words(s);
            if (!w.empty() && w[0] == "parameter") {
                std::string gname;
                FieldDecl p = L.field_decl(s.substr(s.find("parameter") + 9), line, Kind::Parameter, &gname);
                if (gname.empty()) gname = "c_" + p.name;
                sym->params.push_back(p);
                sym->ghost_names.push_back(gname);
            } else if (s.find(":=") != std::string::npos) {
                auto pos = s.find(":=");
                std::string fname = trim(s.substr(0, pos));
                std::string body = trim(s.substr(pos + 2));
                const FieldDecl* f = nullptr;
                for (const auto& x : L.t.fields)
                    if (x.name == fname) f = &x;
                if (!f) L.fail(line, "UndeclaredIdentifier", "field " + fname, col);
                int c2 = static_cast<int>(raw.find(":=")) + 3;
                Value v = el.eval(*parse_expression(body, line, c2));
                Value fv = field_value(L.ctx(), *f);
                if (v.type != fv.type || v.c.size() != fv.c.size())
                    L.fail(line, "GradingMismatch", "action on " + fname + " has the wrong value type", col);
                for (size_t k = 0; k < f->comps.size(); ++k) {
                    int slot = f->lie_index[k] >= 0 ? f->lie_index[k] : (f->shape == Shape::Vector ? int(k) : 0);
                    Form comp;
                    // coefficient of the component's dx monomial
                    std::vector<Factor> want;
                    for (int mu : f->form_index[k]) want.push_back({Atom::horiz(mu), 1});
                    for (const auto& [coef, mono] : split_by(v.c[slot], [](const Atom& a) { return a.kind == AtomKind::Horiz; })) {
                        if (f->shape == Shape::Form) {
                            if (compare_monomial(mono, want) == 0) comp += coef;
                        } else if (mono.empty()) {
                            comp += coef;
                        }
                    }
                    for (const auto& [coef, mono] : split_by(v.c[slot], [](const Atom& a) { return a.kind == AtomKind::Horiz; }))
                        if (static_cast<int>(mono.size()) != (f->shape == Shape::Form ? f->degree : 0))
                            L.fail(line, "GradingMismatch", "action on " + fname + " has the wrong form degree", col);
                    sym->rho.comps[f->comps[k]] = comp;
                }
                sym->actions.push_back({fname, body, line});
            } else {
                L.fail(line, "SyntaxError", "expected one of {parameter NAME : shape, FIELD := expression}", col);
            }
        } else if (section == "onshell") {
            auto pos = s.find("->");
            if (pos == std::string::npos) L.fail(line, "SyntaxError", "expected 'COMPONENT -> JET'", col);
            L.t.onshell.push_back({trim(s.substr(0, pos)), trim(s.substr(pos + 2))});
        }
    }
    if (!any) throw ParseError("SyntaxError", 1, 1, "expected one of {theory NAME, [section]} but found end of input");
    if (!L.have_dim) throw ParseError("SyntaxError", 1, 1, "missing [dimension]");
    if (!L.have_metric) {
        std::vector<int> sig(L.ctx().dim, 1);
        int n = L.ctx().dim;
        L.ctx().set_flat(sig);
        L.ctx().dim = n;
    }
    if (static_cast<int>(L.ctx().metric.size()) != L.ctx().dim)
        throw ParseError("DimensionMismatch", 1, 1, "metric must have one row per dimension");
    if (L.t.lagrangian_text.empty()) throw ParseError("SyntaxError", static_cast<int>(lines.size()), 1, "missing Lagrangian 'L := ...'");
    return L.t;
}

TheoryDef load_theory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_theory(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(e.code(), e.line(), e.col(), path + ": " + e.message());
    }
}

// ---------------------------------------------------------------- rendering

static std::string shape_text(const FieldDecl& f) {
    std::string s;
    switch (f.shape) {
    case Shape::Scalar:
        s = "scalar";
        break;
    case Shape::Vector:
        s = "vector " + std::to_string(f.degree);
        break;
    case Shape::Form:
        s = "form " + std::to_string(f.degree);
        break;
    }
    if (!f.lie.empty()) s += " lie " + f.lie;
    if (f.ghost) s += " ghost " + std::to_string(f.ghost);
    return s;
}

std::string render_theory(const TheoryDef& t) {
    const Context& ctx = *t.ctx;
    std::ostringstream o;
    if (!t.name.empty()) o << "theory " << t.name << "\n\n";
    for (const auto& a : t.algebras) {
        o << "[structure " << a.name << "]\ndim " << a.dim << "\n";
        for (int x = 0; x < a.dim; ++x)
            for (int b = 0; b < a.dim; ++b)
                for (int c = b + 1; c < a.dim; ++c)
                    if (a.F(x, b, c) != 0) o << "f " << x << " " << b << " " << c << " = " << a.F(x, b, c).get_str() << "\n";
        for (int x = 0; x < a.dim; ++x)
            for (int b = x; b < a.dim; ++b) {
                Rational def = x == b ? 1 : 0;
                if (a.K(x, b) != def) o << "kappa " << x << " " << b << " = " << a.K(x, b).get_str() << "\n";
            }
        o << "\n";
    }
    o << "[dimension]\n" << ctx.dim << "\n\n";
    bool diagonal = !t.explicit_metric;
    if (diagonal) {
        o << "[signature]\n";
        for (int i = 0; i < ctx.dim; ++i) o << (i ? " " : "") << (ctx.metric[i][i] < 0 ? "-" : "+");
        o << "\n\n";
    } else {
        o << "[metric]\n";
        for (const auto& row : ctx.metric) {
            for (size_t j = 0; j < row.size(); ++j) o << (j ? " " : "") << row[j].get_str();
            o << "\n";
        }
        o << "\n";
    }
    if (!ctx.coords.empty()) {
        o << "[coordinates]\n";
        for (size_t i = 0; i < ctx.coords.size(); ++i) o << (i ? " " : "") << ctx.coords[i];
        o << "\n\n";
    }
    if (!t.constants.empty()) {
        o << "[constants]\n";
        for (size_t i = 0; i < t.constants.size(); ++i) o << (i ? " " : "") << t.constants[i];
        o << "\n\n";
    }
    if (!t.functions.empty()) {
        o << "[functions]\n";
        for (const auto& [n, ar] : t.functions) o << n << " : function " << ar << "\n";
        o << "\n";
    }
    // fields and backgrounds keep declaration order through component ids
    std::vector<const FieldDecl*> decls;
    for (const auto& f : t.fields) decls.push_back(&f);
    for (const auto& f : t.backgrounds) decls.push_back(&f);
    std::sort(decls.begin(), decls.end(), [](auto* a, auto* b) { return a->comps.front() < b->comps.front(); });
    bool any_field = false;
    for (auto* f : decls)
        if (f->kind == Kind::Dynamic || std::find(t.backgrounds.begin(), t.backgrounds.end(), *f) != t.backgrounds.end()) {
            // backgrounds declared in [sources] are emitted there
        }
    o << "[fields]\n";
    for (const auto& f : t.fields) {
        o << f.name << " : " << shape_text(f) << "\n";
        any_field = true;
    }
    (void)any_field;
    o << "\n";
    if (!t.backgrounds.empty() || !t.source_names.empty()) {
        o << "[sources]\n";
        for (const auto& f : t.backgrounds) o << f.name << " : " << shape_text(f) << " background\n";
        for (const auto& d : t.definitions)
            if (std::find(t.source_names.begin(), t.source_names.end(), d.name) != t.source_names.end())
                o << d.name << " := " << d.text << "\n";
        o << "\n";
    }
    o << "[lagrangian]\n";
    for (const auto& d : t.definitions)
        if (std::find(t.source_names.begin(), t.source_names.end(), d.name) == t.source_names.end())
            o << d.name << " := " << d.text << "\n";
    o << "L := " << t.lagrangian_text << "\n";
    for (const auto& s : t.symmetries) {
        o << "\n[symmetry " << s.name << "]\n";
        for (size_t k = 0; k < s.params.size(); ++k) {
            const auto& p = s.params[k];
            o << "parameter " << p.name << " : " << shape_text(p);
            if (p.kind == Kind::Constant) o << " global";
            if (s.ghost_names[k] != "c_" + p.name) o << " ghostname " << s.ghost_names[k];
            o << "\n";
        }
        for (const auto& a : s.actions) o << a.field << " := " << a.text << "\n";
    }
    if (!t.onshell.empty()) {
        o << "\n[onshell]\n";
        for (const auto& d : t.onshell) o << d.field_comp << " -> " << d.jet << "\n";
    }
    return o.str();
}

bool same_theory(const TheoryDef& a, const TheoryDef& b) {
    const Context &x = *a.ctx, &y = *b.ctx;
    if (a.name != b.name || x.dim != y.dim || x.metric != y.metric || x.coords != y.coords) return false;
    if (x.comps.size() != y.comps.size()) return false;
    for (size_t i = 0; i < x.comps.size(); ++i)
        if (x.comps[i].name != y.comps[i].name || x.comps[i].ghost != y.comps[i].ghost || x.comps[i].kind != y.comps[i].kind)
            return false;
    if (!(a.fields == b.fields) || !(a.backgrounds == b.backgrounds) || a.constants != b.constants ||
        a.functions != b.functions || !(a.algebras == b.algebras))
        return false;
    if (a.definitions.size() != b.definitions.size()) return false;
    for (size_t i = 0; i < a.definitions.size(); ++i)
        if (a.definitions[i].name != b.definitions[i].name || a.definitions[i].text != b.definitions[i].text) return false;
    if (!(a.lagrangian == b.lagrangian) || a.symmetries.size() != b.symmetries.size()) return false;
    for (size_t i = 0; i < a.symmetries.size(); ++i) {
        const auto &s = a.symmetries[i], &r = b.symmetries[i];
        if (s.name != r.name || !(s.params == r.params) || s.ghost_names != r.ghost_names) return false;
        if (s.rho.comps.size() != r.rho.comps.size()) return false;
        for (const auto& [c, f] : s.rho.comps) {
            auto it = r.rho.comps.find(c);
            if (it == r.rho.comps.end() || !(it->second == f)) return false;
        }
    }
    if (a.onshell.size() != b.onshell.size()) return false;
    for (size_t i = 0; i < a.onshell.size(); ++i)
        if (a.onshell[i].field_comp != b.onshell[i].field_comp || a.onshell[i].jet != b.onshell[i].jet) return false;
    return true;
}

}  // namespace varcalc
