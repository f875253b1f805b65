#include "fpkit/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace fpkit::expr {

namespace {

Expression make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_number(const Expression& e, double v) {
    return e->kind == Kind::Number && e->value == v;
}

const char* fn1_name(Fn1 f) {
    switch (f) {
    case Fn1::Exp: return "exp";
    case Fn1::Ln: return "ln";
    case Fn1::Sqrt: return "sqrt";
    case Fn1::Abs: return "abs";
    case Fn1::Sin: return "sin";
    case Fn1::Cos: return "cos";
    case Fn1::Tanh: return "tanh";
    case Fn1::Sign: return "sign";
    }
    return "?";
}

const char* fn2_name(Fn2 f) { return f == Fn2::Min ? "min" : "max"; }

// ---------------------------------------------------------------- tokenizer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t offset;
    double value = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        tok_.offset = pos_;
        tok_.text.clear();
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        char c = src_[pos_];
        switch (c) {
        case '+': tok_.kind = Tok::Plus; ++pos_; return;
        case '-': tok_.kind = Tok::Minus; ++pos_; return;
        case '*': tok_.kind = Tok::Star; ++pos_; return;
        case '/': tok_.kind = Tok::Slash; ++pos_; return;
        case '^': tok_.kind = Tok::Caret; ++pos_; return;
        case '(': tok_.kind = Tok::LParen; ++pos_; return;
        case ')': tok_.kind = Tok::RParen; ++pos_; return;
        case ',': tok_.kind = Tok::Comma; ++pos_; return;
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            tok_.kind = Tok::Ident;
            tok_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        throw ParseError(pos_, "token",
                         "unexpected character '" + std::string(1, c) + "' at offset " +
                             std::to_string(pos_));
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw ParseError(pos_, "digit",
                                 "expected digit after '.' at offset " + std::to_string(pos_));
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                pos_ = mark; // "1e" not followed by digits: let 'e' lex as an identifier
            } else {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            }
        }
        tok_.kind = Tok::Number;
        tok_.text = std::string(src_.substr(start, pos_ - start));
        tok_.value = std::strtod(tok_.text.c_str(), nullptr);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
};

// ----------------------------------------------------------------- parser

struct FnInfo {
    const char* name;
    int arity;
    Fn1 f1;
    Fn2 f2;
};

const FnInfo kFunctions[] = {
    {"exp", 1, Fn1::Exp, Fn2::Min},  {"ln", 1, Fn1::Ln, Fn2::Min},
    {"sqrt", 1, Fn1::Sqrt, Fn2::Min}, {"abs", 1, Fn1::Abs, Fn2::Min},
    {"sin", 1, Fn1::Sin, Fn2::Min},  {"cos", 1, Fn1::Cos, Fn2::Min},
    {"tanh", 1, Fn1::Tanh, Fn2::Min}, {"sign", 1, Fn1::Sign, Fn2::Min},
    {"min", 2, Fn1::Exp, Fn2::Min},  {"max", 2, Fn1::Exp, Fn2::Max},
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    Expression run() {
        Expression e = parse_expr();
        const Token& t = lex_.peek();
        if (t.kind != Tok::End)
            throw ParseError(t.offset, "operator, end of input",
                             "unexpected trailing input at offset " + std::to_string(t.offset));
        return e;
    }

private:
    Expression parse_expr() {
        Expression lhs = parse_term();
        while (true) {
            Tok k = lex_.peek().kind;
            if (k != Tok::Plus && k != Tok::Minus) return lhs;
            lex_.take();
            Expression rhs = parse_term();
            Node n;
            n.kind = (k == Tok::Plus) ? Kind::Add : Kind::Sub;
            n.a = std::move(lhs);
            n.b = std::move(rhs);
            lhs = make(std::move(n));
        }
    }

    Expression parse_term() {
        Expression lhs = parse_unary();
        while (true) {
            Tok k = lex_.peek().kind;
            if (k != Tok::Star && k != Tok::Slash) return lhs;
            lex_.take();
            Expression rhs = parse_unary();
            Node n;
            n.kind = (k == Tok::Star) ? Kind::Mul : Kind::Div;
            n.a = std::move(lhs);
            n.b = std::move(rhs);
            lhs = make(std::move(n));
        }
    }

    Expression parse_unary() {
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            Expression inner = parse_unary();
            Node n;
            n.kind = Kind::Neg;
            n.a = std::move(inner);
            return make(std::move(n));
        }
        return parse_power();
    }

    Expression parse_power() {
        Expression base = parse_atom();
        if (lex_.peek().kind == Tok::Caret) {
            lex_.take();
            Expression exponent = parse_unary(); // right-assoc, sign allowed in exponent
            Node n;
            n.kind = Kind::Pow;
            n.a = std::move(base);
            n.b = std::move(exponent);
            return make(std::move(n));
        }
        return base;
    }

    Expression parse_atom() {
        Token t = lex_.take();
        switch (t.kind) {
        case Tok::Number: {
            Node n;
            n.kind = Kind::Number;
            n.value = t.value;
            return make(std::move(n));
        }
        case Tok::LParen: {
            Expression e = parse_expr();
            expect(Tok::RParen, ")");
            return e;
        }
        case Tok::Ident:
            return parse_ident(t);
        default:
            throw ParseError(t.offset, "number, variable, function, '(', '-'",
                             "expected an operand at offset " + std::to_string(t.offset));
        }
    }

    Expression parse_ident(const Token& t) {
        for (const FnInfo& fn : kFunctions) {
            if (t.text == fn.name) {
                expect(Tok::LParen, "(");
                Expression a = parse_expr();
                Node n;
                if (fn.arity == 1) {
                    n.kind = Kind::Call1;
                    n.fn1 = fn.f1;
                    n.a = std::move(a);
                } else {
                    expect(Tok::Comma, ",");
                    Expression b = parse_expr();
                    n.kind = Kind::Call2;
                    n.fn2 = fn.f2;
                    n.a = std::move(a);
                    n.b = std::move(b);
                }
                expect(Tok::RParen, ")");
                return make(std::move(n));
            }
        }
        if (t.text == "t") {
            Node n;
            n.kind = Kind::Variable;
            n.var = 0;
            return make(std::move(n));
        }
        if (t.text.size() >= 2 && t.text[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < t.text.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(t.text[i]));
            if (digits && t.text[1] != '0') {
                Node n;
                n.kind = Kind::Variable;
                n.var = std::stoi(t.text.substr(1));
                return make(std::move(n));
            }
        }
        throw ParseError(t.offset, "variable (t, x1, x2, ...), function name",
                         "unknown identifier '" + t.text + "' at offset " +
                             std::to_string(t.offset));
    }

    void expect(Tok k, const char* what) {
        const Token& t = lex_.peek();
        if (t.kind != k)
            throw ParseError(t.offset, what,
                             std::string("expected '") + what + "' at offset " +
                                 std::to_string(t.offset));
        lex_.take();
    }

    Lexer lex_;
};

// ---------------------------------------------------------------- printing

// Precedence levels used for minimal parenthesization.
int precedence(const Expression& e) {
    switch (e->kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
    }
}

std::string format_double(double v) {
    if (std::abs(v) < 1e15 && v == static_cast<long long>(v)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
        return buf;
    }
    for (int prec = 15; prec <= 17; ++prec) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print(const Expression& e, std::string& out) {
    auto child = [&out](const Expression& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };
    switch (e->kind) {
    case Kind::Number:
        if (e->value < 0 || std::signbit(e->value)) {
            // negative literal prints as unary minus applied to its magnitude
            out += '-';
            out += format_double(-e->value);
        } else {
            out += format_double(e->value);
        }
        return;
    case Kind::Variable:
        out += (e->var == 0) ? "t" : "x" + std::to_string(e->var);
        return;
    case Kind::Add:
        child(e->a, precedence(e->a) < 1);
        out += " + ";
        child(e->b, precedence(e->b) <= 1);
        return;
    case Kind::Sub:
        child(e->a, precedence(e->a) < 1);
        out += " - ";
        child(e->b, precedence(e->b) <= 1);
        return;
    case Kind::Mul:
        child(e->a, precedence(e->a) < 2);
        out += " * ";
        child(e->b, precedence(e->b) <= 2);
        return;
    case Kind::Div:
        child(e->a, precedence(e->a) < 2);
        out += " / ";
        child(e->b, precedence(e->b) <= 2);
        return;
    case Kind::Neg:
        out += '-';
        child(e->a, precedence(e->a) < 3);
        return;
    case Kind::Pow:
        child(e->a, precedence(e->a) <= 4);
        out += '^';
        child(e->b, precedence(e->b) < 3);
        return;
    case Kind::Call1:
        out += fn1_name(e->fn1);
        out += '(';
        print(e->a, out);
        out += ')';
        return;
    case Kind::Call2:
        out += fn2_name(e->fn2);
        out += '(';
        print(e->a, out);
        out += ", ";
        print(e->b, out);
        out += ')';
        return;
    }
}

// --------------------------------------------------------------- evaluation

[[noreturn]] void domain_error(const std::string& what) {
    throw EvalError(EvalError::Cause::Domain, what);
}

double checked(double v, const char* op) {
    if (!std::isfinite(v))
        throw EvalError(EvalError::Cause::Overflow,
                        std::string("non-finite result in '") + op + "'");
    return v;
}

} // namespace

Expression parse(std::string_view source) { return Parser(source).run(); }

std::string to_string(const Expression& e) {
    std::string out;
    print(e, out);
    return out;
}

double evaluate(const Expression& e, const EvalPoint& p) {
    switch (e->kind) {
    case Kind::Number: return e->value;
    case Kind::Variable:
        if (e->var == 0) return p.t;
        if (e->var > static_cast<int>(p.x.size()))
            throw EvalError(EvalError::Cause::UnknownVariable,
                            "variable x" + std::to_string(e->var) + " exceeds point dimension " +
                                std::to_string(p.x.size()));
        return p.x[static_cast<std::size_t>(e->var - 1)];
    case Kind::Add: return checked(evaluate(e->a, p) + evaluate(e->b, p), "+");
    case Kind::Sub: return checked(evaluate(e->a, p) - evaluate(e->b, p), "-");
    case Kind::Mul: return checked(evaluate(e->a, p) * evaluate(e->b, p), "*");
    case Kind::Div: {
        double num = evaluate(e->a, p);
        double den = evaluate(e->b, p);
        if (den == 0.0) domain_error("division by zero");
        return checked(num / den, "/");
    }
    case Kind::Pow: {
        double base = evaluate(e->a, p);
        double ex = evaluate(e->b, p);
        double v = std::pow(base, ex);
        if (std::isnan(v)) domain_error("invalid power (negative base with non-integer exponent)");
        return checked(v, "^");
    }
    case Kind::Neg: return -evaluate(e->a, p);
    case Kind::Call1: {
        double u = evaluate(e->a, p);
        switch (e->fn1) {
        case Fn1::Exp: return checked(std::exp(u), "exp");
        case Fn1::Ln:
            if (u <= 0.0) domain_error("ln of non-positive value");
            return checked(std::log(u), "ln");
        case Fn1::Sqrt:
            if (u < 0.0) domain_error("sqrt of negative value");
            return std::sqrt(u);
        case Fn1::Abs: return std::abs(u);
        case Fn1::Sin: return std::sin(u);
        case Fn1::Cos: return std::cos(u);
        case Fn1::Tanh: return std::tanh(u);
        case Fn1::Sign: return u >= 0.0 ? 1.0 : -1.0;
        }
        break;
    }
    case Kind::Call2: {
        double u = evaluate(e->a, p);
        double v = evaluate(e->b, p);
        return e->fn2 == Fn2::Min ? std::min(u, v) : std::max(u, v);
    }
    }
    domain_error("corrupt expression node");
}

// --------------------------------------------------- folding constructors

Expression number(double v) {
    Node n;
    n.kind = Kind::Number;
    n.value = v;
    return make(std::move(n));
}

Expression variable(int var) {
    Node n;
    n.kind = Kind::Variable;
    n.var = var;
    return make(std::move(n));
}

Expression add(Expression a, Expression b) {
    if (is_number(a, 0)) return b;
    if (is_number(b, 0)) return a;
    if (a->kind == Kind::Number && b->kind == Kind::Number) return number(a->value + b->value);
    Node n;
    n.kind = Kind::Add;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

Expression sub(Expression a, Expression b) {
    if (is_number(b, 0)) return a;
    if (is_number(a, 0)) return neg(std::move(b));
    if (a->kind == Kind::Number && b->kind == Kind::Number) return number(a->value - b->value);
    Node n;
    n.kind = Kind::Sub;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

Expression mul(Expression a, Expression b) {
    if (is_number(a, 0) || is_number(b, 0)) return number(0);
    if (is_number(a, 1)) return b;
    if (is_number(b, 1)) return a;
    if (a->kind == Kind::Number && b->kind == Kind::Number) return number(a->value * b->value);
    Node n;
    n.kind = Kind::Mul;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

Expression div(Expression a, Expression b) {
    if (is_number(a, 0)) return number(0);
    if (is_number(b, 1)) return a;
    Node n;
    n.kind = Kind::Div;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

Expression pow(Expression a, Expression b) {
    if (is_number(b, 1)) return a;
    if (is_number(b, 0)) return number(1);
    Node n;
    n.kind = Kind::Pow;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

Expression neg(Expression a) {
    if (a->kind == Kind::Number) return number(-a->value);
    if (a->kind == Kind::Neg) return a->a;
    Node n;
    n.kind = Kind::Neg;
    n.a = std::move(a);
    return make(std::move(n));
}

Expression call(Fn1 f, Expression a) {
    Node n;
    n.kind = Kind::Call1;
    n.fn1 = f;
    n.a = std::move(a);
    return make(std::move(n));
}

Expression call(Fn2 f, Expression a, Expression b) {
    Node n;
    n.kind = Kind::Call2;
    n.fn2 = f;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

// ----------------------------------------------------------- differentiate

namespace {

Expression diff(const Expression& e, int var, bool& kink) {
    switch (e->kind) {
    case Kind::Number: return number(0);
    case Kind::Variable: return number(e->var == var ? 1 : 0);
    case Kind::Add: return add(diff(e->a, var, kink), diff(e->b, var, kink));
    case Kind::Sub: return sub(diff(e->a, var, kink), diff(e->b, var, kink));
    case Kind::Mul:
        return add(mul(diff(e->a, var, kink), e->b), mul(e->a, diff(e->b, var, kink)));
    case Kind::Div: {
        Expression da = diff(e->a, var, kink);
        Expression db = diff(e->b, var, kink);
        // (a/b)' = a'/b - a b'/b^2
        return sub(div(da, e->b), div(mul(e->a, db), pow(e->b, number(2))));
    }
    case Kind::Pow: {
        Expression da = diff(e->a, var, kink);
        Expression db = diff(e->b, var, kink);
        if (e->b->kind == Kind::Number) {
            // d(a^c) = c * a^(c-1) * a'
            double c = e->b->value;
            return mul(mul(number(c), pow(e->a, number(c - 1))), da);
        }
        // d(a^b) = a^b * (b' ln a + b a'/a)
        Expression t1 = mul(db, call(Fn1::Ln, e->a));
        Expression t2 = div(mul(e->b, da), e->a);
        return mul(pow(e->a, e->b), add(t1, t2));
    }
    case Kind::Neg: return neg(diff(e->a, var, kink));
    case Kind::Call1: {
        Expression da = diff(e->a, var, kink);
        switch (e->fn1) {
        case Fn1::Exp: return mul(call(Fn1::Exp, e->a), da);
        case Fn1::Ln: return div(da, e->a);
        case Fn1::Sqrt: return div(da, mul(number(2), call(Fn1::Sqrt, e->a)));
        case Fn1::Abs:
            kink = true;
            return mul(call(Fn1::Sign, e->a), da);
        case Fn1::Sin: return mul(call(Fn1::Cos, e->a), da);
        case Fn1::Cos: return neg(mul(call(Fn1::Sin, e->a), da));
        case Fn1::Tanh: {
            // 1 - tanh^2
            Expression th = call(Fn1::Tanh, e->a);
            return mul(sub(number(1), mul(th, th)), da);
        }
        case Fn1::Sign:
            kink = true;
            return number(0);
        }
        break;
    }
    case Kind::Call2: {
        Expression da = diff(e->a, var, kink);
        Expression db = diff(e->b, var, kink);
        kink = true;
        // min = (a+b-|a-b|)/2, max = (a+b+|a-b|)/2; sign() selects the branch,
        // ties resolve by the right-hand convention sign(0) = +1.
        Expression s = call(Fn1::Sign, sub(e->a, e->b));
        Expression diffab = sub(da, db);
        Expression comb = (e->fn2 == Fn2::Min) ? sub(add(da, db), mul(s, diffab))
                                               : add(add(da, db), mul(s, diffab));
        return div(comb, number(2));
    }
    }
    return number(0);
}

} // namespace

Derivative differentiate(const Expression& e, int var) {
    Derivative d;
    d.expr = diff(e, var, d.kink);
    return d;
}

Derivative differentiate(const Expression& e, std::string_view var_name) {
    return differentiate(e, variable_index(var_name));
}

int variable_index(std::string_view name) {
    if (name == "t") return 0;
    if (name.size() >= 2 && name[0] == 'x') {
        int v = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) v = -1;
            if (v >= 0) v = v * 10 + (name[i] - '0');
        }
        if (v >= 1) return v;
    }
    throw std::invalid_argument("not a variable name: " + std::string(name));
}

bool structurally_equal(const Expression& lhs, const Expression& rhs) {
    if (lhs.get() == rhs.get()) return true;
    if (lhs->kind != rhs->kind) return false;
    switch (lhs->kind) {
    case Kind::Number:
        return lhs->value == rhs->value ||
               (std::isnan(lhs->value) && std::isnan(rhs->value));
    case Kind::Variable: return lhs->var == rhs->var;
    case Kind::Neg: return structurally_equal(lhs->a, rhs->a);
    case Kind::Call1:
        return lhs->fn1 == rhs->fn1 && structurally_equal(lhs->a, rhs->a);
    case Kind::Call2:
        return lhs->fn2 == rhs->fn2 && structurally_equal(lhs->a, rhs->a) &&
               structurally_equal(lhs->b, rhs->b);
    default:
        return structurally_equal(lhs->a, rhs->a) && structurally_equal(lhs->b, rhs->b);
    }
}

int max_space_dim(const Expression& e) {
    int m = 0;
    if (e->kind == Kind::Variable) return e->var;
    if (e->a) m = std::max(m, max_space_dim(e->a));
    if (e->b) m = std::max(m, max_space_dim(e->b));
    return m;
}

bool depends_on(const Expression& e, int var) {
    if (e->kind == Kind::Variable) return e->var == var;
    if (e->a && depends_on(e->a, var)) return true;
    if (e->b && depends_on(e->b, var)) return true;
    return false;
}

} // namespace fpkit::expr
