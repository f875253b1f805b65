#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fpkit::expr {

enum class Kind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call1, Call2 };
enum class Fn1 { Exp, Ln, Sqrt, Abs, Sin, Cos, Tanh, Sign };
enum class Fn2 { Min, Max };

class Node;
using Expression = std::shared_ptr<const Node>;

// Immutable AST node. Variable index 0 is t, 1.. are x1, x2, ...
class Node {
public:
    Kind kind;
    double value = 0.0;
    int var = 0;
    Fn1 fn1 = Fn1::Exp;
    Fn2 fn2 = Fn2::Min;
    Expression a;
    Expression b;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::string expected, const std::string& what)
        : std::runtime_error(what), offset_(offset), expected_(std::move(expected)) {}
    std::size_t offset() const { return offset_; }
    // comma-separated token classes that would have been accepted
    const std::string& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

class EvalError : public std::runtime_error {
public:
    enum class Cause { Domain, Overflow, UnknownVariable };
    EvalError(Cause cause, const std::string& what) : std::runtime_error(what), cause_(cause) {}
    Cause cause() const { return cause_; }

private:
    Cause cause_;
};

struct EvalPoint {
    double t = 0.0;
    std::span<const double> x;
};

struct Derivative {
    Expression expr;
    bool kink = false; // one-sided convention was used somewhere (abs/min/max/sign)
};

Expression parse(std::string_view source);
std::string to_string(const Expression& e);
double evaluate(const Expression& e, const EvalPoint& p);
Derivative differentiate(const Expression& e, int var);
Derivative differentiate(const Expression& e, std::string_view var_name);

bool structurally_equal(const Expression& lhs, const Expression& rhs);
int max_space_dim(const Expression& e);      // highest x-index present (0 if none)
bool depends_on(const Expression& e, int var);
int variable_index(std::string_view name);   // "t" -> 0, "x3" -> 3; throws on bad name

// Building blocks with light constant folding (used by symbolic drift etc.)
Expression number(double v);
Expression variable(int var);
Expression add(Expression a, Expression b);
Expression sub(Expression a, Expression b);
Expression mul(Expression a, Expression b);
Expression div(Expression a, Expression b);
Expression pow(Expression a, Expression b);
Expression neg(Expression a);
Expression call(Fn1 f, Expression a);
Expression call(Fn2 f, Expression a, Expression b);

} // namespace fpkit::expr
