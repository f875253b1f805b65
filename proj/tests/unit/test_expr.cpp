#include "doctest.h"

#include "fpkit/expr.hpp"
#include "fpkit/numeric.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

using namespace fpkit;

namespace {

double eval_at(const expr::Expression& e, double t, std::vector<double> x) {
    return expr::evaluate(e, {t, x});
}

double eval1(const expr::Expression& e, double x1) { return eval_at(e, 0.0, {x1}); }

} // namespace

TEST_CASE("numbers and operator precedence") {
    CHECK(eval1(expr::parse("2"), 0.0) == 2.0);
    CHECK(eval1(expr::parse("1 + 2*3"), 0.0) == 7.0);
    CHECK(eval1(expr::parse("(1 + 2)*3"), 0.0) == 9.0);
    CHECK(eval1(expr::parse("2^3^2"), 0.0) == 512.0); // right associative
    CHECK(eval1(expr::parse("-2^2"), 0.0) == -4.0);   // neg binds weaker than pow
    CHECK(eval1(expr::parse("6/3/2"), 0.0) == 1.0);
    CHECK(eval1(expr::parse("1 - 2 - 3"), 0.0) == -4.0);
    CHECK(eval1(expr::parse("1.5e2"), 0.0) == 150.0);
}

TEST_CASE("variables") {
    auto e = expr::parse("t + 2*x1 + 3*x2");
    std::vector<double> x = {10.0, 100.0};
    CHECK(expr::evaluate(e, {1.0, x}) == 321.0);
    CHECK(expr::max_space_dim(e) == 2);
    CHECK(expr::depends_on(e, 0));
    CHECK(expr::depends_on(e, 2));
    CHECK_FALSE(expr::depends_on(e, 3));
    CHECK(expr::variable_index("t") == 0);
    CHECK(expr::variable_index("x2") == 2);
    CHECK_THROWS(expr::variable_index("y"));
}

TEST_CASE("function evaluation against frozen values") {
    // ln 2 and friends, frozen to full double precision
    CHECK(eval1(expr::parse("ln(2)"), 0.0) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
    CHECK(eval1(expr::parse("exp(-2)"), 0.0) == doctest::Approx(0.1353352832366127).epsilon(1e-15));
    CHECK(eval1(expr::parse("sqrt(2)"), 0.0) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    CHECK(eval1(expr::parse("sin(1) + cos(1)"), 0.0)
          == doctest::Approx(0.8414709848078965 + 0.5403023058681398).epsilon(1e-15));
    CHECK(eval1(expr::parse("tanh(1)"), 0.0) == doctest::Approx(0.7615941559557649).epsilon(1e-15));
    CHECK(eval1(expr::parse("abs(-3.5)"), 0.0) == 3.5);
    CHECK(eval1(expr::parse("sign(-0.2)"), 0.0) == -1.0);
    CHECK(eval1(expr::parse("sign(0)"), 0.0) == 1.0); // right-hand convention
    CHECK(eval1(expr::parse("min(2, x1)"), 5.0) == 2.0);
    CHECK(eval1(expr::parse("max(0, 1 - x1^2)"), 2.0) == 0.0);
}

TEST_CASE("domain and overflow errors carry a cause") {
    try {
        eval1(expr::parse("ln(x1)"), -1.0);
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(e.cause() == expr::EvalError::Cause::Domain);
    }
    try {
        eval1(expr::parse("sqrt(x1)"), -4.0);
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(e.cause() == expr::EvalError::Cause::Domain);
    }
    try {
        eval1(expr::parse("exp(x1)"), 1e6);
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(e.cause() == expr::EvalError::Cause::Overflow);
    }
    try {
        eval1(expr::parse("1/x1"), 0.0);
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(e.cause() == expr::EvalError::Cause::Domain);
    }
    std::vector<double> one = {1.0};
    try {
        expr::evaluate(expr::parse("x2"), {0.0, one});
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(e.cause() == expr::EvalError::Cause::UnknownVariable);
    }
}

TEST_CASE("parse errors report offset and expectations") {
    try {
        expr::parse("1 + ");
        FAIL("expected ParseError");
    } catch (const expr::ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK_FALSE(e.expected().empty());
    }
    CHECK_THROWS_AS(expr::parse("foo(1)"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("(1 + 2"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("1 2"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse(""), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("min(1)"), expr::ParseError);
}

TEST_CASE("exact derivatives on smooth cases") {
    auto d = expr::differentiate(expr::parse("x1^3"), 1);
    CHECK_FALSE(d.kink);
    CHECK(eval1(d.expr, 2.0) == doctest::Approx(12.0).epsilon(1e-14));

    d = expr::differentiate(expr::parse("exp(-x1^2)"), 1);
    // d/dx e^{-x^2} at x=1 is -2 e^{-1}
    CHECK(eval1(d.expr, 1.0) == doctest::Approx(-0.7357588823428847).epsilon(1e-14));

    d = expr::differentiate(expr::parse("sin(2*x1)"), "x1");
    CHECK(eval1(d.expr, 0.25) == doctest::Approx(2.0 * std::cos(0.5)).epsilon(1e-14));

    d = expr::differentiate(expr::parse("x1 * x2"), 2);
    CHECK(eval_at(d.expr, 0.0, {3.0, 7.0}) == doctest::Approx(3.0).epsilon(1e-14));

    d = expr::differentiate(expr::parse("t^2"), 0);
    CHECK(eval_at(d.expr, 3.0, {}) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("kink flag marks one-sided conventions") {
    CHECK(expr::differentiate(expr::parse("abs(x1)"), 1).kink);
    CHECK(expr::differentiate(expr::parse("max(0, x1)"), 1).kink);
    CHECK(expr::differentiate(expr::parse("min(x1, x1^2)"), 1).kink);
    CHECK(expr::differentiate(expr::parse("abs(2)"), 1).kink); // flag is syntactic
    CHECK_FALSE(expr::differentiate(expr::parse("x1^2 + sin(x1)"), 1).kink);
}

namespace {

// Random expression generator for the differentiation property test. Stays
// inside comfortable domains: compositions are built from bounded pieces so
// central differences are accurate.
expr::Expression random_expr(Rng& rng, int depth) {
    const std::size_t pick = rng.index(depth <= 0 ? 3 : 9);
    switch (pick) {
    case 0: return expr::number(rng.uniform(-2.0, 2.0));
    case 1: return expr::variable(1);
    case 2: return expr::variable(2);
    case 3: return expr::add(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 4: return expr::sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 5: return expr::mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 6: return expr::call(expr::Fn1::Sin, random_expr(rng, depth - 1));
    case 7: return expr::call(expr::Fn1::Cos, random_expr(rng, depth - 1));
    case 8: return expr::call(expr::Fn1::Tanh, random_expr(rng, depth - 1));
    default: return expr::number(1.0);
    }
}

} // namespace

TEST_CASE("derivative matches central differences on 1000 random expressions") {
    Rng rng(2024);
    const double step = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto e = random_expr(rng, 3);
        const int var = 1 + static_cast<int>(rng.index(2));
        auto d = expr::differentiate(e, var);
        REQUIRE_FALSE(d.kink);
        std::array<double, 2> x = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        auto lo = x;
        auto hi = x;
        lo[var - 1] -= step;
        hi[var - 1] += step;
        const double fd = (eval_at(e, 0.0, {hi.begin(), hi.end()})
                           - eval_at(e, 0.0, {lo.begin(), lo.end()}))
                          / (2.0 * step);
        const double exact = eval_at(d.expr, 0.0, {x.begin(), x.end()});
        CHECK(std::abs(fd - exact) <= 1e-5 * (1.0 + std::abs(exact)));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("to_string round trips through the parser") {
    const char* cases[] = {
        "1 + 2*x1",
        "exp(-x1^2)",
        "max(0, 1 - (x1/2)^2)^3",
        "0.2*sin(x1)*sin(x2)",
        "min(x1, 3)/(1 + x2^2)",
        "-(x1^3)",
        "sign(x1)*abs(x2)",
        "2^3^x1",
        "(x1 - 1)/0.5",
        "tanh(t*x1)",
    };
    for (const char* text : cases) {
        CAPTURE(text);
        auto e = expr::parse(text);
        auto round = expr::parse(expr::to_string(e));
        CHECK(expr::structurally_equal(e, round));
    }
}

// Programmatic trees may hold negative literals, which print as unary minus,
// so the round trip is checked by exact evaluation rather than structure.
TEST_CASE("printing preserves meaning exactly on random trees") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto e = random_expr(rng, 4);
        auto round = expr::parse(expr::to_string(e));
        for (int pt = 0; pt < 5; ++pt) {
            std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
            CHECK(expr::evaluate(e, {0.0, x}) == expr::evaluate(round, {0.0, x}));
        }
    }
}

TEST_CASE("builders fold constants") {
    auto e = expr::add(expr::number(1.0), expr::number(2.0));
    CHECK(e->kind == expr::Kind::Number);
    CHECK(e->value == 3.0);
    e = expr::mul(expr::number(0.0), expr::variable(1));
    CHECK(e->kind == expr::Kind::Number);
    CHECK(e->value == 0.0);
    e = expr::mul(expr::number(1.0), expr::variable(1));
    CHECK(e->kind == expr::Kind::Variable);
}
