#include "doctest.h"

#include "fpkit/harness.hpp"
#include "fpkit/hille1d.hpp"

#include <cmath>
#include <string>

using namespace fpkit;

TEST_CASE("drift antiderivative agrees with closed forms") {
    CHECK(antiderivative_B(expr::parse("-x1"), 2.0) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(antiderivative_B(expr::parse("-x1"), -2.0) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(antiderivative_B(expr::parse("-(x1^3)"), 2.0) == doctest::Approx(-4.0).epsilon(1e-12));
    CHECK(antiderivative_B(expr::parse("x1^3"), 2.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(antiderivative_B(expr::parse("0"), 5.0) == 0.0);
    CHECK(antiderivative_B(expr::parse("exp(-x1^2)"), 1.0)
          == doctest::Approx(0.7468241328124271).epsilon(1e-10)); // sqrt(pi)/2 erf(1)
}

TEST_CASE("zero drift ladder carries the exact partial values x^2/2") {
    auto cls = classify_integral(expr::parse("0"), Tail::PlusInfinity, IntegralVariant::I1);
    CHECK(cls.cls == IntegralClass::Diverges);
    REQUIRE(cls.trace.rung.size() == 13);
    CHECK(cls.trace.rung.front() == 2);
    CHECK(cls.trace.rung.back() == 14);
    for (std::size_t i = 0; i < cls.trace.rung.size(); ++i) {
        // I(2^k) = 2^(2k-1), so log I = (2k-1) log 2
        double expect = (2.0 * cls.trace.rung[i] - 1.0) * std::log(2.0);
        CHECK(cls.trace.log_value[i] == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("inward linear drift diverges slowly, its flip diverges fast") {
    auto slow = classify_integral(expr::parse("-x1"), Tail::PlusInfinity, IntegralVariant::I1);
    CHECK(slow.cls == IntegralClass::Diverges);
    auto fast = classify_integral(expr::parse("-x1"), Tail::PlusInfinity, IntegralVariant::I2);
    CHECK(fast.cls == IntegralClass::Diverges);
    // the swapped-sign integral really is the huge one
    CHECK(fast.trace.log_value.back() > 1e7);
    CHECK(slow.trace.log_value.back() < 10.0);
}

TEST_CASE("steep inward drift makes the first integral converge") {
    auto cls = classify_integral(expr::parse("-(x1^3)"), Tail::PlusInfinity, IntegralVariant::I1);
    CHECK(cls.cls == IntegralClass::Converges);
}

TEST_CASE("second integral equals the first integral of the negated drift") {
    const char* drifts[] = {"0", "-x1", "x1^3", "-(x1^3)"};
    for (const char* d : drifts) {
        CAPTURE(d);
        auto b = expr::parse(d);
        auto flipped = expr::neg(b);
        auto i2 = classify_integral(b, Tail::PlusInfinity, IntegralVariant::I2);
        auto i1 = classify_integral(flipped, Tail::PlusInfinity, IntegralVariant::I1);
        CHECK(i2.cls == i1.cls);
    }
}

TEST_CASE("odd drifts classify identically toward both infinities") {
    const char* drifts[] = {"0", "-x1", "x1^3", "-(x1^3)"};
    for (const char* d : drifts) {
        CAPTURE(d);
        HilleVerdict v = hille_classify(expr::parse(d), 12);
        CHECK(v.i1_plus.cls == v.i1_minus.cls);
        CHECK(v.i2_plus.cls == v.i2_minus.cls);
    }
}

TEST_CASE("solvability table for the drift catalog") {
    struct Row {
        const char* drift;
        Solvable l0;
        Solvable l;
    };
    const Row rows[] = {
        {"0", Solvable::Yes, Solvable::Yes},
        {"-x1", Solvable::Yes, Solvable::Yes},
        {"-(x1^3)", Solvable::No, Solvable::No},
        {"x1^3", Solvable::Yes, Solvable::No},
    };
    for (const Row& row : rows) {
        CAPTURE(row.drift);
        HilleVerdict v = hille_classify(expr::parse(row.drift));
        CHECK(v.problem_l0 == row.l0);
        CHECK(v.problem_l == row.l);
    }
}

TEST_CASE("uniqueness of the generator extension is symmetric under drift flip") {
    for (const std::string& d : hille_drift_catalog()) {
        CAPTURE(d);
        auto b = expr::parse(d);
        HilleVerdict plain = hille_classify(b, 12);
        HilleVerdict flipped = hille_classify(expr::neg(b), 12);
        CHECK(plain.problem_l == flipped.problem_l);
    }
}

TEST_CASE("verdict json carries the classification and the trace") {
    // the convergence rule needs the tail contributions of the full ladder
    HilleVerdict v = hille_classify(expr::parse("-(x1^3)"));
    auto j = v.to_json();
    CHECK(j["drift"] == "-x1^3"); // printer drops the redundant parens
    CHECK(j["I1"]["plus_infinity"]["class"] == "converges");
    CHECK(j["problem_L0_solvable"] == "no");
    CHECK(j["problem_L_solvable"] == "no");
    CHECK(j["I1"]["plus_infinity"]["trace"].size() == 13);
    CHECK(j["I1"]["plus_infinity"]["trace"][0]["cutoff"] == 4.0);
}
