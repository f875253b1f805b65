#include "doctest.h"

#include "fpkit/coefficients.hpp"
#include "fpkit/harness.hpp"
#include "fpkit/measure.hpp"
#include "fpkit/scenario.hpp"

#include <cmath>
#include <string>

using namespace fpkit;

namespace {

const char* kMinimal = R"ini(
[grid]
dim = 1
lo1 = -2
hi1 = 2
n1 = 16

[coefficients]
a11 = "1"
rho = "exp(-x1^2)"

[initial]
u = "max(0, 1 - x1^2)"

[time]
T = 0.5
dt = 0.01

[run]
name = "minimal"
extensions = "neumann"
)ini";

} // namespace

TEST_CASE("scenario text parses with defaults filled in") {
    Scenario s = parse_scenario(kMinimal);
    CHECK(s.name == "minimal");
    CHECK(s.grid.dim() == 1);
    CHECK(s.grid.cells() == 16);
    CHECK(s.T == 0.5);
    CHECK(s.dt == 0.01);
    CHECK(s.form == OperatorForm::Weighted);
    REQUIRE(s.extensions.size() == 1);
    CHECK(s.extensions[0] == Extension::Neumann);
    CHECK_FALSE(s.coeffs.has_explicit_drift());
    CHECK_FALSE(s.coeffs.has_sigma());
    // optional c defaults to absent or zero everywhere
    for (std::size_t i = 0; i < s.grid.cells(); ++i)
        CHECK(s.coeffs.c_at(s.grid.point(i)) == 0.0);
}

TEST_CASE("initial measure is a probability measure supported where u > 0") {
    Scenario s = parse_scenario(kMinimal);
    DiscreteMeasure nu = s.initial_measure();
    CHECK(nu.cells() == s.grid.cells());
    CHECK(nu.total() == doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t i = 0; i < nu.cells(); ++i) {
        CHECK(nu.masses()[i] >= 0.0);
        if (std::abs(s.grid.point(i)[0]) > 1.1) CHECK(nu.masses()[i] == 0.0);
    }
}

TEST_CASE("measure constructor clamps tolerance-level negatives and rejects worse") {
    Grid g = Grid::make_1d(0.0, 1.0, 4);
    DiscreteMeasure m(g, {0.5, -5e-13, 0.25, 0.25});
    CHECK(m.masses()[1] == 0.0);
    CHECK_THROWS(DiscreteMeasure(g, {0.5, -1e-6, 0.25, 0.25}));
    CHECK_THROWS(DiscreteMeasure(g, {0.9, 0.9, 0.9, 0.9})); // total exceeds 1
    CHECK_THROWS(DiscreteMeasure(g, {0.5, 0.5})); // wrong size
}

TEST_CASE("normalize_initial rejects bad inputs") {
    Grid g = Grid::make_1d(0.0, 1.0, 4);
    CHECK_THROWS(normalize_initial({1.0, -0.5, 1.0, 1.0}, {1, 1, 1, 1}, g));
    CHECK_THROWS(normalize_initial({0.0, 0.0, 0.0, 0.0}, {1, 1, 1, 1}, g));
    DiscreteMeasure m = normalize_initial({1.0, 0.0, 0.0, 3.0}, {1, 1, 1, 1}, g);
    CHECK(m.total() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.masses()[3] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("validation rejects indefinite diffusion, bad weight and positive killing") {
    Grid g = Grid::make_1d(-1.0, 1.0, 8);

    CoefficientSet bad_a;
    bad_a.dim = 1;
    bad_a.a[0][0] = expr::parse("x1"); // negative on half the box
    bad_a.rho = expr::parse("1");
    CHECK_THROWS(bad_a.validate_on(g));

    CoefficientSet bad_rho;
    bad_rho.dim = 1;
    bad_rho.a[0][0] = expr::parse("1");
    bad_rho.rho = expr::parse("x1");
    CHECK_THROWS(bad_rho.validate_on(g));

    CoefficientSet bad_c;
    bad_c.dim = 1;
    bad_c.a[0][0] = expr::parse("1");
    bad_c.rho = expr::parse("1");
    bad_c.c = expr::parse("0.5");
    CHECK_THROWS(bad_c.validate_on(g));

    Grid g2 = Grid::make_2d(-1.0, 1.0, 8, -1.0, 1.0, 8);
    CoefficientSet cross;
    cross.dim = 2;
    cross.a[0][0] = expr::parse("1");
    cross.a[1][1] = expr::parse("1");
    cross.a[0][1] = expr::parse("2"); // eigenvalues -1 and 3
    cross.rho = expr::parse("1");
    CHECK_THROWS(cross.validate_on(g2));
    cross.a[0][1] = expr::parse("0.5");
    CHECK_NOTHROW(cross.validate_on(g2));
}

TEST_CASE("eigen_range matches the closed form for 2x2 matrices") {
    std::array<std::array<double, 2>, 2> m{{{4.0, 2.0}, {2.0, 2.0}}};
    auto r = eigen_range(m, 2);
    // eigenvalues 3 +- sqrt(5)
    CHECK(r.min == doctest::Approx(3.0 - std::sqrt(5.0)).epsilon(1e-14));
    CHECK(r.max == doctest::Approx(3.0 + std::sqrt(5.0)).epsilon(1e-14));
    std::array<std::array<double, 2>, 2> one{{{7.0, 0.0}, {0.0, 0.0}}};
    auto r1 = eigen_range(one, 1);
    CHECK(r1.min == 7.0);
    CHECK(r1.max == 7.0);
}

TEST_CASE("parse errors point at the offending construct") {
    CHECK_THROWS_AS(parse_scenario("[grid]\nbogus_key = 1\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("[nosuchsection]\n"), ScenarioError);
    std::string text(kMinimal);
    auto broken = text;
    broken.replace(broken.find("\"1\""), 3, "\"1 +\"");
    CHECK_THROWS(parse_scenario(broken));
    auto twod = text;
    twod.replace(twod.find("dim = 1"), 7, "dim = 2");
    CHECK_THROWS_AS(parse_scenario(twod), ScenarioError); // missing lo2/hi2/n2, a22
}

TEST_CASE("fixture files load and agree with the built-in catalog") {
    for (const std::string& name : catalog_names()) {
        CAPTURE(name);
        Scenario from_file = load_scenario(std::string(FPKIT_SCENARIO_DIR) + "/" + name + ".scn");
        Scenario from_catalog = catalog_scenario(name);
        CHECK(from_file.name == from_catalog.name);
        CHECK(from_file.grid.dim() == from_catalog.grid.dim());
        CHECK(from_file.grid.cells() == from_catalog.grid.cells());
        CHECK(from_file.T == from_catalog.T);
        CHECK(from_file.dt == from_catalog.dt);
        CHECK(from_file.extensions == from_catalog.extensions);
        CHECK(expr::structurally_equal(from_file.coeffs.rho, from_catalog.coeffs.rho));
        CHECK(expr::structurally_equal(from_file.initial_u, from_catalog.initial_u));
    }
}

TEST_CASE("catalog scenarios sample cleanly and have unit initial mass") {
    for (const std::string& name : catalog_names()) {
        CAPTURE(name);
        Scenario s = catalog_scenario(name);
        CHECK_NOTHROW(s.coeffs.validate_on(s.grid));
        CHECK(s.initial_measure().total() == doctest::Approx(1.0).epsilon(1e-12));
    }
}
