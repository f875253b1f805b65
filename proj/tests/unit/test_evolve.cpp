#include "doctest.h"

#include "fpkit/evolve.hpp"
#include "fpkit/generator.hpp"
#include "fpkit/harness.hpp"
#include "fpkit/numeric.hpp"
#include "fpkit/scenario.hpp"

#include <cmath>
#include <vector>

using namespace fpkit;

namespace {

CoefficientSet constant_coeffs(const char* a, const char* rho, const char* c = nullptr) {
    CoefficientSet co;
    co.dim = 1;
    co.a[0][0] = expr::parse(a);
    co.rho = expr::parse(rho);
    if (c) co.c = expr::parse(c);
    return co;
}

} // namespace

TEST_CASE("pure killing reproduces the resolvent power closed form") {
    // a = 0 disables transport entirely: L = c = -1, so a backward-Euler step
    // is exact division by (1 + dt).
    Grid g = Grid::make_1d(0.0, 1.0, 8);
    CoefficientSet co = constant_coeffs("0", "1", "-1");
    GeneratorMatrix gen = assemble(co, g, Extension::Neumann);
    const double dt = 0.125;
    auto iterates = step_semigroup(gen, std::vector<double>(8, 1.0), dt, 16);
    REQUIRE(iterates.size() == 17);
    for (int k = 0; k <= 16; ++k) {
        double expect = std::pow(1.0 + dt, -k);
        for (double v : iterates[static_cast<std::size_t>(k)])
            CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("laplacian eigenmode decays at the expected rate") {
    // Neumann eigenfunction cos(pi x) on [0,1]: L phi = -pi^2 phi up to O(h^2),
    // and 200 BE steps of size 5e-5 track e^{-pi^2 t} up to O(dt) + O(h^2).
    Grid g = Grid::make_1d(0.0, 1.0, 512);
    GeneratorMatrix gen = assemble(constant_coeffs("1", "1"), g, Extension::Neumann);
    std::vector<double> u(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) u[i] = std::cos(M_PI * g.center(0, static_cast<int>(i)));
    const double dt = 5e-5;
    auto iterates = step_semigroup(gen, u, dt, 200);
    const double t = 200 * dt;
    const double decay = std::exp(-M_PI * M_PI * t);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        CHECK(std::abs(iterates.back()[i] - u[i] * decay) < 2e-4);
    }
}

TEST_CASE("backward euler keeps iterates inside [0,1] and contracts mass") {
    Scenario s = catalog_scenario("ou");
    for (Extension ext : s.extensions) {
        CAPTURE(extension_name(ext));
        GeneratorMatrix gen = assemble(s.coeffs, s.grid, ext);
        auto rep = check_submarkov(gen, 1e-3, 50, 5, 11);
        CHECK(rep.verdict == Verdict::Pass);
        CHECK(rep.id == "SUBMARKOV");
    }
}

TEST_CASE("solve_fpke conserves mass exactly under the conservative closure") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Neumann);
    SolutionPath path = solve_fpke(gen, s.initial_measure(), 1e-2, 0.2);
    REQUIRE(path.stamps() == 21);
    auto mass = path.mass_curve();
    for (double m : mass) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(path.times.front() == 0.0);
    CHECK(path.times.back() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("absorbing closure loses mass monotonically") {
    Scenario s = catalog_scenario("outward");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Dirichlet);
    SolutionPath path = solve_fpke(gen, s.initial_measure(), 1e-2, 0.25);
    auto mass = path.mass_curve();
    for (std::size_t k = 1; k < mass.size(); ++k) CHECK(mass[k] <= mass[k - 1] + 1e-12);
    CHECK(mass.back() < 0.9); // drift pushes outward, the boundary absorbs
}

TEST_CASE("T must be an integer multiple of dt") {
    Grid g = Grid::make_1d(0.0, 1.0, 8);
    GeneratorMatrix gen = assemble(constant_coeffs("1", "1"), g, Extension::Neumann);
    DiscreteMeasure nu(g, std::vector<double>(8, 0.125));
    CHECK_THROWS(solve_fpke(gen, nu, 0.3, 1.0));
    CHECK_NOTHROW(solve_fpke(gen, nu, 0.25, 1.0));
}

TEST_CASE("killing mass balance identity closes at first order") {
    Scenario s = catalog_scenario("ou-killing");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Neumann);
    auto c_field = sample_field(s.coeffs.c, s.grid);

    double defects[2];
    int k = 0;
    for (double dt : {2e-3, 1e-3}) {
        SolutionPath path = solve_fpke(gen, s.initial_measure(), dt, 0.5);
        defects[k++] = mass_balance_killing(path, c_field);
    }
    CHECK(defects[0] < 5e-3);
    CHECK(defects[0] / defects[1] > 1.8); // order one in dt
}

TEST_CASE("weak residual of the pinned battery shrinks with dt") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Neumann);
    auto battery = standard_test_battery(s.grid, 0.2);
    REQUIRE(battery.size() == 3);

    double worst[2] = {0.0, 0.0};
    int k = 0;
    for (double dt : {4e-3, 2e-3}) {
        SolutionPath path = solve_fpke(gen, s.initial_measure(), dt, 0.2);
        for (const auto& pair : battery)
            worst[k] = std::max(worst[k], weak_residual(path, s.coeffs, pair));
        ++k;
    }
    CHECK(worst[0] < 1e-2);
    CHECK(worst[0] / worst[1] > 1.7);
}

TEST_CASE("duality defect vanishes as dt -> 0") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Neumann);
    auto u = s.initial_density();
    auto battery = standard_test_battery(s.grid, 0.2);
    auto phi = sample_field(battery.front().phi, s.grid);

    double d1 = verify_duality(gen, u, phi, 0.2, 4e-3);
    double d2 = verify_duality(gen, u, phi, 0.2, 2e-3);
    CHECK(d1 < 1e-2);
    CHECK(d1 / d2 > 1.7);
}

TEST_CASE("crank-nicolson beats backward euler on the smooth eigenmode") {
    Grid g = Grid::make_1d(0.0, 1.0, 256);
    GeneratorMatrix gen = assemble(constant_coeffs("1", "1"), g, Extension::Neumann);
    std::vector<double> u(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) u[i] = std::cos(M_PI * g.center(0, static_cast<int>(i)));

    auto time_error = [&](TimeScheme scheme) {
        auto it = step_semigroup(gen, u, 1e-3, 100, scheme);
        // compare against the matrix-exact decay of the discrete eigenmode:
        // the grid cosine is an exact eigenvector of the discrete laplacian
        std::vector<double> lu = gen.apply(u);
        double lambda = lu[128] / u[128];
        double exact = std::exp(lambda * 0.1);
        double worst = 0;
        for (std::size_t i = 0; i < g.cells(); ++i)
            worst = std::max(worst, std::abs(it.back()[i] - exact * u[i]));
        return worst;
    };
    double be = time_error(TimeScheme::BackwardEuler);
    double cn = time_error(TimeScheme::CrankNicolson);
    CHECK(cn < be / 50.0);
}

TEST_CASE("sp membership passes on the reference ou path") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = friedrichs_reference(s.coeffs, s.grid);
    DiscreteMeasure nu = s.initial_measure();
    SolutionPath path = solve_fpke(gen, nu, 1e-3, 0.1);
    ConditionReport rep = check_sp_membership(path, s.coeffs, nu);
    CHECK(rep.id == "SP");
    CHECK(rep.verdict == Verdict::Pass);
    CHECK_FALSE(rep.items.empty());
}

TEST_CASE("midpoint comparison is exactly zero for identical paths") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Neumann);
    SolutionPath path = solve_fpke(gen, s.initial_measure(), 1e-2, 0.1);
    auto d = convex_midpoint_compare(path, path);
    CHECK(d.sup_norm == 0.0);
    CHECK(d.l1_norm == 0.0);
}

TEST_CASE("midpoint comparison sees a planted defect") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = assemble(s.coeffs, s.grid, Extension::Neumann);
    SolutionPath a = solve_fpke(gen, s.initial_measure(), 1e-2, 0.1);
    SolutionPath b = a;
    // move 1% of the mass of one mid-support cell to its neighbor
    std::size_t i = s.grid.cells() / 2;
    double shift = 0.01 * b.measures.back().masses()[i];
    b.measures.back().masses()[i] -= shift;
    b.measures.back().masses()[i + 1] += shift;
    auto d = convex_midpoint_compare(a, b);
    CHECK(d.sup_norm > 1e-3);
    CHECK(d.l1_norm > 1e-4);
    CHECK(d.l1_norm == doctest::Approx(2 * shift).epsilon(1e-9));
}
