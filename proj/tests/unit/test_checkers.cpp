#include "doctest.h"

#include "fpkit/checkers.hpp"
#include "fpkit/evolve.hpp"
#include "fpkit/generator.hpp"
#include "fpkit/harness.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace fpkit;

namespace {

CoefficientSet coeffs_1d(const char* a11, const char* rho) {
    CoefficientSet c;
    c.dim = 1;
    c.a[0][0] = expr::parse(a11);
    c.rho = expr::parse(rho);
    return c;
}

CoefficientSet coeffs_2d(const char* a11, const char* a22, const char* rho,
                         const char* a12 = nullptr) {
    CoefficientSet c;
    c.dim = 2;
    c.a[0][0] = expr::parse(a11);
    c.a[1][1] = expr::parse(a22);
    if (a12) c.a[0][1] = expr::parse(a12);
    c.rho = expr::parse(rho);
    return c;
}

} // namespace

TEST_CASE("H1 recovers the ellipticity window of diag(1 + x1^2, 1)") {
    Grid g = Grid::make_2d(-4.0, 4.0, 64, -4.0, 4.0, 64);
    CoefficientSet c = coeffs_2d("1 + x1^2", "1", "1");
    std::vector<Ball> balls = {{{0.0, 0.0}, 1.0}};
    ConditionReport rep = check_H1(c, g, balls);
    CHECK(rep.id == "H1");
    CHECK(rep.verdict == Verdict::Pass);
    // gamma = 1 exactly; M = sup(1 + x1^2) over the sampled unit ball
    CHECK(rep.witnesses.at("ball1.gamma") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.witnesses.at("ball1.M") == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("H1 flags degeneracy that survives refinement") {
    Grid g = Grid::make_2d(-4.0, 4.0, 64, -4.0, 4.0, 64);
    CoefficientSet c = coeffs_2d("x1^2", "1", "1");
    std::vector<Ball> balls = {{{0.0, 0.0}, 1.0}};
    ConditionReport rep = check_H1(c, g, balls);
    CHECK(rep.verdict == Verdict::Fail);
    CHECK(std::abs(rep.witnesses.at("witness_x1")) < 0.1);
}

TEST_CASE("H2 accepts lipschitz entries and rejects a hoelder kink") {
    Grid g = Grid::make_1d(-2.0, 2.0, 64);
    std::vector<Ball> balls = {{{0.0, 0.0}, 1.0}};

    ConditionReport smooth = check_H2(coeffs_1d("1 + sin(x1)", "1"), g, balls);
    CHECK(smooth.verdict == Verdict::Pass);
    CHECK(smooth.witnesses.at("ball1.Lambda") == doctest::Approx(1.0).epsilon(0.05));

    ConditionReport corner = check_H2(coeffs_1d("abs(x1)", "1"), g, balls);
    CHECK(corner.verdict == Verdict::Pass); // |x| is lipschitz with constant 1

    ConditionReport kink = check_H2(coeffs_1d("sqrt(abs(x1))", "1"), g, balls);
    CHECK(kink.verdict == Verdict::Fail);
    CHECK(std::abs(kink.witnesses.at("witness_x1")) < 0.1);
}

TEST_CASE("H3/H4 compare the full box against the half box") {
    Grid g = Grid::make_1d(-8.0, 8.0, 128);
    ConditionReport flat = check_H3_H4(coeffs_1d("1", "1"), g);
    CHECK(flat.id == "H3-H4");
    REQUIRE(flat.items.size() == 2);
    CHECK(flat.items[0].id == "H3");
    CHECK(flat.items[1].id == "H4");
    CHECK(flat.verdict == Verdict::Pass);

    // the confining weight derives an unbounded drift: H4 must reject it
    ConditionReport conf = check_H3_H4(coeffs_1d("1", "exp(-x1^2)"), g);
    CHECK(conf.items[0].verdict == Verdict::Pass);
    CHECK(conf.items[1].verdict == Verdict::Fail);

    // quadratically growing ellipticity ratio: M/gamma quadruples with the box
    ConditionReport grow = check_H3_H4(coeffs_1d("1 + x1^2", "1"), g);
    CHECK(grow.items[0].verdict == Verdict::Fail);

    // drift sup doubles with the box
    CoefficientSet c = coeffs_1d("1", "1");
    c.b[0] = expr::parse("x1");
    ConditionReport drift = check_H3_H4(c, g);
    CHECK(drift.items[1].verdict == Verdict::Fail);
}

TEST_CASE("base assumptions accept the ou pair and reject sign violations") {
    Grid g = Grid::make_1d(-8.0, 8.0, 128);
    ConditionReport ok = check_A(coeffs_1d("1", "exp(-x1^2)"), g);
    CHECK(ok.id == "A");
    CHECK(ok.verdict == Verdict::Pass);

    CoefficientSet pos_c = coeffs_1d("1", "1");
    pos_c.c = expr::parse("x1"); // positive on half the box
    ConditionReport bad = check_A(pos_c, g);
    CHECK(bad.verdict == Verdict::Fail);

    Grid g2 = Grid::make_2d(-2.0, 2.0, 32, -2.0, 2.0, 32);
    ConditionReport indef = check_A(coeffs_2d("1", "1", "1", "2"), g2);
    CHECK(indef.verdict == Verdict::Fail);
    CHECK(indef.witnesses.at("min_eigenvalue") < 0.0);
}

TEST_CASE("oscillation of a linear field matches the uniform-pair mean") {
    Grid g = Grid::make_1d(-2.0, 2.0, 256);
    auto osc = vmo_oscillation(expr::parse("x1"), {0.25, 0.5}, g, 7);
    REQUIRE(osc.size() == 2);
    CHECK(osc[0].first == 0.25);
    CHECK(osc[1].first == 0.5);
    // E|y - z| over a segment of length 2r is 2r/3; the sup over centers adds
    // sampling spread on top, so the band is one-sided-tight only from below
    for (const auto& [r, value] : osc) {
        CHECK(value > 0.9 * (2.0 * r / 3.0));
        CHECK(value < 1.6 * (2.0 * r / 3.0));
    }
    CHECK(osc[0].second < osc[1].second);
}

TEST_CASE("vmo check passes constants and continuous entries, fails a sharp jump") {
    Grid g = Grid::make_1d(-2.0, 2.0, 256);
    ConditionReport flat = check_vmo(coeffs_1d("2", "1"), g);
    CHECK(flat.id == "VMO");
    CHECK(flat.verdict == Verdict::Pass);
    CHECK(flat.witnesses.at("a11.O_max") <= 1e-12);

    ConditionReport smooth = check_vmo(coeffs_1d("1 + sin(x1)", "1"), g);
    CHECK(smooth.verdict == Verdict::Pass);
    CHECK(smooth.witnesses.at("a11.O_min") < 0.6 * smooth.witnesses.at("a11.O_max") + 1e-12);

    ConditionReport jump = check_vmo(coeffs_1d("1 + tanh(100*x1)", "1"), g);
    CHECK(jump.verdict == Verdict::Fail);
}

TEST_CASE("lyapunov sweep accepts confining drift with a small constant") {
    Grid g = Grid::make_1d(-8.0, 8.0, 256);
    ConditionReport rep = check_lyapunov(coeffs_1d("1", "exp(-x1^2)"), g);
    CHECK(rep.id == "LYAP");
    CHECK(rep.verdict == Verdict::Pass);
    CHECK(rep.witnesses.at("C") <= 4.0);
}

TEST_CASE("lyapunov sweep rejects strongly outward drift") {
    Grid g = Grid::make_1d(-8.0, 8.0, 256);
    CoefficientSet c = coeffs_1d("1", "1");
    c.b[0] = expr::parse("x1^3");
    ConditionReport rep = check_lyapunov(c, g);
    CHECK(rep.verdict == Verdict::Fail);
    CHECK(rep.witnesses.at("required_C") >
          1.5 * rep.witnesses.at("required_C_half_box"));
}

TEST_CASE("le bris - lions conditions pass for the flat laplacian") {
    Grid g = Grid::make_1d(-8.0, 8.0, 128);
    ConditionReport rep = check_lebris_lions(coeffs_1d("1", "1"), g);
    CHECK(rep.id == "LBL");
    CHECK(rep.verdict == Verdict::Pass);
    REQUIRE(rep.items.size() == 3);
    CHECK(rep.items[0].id == "LBL-divbeta");
    CHECK(rep.items[1].id == "LBL-beta");
    CHECK(rep.items[2].id == "LBL-sigma");
}

TEST_CASE("le bris - lions flags unbounded divergence growth") {
    Grid g = Grid::make_1d(-8.0, 8.0, 128);
    CoefficientSet c = coeffs_1d("1", "1");
    c.b[0] = expr::parse("x1^3");
    ConditionReport rep = check_lebris_lions(c, g);
    CHECK(rep.verdict == Verdict::Fail);
    CHECK(rep.items[0].verdict == Verdict::Fail);
}

TEST_CASE("tail functional decays along the confined reference path") {
    Scenario s = catalog_scenario("ou");
    GeneratorMatrix gen = friedrichs_reference(s.coeffs, s.grid);
    SolutionPath path = solve_fpke(gen, s.initial_measure(), 1e-3, 0.2);
    ConditionReport rep = check_znu_tail(s.coeffs.rho, path, s.grid, {2.0, 4.0});
    CHECK(rep.id == "ZNU-tail");
    CHECK(rep.verdict == Verdict::Pass);
    CHECK(rep.witnesses.at("N2") <= rep.witnesses.at("N1"));
}

TEST_CASE("integrability side conditions separate ou from the outward weight") {
    Scenario ou = catalog_scenario("ou");
    CHECK(check_int43(ou.coeffs, ou.grid).verdict == Verdict::Pass);
    CHECK(check_int48(ou.coeffs, ou.grid).verdict == Verdict::Pass);
    ConditionReport lp = check_rho_lp47(ou.coeffs, ou.grid);
    CHECK(lp.verdict == Verdict::Pass);
    CHECK(lp.witnesses.at("p") == 4.0);

    Scenario outward = catalog_scenario("outward");
    CHECK(check_int43(outward.coeffs, outward.grid).verdict == Verdict::Fail);
    CHECK(check_int48(outward.coeffs, outward.grid).verdict == Verdict::Fail);
}

TEST_CASE("weight class accepts the normalized gaussian") {
    Scenario s = catalog_scenario("degenerate");
    ConditionReport rep = check_rho_class48(s.coeffs, s.grid);
    CHECK(rep.id == "RHO-CLASS48");
    CHECK(rep.verdict == Verdict::Pass);
    REQUIRE(rep.items.size() == 3);
    CHECK(rep.items[0].witnesses.at("total_mass") == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("theorem routing follows pass, fail and missing conditions") {
    Scenario s = catalog_scenario("ou"); // c = 0, rho != 1, weighted form

    auto mk = [](const char* id, Verdict v) {
        ConditionReport r;
        r.id = id;
        r.verdict = v;
        return r;
    };

    std::vector<ConditionReport> reports = {
        mk("A", Verdict::Pass),       mk("H1", Verdict::Pass),
        mk("VMO", Verdict::Pass),     mk("INT43", Verdict::Pass),
        mk("H2", Verdict::Pass),      mk("RHO-LP47", Verdict::Pass),
        mk("LYAP", Verdict::Fail),    mk("LBL", Verdict::Pass),
    };
    auto verdicts = theorem_applicability(reports, s);
    REQUIRE(verdicts.size() == 5);

    CHECK(verdicts[0].theorem == "Thm 4.3");
    CHECK(verdicts[0].status == Applicability::Applicable);
    CHECK(verdicts[0].blocking.empty());

    // INT48 was never computed
    CHECK(verdicts[1].theorem == "Thm 4.4");
    CHECK(verdicts[1].status == Applicability::Inconclusive);
    CHECK(verdicts[1].blocking == "INT48");

    CHECK(verdicts[2].theorem == "Thm 4.6");
    CHECK(verdicts[2].status == Applicability::NotApplicable);
    CHECK(verdicts[2].blocking == "LYAP");

    // rho is not the flat weight
    CHECK(verdicts[3].theorem == "Thm 4.7");
    CHECK(verdicts[3].status == Applicability::NotApplicable);
    CHECK(verdicts[3].blocking == "RHO1");

    // weighted form, not the rho2a tag
    CHECK(verdicts[4].theorem == "Thm 4.8");
    CHECK(verdicts[4].status == Applicability::NotApplicable);
    CHECK(verdicts[4].blocking == "FORM-RHO2A");
}

TEST_CASE("routing searches items of composite reports by id") {
    Scenario s = catalog_scenario("degenerate"); // rho2a form, c = 0
    ConditionReport h34;
    h34.id = "H3-H4";
    h34.verdict = Verdict::Pass;
    ConditionReport h3;
    h3.id = "H3";
    h3.verdict = Verdict::Pass;
    h34.items.push_back(h3);
    ConditionReport rc;
    rc.id = "RHO-CLASS48";
    rc.verdict = Verdict::Pass;

    auto verdicts = theorem_applicability({h34, rc}, s);
    CHECK(verdicts[4].theorem == "Thm 4.8");
    CHECK(verdicts[4].status == Applicability::Applicable);
}

TEST_CASE("verdict names round trip") {
    CHECK(applicability_name(Applicability::Applicable) == "applicable");
    CHECK(applicability_from_name("not applicable") == Applicability::NotApplicable);
    CHECK(verdict_name(Verdict::Pass) == "pass");
    CHECK(verdict_from_name("inconclusive") == Verdict::Inconclusive);
    CHECK(combine(Verdict::Pass, Verdict::Inconclusive) == Verdict::Inconclusive);
    CHECK(combine(Verdict::Inconclusive, Verdict::Fail) == Verdict::Fail);
    CHECK(combine(Verdict::Pass, Verdict::Pass) == Verdict::Pass);
}
