#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fpkit/checkers.hpp"
#include "fpkit/evolve.hpp"
#include "fpkit/scenario.hpp"

namespace fpkit {

// Outcome of one Neumann-vs-Dirichlet comparison: difference curves against
// the convex midpoint, mass and boundary-mass monitors per extension (the
// boundary monitor certifies that the truncated box was effectively
// unreachable), the residual battery, and the condition/theorem summaries.
struct ExperimentResult {
    std::string scenario;
    std::vector<std::string> generator_tags;
    std::vector<double> times;
    std::vector<double> sup_difference_curve;
    std::vector<double> l1_difference_curve;
    double sup_difference = 0.0;
    double l1_difference = 0.0;
    std::map<std::string, std::vector<double>> mass_curves;
    std::map<std::string, std::vector<double>> boundary_mass; // mass within 2h of the wall
    std::vector<std::pair<std::string, double>> residuals;
    std::vector<ConditionReport> checks;
    std::vector<TheoremVerdict> theorems;

    Verdict worst_verdict() const;
    nlohmann::ordered_json to_json() const;
    // inverse of to_json (used when re-rendering reports from saved runs)
    static ExperimentResult from_json(const nlohmann::ordered_json& j);
};

// Bundled scenarios: "ou", "ou-killing", "degenerate", "vmo2d", "outward".
std::vector<std::string> catalog_names();
Scenario catalog_scenario(const std::string& name);

// Gaussian-weight scenario on [-halfwidth, halfwidth]; cell width stays 1/32
// when n = 64 * halfwidth, which the box-monotonicity experiment relies on.
Scenario make_ou_scenario(double halfwidth, int n, double dt = 1e-3, double T = 1.0);

// Drift expressions for the one-dimensional solvability table.
std::vector<std::string> hille_drift_catalog();

// Scenario rebuilt on a different resolution (same box and coefficients).
Scenario with_resolution(Scenario s, int n1, int n2 = 0);

// Every condition checker on one scenario. A path is solved with the
// reference extension when the caller does not supply one (the path-dependent
// growth and tail checks need it). For the rho2a form the box-level
// ellipticity check runs on the underlying shape matrix a/rho. The seed
// drives the oscillation sampler only.
std::vector<ConditionReport> run_checkers(const Scenario& scenario,
                                          const SolutionPath* path = nullptr,
                                          std::uint64_t seed = 7);

// Solves the scenario under both closures, compares the paths cellwise
// against their convex midpoint, and attaches checkers, theorem routing and
// the residual battery. Requires the initial bump to keep at least 10% of
// the box width away from the boundary.
ExperimentResult run_uniqueness_proxy(const Scenario& scenario, int threads = 1,
                                      std::uint64_t seed = 7);

struct StudyRow {
    std::string quantity;
    double dt = 0.0;
    int n = 0;
    double value = 0.0;
    double ratio = 0.0; // previous rung / this rung, 0 on the first rung
};

struct StudyTable {
    std::string scenario;
    std::vector<StudyRow> rows;

    // log2 of the mean rung ratio for one quantity
    double measured_order(const std::string& quantity) const;
    nlohmann::ordered_json to_json() const;
    std::string to_csv() const;
};

// Time-step ladder for the residual battery (weak residual, duality defect,
// mass balance) plus a resolution ladder for the interior consistency error
// against the expanded operator.
StudyTable run_convergence_study(const Scenario& scenario, const std::vector<double>& dts,
                                 const std::vector<int>& resolutions, int threads = 1);

// report.json + report.md + curves.csv under out_dir, deterministic given
// the results (sections ordered by scenario name).
void render_report(std::vector<ExperimentResult> results, const std::filesystem::path& out_dir);
std::string render_markdown(std::vector<ExperimentResult> results);

// Runs `work(i)` for i in [0, tasks) on up to `threads` workers; the first
// exception thrown is rethrown after all workers join.
void parallel_for(int tasks, int threads, const std::function<void(int)>& work);

} // namespace fpkit
