#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fpkit/generator.hpp"
#include "fpkit/harness.hpp"
#include "fpkit/hille1d.hpp"

namespace fs = std::filesystem;
using namespace fpkit;

namespace {

struct CommonOpts {
    std::string scenario;
    std::string out = "out";
    std::string grid_spec;
    std::string box_spec;
    double dt = 0.0;
    int threads = 1;
    std::uint64_t seed = 7;
};

void add_common(CLI::App* sub, CommonOpts& o, bool takes_scenario = true) {
    if (takes_scenario)
        sub->add_option("scenario", o.scenario, "scenario file or catalog name")->required();
    sub->add_option("--out", o.out, "output directory (fixed filenames inside)");
    sub->add_option("--dt", o.dt, "override the scenario time step");
    sub->add_option("--grid", o.grid_spec, "override the resolution, e.g. 512 or 64x48");
    sub->add_option("--box", o.box_spec, "override the box as lo,hi (applied per axis)");
    sub->add_option("--threads", o.threads, "worker threads for independent solves");
    sub->add_option("--seed", o.seed, "seed for sampled estimators");
}

Scenario resolve_scenario(const CommonOpts& o) {
    Scenario sc = [&] {
        for (const auto& name : catalog_names())
            if (name == o.scenario) return catalog_scenario(name);
        return load_scenario(o.scenario);
    }();

    if (!o.box_spec.empty()) {
        double lo, hi;
        char comma;
        std::istringstream is(o.box_spec);
        if (!(is >> lo >> comma >> hi) || comma != ',' || !(lo < hi))
            throw ScenarioError("bad --box value '" + o.box_spec + "', expected lo,hi");
        if (sc.grid.dim() == 1)
            sc.grid = Grid::make_1d(lo, hi, sc.grid.n(0));
        else
            sc.grid = Grid::make_2d(lo, hi, sc.grid.n(0), lo, hi, sc.grid.n(1));
    }
    if (!o.grid_spec.empty()) {
        int n1 = 0, n2 = 0;
        char x;
        std::istringstream is(o.grid_spec);
        is >> n1;
        if (!is) throw ScenarioError("bad --grid value '" + o.grid_spec + "'");
        if (is >> x) {
            if (x != 'x' || !(is >> n2))
                throw ScenarioError("bad --grid value '" + o.grid_spec + "'");
        }
        sc = with_resolution(std::move(sc), n1, n2);
    }
    if (o.dt > 0.0) sc.dt = o.dt;
    sc.coeffs.validate_on(sc.grid);
    return sc;
}

int exit_code(Verdict v) {
    switch (v) {
        case Verdict::Pass: return 0;
        case Verdict::Fail: return 2;
        case Verdict::Inconclusive: return 3;
    }
    return 3;
}

void write_text(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

int run_check(const CommonOpts& o) {
    Scenario sc = resolve_scenario(o);
    auto checks = run_checkers(sc, nullptr, o.seed);
    auto theorems = theorem_applicability(checks, sc);

    Verdict worst = Verdict::Pass;
    for (const auto& c : checks) {
        worst = combine(worst, c.verdict);
        std::cout << c.id << ": " << verdict_name(c.verdict);
        if (!c.note.empty()) std::cout << " (" << c.note << ")";
        std::cout << "\n";
    }
    for (const auto& t : theorems) {
        std::cout << t.theorem << ": " << applicability_name(t.status);
        if (!t.blocking.empty()) std::cout << " (blocked by " << t.blocking << ")";
        std::cout << "\n";
    }

    nlohmann::ordered_json j;
    j["scenario"] = sc.name;
    nlohmann::ordered_json conds = nlohmann::ordered_json::array();
    for (const auto& c : checks) conds.push_back(c.to_json());
    j["conditions"] = conds;
    nlohmann::ordered_json thms = nlohmann::ordered_json::array();
    for (const auto& t : theorems) thms.push_back(t.to_json());
    j["theorems"] = thms;
    write_text(fs::path(o.out) / "checks.json", j.dump(2) + "\n");
    return exit_code(worst);
}

int run_solve(const CommonOpts& o) {
    Scenario sc = resolve_scenario(o);
    Extension ext = sc.extensions.empty() ? Extension::Neumann : sc.extensions.front();
    GeneratorMatrix gen = assemble(sc.coeffs, sc.grid, ext);
    SolutionPath path = solve_fpke(gen, sc.initial_measure(), sc.dt, sc.T,
                                   TimeScheme::BackwardEuler, extension_name(ext));

    fs::create_directories(o.out);
    {
        std::ofstream csv(fs::path(o.out) / "path.csv");
        csv << "t,cell_index,mass\n" << std::setprecision(17);
        for (std::size_t k = 0; k < path.stamps(); ++k) {
            const auto& m = path.measures[k].masses();
            for (std::size_t i = 0; i < m.size(); ++i)
                csv << path.times[k] << "," << i << "," << m[i] << "\n";
        }
    }
    {
        std::ofstream csv(fs::path(o.out) / "final_density.csv");
        csv << (sc.grid.dim() == 1 ? "x1,value\n" : "x1,x2,value\n") << std::setprecision(17);
        const auto& u = path.densities.back();
        for (std::size_t i = 0; i < u.size(); ++i) {
            auto p = sc.grid.point(i);
            csv << p[0];
            if (sc.grid.dim() == 2) csv << "," << p[1];
            csv << "," << u[i] << "\n";
        }
    }
    nlohmann::ordered_json j;
    j["scenario"] = sc.name;
    j["extension"] = extension_name(ext);
    j["scheme"] = std::string(scheme_name(path.scheme));
    j["dt"] = path.dt;
    j["mass_curve"] = path.mass_curve();
    std::vector<std::pair<std::string, double>> residuals;
    {
        GeneratorMatrix reference = friedrichs_reference(sc.coeffs, sc.grid);
        auto battery = standard_test_battery(sc.grid, sc.T);
        for (std::size_t k = 0; k < battery.size(); ++k)
            residuals.emplace_back("weak_residual_" + std::to_string(k + 1),
                                   weak_residual(path, sc.coeffs, battery[k]));
        std::vector<double> phi = sample_field(battery.front().phi, sc.grid);
        residuals.emplace_back("duality_defect",
                               verify_duality(reference, sc.initial_density(), phi, sc.T, sc.dt));
        std::vector<double> c_field(sc.grid.cells(), 0.0);
        if (sc.coeffs.c) c_field = sample_field(sc.coeffs.c, sc.grid);
        residuals.emplace_back("mass_balance", mass_balance_killing(path, c_field));
    }
    nlohmann::ordered_json res = nlohmann::ordered_json::object();
    for (const auto& [name, value] : residuals) res[name] = value;
    j["residuals"] = res;
    write_text(fs::path(o.out) / "summary.json", j.dump(2) + "\n");
    std::cout << "final mass " << std::setprecision(12) << path.mass_curve().back() << " after "
              << path.stamps() - 1 << " steps\n";
    return 0;
}

int run_verify(const CommonOpts& o) {
    Scenario sc = resolve_scenario(o);
    GeneratorMatrix gen = friedrichs_reference(sc.coeffs, sc.grid);
    DiscreteMeasure nu = sc.initial_measure();
    SolutionPath path = solve_fpke(gen, nu, sc.dt, sc.T, TimeScheme::BackwardEuler, "neumann");

    ConditionReport sp = check_sp_membership(path, sc.coeffs, nu);
    ConditionReport sub = check_submarkov(gen, sc.dt, 200, 20, o.seed);

    std::vector<std::pair<std::string, double>> residuals;
    auto battery = standard_test_battery(sc.grid, sc.T);
    for (std::size_t k = 0; k < battery.size(); ++k)
        residuals.emplace_back("weak_residual_" + std::to_string(k + 1),
                               weak_residual(path, sc.coeffs, battery[k]));
    std::vector<double> phi = sample_field(battery.front().phi, sc.grid);
    residuals.emplace_back("duality_defect",
                           verify_duality(gen, sc.initial_density(), phi, sc.T, sc.dt));
    std::vector<double> c_field(sc.grid.cells(), 0.0);
    if (sc.coeffs.c) c_field = sample_field(sc.coeffs.c, sc.grid);
    residuals.emplace_back("mass_balance", mass_balance_killing(path, c_field));

    for (const auto& [name, value] : residuals)
        std::cout << name << ": " << std::setprecision(6) << value << "\n";
    std::cout << sp.id << ": " << verdict_name(sp.verdict) << "\n";
    std::cout << sub.id << ": " << verdict_name(sub.verdict) << "\n";

    nlohmann::ordered_json j;
    j["scenario"] = sc.name;
    nlohmann::ordered_json res = nlohmann::ordered_json::object();
    for (const auto& [name, value] : residuals) res[name] = value;
    j["residuals"] = res;
    j["sp_membership"] = sp.to_json();
    j["submarkov"] = sub.to_json();
    write_text(fs::path(o.out) / "verify.json", j.dump(2) + "\n");
    return exit_code(combine(sp.verdict, sub.verdict));
}

int run_compare(const CommonOpts& o) {
    Scenario sc = resolve_scenario(o);
    ExperimentResult result = run_uniqueness_proxy(sc, o.threads, o.seed);
    render_report({result}, o.out);
    write_text(fs::path(o.out) / "experiment.json", result.to_json().dump(2) + "\n");
    std::cout << "sup difference " << std::setprecision(6) << result.sup_difference
              << ", L1 difference " << result.l1_difference << "\n";
    for (const auto& t : result.theorems) {
        std::cout << t.theorem << ": " << applicability_name(t.status);
        if (!t.blocking.empty()) std::cout << " (blocked by " << t.blocking << ")";
        std::cout << "\n";
    }
    return exit_code(result.worst_verdict());
}

int run_study(const CommonOpts& o) {
    Scenario sc = resolve_scenario(o);
    // halving keeps every rung an integer divisor of T whenever sc.dt is one
    std::vector<double> dts{sc.dt, sc.dt / 2, sc.dt / 4};
    int n0 = sc.grid.n(0);
    std::vector<int> ns{n0 / 2, n0, 2 * n0};
    StudyTable table = run_convergence_study(sc, dts, ns, o.threads);
    write_text(fs::path(o.out) / "study.json", table.to_json().dump(2) + "\n");
    write_text(fs::path(o.out) / "study.csv", table.to_csv());
    for (const auto& q : {"weak_residual", "duality_defect", "mass_balance", "consistency"})
        std::cout << q << " order " << std::setprecision(3) << table.measured_order(q) << "\n";
    return 0;
}

int run_hille(const std::string& drift, int ladder, const std::string& out) {
    HilleVerdict verdict = hille_classify(expr::parse(drift), ladder);
    auto line = [](const char* label, const IntegralClassification& c) {
        std::cout << label << ": " << integral_class_name(c.cls);
        if (!c.diagnostic.empty()) std::cout << " (" << c.diagnostic << ")";
        std::cout << "\n";
    };
    std::cout << "drift " << drift << "\n";
    line("I1 toward +inf", verdict.i1_plus);
    line("I1 toward -inf", verdict.i1_minus);
    line("I2 toward +inf", verdict.i2_plus);
    line("I2 toward -inf", verdict.i2_minus);
    std::cout << "problem L0 solvable: " << solvable_name(verdict.problem_l0) << "\n";
    std::cout << "problem L solvable: " << solvable_name(verdict.problem_l) << "\n";
    write_text(fs::path(out) / "hille.json", verdict.to_json().dump(2) + "\n");

    bool inconclusive = false;
    for (const auto* c : {&verdict.i1_plus, &verdict.i1_minus, &verdict.i2_plus, &verdict.i2_minus})
        inconclusive = inconclusive || c->cls == IntegralClass::Inconclusive;
    return inconclusive ? 3 : 0;
}

int run_report(const std::string& dir, const std::string& out) {
    std::vector<ExperimentResult> results;
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() == "experiment.json")
            found.push_back(entry.path());
    std::sort(found.begin(), found.end());
    for (const auto& path : found) {
        std::ifstream in(path);
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
        results.push_back(ExperimentResult::from_json(j));
    }
    render_report(results, out);
    std::cout << "rendered " << results.size() << " scenario(s) into " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-volume laboratory for weighted Fokker-Planck operators"};
    app.require_subcommand(1);

    CommonOpts check_o, solve_o, verify_o, compare_o, study_o;
    auto* check_cmd = app.add_subcommand("check", "run the condition checkers on a scenario");
    add_common(check_cmd, check_o);
    auto* solve_cmd = app.add_subcommand("solve", "evolve a scenario and export the path");
    add_common(solve_cmd, solve_o);
    auto* verify_cmd = app.add_subcommand("verify", "residual battery and class membership");
    add_common(verify_cmd, verify_o);
    auto* compare_cmd =
        app.add_subcommand("compare-extensions", "Neumann vs Dirichlet uniqueness proxy");
    add_common(compare_cmd, compare_o);
    auto* study_cmd = app.add_subcommand("study", "time-step and resolution convergence ladders");
    add_common(study_cmd, study_o);

    std::string drift;
    int ladder = 14;
    std::string hille_out = "out";
    auto* hille_cmd = app.add_subcommand("hille", "one-dimensional solvability classification");
    hille_cmd->add_option("--drift", drift, "drift expression in x1")->required();
    hille_cmd->add_option("--ladder", ladder, "largest cutoff exponent (cutoff 2^k)");
    hille_cmd->add_option("--out", hille_out, "output directory");

    std::string report_dir;
    std::string report_out = "out";
    auto* report_cmd = app.add_subcommand("report", "re-render saved experiment results");
    report_cmd->add_option("dir", report_dir, "directory scanned for experiment.json files")
        ->required();
    report_cmd->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check_cmd->parsed()) return run_check(check_o);
        if (solve_cmd->parsed()) return run_solve(solve_o);
        if (verify_cmd->parsed()) return run_verify(verify_o);
        if (compare_cmd->parsed()) return run_compare(compare_o);
        if (study_cmd->parsed()) return run_study(study_o);
        if (hille_cmd->parsed()) return run_hille(drift, ladder, hille_out);
        if (report_cmd->parsed()) return run_report(report_dir, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
