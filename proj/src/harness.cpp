#include "fpkit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fpkit/generator.hpp"
#include "fpkit/numeric.hpp"

namespace fpkit {

namespace {

const char* kOu = R"ini(# Gaussian weight, unit diffusion
[grid]
dim = 1
lo1 = -8
hi1 = 8
n1 = 256

[coefficients]
a11 = "1"
rho = "exp(-x1^2)"

[initial]
u = "max(0, 1 - (x1/2)^2)^3"

[time]
T = 1.0
dt = 0.001

[run]
name = "ou"
extensions = "neumann,dirichlet"
)ini";

const char* kOuKilling = R"ini(# Gaussian weight with constant killing
[grid]
dim = 1
lo1 = -8
hi1 = 8
n1 = 256

[coefficients]
a11 = "1"
rho = "exp(-x1^2)"
c = "-1"

[initial]
u = "max(0, 1 - (x1/2)^2)^3"

[time]
T = 1.0
dt = 0.001

[run]
name = "ou-killing"
extensions = "neumann,dirichlet"
)ini";

const char* kDegenerate = R"ini(# degenerate weighted operator: assembly coefficient equals the weight,
# so the underlying shape matrix is the identity
[grid]
dim = 1
lo1 = -8
hi1 = 8
n1 = 256

[coefficients]
a11 = "0.5641895835477563 * exp(-x1^2)"
rho = "0.5641895835477563 * exp(-x1^2)"

[initial]
u = "max(0, 1 - (x1/2)^2)^3"

[time]
T = 0.5
dt = 0.001

[run]
name = "degenerate"
extensions = "neumann,dirichlet"
form = "rho2a"
)ini";

const char* kVmo2d = R"ini(# 2-D anisotropic oscillating diffusion with a cross term
[grid]
dim = 2
lo1 = -6
hi1 = 6
n1 = 32
lo2 = -6
hi2 = 6
n2 = 32

[coefficients]
a11 = "1 + 0.3*sin(3*x1)*cos(2*x2)"
a22 = "1 + 0.3*cos(2*x1)*sin(3*x2)"
a12 = "0.2*sin(x1)*sin(x2)"
rho = "exp(-(x1^2 + x2^2)/2)"

[initial]
u = "max(0, 1 - (x1/2)^2)^3 * max(0, 1 - (x2/2)^2)^3"

[time]
T = 0.2
dt = 0.002

[run]
name = "vmo2d"
extensions = "neumann,dirichlet"
)ini";

const char* kOutward = R"ini(# rapidly growing weight: the derived drift 2*x1^3 pushes mass outward
[grid]
dim = 1
lo1 = -4
hi1 = 4
n1 = 256

[coefficients]
a11 = "1"
rho = "exp(x1^4/2)"

[initial]
u = "max(0, 1 - ((x1 - 1)/0.5)^2)^3"

[time]
T = 0.25
dt = 0.001

[run]
name = "outward"
extensions = "neumann,dirichlet"
)ini";

const std::vector<std::pair<std::string, const char*>>& catalog_texts() {
    static const std::vector<std::pair<std::string, const char*>> texts{
        {"ou", kOu},
        {"ou-killing", kOuKilling},
        {"degenerate", kDegenerate},
        {"vmo2d", kVmo2d},
        {"outward", kOutward},
    };
    return texts;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::vector<Ball> default_balls(const Grid& grid) {
    int dim = grid.dim();
    double hw = std::numeric_limits<double>::infinity();
    std::array<double, 2> mid{0.0, 0.0};
    for (int ax = 0; ax < dim; ++ax) {
        hw = std::min(hw, 0.5 * (grid.hi(ax) - grid.lo(ax)));
        mid[ax] = 0.5 * (grid.lo(ax) + grid.hi(ax));
    }
    double r = 0.25 * hw;
    Ball centered{mid, r};
    Ball offset{mid, r};
    offset.center[0] += 0.5 * hw;
    return {centered, offset};
}

// shape matrix of a rho2a scenario: the stored entries divided by the weight
CoefficientSet underlying_shape(const CoefficientSet& coeffs) {
    CoefficientSet under = coeffs;
    for (int i = 0; i < coeffs.dim; ++i)
        for (int j = 0; j < coeffs.dim; ++j)
            if (coeffs.a[i][j]) under.a[i][j] = expr::div(coeffs.a[i][j], coeffs.rho);
    under.rho = expr::number(1.0);
    under.b = {};
    return under;
}

std::vector<double> boundary_layer_mass(const SolutionPath& path) {
    std::vector<double> out(path.stamps(), 0.0);
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < path.grid.cells(); ++i)
        if (path.grid.boundary_distance(i) <= 1) layer.push_back(i);
    for (std::size_t k = 0; k < path.stamps(); ++k) {
        KahanSum s;
        const auto& m = path.measures[k].masses();
        for (std::size_t i : layer) s.add(m[i]);
        out[k] = s.value();
    }
    return out;
}

void battery_residuals(const Scenario& sc, const GeneratorMatrix& reference,
                       const SolutionPath& path,
                       std::vector<std::pair<std::string, double>>& into) {
    auto battery = standard_test_battery(sc.grid, sc.T);
    for (std::size_t k = 0; k < battery.size(); ++k)
        into.emplace_back("weak_residual_" + std::to_string(k + 1),
                          weak_residual(path, sc.coeffs, battery[k]));
    std::vector<double> phi = sample_field(battery.front().phi, sc.grid);
    into.emplace_back("duality_defect",
                      verify_duality(reference, sc.initial_density(), phi, sc.T, sc.dt));
    std::vector<double> c_field(sc.grid.cells(), 0.0);
    if (sc.coeffs.c) c_field = sample_field(sc.coeffs.c, sc.grid);
    into.emplace_back("mass_balance", mass_balance_killing(path, c_field));
}

std::string csv_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

std::vector<std::string> catalog_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : catalog_texts()) names.push_back(name);
    return names;
}

Scenario catalog_scenario(const std::string& name) {
    for (const auto& [entry, text] : catalog_texts())
        if (entry == name) return parse_scenario(text, "catalog:" + name);
    throw ScenarioError("unknown catalog scenario '" + name + "'");
}

Scenario make_ou_scenario(double halfwidth, int n, double dt, double T) {
    std::ostringstream os;
    os << "[grid]\ndim = 1\nlo1 = " << format_number(-halfwidth)
       << "\nhi1 = " << format_number(halfwidth) << "\nn1 = " << n
       << "\n\n[coefficients]\na11 = \"1\"\nrho = \"exp(-x1^2)\"\n\n[initial]\nu = \"max(0, 1 - "
          "(x1/2)^2)^3\"\n\n[time]\nT = "
       << format_number(T) << "\ndt = " << format_number(dt)
       << "\n\n[run]\nname = \"ou\"\nextensions = \"neumann,dirichlet\"\n";
    return parse_scenario(os.str(), "catalog:ou-family");
}

std::vector<std::string> hille_drift_catalog() {
    return {"0", "-x1", "-(x1^3)", "x1^3"};
}

Scenario with_resolution(Scenario s, int n1, int n2) {
    if (s.grid.dim() == 1)
        s.grid = Grid::make_1d(s.grid.lo(0), s.grid.hi(0), n1);
    else
        s.grid = Grid::make_2d(s.grid.lo(0), s.grid.hi(0), n1, s.grid.lo(1), s.grid.hi(1),
                               n2 > 0 ? n2 : n1);
    return s;
}

std::vector<ConditionReport> run_checkers(const Scenario& scenario, const SolutionPath* path,
                                          std::uint64_t seed) {
    const Grid& grid = scenario.grid;
    const CoefficientSet& coeffs = scenario.coeffs;

    SolutionPath local;
    if (!path) {
        GeneratorMatrix gen = friedrichs_reference(coeffs, grid);
        local = solve_fpke(gen, scenario.initial_measure(), scenario.dt, scenario.T,
                           TimeScheme::BackwardEuler, "neumann");
        path = &local;
    }

    auto balls = default_balls(grid);
    double hw = std::numeric_limits<double>::infinity();
    for (int ax = 0; ax < grid.dim(); ++ax) hw = std::min(hw, 0.5 * (grid.hi(ax) - grid.lo(ax)));

    std::vector<ConditionReport> checks;
    checks.push_back(check_A(coeffs, grid));
    checks.push_back(check_H1(coeffs, grid, balls));
    checks.push_back(check_H2(coeffs, grid, balls));
    if (scenario.form == OperatorForm::Rho2A)
        checks.push_back(check_H3_H4(underlying_shape(coeffs), grid));
    else
        checks.push_back(check_H3_H4(coeffs, grid));
    checks.push_back(check_vmo(coeffs, grid, seed));
    checks.push_back(check_lyapunov(coeffs, grid));
    checks.push_back(check_thm32_growth(coeffs, *path, grid));
    checks.push_back(check_lebris_lions(coeffs, grid));
    checks.push_back(check_znu_tail(coeffs.rho, *path, grid, {0.25 * hw, 0.5 * hw}));
    checks.push_back(check_int43(coeffs, grid));
    checks.push_back(check_rho_lp47(coeffs, grid));
    checks.push_back(check_int48(coeffs, grid));
    checks.push_back(check_rho_class48(coeffs, grid));
    return checks;
}

Verdict ExperimentResult::worst_verdict() const {
    Verdict v = Verdict::Pass;
    for (const auto& c : checks) v = combine(v, c.verdict);
    return v;
}

nlohmann::ordered_json ExperimentResult::to_json() const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["extensions"] = generator_tags;
    j["sup_difference"] = sup_difference;
    j["l1_difference"] = l1_difference;
    j["times"] = times;
    j["difference_curves"] = {{"sup", sup_difference_curve}, {"l1", l1_difference_curve}};
    nlohmann::ordered_json mass = nlohmann::ordered_json::object();
    for (const auto& [tag, curve] : mass_curves) mass[tag] = curve;
    j["mass"] = mass;
    nlohmann::ordered_json layer = nlohmann::ordered_json::object();
    for (const auto& [tag, curve] : boundary_mass) layer[tag] = curve;
    j["boundary_mass"] = layer;
    nlohmann::ordered_json res = nlohmann::ordered_json::object();
    for (const auto& [name, value] : residuals) res[name] = value;
    j["residuals"] = res;
    nlohmann::ordered_json conds = nlohmann::ordered_json::array();
    for (const auto& c : checks) conds.push_back(c.to_json());
    j["conditions"] = conds;
    nlohmann::ordered_json thms = nlohmann::ordered_json::array();
    for (const auto& t : theorems) thms.push_back(t.to_json());
    j["theorems"] = thms;
    return j;
}

ExperimentResult ExperimentResult::from_json(const nlohmann::ordered_json& j) {
    ExperimentResult r;
    r.scenario = j.at("scenario").get<std::string>();
    r.generator_tags = j.at("extensions").get<std::vector<std::string>>();
    r.sup_difference = j.at("sup_difference").get<double>();
    r.l1_difference = j.at("l1_difference").get<double>();
    r.times = j.at("times").get<std::vector<double>>();
    r.sup_difference_curve = j.at("difference_curves").at("sup").get<std::vector<double>>();
    r.l1_difference_curve = j.at("difference_curves").at("l1").get<std::vector<double>>();
    for (const auto& [tag, curve] : j.at("mass").items())
        r.mass_curves[tag] = curve.get<std::vector<double>>();
    for (const auto& [tag, curve] : j.at("boundary_mass").items())
        r.boundary_mass[tag] = curve.get<std::vector<double>>();
    for (const auto& [name, value] : j.at("residuals").items())
        r.residuals.emplace_back(name, value.get<double>());
    for (const auto& c : j.at("conditions")) r.checks.push_back(ConditionReport::from_json(c));
    for (const auto& t : j.at("theorems")) {
        TheoremVerdict tv;
        tv.theorem = t.at("theorem").get<std::string>();
        tv.status = applicability_from_name(t.at("status").get<std::string>());
        if (t.contains("blocking")) tv.blocking = t.at("blocking").get<std::string>();
        r.theorems.push_back(tv);
    }
    return r;
}

ExperimentResult run_uniqueness_proxy(const Scenario& scenario, int threads, std::uint64_t seed) {
    const Grid& grid = scenario.grid;
    DiscreteMeasure nu = scenario.initial_measure();

    const auto& masses = nu.masses();
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (masses[i] <= 1e-14 * nu.total()) continue;
        auto p = grid.point(i);
        for (int ax = 0; ax < grid.dim(); ++ax) {
            double width = grid.hi(ax) - grid.lo(ax);
            double clearance = std::min(p[ax] - grid.lo(ax), grid.hi(ax) - p[ax]);
            if (clearance < 0.1 * width)
                throw ScenarioError("initial support of '" + scenario.name +
                                    "' is closer than 10% of the box width to the boundary");
        }
    }

    bool has_n = false, has_d = false;
    for (Extension e : scenario.extensions) {
        has_n = has_n || e == Extension::Neumann;
        has_d = has_d || e == Extension::Dirichlet;
    }
    if (!has_n || !has_d)
        throw ScenarioError("extension comparison needs both closures in '" + scenario.name + "'");

    const std::array<Extension, 2> exts{Extension::Neumann, Extension::Dirichlet};
    std::array<SolutionPath, 2> paths;
    parallel_for(2, threads, [&](int i) {
        GeneratorMatrix gen = assemble(scenario.coeffs, grid, exts[i]);
        paths[i] = solve_fpke(gen, nu, scenario.dt, scenario.T, TimeScheme::BackwardEuler,
                              extension_name(exts[i]));
    });

    ExperimentResult result;
    result.scenario = scenario.name;
    result.generator_tags = {extension_name(exts[0]), extension_name(exts[1])};
    result.times = paths[0].times;
    for (std::size_t k = 0; k < paths[0].stamps(); ++k) {
        const auto& ma = paths[0].measures[k].masses();
        const auto& mb = paths[1].measures[k].masses();
        double sup = 0.0;
        KahanSum l1;
        for (std::size_t i = 0; i < ma.size(); ++i) {
            double mid = 0.5 * (ma[i] + mb[i]);
            if (mid > 0.0) sup = std::max(sup, std::abs(ma[i] - mb[i]) / mid);
            l1.add(std::abs(ma[i] - mb[i]));
        }
        result.sup_difference_curve.push_back(sup);
        result.l1_difference_curve.push_back(l1.value());
        result.sup_difference = std::max(result.sup_difference, sup);
        result.l1_difference = std::max(result.l1_difference, l1.value());
    }
    for (int i = 0; i < 2; ++i) {
        result.mass_curves[result.generator_tags[i]] = paths[i].mass_curve();
        result.boundary_mass[result.generator_tags[i]] = boundary_layer_mass(paths[i]);
    }

    GeneratorMatrix reference = friedrichs_reference(scenario.coeffs, grid);
    battery_residuals(scenario, reference, paths[0], result.residuals);

    result.checks = run_checkers(scenario, &paths[0], seed);
    result.checks.push_back(check_sp_membership(paths[0], scenario.coeffs, nu));
    result.theorems = theorem_applicability(result.checks, scenario);
    return result;
}

double StudyTable::measured_order(const std::string& quantity) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& row : rows) {
        if (row.quantity != quantity || row.ratio <= 0.0) continue;
        sum += std::log2(row.ratio);
        ++count;
    }
    return count ? sum / count : 0.0;
}

nlohmann::ordered_json StudyTable::to_json() const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    nlohmann::ordered_json rws = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json r;
        r["quantity"] = row.quantity;
        r["dt"] = row.dt;
        r["n"] = row.n;
        r["value"] = row.value;
        r["ratio"] = row.ratio;
        rws.push_back(r);
    }
    j["rows"] = rws;
    nlohmann::ordered_json orders = nlohmann::ordered_json::object();
    std::vector<std::string> seen;
    for (const auto& row : rows)
        if (std::find(seen.begin(), seen.end(), row.quantity) == seen.end()) {
            seen.push_back(row.quantity);
            orders[row.quantity] = measured_order(row.quantity);
        }
    j["measured_orders"] = orders;
    return j;
}

std::string StudyTable::to_csv() const {
    std::ostringstream os;
    os << "quantity,dt,n,value,ratio\n";
    for (const auto& row : rows)
        os << row.quantity << "," << csv_double(row.dt) << "," << row.n << ","
           << csv_double(row.value) << "," << csv_double(row.ratio) << "\n";
    return os.str();
}

StudyTable run_convergence_study(const Scenario& scenario, const std::vector<double>& dts,
                                 const std::vector<int>& resolutions, int threads) {
    StudyTable table;
    table.scenario = scenario.name;

    struct DtResult {
        double weak = 0.0, duality = 0.0, mass = 0.0;
    };
    std::vector<DtResult> by_dt(dts.size());
    DiscreteMeasure nu = scenario.initial_measure();
    parallel_for(static_cast<int>(dts.size()), threads, [&](int i) {
        double dt = dts[i];
        GeneratorMatrix gen = friedrichs_reference(scenario.coeffs, scenario.grid);
        SolutionPath path = solve_fpke(gen, nu, dt, scenario.T, TimeScheme::BackwardEuler,
                                       "neumann");
        auto battery = standard_test_battery(scenario.grid, scenario.T);
        double weak = 0.0;
        for (const auto& pair : battery)
            weak = std::max(weak, weak_residual(path, scenario.coeffs, pair));
        std::vector<double> phi = sample_field(battery.front().phi, scenario.grid);
        double duality = verify_duality(gen, scenario.initial_density(), phi, scenario.T, dt);
        std::vector<double> c_field(scenario.grid.cells(), 0.0);
        if (scenario.coeffs.c) c_field = sample_field(scenario.coeffs.c, scenario.grid);
        by_dt[i] = {weak, duality, mass_balance_killing(path, c_field)};
    });

    auto push_ladder = [&table](const std::string& quantity, const std::vector<double>& dts_in,
                                const std::vector<int>& ns_in, const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            StudyRow row;
            row.quantity = quantity;
            row.dt = dts_in.empty() ? 0.0 : dts_in[i];
            row.n = ns_in.empty() ? 0 : ns_in[i];
            row.value = values[i];
            row.ratio = i == 0 ? 0.0 : (values[i] != 0.0 ? values[i - 1] / values[i] : 0.0);
            table.rows.push_back(row);
        }
    };
    auto column = [&](auto member) {
        std::vector<double> v;
        for (const auto& r : by_dt) v.push_back(r.*member);
        return v;
    };
    push_ladder("weak_residual", dts, {}, column(&DtResult::weak));
    push_ladder("duality_defect", dts, {}, column(&DtResult::duality));
    push_ladder("mass_balance", dts, {}, column(&DtResult::mass));

    std::vector<double> consistency(resolutions.size());
    parallel_for(static_cast<int>(resolutions.size()), threads, [&](int i) {
        Scenario fine = with_resolution(scenario, resolutions[i], resolutions[i]);
        GeneratorMatrix gen = friedrichs_reference(fine.coeffs, fine.grid);
        expr::Expression phi = fine.grid.dim() == 1 ? expr::parse("exp(-x1^2/4)")
                                                    : expr::parse("exp(-(x1^2 + x2^2)/4)");
        std::vector<double> lhs = gen.apply(sample_field(phi, fine.grid));
        std::vector<double> rhs = expanded_operator_apply(fine.coeffs, fine.grid, phi);
        double err = 0.0;
        for (std::size_t cell = 0; cell < fine.grid.cells(); ++cell)
            if (fine.grid.boundary_distance(cell) >= 2)
                err = std::max(err, std::abs(lhs[cell] - rhs[cell]));
        consistency[i] = err;
    });
    push_ladder("consistency", {}, resolutions, consistency);
    return table;
}

std::string render_markdown(std::vector<ExperimentResult> results) {
    std::sort(results.begin(), results.end(),
              [](const ExperimentResult& a, const ExperimentResult& b) {
                  return a.scenario < b.scenario;
              });
    std::ostringstream os;
    os << "# Extension comparison report\n";
    for (const auto& r : results) {
        os << "\n## " << r.scenario << "\n\n";
        os << "- extensions:";
        for (const auto& tag : r.generator_tags) os << " " << tag;
        os << "\n";
        os << std::setprecision(6);
        os << "- sup difference (midpoint-relative): " << r.sup_difference << "\n";
        os << "- L1 difference: " << r.l1_difference << "\n";
        for (const auto& [tag, curve] : r.mass_curves)
            if (!curve.empty()) os << "- final mass (" << tag << "): " << curve.back() << "\n";
        for (const auto& [tag, curve] : r.boundary_mass)
            if (!curve.empty())
                os << "- max boundary-layer mass (" << tag
                   << "): " << *std::max_element(curve.begin(), curve.end()) << "\n";
        if (!r.residuals.empty()) {
            os << "\n### Residuals\n\n";
            for (const auto& [name, value] : r.residuals) os << "- " << name << ": " << value << "\n";
        }
        if (!r.checks.empty()) {
            os << "\n### Conditions\n\n";
            for (const auto& c : r.checks) {
                os << "- " << c.id << ": " << verdict_name(c.verdict);
                if (!c.note.empty()) os << " (" << c.note << ")";
                os << "\n";
                for (const auto& item : c.items) {
                    os << "  - " << item.id << ": " << verdict_name(item.verdict);
                    if (!item.note.empty()) os << " (" << item.note << ")";
                    os << "\n";
                }
            }
        }
        if (!r.theorems.empty()) {
            os << "\n### Theorems\n\n";
            for (const auto& t : r.theorems) {
                os << "- " << t.theorem << ": " << applicability_name(t.status);
                if (!t.blocking.empty()) os << " (blocked by " << t.blocking << ")";
                os << "\n";
            }
        }
    }
    return os.str();
}

void render_report(std::vector<ExperimentResult> results, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::sort(results.begin(), results.end(),
              [](const ExperimentResult& a, const ExperimentResult& b) {
                  return a.scenario < b.scenario;
              });

    nlohmann::ordered_json j;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) arr.push_back(r.to_json());
    j["scenarios"] = arr;
    std::ofstream(out_dir / "report.json") << j.dump(2) << "\n";

    std::ofstream(out_dir / "report.md") << render_markdown(results);

    std::ofstream csv(out_dir / "curves.csv");
    csv << "scenario,series,t,value\n";
    for (const auto& r : results) {
        auto series = [&](const std::string& name, const std::vector<double>& values) {
            for (std::size_t k = 0; k < values.size() && k < r.times.size(); ++k)
                csv << r.scenario << "," << name << "," << csv_double(r.times[k]) << ","
                    << csv_double(values[k]) << "\n";
        };
        series("sup_diff", r.sup_difference_curve);
        series("l1_diff", r.l1_difference_curve);
        for (const auto& [tag, curve] : r.mass_curves) series("mass." + tag, curve);
        for (const auto& [tag, curve] : r.boundary_mass) series("boundary." + tag, curve);
    }
}

void parallel_for(int tasks, int threads, const std::function<void(int)>& work) {
    if (tasks <= 0) return;
    threads = std::max(1, std::min(threads, tasks));
    if (threads == 1) {
        for (int i = 0; i < tasks; ++i) work(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace fpkit
