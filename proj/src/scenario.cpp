#include "fpkit/scenario.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fpkit/numeric.hpp"

namespace fpkit {

const char* extension_name(Extension e) { return e == Extension::Neumann ? "neumann" : "dirichlet"; }

namespace {

struct Entry {
    std::string value;
    bool quoted = false;
    int line = 0;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw ScenarioError(origin + ":" + std::to_string(line) + ": " + what);
}

class Raw {
public:
    Raw(const std::string& text, std::string origin) : origin_(std::move(origin)) {
        static const std::set<std::string> known = {"grid", "coefficients", "initial", "time",
                                                    "run"};
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(origin_, lineno, "malformed section header");
                section = line.substr(1, line.size() - 2);
                if (!known.count(section))
                    fail(origin_, lineno, "unknown section [" + section + "]");
                sections_[section];
                continue;
            }
            std::size_t eq = line.find('=');
            if (eq == std::string::npos) fail(origin_, lineno, "expected 'key = value'");
            if (section.empty()) fail(origin_, lineno, "entry before any section header");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(origin_, lineno, "empty key");
            Entry e;
            e.line = lineno;
            if (!value.empty() && value.front() == '"') {
                if (value.size() < 2 || value.back() != '"')
                    fail(origin_, lineno, "unterminated quoted value for '" + key + "'");
                e.value = value.substr(1, value.size() - 2);
                e.quoted = true;
            } else {
                if (value.empty()) fail(origin_, lineno, "empty value for '" + key + "'");
                e.value = value;
            }
            auto [it, inserted] = sections_[section].emplace(key, e);
            (void)it;
            if (!inserted) fail(origin_, lineno, "duplicate key '" + key + "'");
        }
    }

    const Section& section(const std::string& name) const {
        auto it = sections_.find(name);
        if (it == sections_.end()) throw ScenarioError(origin_ + ": missing section [" + name + "]");
        return it->second;
    }

    bool has(const std::string& sec, const std::string& key) const {
        auto it = sections_.find(sec);
        return it != sections_.end() && it->second.count(key) > 0;
    }

    const Entry& entry(const std::string& sec, const std::string& key) const {
        const Section& s = section(sec);
        auto it = s.find(key);
        if (it == s.end())
            throw ScenarioError(origin_ + ": missing key '" + key + "' in [" + sec + "]");
        return it->second;
    }

    double number(const std::string& sec, const std::string& key) const {
        const Entry& e = entry(sec, key);
        if (e.quoted) fail(origin_, e.line, "'" + key + "' must be an unquoted number");
        char* end = nullptr;
        double v = std::strtod(e.value.c_str(), &end);
        if (end != e.value.c_str() + e.value.size())
            fail(origin_, e.line, "'" + key + "': malformed number '" + e.value + "'");
        return v;
    }

    int integer(const std::string& sec, const std::string& key) const {
        double v = number(sec, key);
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            fail(origin_, entry(sec, key).line, "'" + key + "' must be an integer");
        return i;
    }

    std::string quoted(const std::string& sec, const std::string& key) const {
        const Entry& e = entry(sec, key);
        if (!e.quoted) fail(origin_, e.line, "'" + key + "' must be a quoted string");
        return e.value;
    }

    expr::Expression expression(const std::string& sec, const std::string& key, int dim,
                                bool allow_time = false) const {
        const Entry& e = entry(sec, key);
        if (!e.quoted) fail(origin_, e.line, "'" + key + "' must be a quoted expression string");
        expr::Expression ex;
        try {
            ex = expr::parse(e.value);
        } catch (const expr::ParseError& pe) {
            fail(origin_, e.line, "'" + key + "': " + pe.what());
        }
        if (expr::max_space_dim(ex) > dim)
            fail(origin_, e.line,
                 "'" + key + "' uses x" + std::to_string(expr::max_space_dim(ex)) +
                     " but the grid dimension is " + std::to_string(dim));
        if (!allow_time && expr::depends_on(ex, 0))
            fail(origin_, e.line, "'" + key + "' must not depend on t");
        return ex;
    }

    void reject_unknown(const std::string& sec, const std::set<std::string>& allowed) const {
        auto it = sections_.find(sec);
        if (it == sections_.end()) return;
        for (const auto& [key, e] : it->second)
            if (!allowed.count(key))
                fail(origin_, e.line, "unknown key '" + key + "' in [" + sec + "]");
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::map<std::string, Section> sections_;
};

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Raw raw(text, origin);

    raw.reject_unknown("grid", {"dim", "lo1", "hi1", "n1", "lo2", "hi2", "n2"});
    int dim = raw.integer("grid", "dim");
    if (dim != 1 && dim != 2)
        throw ScenarioError(origin + ": dim must be 1 or 2, got " + std::to_string(dim));

    Scenario sc;
    if (dim == 1) {
        if (raw.has("grid", "lo2") || raw.has("grid", "hi2") || raw.has("grid", "n2"))
            throw ScenarioError(origin + ": axis-2 keys present but dim = 1");
        sc.grid = Grid::make_1d(raw.number("grid", "lo1"), raw.number("grid", "hi1"),
                                raw.integer("grid", "n1"));
    } else {
        sc.grid = Grid::make_2d(raw.number("grid", "lo1"), raw.number("grid", "hi1"),
                                raw.integer("grid", "n1"), raw.number("grid", "lo2"),
                                raw.number("grid", "hi2"), raw.integer("grid", "n2"));
    }

    raw.reject_unknown("coefficients", {"a11", "a12", "a22", "rho", "c", "b1", "b2", "sigma11",
                                        "sigma21", "sigma22"});
    CoefficientSet& co = sc.coeffs;
    co.dim = dim;
    co.a[0][0] = raw.expression("coefficients", "a11", dim);
    if (dim == 2) {
        co.a[1][1] = raw.expression("coefficients", "a22", dim);
        co.a[0][1] = co.a[1][0] = raw.has("coefficients", "a12")
                                      ? raw.expression("coefficients", "a12", dim)
                                      : expr::number(0);
    } else if (raw.has("coefficients", "a12") || raw.has("coefficients", "a22")) {
        throw ScenarioError(origin + ": a12/a22 present but dim = 1");
    }
    co.rho = raw.expression("coefficients", "rho", dim);
    co.c = raw.has("coefficients", "c") ? raw.expression("coefficients", "c", dim)
                                        : expr::number(0);
    if (raw.has("coefficients", "b1")) {
        co.b[0] = raw.expression("coefficients", "b1", dim);
        if (dim == 2) co.b[1] = raw.expression("coefficients", "b2", dim);
    } else if (raw.has("coefficients", "b2")) {
        throw ScenarioError(origin + ": b2 given without b1");
    }
    if (raw.has("coefficients", "sigma11")) {
        co.sigma[0][0] = raw.expression("coefficients", "sigma11", dim);
        if (dim == 2) {
            co.sigma[1][0] = raw.has("coefficients", "sigma21")
                                 ? raw.expression("coefficients", "sigma21", dim)
                                 : expr::number(0);
            co.sigma[1][1] = raw.expression("coefficients", "sigma22", dim);
        }
    }

    raw.reject_unknown("initial", {"u"});
    sc.initial_u = raw.expression("initial", "u", dim);

    raw.reject_unknown("time", {"T", "dt"});
    sc.T = raw.number("time", "T");
    sc.dt = raw.number("time", "dt");
    if (!(sc.T > 0)) throw ScenarioError(origin + ": T must be positive");
    if (!(sc.dt > 0) || sc.dt > sc.T)
        throw ScenarioError(origin + ": dt must satisfy 0 < dt <= T");

    raw.reject_unknown("run", {"name", "extensions", "form"});
    sc.name = raw.quoted("run", "name");
    if (sc.name.empty()) throw ScenarioError(origin + ": scenario name must not be empty");
    std::string exts = raw.quoted("run", "extensions");
    std::istringstream es(exts);
    std::string tok;
    while (std::getline(es, tok, ',')) {
        tok = trim(tok);
        if (tok == "neumann")
            sc.extensions.push_back(Extension::Neumann);
        else if (tok == "dirichlet")
            sc.extensions.push_back(Extension::Dirichlet);
        else
            throw ScenarioError(origin + ": unknown extension '" + tok + "'");
    }
    if (sc.extensions.empty()) throw ScenarioError(origin + ": extensions list is empty");
    if (raw.has("run", "form")) {
        std::string form = raw.quoted("run", "form");
        if (form == "weighted")
            sc.form = OperatorForm::Weighted;
        else if (form == "rho2a")
            sc.form = OperatorForm::Rho2A;
        else
            throw ScenarioError(origin + ": unknown form '" + form + "'");
    }

    // eager pointwise validation
    sc.coeffs.validate_on(sc.grid);
    sc.initial_measure(); // validates u >= 0 and normalizability
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

DiscreteMeasure normalize_initial(const std::vector<double>& u, const std::vector<double>& rho,
                                  const Grid& grid) {
    if (u.size() != grid.cells() || rho.size() != grid.cells())
        throw std::invalid_argument("initial density size mismatch with grid");
    std::vector<double> masses(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] >= 0.0))
            throw std::runtime_error("initial density is negative (" + std::to_string(u[i]) +
                                     ") in cell " + std::to_string(i));
        masses[i] = u[i] * rho[i] * grid.cell_volume();
    }
    double z = kahan_total(masses);
    if (!(z > 0.0) || !std::isfinite(z))
        throw std::runtime_error("initial density is not normalizable (total weight " +
                                 std::to_string(z) + ")");
    for (double& m : masses) m /= z;
    return DiscreteMeasure(grid, std::move(masses));
}

std::vector<double> Scenario::initial_density() const { return sample_field(initial_u, grid); }

DiscreteMeasure Scenario::initial_measure() const {
    return normalize_initial(initial_density(), sample_field(coeffs.rho, grid), grid);
}

} // namespace fpkit
