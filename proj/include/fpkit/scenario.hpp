#pragma once

#include <string>
#include <vector>

#include "fpkit/coefficients.hpp"
#include "fpkit/grid.hpp"
#include "fpkit/measure.hpp"

namespace fpkit {

enum class Extension { Neumann, Dirichlet };

const char* extension_name(Extension e);

enum class OperatorForm { Weighted, Rho2A };

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name;
    Grid grid;
    CoefficientSet coeffs;
    expr::Expression initial_u;
    double T = 1.0;
    double dt = 1e-3;
    std::vector<Extension> extensions;
    OperatorForm form = OperatorForm::Weighted;

    // u * rho * vol per cell, normalized to total mass 1
    DiscreteMeasure initial_measure() const;
    // plain u samples (not normalized)
    std::vector<double> initial_density() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

// u_i rho_i vol / sum(...). Throws if u < 0 somewhere or the total is not
// positive/finite.
DiscreteMeasure normalize_initial(const std::vector<double>& u, const std::vector<double>& rho,
                                  const Grid& grid);

} // namespace fpkit
