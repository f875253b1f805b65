#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fpkit/expr.hpp"
#include "fpkit/grid.hpp"

namespace fpkit {

// Symmetric diffusion matrix entries, weight density, killing term and
// (optionally) explicit drift / triangular factor, all as closed-form
// expressions in x1[, x2].
class CoefficientSet {
public:
    int dim = 1;
    // a[0][0] = a11, a[0][1] = a[1][0] = a12, a[1][1] = a22
    std::array<std::array<expr::Expression, 2>, 2> a{};
    expr::Expression rho;
    expr::Expression c;
    std::array<expr::Expression, 2> b{};       // empty unless explicitly given
    std::array<std::array<expr::Expression, 2>, 2> sigma{}; // empty unless given

    bool has_explicit_drift() const { return static_cast<bool>(b[0]); }
    bool has_sigma() const { return static_cast<bool>(sigma[0][0]); }

    // sampled values at a space point (throws EvalError on bad points)
    std::array<std::array<double, 2>, 2> a_at(const std::array<double, 2>& x) const;
    double rho_at(const std::array<double, 2>& x) const;
    double c_at(const std::array<double, 2>& x) const;

    // Validates PSD of A, rho > 0, c <= 0 on all nodes of the grid;
    // throws std::runtime_error naming the first offending node.
    void validate_on(const Grid& grid) const;
};

// Evaluates an expression at every cell center (t = 0 unless given).
// Evaluation failures are rethrown with the offending cell index attached.
std::vector<double> sample_field(const expr::Expression& e, const Grid& grid, double t = 0.0);

// Smallest/largest eigenvalue of the sampled symmetric 1x1 or 2x2 matrix.
struct EigenPair {
    double min;
    double max;
};
EigenPair eigen_range(const std::array<std::array<double, 2>, 2>& m, int dim);

} // namespace fpkit
