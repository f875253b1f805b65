#include "fpkit/coefficients.hpp"

#include <cmath>

namespace fpkit {

namespace {

double eval_at(const expr::Expression& e, const std::array<double, 2>& x, int dim, double t = 0.0) {
    expr::EvalPoint p;
    p.t = t;
    p.x = std::span<const double>(x.data(), static_cast<std::size_t>(dim));
    return expr::evaluate(e, p);
}

std::string point_string(const std::array<double, 2>& x, int dim) {
    std::string s = "(" + std::to_string(x[0]);
    if (dim == 2) s += ", " + std::to_string(x[1]);
    return s + ")";
}

} // namespace

std::array<std::array<double, 2>, 2> CoefficientSet::a_at(const std::array<double, 2>& x) const {
    std::array<std::array<double, 2>, 2> m{};
    m[0][0] = eval_at(a[0][0], x, dim);
    if (dim == 2) {
        m[1][1] = eval_at(a[1][1], x, dim);
        m[0][1] = m[1][0] = a[0][1] ? eval_at(a[0][1], x, dim) : 0.0;
    }
    return m;
}

double CoefficientSet::rho_at(const std::array<double, 2>& x) const { return eval_at(rho, x, dim); }

double CoefficientSet::c_at(const std::array<double, 2>& x) const {
    return c ? eval_at(c, x, dim) : 0.0;
}

void CoefficientSet::validate_on(const Grid& grid) const {
    for (std::size_t i = 0; i < grid.cells(); ++i) {
        auto x = grid.point(i);
        auto m = a_at(x);
        auto ev = eigen_range(m, dim);
        if (!(ev.min >= -1e-12 * std::max(1.0, std::abs(ev.max))))
            throw std::runtime_error("diffusion matrix not positive semidefinite at node " +
                                     point_string(x, dim) + " (min eigenvalue " +
                                     std::to_string(ev.min) + ")");
        double r = rho_at(x);
        if (!(r > 0.0))
            throw std::runtime_error("weight rho must be positive, got " + std::to_string(r) +
                                     " at node " + point_string(x, dim));
        double cv = c_at(x);
        if (!(cv <= 0.0))
            throw std::runtime_error("killing term c must be <= 0, got " + std::to_string(cv) +
                                     " at node " + point_string(x, dim));
    }
}

std::vector<double> sample_field(const expr::Expression& e, const Grid& grid, double t) {
    std::vector<double> out(grid.cells());
    for (std::size_t i = 0; i < grid.cells(); ++i) {
        auto x = grid.point(i);
        expr::EvalPoint p;
        p.t = t;
        p.x = std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim()));
        try {
            out[i] = expr::evaluate(e, p);
        } catch (const expr::EvalError& err) {
            throw expr::EvalError(err.cause(), std::string(err.what()) + " while sampling cell " +
                                                   std::to_string(i) + " at " +
                                                   point_string(x, grid.dim()));
        }
    }
    return out;
}

EigenPair eigen_range(const std::array<std::array<double, 2>, 2>& m, int dim) {
    if (dim == 1) return {m[0][0], m[0][0]};
    double tr = m[0][0] + m[1][1];
    double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    return {0.5 * tr - disc, 0.5 * tr + disc};
}

} // namespace fpkit
