#include "fpkit/generator.hpp"

#include <algorithm>
#include <cmath>

#include "fpkit/numeric.hpp"

namespace fpkit {

namespace {

using Triplet = Eigen::Triplet<double>;

double eval_point(const expr::Expression& e, double x1, double x2, int dim) {
    std::array<double, 2> x{x1, x2};
    expr::EvalPoint p;
    p.x = std::span<const double>(x.data(), static_cast<std::size_t>(dim));
    return expr::evaluate(e, p);
}

struct Assembler {
    const CoefficientSet& co;
    const Grid& g;
    Extension ext;
    std::vector<Triplet> trip;
    std::vector<double> rho_c, a11_c, a22_c, a12_c, c_c;
    bool has_cross = false;

    explicit Assembler(const CoefficientSet& coeffs, const Grid& grid, Extension extension)
        : co(coeffs), g(grid), ext(extension) {
        rho_c = sample_field(co.rho, g);
        a11_c = sample_field(co.a[0][0], g);
        if (g.dim() == 2) {
            a22_c = sample_field(co.a[1][1], g);
            has_cross = co.a[0][1] && !(co.a[0][1]->kind == expr::Kind::Number &&
                                        co.a[0][1]->value == 0.0);
            if (has_cross) a12_c = sample_field(co.a[0][1], g);
        }
        c_c = sample_field(co.c ? co.c : expr::number(0), g);
    }

    // face coefficient along `axis` after the cross-term splitting
    double face_alpha(double a_diag, double a_cross, int axis) const {
        if (!has_cross) return a_diag;
        double r = (axis == 0) ? g.h(0) / g.h(1) : g.h(1) / g.h(0);
        return a_diag - std::abs(a_cross) * r;
    }

    void check_face(double alpha, double rho_f, std::size_t cell) const {
        if (alpha < 0.0)
            throw AssemblyError(
                "cross-term splitting loses positivity at a face of cell " +
                    std::to_string(cell) + " (reduced face coefficient " + std::to_string(alpha) +
                    "); refine the anisotropy or the aspect ratio",
                cell);
        if (!(rho_f > 0.0))
            throw AssemblyError("nonpositive face weight rho at a face of cell " +
                                    std::to_string(cell) + " (" + std::to_string(rho_f) + ")",
                                cell);
    }

    void add_link(std::size_t i, std::size_t j, double q) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(j), q);
        trip.emplace_back(static_cast<int>(j), static_cast<int>(i), q);
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), -q);
        trip.emplace_back(static_cast<int>(j), static_cast<int>(j), -q);
    }

    void add_absorption(std::size_t i, double q) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), -q);
    }

    // ghost-center evaluation just outside the box; idx is -1 or n and
    // center() extrapolates linearly
    double ghost(const expr::Expression& e, int axis, int idx, int other_axis_idx) const {
        double x1 = 0, x2 = 0;
        if (g.dim() == 1) {
            x1 = g.center(0, idx);
        } else if (axis == 0) {
            x1 = g.center(0, idx);
            x2 = g.center(1, other_axis_idx);
        } else {
            x1 = g.center(0, other_axis_idx);
            x2 = g.center(1, idx);
        }
        return eval_point(e, x1, x2, g.dim());
    }

    void axis_faces(int axis) {
        int n_axis = g.n(axis);
        int n_other = (g.dim() == 2) ? g.n(1 - axis) : 1;
        double h = g.h(axis);
        double scale = g.cell_volume() / (h * h);
        const std::vector<double>& adiag = (axis == 0) ? a11_c : a22_c;

        for (int o = 0; o < n_other; ++o) {
            for (int i = 0; i + 1 < n_axis; ++i) {
                std::size_t c0 = (axis == 0) ? g.flat_index(i, o) : g.flat_index(o, i);
                std::size_t c1 = (axis == 0) ? g.flat_index(i + 1, o) : g.flat_index(o, i + 1);
                double rho_f = 0.5 * (rho_c[c0] + rho_c[c1]);
                double a_f = 0.5 * (adiag[c0] + adiag[c1]);
                double cross_f = has_cross ? 0.5 * (a12_c[c0] + a12_c[c1]) : 0.0;
                double alpha = face_alpha(a_f, cross_f, axis);
                check_face(alpha, rho_f, c0);
                add_link(c0, c1, scale * rho_f * alpha);
            }
            if (ext == Extension::Dirichlet) {
                // zero exterior value at the boundary face, half-cell distance
                for (int side = 0; side < 2; ++side) {
                    int i_in = (side == 0) ? 0 : n_axis - 1;
                    int i_ghost = (side == 0) ? -1 : n_axis;
                    std::size_t cell =
                        (axis == 0) ? g.flat_index(i_in, o) : g.flat_index(o, i_in);
                    double rho_g = ghost(co.rho, axis, i_ghost, o);
                    double a_g = ghost(co.a[axis][axis], axis, i_ghost, o);
                    double cr_g = has_cross ? ghost(co.a[0][1], axis, i_ghost, o) : 0.0;
                    double rho_f = 0.5 * (rho_c[cell] + rho_g);
                    double a_f = 0.5 * (adiag[cell] + a_g);
                    double cross_f = has_cross ? 0.5 * (a12_c[cell] + cr_g) : 0.0;
                    double alpha = face_alpha(a_f, cross_f, axis);
                    check_face(alpha, rho_f, cell);
                    add_absorption(cell, 2.0 * scale * rho_f * alpha);
                }
            }
        }
    }

    // diagonal links carrying the cross term; corner coefficient is the
    // average of the four surrounding center evaluations
    void corner_links() {
        double h1 = g.h(0), h2 = g.h(1);
        double scale = g.cell_volume() / (h1 * h2);
        int n1 = g.n(0), n2 = g.n(1);
        auto center_or_ghost = [&](const std::vector<double>& cached, const expr::Expression& e,
                                   int i, int j) {
            if (i >= 0 && i < n1 && j >= 0 && j < n2) return cached[g.flat_index(i, j)];
            return eval_point(e, g.center(0, i), g.center(1, j), 2);
        };
        auto corner_avg = [&](const std::vector<double>& cached, const expr::Expression& e,
                              int i, int j) {
            return 0.25 * (center_or_ghost(cached, e, i, j) + center_or_ghost(cached, e, i + 1, j) +
                           center_or_ghost(cached, e, i, j + 1) +
                           center_or_ghost(cached, e, i + 1, j + 1));
        };
        int lo = (ext == Extension::Dirichlet) ? -1 : 0;
        int hi1 = (ext == Extension::Dirichlet) ? n1 - 1 : n1 - 2;
        int hi2 = (ext == Extension::Dirichlet) ? n2 - 1 : n2 - 2;
        for (int j = lo; j <= hi2; ++j) {
            for (int i = lo; i <= hi1; ++i) {
                double a12 = corner_avg(a12_c, co.a[0][1], i, j);
                if (a12 == 0.0) continue;
                double rho = corner_avg(rho_c, co.rho, i, j);
                double q = scale * rho * std::abs(a12);
                // a12 >= 0 couples SW-NE, a12 < 0 couples SE-NW
                int pi = (a12 >= 0) ? i : i + 1;
                int pj = j;
                int qi = (a12 >= 0) ? i + 1 : i;
                int qj = j + 1;
                bool p_in = pi >= 0 && pi < n1 && pj >= 0 && pj < n2;
                bool q_in = qi >= 0 && qi < n1 && qj >= 0 && qj < n2;
                if (p_in && q_in)
                    add_link(g.flat_index(pi, pj), g.flat_index(qi, qj), q);
                else if (ext == Extension::Dirichlet && (p_in || q_in))
                    add_absorption(p_in ? g.flat_index(pi, pj) : g.flat_index(qi, qj), q);
            }
        }
    }

};

} // namespace

GeneratorMatrix assemble(const CoefficientSet& coeffs, const Grid& grid, Extension extension) {
    if (coeffs.dim != grid.dim())
        throw std::invalid_argument("coefficient dimension does not match grid dimension");
    Assembler as(coeffs, grid, extension);
    as.axis_faces(0);
    if (grid.dim() == 2) {
        as.axis_faces(1);
        if (as.has_cross) as.corner_links();
    }

    GeneratorMatrix m;
    m.grid_ = grid;
    m.extension_ = extension;
    m.w_std_.resize(grid.cells());
    m.weights_.resize(static_cast<Eigen::Index>(grid.cells()));
    for (std::size_t i = 0; i < grid.cells(); ++i) {
        double w = as.rho_c[i] * grid.cell_volume();
        m.w_std_[i] = w;
        m.weights_[static_cast<Eigen::Index>(i)] = w;
        if (as.c_c[i] != 0.0) {
            m.has_killing_ = true;
            as.trip.emplace_back(static_cast<int>(i), static_cast<int>(i), as.c_c[i] * w);
        }
    }
    m.q_.resize(static_cast<Eigen::Index>(grid.cells()), static_cast<Eigen::Index>(grid.cells()));
    m.q_.setFromTriplets(as.trip.begin(), as.trip.end());
    m.q_.makeCompressed();
    return m;
}

GeneratorMatrix friedrichs_reference(const CoefficientSet& coeffs, const Grid& grid) {
    return assemble(coeffs, grid, Extension::Neumann);
}

std::vector<double> GeneratorMatrix::apply(const std::vector<double>& u) const {
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::VectorXd r = apply(Eigen::VectorXd(uv));
    return std::vector<double>(r.data(), r.data() + r.size());
}

Eigen::VectorXd GeneratorMatrix::apply(const Eigen::VectorXd& u) const {
    Eigen::VectorXd qu = q_ * u;
    return qu.cwiseQuotient(weights_);
}

double GeneratorMatrix::quad_form(const std::vector<double>& u, const std::vector<double>& v) const {
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    return uv.dot(q_ * vv);
}

double GeneratorMatrix::symmetry_residual() const {
    Eigen::SparseMatrix<double> d = Eigen::SparseMatrix<double>(q_.transpose()) - q_;
    double num = 0, den = 0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
            num = std::max(num, std::abs(it.value()));
    for (int k = 0; k < q_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(q_, k); it; ++it)
            den = std::max(den, std::abs(it.value()));
    return den > 0 ? num / den : num;
}

double GeneratorMatrix::offdiag_min() const {
    double m = 0.0;
    for (int k = 0; k < q_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(q_, k); it; ++it)
            if (it.row() != it.col())
                m = std::min(m, it.value() / weights_[it.row()]);
    return m;
}

double GeneratorMatrix::rowsum_relative_max() const {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(q_.rows());
    Eigen::VectorXd rs = q_ * ones;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < rs.size(); ++i) {
        double diag = std::abs(q_.coeff(i, i));
        worst = std::max(worst, std::abs(rs[i]) / std::max(1.0, diag));
    }
    return worst;
}

double GeneratorMatrix::diag_max_abs() const {
    double m = 0.0;
    for (Eigen::Index i = 0; i < q_.rows(); ++i) m = std::max(m, std::abs(q_.coeff(i, i) / weights_[i]));
    return m;
}

std::vector<std::array<double, 3>> GeneratorMatrix::coordinate_entries() const {
    std::vector<std::array<double, 3>> out;
    out.reserve(static_cast<std::size_t>(q_.nonZeros()));
    for (int k = 0; k < q_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(q_, k); it; ++it)
            out.push_back({static_cast<double>(it.row()), static_cast<double>(it.col()),
                           it.value() / weights_[it.row()]});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
    });
    return out;
}

DriftField derive_drift(const CoefficientSet& coeffs) {
    DriftField out;
    if (coeffs.has_explicit_drift()) {
        out.b[0] = coeffs.b[0];
        if (coeffs.dim == 2) out.b[1] = coeffs.b[1];
        return out;
    }
    for (int j = 0; j < coeffs.dim; ++j) {
        expr::Expression sum = expr::number(0);
        for (int i = 0; i < coeffs.dim; ++i) {
            const expr::Expression& aij = coeffs.a[i][j] ? coeffs.a[i][j] : coeffs.a[j][i];
            auto da = expr::differentiate(aij, i + 1);
            out.kink = out.kink || da.kink;
            auto drho = expr::differentiate(coeffs.rho, i + 1);
            out.kink = out.kink || drho.kink;
            // d_i a_ij + 2 a_ij rho^{-1/2} d_i rho^{1/2} = d_i a_ij + a_ij d_i rho / rho
            sum = expr::add(sum, expr::add(da.expr, expr::div(expr::mul(aij, drho.expr),
                                                              coeffs.rho)));
        }
        out.b[j] = sum;
    }
    return out;
}

std::array<std::array<double, 2>, 2> factorize_sigma(const std::array<std::array<double, 2>, 2>& a,
                                                     int dim) {
    constexpr double kTol = 1e-12;
    std::array<std::array<double, 2>, 2> s{};
    double scale = std::max({std::abs(a[0][0]), std::abs(a[1][1]), std::abs(a[0][1]), 1.0});
    auto ev = eigen_range(a, dim);
    if (ev.min < -kTol * scale)
        throw std::runtime_error("matrix is indefinite: negative eigenvalue " +
                                 std::to_string(ev.min));
    if (dim == 1) {
        s[0][0] = std::sqrt(std::max(0.0, a[0][0]));
        return s;
    }
    if (a[0][0] > kTol * scale) {
        s[0][0] = std::sqrt(a[0][0]);
        s[1][0] = a[1][0] / s[0][0];
        s[1][1] = std::sqrt(std::max(0.0, a[1][1] - s[1][0] * s[1][0]));
    } else {
        // PSD with vanishing (1,1) entry forces a zero first column
        s[0][0] = 0.0;
        s[1][0] = 0.0;
        s[1][1] = std::sqrt(std::max(0.0, a[1][1]));
    }
    return s;
}

std::vector<double> expanded_operator_apply(const CoefficientSet& coeffs, const Grid& grid,
                                            const expr::Expression& phi) {
    DriftField drift = derive_drift(coeffs);
    std::vector<double> out(grid.cells(), 0.0);

    std::array<std::array<expr::Expression, 2>, 2> d2{};
    std::array<expr::Expression, 2> d1{};
    for (int i = 0; i < grid.dim(); ++i) {
        d1[i] = expr::differentiate(phi, i + 1).expr;
        for (int j = 0; j < grid.dim(); ++j)
            d2[i][j] = expr::differentiate(d1[i], j + 1).expr;
    }

    for (int i = 0; i < grid.dim(); ++i) {
        for (int j = 0; j < grid.dim(); ++j) {
            const expr::Expression& aij = coeffs.a[i][j] ? coeffs.a[i][j] : coeffs.a[j][i];
            std::vector<double> av = sample_field(aij, grid);
            std::vector<double> dv = sample_field(d2[i][j], grid);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += av[k] * dv[k];
        }
        std::vector<double> bv = sample_field(drift.b[i], grid);
        std::vector<double> dv = sample_field(d1[i], grid);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += bv[k] * dv[k];
    }
    if (coeffs.c) {
        std::vector<double> cv = sample_field(coeffs.c, grid);
        std::vector<double> pv = sample_field(phi, grid);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += cv[k] * pv[k];
    }
    return out;
}

} // namespace fpkit
