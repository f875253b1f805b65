#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <string>
#include <vector>

#include "fpkit/coefficients.hpp"
#include "fpkit/grid.hpp"
#include "fpkit/scenario.hpp"

namespace fpkit {

class AssemblyError : public std::runtime_error {
public:
    AssemblyError(const std::string& what, std::size_t cell) : std::runtime_error(what), cell_(cell) {}
    std::size_t cell() const { return cell_; }

private:
    std::size_t cell_;
};

class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Finite-volume realization of the weighted second-order operator on a grid,
// under one of two boundary closures:
//   Neumann   - zero flux through the boundary (conservative),
//   Dirichlet - zero exterior value imposed at the boundary face (absorbing).
//
// Stored as the symmetric weighted form Q = W L (W = diag(rho_i * vol)), so
// m-symmetry of L is structural. Off-diagonals of L are nonnegative; the
// 2-D cross entry a12 is carried by diagonal links with the face
// coefficients reduced accordingly, and assembly fails loudly if that
// splitting loses positivity at some face.
class GeneratorMatrix {
public:
    GeneratorMatrix() = default;

    std::size_t size() const { return weights_.size(); }
    Extension extension() const { return extension_; }
    bool has_killing() const { return has_killing_; }
    const Grid& grid() const { return grid_; }

    const Eigen::SparseMatrix<double>& weighted_form() const { return q_; }
    const std::vector<double>& weights() const { return w_std_; }
    const Eigen::VectorXd& weights_vec() const { return weights_; }

    // (L u)_i
    std::vector<double> apply(const std::vector<double>& u) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& u) const;

    // <L u, v>_m = u^T Q v
    double quad_form(const std::vector<double>& u, const std::vector<double>& v) const;

    // ---- invariant diagnostics -------------------------------------------
    double symmetry_residual() const;          // max |Q - Q^T| / max |Q|
    double offdiag_min() const;                // min over i != j of L_ij
    double rowsum_relative_max() const;        // max_i |sum_j L_ij| / max(1, |L_ii|)
    double diag_max_abs() const;

    // coordinate-format text lines "row col value" of L (row-major order)
    std::vector<std::array<double, 3>> coordinate_entries() const;

    friend GeneratorMatrix assemble(const CoefficientSet&, const Grid&, Extension);

private:
    Eigen::SparseMatrix<double> q_; // W L, symmetric negative semidefinite
    Eigen::VectorXd weights_;
    std::vector<double> w_std_;
    Grid grid_;
    Extension extension_ = Extension::Neumann;
    bool has_killing_ = false;
};

GeneratorMatrix assemble(const CoefficientSet& coeffs, const Grid& grid, Extension extension);

// Conservative closure used as the reference extension.
GeneratorMatrix friedrichs_reference(const CoefficientSet& coeffs, const Grid& grid);

// Symbolic drift of the expanded operator: b_j = sum_i (d_i a_ij + a_ij d_i rho / rho).
// If the set carries an explicit drift, that one is returned unchanged.
struct DriftField {
    std::array<expr::Expression, 2> b{};
    bool kink = false; // differentiation crossed abs/min/max
};
DriftField derive_drift(const CoefficientSet& coeffs);

// Pointwise lower-triangular factor sigma with sigma sigma^T = A (tolerance
// 1e-12). Rank-deficient PSD input yields zero columns; indefinite input
// throws with the negative eigenvalue as witness.
std::array<std::array<double, 2>, 2> factorize_sigma(const std::array<std::array<double, 2>, 2>& a,
                                                     int dim);

// Pointwise action of the expanded symbolic operator
// (a_ij d_i d_j + b_j d_j + c) phi at every cell center: the consistency
// target for the assembled matrix on smooth phi.
std::vector<double> expanded_operator_apply(const CoefficientSet& coeffs, const Grid& grid,
                                            const expr::Expression& phi);

} // namespace fpkit
