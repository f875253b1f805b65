#pragma once

#include <Eigen/SparseCholesky>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fpkit/generator.hpp"
#include "fpkit/measure.hpp"
#include "fpkit/report.hpp"

namespace fpkit {

enum class TimeScheme { BackwardEuler, CrankNicolson };
std::string_view scheme_name(TimeScheme s);

// One-step implicit propagator for u' = L u with a prefactored direct solve.
// Internally works on v = W^{1/2} u, so the factored matrix
// I - theta dt W^{-1/2} (W L) W^{-1/2} is symmetric positive definite with
// condition number independent of how many orders of magnitude the weights
// span. Backward Euler (default) keeps iterates inside [0,1] on the M-matrix
// discretization; Crank-Nicolson trades that guarantee for second order.
class Stepper {
public:
    Stepper(const GeneratorMatrix& gen, double dt,
            TimeScheme scheme = TimeScheme::BackwardEuler);

    Stepper(const Stepper&) = delete;
    Stepper& operator=(const Stepper&) = delete;

    std::vector<double> step(const std::vector<double>& u) const;
    Eigen::VectorXd step(const Eigen::VectorXd& u) const;
    Eigen::MatrixXd step_block(const Eigen::MatrixXd& u) const; // one state per column

    double dt() const { return dt_; }
    TimeScheme scheme() const { return scheme_; }
    std::size_t size() const { return static_cast<std::size_t>(sqrt_w_.size()); }

private:
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
    Eigen::SparseMatrix<double> cn_rhs_;
    Eigen::VectorXd sqrt_w_, inv_sqrt_w_;
    double dt_;
    TimeScheme scheme_;
};

// Iterates of e^{t L} u at t = dt, 2 dt, ..., steps dt (initial state first).
std::vector<std::vector<double>> step_semigroup(const GeneratorMatrix& gen,
                                                const std::vector<double>& u, double dt, int steps,
                                                TimeScheme scheme = TimeScheme::BackwardEuler);

// Discrete measure path mu_k = (T_{t_k} u) . m together with the densities
// u_k = dmu_k/dm that produced it.
struct SolutionPath {
    std::string generator_id;
    TimeScheme scheme = TimeScheme::BackwardEuler;
    double dt = 0.0;
    Grid grid;
    std::vector<double> times;
    std::vector<DiscreteMeasure> measures;
    std::vector<std::vector<double>> densities;

    std::size_t stamps() const { return times.size(); }
    std::vector<double> mass_curve() const;
};

// Evolves nu = u . m (u = nu_i / w_i) and records every stamp up to T.
// T must be an integer multiple of dt.
SolutionPath solve_fpke(const GeneratorMatrix& gen, const DiscreteMeasure& nu, double dt, double T,
                        TimeScheme scheme = TimeScheme::BackwardEuler,
                        std::string_view generator_id = "");

// Max over stamps of |<phi, T_t u>_m - <phi, u>_m - int_0^t <L phi, T_s u>_m ds|
// with trapezoidal time quadrature.
double verify_duality(const GeneratorMatrix& gen, const std::vector<double>& u,
                      const std::vector<double>& phi, double T, double dt,
                      TimeScheme scheme = TimeScheme::BackwardEuler);

// Product test function f(t) phi(x): phi compactly supported at least two
// cell layers away from the boundary, f with f(T) = 0.
struct TestFunctionPair {
    expr::Expression phi;
    expr::Expression f;
};

// Three pinned pairs (bump phi; f = linear ramp, quadratic ramp, cosine ramp).
std::vector<TestFunctionPair> standard_test_battery(const Grid& grid, double T);

// Defect of the weak Fokker-Planck identity along the path, accumulated per
// step as f-weighted (change of <phi, mu>) minus the trapezoid of
// <L0 phi, mu>; summation by parts makes this equal to the textbook
// |int (f' phi + f L0 phi) dmu dt + f(0) int phi dmu_0| form while vanishing
// identically on a frozen path. L0 phi is realized with the conservative
// reference assembly of `coeffs`.
double weak_residual(const SolutionPath& path, const CoefficientSet& coeffs,
                     const TestFunctionPair& pair);

// Evolves `trials` random states with 0 <= u <= 1 for `steps` backward-Euler
// steps and reports the global iterate range; pass iff within
// [-1e-12, 1 + 1e-12].
ConditionReport check_submarkov(const GeneratorMatrix& gen, double dt, int steps, int trials,
                                std::uint64_t seed = 1);

// Subprobability-path class membership: weak-FPKE battery, killing-term
// integrability, drift local square integrability, and the mass inequality
// at every stamp.
ConditionReport check_sp_membership(const SolutionPath& path, const CoefficientSet& coeffs,
                                    const DiscreteMeasure& nu);

// Max over stamps of |nu(tot) - mu_t(tot) + int_0^t int c dmu ds|.
double mass_balance_killing(const SolutionPath& path, const std::vector<double>& c_field);

struct DensityDifference {
    double sup_norm = 0.0;
    double l1_norm = 0.0;
};

// Cellwise ratios against the midpoint measure nu = (A+B)/2 per stamp
// (0/0 := 1); returns the max over stamps of sup and L1(nu) norms of the
// ratio difference.
DensityDifference convex_midpoint_compare(const SolutionPath& a, const SolutionPath& b);

} // namespace fpkit
