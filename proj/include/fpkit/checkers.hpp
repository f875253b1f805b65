#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fpkit/coefficients.hpp"
#include "fpkit/evolve.hpp"
#include "fpkit/grid.hpp"
#include "fpkit/report.hpp"
#include "fpkit/scenario.hpp"

namespace fpkit {

struct Ball {
    std::array<double, 2> center{0.0, 0.0};
    double radius = 1.0;
};

// Local strict ellipticity: per ball, gamma = min eigenvalue and M = max
// eigenvalue of A over sampled nodes at two sampling resolutions. A minimum
// that keeps collapsing under refinement (ratio < 0.5) marks a degeneracy
// inside the ball and fails with the minimizing point as witness.
ConditionReport check_H1(const CoefficientSet& coeffs, const Grid& grid,
                         const std::vector<Ball>& balls);

// Local Lipschitz constant of A from neighbor difference quotients at three
// sampling resolutions (h, h/2, h/4); quotients growing by more than 1.5
// across the span mark a non-Lipschitz point (Hoelder-type kinks grow by 2).
ConditionReport check_H2(const CoefficientSet& coeffs, const Grid& grid,
                         const std::vector<Ball>& balls);

// Global (box-level) versions: ellipticity bounds, Lipschitz constant of A
// and sup |b|, each compared between the full box and the centered half box;
// growth by more than 1.5 means the constant is not box-independent.
ConditionReport check_H3_H4(const CoefficientSet& coeffs, const Grid& grid);

// Base operator assumptions: pointwise PSD of A, rho > 0, c <= 0, and
// refinement-stable local integrals of |d a|^2 rho, |c|^2 rho and the
// weighted logarithmic-gradient field. Symbolic kinks downgrade pass to
// inconclusive.
ConditionReport check_A(const CoefficientSet& coeffs, const Grid& grid);

// Mean-oscillation estimates O(g, R) = sup over centers and r <= R of the
// average |g(y) - g(z)| over seeded sample pairs in the ball of radius r,
// reported per R (cumulative max over r keeps the list monotone in R).
std::vector<std::pair<double, double>> vmo_oscillation(const expr::Expression& g,
                                                       const std::vector<double>& radii,
                                                       const Grid& grid, std::uint64_t seed = 7);

// VMO plausibility for every entry of A on a pinned geometric radius list:
// pass iff the smallest-radius oscillation dropped below 0.6 of the largest
// (or everything is below 1e-12, as for constants).
ConditionReport check_vmo(const CoefficientSet& coeffs, const Grid& grid, std::uint64_t seed = 7);

// Lyapunov inequality for V = ln(|x|^2 + 1) on nodes with |x| > 1:
//   2 tr A - 4 <Ax, x>/(|x|^2+1) + c (|x|^2+1) ln(|x|^2+1) + 2 <b, x>
//     <= C (|x|^2+1) (1 + ln(|x|^2+1)).
// Feasible C searched on a 200-point logarithmic sweep of [c_lo, c_hi]; the
// required constant must also not grow by more than 1.5 from the half box to
// the full box, otherwise no box-independent C exists and the check fails.
ConditionReport check_lyapunov(const CoefficientSet& coeffs, const Grid& grid, double c_lo = 1e-3,
                               double c_hi = 1e6);

// Path integral of |a|/(1+|x|^2) + |b|/(1+|x|) against the measures of the
// path, plus refinement-stable local p-integrability of b (p = d+3) and c
// (p/2).
ConditionReport check_thm32_growth(const CoefficientSet& coeffs, const SolutionPath& path,
                                   const Grid& grid);

// beta^i = b^i - sum_j d_j a^ij; checks sup |div beta| (box-growth test),
// and |beta|/(1+|x|), sigma/(1+|x|) against L1+Linf splittings with respect
// to Lebesgue measure. One sub-report per condition.
ConditionReport check_lebris_lions(const CoefficientSet& coeffs, const Grid& grid);

// Annulus tail functional on N <= |x| <= 2N (clipped to the box) along a
// density path z = dmu/dx; pass iff the values decrease toward 0 across the
// N-list (values below 1e-14 count as zero).
ConditionReport check_znu_tail(const expr::Expression& rho_tilde, const SolutionPath& path,
                               const Grid& grid, const std::vector<double>& annuli);

// ---- global integrability side conditions used by the uniqueness routes ---

// a^ij, the drift combination d_i a^ij + a^ij rho^{-1/2} d_i rho^{1/2}, and c
// each split into a bounded part plus a rho dx-integrable tail.
ConditionReport check_int43(const CoefficientSet& coeffs, const Grid& grid);

// rho^{-1/2} d_i rho^{1/2} in L^p_loc for p = d+3 (refinement-stable).
ConditionReport check_rho_lp47(const CoefficientSet& coeffs, const Grid& grid);

// |a^ij|/(1+|x|^2) + |d_i a^ij + a^ij rho^{-1/2} d_i rho^{1/2}|/(1+|x|) in
// L1(rho dx) + Linf, per entry.
ConditionReport check_int48(const CoefficientSet& coeffs, const Grid& grid);

// rho in L1 and L3 with unit total mass, sqrt(rho) with bounded gradient and
// locally integrable gradient: the weight class of the degenerate route.
ConditionReport check_rho_class48(const CoefficientSet& coeffs, const Grid& grid);

// ---- theorem routing ------------------------------------------------------

enum class Applicability { Applicable, NotApplicable, Inconclusive };
std::string_view applicability_name(Applicability a);
Applicability applicability_from_name(std::string_view name);

struct TheoremVerdict {
    std::string theorem;
    Applicability status = Applicability::Inconclusive;
    std::string blocking; // condition id that stopped the route, empty when applicable

    nlohmann::ordered_json to_json() const;
};

// Maps each uniqueness theorem's hypothesis list onto the collected reports
// (items of composite reports are searched by id as well) plus structural
// facts about the scenario (c = 0, rho = 1, operator form tag).
std::vector<TheoremVerdict> theorem_applicability(const std::vector<ConditionReport>& reports,
                                                  const Scenario& scenario);

} // namespace fpkit
