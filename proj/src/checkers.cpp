#include "fpkit/checkers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "fpkit/generator.hpp"
#include "fpkit/numeric.hpp"

namespace fpkit {

namespace {

constexpr double kGrowthFactor = 1.5;   // refinement / box-doubling tolerance
constexpr double kCollapseFactor = 0.5; // minimum-eigenvalue decay under refinement

struct Entry {
    int i, j;
    const char* name;
};

std::vector<Entry> matrix_entries(int dim) {
    if (dim == 1) return {{0, 0, "a11"}};
    return {{0, 0, "a11"}, {0, 1, "a12"}, {1, 1, "a22"}};
}

// stored expression of an entry, honoring the mirrored off-diagonal; zero if absent
expr::Expression entry_expr(const CoefficientSet& coeffs, int i, int j) {
    if (coeffs.a[i][j]) return coeffs.a[i][j];
    if (coeffs.a[j][i]) return coeffs.a[j][i];
    return expr::number(0.0);
}

double eval_at(const expr::Expression& e, const std::array<double, 2>& p, int dim, double t = 0.0) {
    return expr::evaluate(e, {t, std::span<const double>(p.data(), static_cast<std::size_t>(dim))});
}

double norm2(const std::array<double, 2>& p, int dim) {
    return dim == 2 ? std::hypot(p[0], p[1]) : std::abs(p[0]);
}

double dist(const std::array<double, 2>& p, const std::array<double, 2>& q, int dim) {
    return dim == 2 ? std::hypot(p[0] - q[0], p[1] - q[1]) : std::abs(p[0] - q[0]);
}

std::string point_str(const std::array<double, 2>& p, int dim) {
    std::ostringstream os;
    os.precision(6);
    os << "(" << p[0];
    if (dim == 2) os << ", " << p[1];
    os << ")";
    return os.str();
}

void witness_point(ConditionReport& rep, const std::array<double, 2>& p, int dim) {
    rep.witnesses["witness_x1"] = p[0];
    if (dim == 2) rep.witnesses["witness_x2"] = p[1];
}

bool inside(const Grid& box, const std::array<double, 2>& p, int dim) {
    for (int ax = 0; ax < dim; ++ax)
        if (p[ax] < box.lo(ax) || p[ax] > box.hi(ax)) return false;
    return true;
}

// expanded drift (explicit one wins), plus whether a one-sided derivative
// convention was involved
struct Drift {
    std::array<expr::Expression, 2> b{};
    bool kink = false;
};

Drift drift_of(const CoefficientSet& coeffs) {
    DriftField d = derive_drift(coeffs);
    return {d.b, d.kink};
}

double drift_norm_at(const Drift& d, const std::array<double, 2>& p, int dim) {
    double b1 = eval_at(d.b[0], p, dim);
    double b2 = dim == 2 ? eval_at(d.b[1], p, dim) : 0.0;
    return std::hypot(b1, b2);
}

// log-derivative field rho^{-1/2} d_k rho^{1/2} = d_k rho / (2 rho)
struct LogGradient {
    std::array<expr::Expression, 2> l{};
    bool kink = false;
};

LogGradient log_gradient(const CoefficientSet& coeffs) {
    LogGradient out;
    for (int k = 0; k < coeffs.dim; ++k) {
        auto d = expr::differentiate(coeffs.rho, k + 1);
        out.kink = out.kink || d.kink;
        out.l[k] = expr::div(d.expr, expr::mul(expr::number(2.0), coeffs.rho));
    }
    return out;
}

// midpoint-rule integral of `f` over the cells of `box`
template <typename F>
double box_integral(const Grid& box, int dim, F&& f) {
    KahanSum s;
    for (std::size_t i = 0; i < box.cells(); ++i) s.add(f(box.point(i)));
    return s.value() * box.cell_volume();
}

template <typename F>
double box_sup(const Grid& box, int dim, F&& f, std::array<double, 2>* argmax = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < box.cells(); ++i) {
        auto p = box.point(i);
        double v = f(p);
        if (v > best) {
            best = v;
            if (argmax) *argmax = p;
        }
    }
    return best;
}

bool stable(double coarse, double fine) {
    if (!std::isfinite(fine) || !std::isfinite(coarse)) return false;
    return fine <= kGrowthFactor * coarse + 1e-12 * (1.0 + std::abs(fine));
}

// f in L1(weight dx) + Linf decided box-wise: a bounded field has a
// box-stable sup; otherwise the excess over the half-box sup must have a
// box-stable weighted integral.
struct SplitOutcome {
    Verdict verdict = Verdict::Pass;
    double bound = 0.0;
    double tail = 0.0;
    std::string note;
};

template <typename F, typename W>
SplitOutcome l1_linf_split(const Grid& grid, int dim, F&& field, W&& weight) {
    Grid half = grid.scaled_box(0.5);
    Grid quarter = grid.scaled_box(0.25);

    auto absf = [&](const std::array<double, 2>& p) { return std::abs(field(p)); };
    double m_full = box_sup(grid, dim, absf);
    double m_half = box_sup(half, dim, absf);
    double m_quarter = box_sup(quarter, dim, absf);

    SplitOutcome out;
    if (!std::isfinite(m_full)) {
        out.verdict = Verdict::Fail;
        out.note = "field is not finite on the box";
        return out;
    }
    if (m_full <= kGrowthFactor * m_half + 1e-9) {
        out.bound = m_full;
        return out; // bounded part carries everything
    }

    auto excess = [&](const Grid& box, double threshold) {
        return box_integral(box, dim, [&](const std::array<double, 2>& p) {
            return std::max(0.0, std::abs(field(p)) - threshold) * weight(p);
        });
    };
    double mass = box_integral(grid, dim, [&](const std::array<double, 2>& p) { return weight(p); });
    double t_full = excess(grid, m_half);
    double t_half = excess(half, m_quarter);
    out.bound = m_half;
    out.tail = t_full;
    if (!std::isfinite(t_full) || t_full > kGrowthFactor * t_half + 1e-9 * (1.0 + mass)) {
        out.verdict = Verdict::Fail;
        std::ostringstream os;
        os.precision(6);
        os << "integrable tail grows with the box (" << t_half << " -> " << t_full << ")";
        out.note = os.str();
    }
    return out;
}

ConditionReport split_report(std::string id, const SplitOutcome& s) {
    ConditionReport rep;
    rep.id = std::move(id);
    rep.verdict = s.verdict;
    rep.witnesses["bounded_part"] = s.bound;
    rep.witnesses["integrable_tail"] = s.tail;
    rep.note = s.note;
    return rep;
}

// neighbor difference quotients of the matrix entries over cells inside a
// predicate; returns the largest quotient and its location
template <typename Pred>
double lipschitz_quotient(const CoefficientSet& coeffs, const Grid& box, Pred&& keep,
                          std::array<double, 2>* argmax = nullptr) {
    int dim = coeffs.dim;
    auto entries = matrix_entries(dim);
    double best = 0.0;
    for (std::size_t flat = 0; flat < box.cells(); ++flat) {
        auto p = box.point(flat);
        if (!keep(p)) continue;
        auto mi = box.multi_index(flat);
        auto mp = coeffs.a_at(p);
        for (int ax = 0; ax < dim; ++ax) {
            if (mi[ax] + 1 >= box.n(ax)) continue;
            std::size_t nb = ax == 0 ? box.flat_index(mi[0] + 1, mi[1]) : box.flat_index(mi[0], mi[1] + 1);
            auto q = box.point(nb);
            if (!keep(q)) continue;
            auto mq = coeffs.a_at(q);
            for (const auto& e : entries) {
                double quot = std::abs(mp[e.i][e.j] - mq[e.i][e.j]) / box.h(ax);
                if (quot > best) {
                    best = quot;
                    if (argmax) *argmax = p;
                }
            }
        }
    }
    return best;
}

std::string ball_tag(std::size_t k) { return "ball" + std::to_string(k + 1); }

} // namespace

ConditionReport check_H1(const CoefficientSet& coeffs, const Grid& grid,
                         const std::vector<Ball>& balls) {
    ConditionReport rep;
    rep.id = "H1";
    rep.verdict = Verdict::Pass;
    rep.region = std::to_string(balls.size()) + " balls";
    if (balls.empty()) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = "no balls requested";
        return rep;
    }
    try {
        Grid fine = grid.refined(2);
        for (std::size_t k = 0; k < balls.size(); ++k) {
            const Ball& ball = balls[k];
            auto scan = [&](const Grid& box, double& gamma, double& big, std::array<double, 2>& argmin) {
                bool any = false;
                gamma = std::numeric_limits<double>::infinity();
                big = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < box.cells(); ++i) {
                    auto p = box.point(i);
                    if (dist(p, ball.center, coeffs.dim) > ball.radius) continue;
                    auto ev = eigen_range(coeffs.a_at(p), coeffs.dim);
                    if (ev.min < gamma) {
                        gamma = ev.min;
                        argmin = p;
                    }
                    big = std::max(big, ev.max);
                    any = true;
                }
                return any;
            };
            double g_coarse, g_fine, m_coarse, m_fine;
            std::array<double, 2> where_c{}, where_f{};
            bool any_c = scan(grid, g_coarse, m_coarse, where_c);
            bool any_f = scan(fine, g_fine, m_fine, where_f);
            std::string tag = ball_tag(k);
            if (!any_c || !any_f) {
                rep.verdict = combine(rep.verdict, Verdict::Inconclusive);
                rep.note = tag + " contains no sampled nodes";
                continue;
            }
            rep.witnesses[tag + ".gamma"] = g_fine;
            rep.witnesses[tag + ".M"] = m_fine;
            if (g_fine <= 0.0 || g_fine < kCollapseFactor * g_coarse) {
                rep.verdict = Verdict::Fail;
                rep.note = "ellipticity collapses near " + point_str(where_f, coeffs.dim) + " in " + tag;
                witness_point(rep, where_f, coeffs.dim);
            }
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_H2(const CoefficientSet& coeffs, const Grid& grid,
                         const std::vector<Ball>& balls) {
    ConditionReport rep;
    rep.id = "H2";
    rep.verdict = Verdict::Pass;
    rep.region = std::to_string(balls.size()) + " balls";
    if (balls.empty()) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = "no balls requested";
        return rep;
    }
    try {
        std::array<Grid, 3> levels{grid, grid.refined(2), grid.refined(4)};
        for (std::size_t k = 0; k < balls.size(); ++k) {
            const Ball& ball = balls[k];
            auto keep = [&](const std::array<double, 2>& p) {
                return dist(p, ball.center, coeffs.dim) <= ball.radius;
            };
            std::array<double, 3> lam{};
            std::array<double, 2> where{};
            for (int lvl = 0; lvl < 3; ++lvl)
                lam[lvl] = lipschitz_quotient(coeffs, levels[lvl], keep, lvl == 2 ? &where : nullptr);
            std::string tag = ball_tag(k);
            rep.witnesses[tag + ".Lambda"] = lam[2];
            if (lam[2] > kGrowthFactor * lam[0] + 1e-12 * (1.0 + lam[2])) {
                rep.verdict = Verdict::Fail;
                rep.note = "difference quotients grow under refinement near " +
                           point_str(where, coeffs.dim) + " in " + tag;
                witness_point(rep, where, coeffs.dim);
            }
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_H3_H4(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "H3-H4";
    rep.region = "full box vs centered half box";

    ConditionReport h3;
    h3.id = "H3";
    h3.verdict = Verdict::Pass;
    ConditionReport h4;
    h4.id = "H4";
    h4.verdict = Verdict::Pass;
    try {
        Grid half = grid.scaled_box(0.5);
        int dim = coeffs.dim;

        auto eigen_scan = [&](const Grid& box, double& gamma, double& big,
                              std::array<double, 2>& argmin, std::array<double, 2>& argmax) {
            gamma = std::numeric_limits<double>::infinity();
            big = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < box.cells(); ++i) {
                auto p = box.point(i);
                auto ev = eigen_range(coeffs.a_at(p), dim);
                if (ev.min < gamma) {
                    gamma = ev.min;
                    argmin = p;
                }
                if (ev.max > big) {
                    big = ev.max;
                    argmax = p;
                }
            }
        };
        double g_full, m_full, g_half, m_half;
        std::array<double, 2> amin_f{}, amax_f{}, amin_h{}, amax_h{};
        eigen_scan(grid, g_full, m_full, amin_f, amax_f);
        eigen_scan(half, g_half, m_half, amin_h, amax_h);
        h3.witnesses["gamma"] = g_full;
        h3.witnesses["M"] = m_full;
        if (g_full <= 0.0) {
            h3.verdict = Verdict::Fail;
            h3.note = "ellipticity lost at " + point_str(amin_f, dim);
            witness_point(h3, amin_f, dim);
        } else if (m_full > kGrowthFactor * m_half + 1e-12) {
            h3.verdict = Verdict::Fail;
            h3.note = "upper bound grows with the box, largest at " + point_str(amax_f, dim);
            witness_point(h3, amax_f, dim);
        } else if (g_half > kGrowthFactor * g_full + 1e-12) {
            h3.verdict = Verdict::Fail;
            h3.note = "ellipticity decays toward the boundary, smallest at " + point_str(amin_f, dim);
            witness_point(h3, amin_f, dim);
        } else {
            auto all = [](const std::array<double, 2>&) { return true; };
            std::array<double, 2> lwhere{};
            double lam_full = lipschitz_quotient(coeffs, grid, all, &lwhere);
            double lam_fine = lipschitz_quotient(coeffs, grid.refined(2), all);
            double lam_half = lipschitz_quotient(coeffs, half, all);
            h3.witnesses["Lambda"] = lam_fine;
            if (lam_fine > kGrowthFactor * lam_full + 1e-12 * (1.0 + lam_fine)) {
                h3.verdict = Verdict::Fail;
                h3.note = "Lipschitz quotients grow under refinement near " + point_str(lwhere, dim);
                witness_point(h3, lwhere, dim);
            } else if (lam_full > kGrowthFactor * lam_half + 1e-12 * (1.0 + lam_full)) {
                h3.verdict = Verdict::Fail;
                h3.note = "Lipschitz constant grows with the box";
            }
        }

        Drift d = drift_of(coeffs);
        std::array<double, 2> bwhere{};
        auto bnorm = [&](const std::array<double, 2>& p) { return drift_norm_at(d, p, dim); };
        double b_full = box_sup(grid, dim, bnorm, &bwhere);
        double b_half = box_sup(half, dim, bnorm);
        h4.witnesses["sup_b"] = b_full;
        if (!std::isfinite(b_full) || b_full > kGrowthFactor * b_half + 1e-9) {
            h4.verdict = Verdict::Fail;
            h4.note = "drift is unbounded on growing boxes, largest at " + point_str(bwhere, dim);
            witness_point(h4, bwhere, dim);
        } else if (d.kink) {
            h4.verdict = Verdict::Inconclusive;
            h4.note = "drift uses a one-sided derivative convention";
        }
    } catch (const expr::EvalError& e) {
        h3.verdict = combine(h3.verdict, Verdict::Inconclusive);
        h4.verdict = combine(h4.verdict, Verdict::Inconclusive);
        rep.note = e.what();
    }
    rep.items.push_back(h3);
    rep.items.push_back(h4);
    rep.verdict = combine(h3.verdict, h4.verdict);
    return rep;
}

ConditionReport check_A(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "A";
    rep.verdict = Verdict::Pass;
    rep.region = "full box and centered half box";
    int dim = coeffs.dim;
    try {
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            auto p = grid.point(i);
            auto ev = eigen_range(coeffs.a_at(p), dim);
            double rho = coeffs.rho_at(p);
            double c = coeffs.c_at(p);
            if (ev.min < -1e-12 * (1.0 + std::abs(ev.max))) {
                rep.verdict = Verdict::Fail;
                rep.note = "diffusion matrix indefinite at " + point_str(p, dim);
                witness_point(rep, p, dim);
                rep.witnesses["min_eigenvalue"] = ev.min;
                return rep;
            }
            if (!(rho > 0.0) || !std::isfinite(rho)) {
                rep.verdict = Verdict::Fail;
                rep.note = "weight density not positive at " + point_str(p, dim);
                witness_point(rep, p, dim);
                rep.witnesses["rho"] = rho;
                return rep;
            }
            if (c > 1e-12) {
                rep.verdict = Verdict::Fail;
                rep.note = "killing term positive at " + point_str(p, dim);
                witness_point(rep, p, dim);
                rep.witnesses["c"] = c;
                return rep;
            }
        }

        bool kink = false;
        auto entries = matrix_entries(dim);
        std::vector<expr::Expression> da; // all first partials of all entries
        for (const auto& e : entries)
            for (int ax = 0; ax < dim; ++ax) {
                auto d = expr::differentiate(entry_expr(coeffs, e.i, e.j), ax + 1);
                kink = kink || d.kink;
                da.push_back(d.expr);
            }
        LogGradient lg = log_gradient(coeffs);
        kink = kink || lg.kink;

        auto grad_sq = [&](const std::array<double, 2>& p) {
            double s = 0.0;
            for (const auto& e : da) {
                double v = eval_at(e, p, dim);
                s += v * v;
            }
            return s * coeffs.rho_at(p);
        };
        auto c_sq = [&](const std::array<double, 2>& p) {
            double v = coeffs.c_at(p);
            return v * v * coeffs.rho_at(p);
        };
        auto weighted_log_grad = [&](const std::array<double, 2>& p) {
            auto a = coeffs.a_at(p);
            double l1 = eval_at(lg.l[0], p, dim);
            double l2 = dim == 2 ? eval_at(lg.l[1], p, dim) : 0.0;
            double s = 0.0;
            for (int j = 0; j < dim; ++j) {
                double vj = a[0][j] * l1 + (dim == 2 ? a[1][j] * l2 : 0.0);
                s += vj * vj;
            }
            return s * coeffs.rho_at(p);
        };

        struct Named {
            const char* key;
            std::function<double(const std::array<double, 2>&)> f;
        };
        std::vector<Named> fields{{"int_da2_rho", grad_sq}, {"int_c2_rho", c_sq},
                                  {"int_logdrift2_rho", weighted_log_grad}};
        std::array<Grid, 2> boxes{grid, grid.scaled_box(0.5)};
        for (const auto& field : fields) {
            for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
                double coarse = box_integral(boxes[bi], dim, field.f);
                double fine = box_integral(boxes[bi].refined(2), dim, field.f);
                if (!stable(coarse, fine)) {
                    rep.verdict = Verdict::Fail;
                    std::ostringstream os;
                    os.precision(6);
                    os << field.key << " unstable under refinement (" << coarse << " -> " << fine
                       << ")";
                    rep.note = os.str();
                    rep.witnesses[field.key] = fine;
                    return rep;
                }
                if (bi == 0) rep.witnesses[field.key] = fine;
            }
        }
        if (kink) {
            rep.verdict = Verdict::Inconclusive;
            rep.note = "coefficient derivatives use a one-sided convention at kinks";
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

std::vector<std::pair<double, double>> vmo_oscillation(const expr::Expression& g,
                                                       const std::vector<double>& radii,
                                                       const Grid& grid, std::uint64_t seed) {
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end());
    const int dim = grid.dim();
    const int pairs = 64;
    Rng rng(seed);

    std::size_t stride = std::max<std::size_t>(1, grid.cells() / 1024);
    std::vector<std::array<double, 2>> centers;
    for (std::size_t i = 0; i < grid.cells(); i += stride) centers.push_back(grid.point(i));

    auto sample_in_ball = [&](const std::array<double, 2>& c, double r) {
        std::array<double, 2> y{c[0], c[1]};
        if (dim == 1) {
            y[0] = c[0] + r * (2.0 * rng.uniform01() - 1.0);
            return y;
        }
        for (int attempt = 0; attempt < 256; ++attempt) {
            double u = 2.0 * rng.uniform01() - 1.0;
            double v = 2.0 * rng.uniform01() - 1.0;
            if (u * u + v * v <= 1.0) {
                y[0] = c[0] + r * u;
                y[1] = c[1] + r * v;
                return y;
            }
        }
        return y; // unreachable in practice
    };

    std::vector<std::pair<double, double>> out;
    double cumulative = 0.0;
    for (double r : rs) {
        double worst = 0.0;
        for (const auto& c : centers) {
            bool clear = true;
            for (int ax = 0; ax < dim; ++ax)
                clear = clear && c[ax] - grid.lo(ax) >= r && grid.hi(ax) - c[ax] >= r;
            if (!clear) continue;
            KahanSum acc;
            for (int k = 0; k < pairs; ++k) {
                auto y = sample_in_ball(c, r);
                auto z = sample_in_ball(c, r);
                acc.add(std::abs(eval_at(g, y, dim) - eval_at(g, z, dim)));
            }
            worst = std::max(worst, acc.value() / pairs);
        }
        cumulative = std::max(cumulative, worst);
        out.emplace_back(r, cumulative);
    }
    return out;
}

ConditionReport check_vmo(const CoefficientSet& coeffs, const Grid& grid, std::uint64_t seed) {
    ConditionReport rep;
    rep.id = "VMO";
    rep.verdict = Verdict::Pass;
    int dim = coeffs.dim;

    double halfwidth = std::numeric_limits<double>::infinity();
    for (int ax = 0; ax < dim; ++ax) halfwidth = std::min(halfwidth, 0.5 * (grid.hi(ax) - grid.lo(ax)));
    double base = 0.25 * halfwidth;
    std::vector<double> radii{base, base / 2, base / 4, base / 8, base / 16};
    {
        std::ostringstream os;
        os.precision(6);
        os << "radii " << base / 16 << " .. " << base;
        rep.region = os.str();
    }
    try {
        auto entries = matrix_entries(dim);
        std::uint64_t entry_seed = seed;
        for (const auto& e : entries) {
            auto osc = vmo_oscillation(entry_expr(coeffs, e.i, e.j), radii, grid, entry_seed++);
            double at_min = osc.front().second; // radii ascend
            double at_max = osc.back().second;
            rep.witnesses[std::string(e.name) + ".O_min"] = at_min;
            rep.witnesses[std::string(e.name) + ".O_max"] = at_max;
            if (at_min > 0.6 * at_max + 1e-12) {
                rep.verdict = Verdict::Fail;
                rep.note = std::string("oscillation of ") + e.name +
                           " does not vanish at small radii";
            }
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_lyapunov(const CoefficientSet& coeffs, const Grid& grid, double c_lo,
                               double c_hi) {
    ConditionReport rep;
    rep.id = "LYAP";
    rep.region = "nodes with |x| > 1";
    int dim = coeffs.dim;
    try {
        Drift d = drift_of(coeffs);
        Grid half = grid.scaled_box(0.5);

        struct Node {
            double lhs, basis;
            std::array<double, 2> p;
        };
        auto collect = [&](const Grid& box) {
            std::vector<Node> nodes;
            for (std::size_t i = 0; i < box.cells(); ++i) {
                auto p = box.point(i);
                double s = p[0] * p[0] + (dim == 2 ? p[1] * p[1] : 0.0);
                if (s <= 1.0) continue;
                auto a = coeffs.a_at(p);
                double tr = a[0][0] + (dim == 2 ? a[1][1] : 0.0);
                double axx = a[0][0] * p[0] * p[0];
                if (dim == 2) axx += 2.0 * a[0][1] * p[0] * p[1] + a[1][1] * p[1] * p[1];
                double b1 = eval_at(d.b[0], p, dim);
                double b2 = dim == 2 ? eval_at(d.b[1], p, dim) : 0.0;
                double bx = b1 * p[0] + b2 * p[1];
                double lhs = 2.0 * tr - 4.0 * axx / (s + 1.0) +
                             coeffs.c_at(p) * (s + 1.0) * std::log(s + 1.0) + 2.0 * bx;
                double basis = (s + 1.0) * (1.0 + std::log(s + 1.0));
                nodes.push_back({lhs, basis, p});
            }
            return nodes;
        };

        auto required = [](const std::vector<Node>& nodes, const Node** arg) {
            double worst = -std::numeric_limits<double>::infinity();
            for (const auto& n : nodes) {
                double r = n.lhs / n.basis;
                if (r > worst) {
                    worst = r;
                    if (arg) *arg = &n;
                }
            }
            return worst;
        };

        auto full_nodes = collect(grid);
        auto half_nodes = collect(half);
        if (full_nodes.empty() || half_nodes.empty()) {
            rep.verdict = Verdict::Inconclusive;
            rep.note = "no sampled nodes outside the unit ball";
            return rep;
        }
        const Node* arg_full = nullptr;
        double c_full = required(full_nodes, &arg_full);
        double c_half = required(half_nodes, nullptr);
        rep.witnesses["required_C"] = c_full;
        rep.witnesses["required_C_half_box"] = c_half;

        if (c_full > kGrowthFactor * std::max(c_half, c_lo)) {
            rep.verdict = Verdict::Fail;
            rep.note = "required constant grows with the box, worst node at " +
                       point_str(arg_full->p, dim);
            witness_point(rep, arg_full->p, dim);
            return rep;
        }

        double found = std::numeric_limits<double>::quiet_NaN();
        for (int j = 0; j < 200; ++j) {
            double cc = c_lo * std::pow(c_hi / c_lo, j / 199.0);
            if (cc >= c_full) {
                found = cc;
                break;
            }
        }
        if (!std::isfinite(found)) {
            rep.verdict = Verdict::Fail;
            rep.note = "no constant up to " + std::to_string(c_hi) + " satisfies the inequality at " +
                       point_str(arg_full->p, dim);
            witness_point(rep, arg_full->p, dim);
            return rep;
        }
        rep.verdict = d.kink ? Verdict::Inconclusive : Verdict::Pass;
        if (d.kink) rep.note = "drift uses a one-sided derivative convention";
        rep.witnesses["C"] = found;
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_thm32_growth(const CoefficientSet& coeffs, const SolutionPath& path,
                                   const Grid& grid) {
    ConditionReport rep;
    rep.id = "THM32-growth";
    rep.verdict = Verdict::Pass;
    int dim = coeffs.dim;
    try {
        Drift d = drift_of(coeffs);
        auto entries = matrix_entries(dim);

        std::vector<double> weight(grid.cells());
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            auto p = grid.point(i);
            double s = p[0] * p[0] + (dim == 2 ? p[1] * p[1] : 0.0);
            double suma = 0.0;
            auto a = coeffs.a_at(p);
            for (const auto& e : entries) suma += std::abs(a[e.i][e.j]);
            weight[i] = suma / (1.0 + s) + drift_norm_at(d, p, dim) / (1.0 + std::sqrt(s));
        }
        std::vector<double> g(path.stamps());
        for (std::size_t k = 0; k < path.stamps(); ++k) {
            KahanSum s;
            const auto& m = path.measures[k].masses();
            for (std::size_t i = 0; i < m.size(); ++i) s.add(weight[i] * m[i]);
            g[k] = s.value();
        }
        double value = cumulative_trapezoid(g, path.dt).back();
        rep.witnesses["path_integral"] = value;
        if (!std::isfinite(value)) {
            rep.verdict = Verdict::Fail;
            rep.note = "path integral diverged";
        }

        const double p_exp = dim + 3;
        auto lp_item = [&](const char* id, auto&& f, double exponent) {
            ConditionReport item;
            item.id = id;
            double coarse = box_integral(grid, dim, [&](const std::array<double, 2>& x) {
                return std::pow(std::abs(f(x)), exponent);
            });
            double fine = box_integral(grid.refined(2), dim, [&](const std::array<double, 2>& x) {
                return std::pow(std::abs(f(x)), exponent);
            });
            item.witnesses["quadrature_coarse"] = coarse;
            item.witnesses["quadrature_fine"] = fine;
            item.verdict = stable(coarse, fine) ? Verdict::Pass : Verdict::Inconclusive;
            if (item.verdict != Verdict::Pass) item.note = "quadrature not refinement-stable";
            return item;
        };
        rep.items.push_back(lp_item(
            "THM32-b-lp", [&](const std::array<double, 2>& x) { return drift_norm_at(d, x, dim); },
            p_exp));
        rep.items.push_back(lp_item(
            "THM32-c-lp", [&](const std::array<double, 2>& x) { return coeffs.c_at(x); },
            p_exp / 2.0));
        for (const auto& item : rep.items) rep.verdict = combine(rep.verdict, item.verdict);
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_lebris_lions(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "LBL";
    int dim = coeffs.dim;
    try {
        Drift drift = drift_of(coeffs);
        bool kink = drift.kink;
        std::array<expr::Expression, 2> beta{};
        for (int j = 0; j < dim; ++j) {
            expr::Expression div_a = expr::number(0.0);
            for (int i = 0; i < dim; ++i) {
                auto dij = expr::differentiate(entry_expr(coeffs, i, j), i + 1);
                kink = kink || dij.kink;
                div_a = expr::add(div_a, dij.expr);
            }
            beta[j] = expr::sub(drift.b[j], div_a);
        }
        expr::Expression div_beta = expr::number(0.0);
        for (int j = 0; j < dim; ++j) {
            auto dj = expr::differentiate(beta[j], j + 1);
            kink = kink || dj.kink;
            div_beta = expr::add(div_beta, dj.expr);
        }

        ConditionReport div_item;
        div_item.id = "LBL-divbeta";
        div_item.verdict = Verdict::Pass;
        Grid half = grid.scaled_box(0.5);
        std::array<double, 2> where{};
        auto absdiv = [&](const std::array<double, 2>& p) {
            return std::abs(eval_at(div_beta, p, dim));
        };
        double s_full = box_sup(grid, dim, absdiv, &where);
        double s_half = box_sup(half, dim, absdiv);
        div_item.witnesses["sup_div_beta"] = s_full;
        if (!std::isfinite(s_full) || s_full > kGrowthFactor * s_half + 1e-9) {
            div_item.verdict = Verdict::Fail;
            div_item.note = "divergence grows with the box, largest at " + point_str(where, dim);
            witness_point(div_item, where, dim);
        }

        auto lebesgue = [](const std::array<double, 2>&) { return 1.0; };
        auto beta_field = [&](const std::array<double, 2>& p) {
            double b1 = eval_at(beta[0], p, dim);
            double b2 = dim == 2 ? eval_at(beta[1], p, dim) : 0.0;
            return std::hypot(b1, b2) / (1.0 + norm2(p, dim));
        };
        ConditionReport beta_item = split_report("LBL-beta", l1_linf_split(grid, dim, beta_field, lebesgue));

        ConditionReport sigma_item;
        sigma_item.id = "LBL-sigma";
        sigma_item.verdict = Verdict::Pass;
        try {
            auto sigma_field = [&](const std::array<double, 2>& p) {
                auto s = factorize_sigma(coeffs.a_at(p), dim);
                double sq = 0.0;
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) sq += s[i][j] * s[i][j];
                return std::sqrt(sq) / (1.0 + norm2(p, dim));
            };
            sigma_item = split_report("LBL-sigma", l1_linf_split(grid, dim, sigma_field, lebesgue));
        } catch (const std::runtime_error& e) {
            sigma_item.verdict = Verdict::Fail;
            sigma_item.note = e.what();
        }

        if (kink) {
            for (ConditionReport* item : {&div_item, &beta_item})
                if (item->verdict == Verdict::Pass) {
                    item->verdict = Verdict::Inconclusive;
                    item->note = "derivatives use a one-sided convention at kinks";
                }
        }
        rep.items = {div_item, beta_item, sigma_item};
        rep.verdict = Verdict::Pass;
        for (const auto& item : rep.items) rep.verdict = combine(rep.verdict, item.verdict);
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_znu_tail(const expr::Expression& rho_tilde, const SolutionPath& path,
                               const Grid& grid, const std::vector<double>& annuli) {
    ConditionReport rep;
    rep.id = "ZNU-tail";
    rep.verdict = Verdict::Pass;
    constexpr double kFloor = 1e-14;
    int dim = grid.dim();
    try {
        std::vector<double> values;
        for (double n_lo : annuli) {
            std::vector<std::size_t> cells;
            for (std::size_t i = 0; i < grid.cells(); ++i) {
                double r = norm2(grid.point(i), dim);
                if (r >= n_lo && r <= 2.0 * n_lo) cells.push_back(i);
            }
            std::vector<double> g(path.stamps(), 0.0);
            for (std::size_t k = 0; k < path.stamps(); ++k) {
                KahanSum s;
                const auto& m = path.measures[k].masses();
                for (std::size_t i : cells) {
                    auto p = grid.point(i);
                    double rt = eval_at(rho_tilde, p, dim);
                    double r = norm2(p, dim);
                    double z = m[i] / grid.cell_volume();
                    s.add(((std::sqrt(rt) + rt) / (1.0 + r) * z +
                           rt * rt / (1.0 + r * r) * z * z) *
                          grid.cell_volume());
                }
                g[k] = s.value();
            }
            values.push_back(cumulative_trapezoid(g, path.dt).back());
        }
        for (std::size_t j = 0; j < values.size(); ++j)
            rep.witnesses["N" + std::to_string(j + 1)] = values[j];
        for (std::size_t j = 0; j + 1 < values.size(); ++j) {
            if (values[j + 1] > std::max(0.9 * values[j], kFloor)) {
                rep.verdict = Verdict::Fail;
                std::ostringstream os;
                os.precision(6);
                os << "tail does not decay between annuli at N = " << annuli[j] << " and N = "
                   << annuli[j + 1];
                rep.note = os.str();
            }
        }
        if (rep.verdict == Verdict::Pass && !values.empty() &&
            values.back() > std::max(0.3 * values.front(), kFloor)) {
            rep.verdict = Verdict::Fail;
            rep.note = "tail decays too slowly across the annulus ladder";
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_int43(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "INT43";
    int dim = coeffs.dim;
    try {
        Drift d = drift_of(coeffs);
        auto entries = matrix_entries(dim);
        auto rho_weight = [&](const std::array<double, 2>& p) { return coeffs.rho_at(p); };

        auto a_field = [&](const std::array<double, 2>& p) {
            auto a = coeffs.a_at(p);
            double s = 0.0;
            for (const auto& e : entries) s += std::abs(a[e.i][e.j]);
            return s;
        };
        auto b_field = [&](const std::array<double, 2>& p) { return drift_norm_at(d, p, dim); };
        auto c_field = [&](const std::array<double, 2>& p) { return coeffs.c_at(p); };

        rep.items.push_back(split_report("INT43-a", l1_linf_split(grid, dim, a_field, rho_weight)));
        rep.items.push_back(split_report("INT43-b", l1_linf_split(grid, dim, b_field, rho_weight)));
        rep.items.push_back(split_report("INT43-c", l1_linf_split(grid, dim, c_field, rho_weight)));
        rep.verdict = Verdict::Pass;
        for (const auto& item : rep.items) rep.verdict = combine(rep.verdict, item.verdict);
        if (rep.verdict == Verdict::Pass && d.kink) {
            rep.verdict = Verdict::Inconclusive;
            rep.note = "drift uses a one-sided derivative convention";
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_rho_lp47(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "RHO-LP47";
    int dim = coeffs.dim;
    double p_exp = dim + 3;
    rep.witnesses["p"] = p_exp;
    try {
        LogGradient lg = log_gradient(coeffs);
        auto field = [&](const std::array<double, 2>& p) {
            double l1 = eval_at(lg.l[0], p, dim);
            double l2 = dim == 2 ? eval_at(lg.l[1], p, dim) : 0.0;
            return std::pow(std::hypot(l1, l2), p_exp);
        };
        double coarse = box_integral(grid, dim, field);
        double fine = box_integral(grid.refined(2), dim, field);
        rep.witnesses["quadrature_coarse"] = coarse;
        rep.witnesses["quadrature_fine"] = fine;
        if (!stable(coarse, fine)) {
            rep.verdict = Verdict::Inconclusive;
            rep.note = "quadrature not refinement-stable";
        } else {
            rep.verdict = lg.kink ? Verdict::Inconclusive : Verdict::Pass;
            if (lg.kink) rep.note = "weight derivatives use a one-sided convention at kinks";
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_int48(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "INT48";
    int dim = coeffs.dim;
    try {
        Drift d = drift_of(coeffs);
        auto entries = matrix_entries(dim);
        auto rho_weight = [&](const std::array<double, 2>& p) { return coeffs.rho_at(p); };
        rep.verdict = Verdict::Pass;
        for (int j = 0; j < dim; ++j) {
            auto field = [&](const std::array<double, 2>& p) {
                auto a = coeffs.a_at(p);
                double s = p[0] * p[0] + (dim == 2 ? p[1] * p[1] : 0.0);
                double suma = 0.0;
                for (int i = 0; i < dim; ++i) suma += std::abs(a[i][j]);
                double bj = std::abs(eval_at(d.b[j], p, dim));
                return suma / (1.0 + s) + bj / (1.0 + std::sqrt(s));
            };
            rep.items.push_back(split_report("INT48-x" + std::to_string(j + 1),
                                             l1_linf_split(grid, dim, field, rho_weight)));
        }
        for (const auto& item : rep.items) rep.verdict = combine(rep.verdict, item.verdict);
        if (rep.verdict == Verdict::Pass && d.kink) {
            rep.verdict = Verdict::Inconclusive;
            rep.note = "drift uses a one-sided derivative convention";
        }
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

ConditionReport check_rho_class48(const CoefficientSet& coeffs, const Grid& grid) {
    ConditionReport rep;
    rep.id = "RHO-CLASS48";
    int dim = coeffs.dim;
    try {
        LogGradient lg = log_gradient(coeffs);
        Grid half = grid.scaled_box(0.5);

        ConditionReport mass_item;
        mass_item.id = "RHO-mass";
        double mass = box_integral(grid, dim, [&](const std::array<double, 2>& p) {
            return coeffs.rho_at(p);
        });
        mass_item.witnesses["total_mass"] = mass;
        mass_item.verdict = std::abs(mass - 1.0) <= 0.02 ? Verdict::Pass : Verdict::Fail;
        if (mass_item.verdict == Verdict::Fail)
            mass_item.note = "weight density does not integrate to 1 on the box";

        ConditionReport lp_item;
        lp_item.id = "RHO-l1l3";
        lp_item.verdict = Verdict::Pass;
        for (double expnt : {1.0, 3.0}) {
            auto f = [&](const std::array<double, 2>& p) {
                return std::pow(coeffs.rho_at(p), expnt);
            };
            double coarse = box_integral(grid, dim, f);
            double fine = box_integral(grid.refined(2), dim, f);
            double inner = box_integral(half, dim, f);
            lp_item.witnesses["L" + std::to_string(static_cast<int>(expnt))] = fine;
            if (!stable(coarse, fine) || fine > kGrowthFactor * inner + 1e-9) {
                lp_item.verdict = Verdict::Fail;
                lp_item.note = "integral of rho^" + std::to_string(static_cast<int>(expnt)) +
                               " is not box-stable";
            }
        }

        ConditionReport grad_item;
        grad_item.id = "RHO-sqrt-grad";
        grad_item.verdict = Verdict::Pass;
        auto grad_sqrt = [&](const std::array<double, 2>& p) {
            double l1 = eval_at(lg.l[0], p, dim);
            double l2 = dim == 2 ? eval_at(lg.l[1], p, dim) : 0.0;
            return std::hypot(l1, l2) * std::sqrt(coeffs.rho_at(p));
        };
        double sup_full = box_sup(grid, dim, grad_sqrt);
        double sup_half = box_sup(half, dim, grad_sqrt);
        double int_coarse = box_integral(grid, dim, grad_sqrt);
        double int_fine = box_integral(grid.refined(2), dim, grad_sqrt);
        grad_item.witnesses["sup_grad_sqrt_rho"] = sup_full;
        grad_item.witnesses["int_grad_sqrt_rho"] = int_fine;
        if (!std::isfinite(sup_full) || sup_full > kGrowthFactor * sup_half + 1e-9) {
            grad_item.verdict = Verdict::Fail;
            grad_item.note = "gradient of sqrt(rho) grows with the box";
        } else if (!stable(int_coarse, int_fine)) {
            grad_item.verdict = Verdict::Fail;
            grad_item.note = "gradient of sqrt(rho) is not locally integrable";
        } else if (lg.kink) {
            grad_item.verdict = Verdict::Inconclusive;
            grad_item.note = "weight derivatives use a one-sided convention at kinks";
        }

        rep.items = {mass_item, lp_item, grad_item};
        rep.verdict = Verdict::Pass;
        for (const auto& item : rep.items) rep.verdict = combine(rep.verdict, item.verdict);
    } catch (const expr::EvalError& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = e.what();
    }
    return rep;
}

std::string_view applicability_name(Applicability a) {
    switch (a) {
    case Applicability::Applicable: return "applicable";
    case Applicability::NotApplicable: return "not applicable";
    default: return "inconclusive";
    }
}

Applicability applicability_from_name(std::string_view name) {
    if (name == "applicable") return Applicability::Applicable;
    if (name == "not applicable") return Applicability::NotApplicable;
    return Applicability::Inconclusive;
}

nlohmann::ordered_json TheoremVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["theorem"] = theorem;
    j["status"] = std::string(applicability_name(status));
    if (!blocking.empty()) j["blocking"] = blocking;
    return j;
}

namespace {

void flatten(const ConditionReport& rep, std::map<std::string, Verdict>& into) {
    auto it = into.find(rep.id);
    if (it == into.end())
        into[rep.id] = rep.verdict;
    else
        it->second = combine(it->second, rep.verdict);
    for (const auto& item : rep.items) flatten(item, into);
}

} // namespace

std::vector<TheoremVerdict> theorem_applicability(const std::vector<ConditionReport>& reports,
                                                  const Scenario& scenario) {
    std::map<std::string, Verdict> byid;
    for (const auto& r : reports) flatten(r, byid);

    // structural facts about the scenario
    bool c_zero = true;
    if (scenario.coeffs.c) {
        for (double v : sample_field(scenario.coeffs.c, scenario.grid))
            c_zero = c_zero && std::abs(v) <= 1e-15;
    }
    bool rho_one = true;
    for (double v : sample_field(scenario.coeffs.rho, scenario.grid))
        rho_one = rho_one && std::abs(v - 1.0) <= 1e-14;
    bool rho2a = scenario.form == OperatorForm::Rho2A;

    auto fact = [&](const std::string& id, bool* value) {
        if (id == "CZERO") {
            *value = c_zero;
            return true;
        }
        if (id == "RHO1") {
            *value = rho_one;
            return true;
        }
        if (id == "FORM-RHO2A") {
            *value = rho2a;
            return true;
        }
        return false;
    };

    struct Route {
        const char* theorem;
        std::vector<std::string> needs;
    };
    const std::vector<Route> routes{
        {"Thm 4.3", {"A", "H1", "VMO", "INT43"}},
        {"Thm 4.4", {"CZERO", "A", "H1", "H2", "RHO-LP47", "INT48"}},
        {"Thm 4.6", {"CZERO", "A", "H1", "H2", "RHO-LP47", "LYAP"}},
        {"Thm 4.7", {"RHO1", "CZERO", "LBL"}},
        {"Thm 4.8", {"FORM-RHO2A", "H3", "RHO-CLASS48"}},
    };

    std::vector<TheoremVerdict> out;
    for (const auto& route : routes) {
        TheoremVerdict tv;
        tv.theorem = route.theorem;
        tv.status = Applicability::Applicable;
        for (const auto& id : route.needs) {
            bool value = false;
            Verdict v;
            if (fact(id, &value))
                v = value ? Verdict::Pass : Verdict::Fail;
            else {
                auto it = byid.find(id);
                if (it == byid.end()) {
                    if (tv.status == Applicability::Applicable) {
                        tv.status = Applicability::Inconclusive;
                        tv.blocking = id;
                    }
                    continue;
                }
                v = it->second;
            }
            if (v == Verdict::Fail) {
                tv.status = Applicability::NotApplicable;
                tv.blocking = id;
                break;
            }
            if (v == Verdict::Inconclusive && tv.status == Applicability::Applicable) {
                tv.status = Applicability::Inconclusive;
                tv.blocking = id;
            }
        }
        out.push_back(tv);
    }
    return out;
}

} // namespace fpkit
