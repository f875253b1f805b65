#include "fpkit/hille1d.hpp"

#include <cmath>
#include <limits>

#include "fpkit/quadrature.hpp"

namespace fpkit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add3(double a, double b, double c) { return log_add(log_add(a, b), c); }

// log of the 3-point Simpson estimate of the integral of e^{g} when only the
// log values of the integrand are available
double log_simpson3(double ga, double gm, double gb, double w) {
    return log_add3(ga, gm + std::log(4.0), gb) + std::log(w / 6.0);
}

// Integral of e^{g(u)} du over [a, b] in the log domain. The integrand
// concentrates in boundary layers much narrower than the interval whenever
// the exponent is steep, so the subdivision is adaptive; subintervals whose
// coarse estimate falls below `log_cutoff` are negligible against the rest
// of the panel and are accepted as-is.
class LogExpIntegrator {
public:
    explicit LogExpIntegrator(std::function<double(double)> g) : g_(std::move(g)) {}
    bool depth_exhausted = false;

    double run(double a, double b) {
        double ga = g_(a), gb = g_(b), gm = g_(0.5 * (a + b));
        double whole = log_simpson3(ga, gm, gb, b - a);
        double cutoff = whole + std::log(1e-18);
        return recurse(a, ga, 0.5 * (a + b), gm, b, gb, whole, cutoff, 56);
    }

private:
    std::function<double(double)> g_;

    double recurse(double a, double ga, double m, double gm, double b, double gb, double whole,
                   double cutoff, int depth) {
        if (whole <= cutoff) return whole;
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double glm = g_(lm), grm = g_(rm);
        double left = log_simpson3(ga, glm, gm, m - a);
        double right = log_simpson3(gm, grm, gb, b - m);
        double sum = log_add(left, right);
        // d = (whole - sum) / sum in real space
        double d = std::expm1(whole - sum);
        if (std::abs(d) <= 1e-9 && d > -15.0 && d < 15.0)
            return sum + std::log1p(-d / 15.0);
        if (depth <= 0) {
            depth_exhausted = true;
            return sum;
        }
        return log_add(recurse(a, ga, lm, glm, m, gm, left, cutoff, depth - 1),
                       recurse(m, gm, rm, grm, b, gb, right, cutoff, depth - 1));
    }
};

struct Rung {
    int k;
    double log_value;     // log I(2^k)
    double log_increment; // log contribution of the final octave
};

// Marches h(y) = e^{B(y)} int_0^y e^{-B(u)} du and its running integral from
// 0 to 2^kmax, recording rung values at y = 2^k. Only exponent differences
// of B over short intervals are ever formed, so no precision is lost to the
// absolute size of B.
class LadderMarch {
public:
    LadderMarch(std::function<double(double)> b, int kmax) : b_(std::move(b)), kmax_(kmax) {}
    bool depth_exhausted = false;

    std::vector<Rung> run() {
        std::vector<Rung> rungs;
        double log_h = kNegInf;
        double log_total = kNegInf;
        double y = 0.0;
        for (int k = 2; k <= kmax_; ++k) {
            double y_end = std::ldexp(1.0, k);
            int nsub = k == 2 ? 256 : 64;
            double log_octave = kNegInf;
            double w = (y_end - y) / nsub;
            double prev_log_h = log_h;
            double prev_y = y;
            for (int j = 0; j < nsub; ++j) {
                double y0 = y + w * j;
                double y1 = (j + 1 == nsub) ? y_end : y + w * (j + 1);
                double next = advance(prev_log_h, y0, y1);
                if (j % 2 == 1) {
                    // outer Simpson panel over the last two subintervals
                    double panel =
                        log_simpson3(plog2_, prev_log_h, next, y1 - prev_y2_);
                    log_octave = log_add(log_octave, panel);
                } else {
                    plog2_ = prev_log_h;
                    prev_y2_ = y0;
                }
                prev_log_h = next;
            }
            (void)prev_y;
            y = y_end;
            log_h = prev_log_h;
            log_total = log_add(log_total, log_octave);
            rungs.push_back({k, log_total, log_octave});
        }
        return rungs;
    }

private:
    std::function<double(double)> b_;
    int kmax_;
    double plog2_ = kNegInf;
    double prev_y2_ = 0.0;

    double local_B(double from, double to) const {
        return adaptive_simpson(b_, from, to, 1e-12);
    }

    // one marching step: h(y1) = e^{B(y1)-B(y0)} h(y0) + int_{y0}^{y1}
    // e^{B(y1)-B(u)} du
    double advance(double log_h0, double y0, double y1) {
        double delta_b = local_B(y0, y1);
        LogExpIntegrator inner([this, y1](double u) { return local_B(u, y1); });
        double log_panel = inner.run(y0, y1);
        if (inner.depth_exhausted) depth_exhausted = true;
        return log_add(log_h0 + delta_b, log_panel);
    }
};

IntegralClass classify_rungs(const std::vector<Rung>& rungs) {
    std::size_t n = rungs.size();
    if (n < 5) return IntegralClass::Inconclusive;
    const Rung& last = rungs[n - 1];

    if (last.log_value - rungs[n - 5].log_value >= std::log(10.0)) return IntegralClass::Diverges;

    double rel_inc = std::exp(last.log_increment - last.log_value);
    if (rel_inc < 1e-8) return IntegralClass::Converges;

    // Geometrically decaying octave contributions mean a summable tail even
    // when the march noise floor (~1e-8 relative) hides how small the true
    // increments already are.
    if (rel_inc < 1e-6) {
        bool decaying = true;
        for (std::size_t j = n - 3; j < n && decaying; ++j)
            decaying = std::exp(rungs[j].log_increment - rungs[j - 1].log_increment) <= 0.9;
        if (decaying) return IntegralClass::Converges;
    }

    bool stable = true;
    for (std::size_t j = n - 3; j < n; ++j) {
        double ratio = std::exp(rungs[j].log_increment - rungs[j - 1].log_increment);
        if (!(ratio >= 0.5 && ratio <= 2.5)) stable = false;
    }
    if (stable && rel_inc >= 1e-6) return IntegralClass::Diverges;

    return IntegralClass::Inconclusive;
}

Solvable both_diverge(const IntegralClassification& p, const IntegralClassification& m) {
    if (p.cls == IntegralClass::Converges || m.cls == IntegralClass::Converges)
        return Solvable::No;
    if (p.cls == IntegralClass::Diverges && m.cls == IntegralClass::Diverges)
        return Solvable::Yes;
    return Solvable::Unknown;
}

nlohmann::ordered_json classification_json(const IntegralClassification& c) {
    nlohmann::ordered_json j;
    j["class"] = std::string(integral_class_name(c.cls));
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.trace.rung.size(); ++i) {
        nlohmann::ordered_json row;
        row["k"] = c.trace.rung[i];
        row["cutoff"] = std::ldexp(1.0, c.trace.rung[i]);
        row["log_value"] = c.trace.log_value[i];
        trace.push_back(std::move(row));
    }
    j["trace"] = std::move(trace);
    if (!c.diagnostic.empty()) j["diagnostic"] = c.diagnostic;
    return j;
}

} // namespace

std::string_view integral_class_name(IntegralClass c) {
    switch (c) {
        case IntegralClass::Diverges: return "diverges";
        case IntegralClass::Converges: return "converges";
        case IntegralClass::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::string_view solvable_name(Solvable s) {
    switch (s) {
        case Solvable::Yes: return "yes";
        case Solvable::No: return "no";
        case Solvable::Unknown: return "unknown";
    }
    return "unknown";
}

double antiderivative_B(const expr::Expression& b, double x) {
    auto f = [&b](double u) {
        expr::EvalPoint p;
        p.x = std::span<const double>(&u, 1);
        return expr::evaluate(b, p);
    };
    return adaptive_simpson(f, 0.0, x, 1e-10);
}

IntegralClassification classify_integral(const expr::Expression& b, Tail tail, IntegralVariant v,
                                         int ladder_max) {
    // the minus tail is the plus tail of the reflected drift -b(-s); the
    // second integral is the first one for the negated drift
    double flip_arg = tail == Tail::MinusInfinity ? -1.0 : 1.0;
    double flip_val = (tail == Tail::MinusInfinity ? -1.0 : 1.0) *
                      (v == IntegralVariant::I2 ? -1.0 : 1.0);
    auto beff = [&b, flip_arg, flip_val](double s) {
        double u = flip_arg * s;
        expr::EvalPoint p;
        p.x = std::span<const double>(&u, 1);
        return flip_val * expr::evaluate(b, p);
    };

    IntegralClassification out;
    try {
        LadderMarch march(beff, ladder_max);
        std::vector<Rung> rungs = march.run();
        for (const Rung& r : rungs) {
            out.trace.rung.push_back(r.k);
            out.trace.log_value.push_back(r.log_value);
        }
        if (march.depth_exhausted) {
            out.cls = IntegralClass::Inconclusive;
            out.diagnostic = "inner quadrature depth exhausted (exponent too steep)";
            return out;
        }
        out.cls = classify_rungs(rungs);
        if (out.cls == IntegralClass::Inconclusive)
            out.diagnostic = "ladder exhausted without a stable growth pattern";
    } catch (const expr::EvalError& e) {
        out.cls = IntegralClass::Inconclusive;
        out.diagnostic = std::string("drift evaluation failed on the ladder: ") + e.what();
    } catch (const QuadratureError& e) {
        out.cls = IntegralClass::Inconclusive;
        out.diagnostic = std::string("antiderivative quadrature failed: ") + e.what();
    }
    return out;
}

HilleVerdict hille_classify(const expr::Expression& b, int ladder_max) {
    HilleVerdict v;
    v.drift = expr::to_string(b);
    v.i1_plus = classify_integral(b, Tail::PlusInfinity, IntegralVariant::I1, ladder_max);
    v.i1_minus = classify_integral(b, Tail::MinusInfinity, IntegralVariant::I1, ladder_max);
    v.i2_plus = classify_integral(b, Tail::PlusInfinity, IntegralVariant::I2, ladder_max);
    v.i2_minus = classify_integral(b, Tail::MinusInfinity, IntegralVariant::I2, ladder_max);

    v.problem_l0 = both_diverge(v.i1_plus, v.i1_minus);
    Solvable extra = both_diverge(v.i2_plus, v.i2_minus);
    if (v.problem_l0 == Solvable::No || extra == Solvable::No)
        v.problem_l = Solvable::No;
    else if (v.problem_l0 == Solvable::Yes && extra == Solvable::Yes)
        v.problem_l = Solvable::Yes;
    else
        v.problem_l = Solvable::Unknown;
    return v;
}

nlohmann::ordered_json HilleVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["drift"] = drift;
    j["I1"]["plus_infinity"] = classification_json(i1_plus);
    j["I1"]["minus_infinity"] = classification_json(i1_minus);
    j["I2"]["plus_infinity"] = classification_json(i2_plus);
    j["I2"]["minus_infinity"] = classification_json(i2_minus);
    j["problem_L0_solvable"] = std::string(solvable_name(problem_l0));
    j["problem_L_solvable"] = std::string(solvable_name(problem_l));
    return j;
}

} // namespace fpkit
