#include "fpkit/quadrature.hpp"

#include <cmath>
#include <limits>

namespace fpkit {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double recurse(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0)
        throw QuadratureError("adaptive quadrature did not converge (depth cap reached)");
    return recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double abs_tol) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = simpson(fa, fm, fb, b - a);
    double eps = std::max(abs_tol, rel_tol * std::abs(whole));
    if (eps == 0.0) eps = std::numeric_limits<double>::denorm_min();
    return sign * recurse(f, a, b, fa, fm, fb, whole, eps, 48);
}

double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

} // namespace fpkit
