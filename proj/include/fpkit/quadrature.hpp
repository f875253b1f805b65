#pragma once

#include <functional>
#include <stdexcept>

namespace fpkit {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive Simpson with Richardson correction. Tolerance is
// rel_tol * |first whole-interval estimate| + abs_tol; throws
// QuadratureError when the recursion depth cap is hit before convergence.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, double abs_tol = 0.0);

// log(e^a + e^b), safe for widely separated magnitudes; -inf acts as zero.
double log_add(double a, double b);

} // namespace fpkit
