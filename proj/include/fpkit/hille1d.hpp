#pragma once

#include <string>
#include <vector>

#include "fpkit/expr.hpp"
#include "json.hpp"

namespace fpkit {

enum class IntegralClass { Diverges, Converges, Inconclusive };
enum class IntegralVariant { I1, I2 };
enum class Tail { PlusInfinity, MinusInfinity };
enum class Solvable { Yes, No, Unknown };

std::string_view integral_class_name(IntegralClass c);
std::string_view solvable_name(Solvable s);

// Partial values of the iterated integral at the cutoff ladder x = 2^k.
// Values are kept as logarithms; they reach e^(1e8) in the divergent cases.
struct LadderTrace {
    std::vector<int> rung;       // exponent k
    std::vector<double> log_value;
};

struct IntegralClassification {
    IntegralClass cls = IntegralClass::Inconclusive;
    LadderTrace trace;
    std::string diagnostic;      // filled when inconclusive
};

// B(x) = integral of the drift from 0 to x, adaptive quadrature at relative
// tolerance 1e-10.
double antiderivative_B(const expr::Expression& b, double x);

// Classification of the iterated exponential integral
//   I1(x) = int_0^x e^{B(y)} int_0^y e^{-B(u)} du dy   (I2 swaps the signs)
// toward the given tail, from partial values at cutoffs 2^k, k = 2..ladder_max.
// All arithmetic stays in the log domain. Pinned rules: the last rung
// exceeding 10x the rung four steps earlier means diverges; relative Cauchy
// increments below 1e-8 mean converges; slowly but steadily growing rungs
// (per-octave increments within a factor [0.5, 2.5] of each other over the
// last three octaves and still above 1e-6 of the value) also mean diverges,
// which covers logarithmic divergence. Anything else is inconclusive.
IntegralClassification classify_integral(const expr::Expression& b, Tail tail, IntegralVariant v,
                                         int ladder_max = 14);

struct HilleVerdict {
    std::string drift;
    IntegralClassification i1_plus, i1_minus, i2_plus, i2_minus;
    Solvable problem_l0 = Solvable::Unknown;
    Solvable problem_l = Solvable::Unknown;

    nlohmann::ordered_json to_json() const;
};

// Problem L0 is solvable iff I1 diverges toward both infinities; Problem L
// additionally needs I2 to diverge toward both. A converging integral
// anywhere settles the answer negatively; inconclusive classifications leave
// it unknown.
HilleVerdict hille_classify(const expr::Expression& b, int ladder_max = 14);

} // namespace fpkit
