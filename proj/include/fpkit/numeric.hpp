#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fpkit {

// Neumaier-compensated summation; fixed left-to-right order keeps results
// reproducible across runs.
class KahanSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(const std::vector<double>& v) {
    KahanSum s;
    for (double x : v) s.add(x);
    return s.value();
}

// Deterministic splitmix64 stream with a fixed 53-bit uniform mapping, so
// random draws do not depend on library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

private:
    std::uint64_t state_;
};

// I_k = integral of the sampled function from t_0 to t_k on a uniform stamp
// grid (I_0 = 0).
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& g, double dt) {
    std::vector<double> out(g.size(), 0.0);
    KahanSum s;
    for (std::size_t k = 1; k < g.size(); ++k) {
        s.add(0.5 * dt * (g[k - 1] + g[k]));
        out[k] = s.value();
    }
    return out;
}

} // namespace fpkit
