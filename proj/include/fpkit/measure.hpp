#pragma once

#include <string>
#include <vector>

#include "fpkit/grid.hpp"

namespace fpkit {

// Nonnegative cell masses, total at most 1 (+ tolerance): a subprobability
// measure on the grid. Values in (-1e-12, 0) coming from finite solver
// tolerance are clamped to 0; anything more negative is rejected.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    DiscreteMeasure(const Grid& grid, std::vector<double> masses);

    const std::vector<double>& masses() const { return masses_; }
    std::vector<double>& masses() { return masses_; }
    double total() const;
    std::size_t cells() const { return masses_.size(); }

    static constexpr double kMassSlack = 1e-12;

private:
    std::vector<double> masses_;
};

} // namespace fpkit
