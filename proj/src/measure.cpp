#include "fpkit/measure.hpp"

#include "fpkit/numeric.hpp"

namespace fpkit {

DiscreteMeasure::DiscreteMeasure(const Grid& grid, std::vector<double> masses)
    : masses_(std::move(masses)) {
    if (masses_.size() != grid.cells())
        throw std::invalid_argument("measure has " + std::to_string(masses_.size()) +
                                    " entries for a grid of " + std::to_string(grid.cells()) +
                                    " cells");
    for (std::size_t i = 0; i < masses_.size(); ++i) {
        double& m = masses_[i];
        if (m < 0.0) {
            if (m < -kMassSlack)
                throw std::invalid_argument("negative mass " + std::to_string(m) + " in cell " +
                                            std::to_string(i));
            m = 0.0;
        }
    }
    double tot = total();
    if (!(tot <= 1.0 + kMassSlack))
        throw std::invalid_argument("total mass " + std::to_string(tot) +
                                    " exceeds 1 (subprobability violated)");
}

double DiscreteMeasure::total() const { return kahan_total(masses_); }

} // namespace fpkit
