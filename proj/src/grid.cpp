#include "fpkit/grid.hpp"

#include <string>

namespace fpkit {

namespace {

void check_axis(double lo, double hi, int n, int axis) {
    if (!(lo < hi))
        throw std::invalid_argument("grid axis " + std::to_string(axis + 1) +
                                    ": lower bound must be below upper bound");
    if (n < 4)
        throw std::invalid_argument("grid axis " + std::to_string(axis + 1) +
                                    ": need at least 4 cells, got " + std::to_string(n));
}

} // namespace

Grid Grid::make_1d(double lo, double hi, int n) {
    check_axis(lo, hi, n, 0);
    Grid g;
    g.dim_ = 1;
    g.n_ = {n, 1};
    g.lo_ = {lo, 0};
    g.hi_ = {hi, 0};
    g.h_ = {(hi - lo) / n, 0};
    g.cells_ = static_cast<std::size_t>(n);
    g.vol_ = g.h_[0];
    return g;
}

Grid Grid::make_2d(double lo1, double hi1, int n1, double lo2, double hi2, int n2) {
    check_axis(lo1, hi1, n1, 0);
    check_axis(lo2, hi2, n2, 1);
    Grid g;
    g.dim_ = 2;
    g.n_ = {n1, n2};
    g.lo_ = {lo1, lo2};
    g.hi_ = {hi1, hi2};
    g.h_ = {(hi1 - lo1) / n1, (hi2 - lo2) / n2};
    g.cells_ = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
    g.vol_ = g.h_[0] * g.h_[1];
    return g;
}

Grid Grid::refined(int factor) const {
    if (dim_ == 1) return make_1d(lo_[0], hi_[0], n_[0] * factor);
    return make_2d(lo_[0], hi_[0], n_[0] * factor, lo_[1], hi_[1], n_[1] * factor);
}

Grid Grid::scaled_box(double fraction) const {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("scaled_box fraction must be in (0, 1]");
    auto shrink = [fraction](double lo, double hi) {
        double mid = 0.5 * (lo + hi);
        double half = 0.5 * (hi - lo) * fraction;
        return std::array<double, 2>{mid - half, mid + half};
    };
    auto b1 = shrink(lo_[0], hi_[0]);
    if (dim_ == 1) return make_1d(b1[0], b1[1], n_[0]);
    auto b2 = shrink(lo_[1], hi_[1]);
    return make_2d(b1[0], b1[1], n_[0], b2[0], b2[1], n_[1]);
}

} // namespace fpkit
