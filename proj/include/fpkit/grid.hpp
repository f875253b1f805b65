#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fpkit {

// Uniform tensor grid of cell-centered boxes, dim 1 or 2.
// Flat cell index is i1 + n1 * i2 (axis 1 fastest).
class Grid {
public:
    static Grid make_1d(double lo, double hi, int n);
    static Grid make_2d(double lo1, double hi1, int n1, double lo2, double hi2, int n2);

    int dim() const { return dim_; }
    int n(int axis) const { return n_[axis]; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    double h(int axis) const { return h_[axis]; }
    std::size_t cells() const { return cells_; }
    double cell_volume() const { return vol_; }

    double center(int axis, int i) const { return lo_[axis] + (i + 0.5) * h_[axis]; }

    std::array<int, 2> multi_index(std::size_t flat) const {
        if (dim_ == 1) return {static_cast<int>(flat), 0};
        return {static_cast<int>(flat % n_[0]), static_cast<int>(flat / n_[0])};
    }

    std::size_t flat_index(int i1, int i2 = 0) const {
        return static_cast<std::size_t>(i1) + static_cast<std::size_t>(n_[0]) * i2;
    }

    // center coordinates of a cell, padded with 0 for the unused axis
    std::array<double, 2> point(std::size_t flat) const {
        auto mi = multi_index(flat);
        std::array<double, 2> p{center(0, mi[0]), 0.0};
        if (dim_ == 2) p[1] = center(1, mi[1]);
        return p;
    }

    // number of cell layers between this cell and the nearest boundary face
    // (0 for boundary cells)
    int boundary_distance(std::size_t flat) const {
        auto mi = multi_index(flat);
        int d = std::min(mi[0], n_[0] - 1 - mi[0]);
        if (dim_ == 2) d = std::min(d, std::min(mi[1], n_[1] - 1 - mi[1]));
        return d;
    }

    Grid refined(int factor) const;
    // same resolution on a centered sub-box scaled by `fraction` (0 < fraction <= 1)
    Grid scaled_box(double fraction) const;

private:
    int dim_ = 1;
    std::array<int, 2> n_{0, 1};
    std::array<double, 2> lo_{0, 0};
    std::array<double, 2> hi_{0, 0};
    std::array<double, 2> h_{0, 0};
    std::size_t cells_ = 0;
    double vol_ = 0;
};

} // namespace fpkit
