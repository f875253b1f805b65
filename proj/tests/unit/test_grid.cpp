#include "doctest.h"

#include "fpkit/grid.hpp"
#include "fpkit/numeric.hpp"

#include <cmath>
#include <vector>

using namespace fpkit;

TEST_CASE("1-D cell centers and indexing") {
    Grid g = Grid::make_1d(-8.0, 8.0, 256);
    CHECK(g.dim() == 1);
    CHECK(g.cells() == 256);
    CHECK(g.h(0) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(g.cell_volume() == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(g.center(0, 0) == doctest::Approx(-7.96875).epsilon(1e-15));
    CHECK(g.center(0, 255) == doctest::Approx(7.96875).epsilon(1e-15));
    // ghost centers extrapolate past the box
    CHECK(g.center(0, -1) == doctest::Approx(-8.03125).epsilon(1e-15));
    CHECK(g.center(0, 256) == doctest::Approx(8.03125).epsilon(1e-15));
    CHECK(g.point(3)[0] == doctest::Approx(g.center(0, 3)).epsilon(1e-15));
    CHECK(g.point(3)[1] == 0.0);
    CHECK(g.boundary_distance(0) == 0);
    CHECK(g.boundary_distance(255) == 0);
    CHECK(g.boundary_distance(128) == 127);
}

TEST_CASE("2-D flat index is axis-1 fastest") {
    Grid g = Grid::make_2d(-1.0, 1.0, 8, 0.0, 3.0, 6);
    CHECK(g.dim() == 2);
    CHECK(g.cells() == 48);
    CHECK(g.h(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.h(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.cell_volume() == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(g.flat_index(3, 2) == 3 + 8 * 2);
    auto mi = g.multi_index(19);
    CHECK(mi[0] == 3);
    CHECK(mi[1] == 2);
    auto p = g.point(g.flat_index(0, 0));
    CHECK(p[0] == doctest::Approx(-0.875).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.boundary_distance(g.flat_index(0, 3)) == 0);
    CHECK(g.boundary_distance(g.flat_index(3, 2)) == 2);
    CHECK(g.boundary_distance(g.flat_index(4, 3)) == 2);
}

TEST_CASE("refined grid keeps the box and multiplies the resolution") {
    Grid g = Grid::make_2d(-2.0, 2.0, 8, -1.0, 1.0, 4);
    Grid f = g.refined(2);
    CHECK(f.n(0) == 16);
    CHECK(f.n(1) == 8);
    CHECK(f.lo(0) == g.lo(0));
    CHECK(f.hi(1) == g.hi(1));
    CHECK(f.h(0) == doctest::Approx(g.h(0) / 2).epsilon(1e-15));
    CHECK(f.cells() == 128);
}

TEST_CASE("scaled box keeps the resolution on a centered sub-box") {
    Grid g = Grid::make_1d(-8.0, 8.0, 64);
    Grid s = g.scaled_box(0.5);
    CHECK(s.n(0) == 64);
    CHECK(s.lo(0) == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(s.hi(0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(s.h(0) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("degenerate sizes are rejected") {
    CHECK_THROWS(Grid::make_1d(-1.0, 1.0, 3));
    CHECK_THROWS(Grid::make_1d(-1.0, 1.0, 0));
    CHECK_THROWS(Grid::make_1d(1.0, -1.0, 16));
    CHECK_THROWS(Grid::make_2d(-1.0, 1.0, 8, 0.0, 1.0, 2));
    CHECK_THROWS(Grid::make_1d(-1.0, 1.0, 8).scaled_box(0.0));
    CHECK_THROWS(Grid::make_1d(-1.0, 1.0, 8).scaled_box(1.5));
}

TEST_CASE("kahan sum survives cancellation-heavy accumulation") {
    KahanSum s;
    s.add(1.0);
    for (int i = 0; i < 10'000'000; ++i) s.add(1e-16);
    CHECK(s.value() == doctest::Approx(1.0 + 1e-9).epsilon(1e-12));

    // Neumaier handles the large-late-term case plain Kahan misses
    KahanSum t;
    t.add(1.0);
    t.add(1e100);
    t.add(1.0);
    t.add(-1e100);
    CHECK(t.value() == 2.0);
}

TEST_CASE("rng stream is deterministic and uniform01 stays in range") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    double mean = 0;
    for (int i = 0; i < 10000; ++i) {
        double u = c.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        mean += u;
    }
    mean /= 10000;
    CHECK(std::abs(mean - 0.5) < 0.02);
    Rng d(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(d.index(7) < 7);
        double v = d.uniform(-3.0, 5.0);
        CHECK(v >= -3.0);
        CHECK(v < 5.0);
    }
}

TEST_CASE("cumulative trapezoid matches a frozen integral") {
    // integral of t^2 on [0,1] with 1000 panels; trapezoid error is h^2/6 exactly
    std::vector<double> g(1001);
    for (int i = 0; i <= 1000; ++i) {
        double t = i / 1000.0;
        g[i] = t * t;
    }
    auto I = cumulative_trapezoid(g, 1e-3);
    REQUIRE(I.size() == g.size());
    CHECK(I.front() == 0.0);
    CHECK(I.back() == doctest::Approx(1.0 / 3.0 + 1e-6 / 6.0).epsilon(1e-12));
}
