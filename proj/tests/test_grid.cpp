#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "fracmin/grid.hpp"

using namespace fracmin;

namespace {
GridDomain grid16() { return GridDomain(2, {16, 16, 1}, 0.125, vec2(-1, -1)); }
}

TEST_CASE("rasterize half-space fills the lower rows") {
    auto hs = ExteriorDescriptor::half_space(vec2(0, 1), 0.0);
    CellSet e = rasterize(hs, grid16());
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) CHECK(e.in_set({i, j, 0}) == (j < 8));
}

TEST_CASE("rasterize ball matches the analytic area within 5%") {
    GridDomain d(2, {32, 32, 1}, 1.0 / 16.0, vec2(-1, -1));
    CellSet e = rasterize(ExteriorDescriptor::ball(vec2(0, 0), 0.5), d);
    double area = e.count() * d.h * d.h;
    CHECK(std::abs(area / (M_PI * 0.25) - 1.0) < 0.05);
}

TEST_CASE("full and empty rasterizations are complementary") {
    CellSet full = rasterize(ExteriorDescriptor::full(), grid16());
    CellSet empty = rasterize(ExteriorDescriptor::empty(), grid16());
    CHECK(full.count() == full.domain.cell_count());
    CHECK(empty.count() == 0);
    for (std::size_t f = 0; f < full.mask.size(); ++f)
        CHECK(full.mask[f] != empty.mask[f]);
}

TEST_CASE("majority rule counts corner samples") {
    auto hs = ExteriorDescriptor::half_space(vec2(0, 1), 0.0);
    CellSet e = rasterize(hs, grid16(), RasterRule::Majority);
    // boundary row cells have exactly half their corners inside
    CHECK(e.in_set({0, 7, 0}));
    CHECK(!e.in_set({0, 9, 0}));
}

TEST_CASE("symmetric difference is a scaled Hamming metric") {
    GridDomain d(2, {4, 4, 1}, 1.0, vec2(0, 0));
    CellSet a(d, ExteriorDescriptor::empty());
    CellSet b(d, ExteriorDescriptor::empty());
    CHECK(symmetric_difference_measure(a, a) == 0.0);
    for (auto& v : a.mask) v = 1;
    CHECK(symmetric_difference_measure(a, b) == 16.0);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        CellSet x(d, ExteriorDescriptor::empty()), y(d, ExteriorDescriptor::empty()),
            z(d, ExteriorDescriptor::empty());
        for (std::size_t f = 0; f < 16; ++f) {
            x.mask[f] = rng() & 1;
            y.mask[f] = rng() & 1;
            z.mask[f] = rng() & 1;
        }
        double xy = symmetric_difference_measure(x, y);
        double yx = symmetric_difference_measure(y, x);
        CHECK(xy == yx);
        CHECK(xy <= symmetric_difference_measure(x, z) + symmetric_difference_measure(z, y));
        CHECK((xy == 0.0) == (x.mask == y.mask));
    }
}

TEST_CASE("rescale dilates grid, exterior and inverse exactly") {
    GridDomain d(2, {8, 8, 1}, 0.25, vec2(-1, -1));
    CellSet e = rasterize(ExteriorDescriptor::ball(vec2(0, 0), 0.5), d);
    CellSet same = rescale(e, 1.0);
    CHECK(same.domain.h == e.domain.h);
    CHECK(same.mask == e.mask);
    CellSet big = rescale(e, 2.0);
    CHECK(big.exterior.radius == 1.0);
    CHECK(big.domain.h == 0.5);
    CellSet back = rescale(big, 0.5);
    CHECK(back.domain.h == e.domain.h);
    CHECK(back.domain.origin == e.domain.origin);
    CHECK(back.mask == e.mask);
    CHECK(back.exterior.radius == e.exterior.radius);
}

TEST_CASE("boundary faces of a half-space are exactly the interface row") {
    auto hs = ExteriorDescriptor::half_space(vec2(0, 1), 0.0);
    CellSet e = rasterize(hs, grid16());
    auto faces = boundary_faces(e);
    CHECK(faces.size() == 16);
    for (const auto& bf : faces) {
        CHECK(bf.axis == 1);
        CHECK(bf.midpoint[1] == doctest::Approx(0.0));
    }
}

TEST_CASE("subgraph rasterization uses the last coordinate") {
    CellSet e = rasterize_subgraph([](const Vec& p) { return 0.25 * p[0]; }, grid16(),
                                   ExteriorDescriptor::half_space(vec2(0, 1), 0.0));
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) {
            Vec c = grid16().cell_center({i, j, 0});
            CHECK(e.in_set({i, j, 0}) == (c[1] < 0.25 * c[0]));
        }
}

TEST_CASE("cellset json and grid text round trips") {
    GridDomain d(2, {9, 7, 1}, 0.25, vec2(-1, -0.5));
    CellSet e = rasterize(ExteriorDescriptor::ball(vec2(0.1, 0.2), 0.4), d);
    std::string p1 = "roundtrip.cellset.json";
    save_cellset_json(e, p1);
    CellSet r1 = load_cellset_json(p1);
    CHECK(r1.mask == e.mask);
    CHECK(r1.domain.same_layout(e.domain));
    CHECK(r1.exterior.hash() == e.exterior.hash());
    std::string p2 = "roundtrip.grid";
    save_grid_text(e, p2);
    CellSet r2 = load_grid_text(p2);
    CHECK(r2.mask == e.mask);
    CHECK(r2.domain.same_layout(e.domain));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("domain mismatch and bad inputs raise errors") {
    GridDomain d4(2, {4, 4, 1}, 1.0, vec2(0, 0));
    GridDomain d5(2, {5, 4, 1}, 1.0, vec2(0, 0));
    CellSet a(d4, ExteriorDescriptor::empty());
    CellSet b(d5, ExteriorDescriptor::empty());
    CHECK_THROWS(symmetric_difference_measure(a, b));
    CHECK_THROWS(GridDomain(4, {4, 4, 4}, 1.0, vec2(0, 0)));
    CHECK_THROWS(ExteriorDescriptor::half_space(vec2(0.5, 0.5), 0.0));
    CHECK_THROWS(ExteriorDescriptor::ball(vec2(0, 0), -1.0));
    CHECK_THROWS(rasterize_subgraph(nullptr, d4, ExteriorDescriptor::empty()));
}
