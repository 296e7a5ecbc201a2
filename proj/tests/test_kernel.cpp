#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "fracmin/kernel.hpp"
#include "fracmin/quad.hpp"

using namespace fracmin;

namespace {

// Independent oracle: hierarchical pair subdivision of the 4d integral with
// fixed Gauss blocks on well-separated fragments. Converges geometrically
// for separated cells; for touching cells the remainder is extrapolated
// from the measured level ratio.
double oracle_pair_2d(double ax, double ay, double bx, double by, double ha, double hb, double s,
                      int depth) {
    double cax = ax + ha / 2, cay = ay + ha / 2, cbx = bx + hb / 2, cby = by + hb / 2;
    double d = std::hypot(cax - cbx, cay - cby);
    double rad = (ha + hb) * 0.70710678;
    if (depth <= 0 || d > 4.0 * rad) {
        const GaussRule& g = gauss_rule(4);
        double sum = 0;
        for (int i = 0; i < 4; i++)
            for (int j = 0; j < 4; j++)
                for (int k = 0; k < 4; k++)
                    for (int l = 0; l < 4; l++) {
                        double xa = ax + ha * (0.5 + 0.5 * g.nodes[i]);
                        double ya = ay + ha * (0.5 + 0.5 * g.nodes[j]);
                        double xb = bx + hb * (0.5 + 0.5 * g.nodes[k]);
                        double yb = by + hb * (0.5 + 0.5 * g.nodes[l]);
                        double r2 = (xa - xb) * (xa - xb) + (ya - yb) * (ya - yb);
                        sum += g.weights[i] * g.weights[j] * g.weights[k] * g.weights[l] *
                               std::pow(r2, -0.5 * (2 + s));
                    }
        return sum * ha * ha * hb * hb / 16.0;
    }
    double sum = 0;
    if (ha >= hb) {
        for (int c = 0; c < 4; c++)
            sum += oracle_pair_2d(ax + (c & 1) * ha / 2, ay + ((c >> 1) & 1) * ha / 2, bx, by,
                                  ha / 2, hb, s, depth - 1);
    } else {
        for (int c = 0; c < 4; c++)
            sum += oracle_pair_2d(ax, ay, bx + (c & 1) * hb / 2, by + ((c >> 1) & 1) * hb / 2, ha,
                                  hb / 2, s, depth - 1);
    }
    return sum;
}

double oracle_unit_weight(int dx, int dy, double s, int depth) {
    return (1.0 - s) * oracle_pair_2d(0, 0, dx, dy, 1, 1, s, depth);
}

} // namespace

TEST_CASE("separated offsets agree with the subdivision oracle to 1e-8") {
    for (double s : {0.3, 0.5, 0.7}) {
        for (auto [dx, dy] : std::vector<std::pair<int, int>>{{0, 2}, {1, 2}, {2, 2}, {0, 3},
                                                              {5, 5}, {10, 0}}) {
            double w = unit_offset_weight({dx, dy, 0}, 2, s, 1e-10);
            double o = oracle_unit_weight(dx, dy, s, 20);
            CHECK(w == doctest::Approx(o).epsilon(1e-8));
        }
    }
}

TEST_CASE("adjacent offsets match frozen high-precision values") {
    struct Row {
        double s;
        int dx, dy;
        double value;
    };
    // frozen from an exact-radial polar-moment quadrature run at build time
    const Row rows[] = {
        {0.3, 0, 1, 1.817571168613742}, {0.3, 1, 1, 0.4619333702597780},
        {0.5, 0, 1, 1.823543757751571}, {0.5, 1, 1, 0.3380041993429735},
        {0.7, 0, 1, 1.859463324109360}, {0.7, 1, 1, 0.2118465738415309},
        {0.95, 0, 1, 1.966665822757755}, {0.95, 1, 1, 0.03868977101729314},
    };
    for (const auto& r : rows) {
        double w = unit_offset_weight({r.dx, r.dy, 0}, 2, r.s, 1e-10);
        CHECK(w == doctest::Approx(r.value).epsilon(1e-10));
        CHECK(w > 0.0);
    }
    // the dyadic oracle with a measured-ratio geometric tail agrees coarsely
    double o14 = oracle_unit_weight(0, 1, 0.5, 14);
    double o18 = oracle_unit_weight(0, 1, 0.5, 18);
    double o22 = oracle_unit_weight(0, 1, 0.5, 22);
    double r = (o22 - o18) / (o18 - o14);
    double extrap = o22 + (o22 - o18) * r / (1.0 - r);
    CHECK(extrap == doctest::Approx(1.823543757751571).epsilon(2e-3));
}

TEST_CASE("three-dimensional adjacency values") {
    CHECK(unit_offset_weight({0, 0, 1}, 3, 0.5, 1e-9) ==
          doctest::Approx(2.49254291766515).epsilon(1e-9));
    CHECK(unit_offset_weight({0, 1, 1}, 3, 0.5, 1e-9) ==
          doctest::Approx(0.294715256082083).epsilon(1e-9));
    CHECK(unit_offset_weight({1, 1, 1}, 3, 0.5, 1e-9) ==
          doctest::Approx(0.107481098964546).epsilon(1e-9));
}

TEST_CASE("well-separated pairs approach the midpoint rule") {
    // at distance 10 the midpoint value is good to about half a percent
    for (double s : {0.3, 0.5, 0.7}) {
        double w = unit_offset_weight({10, 0, 0}, 2, s, 1e-10);
        double mid = (1.0 - s) * std::pow(10.0, -(2.0 + s));
        CHECK(std::abs(w / mid - 1.0) < 1e-2);
        CHECK(w > mid); // the correction has a definite sign here
    }
}

TEST_CASE("pair weights scale exactly under dilation") {
    GridDomain d1(2, {8, 8, 1}, 0.25, vec2(-1, -1));
    GridDomain d2(2, {8, 8, 1}, 0.5, vec2(-2, -2));
    double w1 = cell_pair_weight({1, 2, 0}, {4, 6, 0}, d1, 0.5, 1e-10);
    double w2 = cell_pair_weight({1, 2, 0}, {4, 6, 0}, d2, 0.5, 1e-10);
    CHECK(w2 / w1 == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-14));
    CHECK_THROWS_WITH(cell_pair_weight({1, 2, 0}, {1, 2, 0}, d1, 0.5, 1e-8),
                      doctest::Contains("self-pair"));
}

TEST_CASE("kernel table symmetry, positivity and interaction algebra") {
    GridDomain d(2, {6, 6, 1}, 1.0 / 3.0, vec2(-1, -1));
    KernelTable k(d, 0.5, 1e-8);
    for (std::size_t a = 0; a < 10; ++a)
        for (std::size_t b = a + 1; b < 20; ++b) {
            CHECK(k.pair_weight_flat(a, b) == k.pair_weight_flat(b, a));
            CHECK(k.pair_weight_flat(a, b) > 0.0);
        }
    auto empty_d = ExteriorDescriptor::empty();
    k.ensure_exterior(empty_d);
    SetPart A, B, B1, B2;
    A.cells = {0, 1, 7};
    B.cells = {14, 20, 21, 33};
    B1.cells = {14, 20};
    B2.cells = {21, 33};
    double ab = k.interaction(A, B, empty_d);
    CHECK(ab == k.interaction(B, A, empty_d));
    CHECK(ab == k.interaction(A, B1, empty_d) + k.interaction(A, B2, empty_d));
    SetPart none;
    CHECK(k.interaction(A, none, empty_d) == 0.0);
    SetPart overlap;
    overlap.cells = {7, 9};
    CHECK_THROWS_WITH(k.interaction(A, overlap, empty_d), doctest::Contains("non-disjoint"));
}

TEST_CASE("tails: empty, full bound, half-space limit") {
    GridDomain d(2, {8, 8, 1}, 0.25, vec2(-1, -1));
    double s = 0.5;
    CHECK(tail_weight({3, 3, 0}, ExteriorDescriptor::empty(), d, s, 1e-8) == 0.0);
    double tf = tail_weight({3, 3, 0}, ExteriorDescriptor::full(), d, s, 1e-8);
    Vec c = d.cell_center({3, 3, 0});
    double wall = std::min({c[0] + 1.0, 1.0 - c[0], c[1] + 1.0, 1.0 - c[1]});
    double bound = (1 - s) * d.h * d.h * 2.0 * M_PI / (s * std::pow(wall, s));
    CHECK(tf > 0.0);
    CHECK(tf < bound);
    // half-space occupies half of all far angles: Richardson over box sizes
    double r8, r16, r32;
    for (int m : {8, 16, 32}) {
        GridDomain dm(2, {m, m, 1}, 2.0 / m, vec2(-1, -1));
        Idx cc{m / 2, m / 2, 0};
        double full = tail_weight(cc, ExteriorDescriptor::full(), dm, s, 1e-8);
        double half = tail_weight(cc, ExteriorDescriptor::half_space(vec2(0, 1), 0.0), dm, s, 1e-8);
        (m == 8 ? r8 : m == 16 ? r16 : r32) = half / full;
    }
    double extrap = r32 + (r32 - r16);
    CHECK(std::abs(extrap - 0.5) < 0.02);
}

TEST_CASE("ring consistency: tail vs explicit ring cells") {
    int m = 8;
    double s = 0.5, hh = 2.0 / m;
    GridDomain small(2, {m, m, 1}, hh, vec2(-1, -1));
    GridDomain big(2, {m + 8, m + 8, 1}, hh, vec2(-1 - 4 * hh, -1 - 4 * hh));
    auto hs = ExteriorDescriptor::half_space(vec2(0, 1), 0.25); // aligned with cell edges
    double quad_tol = 1e-7;
    for (Idx cs : std::vector<Idx>{{3, 3, 0}, {0, 3, 0}, {7, 4, 0}, {0, 0, 0}}) {
        Idx cb{cs[0] + 4, cs[1] + 4, 0};
        double t_small = tail_weight(cs, hs, small, s, quad_tol);
        double t_big = tail_weight(cb, hs, big, s, quad_tol);
        double ring = 0;
        for (int j = 0; j < m + 8; j++)
            for (int i = 0; i < m + 8; i++) {
                bool in_small = (i >= 4 && i < 4 + m && j >= 4 && j < 4 + m);
                if (in_small) continue;
                if (!hs.contains(big.cell_center({i, j, 0}))) continue;
                ring += cell_pair_weight(cb, {i, j, 0}, big, s, 1e-10);
            }
        CHECK(std::abs((ring + t_big) / t_small - 1.0) < 2.0 * quad_tol);
    }
}

TEST_CASE("interaction with exterior parts and scaling law") {
    GridDomain d(2, {8, 8, 1}, 0.25, vec2(-1, -1));
    KernelTable k(d, 0.5, 1e-8);
    auto hs = ExteriorDescriptor::half_space(vec2(0, 1), 0.0);
    k.ensure_exterior(hs);
    SetPart A;
    A.cells = {9, 10, 17};
    SetPart ext_set;
    ext_set.ext = +1;
    SetPart ext_comp;
    ext_comp.ext = -1;
    double ls = k.interaction(A, ext_set, hs);
    double lc = k.interaction(A, ext_comp, hs);
    double lf = 0.0;
    for (auto f : A.cells) lf += k.tail_outside_box(f);
    CHECK(ls + lc == doctest::Approx(lf).epsilon(1e-12));
    CHECK_THROWS(k.interaction(ext_set, ext_comp, hs));

    GridDomain d2(2, {8, 8, 1}, 0.5, vec2(-2, -2));
    KernelTable k2(d2, 0.5, 1e-8);
    auto hs2 = hs.dilated(2.0);
    k2.ensure_exterior(hs2);
    double ls2 = k2.interaction(A, ext_set, hs2);
    CHECK(ls2 / ls == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-9));
}

TEST_CASE("cache round trip preserves weights and tails bitwise") {
    GridDomain d(2, {6, 6, 1}, 1.0 / 3.0, vec2(-1, -1));
    KernelTable k(d, 0.4, 1e-8);
    auto ball = ExteriorDescriptor::ball(vec2(0, 0), 2.0, false);
    k.ensure_exterior(ball);
    std::string path = "kernel_test.cache";
    k.save_cache(path);
    KernelTable r(d, 0.4, 1e-8);
    CHECK(r.load_cache(path));
    for (std::size_t a = 0; a < d.cell_count(); ++a) {
        CHECK(r.tail_outside_box(a) == k.tail_outside_box(a));
        CHECK(r.tail(a, ball) == k.tail(a, ball));
        if (a > 0) CHECK(r.pair_weight_flat(0, a) == k.pair_weight_flat(0, a));
    }
    KernelTable other(d, 0.5, 1e-8);
    CHECK(!other.load_cache(path));
    std::remove(path.c_str());
}
