#include "morsescope/grid.hpp"

#include "sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace morsescope;

namespace {

const IvBox kSquare{Interval(-3, 3), Interval(-3, 3)};

} // namespace

TEST_CASE("grid construction and cell boxes")
{
    const Grid g(kSquare, {2, 2});
    CHECK(g.cell_box(cell_id({0, 0})) == IvBox{Interval(-3, 0), Interval(-3, 0)});
    CHECK(g.cell_box(cell_id({1, 0})) == IvBox{Interval(0, 3), Interval(-3, 0)});
    CHECK_THROWS_AS(g.cell_box(cell_id({2, 0})), OutOfRange);
    CHECK_THROWS_AS(g.cell_box(CellIndex{4}), OutOfRange);
    CHECK_THROWS_AS(Grid(kSquare, {0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(IvBox{Interval(1, 1), Interval(0, 1)}, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(kSquare, {2}), std::invalid_argument);

    const Grid fine(kSquare, {256, 256});
    CHECK(fine.cell_size(0) == Interval(0.0234375));
    CHECK(fine.diagonal_norm() == doctest::Approx(0.03314563).epsilon(1e-8));
    CHECK(fine.diagonal_norm() >= std::sqrt(2.0) * 0.0234375);
    CHECK(Grid(IvBox{Interval(0, 4), Interval(0, 4)}, {4, 4}).diagonal_norm() == doctest::Approx(std::sqrt(2.0)));
    CHECK(Grid(IvBox{Interval(0, 1)}, {2}).diagonal_norm() == 0.5);
}

TEST_CASE("row-major linearization")
{
    const Grid g(IvBox{Interval(0, 3), Interval(0, 5)}, {3, 5});
    CHECK(g.linear(cell_id({0, 0})) == 0);
    CHECK(g.linear(cell_id({0, 1})) == 1);
    CHECK(g.linear(cell_id({1, 0})) == 5);
    for (CellIndex c = 0; c < g.cell_count(); ++c)
        CHECK(g.linear(g.multi(c)) == c);
    CHECK(cell_id({0, 4}) < cell_id({1, 0}));
}

TEST_CASE("cover examples")
{
    const Grid g(kSquare, {2, 2});
    const Cover v = g.cover(IvBox{Interval(0), Interval(0)});
    CHECK(v.cells.size() == 4);
    CHECK_FALSE(v.exits_domain);
    CHECK(g.cover(IvBox{Interval(2.9, 3.1), Interval(0, 0.01)}).exits_domain);
    CHECK(g.cover(kSquare).cells.size() == 4);
    const Cover out = g.cover(IvBox{Interval(5, 6), Interval(0, 1)});
    CHECK(out.exits_domain);
    CHECK(out.cells.empty());
}

TEST_CASE("cover soundness for random points")
{
    const Grid g(kSquare, {37, 64});
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-3.2, 3.2);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> x{u(rng), u(rng)};
        if (i % 10 == 0) // snap to a vertex of the grid
            x = {g.vertex_lo(0, 10), g.vertex_lo(1, 33)};
        const Cover c = g.cover(point_box(x));
        if (!sampling::inside_domain(g, x)) {
            CHECK(c.exits_domain);
            continue;
        }
        CHECK_FALSE(c.exits_domain);
        bool inside = false;
        for (CellIndex k : c.cells)
            inside = inside || contains(g.cell_box(k), x);
        CHECK(inside);
        CHECK(sampling::in_relative_interior(g, c.cells, x));
    }
}

TEST_CASE("cover is a minimal superset for generic boxes")
{
    const Grid g(kSquare, {32, 32});
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-3.5, 3.0), w(0.01, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng);
        const IvBox box{Interval(a, a + w(rng)), Interval(b, b + w(rng))};
        const Cover c = g.cover(box);
        for (CellIndex k : c.cells) {
            const auto part = intersect(box, g.cell_box(k));
            REQUIRE(part);
            const auto mid = midpoint(*part);
            int holders = 0;
            for (CellIndex j : c.cells)
                holders += contains(g.cell_box(j), mid) ? 1 : 0;
            CHECK(holders == 1);
        }
    }
}

TEST_CASE("tiling")
{
    const Grid g(kSquare, {16, 8});
    double volume = 0;
    for (CellIndex c = 0; c < g.cell_count(); ++c) {
        const IvBox b = g.cell_box(c);
        volume += (b[0].hi - b[0].lo) * (b[1].hi - b[1].lo);
    }
    CHECK(volume == 36.0);

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        int n = 0;
        for (CellIndex c = 0; c < g.cell_count(); ++c)
            n += contains(g.cell_box(c), x) ? 1 : 0;
        CHECK(n >= 1);
        CHECK(n <= 4);
    }
}

TEST_CASE("dilation and neighbors")
{
    const Grid g(IvBox{Interval(0, 5), Interval(0, 5)}, {5, 5});
    const CellIndex centre = g.linear(cell_id({2, 2}));
    CHECK(g.dilate({centre}, 1).size() == 9);
    CHECK(g.dilate({centre}, 2).size() == 25);
    CHECK(g.dilate({0}, 1).size() == 4);
    std::vector<CellIndex> nb;
    g.neighbors(centre, nb);
    CHECK(nb.size() == 8);
    g.neighbors(0, nb);
    CHECK(nb.size() == 3);
}

TEST_CASE("cell set algebra")
{
    const CellSet a{1, 3, 5, 7}, b{3, 4, 5};
    CHECK(set_union(a, b) == CellSet{1, 3, 4, 5, 7});
    CHECK(set_intersection(a, b) == CellSet{3, 5});
    CHECK(set_difference(a, b) == CellSet{1, 7});
    CHECK(is_subset(CellSet{3, 5}, a));
    CHECK_FALSE(is_subset(b, a));
    CHECK(disjoint(CellSet{0, 2}, a));
    CellSet s{5, 1, 5, 3};
    normalize(s);
    CHECK(s == CellSet{1, 3, 5});
}
