#include "morsescope/conley.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

using namespace morsescope;
using synthetic::make_map;

namespace {

std::vector<CellSet> images_of(const CellMap& F)
{
    std::vector<CellSet> out;
    for (CellIndex c = 0; c < F.cell_count(); ++c)
        out.push_back(F.image(c));
    return out;
}

void same_homology(const Grid& g, const CellSet& P1, const CellSet& P2)
{
    const auto got = relative_homology(g, P1, P2);
    const auto want = oracle::relative_homology(g, P1, P2);
    CHECK(got.betti == want.betti);
    CHECK(got.torsion == want.torsion);
    CHECK(got.generators == want.generators);
}

CellSet random_subset(std::mt19937& rng, std::size_t n, int one_in)
{
    CellSet s;
    for (CellIndex c = 0; c < n; ++c)
        if (static_cast<int>(rng() % one_in) == 0)
            s.push_back(c);
    return s;
}

// Attractor at the center of a 3x3 grid.
CellMap attracting_model()
{
    std::vector<CellSet> images(9, CellSet{4});
    return make_map(synthetic::square(3), images);
}

// Repeller at the center of a 5x5 grid; ring cells of the inner 3x3 block
// step radially outward and the outer ring maps nowhere.
CellMap repelling_model()
{
    const Grid g = synthetic::square(5);
    std::vector<CellSet> images(25);
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            const CellIndex c = g.linear(cell_id({i, j}));
            if (i == 2 && j == 2) {
                images[c] = g.dilate({c}, 1);
                continue;
            }
            const int oi = i + (i - 2), oj = j + (j - 2);
            images[c] = {g.linear(cell_id({oi, oj}))};
        }
    return make_map(g, images);
}

CellSet inner_block(const Grid& g)
{
    CellSet N;
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j)
            N.push_back(g.linear(cell_id({i, j})));
    normalize(N);
    return N;
}

} // namespace

TEST_CASE("isolating neighborhoods")
{
    const Grid g = synthetic::square(5);
    const auto md = make_decomposition(25, {{12}}, {});
    const auto nb = isolating_nbhd(g, md, 0, 1);
    CHECK(nb.cells.size() == 9);
    CHECK_FALSE(nb.touches_boundary);
    CHECK(isolating_nbhd(g, md, 0, 2).touches_boundary);

    const auto two = make_decomposition(25, {{12}, {13}}, {});
    CHECK_THROWS_AS(isolating_nbhd(g, two, 0, 1), CollisionWithOtherMorseSet);
    const auto far = make_decomposition(25, {{0}, {24}}, {});
    CHECK(isolating_nbhd(g, far, 0, 1).cells == CellSet{0, 1, 5, 6});
}

TEST_CASE("invariant part examples")
{
    const CellMap F = make_map(synthetic::line(4), {{1}, {2}, {1}, {0}});
    CHECK(inv_part({0, 1, 2, 3}, F) == CellSet{1, 2});
    CHECK(inv_part({0, 3}, F).empty());
    CHECK(inv_part({1}, F).empty());
    const CellMap loop = make_map(synthetic::line(2), {{0}, {0}});
    CHECK(inv_part({0, 1}, loop) == CellSet{0});
}

TEST_CASE("invariant part agrees with the path oracle")
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 400; ++trial) {
        const int n = 10;
        std::vector<CellSet> images(n);
        for (auto& img : images)
            img = random_subset(rng, n, 4);
        const CellMap F = make_map(synthetic::line(n), images);
        CellSet N = random_subset(rng, n, 2);
        CHECK(inv_part(N, F) == oracle::inv_part(N, images_of(F)));
    }
}

TEST_CASE("attracting model")
{
    const Grid g = synthetic::square(3);
    const CellMap F = attracting_model();
    const auto md = decompose(F);
    REQUIRE(md.size() == 1);
    CHECK(md.sets[0] == CellSet{4});
    CellSet N = g.dilate({4}, 1);
    const auto S = inv_part(N, F);
    CHECK(S == CellSet{4});
    const auto ip = build_index_pair(g, N, S, F);
    CHECK(ip.P1 == N);
    CHECK(ip.P2.empty());
    CHECK(check_index_pair(g, ip, F).empty());
    const auto h = relative_homology(g, ip.P1, ip.P2);
    CHECK(h.betti == std::vector<long>{1, 0, 0});
    same_homology(g, ip.P1, ip.P2);
}

TEST_CASE("repelling model")
{
    const Grid g = synthetic::square(5);
    const CellMap F = repelling_model();
    const CellSet N = inner_block(g);
    const auto S = inv_part(N, F);
    CHECK(S == CellSet{12});
    const auto ip = build_index_pair(g, N, S, F);
    CHECK(ip.P1 == N);
    CellSet ring = N;
    ring.erase(std::find(ring.begin(), ring.end(), 12u));
    CHECK(ip.P2 == ring);
    CHECK(check_index_pair(g, ip, F).empty());
    const auto h = relative_homology(g, ip.P1, ip.P2);
    CHECK(h.betti == std::vector<long>{0, 0, 1});
    CHECK(h.euler_characteristic() == 1);
    same_homology(g, ip.P1, ip.P2);
}

TEST_CASE("interior condition failure")
{
    // The center escapes directly, so S meets P2.
    const Grid g = synthetic::square(3);
    std::vector<CellSet> images(9);
    images[4] = {4};
    const CellMap F = make_map(g, images, {}, {4});
    CHECK_THROWS_AS(build_index_pair(g, g.dilate({4}, 1), {4}, F), InteriorConditionFailed);
}

TEST_CASE("homology fixtures")
{
    const Grid g = synthetic::square(3);
    CellSet all, ring;
    for (CellIndex c = 0; c < 9; ++c) {
        all.push_back(c);
        if (c != 4)
            ring.push_back(c);
    }
    CHECK(relative_homology(g, {4}, {}).betti == std::vector<long>{1, 0, 0});
    CHECK(relative_homology(g, ring, {}).betti == std::vector<long>{1, 1, 0});
    CHECK(relative_homology(g, all, ring).betti == std::vector<long>{0, 0, 1});
    CHECK(relative_homology(g, {}, {}).betti == std::vector<long>{0, 0, 0});
    // Two separated cells, relative to one of them.
    CHECK(relative_homology(g, {0, 8}, {8}).betti == std::vector<long>{1, 0, 0});
    CHECK(relative_homology(g, {0, 2}, {}).betti == std::vector<long>{2, 0, 0});
    // A segment relative to its two ends.
    CHECK(relative_homology(g, {0, 1, 2}, {0, 2}).betti == std::vector<long>{0, 1, 0});

    const Grid cube(IvBox{Interval(0.0, 3.0), Interval(0.0, 3.0), Interval(0.0, 3.0)}, {3, 3, 3});
    CellSet block, shell;
    for (CellIndex c = 0; c < 27; ++c) {
        block.push_back(c);
        if (c != 13)
            shell.push_back(c);
    }
    CHECK(relative_homology(cube, block, shell).betti == std::vector<long>{0, 0, 0, 1});
    CHECK(relative_homology(cube, shell, {}).betti == std::vector<long>{1, 0, 1, 0});
}

TEST_CASE("relative homology agrees with the dense oracle")
{
    std::mt19937 rng(99);
    const Grid g = synthetic::square(4);
    for (int trial = 0; trial < 200; ++trial) {
        const CellSet P1 = random_subset(rng, 16, 2);
        CellSet P2;
        for (CellIndex c : P1)
            if (rng() % 3 == 0)
                P2.push_back(c);
        same_homology(g, P1, P2);
        const auto h = relative_homology(g, P1, P2);
        long chi = 0;
        for (std::size_t k = 0; k < h.generators.size(); ++k)
            chi += (k % 2 ? -1 : 1) * static_cast<long>(h.generators[k]);
        CHECK(h.euler_characteristic() == chi);
    }
    const Grid cube(IvBox{Interval(0.0, 3.0), Interval(0.0, 3.0), Interval(0.0, 3.0)}, {3, 3, 3});
    for (int trial = 0; trial < 30; ++trial) {
        const CellSet P1 = random_subset(rng, 27, 2);
        CellSet P2;
        for (CellIndex c : P1)
            if (rng() % 3 == 0)
                P2.push_back(c);
        same_homology(cube, P1, P2);
    }
}

TEST_CASE("chain complex export")
{
    const Grid g = synthetic::line(1);
    const auto cc = relative_chain_complex(g, {0}, {});
    CHECK(cc.size == std::vector<std::size_t>{2, 1});
    const std::string text = export_boundary(cc);
    CHECK(text.find("# generators 0 2") != std::string::npos);
    CHECK(text.find("# generators 1 1") != std::string::npos);
    CHECK(text.find("1 0 : ") != std::string::npos);
    REQUIRE(cc.boundary[1][0].size() == 2);
    CHECK(cc.boundary[1][0][0].second + cc.boundary[1][0][1].second == 0);
}

TEST_CASE("Smith invariants")
{
    using Cols = std::vector<std::vector<std::pair<std::size_t, int>>>;
    auto to_cols = [](const oracle::Matrix& m) {
        Cols cols(m.empty() ? 0 : m[0].size());
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = 0; j < m[i].size(); ++j)
                if (m[i][j] != 0)
                    cols[j].emplace_back(i, static_cast<int>(m[i][j]));
        return cols;
    };

    const oracle::Matrix twos = {{2, 0}, {0, 4}};
    const auto s = smith_invariants(2, to_cols(twos));
    CHECK(s.rank == 2);
    CHECK(s.factors == std::vector<Integer>{2, 4});
    const auto t = smith_invariants(2, to_cols({{2, 0}, {0, 3}}));
    CHECK(t.factors == std::vector<Integer>{1, 6});

    std::mt19937 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t r = 1 + rng() % 5, c = 1 + rng() % 5;
        oracle::Matrix m(r, std::vector<long long>(c, 0));
        for (auto& row : m)
            for (auto& v : row)
                if (rng() % 2)
                    v = static_cast<long long>(rng() % 7) - 3;
        const auto got = smith_invariants(r, to_cols(m));
        auto want = oracle::smith_diagonal(m);
        std::sort(want.begin(), want.end());
        REQUIRE(got.factors.size() == want.size());
        CHECK(got.rank == want.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(got.factors[i] == Integer(want[i]));
    }
}

TEST_CASE("Smith invariants beyond 64 bits")
{
    // Entries near 2^30: the determinant needs about 90 bits.
    const std::vector<std::vector<long>> m = {
        {1073741789, 1, 0}, {0, 1073741719, 1}, {1, 0, 1073741689},
    };
    std::vector<std::vector<std::pair<std::size_t, int>>> cols(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            cols[j].emplace_back(i, static_cast<int>(m[i][j]));
    const auto s = smith_invariants(3, cols);
    REQUIRE(s.rank == 3);
    auto e = [&](std::size_t i, std::size_t j) { return Integer(m[i][j]); };
    Integer det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0)) +
                  e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
    CHECK(abs(det) > Integer(std::numeric_limits<long long>::max()));
    Integer prod = 1;
    for (const auto& f : s.factors)
        prod *= f;
    CHECK(prod == abs(det));
    for (std::size_t i = 1; i < s.factors.size(); ++i)
        CHECK(s.factors[i] % s.factors[i - 1] == 0);
}

TEST_CASE("Leray reduction")
{
    const auto id = leray_reduce(Endomorphism::identity(3));
    CHECK(id.n == 3);
    CHECK(leray_reduce(Endomorphism::from_rows({{0, 1}, {0, 0}})).n == 0);
    const auto diag = leray_reduce(Endomorphism::from_rows({{2, 0}, {0, 0}}));
    REQUIRE(diag.n == 1);
    CHECK(diag.at(0, 0) == 2);
    const auto mixed = leray_reduce(Endomorphism::from_rows({{1, 1}, {0, 0}}));
    REQUIRE(mixed.n == 1);
    CHECK(mixed.at(0, 0) == 1);

    const auto p = Endomorphism::from_rows({{1, 2}, {3, 4}}).characteristic_polynomial();
    CHECK(p == std::vector<Rational>{-2, -5, 1});
    CHECK(Endomorphism::identity(2).characteristic_polynomial() == std::vector<Rational>{1, -2, 1});
}

TEST_CASE("Leray reduction strips exactly the nilpotent part")
{
    // char poly of the reduction times t^(n - m) equals the original.
    std::mt19937 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 4;
        std::vector<std::vector<long>> rows(n, std::vector<long>(n, 0));
        for (auto& row : rows)
            for (auto& v : row)
                if (rng() % 2)
                    v = static_cast<long>(rng() % 5) - 2;
        const auto a = Endomorphism::from_rows(rows);
        const auto r = leray_reduce(a);
        CHECK(r.rank() == r.n);
        const auto pa = a.characteristic_polynomial();
        const auto pr = r.characteristic_polynomial();
        const std::size_t shift = n - r.n;
        for (std::size_t k = 0; k <= n; ++k) {
            const Rational expect = k < shift ? Rational(0) : pr[k - shift];
            CHECK(pa[k] == expect);
        }
    }
}

TEST_CASE("generalized kernel quotient")
{
    HomologyResult point;
    point.betti = {1, 0, 0};
    CHECK(gker_quotient_betti(point) == std::vector<long>{1, 0, 0});
    CHECK(gker_quotient_betti(point, Endomorphism::identity(1, 0)) == std::vector<long>{1, 0, 0});
    CHECK(gker_quotient_betti(point, Endomorphism::from_rows({{0}}, {0})) == std::vector<long>{0, 0, 0});

    HomologyResult two;
    two.betti = {0, 2, 0};
    CHECK(gker_quotient_betti(two, Endomorphism::from_rows({{1, 1}, {0, 0}}, {1, 1})) == std::vector<long>{0, 1, 0});
    CHECK_THROWS_AS(gker_quotient_betti(two, Endomorphism::identity(1, 1)), DimensionMismatch);
    CHECK_THROWS_AS(gker_quotient_betti(two, Endomorphism::identity(2, 0)), DimensionMismatch);
}

TEST_CASE("index pair search over growing collars")
{
    const Grid g = synthetic::square(5);
    const CellMap F = repelling_model();
    const auto md = make_decomposition(25, {{12}}, {});
    const auto found = search_index_pair(g, md, F, 0, 1, 4);
    REQUIRE(found.pair);
    CHECK(found.collar == 1);
    CHECK(found.reason.empty());
    CHECK(relative_homology(g, found.pair->P1, found.pair->P2).betti == std::vector<long>{0, 0, 1});

    const auto crowded = make_decomposition(25, {{12}, {13}}, {});
    const auto none = search_index_pair(g, crowded, F, 0, 1, 4);
    CHECK_FALSE(none.pair);
    CHECK_FALSE(none.reason.empty());
}
