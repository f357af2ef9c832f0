#include "morsescope/morse.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <random>

using namespace morsescope;
using synthetic::make_map;

namespace {

// Every reduced edge p -> q has a digraph path between the sets.
bool witnessed(const CellMap& F, const MorseDecomposition& md, int p, int q)
{
    std::vector<char> seen(F.cell_count(), 0);
    std::vector<CellIndex> stack(md.sets[p].begin(), md.sets[p].end());
    while (!stack.empty()) {
        const CellIndex c = stack.back();
        stack.pop_back();
        for (CellIndex t : F.image(c)) {
            if (contains(md.sets[q], t))
                return true;
            if (!seen[t]) {
                seen[t] = 1;
                stack.push_back(t);
            }
        }
    }
    return false;
}

void check_invariants(const CellMap& F, const MorseDecomposition& md)
{
    for (std::size_t p = 0; p < md.size(); ++p)
        for (std::size_t q = p + 1; q < md.size(); ++q)
            CHECK(disjoint(md.sets[p], md.sets[q]));
    for (std::size_t p = 0; p < md.size(); ++p)
        CHECK_FALSE(md.reaches(static_cast<int>(p), static_cast<int>(p)));
    for (const auto& [p, q] : md.edges) {
        CHECK(md.reaches(p, q));
        CHECK_FALSE(md.reaches(q, p));
        CHECK(witnessed(F, md, p, q));
    }
    for (std::size_t p = 0; p < md.size(); ++p)
        for (CellIndex c : md.sets[p])
            CHECK(md.cell_to_set[c] == static_cast<int>(p));
}

} // namespace

TEST_CASE("small digraph examples")
{
    const Grid g = synthetic::line(3);
    // a -> b, b -> c, c -> b
    const CellMap F = make_map(g, {{1}, {2}, {1}});
    const auto sets = morse_sets(F);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0] == CellSet{1, 2});

    const CellMap loop = make_map(synthetic::line(1), {{0}});
    CHECK(morse_sets(loop) == std::vector<CellSet>{{0}});

    // A -> trivial -> B gives the edge A -> B.
    const CellMap chain = make_map(synthetic::line(3), {{0, 1}, {2}, {2}});
    const auto md = decompose(chain);
    REQUIRE(md.size() == 2);
    CHECK(md.edges == std::vector<std::pair<int, int>>{{0, 1}});
    check_invariants(chain, md);

    const CellMap empty = make_map(synthetic::line(4), {});
    const auto none = decompose(empty);
    CHECK(none.size() == 0);
    CHECK(none.edges.empty());
}

TEST_CASE("strong components agree with the reachability oracle")
{
    std::mt19937 rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const std::uint32_t n = 1 + rng() % 12;
        const int density = 2 + static_cast<int>(rng() % 6);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        std::vector<CellSet> images(n);
        for (std::uint32_t u = 0; u < n; ++u)
            for (std::uint32_t v = 0; v < n; ++v)
                if (static_cast<int>(rng() % density) == 0) {
                    edges.emplace_back(u, v);
                    images[u].push_back(v);
                }
        const auto expect = oracle::nontrivial_sccs(n, edges);
        CHECK(nontrivial_components(Digraph::from_edges(n, edges), n) == expect);
        const CellMap F = make_map(synthetic::line(static_cast<int>(n)), images);
        CHECK(morse_sets(F) == expect);
        const auto md = decompose(F);
        check_invariants(F, md);

        // Component numbering is a reverse topological order.
        const Digraph g = Digraph::from_edges(n, edges);
        const SccResult scc = strongly_connected_components(g);
        for (const auto& [u, v] : edges)
            CHECK(scc.comp[u] >= scc.comp[v]);
    }
}

TEST_CASE("failed cells connect to every cell")
{
    // 0 -> 1 -> 2, cell 1 failed: everything reaching 1 joins one component.
    const CellMap F = make_map(synthetic::line(4), {{1}, {2}, {3}, {}}, {1});
    const auto sets = morse_sets(F);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0] == CellSet{0, 1});
    CHECK(failed_cells_in(F, sets[0]) == 1);
    const Digraph g = cell_digraph(F);
    CHECK(g.n == 5);
}

TEST_CASE("graph limit")
{
    std::vector<CellSet> images;
    for (CellIndex c = 0; c < 10; ++c)
        images.push_back({c});
    const CellMap F = make_map(synthetic::line(10), images);
    const auto full = decompose(F, 100);
    CHECK(full.graph_computed);
    CHECK(full.size() == 10);
    const auto skipped = decompose(F, 5);
    CHECK_FALSE(skipped.graph_computed);
    CHECK(skipped.size() == 10);
}

TEST_CASE("explicit decompositions")
{
    const auto md = make_decomposition(6, {{0}, {2, 3}, {5}}, {{0, 1}, {1, 2}, {0, 2}});
    CHECK(md.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
    CHECK(md.reaches(0, 2));
    CHECK_THROWS(make_decomposition(6, {{0}, {0, 1}}, {}));
    CHECK_THROWS(make_decomposition(6, {{0}, {1}}, {{0, 1}, {1, 0}}));
    CHECK_THROWS(make_decomposition(6, {{0}, {9}}, {}));

    const std::vector<std::vector<bool>> reach = {{false, true, true}, {false, false, true}, {false, false, false}};
    CHECK(transitive_reduction(reach) == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
}

TEST_CASE("census and DOT output")
{
    CellSet ten;
    for (CellIndex c = 0; c < 10; ++c)
        ten.push_back(c);
    const Census one = spurious_census({ten});
    CHECK(one.histogram == std::map<std::size_t, std::size_t>{{10, 1}});
    CHECK(one.largest == 10);
    CHECK(one.singletons == 0);

    const Census mixed = spurious_census({{1}, {2}, {3}, {4, 5}});
    CHECK(mixed.count == 4);
    CHECK(mixed.singletons == 3);
    CHECK(mixed.singleton_fraction == 0.75);

    const auto md = make_decomposition(6, {{0}, {2, 3}, {5}}, {{0, 2}, {1, 2}});
    const std::string dot = to_dot(md);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("2 [label=\"2\\n2\"]") != std::string::npos);
    CHECK(dot.find("1 -> 3;") != std::string::npos);
    CHECK(dot.find("2 -> 3;") != std::string::npos);
}

TEST_CASE("long chains do not overflow the stack")
{
    const std::uint32_t n = 300000;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t v = 0; v + 1 < n; ++v)
        edges.emplace_back(v, v + 1);
    edges.emplace_back(n - 1, 0);
    const auto sets = nontrivial_components(Digraph::from_edges(n, edges), n);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].size() == n);
}
