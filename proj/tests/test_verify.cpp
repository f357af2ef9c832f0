#include "morsescope/verify.hpp"

#include "synthetic.hpp"

#include <doctest.h>

using namespace morsescope;
using synthetic::make_map;

namespace {

// Two fixed cells 1 and 7 on a line of 9; cell 4 flows to both sides.
CellMap two_sinks(const std::set<CellIndex>& failed = {}, const std::set<CellIndex>& exits = {})
{
    return make_map(synthetic::line(9), {{0, 1}, {0, 1, 2}, {1, 2, 3}, {2, 3, 4}, {3, 4, 5}, {4, 5, 6}, {5, 6, 7}, {6, 7, 8}, {7, 8}},
                    failed, exits);
}

} // namespace

TEST_CASE("fixed strategy certifies via criterion A")
{
    const auto md = make_decomposition(9, {{1}, {7}}, {});
    const CellMap m = two_sinks();
    TubeMap fixed(m.grid(), StepStrategy::fixed(0.1), m.integrator(), m.field());
    for (CellIndex c = 0; c < 9; ++c)
        fixed.push(cell_ok, FailureReason::none, Interval(0.1), m.targets(c));
    const auto rep = check_criterion(md, fixed, StepStrategy::fixed(0.1));
    CHECK(rep.mode == CriterionMode::A);
    CHECK(rep.certified);
}

TEST_CASE("criterion B on separated sets")
{
    const auto md = make_decomposition(9, {{1}, {7}}, {});
    const TubeMap T = synthetic::as_tubes(two_sinks());
    const auto rep = check_criterion(md, T, T.strategy());
    CHECK(rep.mode == CriterionMode::B);
    CHECK(rep.certified);
    REQUIRE(rep.per_set.size() == 2);
    CHECK(rep.per_set[0].z_cells == CellSet{0, 1, 2});
    CHECK(rep.per_set[0].subset_of_X);
    // Every set has an entry for every other set.
    for (std::size_t p = 0; p < 2; ++p) {
        CHECK(rep.per_set[p].disjoint_from.size() == 1);
        CHECK(rep.per_set[p].disjoint_from.count(static_cast<int>(1 - p)) == 1);
    }
}

TEST_CASE("criterion B rejections")
{
    SUBCASE("tube meets another set")
    {
        const auto md = make_decomposition(9, {{2}, {3}}, {});
        const TubeMap T = synthetic::as_tubes(two_sinks());
        const auto rep = check_criterion(md, T, T.strategy());
        CHECK_FALSE(rep.certified);
        CHECK_FALSE(rep.per_set[0].disjoint_from.at(1));
        CHECK(rep.per_set[0].witness.at(1) == 3);
        CHECK_FALSE(rep.reasons.empty());
    }
    SUBCASE("tube leaves the domain")
    {
        const auto md = make_decomposition(9, {{1}, {7}}, {});
        const TubeMap T = synthetic::as_tubes(two_sinks({}, {1}));
        const auto rep = check_criterion(md, T, T.strategy());
        CHECK_FALSE(rep.certified);
        CHECK_FALSE(rep.per_set[0].subset_of_X);
        CHECK(rep.per_set[1].subset_of_X);
    }
    SUBCASE("failed tube inside a set")
    {
        const auto md = make_decomposition(9, {{1}, {7}}, {});
        const TubeMap T = synthetic::as_tubes(two_sinks({7}));
        const auto rep = check_criterion(md, T, T.strategy());
        CHECK_FALSE(rep.certified);
        CHECK(rep.per_set[1].failed_cells == 1);
    }
}

TEST_CASE("grid mismatch")
{
    const auto md = make_decomposition(5, {{1}}, {});
    const TubeMap T = synthetic::as_tubes(two_sinks());
    CHECK_THROWS_AS(check_criterion(md, T, T.strategy()), GridMismatch);
    const auto md9 = make_decomposition(9, {{1}}, {});
    CHECK_THROWS_AS(check_criterion(md9, T, StepStrategy::adaptive(4, 0.1)), GridMismatch);
}

TEST_CASE("counterexample fixture is rejected")
{
    const auto fx = counterexample_fixture();
    CHECK(fx.md.size() == 2);
    CHECK(fx.md.sets[0].size() == 1);
    CHECK(fx.md.sets[1].size() == 1);
    CHECK(fx.md.edges.size() == 1);
    const auto rep = check_criterion(fx.md, fx.tubes, fx.tubes.strategy());
    CHECK_FALSE(rep.certified);
    CHECK(rep.mode == CriterionMode::B);
    CHECK_FALSE(rep.per_set[0].disjoint_from.at(1));
    CHECK_FALSE(rep.per_set[1].disjoint_from.at(0));
    CHECK(rep.per_set[0].witness.count(1) == 1);
    CHECK(rep.per_set[1].witness.count(0) == 1);
    CHECK(to_string(rep.mode) == "B");
    // Deterministic.
    const auto again = counterexample_fixture();
    for (CellIndex c = 0; c < 64; ++c)
        CHECK(again.tubes.image(c) == fx.tubes.image(c));
}
