#include "morsescope/conley.hpp"
#include "morsescope/morse.hpp"
#include "morsescope/pipeline.hpp"
#include "morsescope/verify.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <random>

namespace morsescope {

namespace {

bool interval_sample()
{
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = u(rng), b = u(rng);
        const Interval x(a), y(b);
        const long double la = a, lb = b;
        auto in = [](const Interval& r, long double v) { return r.lo <= v && v <= r.hi; };
        if (!in(x + y, la + lb) || !in(x - y, la - lb) || !in(x * y, la * lb))
            return false;
        if (std::fabs(b) > 1e-3 && !in(x / y, la / lb))
            return false;
        if (!in(sin(x), std::sin(la)) || !in(cos(x), std::cos(la)) || !in(sqr(x), la * la))
            return false;
        if (!in(sqrt(Interval(std::fabs(a))), std::sqrt(std::fabs(la))))
            return false;
    }
    return true;
}

bool scc_oracle()
{
    std::mt19937 rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint32_t n = 1 + rng() % 12;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::uint32_t u = 0; u < n; ++u)
            for (std::uint32_t v = 0; v < n; ++v)
                if (rng() % 5 == 0)
                    edges.emplace_back(u, v);
        const Digraph g = Digraph::from_edges(n, edges);
        // reach[u][v]: a path of length >= 1 from u to v.
        std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
        for (const auto& [u, v] : edges)
            reach[u][v] = true;
        for (std::uint32_t k = 0; k < n; ++k)
            for (std::uint32_t i = 0; i < n; ++i)
                for (std::uint32_t j = 0; j < n; ++j)
                    if (reach[i][k] && reach[k][j])
                        reach[i][j] = true;
        std::vector<CellSet> expect;
        std::vector<bool> used(n, false);
        for (std::uint32_t v = 0; v < n; ++v) {
            if (used[v] || !reach[v][v])
                continue;
            CellSet s;
            for (std::uint32_t w = 0; w < n; ++w)
                if (w == v || (reach[v][w] && reach[w][v])) {
                    s.push_back(w);
                    used[w] = true;
                }
            expect.push_back(s);
        }
        if (nontrivial_components(g, n) != expect)
            return false;
    }
    return true;
}

bool homology_pairs(bool tamper)
{
    const Grid g(IvBox{Interval(0.0, 3.0), Interval(0.0, 3.0)}, {3, 3});
    CellSet all, ring;
    for (CellIndex c = 0; c < 9; ++c) {
        all.push_back(c);
        if (c != 4)
            ring.push_back(c);
    }
    const std::vector<long> point{1, 0, 0}, circle{1, 1, 0}, disk_rel{0, 0, tamper ? 0L : 1L};
    return relative_homology(g, {4}, {}).betti == point && relative_homology(g, ring, {}).betti == circle &&
           relative_homology(g, all, ring).betti == disk_rel;
}

bool counterexample_rejected()
{
    const auto fx = counterexample_fixture();
    const auto rep = check_criterion(fx.md, fx.tubes, fx.tubes.strategy());
    return !rep.certified && rep.per_set.size() == 2 && !rep.per_set[0].disjoint_from.at(1) &&
           !rep.per_set[1].disjoint_from.at(0);
}

bool leray_fixtures()
{
    const auto id = leray_reduce(Endomorphism::identity(3));
    const auto nil = leray_reduce(Endomorphism::from_rows({{0, 1}, {0, 0}}));
    const auto diag = leray_reduce(Endomorphism::from_rows({{2, 0}, {0, 0}}));
    return id.n == 3 && nil.n == 0 && diag.n == 1 && diag.at(0, 0) == 2;
}

} // namespace

int run_selftest(std::ostream& out)
{
    const bool tamper = std::getenv("MORSESCOPE_SELFTEST_TAMPER") != nullptr;
    const std::vector<std::pair<const char*, std::function<bool()>>> checks = {
        {"interval containment sample", interval_sample},
        {"strong components vs reachability oracle", scc_oracle},
        {"relative homology fixtures", [&] { return homology_pairs(tamper); }},
        {"counterexample rejection", counterexample_rejected},
        {"Leray reduction fixtures", leray_fixtures},
    };
    int failures = 0;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            out << "error in " << name << ": " << e.what() << "\n";
        }
        out << (ok ? "PASS " : "FAIL ") << name << "\n";
        failures += ok ? 0 : 1;
    }
    return failures;
}

} // namespace morsescope
