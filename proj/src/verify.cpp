#include "morsescope/verify.hpp"

#include <cmath>
#include <numbers>

namespace morsescope {

std::string to_string(CriterionMode m) { return m == CriterionMode::A ? "A" : "B"; }

VerificationReport check_criterion_b(const MorseDecomposition& md, const TubeMap& T)
{
    if (md.cell_to_set.size() != T.cell_count())
        throw GridMismatch("Morse decomposition and tube map live on different grids");
    VerificationReport rep;
    rep.mode = CriterionMode::B;
    const int m = static_cast<int>(md.sets.size());
    rep.per_set.resize(m);
    for (int p = 0; p < m; ++p) {
        SetCheck& sc = rep.per_set[p];
        bool all = false;
        for (CellIndex c : md.sets[p]) {
            if (T.failed(c)) {
                ++sc.failed_cells;
                all = true;
                continue;
            }
            if (T.exits(c))
                sc.subset_of_X = false;
            auto t = T.targets(c);
            sc.z_cells.insert(sc.z_cells.end(), t.begin(), t.end());
        }
        if (all) {
            // A failed tube may reach any cell.
            sc.z_cells.resize(T.cell_count());
            for (std::size_t i = 0; i < sc.z_cells.size(); ++i)
                sc.z_cells[i] = static_cast<CellIndex>(i);
            sc.subset_of_X = false;
        }
        normalize(sc.z_cells);
        for (int q = 0; q < m; ++q) {
            if (q == p)
                continue;
            bool ok = true;
            for (CellIndex c : sc.z_cells)
                if (md.cell_to_set[c] == q) {
                    ok = false;
                    sc.witness[q] = c;
                    break;
                }
            sc.disjoint_from[q] = ok;
        }
    }
    rep.certified = true;
    for (int p = 0; p < m; ++p) {
        const SetCheck& sc = rep.per_set[p];
        const std::string name = "set " + std::to_string(p + 1);
        if (sc.failed_cells > 0) {
            rep.certified = false;
            rep.reasons.push_back(name + ": " + std::to_string(sc.failed_cells) + " tube integrations failed");
        }
        if (!sc.subset_of_X) {
            rep.certified = false;
            rep.reasons.push_back(name + ": tube leaves the domain");
        }
        for (const auto& [q, ok] : sc.disjoint_from)
            if (!ok) {
                rep.certified = false;
                rep.reasons.push_back(name + ": tube meets set " + std::to_string(q + 1) + " at cell " +
                                      std::to_string(sc.witness.at(q)));
            }
    }
    return rep;
}

VerificationReport check_criterion(const MorseDecomposition& md, const TubeMap& T, const StepStrategy& st)
{
    if (md.cell_to_set.size() != T.cell_count())
        throw GridMismatch("Morse decomposition and tube map live on different grids");
    if (!(T.strategy() == st))
        throw GridMismatch("tube map was built with a different step strategy");
    if (st.is_fixed()) {
        VerificationReport rep;
        rep.mode = CriterionMode::A;
        rep.certified = true;
        return rep;
    }
    return check_criterion_b(md, T);
}

CounterexampleFixture counterexample_fixture()
{
    constexpr int n = 64;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const Grid g(IvBox{Interval(0.0, two_pi)}, {n});
    const double width = two_pi / n;
    TubeMap tubes(g, StepStrategy::variable(), IntegratorConfig{}, "theta' = 1 on the circle, tau = sin(theta) + 2 pi");
    std::vector<CellIndex> image;
    for (int c = 0; c < n; ++c) {
        // sup of sin over the cell, then the rotation by up to 2 pi + that.
        const double a = c * width, b = (c + 1) * width;
        const double smax = (a <= std::numbers::pi / 2 && std::numbers::pi / 2 <= b) ? 1.0
                                                                                      : std::max(std::sin(a), std::sin(b));
        const double smin = (a <= 1.5 * std::numbers::pi && 1.5 * std::numbers::pi <= b)
                                ? -1.0
                                : std::min(std::sin(a), std::sin(b));
        const double t_hi = smax + two_pi;
        // Cells swept by [a, b + t_hi] on the circle, plus closed neighbors.
        const int span = static_cast<int>(std::ceil(t_hi / width)) + 1;
        image.clear();
        if (span + 2 >= n) {
            for (int k = 0; k < n; ++k)
                image.push_back(static_cast<CellIndex>(k));
        } else {
            for (int k = -1; k <= span + 1; ++k)
                image.push_back(static_cast<CellIndex>(((c + k) % n + n) % n));
            normalize(image);
        }
        tubes.push(cell_ok, FailureReason::none, Interval(smin + two_pi, t_hi), image);
    }
    MorseDecomposition md = make_decomposition(n, {{0}, {n / 2}}, {{0, 1}});
    return {std::move(md), std::move(tubes)};
}

} // namespace morsescope
