// Sufficient conditions under which a Morse decomposition of the time-tau
// map is one of the flow: (A) tau constant, or (B) for every Morse set the
// flow tube over [0, tau] stays in X and avoids every other Morse set.
#pragma once

#include "morsescope/enclosure.hpp"
#include "morsescope/morse.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace morsescope {

class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class CriterionMode { A, B };

struct SetCheck {
    // Z(p): union of the tube cells of all cells of N(p).
    CellSet z_cells;
    bool subset_of_X = true;
    // q -> Z(p) and N(q) are disjoint.
    std::map<int, bool> disjoint_from;
    // q -> first cell of Z(p) inside N(q), for failed disjointness checks.
    std::map<int, CellIndex> witness;
    std::size_t failed_cells = 0;
};

struct VerificationReport {
    CriterionMode mode = CriterionMode::A;
    std::vector<SetCheck> per_set;
    bool certified = false;
    std::vector<std::string> reasons;
};

// Mode A for fixed strategies, mode B otherwise.
VerificationReport check_criterion(const MorseDecomposition& md, const TubeMap& T, const StepStrategy& st);
// Mode B regardless of the strategy.
VerificationReport check_criterion_b(const MorseDecomposition& md, const TubeMap& T);

struct CounterexampleFixture {
    MorseDecomposition md;
    TubeMap tubes;
};

// Circle flow theta' = 1 on 64 cells of [0, 2 pi] with tau = sin(theta) + 2 pi:
// singleton Morse sets at theta = 0 and theta = pi, one graph edge, and
// tubes that wrap the whole circle.
CounterexampleFixture counterexample_fixture();

std::string to_string(CriterionMode m);

} // namespace morsescope
