// Uniform cubical grid over a rectangular domain.
#pragma once

#include "morsescope/interval.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace morsescope {

class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Row-major linearized cell index (first coordinate most significant).
using CellIndex = std::uint32_t;

// Sorted, duplicate-free list of cells.
using CellSet = std::vector<CellIndex>;

// Multi-index m with 0 <= m_i < k_i.
struct CellId {
    std::vector<int> m;
    friend bool operator==(const CellId&, const CellId&) = default;
    friend auto operator<=>(const CellId&, const CellId&) = default;
};

struct Cover {
    CellSet cells;
    bool exits_domain = false;
};

class Grid {
public:
    // Throws std::invalid_argument for a degenerate domain, k_i < 1, a
    // dimension mismatch, or more than 2^32 - 1 cells.
    Grid(IvBox domain, std::vector<int> divisions);

    int dim() const { return static_cast<int>(divisions_.size()); }
    const IvBox& domain() const { return domain_; }
    const std::vector<int>& divisions() const { return divisions_; }
    std::size_t cell_count() const { return cell_count_; }
    // Enclosure of the exact side length s_i.
    const Interval& cell_size(int i) const { return size_[i]; }

    CellIndex linear(const CellId& id) const;
    CellId multi(CellIndex index) const;
    bool in_range(const CellId& id) const;

    // Closed, outward-rounded realization of the cell.
    IvBox cell_box(const CellId& id) const;
    IvBox cell_box(CellIndex index) const;
    // Closed lower/upper coordinate of layer m in dimension i (m in [0, k_i]).
    double vertex_lo(int i, int m) const;
    double vertex_hi(int i, int m) const;

    // All cells whose closed box meets b; exits_domain iff b is not inside the domain.
    Cover cover(const IvBox& b) const;
    // Upper bound of the Euclidean length of the cell diagonal.
    double diagonal_norm() const;

    // Cells within Chebyshev distance `radius` of `set`, including set itself.
    CellSet dilate(const CellSet& set, int radius) const;
    // Cells of the grid adjacent (sharing at least a vertex) to `index`.
    void neighbors(CellIndex index, std::vector<CellIndex>& out) const;

    friend bool operator==(const Grid& a, const Grid& b)
    {
        return a.domain_ == b.domain_ && a.divisions_ == b.divisions_;
    }

private:
    IvBox domain_;
    std::vector<int> divisions_;
    std::vector<Interval> size_;
    std::vector<std::size_t> stride_;
    std::size_t cell_count_ = 0;
};

CellId cell_id(std::initializer_list<int> m);

// Set helpers on sorted CellSets.
bool contains(const CellSet& s, CellIndex c);
CellSet set_union(const CellSet& a, const CellSet& b);
CellSet set_intersection(const CellSet& a, const CellSet& b);
CellSet set_difference(const CellSet& a, const CellSet& b);
bool is_subset(const CellSet& a, const CellSet& b);
bool disjoint(const CellSet& a, const CellSet& b);
void normalize(CellSet& s);

} // namespace morsescope
