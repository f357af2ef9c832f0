#include "morsescope/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

namespace morsescope {

using namespace rounding;

Grid::Grid(IvBox domain, std::vector<int> divisions) : domain_(std::move(domain)), divisions_(std::move(divisions))
{
    if (domain_.empty() || domain_.size() != divisions_.size())
        throw std::invalid_argument("grid: domain and divisions must have the same positive dimension");
    cell_count_ = 1;
    for (std::size_t i = 0; i < domain_.size(); ++i) {
        if (!domain_[i].is_bounded() || !(domain_[i].lo < domain_[i].hi))
            throw std::invalid_argument("grid: domain must be bounded and nondegenerate");
        if (divisions_[i] < 1)
            throw std::invalid_argument("grid: divisions must be positive");
        const Interval span = Interval(domain_[i].hi) - Interval(domain_[i].lo);
        size_.push_back(span / Interval(static_cast<double>(divisions_[i])));
        cell_count_ *= static_cast<std::size_t>(divisions_[i]);
        if (cell_count_ > std::numeric_limits<CellIndex>::max())
            throw std::invalid_argument("grid: too many cells");
    }
    stride_.assign(divisions_.size(), 1);
    for (int i = dim() - 2; i >= 0; --i)
        stride_[i] = stride_[i + 1] * static_cast<std::size_t>(divisions_[i + 1]);
}

bool Grid::in_range(const CellId& id) const
{
    if (id.m.size() != divisions_.size())
        return false;
    for (std::size_t i = 0; i < id.m.size(); ++i)
        if (id.m[i] < 0 || id.m[i] >= divisions_[i])
            return false;
    return true;
}

CellIndex Grid::linear(const CellId& id) const
{
    if (!in_range(id))
        throw OutOfRange("cell multi-index out of range");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < id.m.size(); ++i)
        idx += stride_[i] * static_cast<std::size_t>(id.m[i]);
    return static_cast<CellIndex>(idx);
}

CellId Grid::multi(CellIndex index) const
{
    if (index >= cell_count_)
        throw OutOfRange("cell index out of range");
    CellId id;
    id.m.resize(divisions_.size());
    std::size_t rest = index;
    for (std::size_t i = 0; i < divisions_.size(); ++i) {
        id.m[i] = static_cast<int>(rest / stride_[i]);
        rest %= stride_[i];
    }
    return id;
}

double Grid::vertex_lo(int i, int m) const
{
    if (m == 0)
        return domain_[i].lo;
    if (m == divisions_[i])
        return domain_[i].hi;
    const double off = mul_down(static_cast<double>(m), size_[i].lo);
    return std::max(add_down(domain_[i].lo, off), domain_[i].lo);
}

double Grid::vertex_hi(int i, int m) const
{
    if (m == 0)
        return domain_[i].lo;
    if (m == divisions_[i])
        return domain_[i].hi;
    const double off = mul_up(static_cast<double>(m), size_[i].hi);
    return std::min(add_up(domain_[i].lo, off), domain_[i].hi);
}

IvBox Grid::cell_box(const CellId& id) const
{
    if (!in_range(id))
        throw OutOfRange("cell multi-index out of range");
    IvBox b(dim());
    for (int i = 0; i < dim(); ++i)
        b[i] = Interval::unchecked(vertex_lo(i, id.m[i]), vertex_hi(i, id.m[i] + 1));
    return b;
}

IvBox Grid::cell_box(CellIndex index) const { return cell_box(multi(index)); }

Cover Grid::cover(const IvBox& b) const
{
    Cover out;
    std::vector<int> lo(dim()), hi(dim());
    for (int i = 0; i < dim(); ++i) {
        if (!(domain_[i].lo <= b[i].lo && b[i].hi <= domain_[i].hi))
            out.exits_domain = true;
        const int k = divisions_[i];
        // Closed cell m spans [vertex_lo(m), vertex_hi(m+1)].
        if (b[i].hi < domain_[i].lo || b[i].lo > domain_[i].hi) {
            out.exits_domain = true;
            return out;
        }
        const double s = size_[i].mid();
        auto guess = [&](double x) {
            const double g = std::floor((x - domain_[i].lo) / s);
            return static_cast<int>(std::clamp(g, 0.0, static_cast<double>(k - 1)));
        };
        int a = guess(b[i].lo);
        while (a > 0 && vertex_hi(i, a) >= b[i].lo)
            --a;
        while (a < k - 1 && vertex_hi(i, a + 1) < b[i].lo)
            ++a;
        int z = guess(b[i].hi);
        while (z < k - 1 && vertex_lo(i, z + 1) <= b[i].hi)
            ++z;
        while (z > 0 && vertex_lo(i, z) > b[i].hi)
            --z;
        if (a > z)
            return out;
        lo[i] = a;
        hi[i] = z;
    }
    // Enumerate the index box in row-major order, which is sorted order.
    std::vector<int> m = lo;
    for (;;) {
        std::size_t idx = 0;
        for (int i = 0; i < dim(); ++i)
            idx += stride_[i] * static_cast<std::size_t>(m[i]);
        out.cells.push_back(static_cast<CellIndex>(idx));
        int i = dim() - 1;
        while (i >= 0 && m[i] == hi[i]) {
            m[i] = lo[i];
            --i;
        }
        if (i < 0)
            break;
        ++m[i];
    }
    return out;
}

double Grid::diagonal_norm() const
{
    Interval s(0.0);
    for (const auto& c : size_)
        s += sqr(Interval(c.hi));
    return sqrt(s).hi;
}

void Grid::neighbors(CellIndex index, std::vector<CellIndex>& out) const
{
    out.clear();
    const CellId id = multi(index);
    std::vector<int> off(dim(), -1);
    for (;;) {
        bool valid = true;
        bool self = true;
        std::size_t idx = 0;
        for (int i = 0; i < dim(); ++i) {
            const int v = id.m[i] + off[i];
            if (v < 0 || v >= divisions_[i])
                valid = false;
            self = self && off[i] == 0;
            idx += stride_[i] * static_cast<std::size_t>(std::max(v, 0));
        }
        if (valid && !self)
            out.push_back(static_cast<CellIndex>(idx));
        int i = dim() - 1;
        while (i >= 0 && off[i] == 1) {
            off[i] = -1;
            --i;
        }
        if (i < 0)
            break;
        ++off[i];
    }
}

CellSet Grid::dilate(const CellSet& set, int radius) const
{
    CellSet cur = set;
    std::vector<CellIndex> nb;
    for (int r = 0; r < radius; ++r) {
        CellSet next = cur;
        for (CellIndex c : cur) {
            neighbors(c, nb);
            next.insert(next.end(), nb.begin(), nb.end());
        }
        normalize(next);
        if (next.size() == cur.size())
            break;
        cur = std::move(next);
    }
    return cur;
}

CellId cell_id(std::initializer_list<int> m) { return CellId{std::vector<int>(m)}; }

bool contains(const CellSet& s, CellIndex c) { return std::binary_search(s.begin(), s.end(), c); }

CellSet set_union(const CellSet& a, const CellSet& b)
{
    CellSet r;
    r.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

CellSet set_intersection(const CellSet& a, const CellSet& b)
{
    CellSet r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

CellSet set_difference(const CellSet& a, const CellSet& b)
{
    CellSet r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

bool is_subset(const CellSet& a, const CellSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

bool disjoint(const CellSet& a, const CellSet& b)
{
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j)
            ++i;
        else if (*j < *i)
            ++j;
        else
            return false;
    }
    return true;
}

void normalize(CellSet& s)
{
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
}

} // namespace morsescope
