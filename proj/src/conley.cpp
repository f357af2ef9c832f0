#include "morsescope/conley.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

namespace morsescope {

// ---------------------------------------------------------------------------
// Isolating neighborhoods and index pairs

Neighborhood isolating_nbhd(const Grid& g, const MorseDecomposition& md, int p, int collar)
{
    if (p < 0 || p >= static_cast<int>(md.sets.size()))
        throw std::out_of_range("Morse set index out of range");
    if (collar < 1)
        throw std::invalid_argument("collar must be at least 1");
    Neighborhood nb;
    nb.cells = g.dilate(md.sets[p], collar);
    for (CellIndex c : nb.cells) {
        const int q = md.cell_to_set[c];
        if (q >= 0 && q != p)
            throw CollisionWithOtherMorseSet("neighborhood of set " + std::to_string(p + 1) + " with collar " +
                                             std::to_string(collar) + " meets set " + std::to_string(q + 1));
        const CellId id = g.multi(c);
        for (int i = 0; i < g.dim(); ++i)
            if (id.m[i] == 0 || id.m[i] == g.divisions()[i] - 1)
                nb.touches_boundary = true;
    }
    return nb;
}

namespace {

// Position of c in sorted N, or -1.
long locate(const CellSet& N, CellIndex c)
{
    auto it = std::lower_bound(N.begin(), N.end(), c);
    return it != N.end() && *it == c ? it - N.begin() : -1;
}

// Successors inside N, as positions in N.
std::vector<std::vector<std::uint32_t>> local_successors(const CellSet& N, const CellMap& F)
{
    std::vector<std::vector<std::uint32_t>> succ(N.size());
    for (std::size_t i = 0; i < N.size(); ++i) {
        if (F.failed(N[i])) {
            succ[i].resize(N.size());
            std::iota(succ[i].begin(), succ[i].end(), 0u);
            continue;
        }
        for (CellIndex t : F.targets(N[i])) {
            const long k = locate(N, t);
            if (k >= 0)
                succ[i].push_back(static_cast<std::uint32_t>(k));
        }
    }
    return succ;
}

// Least fixpoint of P <- seed ∪ (F(P) ∩ within).
CellSet forward_closure(const CellSet& seed, const CellSet& within, const CellMap& F)
{
    std::vector<bool> in(within.size(), false);
    std::deque<std::size_t> queue;
    for (CellIndex c : seed) {
        const long k = locate(within, c);
        if (k >= 0 && !in[k]) {
            in[k] = true;
            queue.push_back(static_cast<std::size_t>(k));
        }
    }
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        auto visit = [&](long k) {
            if (k >= 0 && !in[k]) {
                in[k] = true;
                queue.push_back(static_cast<std::size_t>(k));
            }
        };
        if (F.failed(within[i])) {
            for (std::size_t k = 0; k < within.size(); ++k)
                visit(static_cast<long>(k));
        } else {
            for (CellIndex t : F.targets(within[i]))
                visit(locate(within, t));
        }
    }
    CellSet out;
    for (std::size_t i = 0; i < within.size(); ++i)
        if (in[i])
            out.push_back(within[i]);
    return out;
}

bool leaves(const CellMap& F, CellIndex c, const CellSet& N)
{
    if (F.failed(c) || F.exits(c))
        return true;
    for (CellIndex t : F.targets(c))
        if (!contains(N, t))
            return true;
    return false;
}

} // namespace

CellSet inv_part(const CellSet& N, const CellMap& F)
{
    const auto succ = local_successors(N, F);
    const std::size_t n = N.size();
    std::vector<std::vector<std::uint32_t>> pred(n);
    for (std::size_t i = 0; i < n; ++i)
        for (auto j : succ[i])
            pred[j].push_back(static_cast<std::uint32_t>(i));

    auto prune = [&](const std::vector<std::vector<std::uint32_t>>& out_edges,
                     const std::vector<std::vector<std::uint32_t>>& in_edges) {
        std::vector<std::size_t> degree(n);
        std::vector<bool> alive(n, true);
        std::vector<std::size_t> queue;
        for (std::size_t i = 0; i < n; ++i) {
            degree[i] = out_edges[i].size();
            if (degree[i] == 0)
                queue.push_back(i);
        }
        while (!queue.empty()) {
            const std::size_t i = queue.back();
            queue.pop_back();
            if (!alive[i])
                continue;
            alive[i] = false;
            for (auto j : in_edges[i])
                if (alive[j] && --degree[j] == 0)
                    queue.push_back(j);
        }
        return alive;
    };
    const auto has_future = prune(succ, pred);
    const auto has_past = prune(pred, succ);
    CellSet s;
    for (std::size_t i = 0; i < n; ++i)
        if (has_future[i] && has_past[i])
            s.push_back(N[i]);
    return s;
}

std::string check_index_pair(const Grid& g, const IndexPair& ip, const CellMap& F)
{
    if (!is_subset(ip.P2, ip.P1) || !is_subset(ip.P1, ip.N))
        return "P2 ⊆ P1 ⊆ N violated";
    for (const CellSet* P : {&ip.P1, &ip.P2})
        for (CellIndex c : *P) {
            if (F.failed(c)) {
                if (!is_subset(ip.N, *P))
                    return "positive invariance violated at a failed cell";
                continue;
            }
            for (CellIndex t : F.targets(c))
                if (contains(ip.N, t) && !contains(*P, t))
                    return "positive invariance violated at cell " + std::to_string(c);
        }
    for (CellIndex c : ip.P1)
        if (leaves(F, c, ip.N) && !contains(ip.P2, c))
            return "exit cell " + std::to_string(c) + " not in P2";
    const CellSet core = set_intersection(g.dilate(ip.S, 1), ip.N);
    if (!is_subset(core, ip.P1))
        return "collar of S not contained in P1";
    if (!disjoint(ip.S, ip.P2))
        return "S meets P2";
    return {};
}

IndexPair build_index_pair(const Grid& g, const CellSet& N, const CellSet& S, const CellMap& F, int seed_collar)
{
    if (S.empty())
        throw std::invalid_argument("index pair needs a nonempty invariant part");
    if (!is_subset(S, N))
        throw std::invalid_argument("invariant part must lie in N");
    IndexPair ip;
    ip.N = N;
    ip.S = S;
    const CellSet seed = set_intersection(g.dilate(S, std::max(seed_collar, 0)), N);
    ip.P1 = forward_closure(seed, N, F);
    CellSet exit_set;
    for (CellIndex c : ip.P1)
        if (leaves(F, c, N))
            exit_set.push_back(c);
    ip.P2 = forward_closure(exit_set, ip.P1, F);

    const CellSet core = set_intersection(g.dilate(S, 1), N);
    if (!is_subset(core, ip.P1) || !disjoint(S, ip.P2))
        throw InteriorConditionFailed("invariant part is not interior to P1 \\ P2");
    if (const std::string why = check_index_pair(g, ip, F); !why.empty())
        throw std::logic_error("index pair invariant failed: " + why);
    return ip;
}

// ---------------------------------------------------------------------------
// Smith normal form

namespace {

struct Overflow {};

template <class T>
struct Arith;

template <>
struct Arith<long long> {
    static long long mul(long long a, long long b)
    {
        long long r;
        if (__builtin_mul_overflow(a, b, &r))
            throw Overflow{};
        return r;
    }
    static long long sub(long long a, long long b)
    {
        long long r;
        if (__builtin_sub_overflow(a, b, &r))
            throw Overflow{};
        return r;
    }
    static long long add(long long a, long long b)
    {
        long long r;
        if (__builtin_add_overflow(a, b, &r))
            throw Overflow{};
        return r;
    }
    static long long abs(long long a)
    {
        if (a == std::numeric_limits<long long>::min())
            throw Overflow{};
        return a < 0 ? -a : a;
    }
    static Integer big(long long a) { return Integer(a); }
};

template <>
struct Arith<Integer> {
    static Integer mul(const Integer& a, const Integer& b) { return a * b; }
    static Integer sub(const Integer& a, const Integer& b) { return a - b; }
    static Integer add(const Integer& a, const Integer& b) { return a + b; }
    static Integer abs(const Integer& a) { return a < 0 ? Integer(-a) : a; }
    static Integer big(const Integer& a) { return a; }
};

template <class T>
using SparseCol = std::vector<std::pair<std::size_t, T>>;

// col -= k * pivot, keeping rows sorted and dropping zeros.
template <class T>
void axpy(SparseCol<T>& col, const T& k, const SparseCol<T>& pivot, std::vector<std::size_t>& fresh_rows)
{
    using A = Arith<T>;
    SparseCol<T> out;
    out.reserve(col.size() + pivot.size());
    std::size_t i = 0, j = 0;
    while (i < col.size() || j < pivot.size()) {
        if (j == pivot.size() || (i < col.size() && col[i].first < pivot[j].first)) {
            out.push_back(col[i++]);
        } else if (i == col.size() || pivot[j].first < col[i].first) {
            T v = A::sub(T(0), A::mul(k, pivot[j].second));
            fresh_rows.push_back(pivot[j].first);
            out.emplace_back(pivot[j].first, std::move(v));
            ++j;
        } else {
            T v = A::sub(col[i].second, A::mul(k, pivot[j].second));
            if (v != 0)
                out.emplace_back(col[i].first, std::move(v));
            ++i;
            ++j;
        }
    }
    col = std::move(out);
}

template <class T>
void dense_smith(std::vector<std::vector<T>> m, SmithResult& res)
{
    using A = Arith<T>;
    const std::size_t rows = m.size();
    const std::size_t cols = rows ? m[0].size() : 0;
    std::size_t t = 0;
    while (t < rows && t < cols) {
        // Smallest nonzero magnitude in the trailing block.
        std::size_t pi = rows, pj = cols;
        T best = 0;
        for (std::size_t i = t; i < rows; ++i)
            for (std::size_t j = t; j < cols; ++j)
                if (m[i][j] != 0 && (pi == rows || A::abs(m[i][j]) < best)) {
                    best = A::abs(m[i][j]);
                    pi = i;
                    pj = j;
                }
        if (pi == rows)
            break;
        std::swap(m[t], m[pi]);
        for (auto& r : m)
            std::swap(r[t], r[pj]);
        bool clean = false;
        while (!clean) {
            clean = true;
            const T p = m[t][t];
            for (std::size_t i = t + 1; i < rows; ++i) {
                if (m[i][t] == 0)
                    continue;
                const T q = m[i][t] / p;
                for (std::size_t j = t; j < cols; ++j)
                    m[i][j] = A::sub(m[i][j], A::mul(q, m[t][j]));
                if (m[i][t] != 0) {
                    std::swap(m[t], m[i]);
                    clean = false;
                    break;
                }
            }
            if (!clean)
                continue;
            for (std::size_t j = t + 1; j < cols; ++j) {
                if (m[t][j] == 0)
                    continue;
                const T q = m[t][j] / p;
                for (std::size_t i = t; i < rows; ++i)
                    m[i][j] = A::sub(m[i][j], A::mul(q, m[i][t]));
                if (m[t][j] != 0) {
                    for (auto& r : m)
                        std::swap(r[t], r[j]);
                    clean = false;
                    break;
                }
            }
            if (!clean)
                continue;
            // Divisibility of the trailing block by the pivot.
            for (std::size_t i = t + 1; i < rows && clean; ++i)
                for (std::size_t j = t + 1; j < cols; ++j)
                    if (m[i][j] % p != 0) {
                        for (std::size_t k = t; k < cols; ++k)
                            m[t][k] = A::add(m[t][k], m[i][k]);
                        clean = false;
                        break;
                    }
        }
        res.factors.push_back(A::big(A::abs(m[t][t])));
        ++res.rank;
        ++t;
    }
}

template <class T>
SmithResult smith_impl(std::size_t rows, const std::vector<std::vector<std::pair<std::size_t, int>>>& input)
{
    using A = Arith<T>;
    std::vector<SparseCol<T>> cols(input.size());
    std::vector<std::vector<std::size_t>> row_cols(rows);
    for (std::size_t j = 0; j < input.size(); ++j) {
        auto src = input[j];
        std::sort(src.begin(), src.end());
        for (const auto& [r, v] : src) {
            if (r >= rows)
                throw std::out_of_range("matrix row out of range");
            if (!cols[j].empty() && cols[j].back().first == r)
                cols[j].back().second = A::add(cols[j].back().second, T(v));
            else
                cols[j].emplace_back(r, T(v));
        }
        std::erase_if(cols[j], [](const auto& e) { return e.second == 0; });
        for (const auto& e : cols[j])
            row_cols[e.first].push_back(j);
    }
    SmithResult res;
    std::vector<bool> col_alive(cols.size(), true), row_alive(rows, true);
    std::vector<std::size_t> order(cols.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return cols[a].size() < cols[b].size(); });
    std::vector<std::size_t> fresh;

    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t j : order) {
            if (!col_alive[j])
                continue;
            if (cols[j].empty()) {
                col_alive[j] = false;
                continue;
            }
            std::size_t best = rows;
            std::size_t best_load = std::numeric_limits<std::size_t>::max();
            T unit = 0;
            for (const auto& [r, v] : cols[j])
                if ((v == 1 || v == -1) && row_cols[r].size() < best_load) {
                    best = r;
                    best_load = row_cols[r].size();
                    unit = v;
                }
            if (best == rows)
                continue;
            // Clear row `best` outside column j by column operations.
            const auto touching = row_cols[best];
            for (std::size_t c : touching) {
                if (c == j || !col_alive[c])
                    continue;
                auto it = std::lower_bound(cols[c].begin(), cols[c].end(), best,
                                           [](const auto& e, std::size_t r) { return e.first < r; });
                if (it == cols[c].end() || it->first != best)
                    continue;
                const T k = A::mul(it->second, unit);
                fresh.clear();
                axpy(cols[c], k, cols[j], fresh);
                for (std::size_t r : fresh)
                    row_cols[r].push_back(c);
            }
            col_alive[j] = false;
            row_alive[best] = false;
            row_cols[best].clear();
            cols[j].clear();
            ++res.rank;
            res.factors.push_back(Integer(1));
            progress = true;
        }
        // Compact stale row lists.
        if (progress)
            for (std::size_t r = 0; r < rows; ++r) {
                if (!row_alive[r])
                    continue;
                auto& lst = row_cols[r];
                std::sort(lst.begin(), lst.end());
                lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
                std::erase_if(lst, [&](std::size_t c) {
                    if (!col_alive[c])
                        return true;
                    return !std::binary_search(cols[c].begin(), cols[c].end(), std::make_pair(r, T(0)),
                                               [](const auto& a, const auto& b) { return a.first < b.first; });
                });
            }
    }
    // Dense remainder.
    std::vector<std::size_t> live_cols, live_rows;
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (col_alive[j] && !cols[j].empty())
            live_cols.push_back(j);
    std::vector<long> row_pos(rows, -1);
    for (std::size_t j : live_cols)
        for (const auto& e : cols[j])
            if (row_pos[e.first] < 0) {
                row_pos[e.first] = static_cast<long>(live_rows.size());
                live_rows.push_back(e.first);
            }
    if (!live_cols.empty()) {
        std::vector<std::vector<T>> dense(live_rows.size(), std::vector<T>(live_cols.size(), T(0)));
        for (std::size_t jj = 0; jj < live_cols.size(); ++jj)
            for (const auto& [r, v] : cols[live_cols[jj]])
                dense[row_pos[r]][jj] = v;
        dense_smith(std::move(dense), res);
    }
    std::sort(res.factors.begin(), res.factors.end());
    return res;
}

} // namespace

SmithResult smith_invariants(std::size_t rows, const std::vector<std::vector<std::pair<std::size_t, int>>>& cols)
{
    try {
        return smith_impl<long long>(rows, cols);
    } catch (const Overflow&) {
        return smith_impl<Integer>(rows, cols);
    }
}

// ---------------------------------------------------------------------------
// Relative cubical homology

namespace {

struct FaceLattice {
    std::vector<std::uint64_t> extent; // 2 k_i + 1
    std::vector<std::uint64_t> stride;

    explicit FaceLattice(const Grid& g)
    {
        const int d = g.dim();
        extent.resize(d);
        stride.assign(d, 1);
        for (int i = 0; i < d; ++i)
            extent[i] = 2 * static_cast<std::uint64_t>(g.divisions()[i]) + 1;
        for (int i = d - 2; i >= 0; --i)
            stride[i] = stride[i + 1] * extent[i + 1];
    }
    std::uint64_t coord(std::uint64_t id, int i) const { return (id / stride[i]) % extent[i]; }
    int dim_of(std::uint64_t id) const
    {
        int k = 0;
        for (std::size_t i = 0; i < extent.size(); ++i)
            k += static_cast<int>(coord(id, static_cast<int>(i)) & 1);
        return k;
    }
};

std::vector<std::uint64_t> faces_of(const Grid& g, const FaceLattice& L, const CellSet& cells)
{
    const int d = g.dim();
    std::uint64_t per = 1;
    for (int i = 0; i < d; ++i)
        per *= 3;
    std::vector<std::uint64_t> out;
    out.reserve(cells.size() * per);
    for (CellIndex c : cells) {
        const CellId id = g.multi(c);
        for (std::uint64_t k = 0; k < per; ++k) {
            std::uint64_t rest = k, face = 0;
            for (int i = 0; i < d; ++i) {
                face += (2 * static_cast<std::uint64_t>(id.m[i]) + rest % 3) * L.stride[i];
                rest /= 3;
            }
            out.push_back(face);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

ChainComplex relative_chain_complex(const Grid& g, const CellSet& P1, const CellSet& P2)
{
    if (!is_subset(P2, P1))
        throw std::invalid_argument("relative homology needs P2 ⊆ P1");
    const int d = g.dim();
    const FaceLattice L(g);
    std::vector<std::uint64_t> gens;
    {
        const auto f1 = faces_of(g, L, P1);
        const auto f2 = faces_of(g, L, P2);
        std::set_difference(f1.begin(), f1.end(), f2.begin(), f2.end(), std::back_inserter(gens));
    }
    std::vector<std::vector<std::uint64_t>> by_dim(d + 1);
    for (auto f : gens)
        by_dim[L.dim_of(f)].push_back(f); // stays sorted
    ChainComplex cc;
    cc.dim = d;
    cc.size.resize(d + 1);
    cc.boundary.resize(d + 1);
    for (int k = 0; k <= d; ++k) {
        cc.size[k] = by_dim[k].size();
        cc.boundary[k].resize(by_dim[k].size());
        if (k == 0)
            continue;
        const auto& lower = by_dim[k - 1];
        for (std::size_t j = 0; j < by_dim[k].size(); ++j) {
            const std::uint64_t f = by_dim[k][j];
            int before = 0;
            auto& col = cc.boundary[k][j];
            for (int i = 0; i < d; ++i) {
                if (!(L.coord(f, i) & 1))
                    continue;
                const int s = before % 2 == 0 ? 1 : -1;
                ++before;
                for (int side : {-1, 1}) {
                    const std::uint64_t face = side < 0 ? f - L.stride[i] : f + L.stride[i];
                    auto it = std::lower_bound(lower.begin(), lower.end(), face);
                    if (it != lower.end() && *it == face)
                        col.emplace_back(static_cast<std::size_t>(it - lower.begin()), side * s);
                }
            }
            std::sort(col.begin(), col.end());
        }
    }
    return cc;
}

int HomologyResult::euler_characteristic() const
{
    long chi = 0;
    for (std::size_t k = 0; k < betti.size(); ++k)
        chi += (k % 2 == 0 ? 1 : -1) * betti[k];
    return static_cast<int>(chi);
}

HomologyResult relative_homology(const Grid& g, const CellSet& P1, const CellSet& P2)
{
    const ChainComplex cc = relative_chain_complex(g, P1, P2);
    const int d = cc.dim;
    std::vector<SmithResult> snf(d + 2);
    for (int k = 1; k <= d; ++k)
        snf[k] = smith_invariants(cc.size[k - 1], cc.boundary[k]);
    HomologyResult h;
    h.generators = cc.size;
    h.betti.resize(d + 1);
    h.torsion.resize(d + 1);
    for (int k = 0; k <= d; ++k) {
        h.betti[k] = static_cast<long>(cc.size[k]) - static_cast<long>(snf[k].rank) -
                     static_cast<long>(snf[k + 1].rank);
        for (const auto& f : snf[k + 1].factors)
            if (f > 1)
                h.torsion[k].push_back(f.str());
    }
    return h;
}

std::string export_boundary(const ChainComplex& c)
{
    std::ostringstream os;
    os << "# relative cubical chain complex, dimension " << c.dim << "\n";
    for (int k = 0; k <= c.dim; ++k)
        os << "# generators " << k << " " << c.size[k] << "\n";
    for (int k = 0; k <= c.dim; ++k)
        for (std::size_t j = 0; j < c.boundary[k].size(); ++j) {
            os << k << " " << j << " :";
            for (const auto& [r, v] : c.boundary[k][j])
                os << " " << (v > 0 ? "+" : "-") << r;
            os << "\n";
        }
    return os.str();
}

IndexSearch search_index_pair(const Grid& g, const MorseDecomposition& md, const CellMap& F, int p, int collar,
                              int max_collar)
{
    IndexSearch out;
    out.reason = "no collar tried";
    for (int c = collar; c <= max_collar; c += collar) {
        Neighborhood nb;
        try {
            nb = isolating_nbhd(g, md, p, c);
        } catch (const CollisionWithOtherMorseSet& e) {
            out.reason = e.what();
            break;
        }
        const CellSet S = inv_part(nb.cells, F);
        if (S.empty()) {
            out.reason = "empty invariant part";
            continue;
        }
        try {
            out.pair = build_index_pair(g, nb.cells, S, F);
            out.collar = c;
            out.touches_boundary = nb.touches_boundary;
            out.reason.clear();
            return out;
        } catch (const InteriorConditionFailed& e) {
            out.reason = std::string(e.what()) + " (collar " + std::to_string(c) + ")";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rational linear algebra and the Leray reduction

namespace {

using RMat = std::vector<std::vector<Rational>>;

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RMat& m, std::size_t ncols)
{
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < ncols && r < m.size(); ++c) {
        std::size_t p = r;
        while (p < m.size() && m[p][c] == 0)
            ++p;
        if (p == m.size())
            continue;
        std::swap(m[r], m[p]);
        const Rational inv = 1 / m[r][c];
        for (auto& x : m[r])
            x *= inv;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i == r || m[i][c] == 0)
                continue;
            const Rational f = m[i][c];
            for (std::size_t j = 0; j < m[i].size(); ++j)
                m[i][j] -= f * m[r][j];
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

RMat to_rows(const Endomorphism& e)
{
    RMat m(e.n, std::vector<Rational>(e.n));
    for (std::size_t i = 0; i < e.n; ++i)
        for (std::size_t j = 0; j < e.n; ++j)
            m[i][j] = e.at(i, j);
    return m;
}

RMat multiply(const RMat& a, const RMat& b)
{
    const std::size_t n = a.size(), k = b.size(), m = k ? b[0].size() : 0;
    RMat c(n, std::vector<Rational>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l)
            if (a[i][l] != 0)
                for (std::size_t j = 0; j < m; ++j)
                    c[i][j] += a[i][l] * b[l][j];
    return c;
}

// Leray reduction of one ungraded square block.
RMat reduce_block(const RMat& a)
{
    const std::size_t n = a.size();
    if (n == 0)
        return {};
    RMat power = a;
    for (std::size_t k = 1; k < n; ++k)
        power = multiply(power, a);
    // Basis of the eventual image: pivot columns of a^n.
    RMat ech = power;
    const auto piv = rref(ech, n);
    const std::size_t r = piv.size();
    RMat basis(n, std::vector<Rational>(r));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < r; ++j)
            basis[i][j] = power[i][piv[j]];
    // Solve basis * M = a * basis.
    const RMat image = multiply(a, basis);
    RMat aug(n, std::vector<Rational>(2 * r));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < r; ++j) {
            aug[i][j] = basis[i][j];
            aug[i][r + j] = image[i][j];
        }
    const auto p2 = rref(aug, r);
    if (p2.size() != r)
        throw std::logic_error("eventual image basis is not independent");
    RMat out(r, std::vector<Rational>(r));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            out[i][j] = aug[i][r + j];
    for (std::size_t i = r; i < n; ++i)
        for (std::size_t j = 0; j < 2 * r; ++j)
            if (aug[i][j] != 0)
                throw std::logic_error("eventual image is not invariant");
    return out;
}

} // namespace

Endomorphism Endomorphism::identity(std::size_t n, int grade)
{
    Endomorphism e;
    e.n = n;
    e.a.assign(n * n, Rational(0));
    for (std::size_t i = 0; i < n; ++i)
        e.at(i, i) = 1;
    e.grading.assign(n, grade);
    return e;
}

Endomorphism Endomorphism::from_rows(const std::vector<std::vector<long>>& rows, std::vector<int> grading)
{
    Endomorphism e;
    e.n = rows.size();
    for (const auto& r : rows) {
        if (r.size() != e.n)
            throw DimensionMismatch("endomorphism matrix must be square");
        for (long v : r)
            e.a.emplace_back(v);
    }
    e.grading = grading.empty() ? std::vector<int>(e.n, 0) : std::move(grading);
    if (e.grading.size() != e.n)
        throw DimensionMismatch("grading size differs from matrix size");
    return e;
}

std::size_t Endomorphism::rank() const
{
    RMat m = to_rows(*this);
    return rref(m, n).size();
}

std::vector<Rational> Endomorphism::characteristic_polynomial() const
{
    // Faddeev-LeVerrier.
    const RMat A = to_rows(*this);
    std::vector<Rational> c(n + 1);
    c[n] = 1;
    RMat M(n, std::vector<Rational>(n));
    for (std::size_t k = 1; k <= n; ++k) {
        RMat AM = multiply(A, M);
        for (std::size_t i = 0; i < n; ++i)
            AM[i][i] += c[n - k + 1];
        M = std::move(AM);
        const RMat AMk = multiply(A, M);
        Rational tr = 0;
        for (std::size_t i = 0; i < n; ++i)
            tr += AMk[i][i];
        c[n - k] = -tr / static_cast<long>(k);
    }
    return c;
}

Endomorphism leray_reduce(const Endomorphism& a)
{
    if (a.a.size() != a.n * a.n || a.grading.size() != a.n)
        throw DimensionMismatch("malformed endomorphism");
    std::vector<int> grades = a.grading;
    std::sort(grades.begin(), grades.end());
    grades.erase(std::unique(grades.begin(), grades.end()), grades.end());
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t j = 0; j < a.n; ++j)
            if (a.grading[i] != a.grading[j] && a.at(i, j) != 0)
                throw DimensionMismatch("endomorphism does not preserve the grading");

    Endomorphism out;
    std::vector<RMat> blocks;
    for (int gr : grades) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < a.n; ++i)
            if (a.grading[i] == gr)
                idx.push_back(i);
        RMat b(idx.size(), std::vector<Rational>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                b[i][j] = a.at(idx[i], idx[j]);
        blocks.push_back(reduce_block(b));
        out.n += blocks.back().size();
        out.grading.insert(out.grading.end(), blocks.back().size(), gr);
    }
    out.a.assign(out.n * out.n, Rational(0));
    std::size_t off = 0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                out.at(off + i, off + j) = b[i][j];
        off += b.size();
    }
    if (out.rank() != out.n)
        throw std::logic_error("Leray reduction is not an automorphism");
    return out;
}

std::vector<long> gker_quotient_betti(const HomologyResult& h) { return h.betti; }

std::vector<long> gker_quotient_betti(const HomologyResult& h, const Endomorphism& a)
{
    if (a.grading.size() != a.n)
        throw DimensionMismatch("malformed endomorphism");
    std::vector<long> count(h.betti.size(), 0);
    for (int gr : a.grading) {
        if (gr < 0 || gr >= static_cast<int>(h.betti.size()))
            throw DimensionMismatch("grade outside the homology range");
        ++count[gr];
    }
    if (count != h.betti)
        throw DimensionMismatch("endomorphism blocks do not match the Betti numbers");
    const Endomorphism red = leray_reduce(a);
    std::vector<long> out(h.betti.size(), 0);
    for (int gr : red.grading)
        ++out[gr];
    return out;
}

} // namespace morsescope
