#include "morsescope/morse.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace morsescope {

Digraph Digraph::from_edges(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges)
{
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    Digraph g;
    g.n = n;
    g.offsets.assign(n + 1, 0);
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n)
            throw std::out_of_range("edge endpoint out of range");
        ++g.offsets[u + 1];
    }
    for (std::size_t i = 0; i < n; ++i)
        g.offsets[i + 1] += g.offsets[i];
    g.targets.reserve(edges.size());
    for (const auto& e : edges)
        g.targets.push_back(e.second);
    return g;
}

bool Digraph::has_edge(std::size_t u, std::uint32_t v) const
{
    auto s = successors(u);
    return std::binary_search(s.begin(), s.end(), v);
}

Digraph cell_digraph(const CellMap& F)
{
    const std::size_t n = F.cell_count();
    const bool hub = F.failed_count() > 0;
    Digraph g;
    g.n = n + (hub ? 1 : 0);
    g.offsets.reserve(g.n + 1);
    g.targets.reserve(F.edge_count() + (hub ? n + F.failed_count() : 0));
    for (CellIndex c = 0; c < n; ++c) {
        if (F.failed(c)) {
            g.targets.push_back(static_cast<std::uint32_t>(n));
        } else {
            auto t = F.targets(c);
            g.targets.insert(g.targets.end(), t.begin(), t.end());
        }
        g.offsets.push_back(g.targets.size());
    }
    if (hub) {
        for (std::size_t c = 0; c < n; ++c)
            g.targets.push_back(static_cast<std::uint32_t>(c));
        g.offsets.push_back(g.targets.size());
    }
    return g;
}

SccResult strongly_connected_components(const Digraph& g)
{
    constexpr std::uint32_t unvisited = std::numeric_limits<std::uint32_t>::max();
    const std::size_t n = g.n;
    SccResult r;
    r.comp.assign(n, unvisited);
    std::vector<std::uint32_t> index(n, unvisited), low(n, 0);
    std::vector<std::uint32_t> stack;
    std::vector<bool> on_stack(n, false);
    struct Frame {
        std::uint32_t v;
        std::uint64_t next;
    };
    std::vector<Frame> call;
    std::uint32_t counter = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited)
            continue;
        const auto start = static_cast<std::uint32_t>(root);
        index[start] = low[start] = counter++;
        stack.push_back(start);
        on_stack[start] = true;
        call.push_back({start, g.offsets[start]});
        while (!call.empty()) {
            Frame& fr = call.back();
            const std::uint32_t v = fr.v;
            if (fr.next < g.offsets[v + 1]) {
                const std::uint32_t w = g.targets[fr.next++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, g.offsets[w]});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                for (;;) {
                    const std::uint32_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    r.comp[w] = r.count;
                    if (w == v)
                        break;
                }
                ++r.count;
            }
            call.pop_back();
            if (!call.empty()) {
                const std::uint32_t parent = call.back().v;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return r;
}

namespace {

// Per-component flag: contains an edge (size > 1 or a self-loop).
std::vector<bool> nontrivial_flags(const Digraph& g, const SccResult& scc)
{
    std::vector<std::uint32_t> size(scc.count, 0);
    std::vector<bool> flag(scc.count, false);
    for (std::size_t v = 0; v < g.n; ++v) {
        if (++size[scc.comp[v]] > 1)
            flag[scc.comp[v]] = true;
        if (g.has_edge(v, static_cast<std::uint32_t>(v)))
            flag[scc.comp[v]] = true;
    }
    return flag;
}

std::vector<CellSet> collect_sets(const Digraph& g, const SccResult& scc, std::size_t limit)
{
    const std::vector<bool> flag = nontrivial_flags(g, scc);
    std::vector<int> slot(scc.count, -1);
    std::vector<CellSet> sets;
    // Scanning vertices in increasing order orders sets by smallest member.
    for (std::size_t v = 0; v < std::min(limit, g.n); ++v) {
        const auto c = scc.comp[v];
        if (!flag[c])
            continue;
        if (slot[c] < 0) {
            slot[c] = static_cast<int>(sets.size());
            sets.emplace_back();
        }
        sets[slot[c]].push_back(static_cast<CellIndex>(v));
    }
    return sets;
}

} // namespace

std::vector<CellSet> nontrivial_components(const Digraph& g, std::size_t limit)
{
    return collect_sets(g, strongly_connected_components(g), limit);
}

std::vector<CellSet> morse_sets(const CellMap& F)
{
    return nontrivial_components(cell_digraph(F), F.cell_count());
}

std::vector<std::pair<int, int>> transitive_reduction(const std::vector<std::vector<bool>>& reach)
{
    const int m = static_cast<int>(reach.size());
    std::vector<std::pair<int, int>> edges;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q || !reach[p][q])
                continue;
            bool implied = false;
            for (int r = 0; r < m && !implied; ++r)
                implied = r != p && r != q && reach[p][r] && reach[r][q];
            if (!implied)
                edges.emplace_back(p, q);
        }
    return edges;
}

MorseGraph morse_graph(const Digraph& g, const std::vector<CellSet>& sets)
{
    const SccResult scc = strongly_connected_components(g);
    const std::size_t m = sets.size();
    const std::size_t words = (m + 63) / 64;
    std::vector<int> morse_of(scc.count, -1);
    for (std::size_t p = 0; p < m; ++p) {
        if (sets[p].empty())
            throw std::invalid_argument("empty Morse set");
        const auto c = scc.comp[sets[p].front()];
        for (CellIndex x : sets[p])
            if (scc.comp[x] != c)
                throw std::invalid_argument("Morse set is not a strong component");
        morse_of[c] = static_cast<int>(p);
    }
    // Reachable Morse sets per component, accumulated sinks first.
    std::vector<std::uint64_t> bits(static_cast<std::size_t>(scc.count) * words, 0);
    std::vector<std::vector<std::uint32_t>> members(scc.count);
    for (std::size_t v = 0; v < g.n; ++v)
        members[scc.comp[v]].push_back(static_cast<std::uint32_t>(v));
    for (std::uint32_t c = 0; c < scc.count; ++c) {
        std::uint64_t* mine = bits.data() + static_cast<std::size_t>(c) * words;
        for (std::uint32_t v : members[c])
            for (std::uint32_t w : g.successors(v)) {
                const auto d = scc.comp[w];
                if (d == c)
                    continue;
                const std::uint64_t* theirs = bits.data() + static_cast<std::size_t>(d) * words;
                for (std::size_t k = 0; k < words; ++k)
                    mine[k] |= theirs[k];
                if (morse_of[d] >= 0)
                    mine[morse_of[d] / 64] |= std::uint64_t{1} << (morse_of[d] % 64);
            }
        members[c].clear();
        members[c].shrink_to_fit();
    }
    MorseGraph out;
    out.reach.assign(m, std::vector<bool>(m, false));
    for (std::size_t p = 0; p < m; ++p) {
        const std::uint64_t* row = bits.data() + static_cast<std::size_t>(scc.comp[sets[p].front()]) * words;
        for (std::size_t q = 0; q < m; ++q)
            out.reach[p][q] = q != p && ((row[q / 64] >> (q % 64)) & 1);
    }
    out.edges = transitive_reduction(out.reach);
    return out;
}

MorseGraph morse_graph(const CellMap& F, const std::vector<CellSet>& sets)
{
    return morse_graph(cell_digraph(F), sets);
}

MorseDecomposition make_decomposition(std::size_t cell_count, std::vector<CellSet> sets,
                                      std::vector<std::pair<int, int>> edges)
{
    MorseDecomposition md;
    md.sets = std::move(sets);
    const int m = static_cast<int>(md.sets.size());
    md.cell_to_set.assign(cell_count, -1);
    for (int p = 0; p < m; ++p)
        for (CellIndex c : md.sets[p]) {
            if (c >= cell_count)
                throw std::out_of_range("Morse set cell out of range");
            if (md.cell_to_set[c] >= 0)
                throw std::invalid_argument("Morse sets overlap");
            md.cell_to_set[c] = p;
        }
    md.reach.assign(m, std::vector<bool>(m, false));
    for (const auto& [p, q] : edges) {
        if (p < 0 || q < 0 || p >= m || q >= m || p == q)
            throw std::invalid_argument("invalid Morse graph edge");
        md.reach[p][q] = true;
    }
    // Transitive closure (Warshall).
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            if (md.reach[i][k])
                for (int j = 0; j < m; ++j)
                    if (md.reach[k][j])
                        md.reach[i][j] = true;
    for (int p = 0; p < m; ++p)
        if (md.reach[p][p])
            throw std::invalid_argument("Morse graph has a cycle");
    md.edges = transitive_reduction(md.reach);
    return md;
}

MorseDecomposition decompose(const CellMap& F, std::size_t graph_limit)
{
    const Digraph g = cell_digraph(F);
    MorseDecomposition md;
    md.sets = nontrivial_components(g, F.cell_count());
    md.cell_to_set.assign(F.cell_count(), -1);
    for (std::size_t p = 0; p < md.sets.size(); ++p)
        for (CellIndex c : md.sets[p])
            md.cell_to_set[c] = static_cast<int>(p);
    if (md.sets.size() > graph_limit) {
        md.graph_computed = false;
        return md;
    }
    MorseGraph mg = morse_graph(g, md.sets);
    md.edges = std::move(mg.edges);
    md.reach = std::move(mg.reach);
    return md;
}

Census spurious_census(const std::vector<CellSet>& sets)
{
    Census c;
    c.count = sets.size();
    for (const auto& s : sets) {
        ++c.histogram[s.size()];
        c.largest = std::max(c.largest, s.size());
        if (s.size() == 1)
            ++c.singletons;
    }
    c.singleton_fraction = c.count ? static_cast<double>(c.singletons) / static_cast<double>(c.count) : 0.0;
    return c;
}

std::size_t failed_cells_in(const CellMap& F, const CellSet& set)
{
    return static_cast<std::size_t>(std::count_if(set.begin(), set.end(), [&](CellIndex c) { return F.failed(c); }));
}

std::string to_dot(const MorseDecomposition& md)
{
    std::ostringstream os;
    os << "digraph morse {\n  node [shape=circle];\n";
    for (std::size_t p = 0; p < md.sets.size(); ++p)
        os << "  " << p + 1 << " [label=\"" << p + 1 << "\\n" << md.sets[p].size() << "\"];\n";
    for (const auto& [p, q] : md.edges)
        os << "  " << p + 1 << " -> " << q + 1 << ";\n";
    os << "}\n";
    return os.str();
}

} // namespace morsescope
