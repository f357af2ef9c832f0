// Morse sets (nontrivial strongly connected components) and the Morse graph.
#pragma once

#include "morsescope/enclosure.hpp"
#include "morsescope/grid.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace morsescope {

// Directed graph in compressed-row form.
struct Digraph {
    std::size_t n = 0;
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> targets;

    static Digraph from_edges(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);
    std::span<const std::uint32_t> successors(std::size_t v) const
    {
        return {targets.data() + offsets[v], targets.data() + offsets[v + 1]};
    }
    bool has_edge(std::size_t u, std::uint32_t v) const;
};

// Cell digraph of a map. When failed cells exist an extra hub vertex (index
// cell_count) is appended with failed -> hub -> every cell, which has the
// same reachability and strong components as joining each failed cell to
// every cell directly.
Digraph cell_digraph(const CellMap& F);

struct SccResult {
    // Component of each vertex; components are numbered in reverse
    // topological order (every edge u -> v has comp[u] >= comp[v]).
    std::vector<std::uint32_t> comp;
    std::uint32_t count = 0;
};

SccResult strongly_connected_components(const Digraph& g);

// SCCs containing an edge, restricted to vertices < limit, ordered by
// smallest member.
std::vector<CellSet> nontrivial_components(const Digraph& g, std::size_t limit);

struct MorseDecomposition {
    std::vector<CellSet> sets;
    // Transitive reduction of the connection order, p -> q with p above q.
    std::vector<std::pair<int, int>> edges;
    // Full reachability: reach[p][q] iff a path leads from set p to set q.
    std::vector<std::vector<bool>> reach;
    // Morse set of each cell or -1.
    std::vector<int> cell_to_set;
    // False when the set count exceeded the graph limit.
    bool graph_computed = true;

    std::size_t size() const { return sets.size(); }
    bool reaches(int p, int q) const { return reach[p][q]; }
};

std::vector<CellSet> morse_sets(const CellMap& F);

struct MorseGraph {
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<bool>> reach;
};

MorseGraph morse_graph(const CellMap& F, const std::vector<CellSet>& sets);
MorseGraph morse_graph(const Digraph& g, const std::vector<CellSet>& sets);

// Morse sets plus, when there are at most `graph_limit` of them, the graph.
MorseDecomposition decompose(const CellMap& F, std::size_t graph_limit = 2000);
// Decomposition from explicit data (used for synthetic fixtures).
MorseDecomposition make_decomposition(std::size_t cell_count, std::vector<CellSet> sets,
                                      std::vector<std::pair<int, int>> edges);

std::vector<std::pair<int, int>> transitive_reduction(const std::vector<std::vector<bool>>& reach);

struct Census {
    std::size_t count = 0;
    std::size_t singletons = 0;
    double singleton_fraction = 0.0;
    std::size_t largest = 0;
    std::map<std::size_t, std::size_t> histogram; // size -> number of sets
};

Census spurious_census(const std::vector<CellSet>& sets);

// Failed cells of F inside the set.
std::size_t failed_cells_in(const CellMap& F, const CellSet& set);

// One node per Morse set (1-based, labeled with its size); reduced edges.
std::string to_dot(const MorseDecomposition& md);

} // namespace morsescope
