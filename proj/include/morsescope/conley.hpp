// Combinatorial index pairs, relative cubical homology and the Leray
// (generalized kernel) reduction of index-map endomorphisms.
#pragma once

#include "morsescope/enclosure.hpp"
#include "morsescope/grid.hpp"
#include "morsescope/morse.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace morsescope {

class CollisionWithOtherMorseSet : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InteriorConditionFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Neighborhood {
    CellSet cells;
    // Some cell of the neighborhood lies on the boundary of the domain.
    bool touches_boundary = false;
};

// N(p) grown by `collar` layers of adjacent cells. Throws
// CollisionWithOtherMorseSet if the result meets another Morse set.
Neighborhood isolating_nbhd(const Grid& g, const MorseDecomposition& md, int p, int collar);

// Cells of N on a bi-infinite path of F inside N.
CellSet inv_part(const CellSet& N, const CellMap& F);

struct IndexPair {
    CellSet N, P1, P2, S;
};

// P1 = least fixpoint of P <- seed ∪ (F(P) ∩ N), seed = S grown by
// `seed_collar` layers within N; E = {c in P1 : F(c) ⊄ N or c exits X};
// P2 = least fixpoint of P <- E ∪ (F(P) ∩ P1). Throws
// InteriorConditionFailed unless S and its one-layer collar within N lie in
// P1 and S is disjoint from P2; the other invariants are asserted.
IndexPair build_index_pair(const Grid& g, const CellSet& N, const CellSet& S, const CellMap& F, int seed_collar = 1);

// Checks the three index-pair invariants; returns an empty string or a reason.
std::string check_index_pair(const Grid& g, const IndexPair& ip, const CellMap& F);

struct IndexSearch {
    std::optional<IndexPair> pair;
    int collar = 0;
    bool touches_boundary = false;
    // Why no pair was found.
    std::string reason;
};

// Tries collars c, 2c, ... up to max_collar until an index pair for set p
// exists; stops early when the neighborhood meets another Morse set.
IndexSearch search_index_pair(const Grid& g, const MorseDecomposition& md, const CellMap& F, int p, int collar,
                              int max_collar);

struct HomologyResult {
    std::vector<long> betti;                // dimensions 0..d
    std::vector<std::vector<std::string>> torsion; // invariant factors > 1, decimal
    std::vector<std::size_t> generators;    // relative chain group ranks
    int euler_characteristic() const;
};

// Relative cubical homology H(|P1|, |P2|) with integer coefficients.
HomologyResult relative_homology(const Grid& g, const CellSet& P1, const CellSet& P2);

// Relative chain complex: per dimension k, boundary of each k-generator
// as (row index into dimension k-1 generators, coefficient) pairs.
struct ChainComplex {
    int dim = 0;
    std::vector<std::size_t> size;                                    // generators per dimension
    std::vector<std::vector<std::vector<std::pair<std::size_t, int>>>> boundary; // [k][generator]
};

ChainComplex relative_chain_complex(const Grid& g, const CellSet& P1, const CellSet& P2);

// Plain-text export: one line per generator "k index : +i -j ...".
std::string export_boundary(const ChainComplex& c);

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct SmithResult {
    std::size_t rank = 0;
    std::vector<Integer> factors; // nonzero invariant factors, ascending
};

// Smith normal form invariants of a sparse integer matrix given by columns.
// Uses checked 64-bit arithmetic and falls back to arbitrary precision.
SmithResult smith_invariants(std::size_t rows, const std::vector<std::vector<std::pair<std::size_t, int>>>& cols);

struct Endomorphism {
    // Row-major n x n.
    std::size_t n = 0;
    std::vector<Rational> a;
    // Grade (homological dimension) of each basis vector.
    std::vector<int> grading;

    static Endomorphism identity(std::size_t n, int grade = 0);
    static Endomorphism from_rows(const std::vector<std::vector<long>>& rows, std::vector<int> grading = {});
    const Rational& at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
    Rational& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
    // Characteristic polynomial coefficients c_0..c_n of det(tI - A), c_n = 1.
    std::vector<Rational> characteristic_polynomial() const;
    std::size_t rank() const;
};

// Restriction of a to its eventual image im(a^n), which is isomorphic to the
// quotient by the generalized kernel followed by restriction to the
// eventual image. The result is an automorphism; grading is preserved.
Endomorphism leray_reduce(const Endomorphism& a);

// Ranks of H / gker(a) per dimension; `a` must be block diagonal with one
// block of size betti_k per dimension k. With no map, returns betti.
std::vector<long> gker_quotient_betti(const HomologyResult& h);
std::vector<long> gker_quotient_betti(const HomologyResult& h, const Endomorphism& a);

} // namespace morsescope
