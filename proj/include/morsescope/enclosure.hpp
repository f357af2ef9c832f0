// Combinatorial enclosures of the time-tau map and of its flow tubes.
#pragma once

#include "morsescope/grid.hpp"
#include "morsescope/integrator.hpp"
#include "morsescope/vector_field.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace morsescope {

class StepStrategy {
public:
    enum class Kind { fixed, adaptive, variable };

    // Throws std::invalid_argument unless h > 0.
    static StepStrategy fixed(double h);
    // tau(x) = D |s| / (|v(x)| + delta); throws unless D > 1 and delta > 0.
    static StepStrategy adaptive(double D = 4.0, double delta = 0.1);
    // Non-constant tau supplied per cell by the caller (synthetic maps only).
    static StepStrategy variable();

    Kind kind() const { return kind_; }
    bool is_fixed() const { return kind_ == Kind::fixed; }
    double h() const { return h_; }
    double D() const { return D_; }
    double delta() const { return delta_; }

    friend bool operator==(const StepStrategy&, const StepStrategy&) = default;

private:
    Kind kind_ = Kind::fixed;
    double h_ = 0.0;
    double D_ = 0.0;
    double delta_ = 0.0;
};

std::string to_string(const StepStrategy& s);

// Encloses {tau(x) : x in the cell}.
Interval tau_interval(const VectorField& f, const Grid& g, CellIndex cell, const StepStrategy& st);
// Same for an arbitrary box with cell diagonal norm `diag`.
Interval tau_interval(const VectorField& f, const IvBox& box, double diag, const StepStrategy& st);

enum CellFlag : std::uint8_t {
    cell_ok = 0,
    cell_failed = 1,
    cell_exits = 2,
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Multivalued map on the cells of a grid in compressed-row form. A failed
// cell maps to every cell of the grid; its explicit image list is empty.
class CellMap {
public:
    CellMap(Grid grid, StepStrategy strategy, IntegratorConfig integrator, std::string field);

    const Grid& grid() const { return grid_; }
    const StepStrategy& strategy() const { return strategy_; }
    const IntegratorConfig& integrator() const { return integrator_; }
    const std::string& field() const { return field_; }

    std::size_t cell_count() const { return flags_.size(); }
    std::uint8_t flags(CellIndex c) const { return flags_[c]; }
    bool failed(CellIndex c) const { return flags_[c] & cell_failed; }
    bool exits(CellIndex c) const { return flags_[c] & cell_exits; }
    FailureReason failure(CellIndex c) const { return reasons_[c]; }
    const Interval& tau(CellIndex c) const { return tau_[c]; }

    // Explicit image list; empty for failed cells.
    std::span<const CellIndex> targets(CellIndex c) const
    {
        return {targets_.data() + offsets_[c], targets_.data() + offsets_[c + 1]};
    }
    // Full image, materializing every cell for failed cells.
    CellSet image(CellIndex c) const;
    bool image_contains(CellIndex c, CellIndex target) const;
    std::size_t failed_count() const;
    std::size_t edge_count() const { return targets_.size(); }

    // Appends the next cell; cells must be appended in index order.
    void push(std::uint8_t flags, FailureReason reason, const Interval& tau, std::span<const CellIndex> image);
    bool complete() const { return flags_.size() == grid_.cell_count(); }

    friend bool operator==(const CellMap& a, const CellMap& b);

private:
    Grid grid_;
    StepStrategy strategy_;
    IntegratorConfig integrator_;
    std::string field_;
    std::vector<std::uint64_t> offsets_{0};
    std::vector<CellIndex> targets_;
    std::vector<std::uint8_t> flags_;
    std::vector<FailureReason> reasons_;
    std::vector<Interval> tau_;
};

// Images are covers of the flow endpoint over tau(cell).
struct CombinatorialMap : CellMap {
    using CellMap::CellMap;
};

// Images are covers of the flow tube over [0, sup tau(cell)].
struct TubeMap : CellMap {
    using CellMap::CellMap;
};

struct BuildOptions {
    // 0 selects MORSESCOPE_WORKERS or the hardware concurrency.
    int workers = 0;
};

int resolve_workers(int requested);

CombinatorialMap build_map(const VectorField& f, const Grid& g, const StepStrategy& st,
                           const IntegratorConfig& cfg = {}, BuildOptions opt = {});
TubeMap build_tube_map(const VectorField& f, const Grid& g, const StepStrategy& st, const IntegratorConfig& cfg = {},
                       BuildOptions opt = {});

struct MapPair {
    CombinatorialMap map;
    TubeMap tubes;
};

// Both maps from one integration per cell.
MapPair build_maps(const VectorField& f, const Grid& g, const StepStrategy& st, const IntegratorConfig& cfg = {},
                   BuildOptions opt = {});

// Versioned binary cache format (layout in README).
std::string serialize(const CellMap& m, const std::string& kind);
CellMap deserialize(const std::string& bytes, std::string* kind = nullptr);
std::string sha256_hex(std::string_view bytes);
// Hex SHA-256 of serialize(m, "map").
std::string map_hash(const CellMap& m);

void write_cache(const std::string& path, const CellMap& m, const std::string& kind);
CellMap read_cache(const std::string& path, std::string* kind = nullptr);

} // namespace morsescope
