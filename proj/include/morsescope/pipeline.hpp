// Analysis configuration, the end-to-end pipeline and its JSON report.
#pragma once

#include "morsescope/enclosure.hpp"
#include "morsescope/integrator.hpp"
#include "morsescope/interval.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace morsescope {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputPaths {
    std::string dir = ".";
    std::string report = "report.json";
    std::string dot = "morse.dot";
    std::string svg = "morse.svg";
    std::string cache; // empty: no map cache
};

struct AnalysisConfig {
    std::string system = "two_cycles";
    std::map<std::string, double> params;
    std::vector<std::string> expressions; // overrides `system` when nonempty
    IvBox domain;
    std::vector<int> divisions;
    StepStrategy strategy = StepStrategy::adaptive(4.0, 0.1);
    IntegratorConfig integrator;
    OutputPaths outputs;
    bool run_verify = false;
    bool run_index = false;
    int collar = 2;
    int max_collar = 64;
    int workers = 0;
    // Morse graph and index computations are skipped above this many sets.
    std::size_t graph_limit = 2000;
    bool report_cells = true;
};

// Validates a JSON configuration (see schema/config.schema.json) and fills
// defaults. Throws ConfigError with a "schema error" message.
AnalysisConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const AnalysisConfig& c);

enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_rejected = 3,
    exit_integration_failure = 4,
};

struct AnalysisOutput {
    nlohmann::json report;
    std::string dot;
    std::string svg;
    std::string cache; // serialized map when outputs.cache is set
    int exit_code = exit_ok;
};

// Runs the pipeline; progress lines go to `log` when non-null.
AnalysisOutput run_analysis(const AnalysisConfig& cfg, std::ostream* log = nullptr);

// Writes report, DOT and SVG (and the cache when requested) under outputs.dir.
void write_outputs(const AnalysisConfig& cfg, const AnalysisOutput& out);

// SHA-256 of the report with timings and the hash field removed.
std::string report_content_hash(const nlohmann::json& report);

// SVG of the Morse sets in a report (frame only when the report has no
// cell lists or the grid is not planar). Throws MissingArtifact when the
// report lacks grid information.
std::string render_svg(const nlohmann::json& report);

// Embedded fixtures: interval containment, SCC oracle, homology pairs and the
// counterexample rejection. Returns the number of failed checks. Setting
// MORSESCOPE_SELFTEST_TAMPER corrupts one fixture expectation.
int run_selftest(std::ostream& out);

} // namespace morsescope
