// morsescope: Morse decompositions and Conley indices of planar and
// higher-dimensional flows from validated flow enclosures.
#include "morsescope/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using namespace morsescope;

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

double to_double(const std::string& s, const std::string& what)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse " + what + " value \"" + s + "\"");
    }
}

json read_json(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

struct AnalyzeFlags {
    std::string config;
    std::string system;
    std::vector<std::string> params;
    std::vector<std::string> exprs;
    std::string domain;
    int depth = -1;
    std::string divisions;
    std::string strategy;
    double h = 0, D = 0, delta = 0;
    int order = 0;
    int max_substeps = 0;
    int collar = 0;
    bool verify = false;
    bool index = false;
    std::string out_dir;
    std::string cache;
    int workers = -1;
    bool no_cells = false;
    bool quiet = false;
};

// File values first, then command-line flags on top.
json merged_config(const AnalyzeFlags& f, CLI::App& cmd)
{
    json j = f.config.empty() ? json::object() : read_json(f.config);
    if (!j.is_object())
        throw ConfigError("schema error at /: expected an object");
    auto system_object = [&]() -> json& {
        if (!j.contains("system"))
            j["system"] = json::object();
        else if (j["system"].is_string())
            j["system"] = json{{"name", j["system"]}};
        return j["system"];
    };
    if (cmd.count("--system"))
        system_object()["name"] = f.system;
    for (const auto& kv : f.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--param expects key=value, got \"" + kv + "\"");
        system_object()["params"][kv.substr(0, eq)] = to_double(kv.substr(eq + 1), "--param");
    }
    if (!f.exprs.empty())
        system_object()["expressions"] = f.exprs;
    if (cmd.count("--domain")) {
        json d = json::array();
        for (const auto& part : split(f.domain, ',')) {
            const auto lohi = split(part, ':');
            if (lohi.size() != 2)
                throw ConfigError("--domain expects lo:hi,lo:hi,...");
            d.push_back({to_double(lohi[0], "--domain"), to_double(lohi[1], "--domain")});
        }
        j["domain"] = d;
    }
    if (cmd.count("--depth")) {
        j.erase("divisions");
        j["depth"] = f.depth;
    }
    if (cmd.count("--divisions")) {
        j.erase("depth");
        json d = json::array();
        for (const auto& part : split(f.divisions, ','))
            d.push_back(static_cast<long>(to_double(part, "--divisions")));
        j["divisions"] = d;
    }
    if (cmd.count("--strategy") || cmd.count("--h") || cmd.count("--D") || cmd.count("--delta")) {
        std::string kind = f.strategy;
        if (kind.empty())
            kind = cmd.count("--h") ? "fixed"
                   : (j.contains("strategy") && j["strategy"].contains("kind")) ? j["strategy"]["kind"].get<std::string>()
                                                                                 : "adaptive";
        json& s = j["strategy"];
        if (!s.is_object() || !s.contains("kind") || s["kind"] != kind)
            s = json{{"kind", kind}};
        if (cmd.count("--h"))
            s["h"] = f.h;
        if (cmd.count("--D"))
            s["D"] = f.D;
        if (cmd.count("--delta"))
            s["delta"] = f.delta;
    }
    if (cmd.count("--order"))
        j["integrator"]["order"] = f.order;
    if (cmd.count("--max-substeps"))
        j["integrator"]["max_substeps"] = f.max_substeps;
    if (cmd.count("--collar"))
        j["collar"] = f.collar;
    if (f.verify)
        j["verify"] = true;
    if (f.index)
        j["index"] = true;
    if (cmd.count("--out-dir"))
        j["outputs"]["dir"] = f.out_dir;
    if (cmd.count("--cache"))
        j["outputs"]["cache"] = f.cache;
    if (cmd.count("--workers"))
        j["workers"] = f.workers;
    if (f.no_cells)
        j["report_cells"] = false;
    return j;
}

int cmd_analyze(const AnalyzeFlags& f, CLI::App& cmd)
{
    AnalysisConfig cfg;
    try {
        cfg = parse_config(merged_config(f, cmd));
    } catch (const ConfigError& e) {
        std::cerr << "morsescope: " << e.what() << "\n";
        return exit_config_error;
    }
    AnalysisOutput out;
    try {
        out = run_analysis(cfg, f.quiet ? nullptr : &std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "morsescope: " << e.what() << "\n";
        return exit_config_error;
    }
    write_outputs(cfg, out);
    const json& r = out.report;
    std::cout << "Morse sets: " << r["morse"]["count"] << ", edges: " << r["morse"]["edges"].size()
              << ", failed cells: " << r["cells"]["failed"] << "\n";
    if (r["verification"].is_object())
        std::cout << "verification (criterion " << r["verification"]["mode"].get<std::string>()
                  << "): " << r["verification"]["verdict"].get<std::string>() << "\n";
    for (const auto& c : r["conley"]) {
        std::cout << "set " << c["set"] << ": ";
        if (c["status"] == "ok")
            std::cout << "betti " << c["betti"].dump() << " (collar " << c["collar"] << ")\n";
        else
            std::cout << c["status"].get<std::string>() << " - " << c["reason"].get<std::string>() << "\n";
    }
    for (const auto& w : r["warnings"])
        std::cerr << "warning: " << w.get<std::string>() << "\n";
    std::cout << "report written to " << cfg.outputs.dir << "/" << cfg.outputs.report << "\n";
    return out.exit_code;
}

int cmd_render(const std::string& report_path, const std::string& out_path)
{
    std::ifstream is(report_path);
    if (!is) {
        std::cerr << "morsescope: missing artifact " << report_path << "\n";
        return exit_config_error;
    }
    try {
        const json report = json::parse(is);
        const std::string svg = render_svg(report);
        std::ofstream os(out_path, std::ios::binary);
        if (!os) {
            std::cerr << "morsescope: cannot write " << out_path << "\n";
            return 1;
        }
        os << svg;
    } catch (const MissingArtifact& e) {
        std::cerr << "morsescope: missing artifact: " << e.what() << "\n";
        return exit_config_error;
    } catch (const json::exception& e) {
        std::cerr << "morsescope: " << report_path << " is not a valid report: " << e.what() << "\n";
        return exit_config_error;
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Morse decompositions and Conley indices of flows from validated enclosures"};
    app.require_subcommand(1);

    AnalyzeFlags f;
    CLI::App* analyze = app.add_subcommand("analyze", "run the analysis pipeline");
    analyze->set_help_flag("--help", "print this help message and exit");
    analyze->add_option("--config", f.config, "JSON configuration file (flags override it)");
    analyze->add_option("--system", f.system, "builtin system: two_cycles, circle_demo, linear");
    analyze->add_option("--param", f.params, "system parameter key=value (repeatable)");
    analyze->add_option("--expr", f.exprs, "component expression, one per dimension (repeatable)");
    analyze->add_option("--domain", f.domain, "domain as lo:hi,lo:hi");
    analyze->add_option("--depth", f.depth, "2^n divisions per dimension");
    analyze->add_option("--divisions", f.divisions, "divisions per dimension as k1,k2");
    analyze->add_option("--strategy", f.strategy, "fixed or adaptive")->check(CLI::IsMember({"fixed", "adaptive"}));
    analyze->add_option("--h", f.h, "fixed time step");
    analyze->add_option("--D", f.D, "adaptive step factor D");
    analyze->add_option("--delta", f.delta, "adaptive step regularization delta");
    analyze->add_option("--order", f.order, "Taylor order (1..5)");
    analyze->add_option("--max-substeps", f.max_substeps, "integrator substep budget per cell");
    analyze->add_option("--collar", f.collar, "initial collar width for isolating neighborhoods");
    analyze->add_flag("--verify", f.verify, "check criterion A or B");
    analyze->add_flag("--index", f.index, "compute Conley indices");
    analyze->add_option("--out-dir", f.out_dir, "output directory");
    analyze->add_option("--cache", f.cache, "also write the map cache under this name");
    analyze->add_option("--workers", f.workers, "worker threads (0: MORSESCOPE_WORKERS or all cores)");
    analyze->add_flag("--no-cells", f.no_cells, "omit cell lists from the report");
    analyze->add_flag("--quiet", f.quiet, "no progress output");

    std::string report_path, svg_path = "morse.svg";
    CLI::App* render = app.add_subcommand("render", "render a report as SVG");
    render->add_option("report", report_path, "report.json")->required();
    render->add_option("-o,--output", svg_path, "output SVG path");

    app.add_subcommand("selftest", "run embedded fixtures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config_error;
    }

    try {
        if (*analyze)
            return cmd_analyze(f, *analyze);
        if (*render)
            return cmd_render(report_path, svg_path);
        const int failures = run_selftest(std::cout);
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "morsescope: " << e.what() << "\n";
        return 1;
    }
}
