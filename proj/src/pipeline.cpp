#include "morsescope/pipeline.hpp"

#include "morsescope/conley.hpp"
#include "morsescope/morse.hpp"
#include "morsescope/verify.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

namespace morsescope {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what)
{
    throw ConfigError("schema error at " + path + ": " + what);
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!obj.is_object())
        schema_error(path, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            schema_error(path, "unknown key \"" + it.key() + "\"");
}

double number(const json& j, const std::string& path)
{
    if (!j.is_number())
        schema_error(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        schema_error(path, "expected a finite number");
    return v;
}

double positive(const json& j, const std::string& path)
{
    const double v = number(j, path);
    if (!(v > 0.0))
        schema_error(path, "expected a positive number");
    return v;
}

long integer(const json& j, const std::string& path, long lo, long hi)
{
    if (!j.is_number_integer())
        schema_error(path, "expected an integer");
    const long v = j.get<long>();
    if (v < lo || v > hi)
        schema_error(path, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

bool boolean(const json& j, const std::string& path)
{
    if (!j.is_boolean())
        schema_error(path, "expected true or false");
    return j.get<bool>();
}

std::string text(const json& j, const std::string& path)
{
    if (!j.is_string())
        schema_error(path, "expected a string");
    return j.get<std::string>();
}

} // namespace

AnalysisConfig parse_config(const json& j)
{
    allow_keys(j, "/", {"system", "domain", "depth", "divisions", "strategy", "integrator", "verify", "index",
                        "collar", "max_collar", "workers", "graph_limit", "report_cells", "outputs"});
    AnalysisConfig c;

    if (j.contains("system")) {
        const json& s = j["system"];
        if (s.is_string()) {
            c.system = s.get<std::string>();
        } else {
            allow_keys(s, "/system", {"name", "params", "expressions"});
            if (s.contains("name"))
                c.system = text(s["name"], "/system/name");
            if (s.contains("params")) {
                if (!s["params"].is_object())
                    schema_error("/system/params", "expected an object of numbers");
                for (auto it = s["params"].begin(); it != s["params"].end(); ++it)
                    c.params[it.key()] = number(it.value(), "/system/params/" + it.key());
            }
            if (s.contains("expressions")) {
                if (!s["expressions"].is_array() || s["expressions"].empty())
                    schema_error("/system/expressions", "expected a nonempty array of strings");
                for (std::size_t i = 0; i < s["expressions"].size(); ++i)
                    c.expressions.push_back(text(s["expressions"][i], "/system/expressions/" + std::to_string(i)));
            }
        }
    }

    if (!j.contains("domain"))
        schema_error("/", "missing required key \"domain\"");
    {
        const json& d = j["domain"];
        if (!d.is_array() || d.empty())
            schema_error("/domain", "expected a nonempty array of [lo, hi] pairs");
        for (std::size_t i = 0; i < d.size(); ++i) {
            const std::string path = "/domain/" + std::to_string(i);
            if (!d[i].is_array() || d[i].size() != 2)
                schema_error(path, "expected [lo, hi]");
            const double lo = number(d[i][0], path + "/0");
            const double hi = number(d[i][1], path + "/1");
            if (!(lo < hi))
                schema_error(path, "expected lo < hi");
            c.domain.push_back(Interval(lo, hi));
        }
    }
    const std::size_t dim = c.domain.size();

    if (j.contains("depth") && j.contains("divisions"))
        schema_error("/", "give either \"depth\" or \"divisions\", not both");
    if (j.contains("divisions")) {
        const json& d = j["divisions"];
        if (!d.is_array() || d.size() != dim)
            schema_error("/divisions", "expected one positive integer per domain dimension");
        for (std::size_t i = 0; i < d.size(); ++i)
            c.divisions.push_back(static_cast<int>(integer(d[i], "/divisions/" + std::to_string(i), 1, 1 << 24)));
    } else {
        const long depth = j.contains("depth") ? integer(j["depth"], "/depth", 0, 24) : 8;
        c.divisions.assign(dim, 1 << depth);
    }

    if (j.contains("strategy")) {
        const json& s = j["strategy"];
        allow_keys(s, "/strategy", {"kind", "h", "D", "delta"});
        const std::string kind = s.contains("kind") ? text(s["kind"], "/strategy/kind") : "adaptive";
        if (kind == "fixed") {
            if (!s.contains("h"))
                schema_error("/strategy", "fixed strategy needs \"h\"");
            if (s.contains("D") || s.contains("delta"))
                schema_error("/strategy", "fixed strategy takes only \"h\"");
            c.strategy = StepStrategy::fixed(positive(s["h"], "/strategy/h"));
        } else if (kind == "adaptive") {
            if (s.contains("h"))
                schema_error("/strategy", "adaptive strategy takes \"D\" and \"delta\", not \"h\"");
            const double D = s.contains("D") ? number(s["D"], "/strategy/D") : 4.0;
            const double delta = s.contains("delta") ? positive(s["delta"], "/strategy/delta") : 0.1;
            if (!(D > 1.0))
                schema_error("/strategy/D", "expected a number > 1");
            c.strategy = StepStrategy::adaptive(D, delta);
        } else {
            schema_error("/strategy/kind", "expected \"fixed\" or \"adaptive\"");
        }
    }

    if (j.contains("integrator")) {
        const json& s = j["integrator"];
        allow_keys(s, "/integrator", {"order", "max_substeps", "inflation", "max_picard_iters", "remainder_rel_tol",
                                      "remainder_abs_tol", "blowup_norm"});
        IntegratorConfig& ic = c.integrator;
        if (s.contains("order"))
            ic.taylor_order = static_cast<int>(integer(s["order"], "/integrator/order", 1, 5));
        if (s.contains("max_substeps"))
            ic.max_substeps = static_cast<int>(integer(s["max_substeps"], "/integrator/max_substeps", 1, 100000000));
        if (s.contains("inflation")) {
            ic.inflation = number(s["inflation"], "/integrator/inflation");
            if (!(ic.inflation > 1.0))
                schema_error("/integrator/inflation", "expected a number > 1");
        }
        if (s.contains("max_picard_iters"))
            ic.max_picard_iters =
                static_cast<int>(integer(s["max_picard_iters"], "/integrator/max_picard_iters", 1, 1000));
        if (s.contains("remainder_rel_tol"))
            ic.remainder_rel_tol = positive(s["remainder_rel_tol"], "/integrator/remainder_rel_tol");
        if (s.contains("remainder_abs_tol"))
            ic.remainder_abs_tol = positive(s["remainder_abs_tol"], "/integrator/remainder_abs_tol");
        if (s.contains("blowup_norm"))
            ic.blowup_norm = positive(s["blowup_norm"], "/integrator/blowup_norm");
    }

    if (j.contains("verify"))
        c.run_verify = boolean(j["verify"], "/verify");
    if (j.contains("index"))
        c.run_index = boolean(j["index"], "/index");
    if (j.contains("collar"))
        c.collar = static_cast<int>(integer(j["collar"], "/collar", 1, 1 << 20));
    if (j.contains("max_collar"))
        c.max_collar = static_cast<int>(integer(j["max_collar"], "/max_collar", 1, 1 << 20));
    if (c.max_collar < c.collar)
        c.max_collar = c.collar;
    if (j.contains("workers"))
        c.workers = static_cast<int>(integer(j["workers"], "/workers", 0, 4096));
    if (j.contains("graph_limit"))
        c.graph_limit = static_cast<std::size_t>(integer(j["graph_limit"], "/graph_limit", 0, 1000000));
    if (j.contains("report_cells"))
        c.report_cells = boolean(j["report_cells"], "/report_cells");

    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        allow_keys(o, "/outputs", {"dir", "report", "dot", "svg", "cache"});
        if (o.contains("dir"))
            c.outputs.dir = text(o["dir"], "/outputs/dir");
        if (o.contains("report"))
            c.outputs.report = text(o["report"], "/outputs/report");
        if (o.contains("dot"))
            c.outputs.dot = text(o["dot"], "/outputs/dot");
        if (o.contains("svg"))
            c.outputs.svg = text(o["svg"], "/outputs/svg");
        if (o.contains("cache"))
            c.outputs.cache = text(o["cache"], "/outputs/cache");
    }

    try {
        c.integrator.validate();
    } catch (const std::invalid_argument& e) {
        schema_error("/integrator", e.what());
    }
    return c;
}

json to_json(const AnalysisConfig& c)
{
    json j;
    json sys;
    if (c.expressions.empty())
        sys["name"] = c.system;
    else
        sys["expressions"] = c.expressions;
    sys["params"] = json::object();
    for (const auto& [k, v] : c.params)
        sys["params"][k] = v;
    j["system"] = sys;
    json dom = json::array();
    for (const auto& iv : c.domain)
        dom.push_back({iv.lo, iv.hi});
    j["domain"] = dom;
    j["divisions"] = c.divisions;
    if (c.strategy.is_fixed())
        j["strategy"] = {{"kind", "fixed"}, {"h", c.strategy.h()}};
    else
        j["strategy"] = {{"kind", "adaptive"}, {"D", c.strategy.D()}, {"delta", c.strategy.delta()}};
    const IntegratorConfig& ic = c.integrator;
    j["integrator"] = {{"order", ic.taylor_order},
                       {"max_substeps", ic.max_substeps},
                       {"inflation", ic.inflation},
                       {"max_picard_iters", ic.max_picard_iters},
                       {"remainder_rel_tol", ic.remainder_rel_tol},
                       {"remainder_abs_tol", ic.remainder_abs_tol},
                       {"blowup_norm", ic.blowup_norm}};
    j["verify"] = c.run_verify;
    j["index"] = c.run_index;
    j["collar"] = c.collar;
    j["max_collar"] = c.max_collar;
    j["graph_limit"] = c.graph_limit;
    j["report_cells"] = c.report_cells;
    j["outputs"] = {{"dir", c.outputs.dir},
                    {"report", c.outputs.report},
                    {"dot", c.outputs.dot},
                    {"svg", c.outputs.svg},
                    {"cache", c.outputs.cache}};
    return j;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

class Stopwatch {
public:
    double lap_ms()
    {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
        return std::round(ms * 1000.0) / 1000.0;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

json box_json(const IvBox& b)
{
    json a = json::array();
    for (const auto& iv : b)
        a.push_back({iv.lo, iv.hi});
    return a;
}

IvBox bounding_box(const Grid& g, const CellSet& cells)
{
    IvBox b;
    for (CellIndex c : cells)
        b = b.empty() ? g.cell_box(c) : hull(b, g.cell_box(c));
    return b;
}

json homology_json(const HomologyResult& h)
{
    return {{"betti", h.betti}, {"torsion", h.torsion}, {"generators", h.generators}};
}

json index_for_set(const Grid& g, const MorseDecomposition& md, const CombinatorialMap& F,
                   const TubeMap* tubes, int p, int collar, int max_collar)
{
    json j;
    j["set"] = p + 1;
    if (failed_cells_in(F, md.sets[p]) > 0) {
        j["status"] = "skipped";
        j["reason"] = "Morse set contains failed cells";
        return j;
    }
    const IndexSearch found = search_index_pair(g, md, F, p, collar, max_collar);
    if (found.pair) {
        const IndexPair& ip = *found.pair;
        const HomologyResult h = relative_homology(g, ip.P1, ip.P2);
        j["status"] = "ok";
        j["collar"] = found.collar;
        j["N"] = ip.N.size();
        j["S"] = ip.S.size();
        j["P1"] = ip.P1.size();
        j["P2"] = ip.P2.size();
        j["homology"] = homology_json(h);
        j["betti"] = gker_quotient_betti(h);
        bool exits = false;
        if (found.touches_boundary && tubes)
            for (CellIndex x : ip.N)
                exits = exits || tubes->exits(x) || tubes->failed(x);
        j["touches_boundary"] = found.touches_boundary;
        if (found.touches_boundary && exits)
            j["warning"] = "neighborhood touches the domain boundary where tubes exit";
        return j;
    }
    j["status"] = "failed";
    j["reason"] = found.reason;
    return j;
}

} // namespace

AnalysisOutput run_analysis(const AnalysisConfig& cfg, std::ostream* log)
{
    auto say = [&](const std::string& s) {
        if (log)
            *log << s << std::endl;
    };
    AnalysisOutput out;
    json& rep = out.report;
    json timings;
    json warnings = json::array();
    Stopwatch sw;

    rep["format"] = "morsescope-report";
    rep["version"] = 1;
    rep["config"] = to_json(cfg);

    std::optional<VectorField> field;
    try {
        if (cfg.expressions.empty())
            field.emplace(builtin(cfg.system, cfg.params));
        else
            field.emplace(cfg.expressions, cfg.params, "custom");
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid system: ") + e.what());
    }
    if (field->dim() != static_cast<int>(cfg.domain.size()))
        throw ConfigError("system dimension " + std::to_string(field->dim()) + " does not match the domain dimension " +
                          std::to_string(cfg.domain.size()));
    std::optional<Grid> grid_storage;
    try {
        grid_storage.emplace(cfg.domain, cfg.divisions);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid grid: ") + e.what());
    }
    const Grid& g = *grid_storage;
    rep["system"] = field->describe();
    rep["grid"] = {{"domain", box_json(g.domain())},
                   {"divisions", g.divisions()},
                   {"cells", g.cell_count()},
                   {"diagonal_norm", g.diagonal_norm()}};
    timings["setup"] = sw.lap_ms();

    say("building enclosure of " + std::to_string(g.cell_count()) + " cells, " + to_string(cfg.strategy));
    const BuildOptions opt{cfg.workers};
    MapPair maps = cfg.run_verify ? build_maps(*field, g, cfg.strategy, cfg.integrator, opt)
                                  : MapPair{build_map(*field, g, cfg.strategy, cfg.integrator, opt),
                                            TubeMap(g, cfg.strategy, cfg.integrator, field->describe())};
    const CombinatorialMap& F = maps.map;
    timings["enclosure"] = sw.lap_ms();

    std::map<std::string, std::size_t> reasons;
    std::size_t exits = 0;
    for (CellIndex c = 0; c < F.cell_count(); ++c) {
        if (F.failed(c))
            ++reasons[to_string(F.failure(c))];
        if (F.exits(c))
            ++exits;
    }
    const std::size_t failed = F.failed_count();
    rep["cells"] = {{"total", F.cell_count()},
                    {"failed", failed},
                    {"exits_domain", exits},
                    {"failure_reasons", reasons},
                    {"edges", F.edge_count()}};
    rep["map_hash"] = map_hash(F);
    say("enclosure done: " + std::to_string(failed) + " failed cells");

    const MorseDecomposition md = decompose(F, cfg.graph_limit);
    const Census census = spurious_census(md.sets);
    timings["morse"] = sw.lap_ms();
    say("Morse sets: " + std::to_string(md.sets.size()));

    json sets = json::array();
    for (std::size_t p = 0; p < md.sets.size(); ++p) {
        json s;
        s["id"] = p + 1;
        s["size"] = md.sets[p].size();
        const std::size_t bad = failed_cells_in(F, md.sets[p]);
        s["failed_cells"] = bad;
        s["bbox"] = box_json(bounding_box(g, md.sets[p]));
        if (cfg.report_cells)
            s["cells"] = md.sets[p];
        sets.push_back(s);
        if (bad > 0)
            warnings.push_back("Morse set " + std::to_string(p + 1) + " contains " + std::to_string(bad) +
                               " failed cells; its dynamical interpretation is not valid");
    }
    json edges = json::array();
    for (const auto& [p, q] : md.edges)
        edges.push_back({p + 1, q + 1});
    json hist = json::object();
    for (const auto& [size, count] : census.histogram)
        hist[std::to_string(size)] = count;
    rep["morse"] = {{"count", md.sets.size()},
                    {"graph_computed", md.graph_computed},
                    {"sets", sets},
                    {"edges", edges},
                    {"census",
                     {{"count", census.count},
                      {"singletons", census.singletons},
                      {"singleton_fraction", census.singleton_fraction},
                      {"largest", census.largest},
                      {"histogram", hist}}}};
    if (!md.graph_computed)
        warnings.push_back("Morse graph skipped: " + std::to_string(md.sets.size()) + " sets exceed graph_limit " +
                           std::to_string(cfg.graph_limit));
    if (census.count > 100 && census.singleton_fraction > 0.5)
        warnings.push_back("spurious Morse sets likely: " + std::to_string(census.count) + " sets, " +
                           std::to_string(census.singletons) + " singletons");

    bool rejected = false;
    if (cfg.run_verify) {
        json v;
        if (!cfg.strategy.is_fixed() && !md.graph_computed) {
            v = {{"mode", "B"}, {"verdict", "skipped"}, {"reasons", {"too many Morse sets for criterion B"}}};
            warnings.push_back("verification skipped: too many Morse sets");
        } else {
            const VerificationReport vr = check_criterion(md, maps.tubes, cfg.strategy);
            v["mode"] = to_string(vr.mode);
            v["verdict"] = vr.certified ? "certified" : "rejected";
            v["reasons"] = vr.reasons;
            json per = json::array();
            for (std::size_t p = 0; p < vr.per_set.size(); ++p) {
                const SetCheck& sc = vr.per_set[p];
                json d = json::object();
                for (const auto& [q, ok] : sc.disjoint_from)
                    d[std::to_string(q + 1)] = ok;
                json e{{"id", p + 1},
                       {"z_size", sc.z_cells.size()},
                       {"subset_of_X", sc.subset_of_X},
                       {"failed_cells", sc.failed_cells},
                       {"disjoint_from", d}};
                if (cfg.report_cells)
                    e["z_cells"] = sc.z_cells;
                per.push_back(e);
            }
            v["sets"] = per;
            rejected = !vr.certified;
        }
        rep["verification"] = v;
    } else {
        rep["verification"] = nullptr;
    }
    timings["verify"] = sw.lap_ms();

    json conley = json::array();
    if (cfg.run_index) {
        if (!md.graph_computed) {
            warnings.push_back("index computation skipped: too many Morse sets");
        } else {
            for (std::size_t p = 0; p < md.sets.size(); ++p) {
                say("index pair for set " + std::to_string(p + 1));
                conley.push_back(index_for_set(g, md, F, cfg.run_verify ? &maps.tubes : nullptr, static_cast<int>(p),
                                               cfg.collar, cfg.max_collar));
            }
        }
    }
    rep["conley"] = conley;
    timings["index"] = sw.lap_ms();

    rep["warnings"] = warnings;
    out.dot = to_dot(md);
    if (!cfg.outputs.cache.empty()) {
        out.cache = serialize(F, "map");
        rep["map_cache"] = cfg.outputs.cache;
    }
    out.svg = render_svg(rep);
    timings["render"] = sw.lap_ms();
    rep["timings_ms"] = timings;

    if (2 * failed > F.cell_count())
        out.exit_code = exit_integration_failure;
    else if (rejected)
        out.exit_code = exit_rejected;
    else
        out.exit_code = exit_ok;
    rep["exit_code"] = out.exit_code;
    rep["report_hash"] = report_content_hash(rep);
    return out;
}

std::string report_content_hash(const json& report)
{
    json copy = report;
    copy.erase("timings_ms");
    copy.erase("report_hash");
    return sha256_hex(copy.dump());
}

void write_outputs(const AnalysisConfig& cfg, const AnalysisOutput& out)
{
    namespace fs = std::filesystem;
    const fs::path dir(cfg.outputs.dir);
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& data) {
        if (name.empty())
            return;
        std::ofstream os(dir / name, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot write " + (dir / name).string());
        os << data;
    };
    write(cfg.outputs.report, out.report.dump(2) + "\n");
    write(cfg.outputs.dot, out.dot);
    write(cfg.outputs.svg, out.svg);
    write(cfg.outputs.cache, out.cache);
}

} // namespace morsescope
