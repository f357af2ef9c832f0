#include "morsescope/enclosure.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <thread>

namespace morsescope {

StepStrategy StepStrategy::fixed(double h)
{
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("fixed step h must be positive");
    StepStrategy s;
    s.kind_ = Kind::fixed;
    s.h_ = h;
    return s;
}

StepStrategy StepStrategy::adaptive(double D, double delta)
{
    if (!(D > 1.0) || !std::isfinite(D))
        throw std::invalid_argument("adaptive D must exceed 1");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("adaptive delta must be positive");
    StepStrategy s;
    s.kind_ = Kind::adaptive;
    s.D_ = D;
    s.delta_ = delta;
    return s;
}

StepStrategy StepStrategy::variable()
{
    StepStrategy s;
    s.kind_ = Kind::variable;
    return s;
}

std::string to_string(const StepStrategy& s)
{
    std::ostringstream os;
    os.precision(17);
    if (s.is_fixed())
        os << "fixed(h=" << s.h() << ")";
    else if (s.kind() == StepStrategy::Kind::adaptive)
        os << "adaptive(D=" << s.D() << ", delta=" << s.delta() << ")";
    else
        os << "variable";
    return os.str();
}

Interval tau_interval(const VectorField& f, const IvBox& box, double diag, const StepStrategy& st)
{
    if (st.is_fixed())
        return Interval(st.h());
    if (st.kind() != StepStrategy::Kind::adaptive)
        throw std::invalid_argument("variable step strategy has no tau formula");
    const IvBox v = f.eval(box);
    const Interval denom = norm2(v) + Interval(st.delta());
    return Interval(st.D()) * Interval(diag) / denom;
}

Interval tau_interval(const VectorField& f, const Grid& g, CellIndex cell, const StepStrategy& st)
{
    if (st.is_fixed())
        return Interval(st.h());
    return tau_interval(f, g.cell_box(cell), g.diagonal_norm(), st);
}

// ---------------------------------------------------------------------------

CellMap::CellMap(Grid grid, StepStrategy strategy, IntegratorConfig integrator, std::string field)
    : grid_(std::move(grid)), strategy_(strategy), integrator_(integrator), field_(std::move(field))
{
}

void CellMap::push(std::uint8_t flags, FailureReason reason, const Interval& tau, std::span<const CellIndex> image)
{
    if (complete())
        throw std::logic_error("cell map is already complete");
    flags_.push_back(flags);
    reasons_.push_back(reason);
    tau_.push_back(tau);
    if (!(flags & cell_failed))
        targets_.insert(targets_.end(), image.begin(), image.end());
    offsets_.push_back(targets_.size());
}

CellSet CellMap::image(CellIndex c) const
{
    if (failed(c)) {
        CellSet all(cell_count());
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = static_cast<CellIndex>(i);
        return all;
    }
    auto t = targets(c);
    return CellSet(t.begin(), t.end());
}

bool CellMap::image_contains(CellIndex c, CellIndex target) const
{
    if (failed(c))
        return target < cell_count();
    auto t = targets(c);
    return std::binary_search(t.begin(), t.end(), target);
}

std::size_t CellMap::failed_count() const
{
    return static_cast<std::size_t>(
        std::count_if(flags_.begin(), flags_.end(), [](std::uint8_t f) { return f & cell_failed; }));
}

bool operator==(const CellMap& a, const CellMap& b)
{
    return a.grid_ == b.grid_ && a.strategy_ == b.strategy_ && a.integrator_ == b.integrator_ &&
           a.field_ == b.field_ && a.offsets_ == b.offsets_ && a.targets_ == b.targets_ && a.flags_ == b.flags_ &&
           a.reasons_ == b.reasons_ && a.tau_ == b.tau_;
}

// ---------------------------------------------------------------------------

int resolve_workers(int requested)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("MORSESCOPE_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct CellResult {
    std::uint8_t flags = cell_ok;
    FailureReason reason = FailureReason::none;
    Interval tau;
};

// Results of a contiguous block of cells, kept in cell order.
struct Chunk {
    std::vector<CellResult> cells;
    std::vector<std::uint32_t> map_len, tube_len;
    std::vector<std::uint8_t> tube_flags;
    std::vector<CellIndex> map_targets, tube_targets;
};

constexpr std::size_t chunk_size = 512;

void compute_chunk(const Integrator& integ, const Grid& g, const StepStrategy& st, bool want_map, bool want_tube,
                   std::size_t begin, std::size_t end, Chunk& out)
{
    const VectorField& f = integ.field();
    const double diag = g.diagonal_norm();
    CellSet tube;
    for (std::size_t c = begin; c < end; ++c) {
        const IvBox box = g.cell_box(static_cast<CellIndex>(c));
        CellResult r;
        r.tau = tau_interval(f, box, diag, st);
        FlowEnclosure e = integ.flow_endpoint(box, r.tau);
        std::uint8_t tube_flag = cell_ok;
        std::uint32_t map_n = 0, tube_n = 0;
        if (!e.ok()) {
            r.flags = cell_failed;
            r.reason = e.failure;
            tube_flag = cell_failed;
        } else {
            if (want_map) {
                Cover cv = g.cover(e.endpoint);
                if (cv.exits_domain)
                    r.flags |= cell_exits;
                map_n = static_cast<std::uint32_t>(cv.cells.size());
                out.map_targets.insert(out.map_targets.end(), cv.cells.begin(), cv.cells.end());
            }
            if (want_tube) {
                tube.clear();
                for (const IvBox& seg : e.tube) {
                    Cover cv = g.cover(seg);
                    if (cv.exits_domain)
                        tube_flag |= cell_exits;
                    tube.insert(tube.end(), cv.cells.begin(), cv.cells.end());
                }
                normalize(tube);
                tube_n = static_cast<std::uint32_t>(tube.size());
                out.tube_targets.insert(out.tube_targets.end(), tube.begin(), tube.end());
            }
        }
        out.cells.push_back(r);
        out.map_len.push_back(map_n);
        out.tube_len.push_back(tube_n);
        out.tube_flags.push_back(tube_flag);
    }
}

MapPair build_impl(const VectorField& f, const Grid& g, const StepStrategy& st, const IntegratorConfig& cfg,
                   BuildOptions opt, bool want_map, bool want_tube)
{
    if (f.dim() != g.dim())
        throw std::invalid_argument("vector field and grid dimensions differ");
    const Integrator integ(f, cfg);
    const std::size_t n = g.cell_count();
    const std::size_t nchunks = (n + chunk_size - 1) / chunk_size;
    std::vector<Chunk> chunks(nchunks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= nchunks)
                return;
            compute_chunk(integ, g, st, want_map, want_tube, k * chunk_size, std::min(n, (k + 1) * chunk_size),
                          chunks[k]);
        }
    };
    const int workers = std::min<int>(resolve_workers(opt.workers), static_cast<int>(std::max<std::size_t>(nchunks, 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < workers; ++i)
            pool.emplace_back(worker);
    }

    const std::string desc = f.describe();
    MapPair out{CombinatorialMap(g, st, cfg, desc), TubeMap(g, st, cfg, desc)};
    for (auto& ch : chunks) {
        std::size_t mo = 0, to = 0;
        for (std::size_t i = 0; i < ch.cells.size(); ++i) {
            const CellResult& r = ch.cells[i];
            if (want_map)
                out.map.push(r.flags, r.reason, r.tau, {ch.map_targets.data() + mo, ch.map_len[i]});
            if (want_tube)
                out.tubes.push(ch.tube_flags[i], r.reason, r.tau, {ch.tube_targets.data() + to, ch.tube_len[i]});
            mo += ch.map_len[i];
            to += ch.tube_len[i];
        }
        ch = Chunk{};
    }
    return out;
}

} // namespace

CombinatorialMap build_map(const VectorField& f, const Grid& g, const StepStrategy& st, const IntegratorConfig& cfg,
                           BuildOptions opt)
{
    return std::move(build_impl(f, g, st, cfg, opt, true, false).map);
}

TubeMap build_tube_map(const VectorField& f, const Grid& g, const StepStrategy& st, const IntegratorConfig& cfg,
                       BuildOptions opt)
{
    return std::move(build_impl(f, g, st, cfg, opt, false, true).tubes);
}

MapPair build_maps(const VectorField& f, const Grid& g, const StepStrategy& st, const IntegratorConfig& cfg,
                   BuildOptions opt)
{
    return build_impl(f, g, st, cfg, opt, true, true);
}

// ---------------------------------------------------------------------------
// Binary cache

namespace {

constexpr char magic[8] = {'M', 'S', 'C', 'M', 'A', 'P', '0', '1'};
constexpr std::uint32_t format_version = 1;

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

template <class T>
void put(std::string& s, T v)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    s.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    template <class T>
    T get()
    {
        if (pos_ + sizeof(T) > s_.size())
            throw FormatError("map cache truncated");
        T v;
        std::memcpy(&v, s_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string bytes(std::size_t n)
    {
        if (pos_ + n > s_.size())
            throw FormatError("map cache truncated");
        std::string r = s_.substr(pos_, n);
        pos_ += n;
        return r;
    }
    bool done() const { return pos_ == s_.size(); }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

nlohmann::json header_json(const CellMap& m, const std::string& kind)
{
    using nlohmann::json;
    json h;
    h["kind"] = kind;
    h["dimension"] = m.grid().dim();
    json dom = json::array();
    for (const auto& iv : m.grid().domain())
        dom.push_back({iv.lo, iv.hi});
    h["domain"] = dom;
    h["divisions"] = m.grid().divisions();
    const StepStrategy& st = m.strategy();
    if (st.is_fixed())
        h["strategy"] = {{"kind", "fixed"}, {"h", st.h()}};
    else if (st.kind() == StepStrategy::Kind::adaptive)
        h["strategy"] = {{"kind", "adaptive"}, {"D", st.D()}, {"delta", st.delta()}};
    else
        h["strategy"] = {{"kind", "variable"}};
    const IntegratorConfig& c = m.integrator();
    h["integrator"] = {{"taylor_order", c.taylor_order},
                       {"max_substeps", c.max_substeps},
                       {"inflation", c.inflation},
                       {"max_picard_iters", c.max_picard_iters},
                       {"remainder_rel_tol", c.remainder_rel_tol},
                       {"remainder_abs_tol", c.remainder_abs_tol},
                       {"blowup_norm", c.blowup_norm}};
    h["field"] = m.field();
    return h;
}

} // namespace

std::string serialize(const CellMap& m, const std::string& kind)
{
    if (!m.complete())
        throw std::logic_error("cannot serialize an incomplete cell map");
    std::string out(magic, sizeof(magic));
    put<std::uint32_t>(out, format_version);
    const std::string header = header_json(m, kind).dump();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    put<std::uint64_t>(out, m.cell_count());
    for (CellIndex c = 0; c < m.cell_count(); ++c) {
        put<std::uint8_t>(out, m.flags(c));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(m.failure(c)));
        put<double>(out, m.tau(c).lo);
        put<double>(out, m.tau(c).hi);
        auto t = m.targets(c);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
        for (CellIndex x : t)
            put<std::uint32_t>(out, x);
    }
    return out;
}

CellMap deserialize(const std::string& bytes, std::string* kind)
{
    Reader r(bytes);
    if (r.bytes(sizeof(magic)) != std::string(magic, sizeof(magic)))
        throw FormatError("not a map cache (bad magic)");
    const auto version = r.get<std::uint32_t>();
    if (version != format_version)
        throw FormatError("unsupported map cache version " + std::to_string(version));
    const auto hlen = r.get<std::uint32_t>();
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(r.bytes(hlen));
        if (kind)
            *kind = h.at("kind").get<std::string>();
        IvBox dom;
        for (const auto& iv : h.at("domain"))
            dom.push_back(Interval(iv.at(0).get<double>(), iv.at(1).get<double>()));
        Grid g(dom, h.at("divisions").get<std::vector<int>>());
        const auto& sj = h.at("strategy");
        const std::string sk = sj.at("kind").get<std::string>();
        const StepStrategy st = sk == "fixed"      ? StepStrategy::fixed(sj.at("h").get<double>())
                                : sk == "adaptive" ? StepStrategy::adaptive(sj.at("D").get<double>(),
                                                                            sj.at("delta").get<double>())
                                                   : StepStrategy::variable();
        const auto& ij = h.at("integrator");
        IntegratorConfig cfg;
        cfg.taylor_order = ij.at("taylor_order");
        cfg.max_substeps = ij.at("max_substeps");
        cfg.inflation = ij.at("inflation");
        cfg.max_picard_iters = ij.at("max_picard_iters");
        cfg.remainder_rel_tol = ij.at("remainder_rel_tol");
        cfg.remainder_abs_tol = ij.at("remainder_abs_tol");
        cfg.blowup_norm = ij.at("blowup_norm");
        CellMap m(std::move(g), st, cfg, h.at("field").get<std::string>());
        const auto n = r.get<std::uint64_t>();
        if (n != m.grid().cell_count())
            throw FormatError("map cache cell count does not match its grid");
        std::vector<CellIndex> image;
        for (std::uint64_t c = 0; c < n; ++c) {
            const auto flags = r.get<std::uint8_t>();
            if (flags & ~static_cast<std::uint8_t>(cell_failed | cell_exits))
                throw FormatError("map cache has invalid cell flags");
            const auto reason = r.get<std::uint8_t>();
            if (reason > static_cast<std::uint8_t>(FailureReason::unbounded_interval))
                throw FormatError("map cache has an invalid failure code");
            const double lo = r.get<double>();
            const double hi = r.get<double>();
            const auto count = r.get<std::uint32_t>();
            image.resize(count);
            for (auto& x : image) {
                x = r.get<std::uint32_t>();
                if (x >= n)
                    throw FormatError("map cache image index out of range");
            }
            if (std::adjacent_find(image.begin(), image.end(), std::greater_equal<>()) != image.end())
                throw FormatError("map cache image is not sorted");
            m.push(flags, static_cast<FailureReason>(reason), Interval(lo, hi), image);
        }
        if (!r.done())
            throw FormatError("trailing bytes in map cache");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad map cache header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad map cache header: ") + e.what());
    }
}

std::string map_hash(const CellMap& m) { return sha256_hex(serialize(m, "map")); }

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    static const char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

void write_cache(const std::string& path, const CellMap& m, const std::string& kind)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    const std::string bytes = serialize(m, kind);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os)
        throw std::runtime_error("failed writing " + path);
}

CellMap read_cache(const std::string& path, std::string* kind)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return deserialize(bytes, kind);
}

} // namespace morsescope
