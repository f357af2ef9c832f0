#include "morsescope/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace morsescope {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 12> palette = {"#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4",
                                                 "#f032e6", "#bfef45", "#469990", "#9a6324", "#800000", "#808000"};

std::string darken(const std::string& hex)
{
    unsigned r = 0, g = 0, b = 0;
    std::sscanf(hex.c_str() + 1, "%02x%02x%02x", &r, &g, &b);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = "#";
    for (unsigned v : {r, g, b}) {
        v = (v & 0xffu) * 11 / 20;
        out += digits[v >> 4];
        out += digits[v & 0xfu];
    }
    return out;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace

std::string render_svg(const json& report)
{
    if (!report.contains("grid") || !report["grid"].contains("domain") || !report["grid"].contains("divisions"))
        throw MissingArtifact("report has no grid description");
    const json& dom = report["grid"]["domain"];
    const json& div = report["grid"]["divisions"];

    constexpr double size = 720.0, margin = 60.0;
    const double total = size + 2 * margin;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total << "\" height=\"" << total
       << "\" viewBox=\"0 0 " << total << " " << total << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << total << "\" height=\"" << total << "\" fill=\"white\"/>\n";

    const bool planar = dom.size() == 2 && div.size() == 2;
    if (planar) {
        const double x0 = dom[0][0], x1 = dom[0][1], y0 = dom[1][0], y1 = dom[1][1];
        const int kx = div[0], ky = div[1];
        const double cw = size / kx, ch = size / ky;
        auto cell_rect = [&](std::uint64_t c, const std::string& color) {
            const std::uint64_t mx = c / static_cast<std::uint64_t>(ky);
            const std::uint64_t my = c % static_cast<std::uint64_t>(ky);
            const double px = margin + static_cast<double>(mx) * cw;
            const double py = margin + size - static_cast<double>(my + 1) * ch;
            os << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\"" << fmt(cw) << "\" height=\""
               << fmt(ch) << "\" fill=\"" << color << "\"/>\n";
        };

        const json* sets = nullptr;
        if (report.contains("morse") && report["morse"].contains("sets"))
            sets = &report["morse"]["sets"];
        // Without cell lists only the frame is drawn.
        if (sets && std::any_of(sets->begin(), sets->end(), [](const json& s) { return !s.contains("cells"); }))
            sets = nullptr;

        // Collars Z(p) \ N(p) from criterion B, drawn beneath the sets.
        const json& ver = report.contains("verification") ? report["verification"] : json();
        if (sets && ver.is_object() && ver.contains("sets")) {
            for (const auto& v : ver["sets"]) {
                if (!v.contains("z_cells"))
                    continue;
                const int id = v["id"];
                const auto& own = (*sets)[id - 1]["cells"];
                std::vector<std::uint64_t> mine = own.get<std::vector<std::uint64_t>>();
                const std::string color = darken(palette[(id - 1) % palette.size()]);
                for (const auto& zc : v["z_cells"]) {
                    const std::uint64_t c = zc;
                    if (!std::binary_search(mine.begin(), mine.end(), c))
                        cell_rect(c, color);
                }
            }
        }
        if (sets)
            for (const auto& s : *sets) {
                const int id = s["id"];
                for (const auto& c : s["cells"])
                    cell_rect(c.get<std::uint64_t>(), palette[(id - 1) % palette.size()]);
            }

        // Frame, ticks and labels.
        for (int t = 0; t <= 4; ++t) {
            const double f = t / 4.0;
            const double px = margin + f * size, py = margin + size - f * size;
            os << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(margin + size) << "\" x2=\"" << fmt(px) << "\" y2=\""
               << fmt(margin + size + 6) << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(margin + size + 22)
               << "\" font-size=\"13\" text-anchor=\"middle\">" << label(x0 + f * (x1 - x0)) << "</text>\n";
            os << "<line x1=\"" << fmt(margin - 6) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(margin) << "\" y2=\""
               << fmt(py) << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << fmt(margin - 10) << "\" y=\"" << fmt(py + 4)
               << "\" font-size=\"13\" text-anchor=\"end\">" << label(y0 + f * (y1 - y0)) << "</text>\n";
        }
        os << "<text x=\"" << fmt(margin + size / 2) << "\" y=\"" << fmt(total - 10)
           << "\" font-size=\"14\" text-anchor=\"middle\">x1</text>\n";
        os << "<text x=\"16\" y=\"" << fmt(margin + size / 2) << "\" font-size=\"14\">x2</text>\n";
    }
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace morsescope
