#include "longdep/viz.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "longdep/errors.hpp"

namespace longdep {

ColorScale color_scale_from_string(std::string_view s) {
    if (s == "linear") return ColorScale::linear;
    if (s == "diverging" || s == "signed-diverging") return ColorScale::diverging;
    throw ConfigError("unknown color scale '" + std::string(s) + "' (expected linear|diverging)");
}

HeatmapValue heatmap_value_from_string(std::string_view s) {
    if (s == "dst") return HeatmapValue::dst;
    if (s == "lds" || s == "lds_pair") return HeatmapValue::lds_pair;
    throw ConfigError("unknown heatmap value '" + std::string(s) + "' (expected dst|lds_pair)");
}

std::string_view to_string(HeatmapValue v) { return v == HeatmapValue::dst ? "dst" : "lds_pair"; }

HeatmapMatrix::HeatmapMatrix(std::string doc_id, std::size_t n)
    : doc_id_(std::move(doc_id)), n_(n), values_(n * n, 0.0), defined_(n * n, 0) {}

HeatmapMatrix HeatmapMatrix::from_pairs(std::string doc_id, std::size_t n, std::span<const PairScore> pairs,
                                        HeatmapValue value) {
    if (pairs.empty()) throw ConfigError("heatmap: empty pair list");
    HeatmapMatrix m(std::move(doc_id), n);
    for (const auto& p : pairs) m.set(p.i, p.j, value == HeatmapValue::dst ? p.dst : p.lds_pair);
    return m;
}

void HeatmapMatrix::set(std::size_t i, std::size_t j, double v) {
    if (j < 1 || j >= i || i > n_) throw ConfigError("heatmap: cell (" + std::to_string(i) + "," + std::to_string(j) +
                                                     ") outside the strict lower triangle");
    const std::size_t k = (i - 1) * n_ + (j - 1);
    values_[k] = v;
    defined_[k] = 1;
}

std::optional<double> HeatmapMatrix::at(std::size_t i, std::size_t j) const {
    if (i < 1 || j < 1 || i > n_ || j > n_) return std::nullopt;
    const std::size_t k = (i - 1) * n_ + (j - 1);
    if (!defined_[k]) return std::nullopt;
    return values_[k];
}

std::size_t HeatmapMatrix::defined_cells() const {
    return static_cast<std::size_t>(std::count(defined_.begin(), defined_.end(), 1));
}

Rgb Raster::pixel(std::size_t x, std::size_t y) const {
    const std::size_t k = (y * width + x) * 3;
    return {rgb[k], rgb[k + 1], rgb[k + 2]};
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Raster render_heatmap(const HeatmapMatrix& m, const HeatmapSpec& spec) {
    if (spec.cell_size == 0) throw ConfigError("heatmap: cell size must be >= 1");
    const std::size_t n = m.size();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, abs_max = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j < i; ++j)
            if (auto v = m.at(i, j)) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
                abs_max = std::max(abs_max, std::abs(*v));
            }

    auto color = [&](double v) -> Rgb {
        if (spec.scale == ColorScale::linear) {
            // A constant matrix renders at full brightness.
            const double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;
            const auto g = to_byte(t);
            return {g, g, g};
        }
        const double t = abs_max > 0.0 ? v / abs_max : 0.0;
        if (t < 0.0) {
            const auto c = to_byte(1.0 + t);
            return {c, c, 255};
        }
        const auto c = to_byte(1.0 - t);
        return {255, c, c};
    };

    Raster r;
    r.width = r.height = n * spec.cell_size;
    r.rgb.resize(r.width * r.height * 3);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            const auto v = m.at(i, j);
            const Rgb c = v ? color(*v) : kMaskColor;
            for (std::size_t dy = 0; dy < spec.cell_size; ++dy) {
                const std::size_t y = (i - 1) * spec.cell_size + dy;
                for (std::size_t dx = 0; dx < spec.cell_size; ++dx) {
                    const std::size_t x = (j - 1) * spec.cell_size + dx;
                    std::copy(c.begin(), c.end(), r.rgb.begin() + static_cast<std::ptrdiff_t>((y * r.width + x) * 3));
                }
            }
        }
    }
    return r;
}

std::string heatmap_csv(const HeatmapMatrix& m, HeatmapValue value) {
    std::string out = "i,j,";
    out += to_string(value);
    out += "\n";
    char buf[64];
    for (std::size_t i = 1; i <= m.size(); ++i)
        for (std::size_t j = 1; j < i; ++j)
            if (auto v = m.at(i, j)) {
                std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", i, j, *v);
                out += buf;
            }
    return out;
}

std::vector<PairScore> parse_heatmap_csv(std::string_view csv) {
    std::vector<PairScore> out;
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line.rfind("i,j,", 0) != 0) throw ConfigError("heatmap CSV: missing i,j,<value> header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        PairScore p;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) throw ConfigError("heatmap CSV: malformed row");
        p.i = std::stoul(line.substr(0, c1));
        p.j = std::stoul(line.substr(c1 + 1, c2 - c1 - 1));
        p.dst = std::strtod(line.c_str() + c2 + 1, nullptr);
        out.push_back(p);
    }
    return out;
}

void write_ppm(const Raster& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "P6\n" << r.width << " " << r.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
    if (!out) throw ConfigError("error writing " + path.string());
}

Raster read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::string magic;
    int maxval = 0;
    Raster r;
    in >> magic >> r.width >> r.height >> maxval;
    if (magic != "P6" || maxval != 255) throw ConfigError(path.string() + ": not an 8-bit P6 image");
    in.get();
    r.rgb.resize(r.width * r.height * 3);
    in.read(reinterpret_cast<char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
    if (!in) throw ConfigError(path.string() + ": truncated image");
    return r;
}

SidecarEntry read_sidecar(const std::filesystem::path& path, std::string_view doc_id) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read pair sidecar " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ConfigError(path.string() + ": malformed sidecar line");
        const auto id = j.value("doc_id", "");
        if (!doc_id.empty() && id != doc_id) continue;
        SidecarEntry e;
        e.doc_id = id;
        e.mode = j.value("mode", "");
        e.n_segments = j.value("n_segments", std::size_t{0});
        for (const auto& row : j.at("pairs")) {
            PairScore p;
            p.i = row.at(0).get<std::size_t>();
            p.j = row.at(1).get<std::size_t>();
            p.delta_ppl = row.at(2).get<double>();
            p.dst = row.at(3).get<double>();
            p.ddi = row.at(4).get<double>();
            p.indicator = row.at(5).get<int>();
            p.lds_pair = row.at(6).get<double>();
            e.pairs.push_back(p);
        }
        return e;
    }
    throw ConfigError(doc_id.empty() ? path.string() + ": sidecar is empty"
                                     : path.string() + ": no sidecar entry for document '" + std::string(doc_id) + "'");
}

}  // namespace longdep
