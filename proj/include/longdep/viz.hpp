#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longdep/lds.hpp"

namespace longdep {

enum class ColorScale { linear, diverging };
enum class HeatmapValue { dst, lds_pair };

ColorScale color_scale_from_string(std::string_view s);
HeatmapValue heatmap_value_from_string(std::string_view s);
std::string_view to_string(HeatmapValue v);

using Rgb = std::array<std::uint8_t, 3>;

/// Reserved colour for masked cells (upper triangle, diagonal, unsampled
/// pairs). Lies on neither the grey ramp nor the blue-white-red ramp.
inline constexpr Rgb kMaskColor{255, 0, 255};

/// N x N lower-triangular matrix; rows are targets i, columns contexts j (1-based).
class HeatmapMatrix {
public:
    HeatmapMatrix(std::string doc_id, std::size_t n);

    static HeatmapMatrix from_pairs(std::string doc_id, std::size_t n, std::span<const PairScore> pairs,
                                    HeatmapValue value = HeatmapValue::dst);

    std::size_t size() const noexcept { return n_; }
    const std::string& doc_id() const noexcept { return doc_id_; }
    void set(std::size_t i, std::size_t j, double v);
    std::optional<double> at(std::size_t i, std::size_t j) const;
    std::size_t defined_cells() const;

private:
    std::string doc_id_;
    std::size_t n_;
    std::vector<double> values_;
    std::vector<char> defined_;
};

struct HeatmapSpec {
    ColorScale scale = ColorScale::linear;
    HeatmapValue value = HeatmapValue::dst;
    std::size_t cell_size = 1;  // integer upscale factor
};

struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    Rgb pixel(std::size_t x, std::size_t y) const;
};

/// Linear min-max per document (grey, brighter = larger) or signed diverging
/// (blue < 0 < red, 0 maps to white).
Raster render_heatmap(const HeatmapMatrix& m, const HeatmapSpec& spec);

/// CSV with header "i,j,<value>", one row per defined cell in (i, j) order,
/// values printed with round-trip precision.
std::string heatmap_csv(const HeatmapMatrix& m, HeatmapValue value = HeatmapValue::dst);
std::vector<PairScore> parse_heatmap_csv(std::string_view csv);

/// Binary PPM (P6).
void write_ppm(const Raster& r, const std::filesystem::path& path);
Raster read_ppm(const std::filesystem::path& path);

struct SidecarEntry {
    std::string doc_id;
    std::string mode;
    std::size_t n_segments = 0;
    std::vector<PairScore> pairs;
};

/// Reads the pair sidecar and returns the entry for `doc_id` (first entry
/// when empty). Throws ConfigError when absent.
SidecarEntry read_sidecar(const std::filesystem::path& path, std::string_view doc_id = {});

}  // namespace longdep
