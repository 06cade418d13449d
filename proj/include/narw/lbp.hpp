#pragma once

// Circular (P, R) local binary patterns over a spectrogram, the u2 uniform-pattern
// reduction and regional histogram features.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "narw/grid.hpp"
#include "narw/spectrogram.hpp"

namespace narw {

struct LBPConfig {
    int points = 8;
    double radius = 1.0;
    bool uniform_u2 = true;
    int regions_t = 2;
    int regions_f = 2;
    bool normalize_histograms = true;
};

inline constexpr int kMaxLbpPoints = 20;

inline void validate(const LBPConfig& cfg) {
    if (cfg.points < 4 || cfg.points > kMaxLbpPoints)
        throw std::invalid_argument("lbp: points must lie in [4, " + std::to_string(kMaxLbpPoints) + "]");
    if (!(cfg.radius >= 1.0)) throw std::invalid_argument("lbp: radius must be >= 1");
    if (cfg.regions_t < 1 || cfg.regions_f < 1) throw std::invalid_argument("lbp: region counts must be positive");
}

inline int lbp_border(const LBPConfig& cfg) { return static_cast<int>(std::ceil(cfg.radius - 1e-12)); }

/// Number of 0/1 changes around the circular P-bit sequence of `code`.
inline int transition_count(std::uint32_t code, int points) {
    if (points < 1 || points > 31) throw std::invalid_argument("transition_count: bad bit count");
    const std::uint32_t mask = (1u << points) - 1u;
    code &= mask;
    const std::uint32_t rotated = ((code >> 1) | (code << (points - 1))) & mask;
    return std::popcount(code ^ rotated);
}

struct UniformTable {
    int points = 8;
    std::vector<int> bin_of;  // indexed by raw code
    int bin_count = 0;

    int nonuniform_bin() const { return bin_count - 1; }
};

/// Codes with at most two circular transitions get distinct bins in increasing code
/// order; all other codes share the last bin.
inline UniformTable build_u2_table(int points) {
    if (points < 4 || points > kMaxLbpPoints) throw std::invalid_argument("build_u2_table: unsupported point count");
    UniformTable table;
    table.points = points;
    const std::uint32_t codes = 1u << points;
    table.bin_of.assign(codes, -1);
    int next = 0;
    for (std::uint32_t c = 0; c < codes; ++c)
        if (transition_count(c, points) <= 2) table.bin_of[c] = next++;
    for (int& b : table.bin_of)
        if (b < 0) b = next;
    table.bin_count = next + 1;
    return table;
}

namespace detail {

struct SamplePoint {
    double dt, df;
};

inline std::vector<SamplePoint> lbp_offsets(const LBPConfig& cfg) {
    std::vector<SamplePoint> pts(static_cast<std::size_t>(cfg.points));
    for (int p = 0; p < cfg.points; ++p) {
        const double a = 2 * std::numbers::pi * p / cfg.points;
        double dt = cfg.radius * std::cos(a), df = cfg.radius * std::sin(a);
        // Snap to the grid so axis-aligned neighbours are read directly.
        if (std::abs(dt - std::round(dt)) < 1e-9) dt = std::round(dt);
        if (std::abs(df - std::round(df)) < 1e-9) df = std::round(df);
        pts[static_cast<std::size_t>(p)] = {dt, df};
    }
    return pts;
}

inline double bilinear(const Grid<double>& img, double t, double f) {
    const double t0 = std::floor(t), f0 = std::floor(f);
    const double wt = t - t0, wf = f - f0;
    const auto r0 = static_cast<std::size_t>(t0), c0 = static_cast<std::size_t>(f0);
    const std::size_t r1 = wt > 0 ? r0 + 1 : r0, c1 = wf > 0 ? c0 + 1 : c0;
    // Nested lerps reproduce a flat neighbourhood exactly, so ties stay ties.
    const double near_t = img(r0, c0) + wf * (img(r0, c1) - img(r0, c0));
    const double far_t = img(r1, c0) + wf * (img(r1, c1) - img(r1, c0));
    return near_t + wt * (far_t - near_t);
}

inline std::uint32_t label_at(const Grid<double>& img, std::size_t t, std::size_t f, const std::vector<SamplePoint>& pts) {
    const double centre = img(t, f);
    std::uint32_t code = 0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const double v = bilinear(img, static_cast<double>(t) + pts[p].dt, static_cast<double>(f) + pts[p].df);
        if (v > centre) code |= 1u << p;
    }
    return code;
}

}  // namespace detail

/// Raw code at (t, f). Bit p (the 2^p place) compares the neighbour at angle 2*pi*p/P,
/// counter-clockwise from the +time axis, against the centre with a strict `>`.
inline std::uint32_t lbp_label(const Grid<double>& image, int t, int f, const LBPConfig& cfg) {
    validate(cfg);
    const int b = lbp_border(cfg);
    if (t < b || f < b || t + b >= static_cast<int>(image.rows()) || f + b >= static_cast<int>(image.cols()))
        throw std::invalid_argument("lbp_label: position closer than ceil(R) to the border");
    return detail::label_at(image, static_cast<std::size_t>(t), static_cast<std::size_t>(f), detail::lbp_offsets(cfg));
}

/// Labels of all interior cells; a border of ceil(R) cells is excluded.
struct LBPImage {
    Grid<int> labels;
    int bin_count = 0;  // 2^P raw, or the u2 bin count when mapped
    bool mapped = false;
    int border = 1;
};

inline LBPImage lbp_image(const Spectrogram& spec, const LBPConfig& cfg, const UniformTable* table = nullptr) {
    validate(cfg);
    const int b = lbp_border(cfg);
    const std::size_t need = static_cast<std::size_t>(2 * b + 1);
    if (spec.frames() <= need || spec.bins() <= need) throw std::invalid_argument("lbp_image: spectrogram too small");

    UniformTable own;
    if (cfg.uniform_u2 && (table == nullptr || table->points != cfg.points)) {
        own = build_u2_table(cfg.points);
        table = &own;
    }
    const auto pts = detail::lbp_offsets(cfg);
    LBPImage out;
    out.border = b;
    out.mapped = cfg.uniform_u2;
    out.bin_count = cfg.uniform_u2 ? table->bin_count : (1 << cfg.points);
    out.labels = Grid<int>(spec.frames() - 2 * static_cast<std::size_t>(b), spec.bins() - 2 * static_cast<std::size_t>(b));
    for (std::size_t t = 0; t < out.labels.rows(); ++t)
        for (std::size_t f = 0; f < out.labels.cols(); ++f) {
            const auto code = detail::label_at(spec.values, t + static_cast<std::size_t>(b), f + static_cast<std::size_t>(b), pts);
            out.labels(t, f) = cfg.uniform_u2 ? table->bin_of[code] : static_cast<int>(code);
        }
    return out;
}

/// Share of labels that are uniform patterns.
inline double uniform_fraction(const LBPImage& img, int points) {
    if (img.labels.empty()) return 0.0;
    std::size_t uniform = 0;
    for (int v : img.labels.data()) {
        const bool u = img.mapped ? v != img.bin_count - 1 : transition_count(static_cast<std::uint32_t>(v), points) <= 2;
        uniform += u ? 1 : 0;
    }
    return static_cast<double>(uniform) / static_cast<double>(img.labels.size());
}

/// Concatenated regional histograms, regions in row-major (t, f) order.
using LBPFeature = std::vector<double>;

inline std::size_t lbp_feature_length(const LBPConfig& cfg) {
    const std::size_t bins = cfg.uniform_u2 ? static_cast<std::size_t>(cfg.points) * (cfg.points - 1) + 3 : (1u << cfg.points);
    return static_cast<std::size_t>(cfg.regions_t) * static_cast<std::size_t>(cfg.regions_f) * bins;
}

/// Region k along an axis of length n split into m parts covers [k*(n/m), (k+1)*(n/m)),
/// with the remainder assigned to the last region.
inline LBPFeature regional_histograms(const LBPImage& img, const LBPConfig& cfg) {
    const std::size_t rows = img.labels.rows(), cols = img.labels.cols();
    const auto mt = static_cast<std::size_t>(cfg.regions_t), mf = static_cast<std::size_t>(cfg.regions_f);
    if (mt == 0 || mf == 0 || mt > rows || mf > cols) throw std::invalid_argument("regional_histograms: more regions than labeled pixels");
    const std::size_t bins = static_cast<std::size_t>(img.bin_count);
    const std::size_t st = rows / mt, sf = cols / mf;
    LBPFeature out(mt * mf * bins, 0.0);
    for (std::size_t t = 0; t < rows; ++t) {
        const std::size_t rt = std::min(t / st, mt - 1);
        for (std::size_t f = 0; f < cols; ++f) {
            const std::size_t rf = std::min(f / sf, mf - 1);
            out[(rt * mf + rf) * bins + static_cast<std::size_t>(img.labels(t, f))] += 1.0;
        }
    }
    if (cfg.normalize_histograms)
        for (std::size_t j = 0; j < mt * mf; ++j) {
            double total = 0;
            for (std::size_t i = 0; i < bins; ++i) total += out[j * bins + i];
            if (total > 0)
                for (std::size_t i = 0; i < bins; ++i) out[j * bins + i] /= total;
        }
    return out;
}

}  // namespace narw
