#pragma once

// Contour branch: binarization, 8-connected labeling, Moore-neighbour boundary
// tracing with Jacob's stopping criterion, blob filtering/merging and the
// seven-component TFP-2 feature vector.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <iterator>
#include <limits>
#include <tuple>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "narw/grid.hpp"
#include "narw/spectrogram.hpp"

namespace narw {

/// A spectrogram cell: t is the frame (row), i the bin (column).
struct Cell {
    int t = 0;
    int i = 0;
    auto operator<=>(const Cell&) const = default;
};

struct BinaryImage {
    Grid<std::uint8_t> bits;
    AxisCalibration axes;

    bool on(int t, int i) const {
        return t >= 0 && i >= 0 && static_cast<std::size_t>(t) < bits.rows() && static_cast<std::size_t>(i) < bits.cols() &&
               bits(static_cast<std::size_t>(t), static_cast<std::size_t>(i)) != 0;
    }
};

inline BinaryImage binarize(const Spectrogram& spec, double threshold) {
    BinaryImage img{Grid<std::uint8_t>(spec.frames(), spec.bins()), spec.axes()};
    for (std::size_t k = 0; k < spec.values.size(); ++k) img.bits.data()[k] = spec.values.data()[k] > threshold ? 1 : 0;
    return img;
}

struct BoundingBox {
    int t_min = 0, t_max = -1, i_min = 0, i_max = -1;
    bool operator==(const BoundingBox&) const = default;
};

struct Blob {
    std::vector<Cell> pixels;    // sorted
    std::vector<Cell> boundary;  // closed clockwise tour, start pixel first
    BoundingBox bbox;
    AxisCalibration axes;
    double perimeter_px = 0;
    long area_px = 0;
    double min_freq_hz = 0, max_freq_hz = 0, height_hz = 0;
    double width_s = 0;
    double orientation_deg = 0;
};

namespace detail {

inline constexpr std::array<Cell, 8> kNeighbours{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

inline BoundingBox bbox_of(const std::vector<Cell>& pixels) {
    BoundingBox b{std::numeric_limits<int>::max(), std::numeric_limits<int>::min(), std::numeric_limits<int>::max(),
                  std::numeric_limits<int>::min()};
    for (const Cell& c : pixels) {
        b.t_min = std::min(b.t_min, c.t);
        b.t_max = std::max(b.t_max, c.t);
        b.i_min = std::min(b.i_min, c.i);
        b.i_max = std::max(b.i_max, c.i);
    }
    return b;
}

// 8-connected parts of an arbitrary mask, each sorted, ordered by (t_min, i_min).
inline std::vector<std::vector<Cell>> connected_parts(const Grid<std::uint8_t>& mask) {
    const int rows = static_cast<int>(mask.rows()), cols = static_cast<int>(mask.cols());
    Grid<int> seen(mask.rows(), mask.cols(), 0);
    std::vector<std::vector<Cell>> parts;
    std::vector<Cell> stack;
    for (int t = 0; t < rows; ++t)
        for (int i = 0; i < cols; ++i) {
            if (!mask(t, i) || seen(t, i)) continue;
            std::vector<Cell> part;
            stack.push_back({t, i});
            seen(t, i) = 1;
            while (!stack.empty()) {
                Cell c = stack.back();
                stack.pop_back();
                part.push_back(c);
                for (const Cell& d : kNeighbours) {
                    const int nt = c.t + d.t, ni = c.i + d.i;
                    if (nt < 0 || ni < 0 || nt >= rows || ni >= cols || !mask(nt, ni) || seen(nt, ni)) continue;
                    seen(nt, ni) = 1;
                    stack.push_back({nt, ni});
                }
            }
            std::sort(part.begin(), part.end());
            parts.push_back(std::move(part));
        }
    std::stable_sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
        const BoundingBox ba = bbox_of(a), bb = bbox_of(b);
        return std::pair(ba.t_min, ba.i_min) < std::pair(bb.t_min, bb.i_min);
    });
    return parts;
}

// Clockwise Moore directions with rows drawn downward: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::array<Cell, 8> kMooreClockwise{{{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

inline int direction_of(Cell from, Cell to) {
    const Cell d{to.t - from.t, to.i - from.i};
    for (int k = 0; k < 8; ++k)
        if (kMooreClockwise[k] == d) return k;
    throw std::logic_error("moore tracing: cells are not 8-adjacent");
}

// Outer boundary of one 8-connected pixel set. Returns the tour and the number of unit steps.
inline std::pair<std::vector<Cell>, std::size_t> moore_trace(const std::vector<Cell>& part) {
    const BoundingBox b = bbox_of(part);
    // Local mask with a one-cell background margin.
    const int rows = b.t_max - b.t_min + 3, cols = b.i_max - b.i_min + 3;
    Grid<std::uint8_t> mask(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), 0);
    for (const Cell& c : part) mask(c.t - b.t_min + 1, c.i - b.i_min + 1) = 1;
    auto on = [&](Cell c) { return mask(static_cast<std::size_t>(c.t), static_cast<std::size_t>(c.i)) != 0; };
    auto global = [&](Cell c) { return Cell{c.t + b.t_min - 1, c.i + b.i_min - 1}; };
    auto step = [](Cell c, int dir) { return Cell{c.t + kMooreClockwise[dir].t, c.i + kMooreClockwise[dir].i}; };

    const Cell start = {part.front().t - b.t_min + 1, part.front().i - b.i_min + 1};  // topmost, then leftmost
    const Cell start_backtrack = step(start, 6);                                     // west neighbour, background
    std::vector<Cell> tour{global(start)};
    std::size_t steps = 0;

    Cell p = start, backtrack = start_backtrack;
    // Thin shapes can re-enter the start from the east, so Jacob's state never recurs.
    // The tour is then closed once the first move would be repeated.
    std::optional<std::pair<Cell, Cell>> first_state;
    const std::size_t limit = 4 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) + 8;
    while (true) {
        const int from = direction_of(p, backtrack);
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int dir = (from + k) % 8;
            if (on(step(p, dir))) {
                found = dir;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        const Cell next = step(p, found);
        backtrack = step(p, (found + 7) % 8);
        p = next;
        ++steps;
        // Jacob's criterion: stop on re-entering the start pixel the way it was first entered.
        if (p == start && backtrack == start_backtrack) break;
        if (!first_state) {
            first_state.emplace(p, backtrack);
        } else if (p == first_state->first && backtrack == first_state->second && tour.back() == global(start)) {
            tour.pop_back();
            --steps;
            break;
        }
        tour.push_back(global(p));
        if (steps > limit) throw std::logic_error("moore tracing did not close");
    }
    return {std::move(tour), steps};
}

inline void trace_into(Blob& blob) {
    blob.boundary.clear();
    blob.perimeter_px = 0;
    if (blob.pixels.empty()) return;
    const BoundingBox b = blob.bbox;
    Grid<std::uint8_t> mask(static_cast<std::size_t>(b.t_max - b.t_min + 1), static_cast<std::size_t>(b.i_max - b.i_min + 1), 0);
    for (const Cell& c : blob.pixels) mask(c.t - b.t_min, c.i - b.i_min) = 1;
    for (auto& part : connected_parts(mask)) {
        for (Cell& c : part) c = {c.t + b.t_min, c.i + b.i_min};
        auto [tour, steps] = moore_trace(part);
        blob.boundary.insert(blob.boundary.end(), tour.begin(), tour.end());
        blob.perimeter_px += static_cast<double>(steps);
    }
}

// Principal-axis angle in degrees, (-90, 90], with t as abscissa and i as ordinate.
inline double orientation_deg(const std::vector<Cell>& pixels) {
    if (pixels.size() < 2) return 0.0;
    double mt = 0, mi = 0;
    for (const Cell& c : pixels) {
        mt += c.t;
        mi += c.i;
    }
    mt /= static_cast<double>(pixels.size());
    mi /= static_cast<double>(pixels.size());
    double mu20 = 0, mu02 = 0, mu11 = 0;
    for (const Cell& c : pixels) {
        const double dt = c.t - mt, di = c.i - mi;
        mu20 += dt * dt;
        mu02 += di * di;
        mu11 += dt * di;
    }
    constexpr double tiny = 1e-12;
    if (std::abs(mu11) < tiny && std::abs(mu20 - mu02) < tiny) return 0.0;
    double deg = 0.5 * std::atan2(2 * mu11, mu20 - mu02) * 180.0 / std::numbers::pi;
    if (deg <= -90.0) deg += 180.0;
    return deg;
}

}  // namespace detail

/// Recompute bbox, area, calibrated extents, orientation and traced boundary from `pixels`.
inline void compute_properties(Blob& blob) {
    std::sort(blob.pixels.begin(), blob.pixels.end());
    blob.area_px = static_cast<long>(blob.pixels.size());
    if (blob.pixels.empty()) {
        blob.bbox = {};
        blob.boundary.clear();
        blob.perimeter_px = blob.min_freq_hz = blob.max_freq_hz = blob.height_hz = blob.width_s = blob.orientation_deg = 0;
        return;
    }
    blob.bbox = detail::bbox_of(blob.pixels);
    blob.min_freq_hz = blob.axes.freq_hz(blob.bbox.i_min);
    blob.max_freq_hz = blob.axes.freq_hz(blob.bbox.i_max);
    blob.height_hz = blob.max_freq_hz - blob.min_freq_hz;
    blob.width_s = (blob.bbox.t_max - blob.bbox.t_min + 1) * blob.axes.frame_step_s;
    blob.orientation_deg = detail::orientation_deg(blob.pixels);
    detail::trace_into(blob);
}

inline Blob make_blob(std::vector<Cell> pixels, const AxisCalibration& axes) {
    Blob blob;
    blob.pixels = std::move(pixels);
    blob.axes = axes;
    compute_properties(blob);
    return blob;
}

/// Maximal 8-connected components ordered by (t_min, i_min), with all properties filled in.
inline std::vector<Blob> label_components(const BinaryImage& img) {
    std::vector<Blob> blobs;
    for (auto& part : detail::connected_parts(img.bits)) blobs.push_back(make_blob(std::move(part), img.axes));
    return blobs;
}

/// Clockwise exterior boundary of `blob`, starting at its topmost-then-leftmost pixel.
/// Pixels visited twice (one-pixel-wide spurs) appear twice, once per pass.
inline std::vector<Cell> trace_boundary(const BinaryImage& img, const Blob& blob) {
    if (blob.pixels.empty()) throw std::invalid_argument("trace_boundary: empty blob");
    for (const Cell& c : blob.pixels)
        if (!img.on(c.t, c.i)) throw std::invalid_argument("trace_boundary: blob pixel is off in the image");
    Blob copy = blob;
    copy.bbox = detail::bbox_of(copy.pixels);
    detail::trace_into(copy);
    return copy.boundary;
}

/// Default binarization level in post-equalization z-units.
inline constexpr double kDefaultBinarizeThreshold = 1.5;

struct MergePolicy {
    double min_width_s = 0.3;
    double max_width_s = 2.0;
    double min_height_hz = 40.0;
    double max_height_hz = 300.0;
    double max_time_gap_s = 0.2;
    double max_freq_gap_hz = 30.0;
};

inline void validate(const MergePolicy& p) {
    if (!(p.min_width_s < p.max_width_s) || !(p.min_height_hz < p.max_height_hz))
        throw std::invalid_argument("merge policy: minimum bounds must be below maximum bounds");
    if (!(p.max_time_gap_s >= 0) || !(p.max_freq_gap_hz >= 0)) throw std::invalid_argument("merge policy: gaps must be >= 0");
}

inline bool within_bounds(const Blob& b, const MergePolicy& p) {
    constexpr double tol = 1e-9;
    return b.width_s >= p.min_width_s - tol && b.width_s <= p.max_width_s + tol && b.height_hz >= p.min_height_hz - tol &&
           b.height_hz <= p.max_height_hz + tol;
}

inline std::vector<Blob> filter_blobs(const std::vector<Blob>& blobs, const MergePolicy& policy) {
    std::vector<Blob> kept;
    std::copy_if(blobs.begin(), blobs.end(), std::back_inserter(kept), [&](const Blob& b) { return within_bounds(b, policy); });
    return kept;
}

/// Empty frames (or bins) strictly between two closed intervals; 0 when they touch or overlap.
inline int interval_gap(int a_lo, int a_hi, int b_lo, int b_hi) { return std::max({0, b_lo - a_hi - 1, a_lo - b_hi - 1}); }

inline bool mergeable(const Blob& a, const Blob& b, const MergePolicy& p) {
    constexpr double tol = 1e-9;
    const double time_gap = interval_gap(a.bbox.t_min, a.bbox.t_max, b.bbox.t_min, b.bbox.t_max) * a.axes.frame_step_s;
    const double freq_gap = interval_gap(a.bbox.i_min, a.bbox.i_max, b.bbox.i_min, b.bbox.i_max) * a.axes.bin_step_hz;
    return time_gap <= p.max_time_gap_s + tol && freq_gap <= p.max_freq_gap_hz + tol;
}

/// Transitive merging on bounding-box gaps, repeated until no pair qualifies.
/// The result is sorted by (t_min, i_min) and independent of input order.
inline std::vector<Blob> merge_blobs(const std::vector<Blob>& blobs, const MergePolicy& policy) {
    std::vector<Blob> current = blobs;
    while (true) {
        const std::size_t n = current.size();
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        bool merged_any = false;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (mergeable(current[a], current[b], policy)) {
                    const std::size_t ra = find(a), rb = find(b);
                    if (ra != rb) {
                        parent[std::max(ra, rb)] = std::min(ra, rb);
                        merged_any = true;
                    }
                }
        if (!merged_any) break;
        std::vector<Blob> next;
        std::vector<std::ptrdiff_t> slot(n, -1);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t r = find(k);
            if (slot[r] < 0) {
                slot[r] = static_cast<std::ptrdiff_t>(next.size());
                next.push_back(Blob{});
                next.back().axes = current[k].axes;
            }
            auto& px = next[static_cast<std::size_t>(slot[r])].pixels;
            px.insert(px.end(), current[k].pixels.begin(), current[k].pixels.end());
        }
        for (Blob& b : next) compute_properties(b);
        current = std::move(next);
    }
    std::sort(current.begin(), current.end(), [](const Blob& a, const Blob& b) {
        return std::tuple(a.bbox.t_min, a.bbox.i_min, a.pixels.front()) < std::tuple(b.bbox.t_min, b.bbox.i_min, b.pixels.front());
    });
    return current;
}

enum class CandidateKind { no_upcall, single_candidate, merged_candidate };

inline std::string_view to_string(CandidateKind k) {
    switch (k) {
        case CandidateKind::no_upcall: return "no_upcall";
        case CandidateKind::single_candidate: return "single_candidate";
        case CandidateKind::merged_candidate: return "merged_candidate";
    }
    return "?";
}

struct CandidateOutcome {
    CandidateKind kind = CandidateKind::no_upcall;
    std::optional<Blob> candidate;
    std::size_t objects_found = 0;  // components before filtering
    std::size_t objects_kept = 0;   // after filtering, before merging
};

/// binarize -> label -> filter -> merge. Two or more surviving objects are merged where the
/// policy allows and the largest-area result becomes a merged candidate.
inline CandidateOutcome detect_candidate(const Spectrogram& spec, double threshold, const MergePolicy& policy) {
    validate(policy);
    const auto blobs = label_components(binarize(spec, threshold));
    const auto kept = filter_blobs(blobs, policy);
    CandidateOutcome out;
    out.objects_found = blobs.size();
    out.objects_kept = kept.size();
    if (kept.empty()) return out;
    if (kept.size() == 1) {
        out.kind = CandidateKind::single_candidate;
        out.candidate = kept.front();
        return out;
    }
    auto merged = merge_blobs(kept, policy);
    auto largest = std::max_element(merged.begin(), merged.end(), [](const Blob& a, const Blob& b) { return a.area_px < b.area_px; });
    out.kind = CandidateKind::merged_candidate;
    out.candidate = *largest;
    return out;
}

struct TFP2 {
    double min_freq_hz = 0;
    double max_freq_hz = 0;
    double freq_band_hz = 0;
    double perimeter_px = 0;
    double area_px = 0;
    double orientation_deg = 0;
    double duration_s = 0;

    static constexpr std::size_t size = 7;
    static constexpr std::array<std::string_view, size> names{"min_freq_hz", "max_freq_hz", "freq_band_hz", "perimeter_px",
                                                              "area_px",     "orientation_deg", "duration_s"};
    std::array<double, size> to_array() const {
        return {min_freq_hz, max_freq_hz, freq_band_hz, perimeter_px, area_px, orientation_deg, duration_s};
    }
};

inline TFP2 extract_tfp2(const Blob& blob) {
    if (blob.pixels.empty()) throw std::invalid_argument("extract_tfp2: empty blob");
    return {blob.min_freq_hz, blob.max_freq_hz, blob.height_hz, blob.perimeter_px, static_cast<double>(blob.area_px),
            blob.orientation_deg, blob.width_s};
}

}  // namespace narw
