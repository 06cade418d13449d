#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "narw/spectrogram.hpp"

namespace narw {

struct GateConfig {
    double band_lo_hz = 50.0;
    double band_hi_hz = 350.0;
    double threshold_db = 6.0;
    int min_active_frames = 4;
};

inline void validate(const GateConfig& cfg) {
    if (!(cfg.band_lo_hz < cfg.band_hi_hz)) throw std::invalid_argument("gate: band_lo must be below band_hi");
    if (!(cfg.threshold_db > 0)) throw std::invalid_argument("gate: threshold_db must be positive");
    if (cfg.min_active_frames < 1) throw std::invalid_argument("gate: min_active_frames must be positive");
}

struct GateDecision {
    bool pass = false;
    double score_db = 0.0;  // largest per-frame excess over the median floor
    int active_frames = 0;
};

/// Per-frame in-band energy in dB: mean of linear power over the band's bins.
/// Operates on the un-normalized log spectrogram.
inline std::vector<double> band_frame_energy_db(const Spectrogram& spec, double lo_hz, double hi_hz) {
    constexpr double tol = 1e-9;
    const double res = spec.params.resolution_hz();
    if (spec.bins() == 0 || lo_hz < spec.bin_freq_hz(0) - res / 2 - tol ||
        hi_hz > spec.bin_freq_hz(spec.bins() - 1) + res / 2 + tol)
        throw std::invalid_argument("gate: band lies outside the spectrogram's frequency range");
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < spec.bins(); ++i) {
        const double f = spec.bin_freq_hz(i);
        if (f >= lo_hz - tol && f <= hi_hz + tol) cols.push_back(i);
    }
    if (cols.empty()) throw std::invalid_argument("gate: no spectrogram bins inside the band");

    // Powers are taken relative to the band maximum so a global dB offset cancels exactly.
    double ref = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < spec.frames(); ++t)
        for (std::size_t i : cols) ref = std::max(ref, spec.values(t, i));

    std::vector<double> energy(spec.frames());
    for (std::size_t t = 0; t < spec.frames(); ++t) {
        double sum = 0;
        for (std::size_t i : cols) sum += std::pow(10.0, (spec.values(t, i) - ref) / 10.0);
        energy[t] = ref + 10.0 * std::log10(sum / static_cast<double>(cols.size()));
    }
    return energy;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty sequence");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

/// Energy detector: pass iff at least `min_active_frames` frames exceed the median
/// in-band energy by more than `threshold_db`.
inline GateDecision stage1_gate(const Spectrogram& spec, const GateConfig& cfg) {
    validate(cfg);
    const auto energy = band_frame_energy_db(spec, cfg.band_lo_hz, cfg.band_hi_hz);
    const double floor = median(energy);
    GateDecision d;
    d.score_db = -std::numeric_limits<double>::infinity();
    for (double e : energy) {
        const double excess = e - floor;
        d.score_db = std::max(d.score_db, excess);
        if (excess > cfg.threshold_db) ++d.active_frames;
    }
    d.pass = d.active_frames >= cfg.min_active_frames;
    return d;
}

}  // namespace narw
