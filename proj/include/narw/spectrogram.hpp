#pragma once

// Log-magnitude STFT and the per-band normalization / hard-limit equalization
// applied before contour and texture analysis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "narw/grid.hpp"
#include "narw/signal_io.hpp"

namespace narw {

enum class Window { rectangular, hann };

struct SpectrogramParams {
    int fft_size = 256;
    int hop_samples = 51;
    Window window = Window::hann;
    int sample_rate_hz = kPipelineSampleRate;

    double resolution_hz() const { return static_cast<double>(sample_rate_hz) / fft_size; }
    double frame_step_s() const { return static_cast<double>(hop_samples) / sample_rate_hz; }
    double nyquist_hz() const { return sample_rate_hz / 2.0; }
};

inline void validate(const SpectrogramParams& p) {
    if (p.fft_size <= 0 || p.hop_samples <= 0 || p.sample_rate_hz <= 0)
        throw std::invalid_argument("spectrogram: sizes and rate must be positive");
    if (p.hop_samples > p.fft_size) throw std::invalid_argument("spectrogram: hop exceeds FFT size");
}

/// Time and frequency calibration of a cell grid.
struct AxisCalibration {
    double frame_step_s = 0;
    double bin_step_hz = 0;
    double freq_origin_hz = 0;  // centre frequency of column 0

    double freq_hz(double bin) const { return freq_origin_hz + bin * bin_step_hz; }
    double time_s(double frame) const { return frame * frame_step_s; }
};

/// S(t, f_i) in dB. Column i covers bin `first_bin + i` of the underlying FFT.
struct Spectrogram {
    Grid<double> values;
    SpectrogramParams params;
    int first_bin = 0;

    std::size_t frames() const { return values.rows(); }
    std::size_t bins() const { return values.cols(); }
    double bin_freq_hz(std::size_t i) const { return (first_bin + static_cast<double>(i)) * params.resolution_hz(); }
    double frame_time_s(std::size_t t) const { return t * params.frame_step_s(); }
    AxisCalibration axes() const { return {params.frame_step_s(), params.resolution_hz(), bin_freq_hz(0)}; }
};

inline constexpr double kLogFloorEpsilon = 1e-12;

inline std::vector<double> make_window(Window w, int n) {
    std::vector<double> out(static_cast<std::size_t>(n), 1.0);
    if (w == Window::hann)
        for (int k = 0; k < n; ++k) out[k] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * k / n);  // periodic
    return out;
}

/// One frame per full window; bins 0..fft_size/2; cells are 20*log10(|X| + eps).
inline Spectrogram stft(const AudioSegment& audio, const SpectrogramParams& params) {
    validate(params);
    if (audio.sample_rate_hz != params.sample_rate_hz)
        throw std::invalid_argument("stft: audio sample rate differs from spectrogram parameters");
    const auto n = static_cast<std::size_t>(params.fft_size);
    if (audio.samples.size() < n) throw std::invalid_argument("stft: audio shorter than one FFT window");

    const std::size_t frames = 1 + (audio.samples.size() - n) / static_cast<std::size_t>(params.hop_samples);
    const std::size_t bins = n / 2 + 1;
    Spectrogram spec{Grid<double>(frames, bins), params, 0};

    const auto window = make_window(params.window, params.fft_size);
    Eigen::FFT<double> fft;
    std::vector<double> frame(n);
    std::vector<std::complex<double>> out;
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t start = t * static_cast<std::size_t>(params.hop_samples);
        for (std::size_t k = 0; k < n; ++k) frame[k] = audio.samples[start + k] * window[k];
        fft.fwd(out, frame);
        for (std::size_t i = 0; i < bins; ++i) spec.values(t, i) = 20.0 * std::log10(std::abs(out[i]) + kLogFloorEpsilon);
    }
    return spec;
}

/// Per-band z-score over time with population standard deviation.
/// Bands whose deviation is negligible relative to their level become all zeros.
inline Spectrogram normalize(const Spectrogram& spec) {
    if (spec.frames() < 2) throw std::invalid_argument("normalize: need at least two frames");
    Spectrogram out = spec;
    const std::size_t T = spec.frames();
    for (std::size_t i = 0; i < spec.bins(); ++i) {
        double mean = 0;
        for (std::size_t t = 0; t < T; ++t) mean += spec.values(t, i);
        mean /= static_cast<double>(T);
        double var = 0;
        for (std::size_t t = 0; t < T; ++t) {
            const double d = spec.values(t, i) - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(T));
        const bool degenerate = sd < 1e-9 * std::max(1.0, std::abs(mean));
        for (std::size_t t = 0; t < T; ++t) out.values(t, i) = degenerate ? 0.0 : (spec.values(t, i) - mean) / sd;
    }
    return out;
}

struct EqualizationBounds {
    double floor = 0.0;
    double ceiling = 3.0;
};

inline Spectrogram equalize(const Spectrogram& spec, const EqualizationBounds& bounds) {
    if (!(bounds.floor < bounds.ceiling)) throw std::invalid_argument("equalize: floor must be below ceiling");
    Spectrogram out = spec;
    for (double& v : out.values.data()) v = std::max(bounds.floor, std::min(bounds.ceiling, v));
    return out;
}

/// Keep the bins whose centre frequency lies in [lo_hz, hi_hz].
inline Spectrogram bandpass_crop(const Spectrogram& spec, double lo_hz, double hi_hz) {
    const double nyquist = spec.params.nyquist_hz();
    if (!(0 <= lo_hz && lo_hz < hi_hz && hi_hz <= nyquist))
        throw std::invalid_argument("bandpass_crop: need 0 <= lo < hi <= Nyquist");
    constexpr double tol = 1e-9;
    std::size_t first = spec.bins(), last = 0;
    for (std::size_t i = 0; i < spec.bins(); ++i) {
        const double f = spec.bin_freq_hz(i);
        if (f >= lo_hz - tol && f <= hi_hz + tol) {
            first = std::min(first, i);
            last = i;
        }
    }
    if (first > last) throw std::invalid_argument("bandpass_crop: no bins inside the requested band");
    Spectrogram out{Grid<double>(spec.frames(), last - first + 1), spec.params, spec.first_bin + static_cast<int>(first)};
    for (std::size_t t = 0; t < spec.frames(); ++t)
        for (std::size_t i = first; i <= last; ++i) out.values(t, i - first) = spec.values(t, i);
    return out;
}

/// Debug dump: header row of bin frequencies, one row per frame prefixed by its start time.
inline void write_csv(std::ostream& out, const Spectrogram& spec) {
    out << "time_s";
    for (std::size_t i = 0; i < spec.bins(); ++i) out << ',' << spec.bin_freq_hz(i);
    out << '\n';
    for (std::size_t t = 0; t < spec.frames(); ++t) {
        out << spec.frame_time_s(t);
        for (std::size_t i = 0; i < spec.bins(); ++i) out << ',' << spec.values(t, i);
        out << '\n';
    }
}

}  // namespace narw
