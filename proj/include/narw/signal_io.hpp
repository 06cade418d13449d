#pragma once

// Audio segments: 16-bit PCM WAV I/O, fixed-window segmentation and a seeded
// synthetic generator for labeled upcall / confounder / noise segments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "narw/error.hpp"

namespace narw {

inline constexpr int kPipelineSampleRate = 2000;

enum class Label { non_upcall = 0, upcall = 1 };

inline std::string_view to_string(Label label) { return label == Label::upcall ? "upcall" : "non-upcall"; }

inline Label parse_label(std::string_view text) {
    if (text == "upcall" || text == "1") return Label::upcall;
    if (text == "non-upcall" || text == "non_upcall" || text == "0") return Label::non_upcall;
    throw DataError("unknown label '" + std::string(text) + "'");
}

struct AudioSegment {
    std::vector<double> samples;
    int sample_rate_hz = kPipelineSampleRate;
    std::optional<Label> label;

    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// Throws DataError unless the segment is non-empty, within [-1, 1] and at the pipeline rate.
inline void validate_for_pipeline(const AudioSegment& audio) {
    if (audio.samples.empty()) throw DataError("audio segment is empty");
    if (audio.sample_rate_hz != kPipelineSampleRate)
        throw DataError("sample rate " + std::to_string(audio.sample_rate_hz) + " Hz is not supported; expected " +
                        std::to_string(kPipelineSampleRate) + " Hz (no resampling is performed)");
    for (double s : audio.samples)
        if (!(std::abs(s) <= 1.0)) throw DataError("sample outside [-1, 1]");
}

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16le(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

/// Decode a RIFF/WAVE byte buffer holding mono 16-bit PCM.
/// Samples are scaled by 1/32768. Set `require_pipeline_rate` to refuse anything but 2 kHz.
inline AudioSegment decode_wav(std::string_view bytes, bool require_pipeline_rate = true) {
    const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") throw DataError("not a RIFF/WAVE file");

    std::optional<std::uint16_t> format, channels, bits;
    std::uint32_t rate = 0;
    std::optional<std::string_view> data;
    std::size_t pos = 12;
    while (pos + 8 <= n) {
        std::string_view id = bytes.substr(pos, 4);
        std::uint32_t size = detail::read_u32le(b + pos + 4);
        std::size_t body = pos + 8;
        if (body + size > n) {
            if (id != "data") throw DataError("truncated WAV chunk");
            size = static_cast<std::uint32_t>(n - body);  // tolerate writers that leave a bogus data size
        }
        if (id == "fmt ") {
            if (size < 16) throw DataError("WAV fmt chunk too short");
            format = detail::read_u16le(b + body);
            channels = detail::read_u16le(b + body + 2);
            rate = detail::read_u32le(b + body + 4);
            bits = detail::read_u16le(b + body + 14);
            if (*format == 0xFFFE && size >= 26) format = detail::read_u16le(b + body + 24);  // extensible subformat
        } else if (id == "data") {
            data = bytes.substr(body, size);
        }
        pos = body + size + (size & 1u);
    }
    if (!format || !data) throw DataError("WAV file lacks fmt or data chunk");
    if (*format != 1) throw DataError("WAV encoding is not integer PCM");
    if (*channels != 1) throw DataError("WAV file has " + std::to_string(*channels) + " channels; mono required");
    if (*bits != 16) throw DataError("WAV file is " + std::to_string(*bits) + "-bit; 16-bit required");

    AudioSegment audio;
    audio.sample_rate_hz = static_cast<int>(rate);
    if (require_pipeline_rate && audio.sample_rate_hz != kPipelineSampleRate)
        throw DataError("WAV sample rate " + std::to_string(rate) + " Hz is not supported; expected 2000 Hz");
    if (data->size() < 2) throw DataError("WAV file holds no samples");
    const auto* d = reinterpret_cast<const unsigned char*>(data->data());
    audio.samples.resize(data->size() / 2);
    for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        auto v = static_cast<std::int16_t>(detail::read_u16le(d + 2 * i));
        audio.samples[i] = v / 32768.0;
    }
    return audio;
}

inline AudioSegment read_wav(const std::filesystem::path& path, bool require_pipeline_rate = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open WAV file " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_wav(bytes, require_pipeline_rate);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

/// Quantize to 16-bit PCM (round to nearest, saturating) and wrap in a RIFF header.
inline std::string encode_wav(const AudioSegment& audio) {
    const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    detail::put_u32le(out, 36 + data_bytes);
    out += "WAVEfmt ";
    detail::put_u32le(out, 16);
    detail::put_u16le(out, 1);
    detail::put_u16le(out, 1);
    detail::put_u32le(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
    detail::put_u32le(out, static_cast<std::uint32_t>(audio.sample_rate_hz * 2));
    detail::put_u16le(out, 2);
    detail::put_u16le(out, 16);
    out += "data";
    detail::put_u32le(out, data_bytes);
    for (double s : audio.samples) {
        double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioSegment& audio) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write WAV file " + path.string());
    const std::string bytes = encode_wav(audio);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Windows of `window_s` starting every `hop_s`; a trailing partial window is dropped.
inline std::vector<AudioSegment> segment(const AudioSegment& audio, double window_s, double hop_s) {
    if (!(window_s > 0) || !(hop_s > 0)) throw std::invalid_argument("segment: window and hop must be positive");
    const auto window = static_cast<std::size_t>(std::llround(window_s * audio.sample_rate_hz));
    const auto hop = static_cast<std::size_t>(std::llround(hop_s * audio.sample_rate_hz));
    if (window == 0 || hop == 0) throw std::invalid_argument("segment: window or hop shorter than one sample");
    std::vector<AudioSegment> out;
    for (std::size_t start = 0; start + window <= audio.samples.size(); start += hop) {
        AudioSegment s;
        s.sample_rate_hz = audio.sample_rate_hz;
        s.label = audio.label;
        s.samples.assign(audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                         audio.samples.begin() + static_cast<std::ptrdiff_t>(start + window));
        out.push_back(std::move(s));
    }
    return out;
}

// -- synthetic data ----------------------------------------------------------

enum class SynthClass { upcall, humpback_confounder, tonal_noise, ambient_noise };

inline std::string_view to_string(SynthClass c) {
    switch (c) {
        case SynthClass::upcall: return "upcall";
        case SynthClass::humpback_confounder: return "humpback_confounder";
        case SynthClass::tonal_noise: return "tonal_noise";
        case SynthClass::ambient_noise: return "ambient_noise";
    }
    return "?";
}

inline SynthClass parse_synth_class(std::string_view text) {
    for (auto c : {SynthClass::upcall, SynthClass::humpback_confounder, SynthClass::tonal_noise, SynthClass::ambient_noise})
        if (text == to_string(c)) return c;
    throw DataError("unknown synthetic class '" + std::string(text) + "'");
}

/// Band over which synthetic SNR is defined.
inline constexpr double kSnrBandLoHz = 50.0;
inline constexpr double kSnrBandHiHz = 350.0;

/// Parameters of one synthetic segment. For tonal_noise, f_start_hz and f_end_hz are the
/// two tone frequencies (equal values give a single tone) and duration_s is ignored.
struct SynthSpec {
    SynthClass cls = SynthClass::upcall;
    double f_start_hz = 100.0;
    double f_end_hz = 250.0;
    double duration_s = 1.0;
    double snr_db = 10.0;
    std::uint64_t seed = 0;
    double segment_s = 3.0;
    double noise_rms = 0.05;
    int sample_rate_hz = kPipelineSampleRate;
};

inline Label label_of(SynthClass cls) { return cls == SynthClass::upcall ? Label::upcall : Label::non_upcall; }

inline void validate(const SynthSpec& spec) {
    const double nyquist = spec.sample_rate_hz / 2.0;
    if (!(spec.segment_s > 0) || !(spec.noise_rms > 0) || spec.sample_rate_hz <= 0)
        throw std::invalid_argument("synth: segment length, noise level and sample rate must be positive");
    auto sweep_fits = [&] {
        if (!(spec.duration_s > 0) || spec.duration_s > spec.segment_s)
            throw std::invalid_argument("synth: call duration must be positive and fit in the segment");
    };
    switch (spec.cls) {
        case SynthClass::upcall:
            if (!(50.0 <= spec.f_start_hz && spec.f_start_hz < spec.f_end_hz && spec.f_end_hz <= 350.0))
                throw std::invalid_argument("synth: upcall requires 50 <= f_start < f_end <= 350 Hz");
            if (!(0.5 <= spec.duration_s && spec.duration_s <= 1.5))
                throw std::invalid_argument("synth: upcall duration must lie in [0.5, 1.5] s");
            sweep_fits();
            break;
        case SynthClass::humpback_confounder:
            if (!(0 < spec.f_start_hz && spec.f_start_hz < spec.f_end_hz && spec.f_end_hz < nyquist))
                throw std::invalid_argument("synth: confounder requires 0 < f_start < f_end < Nyquist");
            if (!(spec.f_start_hz < 80.0 || spec.f_end_hz > 320.0))
                throw std::invalid_argument("synth: confounder sweep must extend outside 80-320 Hz");
            sweep_fits();
            break;
        case SynthClass::tonal_noise:
            if (!(0 < spec.f_start_hz && spec.f_start_hz < nyquist && 0 < spec.f_end_hz && spec.f_end_hz < nyquist))
                throw std::invalid_argument("synth: tone frequencies must lie in (0, Nyquist)");
            break;
        case SynthClass::ambient_noise: break;
    }
}

/// A synthetic segment with its components kept apart (used to measure SNR).
struct SynthParts {
    std::vector<double> signal;
    std::vector<double> noise;
    std::size_t call_begin = 0;  // sample range carrying the call (whole segment for tones)
    std::size_t call_end = 0;
};

namespace detail {

inline double band_noise_power(const SynthSpec& spec) {
    const double nyquist = spec.sample_rate_hz / 2.0;
    return spec.noise_rms * spec.noise_rms * (kSnrBandHiHz - kSnrBandLoHz) / nyquist;
}

// Linear chirp with 20 ms raised-cosine edges, scaled so its mean power equals `power`.
inline std::vector<double> chirp(double f0, double f1, std::size_t n, double fs, double power) {
    std::vector<double> out(n);
    const double dur = static_cast<double>(n) / fs;
    const double taper = std::min(0.02 * fs, n / 4.0);
    double energy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = k / fs;
        const double phase = 2 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t);
        double env = 1.0;
        const double edge = std::min<double>(k, n - 1 - k);
        if (edge < taper) env = 0.5 - 0.5 * std::cos(std::numbers::pi * edge / taper);
        out[k] = env * std::sin(phase);
        energy += out[k] * out[k];
    }
    const double scale = energy > 0 ? std::sqrt(power * n / energy) : 0.0;
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace detail

inline SynthParts synth_parts(const SynthSpec& spec) {
    validate(spec);
    const double fs = spec.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(spec.segment_s * fs));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.noise_rms);

    SynthParts parts;
    parts.noise.resize(n);
    for (double& v : parts.noise) v = gauss(rng);
    parts.signal.assign(n, 0.0);

    const double target_power = detail::band_noise_power(spec) * std::pow(10.0, spec.snr_db / 10.0);
    switch (spec.cls) {
        case SynthClass::upcall:
        case SynthClass::humpback_confounder: {
            const auto m = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
            const std::size_t slack = n - m;
            const std::size_t margin = std::min<std::size_t>(slack / 2, static_cast<std::size_t>(0.1 * n));
            std::uniform_int_distribution<std::size_t> start(margin, slack - margin);
            parts.call_begin = start(rng);
            parts.call_end = parts.call_begin + m;
            auto call = detail::chirp(spec.f_start_hz, spec.f_end_hz, m, fs, target_power);
            std::copy(call.begin(), call.end(), parts.signal.begin() + static_cast<std::ptrdiff_t>(parts.call_begin));
            break;
        }
        case SynthClass::tonal_noise: {
            std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
            std::vector<double> tones{spec.f_start_hz};
            if (spec.f_end_hz != spec.f_start_hz) tones.push_back(spec.f_end_hz);
            const double amp = std::sqrt(2 * target_power);
            for (double f : tones) {
                const double phi = phase(rng);
                for (std::size_t k = 0; k < n; ++k)
                    parts.signal[k] += amp * std::sin(2 * std::numbers::pi * f * k / fs + phi);
            }
            parts.call_begin = 0;
            parts.call_end = n;
            break;
        }
        case SynthClass::ambient_noise: break;
    }
    return parts;
}

/// Pure function of `spec`: signal plus white Gaussian noise, clipped to [-1, 1].
inline AudioSegment synth_segment(const SynthSpec& spec) {
    SynthParts parts = synth_parts(spec);
    AudioSegment audio;
    audio.sample_rate_hz = spec.sample_rate_hz;
    audio.label = label_of(spec.cls);
    audio.samples.resize(parts.noise.size());
    for (std::size_t k = 0; k < audio.samples.size(); ++k)
        audio.samples[k] = std::clamp(parts.signal[k] + parts.noise[k], -1.0, 1.0);
    return audio;
}

// -- corpus manifest -----------------------------------------------------------

/// One manifest row. Synthesis columns are empty (NaN / no class) for recordings of unknown origin.
struct ManifestEntry {
    std::string file;
    std::optional<SynthClass> cls;
    double f_start_hz = std::numeric_limits<double>::quiet_NaN();
    double f_end_hz = std::numeric_limits<double>::quiet_NaN();
    double duration_s = std::numeric_limits<double>::quiet_NaN();
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;

    std::optional<Label> label() const {
        if (!cls) return std::nullopt;
        return label_of(*cls);
    }
};

inline constexpr std::string_view kManifestHeader = "file,class,f_start_hz,f_end_hz,duration_s,snr_db,seed";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_optional_double(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw DataError("bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw DataError("bad number '" + s + "'");
    }
}

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace detail

inline std::vector<ManifestEntry> read_manifest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("manifest is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader) throw DataError("manifest header must be '" + std::string(kManifestHeader) + "'");
    std::vector<ManifestEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 7) throw DataError("manifest line " + std::to_string(lineno) + ": expected 7 columns");
        ManifestEntry e;
        e.file = f[0];
        if (!f[1].empty()) e.cls = parse_synth_class(f[1]);
        e.f_start_hz = detail::parse_optional_double(f[2]);
        e.f_end_hz = detail::parse_optional_double(f[3]);
        e.duration_s = detail::parse_optional_double(f[4]);
        e.snr_db = detail::parse_optional_double(f[5]);
        if (!f[6].empty()) {
            try {
                e.seed = std::stoull(f[6]);
            } catch (const std::logic_error&) {
                throw DataError("manifest line " + std::to_string(lineno) + ": bad seed");
            }
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

inline void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries) {
    out << kManifestHeader << '\n';
    for (const auto& e : entries) {
        out << e.file << ',' << (e.cls ? to_string(*e.cls) : "") << ',' << detail::format_number(e.f_start_hz) << ','
            << detail::format_number(e.f_end_hz) << ',' << detail::format_number(e.duration_s) << ','
            << detail::format_number(e.snr_db) << ',' << e.seed << '\n';
    }
}

inline SynthSpec to_synth_spec(const ManifestEntry& e, double segment_s = 3.0) {
    if (!e.cls) throw DataError("manifest entry " + e.file + " has no synthetic class");
    SynthSpec spec;
    spec.cls = *e.cls;
    spec.f_start_hz = e.f_start_hz;
    spec.f_end_hz = e.f_end_hz;
    spec.duration_s = e.duration_s;
    spec.snr_db = e.snr_db;
    spec.seed = e.seed;
    spec.segment_s = segment_s;
    return spec;
}

}  // namespace narw
