#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "narw/signal_io.hpp"
#include "narw/spectrogram.hpp"
#include "oracles/wav.hpp"

using namespace narw;

namespace {

AudioSegment tone_audio(std::size_t n) {
    AudioSegment a;
    for (std::size_t k = 0; k < n; ++k) a.samples.push_back(std::sin(0.01 * static_cast<double>(k)));
    return a;
}

SynthSpec upcall_spec(std::uint64_t seed, double snr = 10.0) {
    SynthSpec s;
    s.cls = SynthClass::upcall;
    s.f_start_hz = 100;
    s.f_end_hz = 250;
    s.duration_s = 1.0;
    s.snr_db = snr;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(WavDecode, FullScalePositiveMapsBelowOne) {
    auto a = decode_wav(oracle::wav_bytes({32767, 0, -32768}, 2000));
    ASSERT_EQ(a.samples.size(), 3u);
    EXPECT_DOUBLE_EQ(a.samples[0], 32767.0 / 32768.0);
    EXPECT_NEAR(a.samples[0], 0.99997, 1e-5);
    EXPECT_EQ(a.samples[1], 0.0);
    EXPECT_EQ(a.samples[2], -1.0);
    EXPECT_EQ(a.sample_rate_hz, 2000);
}

TEST(WavDecode, RoundTripOfHundredSamplesIsBitIdentical) {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> pick(-32768, 32767);
    std::vector<std::int16_t> pcm(100);
    for (auto& v : pcm) v = static_cast<std::int16_t>(pick(rng));
    const std::string reference = oracle::wav_bytes(pcm, 2000);
    const AudioSegment decoded = decode_wav(reference);
    for (std::size_t k = 0; k < pcm.size(); ++k) EXPECT_EQ(decoded.samples[k], pcm[k] / 32768.0);
    EXPECT_EQ(encode_wav(decoded), reference);

    const auto path = std::filesystem::temp_directory_path() / "narw_roundtrip.wav";
    write_wav(path, decoded);
    const AudioSegment again = read_wav(path);
    EXPECT_EQ(again.samples, decoded.samples);
    std::filesystem::remove(path);
}

TEST(WavDecode, RejectsUnsupportedInputs) {
    EXPECT_THROW(read_wav("/nonexistent/narw.wav"), DataError);
    EXPECT_THROW(decode_wav(oracle::wav_bytes({1, 2, 3, 4}, 2000, 2)), DataError);
    EXPECT_THROW(decode_wav(oracle::wav_bytes({1, 2}, 2000, 1, 3)), DataError);
    EXPECT_THROW(decode_wav(oracle::wav_bytes({1, 2}, 44100)), DataError);
    EXPECT_NO_THROW(decode_wav(oracle::wav_bytes({1, 2}, 44100), false));
    EXPECT_THROW(decode_wav("not a wav file at all"), DataError);
}

TEST(WavEncode, SaturatesOutOfRangeSamples) {
    AudioSegment a;
    a.samples = {1.0, -1.0, 2.0};
    const auto back = decode_wav(encode_wav(a));
    EXPECT_DOUBLE_EQ(back.samples[0], 32767.0 / 32768.0);
    EXPECT_EQ(back.samples[1], -1.0);
    EXPECT_DOUBLE_EQ(back.samples[2], 32767.0 / 32768.0);
}

TEST(Segment, CountsFollowWindowAndHop) {
    const AudioSegment ten = tone_audio(20000);
    EXPECT_EQ(segment(ten, 2.0, 2.0).size(), 5u);
    EXPECT_EQ(segment(ten, 2.0, 1.0).size(), 9u);
    EXPECT_TRUE(segment(tone_audio(2000), 2.0, 1.0).empty());
    EXPECT_THROW(segment(ten, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(segment(ten, 1.0, -1.0), std::invalid_argument);
}

TEST(Segment, NonOverlappingWindowsReproduceSourcePrefix) {
    const AudioSegment a = tone_audio(10'350);
    for (double w : {0.5, 1.0, 1.7}) {
        std::vector<double> joined;
        for (const auto& s : segment(a, w, w)) joined.insert(joined.end(), s.samples.begin(), s.samples.end());
        ASSERT_LE(joined.size(), a.samples.size());
        EXPECT_TRUE(std::equal(joined.begin(), joined.end(), a.samples.begin()));
        EXPECT_GT(joined.size() + static_cast<std::size_t>(w * 2000), a.samples.size());
    }
}

TEST(Synth, IdenticalSpecGivesIdenticalSamples) {
    for (auto cls : {SynthClass::upcall, SynthClass::humpback_confounder, SynthClass::tonal_noise, SynthClass::ambient_noise}) {
        SynthSpec s = upcall_spec(42);
        s.cls = cls;
        if (cls == SynthClass::humpback_confounder) {
            s.f_start_hz = 150;
            s.f_end_hz = 450;
            s.duration_s = 0.3;
        }
        EXPECT_EQ(synth_segment(s).samples, synth_segment(s).samples);
        SynthSpec other = s;
        other.seed = 43;
        EXPECT_NE(synth_segment(s).samples, synth_segment(other).samples);
    }
}

TEST(Synth, LabelsUpcallOnlyForUpcallClass) {
    SynthSpec s = upcall_spec(1);
    EXPECT_EQ(synth_segment(s).label, Label::upcall);
    s.cls = SynthClass::ambient_noise;
    EXPECT_EQ(synth_segment(s).label, Label::non_upcall);
    s.cls = SynthClass::tonal_noise;
    EXPECT_EQ(synth_segment(s).label, Label::non_upcall);
}

TEST(Synth, SamplesStayWithinUnitRange) {
    SynthSpec s = upcall_spec(5, 40.0);
    s.noise_rms = 0.4;
    for (double v : synth_segment(s).samples) EXPECT_LE(std::abs(v), 1.0);
}

TEST(Synth, RejectsInvalidRanges) {
    SynthSpec s = upcall_spec(1);
    s.f_end_hz = 400;
    EXPECT_THROW(synth_segment(s), std::invalid_argument);
    s = upcall_spec(1);
    s.f_start_hz = 260;
    EXPECT_THROW(synth_segment(s), std::invalid_argument);
    s = upcall_spec(1);
    s.duration_s = 2.0;
    EXPECT_THROW(synth_segment(s), std::invalid_argument);
    s = upcall_spec(1);
    s.cls = SynthClass::humpback_confounder;  // 100 -> 250 stays inside 80-320
    EXPECT_THROW(synth_segment(s), std::invalid_argument);
    s.cls = SynthClass::tonal_noise;
    s.f_start_hz = 1200;
    EXPECT_THROW(synth_segment(s), std::invalid_argument);
}

TEST(Synth, UpcallArgmaxTrackRisesOverCall) {
    SynthSpec s = upcall_spec(7);
    s.noise_rms = 0.05;
    const SynthParts parts = synth_parts(s);
    const Spectrogram spec = stft(synth_segment(s), {});
    const auto hop = static_cast<std::size_t>(spec.params.hop_samples);
    const auto n = static_cast<std::size_t>(spec.params.fft_size);
    // Frames whose window lies fully inside the untapered part of the call.
    const std::size_t margin = 40;
    int previous = -1;
    int frames = 0;
    for (std::size_t t = 0; t < spec.frames(); ++t) {
        const std::size_t a = t * hop, b = a + n;
        if (a < parts.call_begin + margin || b + margin > parts.call_end) continue;
        std::size_t best = 0;
        for (std::size_t i = 1; i < spec.bins(); ++i)
            if (spec.values(t, i) > spec.values(t, best)) best = i;
        EXPECT_GE(static_cast<int>(best), previous) << "frame " << t;
        previous = static_cast<int>(best);
        ++frames;
    }
    EXPECT_GT(frames, 20);
}

TEST(Synth, MeasuredInBandSnrMatchesSpec) {
    for (double snr : {0.0, 5.0, 10.0, 15.0}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const SynthParts parts = synth_parts(upcall_spec(seed, snr));
            double sig = 0;
            for (std::size_t k = parts.call_begin; k < parts.call_end; ++k) sig += parts.signal[k] * parts.signal[k];
            sig /= static_cast<double>(parts.call_end - parts.call_begin);
            // In-band noise power measured through the DFT of the whole noise record.
            const std::size_t n = parts.noise.size();
            Eigen::FFT<double> fft;
            std::vector<std::complex<double>> spectrum;
            fft.fwd(spectrum, parts.noise);
            double band = 0;
            for (std::size_t k = 0; k <= n / 2; ++k) {
                const double f = 2000.0 * static_cast<double>(k) / static_cast<double>(n);
                if (f >= 50 && f <= 350) band += 2 * std::norm(spectrum[k]);
            }
            band /= static_cast<double>(n) * static_cast<double>(n);
            const double measured = 10 * std::log10(sig / band);
            EXPECT_NEAR(measured, snr, 1.0) << "seed " << seed;
        }
    }
}

TEST(Synth, AmbientNoiseHasNoPersistentPeak) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SynthSpec s;
        s.cls = SynthClass::ambient_noise;
        s.seed = seed;
        const AudioSegment a = synth_segment(s);
        EXPECT_EQ(a.label, Label::non_upcall);
        const Spectrogram spec = stft(a, {});
        // A bin counts as a persistent peak if its mean linear power over time exceeds
        // 3x the median bin power of the 50-350 Hz band.
        std::vector<double> mean_power;
        for (std::size_t i = 0; i < spec.bins(); ++i) {
            const double f = spec.bin_freq_hz(i);
            if (f < 50 || f > 350) continue;
            double p = 0;
            for (std::size_t t = 0; t < spec.frames(); ++t) p += std::pow(10.0, spec.values(t, i) / 10.0);
            mean_power.push_back(p / static_cast<double>(spec.frames()));
        }
        std::vector<double> sorted = mean_power;
        std::sort(sorted.begin(), sorted.end());
        const double med = sorted[sorted.size() / 2];
        for (double p : mean_power) EXPECT_LT(p, 3 * med) << "seed " << seed;
    }
}

TEST(Manifest, RoundTripsThroughCsv) {
    std::vector<ManifestEntry> entries(3);
    entries[0] = {"a.wav", SynthClass::upcall, 100.5, 250.25, 1.0, 7.5, 12345678901234ull};
    entries[1] = {"b.wav", SynthClass::ambient_noise};
    entries[1].seed = 9;
    entries[2].file = "field.wav";
    std::stringstream buf;
    write_manifest(buf, entries);
    const auto back = read_manifest(buf);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].file, "a.wav");
    EXPECT_EQ(back[0].cls, SynthClass::upcall);
    EXPECT_EQ(back[0].f_start_hz, 100.5);
    EXPECT_EQ(back[0].f_end_hz, 250.25);
    EXPECT_EQ(back[0].seed, 12345678901234ull);
    EXPECT_TRUE(std::isnan(back[1].f_start_hz));
    EXPECT_EQ(back[1].label(), Label::non_upcall);
    EXPECT_FALSE(back[2].label().has_value());
}

TEST(Manifest, RejectsWrongHeader) {
    std::stringstream buf("name,kind\nx,y\n");
    EXPECT_THROW(read_manifest(buf), DataError);
}

TEST(PipelineEntry, RefusesOtherSampleRates) {
    AudioSegment a = tone_audio(4000);
    a.sample_rate_hz = 4000;
    EXPECT_THROW(validate_for_pipeline(a), DataError);
    a.sample_rate_hz = 2000;
    EXPECT_NO_THROW(validate_for_pipeline(a));
    a.samples.clear();
    EXPECT_THROW(validate_for_pipeline(a), DataError);
}
