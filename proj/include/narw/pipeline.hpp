#pragma once

// Two-stage detection pipeline: energy gate, then contour (TFP-2) or texture (LBP)
// features fed to a binary classifier. Also corpus handling, configuration and the
// on-disk artifacts written by the command-line tool.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "narw/classifiers/model.hpp"
#include "narw/contour.hpp"
#include "narw/error.hpp"
#include "narw/evaluation.hpp"
#include "narw/lbp.hpp"
#include "narw/signal_io.hpp"
#include "narw/spectrogram.hpp"
#include "narw/stage1_gate.hpp"

namespace narw {

enum class FeatureBranch { tfp2, lbp };

inline std::string_view to_string(FeatureBranch b) { return b == FeatureBranch::tfp2 ? "tfp2" : "lbp"; }

inline FeatureBranch parse_branch(std::string_view text) {
    if (text == "tfp2") return FeatureBranch::tfp2;
    if (text == "lbp") return FeatureBranch::lbp;
    throw ConfigError("unknown feature branch '" + std::string(text) + "'");
}

// -- configuration -------------------------------------------------------------

struct PipelineConfig {
    static constexpr int kVersion = 1;

    SpectrogramParams spectrogram;
    EqualizationBounds equalization;
    GateConfig gate;
    double binarize_threshold = kDefaultBinarizeThreshold;
    MergePolicy merge;
    double lbp_band_lo_hz = 80.0;
    double lbp_band_hi_hz = 320.0;
    LBPConfig lbp;
    FeatureBranch branch = FeatureBranch::lbp;
    Algorithm classifier = Algorithm::linear_svm;
    Hyperparameters hyper;
    std::uint64_t master_seed = 1;
    double segment_s = 3.0;
};

inline void validate(const PipelineConfig& c) {
    try {
        validate(c.spectrogram);
        if (c.spectrogram.sample_rate_hz != kPipelineSampleRate) throw std::invalid_argument("spectrogram sample rate must be 2000 Hz");
        if (!(c.equalization.floor < c.equalization.ceiling)) throw std::invalid_argument("equalization floor must be below ceiling");
        validate(c.gate);
        validate(c.merge);
        validate(c.lbp);
        if (!(0 <= c.lbp_band_lo_hz && c.lbp_band_lo_hz < c.lbp_band_hi_hz && c.lbp_band_hi_hz <= c.spectrogram.nyquist_hz()))
            throw std::invalid_argument("lbp band must satisfy 0 <= lo < hi <= Nyquist");
        if (!(c.segment_s > 0)) throw std::invalid_argument("segment length must be positive");
        if (c.hyper.knn_k < 1 || c.hyper.tree_max_depth < 1 || c.hyper.bagger_trees < 1 || !(c.hyper.svm_c > 0) ||
            c.hyper.poly_degree < 2 || !(c.hyper.svm_tolerance > 0) || c.hyper.rbf_gamma < 0)
            throw std::invalid_argument("classifier hyperparameters out of range");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
}

inline nlohmann::json to_json(const PipelineConfig& c) {
    return {{"version", PipelineConfig::kVersion},
            {"spectrogram",
             {{"fft_size", c.spectrogram.fft_size},
              {"hop_samples", c.spectrogram.hop_samples},
              {"window", c.spectrogram.window == Window::hann ? "hann" : "rectangular"},
              {"sample_rate_hz", c.spectrogram.sample_rate_hz}}},
            {"equalization", {{"floor", c.equalization.floor}, {"ceiling", c.equalization.ceiling}}},
            {"gate",
             {{"band_lo_hz", c.gate.band_lo_hz},
              {"band_hi_hz", c.gate.band_hi_hz},
              {"threshold_db", c.gate.threshold_db},
              {"min_active_frames", c.gate.min_active_frames}}},
            {"contour",
             {{"binarize_threshold", c.binarize_threshold},
              {"min_width_s", c.merge.min_width_s},
              {"max_width_s", c.merge.max_width_s},
              {"min_height_hz", c.merge.min_height_hz},
              {"max_height_hz", c.merge.max_height_hz},
              {"max_time_gap_s", c.merge.max_time_gap_s},
              {"max_freq_gap_hz", c.merge.max_freq_gap_hz}}},
            {"lbp",
             {{"points", c.lbp.points},
              {"radius", c.lbp.radius},
              {"uniform_u2", c.lbp.uniform_u2},
              {"regions_t", c.lbp.regions_t},
              {"regions_f", c.lbp.regions_f},
              {"normalize_histograms", c.lbp.normalize_histograms},
              {"band_lo_hz", c.lbp_band_lo_hz},
              {"band_hi_hz", c.lbp_band_hi_hz}}},
            {"feature_branch", to_string(c.branch)},
            {"classifier", to_string(c.classifier)},
            {"hyperparameters", to_json(c.hyper)},
            {"master_seed", c.master_seed},
            {"segment_s", c.segment_s}};
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || !j.contains("version")) throw ConfigError("configuration lacks a 'version' key");
        if (j.at("version").get<int>() != PipelineConfig::kVersion)
            throw ConfigError("unsupported configuration version " + j.at("version").dump());
        PipelineConfig c;
        const nlohmann::json empty = nlohmann::json::object();
        auto section = [&](const char* key) -> const nlohmann::json& { return j.contains(key) ? j.at(key) : empty; };
        const auto& s = section("spectrogram");
        c.spectrogram.fft_size = s.value("fft_size", c.spectrogram.fft_size);
        c.spectrogram.hop_samples = s.value("hop_samples", c.spectrogram.hop_samples);
        const std::string window = s.value("window", std::string("hann"));
        if (window != "hann" && window != "rectangular") throw ConfigError("unknown window '" + window + "'");
        c.spectrogram.window = window == "hann" ? Window::hann : Window::rectangular;
        c.spectrogram.sample_rate_hz = s.value("sample_rate_hz", c.spectrogram.sample_rate_hz);
        const auto& e = section("equalization");
        c.equalization.floor = e.value("floor", c.equalization.floor);
        c.equalization.ceiling = e.value("ceiling", c.equalization.ceiling);
        const auto& g = section("gate");
        c.gate.band_lo_hz = g.value("band_lo_hz", c.gate.band_lo_hz);
        c.gate.band_hi_hz = g.value("band_hi_hz", c.gate.band_hi_hz);
        c.gate.threshold_db = g.value("threshold_db", c.gate.threshold_db);
        c.gate.min_active_frames = g.value("min_active_frames", c.gate.min_active_frames);
        const auto& k = section("contour");
        c.binarize_threshold = k.value("binarize_threshold", c.binarize_threshold);
        c.merge.min_width_s = k.value("min_width_s", c.merge.min_width_s);
        c.merge.max_width_s = k.value("max_width_s", c.merge.max_width_s);
        c.merge.min_height_hz = k.value("min_height_hz", c.merge.min_height_hz);
        c.merge.max_height_hz = k.value("max_height_hz", c.merge.max_height_hz);
        c.merge.max_time_gap_s = k.value("max_time_gap_s", c.merge.max_time_gap_s);
        c.merge.max_freq_gap_hz = k.value("max_freq_gap_hz", c.merge.max_freq_gap_hz);
        const auto& l = section("lbp");
        c.lbp.points = l.value("points", c.lbp.points);
        c.lbp.radius = l.value("radius", c.lbp.radius);
        c.lbp.uniform_u2 = l.value("uniform_u2", c.lbp.uniform_u2);
        c.lbp.regions_t = l.value("regions_t", c.lbp.regions_t);
        c.lbp.regions_f = l.value("regions_f", c.lbp.regions_f);
        c.lbp.normalize_histograms = l.value("normalize_histograms", c.lbp.normalize_histograms);
        c.lbp_band_lo_hz = l.value("band_lo_hz", c.lbp_band_lo_hz);
        c.lbp_band_hi_hz = l.value("band_hi_hz", c.lbp_band_hi_hz);
        if (j.contains("feature_branch")) c.branch = parse_branch(j.at("feature_branch").get<std::string>());
        if (j.contains("classifier")) c.classifier = parse_algorithm(j.at("classifier").get<std::string>());
        if (j.contains("hyperparameters")) c.hyper = hyperparameters_from_json(j.at("hyperparameters"));
        c.master_seed = j.value("master_seed", c.master_seed);
        c.segment_s = j.value("segment_s", c.segment_s);
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("configuration " + path.string() + " is not valid JSON: " + e.what());
    }
}

/// FNV-1a 64 over the canonical JSON form, as 16 hex digits. The branch and classifier
/// selections are left out: every artifact names those itself, and one report may hold
/// several classifiers run under the same pipeline settings.
inline std::string config_hash(const PipelineConfig& c) {
    nlohmann::json j = to_json(c);
    j.erase("feature_branch");
    j.erase("classifier");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// -- corpus --------------------------------------------------------------------

struct CorpusItem {
    ManifestEntry entry;
    AudioSegment audio;

    std::optional<Label> label() const { return entry.label(); }
};

struct Corpus {
    std::vector<CorpusItem> items;

    std::size_t size() const { return items.size(); }
    bool labeled() const {
        return !items.empty() && std::all_of(items.begin(), items.end(), [](const CorpusItem& i) { return i.label().has_value(); });
    }
};

/// Class counts and parameter ranges for a synthetic corpus.
struct CorpusRecipe {
    int upcalls = 100;
    int humpback = 100;
    int tonal = 100;
    int ambient = 100;
    double snr_lo_db = 5.0;
    double snr_hi_db = 15.0;
    std::uint64_t seed = 1;
};

inline std::vector<ManifestEntry> make_manifest(const CorpusRecipe& r) {
    std::mt19937_64 rng(r.seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    std::vector<ManifestEntry> entries;
    auto add = [&](SynthClass cls, double f0, double f1, double dur) {
        ManifestEntry e;
        char name[64];
        std::snprintf(name, sizeof name, "%05zu_%s.wav", entries.size(), std::string(to_string(cls)).c_str());
        e.file = name;
        e.cls = cls;
        e.f_start_hz = f0;
        e.f_end_hz = f1;
        e.duration_s = dur;
        e.snr_db = uniform(r.snr_lo_db, r.snr_hi_db);
        e.seed = rng();
        entries.push_back(e);
    };
    for (int k = 0; k < r.upcalls; ++k) {
        const double f0 = uniform(60, 120);
        add(SynthClass::upcall, f0, uniform(180, 300), uniform(0.6, 1.2));
    }
    for (int k = 0; k < r.humpback; ++k) {
        const double f0 = uniform(120, 250);
        add(SynthClass::humpback_confounder, f0, f0 + uniform(250, 400), uniform(0.2, 0.45));
    }
    for (int k = 0; k < r.tonal; ++k) add(SynthClass::tonal_noise, uniform(60, 340), uniform(60, 340), std::nan(""));
    for (int k = 0; k < r.ambient; ++k) add(SynthClass::ambient_noise, std::nan(""), std::nan(""), std::nan(""));
    return entries;
}

inline Corpus synth_corpus(const std::vector<ManifestEntry>& entries, double segment_s = 3.0) {
    Corpus c;
    for (const auto& e : entries) c.items.push_back({e, synth_segment(to_synth_spec(e, segment_s))});
    return c;
}

inline Corpus synth_corpus(const CorpusRecipe& recipe, double segment_s = 3.0) {
    return synth_corpus(make_manifest(recipe), segment_s);
}

inline void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    std::vector<ManifestEntry> entries;
    for (const auto& item : corpus.items) {
        write_wav(dir / item.entry.file, item.audio);
        entries.push_back(item.entry);
    }
    std::ofstream out(dir / "manifest.csv");
    if (!out) throw DataError("cannot write manifest in " + dir.string());
    write_manifest(out, entries);
}

/// Reads `dir/manifest.csv` and every WAV it lists.
inline Corpus load_corpus(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.csv");
    if (!in) throw DataError("corpus " + dir.string() + " has no manifest.csv");
    Corpus c;
    for (auto& e : read_manifest(in)) {
        AudioSegment audio = read_wav(dir / e.file);
        audio.label = e.label();
        c.items.push_back({std::move(e), std::move(audio)});
    }
    return c;
}

/// Deterministic stratified half split: (train, test).
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& c, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t k = 0; k < c.items.size(); ++k) (c.items[k].label() == Label::upcall ? pos : neg).push_back(k);
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<char> in_test(c.items.size(), 0);
    for (std::size_t k = 0; k < pos.size(); ++k) in_test[pos[k]] = k % 2;
    for (std::size_t k = 0; k < neg.size(); ++k) in_test[neg[k]] = k % 2;
    std::pair<Corpus, Corpus> out;
    for (std::size_t k = 0; k < c.items.size(); ++k) (in_test[k] ? out.second : out.first).items.push_back(c.items[k]);
    return out;
}

// -- per-segment analysis ---------------------------------------------------------

inline std::size_t feature_dim(const PipelineConfig& c, FeatureBranch b) {
    return b == FeatureBranch::tfp2 ? TFP2::size : lbp_feature_length(c.lbp);
}

struct SegmentAnalysis {
    GateDecision gate;
    std::optional<CandidateKind> candidate;  // contour branch only
    std::optional<std::vector<double>> features;
};

/// Preprocessing shared by both branches: per-band z-scores, then hard limiting.
inline Spectrogram normalized_equalized(const Spectrogram& s, const PipelineConfig& c) {
    return equalize(normalize(s), c.equalization);
}

inline SegmentAnalysis analyze_segment(const AudioSegment& audio, const PipelineConfig& c, FeatureBranch branch,
                                       const UniformTable& table) {
    validate_for_pipeline(audio);
    const Spectrogram spec = stft(audio, c.spectrogram);
    SegmentAnalysis out;
    out.gate = stage1_gate(spec, c.gate);
    if (!out.gate.pass) return out;
    if (branch == FeatureBranch::tfp2) {
        const auto outcome = detect_candidate(normalized_equalized(spec, c), c.binarize_threshold, c.merge);
        out.candidate = outcome.kind;
        if (outcome.candidate) {
            const auto f = extract_tfp2(*outcome.candidate).to_array();
            out.features = std::vector<double>(f.begin(), f.end());
        }
    } else {
        const Spectrogram band = normalized_equalized(bandpass_crop(spec, c.lbp_band_lo_hz, c.lbp_band_hi_hz), c);
        out.features = regional_histograms(lbp_image(band, c.lbp, &table), c.lbp);
    }
    return out;
}

struct FeatureTable {
    FeatureBranch branch = FeatureBranch::lbp;
    std::vector<std::string> sources;
    std::vector<std::optional<Label>> labels;
    std::vector<SegmentAnalysis> analyses;

    /// Rows that reached the classifier stage, as a labeled dataset.
    Dataset training_set() const {
        std::vector<std::vector<double>> rows;
        std::vector<Label> ls;
        for (std::size_t k = 0; k < analyses.size(); ++k)
            if (analyses[k].features) {
                if (!labels[k]) throw DataError("corpus item " + sources[k] + " is unlabeled");
                rows.push_back(*analyses[k].features);
                ls.push_back(*labels[k]);
            }
        return make_dataset(rows, std::move(ls));
    }
};

inline FeatureTable extract_features(const Corpus& corpus, const PipelineConfig& c, FeatureBranch branch) {
    validate(c);
    const UniformTable table = build_u2_table(c.lbp.points);
    FeatureTable t;
    t.branch = branch;
    for (const auto& item : corpus.items) {
        t.sources.push_back(item.entry.file);
        t.labels.push_back(item.label());
        try {
            t.analyses.push_back(analyze_segment(item.audio, c, branch, table));
        } catch (const DataError& e) {
            throw DataError(item.entry.file + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw DataError(item.entry.file + ": " + e.what());
        }
    }
    return t;
}

// -- training and detection ----------------------------------------------------------

/// A classifier plus the pipeline context it was trained under.
struct TrainedModel {
    ClassifierModel model;
    FeatureBranch branch = FeatureBranch::lbp;
    std::string config_hash;

    nlohmann::json to_json() const {
        nlohmann::json j = model.to_json();
        j["feature_branch"] = to_string(branch);
        j["config_hash"] = config_hash;
        return j;
    }
    static TrainedModel from_json(const nlohmann::json& j) {
        try {
            return {ClassifierModel::from_json(j), parse_branch(j.at("feature_branch").get<std::string>()),
                    j.at("config_hash").get<std::string>()};
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed model file: ") + e.what());
        } catch (const ConfigError& e) {
            throw DataError(std::string("malformed model file: ") + e.what());
        }
    }
};

inline void save_model(const std::filesystem::path& path, const TrainedModel& m) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file " + path.string());
    out << m.to_json().dump(1) << '\n';
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("model file " + path.string() + " not found");
    try {
        return TrainedModel::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
}

inline TrainedModel train_on(const FeatureTable& features, const PipelineConfig& c, Algorithm algorithm) {
    const Dataset ds = features.training_set();
    for (Label l : {Label::upcall, Label::non_upcall})
        if (ds.count(l) == 0)
            throw DataError("no " + std::string(to_string(l)) + " segment survives to the classifier stage; cannot train");
    Hyperparameters h = c.hyper;
    h.seed = c.master_seed;
    return {ClassifierModel::train(ds, algorithm, h), features.branch, config_hash(c)};
}

/// Extracts features with the configured branch and trains the configured classifier.
inline TrainedModel run_train(const Corpus& corpus, const PipelineConfig& c) {
    if (!corpus.labeled()) throw DataError("training corpus is empty or unlabeled");
    return train_on(extract_features(corpus, c, c.branch), c, c.classifier);
}

struct DetectionRecord {
    std::string source;
    std::optional<Label> truth;
    GateDecision gate;
    std::optional<CandidateKind> candidate;
    std::optional<std::vector<double>> features;
    bool classified = false;
    Label predicted = Label::non_upcall;
    double score = -std::numeric_limits<double>::infinity();
};

struct EvalReport {
    FeatureBranch branch = FeatureBranch::lbp;
    Algorithm algorithm = Algorithm::lda;
    ConfusionCounts counts;
    RateReport rates;
    double auc = 0;
    ROCCurve roc;
};

struct DetectResult {
    std::vector<DetectionRecord> records;
    std::size_t classifier_invocations = 0;
    std::size_t gate_rejected = 0;
    std::optional<EvalReport> report;
};

inline EvalReport evaluate_records(const std::vector<DetectionRecord>& records, FeatureBranch branch, Algorithm algorithm) {
    std::vector<Label> truth, predicted;
    std::vector<double> scores;
    for (const auto& r : records) {
        if (!r.truth) throw DataError("cannot evaluate unlabeled record " + r.source);
        truth.push_back(*r.truth);
        predicted.push_back(r.predicted);
        scores.push_back(r.score);
    }
    EvalReport rep;
    rep.branch = branch;
    rep.algorithm = algorithm;
    rep.counts = confusion(truth, predicted);
    if (rep.counts.upcalls_total == 0 || rep.counts.nonupcalls_total == 0)
        throw DataError("evaluation needs both upcall and non-upcall segments");
    rep.rates = detection_rates(rep.counts);
    rep.roc = roc_curve(scores, truth);
    rep.auc = narw::auc(rep.roc);
    return rep;
}

/// Segments rejected by the gate (or, on the contour branch, without a candidate object)
/// never reach the classifier; they are predicted non-upcall with score -inf.
inline DetectResult detect_on(const FeatureTable& features, const TrainedModel& model, Algorithm algorithm) {
    if (model.branch != features.branch) throw ConfigError("model was trained on a different feature branch");
    DetectResult out;
    for (std::size_t k = 0; k < features.analyses.size(); ++k) {
        const auto& a = features.analyses[k];
        DetectionRecord r;
        r.source = features.sources[k];
        r.truth = features.labels[k];
        r.gate = a.gate;
        r.candidate = a.candidate;
        r.features = a.features;
        if (!a.gate.pass) ++out.gate_rejected;
        if (a.features) {
            if (a.features->size() != model.model.dim())
                throw ConfigError("feature dimension " + std::to_string(a.features->size()) + " does not match model dimension " +
                                  std::to_string(model.model.dim()));
            const auto p = model.model.predict_score(Eigen::Map<const Eigen::VectorXd>(a.features->data(),
                                                                                        static_cast<Eigen::Index>(a.features->size())));
            ++out.classifier_invocations;
            r.classified = true;
            r.predicted = p.label;
            r.score = p.score;
        }
        out.records.push_back(std::move(r));
    }
    const bool labeled = std::all_of(out.records.begin(), out.records.end(), [](const auto& r) { return r.truth.has_value(); });
    if (labeled && !out.records.empty()) {
        const bool both = std::any_of(out.records.begin(), out.records.end(), [](const auto& r) { return r.truth == Label::upcall; }) &&
                          std::any_of(out.records.begin(), out.records.end(), [](const auto& r) { return r.truth == Label::non_upcall; });
        if (both) out.report = evaluate_records(out.records, features.branch, algorithm);
    }
    return out;
}

inline DetectResult run_detect(const Corpus& corpus, const PipelineConfig& c, const TrainedModel& model) {
    if (model.config_hash != config_hash(c))
        throw ConfigError("model config hash " + model.config_hash + " differs from the active configuration " + config_hash(c));
    if (model.model.algorithm() != c.classifier) throw ConfigError("model algorithm differs from the configured classifier");
    if (model.branch != c.branch) throw ConfigError("model feature branch differs from the configured branch");
    return detect_on(extract_features(corpus, c, model.branch), model, model.model.algorithm());
}

struct CompareReport {
    std::string config_hash;
    std::vector<EvalReport> entries;  // per branch, per classifier
};

/// Trains every classifier on both branches and evaluates on the test corpus.
inline CompareReport run_compare(const Corpus& train, const Corpus& test, const PipelineConfig& c) {
    if (!train.labeled() || !test.labeled()) throw DataError("comparison needs labeled training and test corpora");
    CompareReport rep;
    rep.config_hash = config_hash(c);
    for (FeatureBranch branch : {FeatureBranch::tfp2, FeatureBranch::lbp}) {
        const FeatureTable train_features = extract_features(train, c, branch);
        const FeatureTable test_features = extract_features(test, c, branch);
        for (Algorithm a : kAllAlgorithms) {
            const TrainedModel model = train_on(train_features, c, a);
            auto result = detect_on(test_features, model, a);
            if (!result.report) throw DataError("test corpus must contain both classes");
            rep.entries.push_back(std::move(*result.report));
        }
    }
    return rep;
}

// -- artifacts -------------------------------------------------------------------

namespace detail {

inline std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_num(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return parse_optional_double(s);
}


}  // namespace detail

inline void write_features_csv(std::ostream& out, const FeatureTable& t, const std::string& hash) {
    out << "# narw-features v1 config_hash=" << hash << " branch=" << to_string(t.branch) << '\n';
    const std::size_t dim = [&] {
        for (const auto& a : t.analyses)
            if (a.features) return a.features->size();
        return std::size_t{0};
    }();
    for (std::size_t k = 0; k < dim; ++k) {
        if (t.branch == FeatureBranch::tfp2) out << TFP2::names[k];
        else out << "lbp_" << k;
        out << ',';
    }
    out << "label,source\n";
    for (std::size_t r = 0; r < t.analyses.size(); ++r) {
        if (!t.analyses[r].features) continue;
        for (double v : *t.analyses[r].features) out << detail::num(v) << ',';
        out << (t.labels[r] ? to_string(*t.labels[r]) : "") << ',' << t.sources[r] << '\n';
    }
}

inline constexpr std::string_view kRecordsHeader = "source,label,stage1_pass,stage1_score_db,candidate,classified,predicted,score,features";

inline void write_records_csv(std::ostream& out, const std::vector<DetectionRecord>& records, const std::string& hash,
                              FeatureBranch branch, Algorithm algorithm) {
    out << "# narw-records v1 config_hash=" << hash << " branch=" << to_string(branch) << " classifier=" << to_string(algorithm) << '\n';
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        out << r.source << ',' << (r.truth ? to_string(*r.truth) : "") << ',' << (r.gate.pass ? 1 : 0) << ','
            << detail::num(r.gate.score_db) << ',' << (r.candidate ? to_string(*r.candidate) : "") << ',' << (r.classified ? 1 : 0)
            << ',' << to_string(r.predicted) << ',' << detail::num(r.score) << ',';
        if (r.features)
            for (std::size_t k = 0; k < r.features->size(); ++k) out << (k ? ";" : "") << detail::num((*r.features)[k]);
        out << '\n';
    }
}

struct RecordsFile {
    std::string config_hash;
    FeatureBranch branch = FeatureBranch::lbp;
    Algorithm algorithm = Algorithm::lda;
    std::vector<DetectionRecord> records;
};

inline RecordsFile read_records_csv(std::istream& in) {
    RecordsFile f;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# narw-records v1 ", 0) != 0) throw DataError("not a records file");
    std::istringstream meta(line.substr(18));
    std::string kv;
    while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "config_hash") f.config_hash = value;
        else if (key == "branch") f.branch = parse_branch(value);
        else if (key == "classifier") f.algorithm = parse_algorithm(value);
    }
    if (f.config_hash.empty()) throw DataError("records file lacks a config hash");
    if (!std::getline(in, line) || line != kRecordsHeader) throw DataError("records file has an unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = detail::split_csv_line(line);
        if (c.size() != 9) throw DataError("records file: expected 9 columns");
        DetectionRecord r;
        r.source = c[0];
        if (!c[1].empty()) r.truth = parse_label(c[1]);
        r.gate.pass = c[2] == "1";
        r.gate.score_db = detail::parse_num(c[3]);
        if (c[4] == "no_upcall") r.candidate = CandidateKind::no_upcall;
        else if (c[4] == "single_candidate") r.candidate = CandidateKind::single_candidate;
        else if (c[4] == "merged_candidate") r.candidate = CandidateKind::merged_candidate;
        r.classified = c[5] == "1";
        r.predicted = parse_label(c[6]);
        r.score = detail::parse_num(c[7]);
        if (!c[8].empty()) {
            std::vector<double> feats;
            std::istringstream fs(c[8]);
            std::string v;
            while (std::getline(fs, v, ';')) feats.push_back(detail::parse_num(v));
            r.features = std::move(feats);
        }
        f.records.push_back(std::move(r));
    }
    return f;
}

inline nlohmann::json to_json(const EvalReport& r) {
    return {{"branch", to_string(r.branch)},
            {"classifier", to_string(r.algorithm)},
            {"confusion",
             {{"upcalls_correct", r.counts.upcalls_correct},
              {"upcalls_total", r.counts.upcalls_total},
              {"nonupcalls_correct", r.counts.nonupcalls_correct},
              {"nonupcalls_total", r.counts.nonupcalls_total}}},
            {"upcall_rate", truncate_rate(r.rates.upcall_rate)},
            {"nonupcall_rate", truncate_rate(r.rates.nonupcall_rate)},
            {"overall_rate", truncate_rate(r.rates.overall_rate)},
            {"auc", r.auc}};
}

inline nlohmann::json report_json(const std::string& hash, const std::vector<EvalReport>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) arr.push_back(to_json(e));
    return {{"format", "narw-report"}, {"version", 1}, {"config_hash", hash}, {"entries", arr}};
}

/// Table-shaped summary: one row per branch and classifier.
inline void write_rates_csv(std::ostream& out, const std::string& hash, const std::vector<EvalReport>& entries) {
    out << "# narw-rates v1 config_hash=" << hash << '\n';
    out << "branch,classifier,upcall_rate,nonupcall_rate,overall_rate,auc\n";
    for (const auto& e : entries)
        out << to_string(e.branch) << ',' << display_name(e.algorithm) << ',' << format_rate(e.rates.upcall_rate) << ','
            << format_rate(e.rates.nonupcall_rate) << ',' << format_rate(e.rates.overall_rate) << ',' << detail::num(e.auc) << '\n';
}

inline void write_roc_csv(std::ostream& out, const std::string& hash, const std::vector<EvalReport>& entries) {
    out << "# narw-roc v1 config_hash=" << hash << '\n';
    out << "branch,classifier,fpr,tpr,threshold\n";
    for (const auto& e : entries)
        for (const auto& p : e.roc.points)
            out << to_string(e.branch) << ',' << to_string(e.algorithm) << ',' << detail::num(p.fpr) << ',' << detail::num(p.tpr)
                << ',' << detail::num(p.threshold) << '\n';
}

}  // namespace narw
