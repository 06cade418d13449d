// Command-line front end: synth, features, train, detect, compare, report, config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "narw/pipeline.hpp"

namespace fs = std::filesystem;
using namespace narw;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Options shared by every command that runs the pipeline. Overrides are applied on top
// of the config file, so the recorded hash always describes what actually ran.
struct PipelineOptions {
    std::string config_path;
    std::string branch;
    std::string classifier;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "pipeline configuration JSON (defaults if omitted)");
        cmd->add_option("--branch", branch, "feature branch override: tfp2 or lbp");
        cmd->add_option("--classifier", classifier, "classifier override, e.g. linear_svm");
        cmd->add_option("--seed", seed, "master seed override");
    }

    PipelineConfig resolve() const {
        PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (!branch.empty()) c.branch = parse_branch(branch);
        if (!classifier.empty()) c.classifier = parse_algorithm(classifier);
        if (seed) c.master_seed = *seed;
        validate(c);
        return c;
    }
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { open_out(path) << j.dump(1) << '\n'; }

void print_report(const EvalReport& r) {
    std::printf("%-5s %-15s upcall %6s%%  non-upcall %6s%%  overall %6s%%  AUC %.4f\n", std::string(to_string(r.branch)).c_str(),
                std::string(display_name(r.algorithm)).c_str(), format_rate(r.rates.upcall_rate).c_str(),
                format_rate(r.rates.nonupcall_rate).c_str(), format_rate(r.rates.overall_rate).c_str(), r.auc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage right whale upcall detector"};
    app.require_subcommand(1);

    // synth
    CorpusRecipe recipe;
    std::string synth_out;
    double synth_segment_s = 3.0;
    auto* synth = app.add_subcommand("synth", "write a labeled synthetic WAV corpus with manifest.csv");
    synth->add_option("-o,--out", synth_out, "output corpus directory")->required();
    synth->add_option("--upcalls", recipe.upcalls)->check(CLI::NonNegativeNumber);
    synth->add_option("--humpback", recipe.humpback)->check(CLI::NonNegativeNumber);
    synth->add_option("--tonal", recipe.tonal)->check(CLI::NonNegativeNumber);
    synth->add_option("--ambient", recipe.ambient)->check(CLI::NonNegativeNumber);
    synth->add_option("--snr-lo", recipe.snr_lo_db, "lowest SNR in dB");
    synth->add_option("--snr-hi", recipe.snr_hi_db, "highest SNR in dB");
    synth->add_option("--seed", recipe.seed);
    synth->add_option("--segment-s", synth_segment_s, "segment length in seconds");

    // features
    PipelineOptions feat_opts;
    std::string feat_corpus, feat_out;
    auto* features = app.add_subcommand("features", "extract per-segment features to CSV");
    feat_opts.attach(features);
    features->add_option("--corpus", feat_corpus)->required();
    features->add_option("-o,--out", feat_out)->required();

    // train
    PipelineOptions train_opts;
    std::string train_corpus, train_out;
    auto* train_cmd = app.add_subcommand("train", "train the configured classifier and save the model");
    train_opts.attach(train_cmd);
    train_cmd->add_option("--corpus", train_corpus)->required();
    train_cmd->add_option("-o,--out", train_out, "model JSON path")->required();

    // detect
    PipelineOptions detect_opts;
    std::string detect_corpus, detect_model, detect_out, detect_report, detect_roc;
    auto* detect = app.add_subcommand("detect", "run both stages over a corpus with a trained model");
    detect_opts.attach(detect);
    detect->add_option("--corpus", detect_corpus)->required();
    detect->add_option("-m,--model", detect_model)->required();
    detect->add_option("-o,--out", detect_out, "records CSV path")->required();
    detect->add_option("--report", detect_report, "report JSON path (labeled corpora only)");
    detect->add_option("--roc", detect_roc, "ROC CSV path (labeled corpora only)");

    // compare
    PipelineOptions compare_opts;
    std::string compare_corpus, compare_test, compare_out;
    std::uint64_t split_seed = 1;
    auto* compare = app.add_subcommand("compare", "train and evaluate every classifier on both feature branches");
    compare_opts.attach(compare);
    compare->add_option("--corpus", compare_corpus, "training corpus, or the whole corpus when --test is absent")->required();
    compare->add_option("--test", compare_test, "held-out test corpus");
    compare->add_option("--split-seed", split_seed, "seed of the stratified half split used without --test");
    compare->add_option("-o,--out-dir", compare_out, "directory for rates.csv, roc.csv and report.json")->required();

    // report
    std::vector<std::string> report_inputs;
    std::string report_out, report_rates, report_roc;
    auto* report = app.add_subcommand("report", "summarize one or more records files");
    report->add_option("records", report_inputs, "records CSV files")->required();
    report->add_option("-o,--out", report_out, "report JSON path")->required();
    report->add_option("--rates", report_rates, "rates CSV path");
    report->add_option("--roc", report_roc, "ROC CSV path");

    // config
    PipelineOptions config_opts;
    std::string config_out;
    auto* config = app.add_subcommand("config", "write the effective configuration as JSON");
    config_opts.attach(config);
    config->add_option("-o,--out", config_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*synth) {
            if (!(recipe.snr_lo_db <= recipe.snr_hi_db)) throw ConfigError("--snr-lo must not exceed --snr-hi");
            if (!(synth_segment_s > 0)) throw ConfigError("--segment-s must be positive");
            const Corpus c = synth_corpus(recipe, synth_segment_s);
            write_corpus(synth_out, c);
            std::printf("wrote %zu segments to %s\n", c.size(), synth_out.c_str());
        } else if (*features) {
            const PipelineConfig c = feat_opts.resolve();
            const FeatureTable t = extract_features(load_corpus(feat_corpus), c, c.branch);
            auto out = open_out(feat_out);
            write_features_csv(out, t, config_hash(c));
            std::size_t rows = 0;
            for (const auto& a : t.analyses) rows += a.features ? 1 : 0;
            std::printf("%zu of %zu segments reached feature extraction (%s)\n", rows, t.analyses.size(), std::string(to_string(c.branch)).c_str());
        } else if (*train_cmd) {
            const PipelineConfig c = train_opts.resolve();
            const TrainedModel m = run_train(load_corpus(train_corpus), c);
            if (fs::path(train_out).has_parent_path()) fs::create_directories(fs::path(train_out).parent_path());
            save_model(train_out, m);
            std::printf("trained %s on %s features (%zu dims), config %s\n", std::string(to_string(c.classifier)).c_str(),
                        std::string(to_string(c.branch)).c_str(), m.model.dim(), m.config_hash.c_str());
        } else if (*detect) {
            const PipelineConfig c = detect_opts.resolve();
            const TrainedModel model = load_model(detect_model);
            const DetectResult r = run_detect(load_corpus(detect_corpus), c, model);
            const std::string hash = config_hash(c);
            auto out = open_out(detect_out);
            write_records_csv(out, r.records, hash, model.branch, model.model.algorithm());
            std::printf("%zu segments: %zu rejected by stage 1, %zu classified\n", r.records.size(), r.gate_rejected, r.classifier_invocations);
            if ((!detect_report.empty() || !detect_roc.empty()) && !r.report)
                throw DataError("--report/--roc need a corpus labeled with both classes");
            if (r.report) {
                print_report(*r.report);
                if (!detect_report.empty()) write_json(detect_report, report_json(hash, {*r.report}));
                if (!detect_roc.empty()) {
                    auto roc = open_out(detect_roc);
                    write_roc_csv(roc, hash, {*r.report});
                }
            }
        } else if (*compare) {
            const PipelineConfig c = compare_opts.resolve();
            const Corpus all = load_corpus(compare_corpus);
            CompareReport rep;
            if (compare_test.empty()) {
                const auto [train, test] = split_corpus(all, split_seed);
                rep = run_compare(train, test, c);
            } else {
                rep = run_compare(all, load_corpus(compare_test), c);
            }
            const fs::path dir(compare_out);
            write_json(dir / "report.json", report_json(rep.config_hash, rep.entries));
            auto rates = open_out(dir / "rates.csv");
            write_rates_csv(rates, rep.config_hash, rep.entries);
            auto roc = open_out(dir / "roc.csv");
            write_roc_csv(roc, rep.config_hash, rep.entries);
            for (const auto& e : rep.entries) print_report(e);
        } else if (*report) {
            std::string hash;
            std::vector<EvalReport> entries;
            for (const auto& path : report_inputs) {
                std::ifstream in(path);
                if (!in) throw DataError("cannot open records file " + path);
                const RecordsFile f = read_records_csv(in);
                if (hash.empty()) hash = f.config_hash;
                if (f.config_hash != hash)
                    throw DataError("records file " + path + " has config hash " + f.config_hash + ", expected " + hash +
                                    "; outputs from different configurations cannot share a report");
                entries.push_back(evaluate_records(f.records, f.branch, f.algorithm));
            }
            write_json(report_out, report_json(hash, entries));
            if (!report_rates.empty()) {
                auto out = open_out(report_rates);
                write_rates_csv(out, hash, entries);
            }
            if (!report_roc.empty()) {
                auto out = open_out(report_roc);
                write_roc_csv(out, hash, entries);
            }
            for (const auto& e : entries) print_report(e);
        } else if (*config) {
            const PipelineConfig c = config_opts.resolve();
            write_json(config_out, to_json(c));
            std::printf("config hash %s\n", config_hash(c).c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
