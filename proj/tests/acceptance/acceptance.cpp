// Prints one PASS/FAIL line per acceptance criterion and exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "narw/pipeline.hpp"
#include "oracles/flood_fill.hpp"
#include "oracles/pairwise_auc.hpp"
#include "oracles/svm_dual.hpp"

using namespace narw;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Transition count by walking the bits one at a time, independent of the library's rotate-and-xor.
int transitions_by_walk(std::uint32_t code, int p) {
    int changes = 0;
    for (int k = 0; k < p; ++k) changes += ((code >> k) & 1u) != ((code >> ((k + 1) % p)) & 1u);
    return changes;
}

Outcome c1_u2_bins() {
    const auto t0 = Clock::now();
    const int b8 = build_u2_table(8).bin_count, b16 = build_u2_table(16).bin_count, b4 = build_u2_table(4).bin_count;
    int enumerated4 = 1;
    for (std::uint32_t c = 0; c < 16; ++c) enumerated4 += transitions_by_walk(c, 4) <= 2;
    const double dt = seconds_since(t0);
    return {b8 == 59 && b16 == 243 && b4 == enumerated4 && dt < 1.0,
            "P=8 -> " + std::to_string(b8) + ", P=16 -> " + std::to_string(b16) + ", P=4 -> " + std::to_string(b4) + " (enumerated " +
                std::to_string(enumerated4) + "), " + fmt("%.3f s", dt)};
}

Outcome c2_uniform_prevalence() {
    // Twenty upcalls drawn like the training corpus, measured on the LBP branch input.
    CorpusRecipe r;
    r.upcalls = 20;
    r.humpback = r.tonal = r.ambient = 0;
    r.seed = 2024;
    const PipelineConfig c;
    double lo = 1, sum = 0;
    for (const auto& item : synth_corpus(r).items) {
        const Spectrogram band = normalized_equalized(bandpass_crop(stft(item.audio, c.spectrogram), 80, 320), c);
        const double u = uniform_fraction(lbp_image(band, c.lbp), c.lbp.points);
        lo = std::min(lo, u);
        sum += u;
    }
    return {lo >= 0.85, "uniform share mean " + fmt("%.4f", sum / 20) + ", min " + fmt("%.4f", lo) + " (floor 0.85)"};
}

std::vector<std::vector<int>> random_image(std::mt19937& rng, double density) {
    std::bernoulli_distribution on(density);
    std::vector<std::vector<int>> img(32, std::vector<int>(32));
    for (auto& row : img)
        for (int& v : row) v = on(rng);
    return img;
}

BinaryImage to_binary(const std::vector<std::vector<int>>& img) {
    BinaryImage b{Grid<std::uint8_t>(32, 32, 0), {51.0 / 2000.0, 7.8125, 0.0}};
    for (std::size_t r = 0; r < 32; ++r)
        for (std::size_t c = 0; c < 32; ++c) b.bits(r, c) = static_cast<std::uint8_t>(img[r][c]);
    return b;
}

std::vector<std::vector<std::vector<int>>> random_images() {
    std::mt19937 rng(31337);
    std::vector<std::vector<std::vector<int>>> out;
    for (int n = 0; n < 200; ++n) out.push_back(random_image(rng, 0.15 + 0.6 * (n % 5) / 4.0));
    return out;
}

Outcome c3_components() {
    int matches = 0;
    for (const auto& img : random_images()) {
        oracle::Partition mine;
        for (const Blob& b : label_components(to_binary(img))) {
            std::set<oracle::Pixel> comp;
            for (const Cell& c : b.pixels) comp.insert({c.t, c.i});
            mine.insert(comp);
        }
        matches += mine == oracle::flood_fill_components(img);
    }
    return {matches == 200, std::to_string(matches) + "/200 partitions equal the flood-fill oracle"};
}

Outcome c4_boundaries() {
    long tours = 0, bad_pixels = 0, open_tours = 0;
    for (const auto& raw : random_images()) {
        const BinaryImage img = to_binary(raw);
        for (const Blob& b : label_components(img)) {
            ++tours;
            const auto tour = trace_boundary(img, b);
            for (const Cell& c : tour) {
                bool exposed = false;
                for (int dt = -1; dt <= 1; ++dt)
                    for (int di = -1; di <= 1; ++di) exposed = exposed || ((dt || di) && !img.on(c.t + dt, c.i + di));
                bad_pixels += !(img.on(c.t, c.i) && exposed);
            }
            // A closed tour starts at the topmost-leftmost pixel and every step, last to first included, is 8-adjacent.
            bool closed = !tour.empty() && tour.front() == b.pixels.front();
            for (std::size_t k = 0; closed && tour.size() > 1 && k < tour.size(); ++k) {
                const Cell a = tour[k], n = tour[(k + 1) % tour.size()];
                closed = std::max(std::abs(a.t - n.t), std::abs(a.i - n.i)) == 1;
            }
            open_tours += !closed;
        }
    }
    return {bad_pixels == 0 && open_tours == 0, std::to_string(tours) + " tours, " + std::to_string(bad_pixels) +
                                                    " non-boundary pixels, " + std::to_string(open_tours) + " open tours"};
}

Outcome c5_normalization() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    double worst_mean = 0, worst_std = 0, constant_abs = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Spectrogram s{Grid<double>(60, 40), {}, 0};
        for (std::size_t t = 0; t < 60; ++t)
            for (std::size_t i = 0; i < 40; ++i) s.values(t, i) = i % 7 == 3 ? -42.0 + trial : 30 * g(rng) - 80 + static_cast<double>(i);
        const Spectrogram z = normalize(s);
        for (std::size_t i = 0; i < 40; ++i) {
            double m = 0, v = 0;
            for (std::size_t t = 0; t < 60; ++t) m += z.values(t, i);
            m /= 60;
            for (std::size_t t = 0; t < 60; ++t) v += (z.values(t, i) - m) * (z.values(t, i) - m);
            if (i % 7 == 3) {
                for (std::size_t t = 0; t < 60; ++t) constant_abs = std::max(constant_abs, std::abs(z.values(t, i)));
            } else {
                worst_mean = std::max(worst_mean, std::abs(m));
                worst_std = std::max(worst_std, std::abs(std::sqrt(v / 60) - 1));
            }
        }
    }
    return {worst_mean < 1e-9 && worst_std <= 1e-9 && constant_abs == 0.0,
            "max |mean| " + fmt("%.2e", worst_mean) + ", max |std-1| " + fmt("%.2e", worst_std) + ", constant-band max " +
                fmt("%.1f", constant_abs)};
}

Outcome c6_auc() {
    std::mt19937_64 rng(6);
    double worst = 0;
    for (int set = 0; set < 100; ++set) {
        const int n = 2 + static_cast<int>(rng() % 99);
        std::uniform_int_distribution<int> coarse(0, 1 + set % 20);
        std::vector<double> scores;
        std::vector<Label> labels;
        for (int k = 0; k < n; ++k) {
            scores.push_back(coarse(rng) * 0.5);
            labels.push_back(k == 0 || (k != 1 && rng() % 2) ? Label::upcall : Label::non_upcall);
        }
        std::vector<double> pos, neg;
        for (int k = 0; k < n; ++k) (labels[static_cast<std::size_t>(k)] == Label::upcall ? pos : neg).push_back(scores[static_cast<std::size_t>(k)]);
        worst = std::max(worst, std::abs(auc(scores, labels) - oracle::pairwise_auc(pos, neg)));
    }
    return {worst <= 1e-12, "max |trapezoid - pairwise| over 100 sets " + fmt("%.2e", worst)};
}

Outcome c7_rates() {
    const auto lda = detection_rates({560, 699, 2191, 2301});
    const auto svm = detection_rates({632, 699, 1, 1});
    const std::string u = format_rate(lda.upcall_rate), n = format_rate(lda.nonupcall_rate), o = format_rate(lda.overall_rate),
                      s = format_rate(svm.upcall_rate);
    return {u == "80.11" && n == "95.21" && o == "91.70" && s == "90.41", u + " / " + n + " / " + o + ", " + s};
}

Outcome c8_svm_dual() {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    const std::vector<KernelSpec> kernels{KernelSpec::linear(), KernelSpec::rbf(0.5), KernelSpec::polynomial(2, 1.0), KernelSpec::rbf(2.0),
                                          KernelSpec::linear()};
    const std::vector<double> costs{10.0, 1.0, 0.5, 5.0, 0.1};
    double worst_gap = 0, worst_kkt = 0;
    for (std::size_t p = 0; p < 5; ++p) {
        const int n = 4 + static_cast<int>(p % 3);
        Eigen::MatrixXd z(n, 2);
        Eigen::VectorXd y(n);
        std::vector<Label> labels;
        for (int i = 0; i < n; ++i) {
            const bool up = i % 2 == 1;
            z(i, 0) = g(rng) + (up ? 0.7 : -0.7);
            z(i, 1) = g(rng);
            y(i) = up ? 1 : -1;
            labels.push_back(up ? Label::upcall : Label::non_upcall);
        }
        const SvmModel m = SvmModel::train(z, labels, kernels[p], {costs[p], 1e-6, 1'000'000});
        Eigen::MatrixXd K(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) K(i, j) = kernel_eval(kernels[p], z.row(i).transpose(), z.row(j).transpose());
        worst_gap = std::max(worst_gap, std::abs(m.dual_objective - oracle::brute_force_dual(K, y, costs[p]).objective));
        for (int i = 0; i < n; ++i) {
            const double margin = y(i) * m.score(z.row(i).transpose()), a = m.alpha(i);
            const double r = a <= 0 ? std::max(0.0, 1 - margin) : a >= m.c ? std::max(0.0, margin - 1) : std::abs(margin - 1);
            worst_kkt = std::max(worst_kkt, r);
        }
    }
    return {worst_gap <= 1e-4 && worst_kkt <= 1e-3, "max dual gap " + fmt("%.2e", worst_gap) + ", max KKT residual " + fmt("%.2e", worst_kkt)};
}

CorpusRecipe benchmark_recipe(std::uint64_t seed) {
    CorpusRecipe r;  // 100 upcalls, 100 humpback, 100 tonal + 100 ambient noise, SNR 5-15 dB
    r.seed = seed;
    return r;
}

struct Benchmark {
    CompareReport report;
    double gate_noise_reject = 0, gate_upcall_pass = 0;
    double seconds = 0;
};

Benchmark run_benchmark() {
    const auto t0 = Clock::now();
    const PipelineConfig c;
    const Corpus train = synth_corpus(benchmark_recipe(11));
    const Corpus test = synth_corpus(benchmark_recipe(22));
    Benchmark b;
    b.report = run_compare(train, test, c);
    long noise = 0, rejected = 0, upcalls = 0, passed = 0;
    for (const auto& item : test.items) {
        const bool pass = stage1_gate(stft(item.audio, c.spectrogram), c.gate).pass;
        if (item.entry.cls == SynthClass::tonal_noise || item.entry.cls == SynthClass::ambient_noise) {
            ++noise;
            rejected += !pass;
        } else if (item.entry.cls == SynthClass::upcall) {
            ++upcalls;
            passed += pass;
        }
    }
    b.gate_noise_reject = static_cast<double>(rejected) / static_cast<double>(noise);
    b.gate_upcall_pass = static_cast<double>(passed) / static_cast<double>(upcalls);
    b.seconds = seconds_since(t0);
    return b;
}

const EvalReport& entry(const CompareReport& r, FeatureBranch b, Algorithm a) {
    for (const auto& e : r.entries)
        if (e.branch == b && e.algorithm == a) return e;
    throw std::logic_error("missing comparison entry");
}

Outcome c9_benchmark(const Benchmark& b) {
    bool ok = b.gate_noise_reject >= 0.90 && b.gate_upcall_pass >= 0.95 && b.seconds < 180;
    std::string d = "gate rejects " + fmt("%.1f%%", 100 * b.gate_noise_reject) + " noise, passes " + fmt("%.1f%%", 100 * b.gate_upcall_pass) +
                    " upcalls;";
    for (FeatureBranch br : {FeatureBranch::tfp2, FeatureBranch::lbp})
        for (Algorithm a : {Algorithm::lda, Algorithm::linear_svm}) {
            const auto& e = entry(b.report, br, a);
            ok = ok && e.rates.overall_rate >= 90.0 && e.auc >= 0.95;
            d += " " + std::string(to_string(br)) + "/" + std::string(to_string(a)) + " " + format_rate(e.rates.overall_rate) + "% AUC " +
                 fmt("%.3f", e.auc) + ";";
        }
    return {ok, d + " " + fmt("%.1f s", b.seconds)};
}

Outcome c10_direction(const Benchmark& b) {
    const double lbp = entry(b.report, FeatureBranch::lbp, Algorithm::linear_svm).rates.overall_rate;
    const double tfp2 = entry(b.report, FeatureBranch::tfp2, Algorithm::linear_svm).rates.overall_rate;
    return {lbp >= tfp2, "linear SVM overall: lbp " + format_rate(lbp) + "%, tfp2 " + format_rate(tfp2) + "%"};
}

Outcome c11_determinism(const Benchmark& first) {
    const Benchmark second = run_benchmark();
    const std::string a = report_json(first.report.config_hash, first.report.entries).dump(1);
    const std::string b = report_json(second.report.config_hash, second.report.entries).dump(1);
    return {a == b, std::to_string(a.size()) + "-byte report JSON, " + (a == b ? "identical" : "different") + " across two runs"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    };
    report(1, "u2 bin counts", c1_u2_bins);
    report(2, "uniform pattern prevalence", c2_uniform_prevalence);
    report(3, "component labeling vs flood fill", c3_components);
    report(4, "Moore boundary validity", c4_boundaries);
    report(5, "normalization contract", c5_normalization);
    report(6, "AUC vs pairwise oracle", c6_auc);
    report(7, "rate arithmetic", c7_rates);
    report(8, "SVM dual vs brute force", c8_svm_dual);
    std::optional<Benchmark> bench;
    try {
        bench = run_benchmark();
    } catch (const std::exception& e) {
        std::printf("benchmark failed: %s\n", e.what());
    }
    auto needs_bench = [&](const std::function<Outcome(const Benchmark&)>& f) {
        return [&, f] { return bench ? f(*bench) : Outcome{false, "benchmark did not run"}; };
    };
    report(9, "end-to-end synthetic benchmark", needs_bench(c9_benchmark));
    report(10, "LBP at least TFP-2 for linear SVM", needs_bench(c10_direction));
    report(11, "full-pipeline determinism", needs_bench(c11_determinism));
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
