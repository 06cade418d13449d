#include <gtest/gtest.h>

#include <random>
#include <set>

#include "narw/lbp.hpp"
#include "oracles/lbp_bits.hpp"

using namespace narw;

namespace {

Grid<double> grid_from(const std::vector<std::vector<double>>& rows) {
    Grid<double> g(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[0].size(); ++c) g(r, c) = rows[r][c];
    return g;
}

std::vector<std::vector<double>> random_rows(std::mt19937& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
    for (auto& r : out)
        for (double& v : r) v = u(rng);
    return out;
}

Spectrogram spec_from(const Grid<double>& g) { return {g, {}, 0}; }

std::uint32_t from_bits(const char* s) {
    std::uint32_t v = 0;
    for (; *s; ++s) v = (v << 1) | (*s == '1' ? 1u : 0u);
    return v;
}

}  // namespace

TEST(LbpLabel, ConstantPatchIsZero) {
    const Grid<double> g = grid_from({{3, 3, 3}, {3, 3, 3}, {3, 3, 3}});
    EXPECT_EQ(lbp_label(g, 1, 1, {}), 0u);
}

TEST(LbpLabel, BrighterRingSetsEveryBit) {
    const Grid<double> g = grid_from({{6, 6, 6}, {6, 5, 6}, {6, 6, 6}});
    EXPECT_EQ(lbp_label(g, 1, 1, {}), 255u);
}

TEST(LbpLabel, DeclaredBitOrder) {
    // A single brighter pixel on an axis sets its own bit plus the two interpolated
    // diagonal neighbours that lean toward it.
    // +time neighbour (next row, same column) owns bit 0.
    EXPECT_EQ(lbp_label(grid_from({{0, 0, 0}, {0, 0, 0}, {0, 1, 0}}), 1, 1, {}), 0b10000011u);
    // +frequency neighbour (same row, next column) is a quarter turn away: bit 2.
    EXPECT_EQ(lbp_label(grid_from({{0, 0, 0}, {0, 0, 1}, {0, 0, 0}}), 1, 1, {}), 0b00001110u);
    // -time owns bit 4 and -frequency bit 6.
    EXPECT_EQ(lbp_label(grid_from({{0, 1, 0}, {0, 0, 0}, {0, 0, 0}}), 1, 1, {}), 0b00111000u);
    EXPECT_EQ(lbp_label(grid_from({{0, 0, 0}, {1, 0, 0}, {0, 0, 0}}), 1, 1, {}), 0b11100000u);
    // A bright corner pixel is seen only by the diagonal neighbour between +time and +frequency.
    EXPECT_EQ(lbp_label(grid_from({{0, 0, 0}, {0, 0, 0}, {0, 0, 1}}), 1, 1, {}), 0b00000010u);
}

TEST(LbpLabel, MatchesPerBitOracle) {
    std::mt19937 rng(31);
    for (const auto& [P, R] : std::vector<std::pair<int, double>>{{8, 1.0}, {8, 2.0}, {16, 2.0}, {4, 1.0}, {12, 1.5}}) {
        const auto rows = random_rows(rng, 9, 9);
        const Grid<double> g = grid_from(rows);
        LBPConfig cfg;
        cfg.points = P;
        cfg.radius = R;
        const int b = lbp_border(cfg);
        for (int t = b; t < 9 - b; ++t)
            for (int f = b; f < 9 - b; ++f) EXPECT_EQ(lbp_label(g, t, f, cfg), oracle::lbp_code(rows, t, f, P, R)) << P << "," << R;
    }
}

TEST(LbpLabel, RejectsBorderPositions) {
    const Grid<double> g(5, 5, 0.0);
    EXPECT_THROW(lbp_label(g, 0, 2, {}), std::invalid_argument);
    EXPECT_THROW(lbp_label(g, 2, 4, {}), std::invalid_argument);
    LBPConfig r2;
    r2.radius = 2;
    EXPECT_THROW(lbp_label(g, 1, 2, r2), std::invalid_argument);
    EXPECT_NO_THROW(lbp_label(g, 2, 2, r2));
}

TEST(Transitions, CircularCount) {
    EXPECT_EQ(transition_count(from_bits("11100011"), 8), 2);
    EXPECT_EQ(transition_count(from_bits("00000110"), 8), 2);
    EXPECT_EQ(transition_count(0, 8), 0);
    EXPECT_EQ(transition_count(255, 8), 0);
    EXPECT_EQ(transition_count(from_bits("01010101"), 8), 8);
    EXPECT_EQ(transition_count(from_bits("10000000"), 8), 2);
}

TEST(Transitions, InvariantUnderRotation) {
    for (int P : {4, 8, 12}) {
        const std::uint32_t mask = (1u << P) - 1u;
        for (std::uint32_t code = 0; code <= mask; ++code) {
            const std::uint32_t rot = ((code << 1) | (code >> (P - 1))) & mask;
            EXPECT_EQ(transition_count(code, P), transition_count(rot, P));
        }
    }
}

TEST(UniformTable, BinCounts) {
    EXPECT_EQ(build_u2_table(8).bin_count, 59);
    EXPECT_EQ(build_u2_table(16).bin_count, 243);
    EXPECT_EQ(build_u2_table(4).bin_count, 15);
}

TEST(UniformTable, FourPointTableByEnumeration) {
    // Uniform 4-bit codes: everything except 0101 and 1010.
    const UniformTable t = build_u2_table(4);
    std::set<int> uniform_bins;
    for (std::uint32_t c = 0; c < 16; ++c) {
        if (c == 0b0101 || c == 0b1010) {
            EXPECT_EQ(t.bin_of[c], 14);
        } else {
            EXPECT_TRUE(uniform_bins.insert(t.bin_of[c]).second);
        }
    }
    EXPECT_EQ(uniform_bins.size(), 14u);
}

TEST(UniformTable, SurjectiveAndCollapsesOnlyNonUniform) {
    for (int P : {4, 6, 8, 10}) {
        const UniformTable t = build_u2_table(P);
        EXPECT_EQ(t.bin_count, P * (P - 1) + 3);
        std::set<int> hit;
        for (std::uint32_t c = 0; c < (1u << P); ++c) {
            hit.insert(t.bin_of[c]);
            EXPECT_EQ(t.bin_of[c] == t.nonuniform_bin(), transition_count(c, P) > 2);
        }
        EXPECT_EQ(static_cast<int>(hit.size()), t.bin_count);
    }
}

TEST(LbpImage, ConstantImageIsAllZeroLabels) {
    LBPConfig raw;
    raw.uniform_u2 = false;
    const LBPImage img = lbp_image(spec_from(Grid<double>(10, 12, 1.5)), raw);
    EXPECT_EQ(img.labels.rows(), 8u);
    EXPECT_EQ(img.labels.cols(), 10u);
    for (int v : img.labels.data()) EXPECT_EQ(v, 0);
}

TEST(LbpImage, EqualsCellwiseLabels) {
    std::mt19937 rng(4);
    const Grid<double> g = grid_from(random_rows(rng, 20, 16));
    const UniformTable table = build_u2_table(8);
    LBPConfig raw;
    raw.uniform_u2 = false;
    const LBPImage a = lbp_image(spec_from(g), raw);
    const LBPImage b = lbp_image(spec_from(g), {});
    for (int t = 1; t < 19; ++t)
        for (int f = 1; f < 15; ++f) {
            const auto code = lbp_label(g, t, f, raw);
            EXPECT_EQ(a.labels(t - 1, f - 1), static_cast<int>(code));
            EXPECT_EQ(b.labels(t - 1, f - 1), table.bin_of[code]);
        }
}

TEST(LbpImage, InvariantUnderMonotoneTransform) {
    std::mt19937 rng(9);
    const Grid<double> g = grid_from(random_rows(rng, 24, 24));
    Grid<double> h = g;
    for (double& v : h.data()) v = std::exp(3 * v) + 7;
    // The transform is not affine, so interpolated neighbours may order differently; use
    // grid-aligned sampling (P=4, R=1) where every comparison reads a real pixel.
    LBPConfig cfg;
    cfg.points = 4;
    EXPECT_EQ(lbp_image(spec_from(g), cfg).labels, lbp_image(spec_from(h), cfg).labels);
    // For (8,1) an increasing affine map keeps every interpolated comparison.
    for (double& v : h.data()) v = 0;
    for (std::size_t k = 0; k < g.size(); ++k) h.data()[k] = 2.5 * g.data()[k] - 4;
    EXPECT_EQ(regional_histograms(lbp_image(spec_from(g), {}), {}), regional_histograms(lbp_image(spec_from(h), {}), {}));
}

TEST(LbpImage, RejectsTinyImages) { EXPECT_THROW(lbp_image(spec_from(Grid<double>(3, 10, 0.0)), {}), std::invalid_argument); }

TEST(Histograms, DefaultLengthIs236) {
    EXPECT_EQ(lbp_feature_length({}), 236u);
    std::mt19937 rng(1);
    const auto feat = regional_histograms(lbp_image(spec_from(grid_from(random_rows(rng, 30, 30))), {}), {});
    EXPECT_EQ(feat.size(), 236u);
    for (int j = 0; j < 4; ++j) {
        double s = 0;
        for (int i = 0; i < 59; ++i) s += feat[static_cast<std::size_t>(j * 59 + i)];
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Histograms, UnnormalizedMassCountsLabeledPixels) {
    std::mt19937 rng(2);
    LBPConfig cfg;
    cfg.normalize_histograms = false;
    cfg.regions_t = 3;
    cfg.regions_f = 2;
    const LBPImage img = lbp_image(spec_from(grid_from(random_rows(rng, 23, 17))), cfg);
    const auto feat = regional_histograms(img, cfg);
    double total = 0;
    for (double v : feat) total += v;
    EXPECT_EQ(total, 21.0 * 15.0);
    // Remainder rows go to the last region: 21 rows in 3 regions of 7; 15 columns as 7 + 8.
    double first = 0, last = 0;
    for (int i = 0; i < 59; ++i) {
        first += feat[static_cast<std::size_t>(i)];
        last += feat[static_cast<std::size_t>(5 * 59 + i)];
    }
    EXPECT_EQ(first, 7.0 * 7.0);
    EXPECT_EQ(last, 7.0 * 8.0);
}

TEST(Histograms, RawLengthIsRegionsTimesTwoToP) {
    LBPConfig cfg;
    cfg.uniform_u2 = false;
    EXPECT_EQ(lbp_feature_length(cfg), 4u * 256u);
    std::mt19937 rng(5);
    EXPECT_EQ(regional_histograms(lbp_image(spec_from(grid_from(random_rows(rng, 12, 12))), cfg), cfg).size(), 1024u);
}

TEST(Histograms, ConstantImageMassInCodeZeroBin) {
    LBPConfig cfg;
    cfg.regions_t = 1;
    cfg.regions_f = 1;
    const auto feat = regional_histograms(lbp_image(spec_from(Grid<double>(8, 8, 2.0)), cfg), cfg);
    const int zero_bin = build_u2_table(8).bin_of[0];
    EXPECT_DOUBLE_EQ(feat[static_cast<std::size_t>(zero_bin)], 1.0);
}

TEST(Histograms, TooManyRegionsIsAnError) {
    LBPConfig cfg;
    cfg.regions_t = 10;
    EXPECT_THROW(regional_histograms(lbp_image(spec_from(Grid<double>(6, 6, 0.0)), cfg), cfg), std::invalid_argument);
}
