#pragma once

// Detection rates, ROC curves from a descending score-threshold sweep, and
// trapezoidal AUC with tied scores grouped.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "narw/signal_io.hpp"

namespace narw {

struct ConfusionCounts {
    long upcalls_correct = 0;
    long upcalls_total = 0;
    long nonupcalls_correct = 0;
    long nonupcalls_total = 0;
};

struct RateReport {
    double upcall_rate = 0;
    double nonupcall_rate = 0;
    double overall_rate = 0;
};

inline RateReport detection_rates(const ConfusionCounts& c) {
    if (c.upcalls_total <= 0 || c.nonupcalls_total <= 0) throw std::invalid_argument("detection_rates: class totals must be positive");
    if (c.upcalls_correct < 0 || c.nonupcalls_correct < 0 || c.upcalls_correct > c.upcalls_total ||
        c.nonupcalls_correct > c.nonupcalls_total)
        throw std::invalid_argument("detection_rates: correct counts must lie in [0, total]");
    return {100.0 * static_cast<double>(c.upcalls_correct) / static_cast<double>(c.upcalls_total),
            100.0 * static_cast<double>(c.nonupcalls_correct) / static_cast<double>(c.nonupcalls_total),
            100.0 * static_cast<double>(c.upcalls_correct + c.nonupcalls_correct) /
                static_cast<double>(c.upcalls_total + c.nonupcalls_total)};
}

inline ConfusionCounts confusion(const std::vector<Label>& truth, const std::vector<Label>& predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] == Label::upcall) {
            ++c.upcalls_total;
            c.upcalls_correct += predicted[k] == Label::upcall ? 1 : 0;
        } else {
            ++c.nonupcalls_total;
            c.nonupcalls_correct += predicted[k] == Label::non_upcall ? 1 : 0;
        }
    }
    return c;
}

/// Percentages are cut (not rounded) to two decimals, so 2191/2301 renders as 95.21.
/// The small slack absorbs products like 0.29 * 100 landing just under an exact cent.
inline double truncate_rate(double rate) { return std::floor(rate * 100.0 + 1e-7) / 100.0; }

inline std::string format_rate(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", truncate_rate(rate));
    return buf;
}

struct RocPoint {
    double fpr = 0;
    double tpr = 0;
    double threshold = 0;  // predictions with score >= threshold count as positive
};

struct ROCCurve {
    std::vector<RocPoint> points;
};

namespace detail {

inline void check_scores(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc: scores and labels differ in length");
    const auto pos = std::count(labels.begin(), labels.end(), Label::upcall);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
        throw std::invalid_argument("roc: both classes must be present");
    for (double s : scores)
        if (std::isnan(s)) throw std::invalid_argument("roc: NaN score");
}

}  // namespace detail

/// Starts at (0, 0) with threshold +inf, then one point per distinct score in descending order.
inline ROCCurve roc_curve(const std::vector<double>& scores, const std::vector<Label>& labels) {
    detail::check_scores(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto P = static_cast<double>(std::count(labels.begin(), labels.end(), Label::upcall));
    const auto N = static_cast<double>(labels.size()) - P;

    ROCCurve roc;
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    double tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double s = scores[order[k]];
        while (k < order.size() && scores[order[k]] == s) {
            (labels[order[k]] == Label::upcall ? tp : fp) += 1;
            ++k;
        }
        roc.points.push_back({fp / N, tp / P, s});
    }
    return roc;
}

inline double auc(const ROCCurve& roc) {
    double area = 0;
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
        const auto& a = roc.points[k - 1];
        const auto& b = roc.points[k];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2;
    }
    return area;
}

inline double auc(const std::vector<double>& scores, const std::vector<Label>& labels) { return auc(roc_curve(scores, labels)); }

}  // namespace narw
