#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "narw/error.hpp"
#include "narw/signal_io.hpp"

namespace narw {

/// Training or evaluation samples; one row of `features` per label.
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<Label> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
    std::size_t count(Label l) const {
        std::size_t n = 0;
        for (Label x : labels) n += x == l ? 1 : 0;
        return n;
    }
};

inline Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::vector<Label> labels) {
    if (rows.size() != labels.size()) throw DataError("dataset: feature rows and labels differ in length");
    Dataset ds;
    ds.labels = std::move(labels);
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != d) throw DataError("dataset: ragged feature rows");
        for (std::size_t c = 0; c < d; ++c) ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return ds;
}

/// Throws DataError for mismatched sizes, non-finite values or a missing class.
inline void validate_training(const Dataset& ds) {
    if (static_cast<std::size_t>(ds.features.rows()) != ds.labels.size())
        throw DataError("dataset: feature rows and labels differ in length");
    if (ds.features.cols() == 0) throw DataError("dataset: no feature columns");
    if (!ds.features.allFinite()) throw DataError("dataset: non-finite feature value");
    if (ds.count(Label::upcall) == 0 || ds.count(Label::non_upcall) == 0)
        throw DataError("dataset: training requires at least one sample of each class");
}

/// Per-column z-scoring captured at training time. Constant columns keep unit scale.
struct FeatureScaling {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static FeatureScaling fit(const Eigen::MatrixXd& x) {
        FeatureScaling s;
        s.mean = x.colwise().mean().transpose();
        s.scale.resize(x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double var = (x.col(c).array() - s.mean(c)).square().mean();
            const double sd = std::sqrt(var);
            s.scale(c) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(c))) ? sd : 1.0;
        }
        return s;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return (x - mean).cwiseQuotient(scale); }

    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd out = x.rowwise() - mean.transpose();
        for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) /= scale(c);
        return out;
    }
};

inline double sign_of(Label l) { return l == Label::upcall ? 1.0 : -1.0; }

}  // namespace narw
