#pragma once

// Gaussian discriminant analysis: LDA (pooled covariance) and QDA (per-class covariance),
// maximum-likelihood fits on standardized features.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "narw/classifiers/dataset.hpp"
#include "narw/classifiers/eigen_json.hpp"

namespace narw {

namespace detail {

// Adds eps*I (eps = 1e-6 * trace / dim) when the covariance is near-singular.
inline Eigen::MatrixXd regularized(Eigen::MatrixXd cov) {
    const Eigen::Index d = cov.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (hi <= 0 || lo <= 1e-10 * hi) {
        double eps = 1e-6 * cov.trace() / static_cast<double>(d);
        if (!(eps > 0)) eps = 1e-6;
        cov.diagonal().array() += eps;
    }
    return cov;
}

struct ClassStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd scatter;  // sum of outer products about the class mean
    std::size_t n = 0;
};

inline ClassStats class_stats(const Eigen::MatrixXd& z, const std::vector<Label>& labels, Label which) {
    ClassStats s;
    s.mean = Eigen::VectorXd::Zero(z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        if (labels[static_cast<std::size_t>(r)] == which) {
            s.mean += z.row(r).transpose();
            ++s.n;
        }
    s.mean /= static_cast<double>(s.n);
    s.scatter = Eigen::MatrixXd::Zero(z.cols(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        if (labels[static_cast<std::size_t>(r)] == which) {
            const Eigen::VectorXd d = z.row(r).transpose() - s.mean;
            s.scatter.selfadjointView<Eigen::Lower>().rankUpdate(d);
        }
    s.scatter = s.scatter.selfadjointView<Eigen::Lower>();
    return s;
}

}  // namespace detail

struct LdaModel {
    Eigen::VectorXd mean_non_upcall, mean_upcall;
    Eigen::MatrixXd precision;  // inverse pooled covariance
    double prior_upcall = 0.5;
    // Derived: score = w.z + b
    Eigen::VectorXd w;
    double b = 0;

    void finalize() {
        w = precision * (mean_upcall - mean_non_upcall);
        b = -0.5 * (mean_upcall.dot(precision * mean_upcall) - mean_non_upcall.dot(precision * mean_non_upcall)) +
            std::log(prior_upcall / (1 - prior_upcall));
    }

    static LdaModel train(const Eigen::MatrixXd& z, const std::vector<Label>& labels) {
        const auto pos = detail::class_stats(z, labels, Label::upcall);
        const auto neg = detail::class_stats(z, labels, Label::non_upcall);
        const Eigen::MatrixXd pooled = (pos.scatter + neg.scatter) / static_cast<double>(pos.n + neg.n);
        LdaModel m;
        m.mean_upcall = pos.mean;
        m.mean_non_upcall = neg.mean;
        m.prior_upcall = static_cast<double>(pos.n) / static_cast<double>(pos.n + neg.n);
        m.precision = detail::regularized(pooled).ldlt().solve(Eigen::MatrixXd::Identity(z.cols(), z.cols()));
        m.finalize();
        return m;
    }

    /// Discriminant difference delta_upcall - delta_non_upcall; neutral point 0.
    double score(const Eigen::VectorXd& z) const { return w.dot(z) + b; }

    nlohmann::json to_json() const {
        return {{"mean_non_upcall", detail::to_json(mean_non_upcall)},
                {"mean_upcall", detail::to_json(mean_upcall)},
                {"precision", detail::to_json(precision)},
                {"prior_upcall", prior_upcall}};
    }
    static LdaModel from_json(const nlohmann::json& j) {
        LdaModel m;
        m.mean_non_upcall = detail::vector_from_json(j.at("mean_non_upcall"));
        m.mean_upcall = detail::vector_from_json(j.at("mean_upcall"));
        m.precision = detail::matrix_from_json(j.at("precision"), m.mean_upcall.size());
        m.prior_upcall = j.at("prior_upcall").get<double>();
        m.finalize();
        return m;
    }
};

struct QdaModel {
    struct Component {
        Eigen::VectorXd mean;
        Eigen::MatrixXd precision;
        double log_det = 0;
        double log_prior = 0;

        double discriminant(const Eigen::VectorXd& z) const {
            const Eigen::VectorXd d = z - mean;
            return -0.5 * log_det - 0.5 * d.dot(precision * d) + log_prior;
        }
    };
    Component non_upcall, upcall;

    static Component fit(const detail::ClassStats& s, std::size_t total) {
        Component c;
        c.mean = s.mean;
        const Eigen::MatrixXd cov = detail::regularized(s.scatter / static_cast<double>(s.n));
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        c.precision = ldlt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
        c.log_det = ldlt.vectorD().array().log().sum();
        c.log_prior = std::log(static_cast<double>(s.n) / static_cast<double>(total));
        return c;
    }

    static QdaModel train(const Eigen::MatrixXd& z, const std::vector<Label>& labels) {
        const auto pos = detail::class_stats(z, labels, Label::upcall);
        const auto neg = detail::class_stats(z, labels, Label::non_upcall);
        return {fit(neg, labels.size()), fit(pos, labels.size())};
    }

    double score(const Eigen::VectorXd& z) const { return upcall.discriminant(z) - non_upcall.discriminant(z); }

    static nlohmann::json component_json(const Component& c) {
        return {{"mean", detail::to_json(c.mean)},
                {"precision", detail::to_json(c.precision)},
                {"log_det", c.log_det},
                {"log_prior", c.log_prior}};
    }
    static Component component_from_json(const nlohmann::json& j) {
        Component c;
        c.mean = detail::vector_from_json(j.at("mean"));
        c.precision = detail::matrix_from_json(j.at("precision"), c.mean.size());
        c.log_det = j.at("log_det").get<double>();
        c.log_prior = j.at("log_prior").get<double>();
        return c;
    }
    nlohmann::json to_json() const { return {{"non_upcall", component_json(non_upcall)}, {"upcall", component_json(upcall)}}; }
    static QdaModel from_json(const nlohmann::json& j) {
        return {component_from_json(j.at("non_upcall")), component_from_json(j.at("upcall"))};
    }
};

}  // namespace narw
