#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "narw/classifiers/dataset.hpp"
#include "narw/classifiers/eigen_json.hpp"

namespace narw {

/// k nearest neighbours, Euclidean on standardized features. Equal distances prefer the
/// lower training index.
struct KnnModel {
    Eigen::MatrixXd points;
    std::vector<Label> labels;
    int k = 5;

    static KnnModel train(const Eigen::MatrixXd& z, const std::vector<Label>& labels, int k) {
        if (k < 1) throw std::invalid_argument("knn: k must be positive");
        return {z, labels, k};
    }

    /// Fraction of upcall labels among the k nearest; neutral point 0.5.
    double score(const Eigen::VectorXd& z) const {
        const auto n = static_cast<std::size_t>(points.rows());
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t r = 0; r < n; ++r)
            dist[r] = {(points.row(static_cast<Eigen::Index>(r)).transpose() - z).squaredNorm(), r};
        const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        std::size_t up = 0;
        for (std::size_t q = 0; q < kk; ++q) up += labels[dist[q].second] == Label::upcall ? 1 : 0;
        return static_cast<double>(up) / static_cast<double>(kk);
    }

    nlohmann::json to_json() const {
        std::vector<int> l;
        for (Label x : labels) l.push_back(static_cast<int>(x));
        return {{"k", k}, {"points", detail::to_json(points)}, {"labels", l}};
    }
    static KnnModel from_json(const nlohmann::json& j, Eigen::Index dim) {
        KnnModel m;
        m.k = j.at("k").get<int>();
        m.points = detail::matrix_from_json(j.at("points"), dim);
        for (int v : j.at("labels").get<std::vector<int>>()) m.labels.push_back(v ? Label::upcall : Label::non_upcall);
        if (m.labels.size() != static_cast<std::size_t>(m.points.rows())) throw DataError("model file: knn label count mismatch");
        return m;
    }
};

}  // namespace narw
