#pragma once

#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "narw/error.hpp"

namespace narw::detail {

inline nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Eigen::VectorXd row = m.row(r).transpose();
        rows.push_back(to_json(row));
    }
    return rows;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto row = j.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("model file: matrix row has wrong length");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

}  // namespace narw::detail
