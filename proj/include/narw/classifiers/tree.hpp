#pragma once

// CART with Gini impurity, and plain bootstrap aggregation of CART trees.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "narw/classifiers/dataset.hpp"
#include "narw/classifiers/eigen_json.hpp"

namespace narw {

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0;
    int left = -1, right = -1;
    double p_upcall = 0;  // share of upcall training samples reaching the node
};

struct TreeParams {
    int max_depth = 12;
    int min_samples_split = 2;
};

class DecisionTree {
public:
    static DecisionTree train(const Eigen::MatrixXd& z, const std::vector<Label>& labels, const TreeParams& params,
                              std::vector<std::size_t> rows = {}) {
        if (rows.empty()) {
            rows.resize(labels.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        DecisionTree tree;
        Builder b{z, labels, params, tree.nodes_};
        b.grow(rows, 0);
        return tree;
    }

    double score(const Eigen::VectorXd& z) const { return leaf(z).p_upcall; }
    bool votes_upcall(const Eigen::VectorXd& z) const { return leaf(z).p_upcall > 0.5; }

    /// Longest root-to-leaf path in edges.
    int depth() const { return nodes_.empty() ? 0 : depth_from(0); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const TreeNode& n : nodes_) arr.push_back({n.feature, n.threshold, n.left, n.right, n.p_upcall});
        return arr;
    }
    static DecisionTree from_json(const nlohmann::json& j) {
        DecisionTree t;
        for (const auto& e : j)
            t.nodes_.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<int>(), e.at(3).get<int>(), e.at(4).get<double>()});
        if (t.nodes_.empty()) throw DataError("model file: empty tree");
        return t;
    }

private:
    std::vector<TreeNode> nodes_;

    const TreeNode& leaf(const Eigen::VectorXd& z) const {
        std::size_t at = 0;
        while (nodes_[at].feature >= 0)
            at = static_cast<std::size_t>(z(nodes_[at].feature) <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right);
        return nodes_[at];
    }

    int depth_from(std::size_t at) const {
        const TreeNode& n = nodes_[at];
        if (n.feature < 0) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }

    struct Builder {
        const Eigen::MatrixXd& z;
        const std::vector<Label>& labels;
        const TreeParams& params;
        std::vector<TreeNode>& nodes;

        static double gini(double pos, double n) {
            if (n <= 0) return 0;
            const double p = pos / n;
            return 2 * p * (1 - p);
        }

        int grow(std::vector<std::size_t>& rows, int depth) {
            const int id = static_cast<int>(nodes.size());
            nodes.push_back({});
            double pos = 0;
            for (std::size_t r : rows) pos += labels[r] == Label::upcall ? 1 : 0;
            const double n = static_cast<double>(rows.size());
            nodes[static_cast<std::size_t>(id)].p_upcall = pos / n;
            if (pos == 0 || pos == n || depth >= params.max_depth || static_cast<int>(rows.size()) < params.min_samples_split)
                return id;

            // Best split by weighted child Gini; zero-gain splits are allowed so XOR-like
            // structure can still be separated further down.
            double best = std::numeric_limits<double>::infinity();
            int best_feature = -1;
            double best_threshold = 0;
            std::vector<std::size_t> order(rows);
            for (Eigen::Index f = 0; f < z.cols(); ++f) {
                std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    return std::pair(z(static_cast<Eigen::Index>(a), f), a) < std::pair(z(static_cast<Eigen::Index>(b), f), b);
                });
                double left_pos = 0;
                for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                    left_pos += labels[order[k]] == Label::upcall ? 1 : 0;
                    const double v = z(static_cast<Eigen::Index>(order[k]), f);
                    const double next = z(static_cast<Eigen::Index>(order[k + 1]), f);
                    if (!(next > v)) continue;
                    const double nl = static_cast<double>(k + 1), nr = n - nl;
                    const double impurity = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
                    if (impurity < best - 1e-12) {
                        best = impurity;
                        best_feature = static_cast<int>(f);
                        best_threshold = v + 0.5 * (next - v);
                    }
                }
            }
            if (best_feature < 0) return id;  // all samples identical

            std::vector<std::size_t> left, right;
            for (std::size_t r : rows)
                (z(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left : right).push_back(r);
            rows.clear();
            rows.shrink_to_fit();
            const int l = grow(left, depth + 1);
            const int r = grow(right, depth + 1);
            TreeNode& node = nodes[static_cast<std::size_t>(id)];
            node.feature = best_feature;
            node.threshold = best_threshold;
            node.left = l;
            node.right = r;
            return id;
        }
    };
};

/// Deterministic per-tree seed derived from a master seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master + 0x9E3779B97F4A7C15ull * (index + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct BaggerModel {
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> seeds;

    static BaggerModel train(const Eigen::MatrixXd& z, const std::vector<Label>& labels, const TreeParams& params, int count,
                             std::uint64_t master_seed) {
        if (count < 1) throw std::invalid_argument("bagger: need at least one tree");
        BaggerModel m;
        const std::size_t n = labels.size();
        for (int b = 0; b < count; ++b) {
            const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(b));
            std::mt19937_64 rng(seed);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::vector<std::size_t> rows(n);
            for (auto& r : rows) r = pick(rng);
            m.trees.push_back(DecisionTree::train(z, labels, params, std::move(rows)));
            m.seeds.push_back(seed);
        }
        return m;
    }

    /// Fraction of trees voting upcall; neutral point 0.5.
    double score(const Eigen::VectorXd& z) const {
        std::size_t votes = 0;
        for (const auto& t : trees) votes += t.votes_upcall(z) ? 1 : 0;
        return static_cast<double>(votes) / static_cast<double>(trees.size());
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : trees) arr.push_back(t.to_json());
        return {{"trees", arr}, {"seeds", seeds}};
    }
    static BaggerModel from_json(const nlohmann::json& j) {
        BaggerModel m;
        for (const auto& t : j.at("trees")) m.trees.push_back(DecisionTree::from_json(t));
        m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (m.trees.empty()) throw DataError("model file: bagger without trees");
        return m;
    }
};

}  // namespace narw
