#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "json.hpp"
#include "narw/classifiers/dataset.hpp"
#include "narw/classifiers/discriminant.hpp"
#include "narw/classifiers/knn.hpp"
#include "narw/classifiers/svm.hpp"
#include "narw/classifiers/tree.hpp"
#include "narw/error.hpp"

namespace narw {

enum class Algorithm { lda, qda, knn, decision_tree, linear_svm, rbf_svm, polynomial_svm, tree_bagger };

inline constexpr std::array<Algorithm, 8> kAllAlgorithms{Algorithm::lda,        Algorithm::qda,     Algorithm::knn,
                                                         Algorithm::decision_tree, Algorithm::linear_svm, Algorithm::rbf_svm,
                                                         Algorithm::polynomial_svm, Algorithm::tree_bagger};

inline std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::lda: return "lda";
        case Algorithm::qda: return "qda";
        case Algorithm::knn: return "knn";
        case Algorithm::decision_tree: return "decision_tree";
        case Algorithm::linear_svm: return "linear_svm";
        case Algorithm::rbf_svm: return "rbf_svm";
        case Algorithm::polynomial_svm: return "polynomial_svm";
        case Algorithm::tree_bagger: return "tree_bagger";
    }
    return "?";
}

/// Row names as they appear in comparison tables.
inline std::string_view display_name(Algorithm a) {
    switch (a) {
        case Algorithm::lda: return "LDA";
        case Algorithm::qda: return "QDA";
        case Algorithm::knn: return "KNN";
        case Algorithm::decision_tree: return "Decision Tree";
        case Algorithm::linear_svm: return "Linear SVM";
        case Algorithm::rbf_svm: return "RBF SVM";
        case Algorithm::polynomial_svm: return "Polynomial SVM";
        case Algorithm::tree_bagger: return "TreeBagger";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view text) {
    for (Algorithm a : kAllAlgorithms)
        if (text == to_string(a)) return a;
    throw ConfigError("unknown classifier '" + std::string(text) + "'");
}

struct Hyperparameters {
    int knn_k = 5;
    int tree_max_depth = 12;
    int tree_min_samples_split = 2;
    int bagger_trees = 50;
    double svm_c = 1.0;
    double rbf_gamma = 0.0;  // 0 selects 1 / dimension
    int poly_degree = 3;
    double poly_coef0 = 1.0;
    double svm_tolerance = 1e-3;
    long svm_max_iterations = 1'000'000;
    std::uint64_t seed = 1;
};

inline nlohmann::json to_json(const Hyperparameters& h) {
    return {{"knn_k", h.knn_k},
            {"tree_max_depth", h.tree_max_depth},
            {"tree_min_samples_split", h.tree_min_samples_split},
            {"bagger_trees", h.bagger_trees},
            {"svm_c", h.svm_c},
            {"rbf_gamma", h.rbf_gamma},
            {"poly_degree", h.poly_degree},
            {"poly_coef0", h.poly_coef0},
            {"svm_tolerance", h.svm_tolerance},
            {"svm_max_iterations", h.svm_max_iterations},
            {"seed", h.seed}};
}

inline Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
    Hyperparameters h;
    h.knn_k = j.value("knn_k", h.knn_k);
    h.tree_max_depth = j.value("tree_max_depth", h.tree_max_depth);
    h.tree_min_samples_split = j.value("tree_min_samples_split", h.tree_min_samples_split);
    h.bagger_trees = j.value("bagger_trees", h.bagger_trees);
    h.svm_c = j.value("svm_c", h.svm_c);
    h.rbf_gamma = j.value("rbf_gamma", h.rbf_gamma);
    h.poly_degree = j.value("poly_degree", h.poly_degree);
    h.poly_coef0 = j.value("poly_coef0", h.poly_coef0);
    h.svm_tolerance = j.value("svm_tolerance", h.svm_tolerance);
    h.svm_max_iterations = j.value("svm_max_iterations", h.svm_max_iterations);
    h.seed = j.value("seed", h.seed);
    return h;
}

inline KernelSpec kernel_for(Algorithm a, const Hyperparameters& h, std::size_t dim) {
    switch (a) {
        case Algorithm::linear_svm: return KernelSpec::linear();
        case Algorithm::rbf_svm: return KernelSpec::rbf(h.rbf_gamma > 0 ? h.rbf_gamma : 1.0 / static_cast<double>(dim));
        case Algorithm::polynomial_svm: return KernelSpec::polynomial(h.poly_degree, h.poly_coef0);
        default: throw std::invalid_argument("kernel_for: not an SVM algorithm");
    }
}

struct Prediction {
    Label label = Label::non_upcall;
    double score = 0;  // larger is more upcall-like
};

/// A trained classifier; immutable once returned by train().
class ClassifierModel {
public:
    using Params = std::variant<LdaModel, QdaModel, KnnModel, DecisionTree, SvmModel, BaggerModel>;

    Algorithm algorithm() const { return algorithm_; }
    const Hyperparameters& hyperparameters() const { return hyper_; }
    const FeatureScaling& scaling() const { return scaling_; }
    std::size_t dim() const { return static_cast<std::size_t>(scaling_.mean.size()); }
    const Params& params() const { return params_; }

    template <typename T>
    const T& as() const {
        return std::get<T>(params_);
    }

    /// Score above the algorithm's neutral point means upcall.
    double neutral_point() const {
        switch (algorithm_) {
            case Algorithm::knn:
            case Algorithm::decision_tree:
            case Algorithm::tree_bagger: return 0.5;
            default: return 0.0;
        }
    }

    Prediction predict_score(const Eigen::VectorXd& x) const {
        if (static_cast<std::size_t>(x.size()) != dim())
            throw DataError("predict: feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                            std::to_string(dim()));
        const Eigen::VectorXd z = scaling_.apply(x);
        const double s = std::visit([&](const auto& m) { return m.score(z); }, params_);
        return {s > neutral_point() ? Label::upcall : Label::non_upcall, s};
    }

    static ClassifierModel train(const Dataset& ds, Algorithm algorithm, const Hyperparameters& hyper) {
        validate_training(ds);
        ClassifierModel m;
        m.algorithm_ = algorithm;
        m.hyper_ = hyper;
        m.scaling_ = FeatureScaling::fit(ds.features);
        const Eigen::MatrixXd z = m.scaling_.apply_rows(ds.features);
        const TreeParams tree{hyper.tree_max_depth, hyper.tree_min_samples_split};
        switch (algorithm) {
            case Algorithm::lda: m.params_ = LdaModel::train(z, ds.labels); break;
            case Algorithm::qda: m.params_ = QdaModel::train(z, ds.labels); break;
            case Algorithm::knn: m.params_ = KnnModel::train(z, ds.labels, hyper.knn_k); break;
            case Algorithm::decision_tree: m.params_ = DecisionTree::train(z, ds.labels, tree); break;
            case Algorithm::tree_bagger: m.params_ = BaggerModel::train(z, ds.labels, tree, hyper.bagger_trees, hyper.seed); break;
            case Algorithm::linear_svm:
            case Algorithm::rbf_svm:
            case Algorithm::polynomial_svm:
                m.params_ = SvmModel::train(z, ds.labels, kernel_for(algorithm, hyper, ds.dim()),
                                            {hyper.svm_c, hyper.svm_tolerance, hyper.svm_max_iterations});
                break;
        }
        return m;
    }

    static constexpr int kFormatVersion = 1;

    nlohmann::json to_json() const {
        nlohmann::json params = std::visit([](const auto& p) { return p.to_json(); }, params_);
        return {{"format", "narw-classifier"},
                {"version", kFormatVersion},
                {"algorithm", to_string(algorithm_)},
                {"hyperparameters", narw::to_json(hyper_)},
                {"seed", hyper_.seed},
                {"scaling", {{"mean", detail::to_json(scaling_.mean)}, {"scale", detail::to_json(scaling_.scale)}}},
                {"params", params}};
    }

    static ClassifierModel from_json(const nlohmann::json& j) {
        try {
            if (j.at("format").get<std::string>() != "narw-classifier") throw DataError("not a classifier model file");
            if (j.at("version").get<int>() != kFormatVersion)
                throw DataError("unsupported model format version " + std::to_string(j.at("version").get<int>()));
            ClassifierModel m;
            m.algorithm_ = parse_algorithm(j.at("algorithm").get<std::string>());
            m.hyper_ = hyperparameters_from_json(j.at("hyperparameters"));
            m.scaling_.mean = detail::vector_from_json(j.at("scaling").at("mean"));
            m.scaling_.scale = detail::vector_from_json(j.at("scaling").at("scale"));
            if (m.scaling_.mean.size() != m.scaling_.scale.size()) throw DataError("model file: scaling size mismatch");
            const auto dim = m.scaling_.mean.size();
            const auto& p = j.at("params");
            switch (m.algorithm_) {
                case Algorithm::lda: m.params_ = LdaModel::from_json(p); break;
                case Algorithm::qda: m.params_ = QdaModel::from_json(p); break;
                case Algorithm::knn: m.params_ = KnnModel::from_json(p, dim); break;
                case Algorithm::decision_tree: m.params_ = DecisionTree::from_json(p); break;
                case Algorithm::tree_bagger: m.params_ = BaggerModel::from_json(p); break;
                default: m.params_ = SvmModel::from_json(p, dim); break;
            }
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed model file: ") + e.what());
        } catch (const ConfigError& e) {
            throw DataError(std::string("malformed model file: ") + e.what());
        }
    }

private:
    Algorithm algorithm_ = Algorithm::lda;
    Hyperparameters hyper_;
    FeatureScaling scaling_;
    Params params_;
};

inline ClassifierModel train(const Dataset& ds, Algorithm algorithm, const Hyperparameters& hyper = {}) {
    return ClassifierModel::train(ds, algorithm, hyper);
}

inline Prediction predict_score(const ClassifierModel& model, const Eigen::VectorXd& x) { return model.predict_score(x); }

}  // namespace narw
