#pragma once

// Soft-margin SVM trained in the dual by sequential minimal optimization with
// second-order working-set selection.
//
//   max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//   s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0
//
// Iteration stops once the maximal KKT violation m(a) - M(a) drops to the tolerance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "narw/classifiers/dataset.hpp"
#include "narw/classifiers/eigen_json.hpp"
#include "narw/classifiers/kernel.hpp"
#include "narw/error.hpp"

namespace narw {

struct SvmParams {
    double c = 1.0;
    double tolerance = 1e-3;
    long max_iterations = 1'000'000;
};

struct SvmModel {
    KernelSpec kernel;
    double c = 1.0;
    Eigen::MatrixXd support;       // support vectors (standardized), one per row
    Eigen::VectorXd coefficients;  // alpha_i * y_i for each support vector
    double bias = 0;
    Eigen::VectorXd weights;  // primal weights, linear kernel only
    // Training diagnostics.
    double dual_objective = 0;
    long iterations = 0;
    Eigen::VectorXd alpha;  // full dual vector over the training set

    void finalize() {
        if (kernel.kind == KernelSpec::Kind::linear) weights = support.transpose() * coefficients;
    }

    /// Signed margin f(z) = sum_i alpha_i y_i K(x_i, z) + b; neutral point 0.
    double score(const Eigen::VectorXd& z) const {
        if (kernel.kind == KernelSpec::Kind::linear) return weights.dot(z) + bias;
        double f = bias;
        for (Eigen::Index s = 0; s < support.rows(); ++s) f += coefficients(s) * kernel_eval(kernel, support.row(s).transpose(), z);
        return f;
    }

    static SvmModel train(const Eigen::MatrixXd& z, const std::vector<Label>& labels, const KernelSpec& kernel,
                          const SvmParams& params) {
        validate(kernel);
        if (!(params.c > 0) || !(params.tolerance > 0)) throw std::invalid_argument("svm: C and tolerance must be positive");
        const Eigen::Index n = z.rows();
        const double C = params.c;
        constexpr double tau = 1e-12;

        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = sign_of(labels[static_cast<std::size_t>(i)]);
        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = kernel_eval(kernel, z.row(i).transpose(), z.row(j).transpose());

        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a
        auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0); };
        auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C); };
        auto Q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * K(i, j); };

        long iter = 0;
        while (true) {
            Eigen::Index i = -1;
            double m_up = -std::numeric_limits<double>::infinity();
            for (Eigen::Index t = 0; t < n; ++t)
                if (in_up(t) && -y(t) * grad(t) > m_up) {
                    m_up = -y(t) * grad(t);
                    i = t;
                }
            Eigen::Index j = -1;
            double m_low = std::numeric_limits<double>::infinity();
            double best_gain = std::numeric_limits<double>::infinity();
            for (Eigen::Index t = 0; t < n; ++t) {
                if (!in_low(t)) continue;
                const double v = -y(t) * grad(t);
                m_low = std::min(m_low, v);
                if (i < 0 || v >= m_up) continue;
                const double b = m_up - v;
                double a = K(i, i) + K(t, t) - 2 * K(i, t);
                if (a <= 0) a = tau;
                const double gain = -(b * b) / a;
                if (gain <= best_gain) {
                    best_gain = gain;
                    j = t;
                }
            }
            if (i < 0 || j < 0 || m_up - m_low <= params.tolerance) break;
            if (++iter > params.max_iterations)
                throw ConvergenceError("svm: no convergence within " + std::to_string(params.max_iterations) + " iterations");

            const double ai = alpha(i), aj = alpha(j);
            if (y(i) != y(j)) {
                double quad = K(i, i) + K(j, j) - 2 * K(i, j);  // Q_ij = -K_ij when the labels differ
                if (quad <= 0) quad = tau;
                const double delta = (-grad(i) - grad(j)) / quad;
                const double diff = alpha(i) - alpha(j);
                alpha(i) += delta;
                alpha(j) += delta;
                if (diff > 0) {
                    if (alpha(j) < 0) {
                        alpha(j) = 0;
                        alpha(i) = diff;
                    }
                } else if (alpha(i) < 0) {
                    alpha(i) = 0;
                    alpha(j) = -diff;
                }
                if (diff > 0) {
                    if (alpha(i) > C) {
                        alpha(i) = C;
                        alpha(j) = C - diff;
                    }
                } else if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = C + diff;
                }
            } else {
                double quad = K(i, i) + K(j, j) - 2 * K(i, j);
                if (quad <= 0) quad = tau;
                const double delta = (grad(i) - grad(j)) / quad;
                const double sum = alpha(i) + alpha(j);
                alpha(i) -= delta;
                alpha(j) += delta;
                if (sum > C) {
                    if (alpha(i) > C) {
                        alpha(i) = C;
                        alpha(j) = sum - C;
                    }
                } else if (alpha(j) < 0) {
                    alpha(j) = 0;
                    alpha(i) = sum;
                }
                if (sum > C) {
                    if (alpha(j) > C) {
                        alpha(j) = C;
                        alpha(i) = sum - C;
                    }
                } else if (alpha(i) < 0) {
                    alpha(i) = 0;
                    alpha(j) = sum;
                }
            }
            const double di = alpha(i) - ai, dj = alpha(j) - aj;
            for (Eigen::Index t = 0; t < n; ++t) grad(t) += Q(t, i) * di + Q(t, j) * dj;
        }

        // Offset: mean over free vectors, else the midpoint of the feasible interval.
        double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity(), sum_free = 0;
        int free = 0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double yg = y(t) * grad(t);
            if (alpha(t) > 0 && alpha(t) < C) {
                sum_free += yg;
                ++free;
            } else if ((alpha(t) >= C && y(t) < 0) || (alpha(t) <= 0 && y(t) > 0)) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        }
        const double rho = free > 0 ? sum_free / free : 0.5 * (ub + lb);

        SvmModel m;
        m.kernel = kernel;
        m.c = C;
        m.bias = -rho;
        m.iterations = iter;
        m.alpha = alpha;
        m.dual_objective = 0.5 * alpha.dot(Eigen::VectorXd::Ones(n) - grad);
        std::vector<Eigen::Index> sv;
        for (Eigen::Index t = 0; t < n; ++t)
            if (alpha(t) > 0) sv.push_back(t);
        m.support.resize(static_cast<Eigen::Index>(sv.size()), z.cols());
        m.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
        for (std::size_t s = 0; s < sv.size(); ++s) {
            m.support.row(static_cast<Eigen::Index>(s)) = z.row(sv[s]);
            m.coefficients(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * y(sv[s]);
        }
        m.finalize();
        return m;
    }

    nlohmann::json to_json() const {
        return {{"kernel", {{"kind", to_string(kernel.kind)}, {"gamma", kernel.gamma}, {"degree", kernel.degree}, {"coef0", kernel.coef0}}},
                {"C", c},
                {"bias", bias},
                {"support", detail::to_json(support)},
                {"coefficients", detail::to_json(coefficients)},
                {"dual_objective", dual_objective},
                {"iterations", iterations}};
    }
    static SvmModel from_json(const nlohmann::json& j, Eigen::Index dim) {
        SvmModel m;
        const auto& k = j.at("kernel");
        const auto kind = k.at("kind").get<std::string>();
        if (kind == "linear") m.kernel.kind = KernelSpec::Kind::linear;
        else if (kind == "rbf") m.kernel.kind = KernelSpec::Kind::rbf;
        else if (kind == "polynomial") m.kernel.kind = KernelSpec::Kind::polynomial;
        else throw DataError("model file: unknown kernel '" + kind + "'");
        m.kernel.gamma = k.at("gamma").get<double>();
        m.kernel.degree = k.at("degree").get<int>();
        m.kernel.coef0 = k.at("coef0").get<double>();
        m.c = j.at("C").get<double>();
        m.bias = j.at("bias").get<double>();
        m.support = detail::matrix_from_json(j.at("support"), dim);
        m.coefficients = detail::vector_from_json(j.at("coefficients"));
        m.dual_objective = j.at("dual_objective").get<double>();
        m.iterations = j.at("iterations").get<long>();
        if (m.coefficients.size() != m.support.rows()) throw DataError("model file: svm coefficient count mismatch");
        m.finalize();
        return m;
    }
};

}  // namespace narw
