#pragma once

#include <cmath>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

namespace narw {

struct KernelSpec {
    enum class Kind { linear, rbf, polynomial };
    Kind kind = Kind::linear;
    double gamma = 1.0;  // rbf
    int degree = 3;      // polynomial
    double coef0 = 1.0;  // polynomial

    static KernelSpec linear() { return {}; }
    static KernelSpec rbf(double gamma) { return {Kind::rbf, gamma, 3, 1.0}; }
    static KernelSpec polynomial(int degree, double coef0) { return {Kind::polynomial, 1.0, degree, coef0}; }
};

inline std::string_view to_string(KernelSpec::Kind k) {
    switch (k) {
        case KernelSpec::Kind::linear: return "linear";
        case KernelSpec::Kind::rbf: return "rbf";
        case KernelSpec::Kind::polynomial: return "polynomial";
    }
    return "?";
}

inline void validate(const KernelSpec& k) {
    if (k.kind == KernelSpec::Kind::rbf && !(k.gamma > 0)) throw std::invalid_argument("kernel: rbf gamma must be positive");
    if (k.kind == KernelSpec::Kind::polynomial && k.degree < 2) throw std::invalid_argument("kernel: polynomial degree must be >= 2");
}

template <typename A, typename B>
double kernel_eval(const KernelSpec& k, const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
    switch (k.kind) {
        case KernelSpec::Kind::linear: return a.dot(b);
        case KernelSpec::Kind::rbf: return std::exp(-k.gamma * (a - b).squaredNorm());
        case KernelSpec::Kind::polynomial: return std::pow(a.dot(b) + k.coef0, k.degree);
    }
    return 0.0;
}

}  // namespace narw
