#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sblr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/* A labeled collection of equally sized matrix samples. */
struct Dataset
{
    std::vector<Matrix> samples;
    std::vector<int> labels;

    int n() const { return static_cast<int>(samples.size()); }
    int rows() const { return samples.empty() ? 0 : static_cast<int>(samples.front().rows()); }
    int cols() const { return samples.empty() ? 0 : static_cast<int>(samples.front().cols()); }
};

inline void validate_dataset(const Dataset& data)
{
    if (data.samples.size() != data.labels.size()) {
        throw std::invalid_argument("dataset: sample count and label count differ");
    }
    if (data.samples.empty()) {
        throw std::invalid_argument("dataset: empty");
    }
    const auto s = data.samples.front().rows();
    const auto t = data.samples.front().cols();
    if (s < 1 || t < 1) {
        throw std::invalid_argument("dataset: samples must be non-empty matrices");
    }
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const Matrix& x = data.samples[i];
        if (x.rows() != s || x.cols() != t) {
            throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                        " has inconsistent shape");
        }
        if (!x.allFinite()) {
            throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                        " contains non-finite entries");
        }
        if (data.labels[i] == 0) {
            throw std::invalid_argument("dataset: label " + std::to_string(i) + " is zero");
        }
    }
}

/* Binary classifiers require labels in {-1, +1}. */
inline void require_binary_labels(const Dataset& data)
{
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] != 1 && data.labels[i] != -1) {
            throw std::invalid_argument("dataset: label " + std::to_string(i) +
                                        " is not in {-1,+1}");
        }
    }
}

/**
 * Factored bilinear model. U is s x r, V is t x r, so the effective
 * weight matrix U V^T has rank at most r. The intercept b is unpenalized.
 */
struct ModelParams
{
    Matrix U;
    Matrix V;
    double b = 0.0;

    int rank() const { return static_cast<int>(U.cols()); }
};

inline void validate_params(const ModelParams& p)
{
    if (p.U.cols() != p.V.cols()) {
        throw std::invalid_argument("params: U and V must share the inner dimension");
    }
    if (p.U.cols() < 1) {
        throw std::invalid_argument("params: rank must be >= 1");
    }
    if (p.U.cols() > std::min(p.U.rows(), p.V.rows())) {
        throw std::invalid_argument("params: rank exceeds min(s, t)");
    }
    if (!p.U.allFinite() || !p.V.allFinite() || !std::isfinite(p.b)) {
        throw std::invalid_argument("params: non-finite entries");
    }
}

inline ModelParams make_model_params(Matrix u, Matrix v, double b)
{
    ModelParams p{std::move(u), std::move(v), b};
    validate_params(p);
    return p;
}

/* Elastic-net weights for the two factors plus the factor rank. */
struct RegConfig
{
    double mu1 = 0.0;
    double mu2 = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    int rank = 1;
};

inline void validate_reg(const RegConfig& reg)
{
    if (reg.mu1 < 0 || reg.mu2 < 0 || reg.nu1 < 0 || reg.nu2 < 0) {
        throw std::invalid_argument("reg: penalty weights must be non-negative");
    }
    if (reg.rank < 1) {
        throw std::invalid_argument("reg: rank must be >= 1");
    }
}

inline Matrix materialize_weight_matrix(const ModelParams& p)
{
    return p.U * p.V.transpose();
}

/* Decision value for one sample: trace(U^T x V) + b. */
inline double margin(const ModelParams& p, const Matrix& x)
{
    if (x.rows() != p.U.rows() || x.cols() != p.V.rows()) {
        throw std::invalid_argument("margin: sample shape does not match model");
    }
    return (x * p.V).cwiseProduct(p.U).sum() + p.b;
}

inline double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Prediction
{
    int label = 0;
    double probability = 0.0;   // P(label = +1)
};

inline Prediction predict(const ModelParams& p, const Matrix& x)
{
    const double m = margin(p, x);
    return Prediction{m >= 0.0 ? 1 : -1, sigmoid(m)};
}

enum class MulticlassMode
{
    OneVsAll,
    Multinomial
};

/**
 * Multi-class container. In one-vs-all mode there is one parameter block
 * per class. In multinomial mode `classes` holds all m+1 class ids but
 * only m parameter blocks are stored; the last class is pinned to zero.
 */
struct MulticlassModel
{
    std::vector<int> classes;
    std::vector<ModelParams> perClassParams;
    MulticlassMode mode = MulticlassMode::OneVsAll;
};

inline void validate_multiclass_model(const MulticlassModel& m)
{
    if (m.classes.size() < 2) {
        throw std::invalid_argument("multiclass model: need at least two classes");
    }
    const std::size_t expected =
        m.mode == MulticlassMode::OneVsAll ? m.classes.size() : m.classes.size() - 1;
    if (m.perClassParams.size() != expected) {
        throw std::invalid_argument("multiclass model: parameter block count mismatch");
    }
    for (const auto& p : m.perClassParams) {
        validate_params(p);
    }
}

}  // namespace sblr
