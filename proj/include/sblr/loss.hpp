#pragma once

#include <limits>
#include <numbers>

#include "sblr/types.hpp"

namespace sblr {

/* log(1 + exp(-m)) without overflow for large |m|. */
inline double softplus_neg(double m)
{
    return std::max(0.0, -m) + std::log1p(std::exp(-std::abs(m)));
}

inline double l1_norm(const Matrix& m)
{
    return m.cwiseAbs().sum();
}

inline double elastic_net(const Matrix& m, double w1, double w2)
{
    return w1 * l1_norm(m) + 0.5 * w2 * m.squaredNorm();
}

struct LossGradient
{
    Matrix gU;
    Matrix gV;
    double gb = 0.0;
};

namespace detail {

inline void check_shapes(const ModelParams& p, const Dataset& data, const char* who)
{
    if (data.rows() != p.U.rows() || data.cols() != p.V.rows()) {
        throw std::invalid_argument(std::string(who) + ": dataset shape does not match model");
    }
}

/* Sufficient-decrease comparisons tolerate a few ulps so exact ties
 * survive summation noise without letting noise-scale steps through. */
inline bool decrease_ok(double trialLoss, double rhs)
{
    return trialLoss <=
           rhs + 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(rhs));
}

/* Per-sample projections against the fixed factor: X_i V while stepping
 * on U, X_i^T U while stepping on V. A stepsize trial only needs these,
 * so a backtracking ladder can reuse the ones its gradient pass built. */
using Projections = std::vector<Matrix>;

inline double projected_loss_unchecked(const Projections& proj, const std::vector<int>& labels,
                                       const Matrix& factor, double b)
{
    const int n = static_cast<int>(labels.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += softplus_neg(labels[i] * (proj[i].cwiseProduct(factor).sum() + b));
    }
    return acc / n;
}

/* Raw kernels below assume an already validated dataset and model. */

inline double loss_unchecked(const ModelParams& p, const Dataset& data)
{
    double acc = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double m = (data.samples[i] * p.V).cwiseProduct(p.U).sum() + p.b;
        acc += softplus_neg(data.labels[i] * m);
    }
    return acc / data.n();
}

inline double loss_and_gradients_unchecked(const ModelParams& p, const Dataset& data,
                                           LossGradient& g)
{
    const int n = data.n();
    g.gU = Matrix::Zero(p.U.rows(), p.U.cols());
    g.gV = Matrix::Zero(p.V.rows(), p.V.cols());
    g.gb = 0.0;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const Matrix xv = data.samples[i] * p.V;
        const double m = xv.cwiseProduct(p.U).sum() + p.b;
        const double y = data.labels[i];
        acc += softplus_neg(y * m);
        const double c = sigmoid(-y * m) * y / n;
        g.gU.noalias() -= c * xv;
        g.gV.noalias() -= c * (data.samples[i].transpose() * p.U);
        g.gb -= c;
    }
    return acc / n;
}

/* Loss plus the (U, b) partial gradient only; one product per sample.
 * When given somewhere to put them, also hands back the projections. */
inline double loss_and_grad_u_unchecked(const ModelParams& p, const Dataset& data, Matrix& gU,
                                        double& gb, Projections* proj = nullptr)
{
    const int n = data.n();
    gU = Matrix::Zero(p.U.rows(), p.U.cols());
    gb = 0.0;
    if (proj) {
        proj->resize(n);
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        Matrix xv = data.samples[i] * p.V;
        const double m = xv.cwiseProduct(p.U).sum() + p.b;
        const double y = data.labels[i];
        acc += softplus_neg(y * m);
        const double c = sigmoid(-y * m) * y / n;
        gU.noalias() -= c * xv;
        gb -= c;
        if (proj) {
            (*proj)[i] = std::move(xv);
        }
    }
    return acc / n;
}

inline double loss_and_grad_v_unchecked(const ModelParams& p, const Dataset& data, Matrix& gV,
                                        double& gb, Projections* proj = nullptr)
{
    const int n = data.n();
    gV = Matrix::Zero(p.V.rows(), p.V.cols());
    gb = 0.0;
    if (proj) {
        proj->resize(n);
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        Matrix xtu = data.samples[i].transpose() * p.U;
        const double m = xtu.cwiseProduct(p.V).sum() + p.b;
        const double y = data.labels[i];
        acc += softplus_neg(y * m);
        const double c = sigmoid(-y * m) * y / n;
        gV.noalias() -= c * xtu;
        gb -= c;
        if (proj) {
            (*proj)[i] = std::move(xtu);
        }
    }
    return acc / n;
}

/* The Lipschitz caps only need projection norms, so reuse those too. */
inline double lipschitz_from_projections(const Projections& proj)
{
    double acc = 0.0;
    for (const Matrix& p : proj) {
        const double norm = p.norm() + 1.0;
        acc += norm * norm;
    }
    return std::numbers::sqrt2 * acc / static_cast<double>(proj.size());
}

}  // namespace detail

/* Mean logistic loss of the bilinear model over the dataset. */
inline double loss(const ModelParams& p, const Dataset& data)
{
    validate_dataset(data);
    validate_params(p);
    detail::check_shapes(p, data, "loss");
    return detail::loss_unchecked(p, data);
}

inline double objective(const ModelParams& p, const Dataset& data, const RegConfig& reg)
{
    validate_reg(reg);
    return loss(p, data) + elastic_net(p.U, reg.mu1, reg.mu2) +
           elastic_net(p.V, reg.nu1, reg.nu2);
}

/**
 * Partial gradients of the mean logistic loss with respect to U, V and b.
 * Each sample contributes -sigma_i y_i (X_i V, X_i^T U, 1) / n where
 * sigma_i = 1 / (1 + exp(y_i margin_i)), evaluated without overflow.
 */
inline LossGradient gradients(const ModelParams& p, const Dataset& data)
{
    validate_dataset(data);
    validate_params(p);
    detail::check_shapes(p, data, "gradients");
    LossGradient g;
    detail::loss_and_gradients_unchecked(p, data, g);
    return g;
}

/* Loss and gradients at the same point in one pass over the data. */
inline double loss_and_gradients(const ModelParams& p, const Dataset& data, LossGradient& g)
{
    validate_dataset(data);
    validate_params(p);
    detail::check_shapes(p, data, "gradients");
    return detail::loss_and_gradients_unchecked(p, data, g);
}

/**
 * Upper bound on the Lipschitz constant of the (U, b) partial gradient
 * for fixed V: sqrt(2)/n * sum_i (||X_i V||_F + 1)^2. Used as the safe
 * fallback when backtracking exhausts its budget.
 */
inline double lipschitz_u(const Matrix& v, const Dataset& data)
{
    validate_dataset(data);
    if (data.cols() != v.rows()) {
        throw std::invalid_argument("lipschitz_u: V rows must match sample columns");
    }
    double acc = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double norm = (data.samples[i] * v).norm() + 1.0;
        acc += norm * norm;
    }
    return std::numbers::sqrt2 * acc / data.n();
}

/* Mirror of lipschitz_u for the (V, b) block with U fixed. */
inline double lipschitz_v(const Matrix& u, const Dataset& data)
{
    validate_dataset(data);
    if (data.rows() != u.rows()) {
        throw std::invalid_argument("lipschitz_v: U rows must match sample rows");
    }
    double acc = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double norm = (data.samples[i].transpose() * u).norm() + 1.0;
        acc += norm * norm;
    }
    return std::numbers::sqrt2 * acc / data.n();
}

}  // namespace sblr
