#pragma once

#include "sblr/solver_bcpd.hpp"

namespace sblr {

/* Logistic regression on vec(X); the common baseline the bilinear model
 * is compared against. */
struct LinearModel
{
    Vector w;
    double b = 0.0;
};

struct LinearFitConfig
{
    double tol = 1e-4;        // optimality-residual target
    double objTol = 1e-10;    // relative objective-change floor
    int maxIter = 10000;
    bool acceleration = true;
    StepsizePolicy policy;
};

inline void validate_linear_config(const LinearFitConfig& config)
{
    if (!(config.tol > 0.0) || !(config.objTol > 0.0)) {
        throw std::invalid_argument("linear fit: tolerances must be positive");
    }
    if (config.maxIter < 1) {
        throw std::invalid_argument("linear fit: maxIter must be >= 1");
    }
    validate_policy(config.policy);
}

/* Row-major flattening: entry (j, k) lands at index j * t + k. */
inline Vector vectorize(const Matrix& x)
{
    Vector v(x.size());
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        for (Eigen::Index k = 0; k < x.cols(); ++k) {
            v(idx++) = x(j, k);
        }
    }
    return v;
}

inline Matrix devectorize(const Vector& v, int s, int t)
{
    if (v.size() != static_cast<Eigen::Index>(s) * t) {
        throw std::invalid_argument("devectorize: size mismatch");
    }
    Matrix x(s, t);
    Eigen::Index idx = 0;
    for (int j = 0; j < s; ++j) {
        for (int k = 0; k < t; ++k) {
            x(j, k) = v(idx++);
        }
    }
    return x;
}

inline double linear_margin(const LinearModel& model, const Matrix& x)
{
    if (model.w.size() != x.size()) {
        throw std::invalid_argument("linear_margin: sample size does not match model");
    }
    return model.w.dot(vectorize(x)) + model.b;
}

inline Prediction predict_linear(const LinearModel& model, const Matrix& x)
{
    const double m = linear_margin(model, x);
    return Prediction{m >= 0.0 ? 1 : -1, sigmoid(m)};
}

namespace detail {

/* Design-matrix form of the logistic loss; rows are vectorized samples. */
inline double linear_loss(const Matrix& design, const Vector& y, const Vector& w, double b)
{
    const Vector margins = design * w + Vector::Constant(design.rows(), b);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        acc += softplus_neg(y(i) * margins(i));
    }
    return acc / y.size();
}

inline double linear_loss_grad(const Matrix& design, const Vector& y, const Vector& w, double b,
                               Vector& gw, double& gb)
{
    const Eigen::Index n = y.size();
    const Vector margins = design * w + Vector::Constant(n, b);
    Vector coef(n);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += softplus_neg(y(i) * margins(i));
        coef(i) = -sigmoid(-y(i) * margins(i)) * y(i) / n;
    }
    gw.noalias() = design.transpose() * coef;
    gb = coef.sum();
    return acc / n;
}

inline double linear_residual(const Vector& w, const Vector& gw, double gb, double lambda)
{
    double acc = gb * gb;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        double r;
        if (w(j) > 0.0) {
            r = gw(j) + lambda;
        } else if (w(j) < 0.0) {
            r = gw(j) - lambda;
        } else {
            r = std::max(0.0, std::abs(gw(j)) - lambda);
        }
        acc += r * r;
    }
    return std::sqrt(acc);
}

inline Vector soft_threshold(const Vector& z, double tau)
{
    return z.unaryExpr([tau](double v) {
        if (v > tau) return v - tau;
        if (v < -tau) return v + tau;
        return 0.0;
    });
}

}  // namespace detail

/**
 * l1-regularized logistic regression on vectorized samples, solved by
 * accelerated proximal gradient with backtracking and monotone restart.
 * lambda = 0 gives the plain baseline through the same path. Stops when
 * the optimality residual reaches tol, when the objective stalls (the
 * separable lambda = 0 case never has a small residual at finite
 * iterates), or at maxIter.
 */
inline LinearModel fit_linear(const Dataset& data, double lambda,
                              const LinearFitConfig& config = {})
{
    validate_dataset(data);
    require_binary_labels(data);
    validate_linear_config(config);
    if (lambda < 0.0) {
        throw std::invalid_argument("fit_linear: lambda must be non-negative");
    }

    const int n = data.n();
    const Eigen::Index p = static_cast<Eigen::Index>(data.rows()) * data.cols();
    Matrix design(n, p);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        design.row(i) = vectorize(data.samples[i]).transpose();
        y(i) = data.labels[i];
    }

    Vector w = Vector::Zero(p);
    double b = 0.0;
    Vector wPrev = w;
    double bPrev = b;
    double objective = detail::linear_loss(design, y, w, b) + lambda * w.lpNorm<1>();

    double stepL = config.policy.lInit;
    double tAccel = 1.0;
    Vector gw(p);
    double gb = 0.0;

    for (int j = 1; j <= config.maxIter; ++j) {
        double tNext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tAccel * tAccel));
        const double omega = config.acceleration ? (tAccel - 1.0) / tNext : 0.0;

        Vector yw = w + omega * (w - wPrev);
        double yb = b + omega * (b - bPrev);
        double lossY = detail::linear_loss_grad(design, y, yw, yb, gw, gb);

        // backtracking ladder, as in the bilinear solvers
        Vector trialW;
        double trialB = 0.0;
        double trialLoss = 0.0;
        double scale = stepL / config.policy.eta;
        bool accepted = false;
        for (int c = 0; c < config.policy.maxBacktracks && !accepted; ++c) {
            const double candidate = std::max(config.policy.lMin, scale);
            trialW = detail::soft_threshold((yw - gw / candidate).eval(), lambda / candidate);
            trialB = yb - gb / candidate;
            trialLoss = detail::linear_loss(design, y, trialW, trialB);
            const Vector dw = trialW - yw;
            const double db = trialB - yb;
            const double rhs = lossY + gw.dot(dw) + gb * db +
                               0.5 * candidate * (dw.squaredNorm() + db * db);
            if (detail::decrease_ok(trialLoss, rhs)) {
                stepL = candidate;
                accepted = true;
            }
            scale = candidate * config.policy.eta;
        }
        if (!accepted) {
            // sqrt(2)/n sum (||vec(X_i)|| + 1)^2 bounds the joint curvature
            double cap = 0.0;
            for (int i = 0; i < n; ++i) {
                const double norm = design.row(i).norm() + 1.0;
                cap += norm * norm;
            }
            cap *= std::numbers::sqrt2 / n;
            trialW = detail::soft_threshold((yw - gw / cap).eval(), lambda / cap);
            trialB = yb - gb / cap;
            trialLoss = detail::linear_loss(design, y, trialW, trialB);
            stepL = cap;
        }
        double trialObjective = trialLoss + lambda * trialW.lpNorm<1>();

        if (trialObjective > objective) {
            // monotone restart from the incumbent
            lossY = detail::linear_loss_grad(design, y, w, b, gw, gb);
            double scale2 = stepL / config.policy.eta;
            for (int c = 0; c < config.policy.maxBacktracks; ++c) {
                const double candidate = std::max(config.policy.lMin, scale2);
                trialW = detail::soft_threshold((w - gw / candidate).eval(), lambda / candidate);
                trialB = b - gb / candidate;
                trialLoss = detail::linear_loss(design, y, trialW, trialB);
                const Vector dw = trialW - w;
                const double db = trialB - b;
                const double rhs = lossY + gw.dot(dw) + gb * db +
                                   0.5 * candidate * (dw.squaredNorm() + db * db);
                if (detail::decrease_ok(trialLoss, rhs)) {
                    stepL = candidate;
                    break;
                }
                scale2 = candidate * config.policy.eta;
            }
            trialObjective = trialLoss + lambda * trialW.lpNorm<1>();
            tNext = 1.0;
        }

        wPrev = std::move(w);
        bPrev = b;
        w = std::move(trialW);
        b = trialB;
        tAccel = tNext;

        const double relChange = std::abs(objective - trialObjective) / (1.0 + objective);
        objective = trialObjective;
        if (!std::isfinite(objective)) {
            throw std::runtime_error("fit_linear: non-finite objective");
        }

        detail::linear_loss_grad(design, y, w, b, gw, gb);
        if (detail::linear_residual(w, gw, gb, lambda) <= config.tol) {
            break;
        }
        if (relChange <= config.objTol) {
            break;
        }
    }
    return LinearModel{std::move(w), b};
}

}  // namespace sblr
