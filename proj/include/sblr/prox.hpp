#pragma once

#include "sblr/types.hpp"

namespace sblr {

/* One proximal step: quadratic weight stepL, l1/l2 penalty weights. */
struct ProxSpec
{
    double stepL = 1.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

inline void validate_prox_spec(const ProxSpec& spec)
{
    if (!(spec.stepL > 0.0)) {
        throw std::invalid_argument("prox: stepL must be positive");
    }
    if (spec.l1 < 0.0 || spec.l2 < 0.0) {
        throw std::invalid_argument("prox: penalty weights must be non-negative");
    }
}

/* Entrywise soft threshold; |z| <= tau maps to exactly zero. */
inline Matrix shrink(const Matrix& z, double tau)
{
    if (tau < 0.0) {
        throw std::invalid_argument("shrink: tau must be non-negative");
    }
    return z.unaryExpr([tau](double v) {
        if (v > tau) return v - tau;
        if (v < -tau) return v + tau;
        return 0.0;
    });
}

/**
 * Closed-form minimizer of
 *   <grad, Z - current> + stepL/2 ||Z - current||_F^2 + l1 ||Z||_1 + l2/2 ||Z||_F^2
 * which is shrink((stepL * current - grad) / (stepL + l2), l1 / (stepL + l2)).
 */
inline Matrix prox_update_factor(const Matrix& current, const Matrix& grad, const ProxSpec& spec)
{
    validate_prox_spec(spec);
    if (current.rows() != grad.rows() || current.cols() != grad.cols()) {
        throw std::invalid_argument("prox: shape mismatch between iterate and gradient");
    }
    const double denom = spec.stepL + spec.l2;
    return shrink(((spec.stepL * current - grad) / denom).eval(), spec.l1 / denom);
}

/* Unpenalized intercept step at the same quadratic weight. */
inline double intercept_step(double b, double gb, double stepL)
{
    if (!(stepL > 0.0)) {
        throw std::invalid_argument("intercept_step: stepL must be positive");
    }
    return b - gb / stepL;
}

}  // namespace sblr
