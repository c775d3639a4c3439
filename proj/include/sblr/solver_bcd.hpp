#pragma once

#include "sblr/solver_bcpd.hpp"

namespace sblr {

/* Controls for the inner solves that make each block (near-)exact. */
struct InnerSolverConfig
{
    double innerTol = 1e-6;
    int innerMaxIter = 1000;
    bool acceleration = true;
};

inline void validate_inner_config(const InnerSolverConfig& inner)
{
    if (!(inner.innerTol > 0.0)) {
        throw std::invalid_argument("inner solver: innerTol must be positive");
    }
    if (inner.innerMaxIter < 1) {
        throw std::invalid_argument("inner solver: innerMaxIter must be >= 1");
    }
}

struct BcdConfig
{
    SolverConfig outer;
    InnerSolverConfig inner;
};

struct BlockSolveResult
{
    Matrix factor;
    double intercept = 0.0;
    double lastStep = 0.0;   // last accepted inner stepsize
    int iters = 0;
};

/**
 * Norm of the minimum-norm subgradient of
 *   loss + l1 ||factor||_1 + l2/2 ||factor||_F^2   (intercept unpenalized)
 * at the given point; zero iff the block is exactly optimal.
 */
inline double block_optimality_residual(const Matrix& factor, const Matrix& gradFactor,
                                        double gb, double l1, double l2)
{
    if (factor.rows() != gradFactor.rows() || factor.cols() != gradFactor.cols()) {
        throw std::invalid_argument("block residual: shape mismatch");
    }
    double acc = gb * gb;
    for (Eigen::Index j = 0; j < factor.size(); ++j) {
        const double f = factor(j);
        const double g = gradFactor(j) + l2 * f;
        double r;
        if (f > 0.0) {
            r = g + l1;
        } else if (f < 0.0) {
            r = g - l1;
        } else {
            r = std::max(0.0, std::abs(g) - l1);
        }
        acc += r * r;
    }
    return std::sqrt(acc);
}

namespace detail {

/**
 * Accelerated proximal gradient on one block with the other factor held
 * fixed. Extrapolated steps that would increase the block objective are
 * redone from the incumbent (monotone restart), so the returned objective
 * never exceeds the starting one. Stops when the relative objective
 * change falls below innerTol and the optimality residual is within
 * 10 * innerTol * (1 + gradient norm), or at innerMaxIter.
 */
inline BlockSolveResult solve_block(Block block, const Dataset& data, const Matrix& fixed,
                                    const Matrix& start, double b0, const RegConfig& reg,
                                    const InnerSolverConfig& inner, const StepsizePolicy& policy)
{
    const bool isU = block == Block::U;
    const double l1 = isU ? reg.mu1 : reg.nu1;
    const double l2 = isU ? reg.mu2 : reg.nu2;

    const auto assemble = [&](const Matrix& factor, double b) {
        return isU ? ModelParams{factor, fixed, b} : ModelParams{fixed, factor, b};
    };
    Projections proj;
    const auto loss_grad = [&](const ModelParams& p, Matrix& gFac, double& gb) {
        return isU ? loss_and_grad_u_unchecked(p, data, gFac, gb, &proj)
                   : loss_and_grad_v_unchecked(p, data, gFac, gb, &proj);
    };

    Matrix x = start;
    double bx = b0;
    Matrix xPrev = x;
    double bxPrev = bx;
    double objective = loss_unchecked(assemble(x, bx), data) + elastic_net(x, l1, l2);

    BlockSolveResult result{x, bx, policy.lInit, 0};
    double tAccel = 1.0;
    Matrix gFac;
    double gb = 0.0;

    for (int j = 1; j <= inner.innerMaxIter; ++j) {
        double tNext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tAccel * tAccel));
        const double omega = inner.acceleration ? (tAccel - 1.0) / tNext : 0.0;

        Matrix y = x + omega * (x - xPrev);
        double by = bx + omega * (bx - bxPrev);
        ModelParams yPoint = assemble(y, by);
        double lossY = loss_grad(yPoint, gFac, gb);
        LossGradient grads{isU ? gFac : Matrix(), isU ? Matrix() : gFac, gb};
        BacktrackResult step = backtrack_unchecked(block, data, yPoint, grads, lossY,
                                                   result.lastStep, reg, policy, &proj);
        double trialObjective = step.trialLoss + elastic_net(step.factor, l1, l2);

        if (trialObjective > objective) {
            // restart from the incumbent without extrapolation
            yPoint = assemble(x, bx);
            lossY = loss_grad(yPoint, gFac, gb);
            grads = LossGradient{isU ? gFac : Matrix(), isU ? Matrix() : gFac, gb};
            step = backtrack_unchecked(block, data, yPoint, grads, lossY, step.stepL, reg,
                                       policy, &proj);
            trialObjective = step.trialLoss + elastic_net(step.factor, l1, l2);
            tNext = 1.0;
        }

        xPrev = std::move(x);
        bxPrev = bx;
        x = std::move(step.factor);
        bx = step.intercept;
        result.lastStep = step.stepL;
        result.iters = j;
        tAccel = tNext;

        const double relChange = std::abs(objective - trialObjective) / (1.0 + objective);
        objective = trialObjective;
        if (relChange <= inner.innerTol) {
            Matrix gCheck;
            double gbCheck = 0.0;
            loss_grad(assemble(x, bx), gCheck, gbCheck);
            const double gradNorm = std::sqrt(gCheck.squaredNorm() + gbCheck * gbCheck);
            const double residual = block_optimality_residual(x, gCheck, gbCheck, l1, l2);
            if (residual <= 10.0 * inner.innerTol * (1.0 + gradNorm)) {
                break;
            }
        }
    }
    result.factor = std::move(x);
    result.intercept = bx;
    return result;
}

}  // namespace detail

/* Near-exact minimization over (U, b) with V fixed. */
inline BlockSolveResult solve_u_block(const Dataset& data, const Matrix& vFixed,
                                      const Matrix& uStart, double b0, const RegConfig& reg,
                                      const InnerSolverConfig& inner,
                                      const StepsizePolicy& policy = {})
{
    validate_dataset(data);
    require_binary_labels(data);
    validate_reg(reg);
    validate_inner_config(inner);
    validate_policy(policy);
    validate_params(ModelParams{uStart, vFixed, b0});
    detail::check_shapes(ModelParams{uStart, vFixed, b0}, data, "solve_u_block");
    return detail::solve_block(Block::U, data, vFixed, uStart, b0, reg, inner, policy);
}

/* Near-exact minimization over (V, b) with U fixed. */
inline BlockSolveResult solve_v_block(const Dataset& data, const Matrix& uFixed,
                                      const Matrix& vStart, double b0, const RegConfig& reg,
                                      const InnerSolverConfig& inner,
                                      const StepsizePolicy& policy = {})
{
    validate_dataset(data);
    require_binary_labels(data);
    validate_reg(reg);
    validate_inner_config(inner);
    validate_policy(policy);
    validate_params(ModelParams{uFixed, vStart, b0});
    detail::check_shapes(ModelParams{uFixed, vStart, b0}, data, "solve_v_block");
    return detail::solve_block(Block::V, data, uFixed, vStart, b0, reg, inner, policy);
}

/**
 * Classic block coordinate descent: alternate near-exact solves of the
 * (U, b) and (V, b) subproblems, warm-started at the incumbent, with the
 * same initialization and stopping rule as fit(). Each outer sweep is far
 * more expensive than a prox-descent sweep, which is the point of keeping
 * both solvers around for comparison.
 */
inline FitReport fit_bcd(const Dataset& data, const BcdConfig& config,
                         const IterationObserver& observer = {})
{
    validate_dataset(data);
    require_binary_labels(data);
    validate_solver_config(config.outer);
    validate_inner_config(config.inner);
    if (!(config.inner.innerTol < config.outer.tol)) {
        throw std::invalid_argument("fit_bcd: innerTol must be below the outer tol");
    }

    bool degenerate = true;
    for (int i = 1; i < data.n(); ++i) {
        if (data.labels[i] != data.labels[0]) {
            degenerate = false;
            break;
        }
    }

    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const RegConfig& reg = config.outer.reg;
    FitReport report;
    report.params = init_params(data, reg.rank);
    ModelParams& w = report.params;

    double objective = detail::loss_unchecked(w, data) + elastic_net(w.U, reg.mu1, reg.mu2) +
                       elastic_net(w.V, reg.nu1, reg.nu2);
    if (!std::isfinite(objective)) {
        throw std::runtime_error("solver: non-finite objective at initialization");
    }
    report.trace.push_back({0, objective, std::numeric_limits<double>::quiet_NaN(),
                            config.outer.policy.lInit, config.outer.policy.lInit, elapsed(),
                            0.0});

    report.terminationReason = TerminationReason::MaxIter;
    for (int k = 1; k <= config.outer.maxIter; ++k) {
        const ModelParams prev = w;
        const double objectivePrev = objective;

        BlockSolveResult uSolve = detail::solve_block(Block::U, data, w.V, w.U, w.b, reg,
                                                      config.inner, config.outer.policy);
        w.U = std::move(uSolve.factor);
        const double bHat = uSolve.intercept;
        w.b = bHat;

        BlockSolveResult vSolve = detail::solve_block(Block::V, data, w.U, w.V, w.b, reg,
                                                      config.inner, config.outer.policy);
        w.V = std::move(vSolve.factor);
        w.b = vSolve.intercept;

        objective = detail::loss_unchecked(w, data) + elastic_net(w.U, reg.mu1, reg.mu2) +
                    elastic_net(w.V, reg.nu1, reg.nu2);
        if (!std::isfinite(objective)) {
            throw std::runtime_error("solver: non-finite objective");
        }
        const double relErr = relative_error(prev, objectivePrev, w, objective);
        const double dbHat = bHat - prev.b;
        const double db = w.b - bHat;
        const double sqStep = (w.U - prev.U).squaredNorm() + (w.V - prev.V).squaredNorm() +
                              dbHat * dbHat + db * db;
        report.trace.push_back(
            {k, objective, relErr, uSolve.lastStep, vSolve.lastStep, elapsed(), sqStep});
        report.totalIters = k;
        if (observer) {
            observer(IterationSnapshot{k, prev, w, bHat, objectivePrev, objective,
                                       uSolve.lastStep, vSolve.lastStep});
        }
        if (relErr <= config.outer.tol) {
            report.terminationReason = TerminationReason::ToleranceReached;
            break;
        }
    }
    if (degenerate) {
        report.terminationReason = TerminationReason::DegenerateInput;
    }
    report.totalSeconds = elapsed();
    return report;
}

}  // namespace sblr
