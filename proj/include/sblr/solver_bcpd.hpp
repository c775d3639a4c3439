#pragma once

#include <Eigen/SVD>

#include <chrono>
#include <functional>
#include <limits>

#include "sblr/loss.hpp"
#include "sblr/prox.hpp"

namespace sblr {

/* Backtracking schedule shared by every proximal solver in the library. */
struct StepsizePolicy
{
    double lMin = 1e-3;
    double eta = 2.0;
    double lInit = 1.0;
    int maxBacktracks = 60;
};

inline void validate_policy(const StepsizePolicy& policy)
{
    if (!(policy.lMin > 0.0)) {
        throw std::invalid_argument("policy: lMin must be positive");
    }
    if (!(policy.eta > 1.0)) {
        throw std::invalid_argument("policy: eta must exceed 1");
    }
    if (!(policy.lInit > 0.0)) {
        throw std::invalid_argument("policy: lInit must be positive");
    }
    if (policy.maxBacktracks < 1) {
        throw std::invalid_argument("policy: maxBacktracks must be >= 1");
    }
}

struct SolverConfig
{
    RegConfig reg;
    StepsizePolicy policy;
    int maxIter = 500;
    double tol = 1e-3;
};

inline void validate_solver_config(const SolverConfig& config)
{
    validate_reg(config.reg);
    validate_policy(config.policy);
    if (config.maxIter < 0) {
        throw std::invalid_argument("solver: maxIter must be >= 0");
    }
    if (!(config.tol > 0.0)) {
        throw std::invalid_argument("solver: tol must be positive");
    }
}

enum class TerminationReason
{
    ToleranceReached,
    MaxIter,
    DegenerateInput
};

inline const char* to_string(TerminationReason reason)
{
    switch (reason) {
        case TerminationReason::ToleranceReached: return "tolerance-reached";
        case TerminationReason::MaxIter: return "max-iter";
        case TerminationReason::DegenerateInput: return "degenerate-input";
    }
    return "unknown";
}

struct IterationRecord
{
    int k = 0;
    double objective = 0.0;
    double relErr = 0.0;
    double lU = 0.0;
    double lV = 0.0;
    double wallClock = 0.0;   // seconds since fit start
    // ||dU||^2 + ||dV||^2 + (b_prev - bhat)^2 + (bhat - b)^2 for this sweep;
    // zero on the initialization record.
    double sqStep = 0.0;
};

struct FitReport
{
    ModelParams params;
    std::vector<IterationRecord> trace;
    TerminationReason terminationReason = TerminationReason::MaxIter;
    int totalIters = 0;
    double totalSeconds = 0.0;
};

/* Full view of one outer sweep, for callers that track iterates. */
struct IterationSnapshot
{
    int k = 0;
    const ModelParams& prev;
    const ModelParams& curr;
    double bHat = 0.0;
    double objectivePrev = 0.0;
    double objectiveCurr = 0.0;
    double lU = 0.0;
    double lV = 0.0;
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

/**
 * Deterministic initial point. Let X_av be the sample mean; take its top
 * r singular triplets, orient each right vector so its largest-magnitude
 * entry is positive (ties broken by lowest index, left vector flipped
 * along), then set U = -(left vectors), V = right vectors, b = 0.
 * A zero X_av falls back to canonical basis columns with U negated.
 */
inline ModelParams init_params(const Dataset& data, int r)
{
    validate_dataset(data);
    const int s = data.rows();
    const int t = data.cols();
    if (r < 1 || r > std::min(s, t)) {
        throw std::invalid_argument("init_params: rank out of range");
    }
    Matrix xav = Matrix::Zero(s, t);
    for (const Matrix& x : data.samples) {
        xav += x;
    }
    xav /= data.n();

    ModelParams p;
    p.b = 0.0;
    if (xav.norm() == 0.0) {
        p.U = -Matrix::Identity(s, r);
        p.V = Matrix::Identity(t, r);
        return p;
    }
    Eigen::BDCSVD<Matrix> svd(xav, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix left = svd.matrixU().leftCols(r);
    Matrix right = svd.matrixV().leftCols(r);
    for (int k = 0; k < r; ++k) {
        int idx = 0;
        double best = std::abs(right(0, k));
        for (int i = 1; i < t; ++i) {
            if (std::abs(right(i, k)) > best) {
                best = std::abs(right(i, k));
                idx = i;
            }
        }
        if (right(idx, k) < 0.0) {
            right.col(k) *= -1.0;
            left.col(k) *= -1.0;
        }
    }
    p.U = -left;
    p.V = right;
    return p;
}

inline double stacked_norm(const ModelParams& p)
{
    return std::sqrt(p.U.squaredNorm() + p.V.squaredNorm() + p.b * p.b);
}

inline double stacked_distance(const ModelParams& a, const ModelParams& b)
{
    const double db = a.b - b.b;
    return std::sqrt((a.U - b.U).squaredNorm() + (a.V - b.V).squaredNorm() + db * db);
}

/* max of the normalized iterate change and the normalized objective change. */
inline double relative_error(const ModelParams& prev, double objPrev,
                             const ModelParams& curr, double objCurr)
{
    const double dw = stacked_distance(curr, prev) / (1.0 + stacked_norm(prev));
    const double df = std::abs(objCurr - objPrev) / (1.0 + objPrev);
    return std::max(dw, df);
}

enum class Block
{
    U,
    V
};

struct BacktrackResult
{
    double stepL = 0.0;
    Matrix factor;          // accepted U or V trial
    double intercept = 0.0; // accepted intercept trial
    double trialLoss = 0.0; // mean logistic loss at the accepted trial
    int backtracks = 0;     // candidates rejected before acceptance
    bool usedFallback = false;
};

namespace detail {

/* Evaluate one candidate stepsize; returns true when the quadratic upper
 * model at `current` dominates the loss at the trial point. */
inline bool try_block_step(Block block, const Dataset& data, const ModelParams& current,
                           const LossGradient& grads, double currentLoss, double stepL,
                           double l1, double l2, BacktrackResult& out,
                           const Projections* proj = nullptr)
{
    const bool isU = block == Block::U;
    const Matrix& factor = isU ? current.U : current.V;
    const Matrix& gradFactor = isU ? grads.gU : grads.gV;

    Matrix trial = prox_update_factor(factor, gradFactor, ProxSpec{stepL, l1, l2});
    const double bTrial = intercept_step(current.b, grads.gb, stepL);

    double trialLoss = 0.0;
    if (proj) {
        trialLoss = projected_loss_unchecked(*proj, data.labels, trial, bTrial);
    } else {
        const ModelParams probe{isU ? trial : current.U, isU ? current.V : trial, bTrial};
        trialLoss = loss_unchecked(probe, data);
    }
    if (!std::isfinite(trialLoss)) {
        throw std::runtime_error("solver: non-finite trial objective");
    }
    const Matrix diff = trial - factor;
    const double db = bTrial - current.b;
    const double rhs = currentLoss + gradFactor.cwiseProduct(diff).sum() + grads.gb * db +
                       0.5 * stepL * (diff.squaredNorm() + db * db);

    out.stepL = stepL;
    out.factor = std::move(trial);
    out.intercept = bTrial;
    out.trialLoss = trialLoss;
    return decrease_ok(trialLoss, rhs);
}

inline BacktrackResult backtrack_unchecked(Block block, const Dataset& data,
                                           const ModelParams& current, const LossGradient& grads,
                                           double currentLoss, double lPrev, const RegConfig& reg,
                                           const StepsizePolicy& policy,
                                           const Projections* proj = nullptr)
{
    const bool isU = block == Block::U;
    const double l1 = isU ? reg.mu1 : reg.nu1;
    const double l2 = isU ? reg.mu2 : reg.nu2;

    BacktrackResult result;
    double scale = lPrev / policy.eta;
    for (int j = 0; j < policy.maxBacktracks; ++j) {
        const double candidate = std::max(policy.lMin, scale);
        if (try_block_step(block, data, current, grads, currentLoss, candidate, l1, l2, result,
                           proj)) {
            result.backtracks = j;
            return result;
        }
        scale = candidate * policy.eta;
    }
    const double cap = proj ? lipschitz_from_projections(*proj)
                            : (isU ? lipschitz_u(current.V, data)
                                   : lipschitz_v(current.U, data));
    try_block_step(block, data, current, grads, currentLoss, cap, l1, l2, result, proj);
    result.backtracks = policy.maxBacktracks;
    result.usedFallback = true;
    return result;
}

}  // namespace detail

/**
 * Dynamic stepsize search for one block. Candidates grow geometrically
 * from max(lMin, lPrev / eta); the first one passing the
 * sufficient-decrease test is accepted. If maxBacktracks candidates fail,
 * the analytic Lipschitz bound is used; the test holds there by the
 * descent lemma so that trial is accepted unconditionally.
 */
inline BacktrackResult backtrack_stepsize(Block block, const Dataset& data,
                                          const ModelParams& current, const LossGradient& grads,
                                          double currentLoss, double lPrev, const RegConfig& reg,
                                          const StepsizePolicy& policy)
{
    validate_dataset(data);
    validate_params(current);
    detail::check_shapes(current, data, "backtrack_stepsize");
    validate_reg(reg);
    validate_policy(policy);
    if (!(lPrev > 0.0)) {
        throw std::invalid_argument("backtrack_stepsize: lPrev must be positive");
    }
    return detail::backtrack_unchecked(block, data, current, grads, currentLoss, lPrev, reg,
                                       policy);
}

/**
 * Block-coordinate proximal-descent fit. Each outer sweep takes one prox
 * step on U together with an intercept step (sharing a backtracked
 * stepsize), then refreshes gradients and does the same for V with a
 * second intercept step. Stops once the relative error drops to tol or
 * after maxIter sweeps. Runs with a single label value are flagged as
 * degenerate input; the intercept then does all the work.
 */
inline FitReport fit(const Dataset& data, const SolverConfig& config,
                     const IterationObserver& observer = {})
{
    validate_dataset(data);
    require_binary_labels(data);
    validate_solver_config(config);

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

    FitReport report;
    report.params = init_params(data, config.reg.rank);
    ModelParams& w = report.params;

    double objective = detail::loss_unchecked(w, data) +
                       elastic_net(w.U, config.reg.mu1, config.reg.mu2) +
                       elastic_net(w.V, config.reg.nu1, config.reg.nu2);
    if (!std::isfinite(objective)) {
        throw std::runtime_error("solver: non-finite objective at initialization");
    }
    report.trace.push_back({0, objective, std::numeric_limits<double>::quiet_NaN(),
                            config.policy.lInit, config.policy.lInit, elapsed(), 0.0});

    double lU = config.policy.lInit;
    double lV = config.policy.lInit;
    LossGradient grads;
    detail::Projections proj;
    report.terminationReason = TerminationReason::MaxIter;
    for (int k = 1; k <= config.maxIter; ++k) {
        const ModelParams prev = w;
        const double objectivePrev = objective;

        double ell = detail::loss_and_grad_u_unchecked(w, data, grads.gU, grads.gb, &proj);
        BacktrackResult uStep = detail::backtrack_unchecked(Block::U, data, w, grads, ell, lU,
                                                            config.reg, config.policy, &proj);
        lU = uStep.stepL;
        const double bHat = uStep.intercept;
        w.U = std::move(uStep.factor);
        w.b = bHat;

        ell = detail::loss_and_grad_v_unchecked(w, data, grads.gV, grads.gb, &proj);
        BacktrackResult vStep = detail::backtrack_unchecked(Block::V, data, w, grads, ell, lV,
                                                            config.reg, config.policy, &proj);
        lV = vStep.stepL;
        w.V = std::move(vStep.factor);
        w.b = vStep.intercept;

        objective = vStep.trialLoss + elastic_net(w.U, config.reg.mu1, config.reg.mu2) +
                    elastic_net(w.V, config.reg.nu1, config.reg.nu2);
        if (!std::isfinite(objective)) {
            throw std::runtime_error("solver: non-finite objective");
        }
        const double relErr = relative_error(prev, objectivePrev, w, objective);
        const double dbHat = bHat - prev.b;
        const double db = w.b - bHat;
        const double sqStep = (w.U - prev.U).squaredNorm() + (w.V - prev.V).squaredNorm() +
                              dbHat * dbHat + db * db;
        report.trace.push_back({k, objective, relErr, lU, lV, elapsed(), sqStep});
        report.totalIters = k;
        if (observer) {
            observer(IterationSnapshot{k, prev, w, bHat, objectivePrev, objective, lU, lV});
        }
        if (relErr <= config.tol) {
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
