#pragma once

#include <algorithm>

#include "sblr/solver_bcpd.hpp"

namespace sblr {

inline std::vector<int> distinct_sorted_classes(const Dataset& data)
{
    std::vector<int> classes = data.labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

/* Copy of the dataset with labels mapped to +1 for `cls`, -1 otherwise. */
inline Dataset relabel_one_vs_rest(const Dataset& data, int cls)
{
    Dataset out;
    out.samples = data.samples;
    out.labels.reserve(data.labels.size());
    for (int label : data.labels) {
        out.labels.push_back(label == cls ? 1 : -1);
    }
    return out;
}

struct OneVsAllReport
{
    MulticlassModel model;
    std::vector<FitReport> reports;   // one per class, same order as model.classes
};

/**
 * Trains one binary bilinear model per class against the rest. Classes
 * are kept in ascending order so argmax ties resolve to the lowest class
 * id. An explicit class list may be passed (it must cover only classes
 * present in the data); by default the distinct labels are used.
 */
inline OneVsAllReport fit_one_vs_all(const Dataset& data, const SolverConfig& config,
                                     const std::vector<int>& classList = {})
{
    validate_dataset(data);
    validate_solver_config(config);

    std::vector<int> classes;
    if (classList.empty()) {
        classes = distinct_sorted_classes(data);
    } else {
        classes = classList;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        const std::vector<int> present = distinct_sorted_classes(data);
        for (int c : classes) {
            if (!std::binary_search(present.begin(), present.end(), c)) {
                throw std::invalid_argument("fit_one_vs_all: class " + std::to_string(c) +
                                            " absent from training data");
            }
        }
    }
    if (classes.size() < 2) {
        throw std::invalid_argument("fit_one_vs_all: need at least two classes");
    }

    OneVsAllReport out;
    out.model.mode = MulticlassMode::OneVsAll;
    out.model.classes = classes;
    for (int c : classes) {
        out.reports.push_back(fit(relabel_one_vs_rest(data, c), config));
        out.model.perClassParams.push_back(out.reports.back().params);
    }
    return out;
}

struct MulticlassPrediction
{
    int label = 0;
    double score = 0.0;         // winning margin
    double probability = 0.0;   // softmax weight in multinomial mode, sigmoid otherwise
};

inline MulticlassPrediction predict_multiclass(const MulticlassModel& model, const Matrix& x)
{
    validate_multiclass_model(model);
    const std::size_t numScores = model.classes.size();
    std::vector<double> scores(numScores, 0.0);
    for (std::size_t c = 0; c < model.perClassParams.size(); ++c) {
        scores[c] = margin(model.perClassParams[c], x);
    }
    // in multinomial mode the last class keeps its pinned zero score
    std::size_t best = 0;
    for (std::size_t c = 1; c < numScores; ++c) {
        if (scores[c] > scores[best]) {
            best = c;
        }
    }
    MulticlassPrediction out;
    out.label = model.classes[best];
    out.score = scores[best];
    if (model.mode == MulticlassMode::Multinomial) {
        double mx = 0.0;
        for (double v : scores) mx = std::max(mx, v);
        double denom = 0.0;
        for (double v : scores) denom += std::exp(v - mx);
        out.probability = std::exp(scores[best] - mx) / denom;
    } else {
        out.probability = sigmoid(scores[best]);
    }
    return out;
}

namespace detail {

/* labels use 1..m+1; margins matrix S is n x m, class m+1 pinned at 0. */
inline double multinomial_loss_from_margins(const Matrix& margins,
                                            const std::vector<int>& labels)
{
    const Eigen::Index n = margins.rows();
    const Eigen::Index m = margins.cols();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = 0.0;
        for (Eigen::Index c = 0; c < m; ++c) {
            mx = std::max(mx, margins(i, c));
        }
        double sum = std::exp(-mx);
        for (Eigen::Index c = 0; c < m; ++c) {
            sum += std::exp(margins(i, c) - mx);
        }
        acc += mx + std::log(sum);
        const int label = labels[i];
        if (label <= m) {
            acc -= margins(i, label - 1);
        }
    }
    return acc / n;
}

/* Softmax probability of class c (1-based, c <= m) for row i. */
inline double softmax_prob(const Matrix& margins, Eigen::Index i, Eigen::Index c)
{
    const Eigen::Index m = margins.cols();
    double mx = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        mx = std::max(mx, margins(i, j));
    }
    double denom = std::exp(-mx);
    for (Eigen::Index j = 0; j < m; ++j) {
        denom += std::exp(margins(i, j) - mx);
    }
    return std::exp(margins(i, c) - mx) / denom;
}

inline void check_multinomial_blocks(const std::vector<ModelParams>& blocks,
                                     const Dataset& data)
{
    validate_dataset(data);
    if (blocks.empty()) {
        throw std::invalid_argument("multinomial: need at least one parameter block");
    }
    const int m = static_cast<int>(blocks.size());
    for (const ModelParams& p : blocks) {
        validate_params(p);
        check_shapes(p, data, "multinomial");
    }
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] < 1 || data.labels[i] > m + 1) {
            throw std::invalid_argument("multinomial: label " + std::to_string(i) +
                                        " out of range 1.." + std::to_string(m + 1));
        }
    }
}

inline Matrix multinomial_margins(const std::vector<ModelParams>& blocks, const Dataset& data)
{
    Matrix margins(data.n(), static_cast<Eigen::Index>(blocks.size()));
    for (std::size_t c = 0; c < blocks.size(); ++c) {
        const ModelParams& p = blocks[c];
        for (int i = 0; i < data.n(); ++i) {
            margins(i, c) = (data.samples[i] * p.V).cwiseProduct(p.U).sum() + p.b;
        }
    }
    return margins;
}

}  // namespace detail

/**
 * Mean softmax cross-entropy with the last class pinned to zero
 * parameters: (1/n) sum_i [log(1 + sum_c exp(s_ic)) - s_{i,y_i}] where
 * s_{i,m+1} = 0. With m = 1 this reduces exactly to the binary loss.
 */
inline double multinomial_loss(const std::vector<ModelParams>& blocks, const Dataset& data)
{
    detail::check_multinomial_blocks(blocks, data);
    return detail::multinomial_loss_from_margins(detail::multinomial_margins(blocks, data),
                                                 data.labels);
}

struct MultinomialGradient
{
    std::vector<Matrix> gU;
    std::vector<Matrix> gV;
    Vector gb;
};

inline MultinomialGradient multinomial_gradients(const std::vector<ModelParams>& blocks,
                                                 const Dataset& data)
{
    detail::check_multinomial_blocks(blocks, data);
    const Matrix margins = detail::multinomial_margins(blocks, data);
    const int n = data.n();
    const int m = static_cast<int>(blocks.size());

    MultinomialGradient g;
    g.gb = Vector::Zero(m);
    for (int c = 0; c < m; ++c) {
        g.gU.push_back(Matrix::Zero(blocks[c].U.rows(), blocks[c].U.cols()));
        g.gV.push_back(Matrix::Zero(blocks[c].V.rows(), blocks[c].V.cols()));
    }
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < m; ++c) {
            const double indicator = data.labels[i] == c + 1 ? 1.0 : 0.0;
            const double coef = (detail::softmax_prob(margins, i, c) - indicator) / n;
            g.gU[c].noalias() += coef * (data.samples[i] * blocks[c].V);
            g.gV[c].noalias() += coef * (data.samples[i].transpose() * blocks[c].U);
            g.gb(c) += coef;
        }
    }
    return g;
}

struct MulticlassFitReport
{
    MulticlassModel model;
    std::vector<IterationRecord> trace;
    TerminationReason terminationReason = TerminationReason::MaxIter;
    int totalIters = 0;
    double totalSeconds = 0.0;
};

/**
 * Proximal block descent on the pinned-softmax objective. One sweep
 * updates U_1..U_m, then the intercept vector, then V_1..V_m, then the
 * intercepts again, mirroring the double intercept update of the binary
 * solver. Labels must be exactly 1..m+1 with every class present.
 */
inline MulticlassFitReport fit_multinomial(const Dataset& data, const SolverConfig& config)
{
    validate_dataset(data);
    validate_solver_config(config);

    int maxLabel = 0;
    for (int label : data.labels) {
        maxLabel = std::max(maxLabel, label);
    }
    if (maxLabel < 2) {
        throw std::invalid_argument("fit_multinomial: need labels 1..m+1 with m >= 1");
    }
    std::vector<char> seen(maxLabel + 1, 0);
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] < 1 || data.labels[i] > maxLabel) {
            throw std::invalid_argument("fit_multinomial: label " + std::to_string(i) +
                                        " out of range");
        }
        seen[data.labels[i]] = 1;
    }
    for (int c = 1; c <= maxLabel; ++c) {
        if (!seen[c]) {
            throw std::invalid_argument("fit_multinomial: class " + std::to_string(c) +
                                        " absent from training data");
        }
    }
    const int m = maxLabel - 1;
    const int n = data.n();
    const RegConfig& reg = config.reg;
    const StepsizePolicy& policy = config.policy;

    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    std::vector<ModelParams> blocks(m, init_params(data, reg.rank));
    Matrix margins = detail::multinomial_margins(blocks, data);
    double ell = detail::multinomial_loss_from_margins(margins, data.labels);

    const auto penalty = [&]() {
        double acc = 0.0;
        for (const ModelParams& p : blocks) {
            acc += elastic_net(p.U, reg.mu1, reg.mu2) + elastic_net(p.V, reg.nu1, reg.nu2);
        }
        return acc;
    };
    double objective = ell + penalty();

    MulticlassFitReport report;
    report.trace.push_back({0, objective, std::numeric_limits<double>::quiet_NaN(),
                            policy.lInit, policy.lInit, elapsed(), 0.0});

    std::vector<double> lU(m, policy.lInit), lV(m, policy.lInit);
    double lB1 = policy.lInit, lB2 = policy.lInit;

    const auto update_factor = [&](bool isU, int c, double& lPrev) {
        ModelParams& p = blocks[c];
        Matrix& factor = isU ? p.U : p.V;
        const double l1 = isU ? reg.mu1 : reg.nu1;
        const double l2 = isU ? reg.mu2 : reg.nu2;

        Matrix grad = Matrix::Zero(factor.rows(), factor.cols());
        for (int i = 0; i < n; ++i) {
            const double indicator = data.labels[i] == c + 1 ? 1.0 : 0.0;
            const double coef = (detail::softmax_prob(margins, i, c) - indicator) / n;
            if (isU) {
                grad.noalias() += coef * (data.samples[i] * p.V);
            } else {
                grad.noalias() += coef * (data.samples[i].transpose() * p.U);
            }
        }

        Matrix trialMargins = margins;
        const auto refresh_column = [&](const Matrix& fac) {
            for (int i = 0; i < n; ++i) {
                trialMargins(i, c) =
                    isU ? (data.samples[i] * p.V).cwiseProduct(fac).sum() + p.b
                        : (data.samples[i] * fac).cwiseProduct(p.U).sum() + p.b;
            }
        };

        double scale = lPrev / policy.eta;
        for (int j = 0; j <= policy.maxBacktracks; ++j) {
            double candidate;
            if (j < policy.maxBacktracks) {
                candidate = std::max(policy.lMin, scale);
            } else {
                candidate = isU ? lipschitz_u(p.V, data) : lipschitz_v(p.U, data);
            }
            Matrix trial = prox_update_factor(factor, grad, ProxSpec{candidate, l1, l2});
            refresh_column(trial);
            const double trialLoss =
                detail::multinomial_loss_from_margins(trialMargins, data.labels);
            const Matrix diff = trial - factor;
            const double rhs = ell + grad.cwiseProduct(diff).sum() +
                               0.5 * candidate * diff.squaredNorm();
            const bool ok = detail::decrease_ok(trialLoss, rhs);
            if (ok || j == policy.maxBacktracks) {
                lPrev = candidate;
                factor = std::move(trial);
                margins.col(c) = trialMargins.col(c);
                ell = trialLoss;
                return;
            }
            scale = candidate * policy.eta;
        }
    };

    const auto update_intercepts = [&](double& lPrev) {
        Vector grad = Vector::Zero(m);
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < m; ++c) {
                const double indicator = data.labels[i] == c + 1 ? 1.0 : 0.0;
                grad(c) += (detail::softmax_prob(margins, i, c) - indicator) / n;
            }
        }
        // the mean softmax Jacobian has spectral norm below 1/2, so
        // sqrt(2) is always a safe candidate of last resort
        Matrix trialMargins = margins;
        double scale = lPrev / policy.eta;
        for (int j = 0; j <= policy.maxBacktracks; ++j) {
            const double candidate =
                j < policy.maxBacktracks ? std::max(policy.lMin, scale) : std::numbers::sqrt2;
            const Vector delta = -grad / candidate;
            trialMargins = margins + Vector::Ones(n) * delta.transpose();
            const double trialLoss =
                detail::multinomial_loss_from_margins(trialMargins, data.labels);
            const double rhs =
                ell + grad.dot(delta) + 0.5 * candidate * delta.squaredNorm();
            const bool ok = detail::decrease_ok(trialLoss, rhs);
            if (ok || j == policy.maxBacktracks) {
                lPrev = candidate;
                margins = std::move(trialMargins);
                ell = trialLoss;
                for (int c = 0; c < m; ++c) {
                    blocks[c].b += delta(c);
                }
                return;
            }
            scale = candidate * policy.eta;
        }
    };

    const auto stacked = [&](const std::vector<ModelParams>& bs) {
        double acc = 0.0;
        for (const ModelParams& p : bs) {
            acc += p.U.squaredNorm() + p.V.squaredNorm() + p.b * p.b;
        }
        return std::sqrt(acc);
    };

    report.terminationReason = TerminationReason::MaxIter;
    for (int k = 1; k <= config.maxIter; ++k) {
        const std::vector<ModelParams> prev = blocks;
        const double objectivePrev = objective;

        for (int c = 0; c < m; ++c) {
            update_factor(true, c, lU[c]);
        }
        update_intercepts(lB1);
        for (int c = 0; c < m; ++c) {
            update_factor(false, c, lV[c]);
        }
        update_intercepts(lB2);

        objective = ell + penalty();
        if (!std::isfinite(objective)) {
            throw std::runtime_error("fit_multinomial: non-finite objective");
        }
        double sq = 0.0;
        for (int c = 0; c < m; ++c) {
            const double db = blocks[c].b - prev[c].b;
            sq += (blocks[c].U - prev[c].U).squaredNorm() +
                  (blocks[c].V - prev[c].V).squaredNorm() + db * db;
        }
        const double relErr = std::max(std::sqrt(sq) / (1.0 + stacked(prev)),
                                       std::abs(objective - objectivePrev) /
                                           (1.0 + objectivePrev));
        report.trace.push_back(
            {k, objective, relErr, lU[m - 1], lV[m - 1], elapsed(), sq});
        report.totalIters = k;
        if (relErr <= config.tol) {
            report.terminationReason = TerminationReason::ToleranceReached;
            break;
        }
    }

    report.model.mode = MulticlassMode::Multinomial;
    for (int c = 1; c <= maxLabel; ++c) {
        report.model.classes.push_back(c);
    }
    report.model.perClassParams = std::move(blocks);
    report.totalSeconds = elapsed();
    return report;
}

}  // namespace sblr
