#pragma once

#include <algorithm>
#include <numeric>

#include "sblr/types.hpp"

namespace sblr {

inline double accuracy(const std::vector<int>& labels, const std::vector<int>& predictions)
{
    if (labels.size() != predictions.size()) {
        throw std::invalid_argument("accuracy: size mismatch");
    }
    if (labels.empty()) {
        throw std::invalid_argument("accuracy: empty input");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == predictions[i]) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / labels.size();
}

/**
 * Area under the ROC curve via the Mann-Whitney statistic. Ties get
 * average ranks, so a constant score vector gives exactly 0.5. Labels
 * must be -1/+1 with both classes present.
 */
inline double auc(const std::vector<int>& labels, const std::vector<double>& scores)
{
    if (labels.size() != scores.size()) {
        throw std::invalid_argument("auc: size mismatch");
    }
    const std::size_t n = labels.size();
    std::size_t nPos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 1 && labels[i] != -1) {
            throw std::invalid_argument("auc: labels must be -1/+1");
        }
        if (labels[i] == 1) {
            ++nPos;
        }
    }
    const std::size_t nNeg = n - nPos;
    if (nPos == 0 || nNeg == 0) {
        throw std::invalid_argument("auc: need both classes");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rankSumPos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double avgRank = 0.5 * static_cast<double>(i + j) + 1.0;   // ranks are 1-based
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                rankSumPos += avgRank;
            }
        }
        i = j + 1;
    }
    return (rankSumPos - 0.5 * nPos * (nPos + 1)) / (static_cast<double>(nPos) * nNeg);
}

}  // namespace sblr
