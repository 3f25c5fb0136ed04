#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rosae/error.hpp"

namespace rosae {

/// Area under the ROC curve, computed from rank sums with ties sharing the
/// average rank of their group. Higher scores must indicate anomalies.
/// Requires at least one positive and one negative label.
inline double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) {
        throw InvalidArgument("roc_auc: scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (std::uint8_t y : labels) {
        positives += y != 0 ? 1 : 0;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedMetric("roc_auc: needs both positive and negative labels");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw InvalidArgument("roc_auc: non-finite score");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of positive ranks, with tied scores all assigned the mean rank of
    // their tie group. Ranks are 1-based; the sum stays integer-valued times
    // the group size, so accumulate twice the rank sum to avoid rounding.
    double twice_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        // Group occupies ranks i+1 .. j; twice the mean rank is (i+1) + j.
        const double twice_mean_rank = static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] != 0) {
                twice_rank_sum += twice_mean_rank;
            }
        }
        i = j;
    }
    const double np = static_cast<double>(positives);
    const double nn = static_cast<double>(negatives);
    const double u = twice_rank_sum / 2.0 - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

/// Average precision as the step-wise sum over distinct score thresholds,
/// descending: sum over thresholds of (recall gain) * precision. Tied
/// scores enter together at a single threshold.
inline double average_precision(const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) {
        throw InvalidArgument("average_precision: scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (std::uint8_t y : labels) {
        positives += y != 0 ? 1 : 0;
    }
    if (positives == 0) {
        throw UndefinedMetric("average_precision: needs at least one positive label");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw InvalidArgument("average_precision: non-finite score");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t tp = 0;
    std::size_t seen = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t group_tp = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            group_tp += labels[order[j]] != 0 ? 1 : 0;
            ++j;
        }
        tp += group_tp;
        seen = j;
        if (group_tp > 0) {
            const double precision = static_cast<double>(tp) / static_cast<double>(seen);
            const double recall_gain =
                static_cast<double>(group_tp) / static_cast<double>(positives);
            ap += recall_gain * precision;
        }
        i = j;
    }
    return ap;
}

/// Five-number summary plus mean and standard deviation of a sample.
/// Quartiles use linear interpolation between order statistics
/// (h = (n - 1) * p), matching numpy's default quantile method.
struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline MetricSummary summarize(const std::vector<double>& values) {
    if (values.empty()) {
        throw InvalidArgument("summarize: empty sample");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("summarize: non-finite value");
        }
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    MetricSummary s;
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sorted) {
        const double d = v - s.mean;
        ss += d * d;
    }
    s.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.min = sorted.front();
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.5);
    s.q3 = quantile_sorted(sorted, 0.75);
    s.max = sorted.back();
    return s;
}

} // namespace rosae
