#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "rosae/error.hpp"
#include "rosae/matrix.hpp"
#include "rosae/rlae.hpp"
#include "rosae/rng.hpp"

namespace rosae {

/// Ensemble shape: m detectors built from one base configuration, each with
/// its own seed derived from master_seed, and therefore its own weight
/// initialization and pruning pattern.
struct EnsembleConfig {
    std::size_t m = 20;
    RLAEConfig base;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (m == 0) {
            throw InvalidArgument("ensemble: m must be at least 1");
        }
    }
};

/// Score-normalization statistics of one member, taken over its scores on
/// the training split. A member whose training scores have zero variance is
/// degenerate; its standardized scores are defined as all zeros.
struct NormStats {
    double mean = 0.0;
    double stddev = 0.0;

    bool degenerate() const { return !(stddev > 0.0); }
};

inline NormStats score_norm_stats(std::span<const double> scores) {
    NormStats stats;
    if (scores.empty()) {
        return stats;
    }
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    stats.mean = sum / static_cast<double>(scores.size());
    if (scores.size() < 2) {
        return stats;
    }
    double ss = 0.0;
    for (double s : scores) {
        const double d = s - stats.mean;
        ss += d * d;
    }
    stats.stddev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
    return stats;
}

/// z-scores a score vector against the given statistics.
inline std::vector<double> standardize(std::span<const double> scores, const NormStats& stats) {
    if (stats.degenerate()) {
        throw InvalidArgument("standardize: degenerate statistics (zero variance)");
    }
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = (scores[i] - stats.mean) / stats.stddev;
    }
    return out;
}

/// Per-observation median across members. An even member count takes the
/// mean of the two central order statistics.
inline std::vector<double> aggregate(const std::vector<std::vector<double>>& member_scores) {
    if (member_scores.empty()) {
        throw InvalidArgument("aggregate: no member scores");
    }
    const std::size_t m = member_scores.size();
    const std::size_t n = member_scores.front().size();
    for (const auto& row : member_scores) {
        if (row.size() != n) {
            throw InvalidArgument("aggregate: member score vectors differ in length");
        }
    }
    std::vector<double> out(n, 0.0);
    std::vector<double> column(m);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            column[i] = member_scores[i][j];
        }
        std::sort(column.begin(), column.end());
        out[j] = m % 2 == 1 ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
    }
    return out;
}

struct RoSAEModel {
    EnsembleConfig config;
    std::vector<RLAEModel> members;
    std::vector<NormStats> norm_stats;

    std::size_t size() const { return members.size(); }

    std::vector<std::size_t> degenerate_members() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < norm_stats.size(); ++i) {
            if (norm_stats[i].degenerate()) {
                out.push_back(i);
            }
        }
        return out;
    }
};

inline std::size_t default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

/// Trains the m members over a job pool. Member i trains with seed
/// split(master_seed, i), so results are identical whatever the job count or
/// completion order. Each member's normalization statistics come from its
/// own scores on the training data.
inline RoSAEModel fit_ensemble(const DenseMatrix& data, const EnsembleConfig& cfg,
                               std::size_t jobs = 0) {
    cfg.validate();
    RoSAEModel model;
    model.config = cfg;
    model.members.resize(cfg.m);
    model.norm_stats.resize(cfg.m);

    const std::size_t workers = std::min(cfg.m, jobs == 0 ? default_jobs() : jobs);
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> failures(workers);

    auto run = [&](std::size_t worker) {
        try {
            for (std::size_t i; (i = cursor.fetch_add(1)) < cfg.m;) {
                RLAEConfig member_cfg = cfg.base;
                member_cfg.seed = seed_split(cfg.master_seed, static_cast<std::uint64_t>(i));
                model.members[i] = train(data, member_cfg);
                const std::vector<double> training_scores = score(model.members[i], data);
                model.norm_stats[i] = score_norm_stats(training_scores);
            }
        } catch (...) {
            failures[worker] = std::current_exception();
        }
    };

    if (workers <= 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(run, w);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    for (const std::exception_ptr& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
    return model;
}

/// Ensemble anomaly scores: each member scores the data, scores are
/// standardized with that member's training statistics (degenerate members
/// contribute zeros), and the per-observation median is returned. Higher
/// means more anomalous.
inline std::vector<double> decision_scores(const RoSAEModel& model, const DenseMatrix& data) {
    if (model.members.empty() || model.members.size() != model.norm_stats.size()) {
        throw InvalidArgument("decision_scores: model has no consistent member list");
    }
    std::vector<std::vector<double>> standardized;
    standardized.reserve(model.members.size());
    for (std::size_t i = 0; i < model.members.size(); ++i) {
        std::vector<double> raw = score(model.members[i], data);
        if (model.norm_stats[i].degenerate()) {
            standardized.emplace_back(raw.size(), 0.0);
        } else {
            standardized.push_back(standardize(raw, model.norm_stats[i]));
        }
    }
    return aggregate(standardized);
}

} // namespace rosae
