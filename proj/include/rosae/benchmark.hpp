#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rosae/corpus.hpp"
#include "rosae/ensemble.hpp"
#include "rosae/error.hpp"
#include "rosae/metrics.hpp"
#include "rosae/rng.hpp"
#include "rosae/tac.hpp"
#include "rosae/version.hpp"

namespace rosae {

/// One multi-run experiment: per run, contaminate a train and a test split,
/// fit an ensemble on the train split, and evaluate it on the test split.
/// The split and ensemble seeds are derived per run from `seed`, so the
/// whole experiment is a pure function of this spec and the input corpus.
struct BenchmarkSpec {
    ContaminationSpec split;
    std::size_t test_size = 0; // 0 means same as split.split_size
    EnsembleConfig ensemble;
    std::size_t runs = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (runs == 0) {
            throw InvalidArgument("benchmark: runs must be at least 1");
        }
        split.validate();
        ensemble.validate();
    }
};

struct BenchmarkResult {
    std::vector<double> auc;
    std::vector<double> ap;
    MetricSummary auc_summary;
    MetricSummary ap_summary;
};

inline nlohmann::json metric_summary_to_json(const MetricSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min},
                          {"q1", s.q1},     {"median", s.median}, {"q3", s.q3},
                          {"max", s.max}};
}

inline nlohmann::json benchmark_result_to_json(const BenchmarkResult& r) {
    return nlohmann::json{
        {"auc", {{"values", r.auc}, {"summary", metric_summary_to_json(r.auc_summary)}}},
        {"ap", {{"values", r.ap}, {"summary", metric_summary_to_json(r.ap_summary)}}}};
}

/// Runs the experiment. The train and test pools may be the same dataset;
/// splits are still drawn with independent seed streams. Run r uses seeds
/// split(split(seed, r), "tac-train" / "tac-test" / "fit").
inline BenchmarkResult run_benchmark(const EmbeddedDataset& train_pool,
                                     const EmbeddedDataset& test_pool, const TopicHierarchy& h,
                                     const BenchmarkSpec& spec, std::size_t jobs = 0) {
    spec.validate();
    BenchmarkResult result;
    result.auc.reserve(spec.runs);
    result.ap.reserve(spec.runs);

    for (std::size_t r = 0; r < spec.runs; ++r) {
        const std::uint64_t run_seed = seed_split(spec.seed, static_cast<std::uint64_t>(r));

        ContaminationSpec train_spec = spec.split;
        train_spec.seed = seed_split(run_seed, "tac-train");
        ContaminationSpec test_spec = spec.split;
        if (spec.test_size != 0) {
            test_spec.split_size = spec.test_size;
        }
        test_spec.seed = seed_split(run_seed, "tac-test");

        const ContaminatedSplit train_split = contaminate(train_pool, h, train_spec);
        const ContaminatedSplit test_split = contaminate(test_pool, h, test_spec);

        EnsembleConfig fit_cfg = spec.ensemble;
        fit_cfg.master_seed = seed_split(run_seed, "fit");
        const RoSAEModel model = fit_ensemble(train_split.dataset.matrix, fit_cfg, jobs);
        const std::vector<double> scores = decision_scores(model, test_split.dataset.matrix);

        result.auc.push_back(roc_auc(scores, test_split.anomaly_flags));
        result.ap.push_back(average_precision(scores, test_split.anomaly_flags));
    }
    result.auc_summary = summarize(result.auc);
    result.ap_summary = summarize(result.ap);
    return result;
}

} // namespace rosae
