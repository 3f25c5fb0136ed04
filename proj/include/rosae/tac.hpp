#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rosae/corpus.hpp"
#include "rosae/error.hpp"
#include "rosae/rng.hpp"

namespace rosae {

enum class ContaminationMode { independent, contextual };

inline std::string to_string(ContaminationMode mode) {
    return mode == ContaminationMode::independent ? "independent" : "contextual";
}

inline ContaminationMode contamination_mode_from_string(const std::string& s) {
    if (s == "independent") {
        return ContaminationMode::independent;
    }
    if (s == "contextual") {
        return ContaminationMode::contextual;
    }
    throw InvalidArgument("unknown contamination mode: " + s);
}

/// Parameters of one contaminated split: the inlier topic, split size,
/// contamination rate, anomaly kind, and the seed driving row selection.
/// `sample` selects seeded uniform sampling (the default); when false the
/// scan-order selection is used instead, taking eligible rows in corpus
/// order, so two runs with different seeds differ only in the final shuffle.
struct ContaminationSpec {
    std::string inlier_topic;
    std::size_t split_size = 0;
    double rate = 0.1;
    ContaminationMode mode = ContaminationMode::independent;
    std::uint64_t seed = 0;
    bool sample = true;

    void validate() const {
        if (split_size == 0) {
            throw InvalidArgument("contamination: split_size must be positive");
        }
        if (!(rate >= 0.0) || rate >= 1.0) {
            throw InvalidArgument("contamination: rate must lie in [0, 1)");
        }
        if (inlier_topic.empty()) {
            throw InvalidArgument("contamination: inlier topic must be set");
        }
    }
};

/// A labelled evaluation split: l rows, of which exactly `anomaly_count`
/// carry an anomaly flag. Flagged rows never have the inlier topic and
/// unflagged rows always do.
struct ContaminatedSplit {
    EmbeddedDataset dataset;
    std::vector<std::uint8_t> anomaly_flags;
    std::size_t anomaly_count = 0;
    ContaminationSpec spec;
};

/// Row indices of a dataset partitioned against an inlier topic: rows whose
/// topic parent differs from the inlier's parent (independent anomalies),
/// rows sharing the parent but not the topic (contextual anomalies), and the
/// inlier rows themselves.
struct AnomalyPartition {
    std::vector<std::size_t> independent;
    std::vector<std::size_t> contextual;
    std::vector<std::size_t> inliers;
};

inline AnomalyPartition partition_anomalies(const EmbeddedDataset& data, const TopicHierarchy& h,
                                            const std::string& inlier_topic) {
    const std::string& inlier_parent = h.parent(inlier_topic);
    AnomalyPartition out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::string& topic = data.topics[i];
        if (topic == inlier_topic) {
            out.inliers.push_back(i);
        } else if (h.parent(topic) == inlier_parent) {
            out.contextual.push_back(i);
        } else {
            out.independent.push_back(i);
        }
    }
    return out;
}

/// Largest split size l such that floor(l * rate) anomalies and
/// l - floor(l * rate) inliers are available. Returns 0 when no valid
/// split exists.
inline std::size_t max_split_size(std::size_t inlier_count, std::size_t eligible_count,
                                  double rate) {
    std::size_t lo = 0;
    std::size_t hi = inlier_count + eligible_count;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        const auto c = static_cast<std::size_t>(std::floor(static_cast<double>(mid) * rate));
        if (c <= eligible_count && mid - c <= inlier_count) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

/// Builds a contaminated split of exactly `split_size` rows containing
/// floor(split_size * rate) anomalies of the requested kind. Anomalies and
/// inliers are drawn from their eligible pools (uniformly at random under
/// the spec seed, or in corpus order when sample is off) and the assembled
/// split is shuffled with the same seed stream.
inline ContaminatedSplit contaminate(const EmbeddedDataset& data, const TopicHierarchy& h,
                                     const ContaminationSpec& spec) {
    spec.validate();
    if (spec.split_size > data.size()) {
        throw InvalidArgument("contamination: split_size exceeds corpus size");
    }

    const AnomalyPartition parts = partition_anomalies(data, h, spec.inlier_topic);
    const std::vector<std::size_t>& eligible =
        spec.mode == ContaminationMode::independent ? parts.independent : parts.contextual;

    const std::size_t l = spec.split_size;
    const auto c = static_cast<std::size_t>(std::floor(static_cast<double>(l) * spec.rate));
    if (c > eligible.size()) {
        throw CapacityError("contamination: need " + std::to_string(c) + " " +
                            to_string(spec.mode) + " anomalies but only " +
                            std::to_string(eligible.size()) + " are available");
    }
    if (l - c > parts.inliers.size()) {
        throw CapacityError("contamination: need " + std::to_string(l - c) +
                            " inliers but only " + std::to_string(parts.inliers.size()) +
                            " are available");
    }

    Rng rng(spec.seed);
    std::vector<std::size_t> chosen_anomalies;
    std::vector<std::size_t> chosen_inliers;
    if (spec.sample) {
        chosen_anomalies = rng.sample_without_replacement(eligible, c);
        chosen_inliers = rng.sample_without_replacement(parts.inliers, l - c);
    } else {
        chosen_anomalies.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(c));
        chosen_inliers.assign(parts.inliers.begin(),
                              parts.inliers.begin() + static_cast<std::ptrdiff_t>(l - c));
    }

    // Anomalies first, then inliers, then one shuffle of the whole split.
    std::vector<std::pair<std::size_t, std::uint8_t>> rows;
    rows.reserve(l);
    for (std::size_t idx : chosen_anomalies) {
        rows.emplace_back(idx, std::uint8_t{1});
    }
    for (std::size_t idx : chosen_inliers) {
        rows.emplace_back(idx, std::uint8_t{0});
    }
    rng.shuffle(rows);

    ContaminatedSplit out;
    out.spec = spec;
    out.anomaly_count = c;
    out.dataset.matrix = DenseMatrix(l, data.dim());
    out.dataset.ids.reserve(l);
    out.dataset.topics.reserve(l);
    out.anomaly_flags.reserve(l);
    for (std::size_t r = 0; r < l; ++r) {
        const auto [src, flag] = rows[r];
        std::copy(data.matrix.row(src), data.matrix.row(src) + data.dim(),
                  out.dataset.matrix.row(r));
        out.dataset.ids.push_back(data.ids[src]);
        out.dataset.topics.push_back(data.topics[src]);
        out.anomaly_flags.push_back(flag);
    }
    return out;
}

inline nlohmann::json contamination_spec_to_json(const ContaminationSpec& spec) {
    return nlohmann::json{{"inlier_topic", spec.inlier_topic}, {"split_size", spec.split_size},
                          {"rate", spec.rate},                 {"mode", to_string(spec.mode)},
                          {"seed", spec.seed},                 {"sample", spec.sample}};
}

inline ContaminationSpec contamination_spec_from_json(const nlohmann::json& j) {
    ContaminationSpec spec;
    spec.inlier_topic = j.at("inlier_topic").get<std::string>();
    spec.split_size = j.at("split_size").get<std::size_t>();
    spec.rate = j.at("rate").get<double>();
    spec.mode = contamination_mode_from_string(j.at("mode").get<std::string>());
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.sample = j.value("sample", true);
    return spec;
}

/// Writes a split as JSONL rows {"id", "topic", "anomaly", "vector"} plus a
/// sidecar manifest holding the spec, the resolved anomaly count, and any
/// extra provenance the caller supplies.
inline void save_split(const ContaminatedSplit& split, const std::string& data_path,
                       const std::string& manifest_path,
                       const nlohmann::json& extra_manifest = nlohmann::json::object()) {
    std::ofstream outfile(data_path);
    if (!outfile) {
        throw IoError("cannot write file: " + data_path);
    }
    for (std::size_t i = 0; i < split.dataset.size(); ++i) {
        nlohmann::json record;
        record["id"] = split.dataset.ids[i];
        record["topic"] = split.dataset.topics[i];
        record["anomaly"] = static_cast<int>(split.anomaly_flags[i]);
        record["vector"] = std::vector<double>(split.dataset.matrix.row(i),
                                               split.dataset.matrix.row(i) + split.dataset.dim());
        outfile << record.dump() << '\n';
    }

    nlohmann::json manifest = extra_manifest;
    manifest["spec"] = contamination_spec_to_json(split.spec);
    manifest["anomaly_count"] = split.anomaly_count;
    manifest["rows"] = split.dataset.size();
    std::ofstream mf(manifest_path);
    if (!mf) {
        throw IoError("cannot write file: " + manifest_path);
    }
    mf << manifest.dump(2) << '\n';
}

/// Reads a split JSONL file back into a dataset plus anomaly flags. Records
/// without an "anomaly" field load with the flag cleared, so plain
/// embeddings files are accepted as unlabelled data.
inline std::pair<EmbeddedDataset, std::vector<std::uint8_t>> load_split(const std::string& path) {
    auto in = detail::open_input(path);
    EmbeddedDataset data;
    std::vector<std::uint8_t> flags;
    std::vector<double> rows;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto record = detail::parse_json_line(line, path, line_no);
        auto id = detail::require_string(record, "id", path, line_no);
        auto topic = detail::require_string(record, "topic", path, line_no);
        if (!record.contains("vector") || !record["vector"].is_array()) {
            throw SchemaError(path + ": record " + id + " lacks a \"vector\" array");
        }
        std::vector<double> vec = record["vector"].get<std::vector<double>>();
        if (!all_finite(vec)) {
            throw SchemaError(path + ": record " + id + " has a non-finite vector entry");
        }
        if (data.ids.empty()) {
            dim = vec.size();
        } else if (vec.size() != dim) {
            throw SchemaError(path + ": record " + id + " has vector length " +
                              std::to_string(vec.size()) + ", expected " + std::to_string(dim));
        }
        if (!seen_ids.insert(id).second) {
            throw SchemaError(path + ": duplicate id " + id);
        }
        std::uint8_t flag = 0;
        if (record.contains("anomaly")) {
            flag = record["anomaly"].get<int>() != 0 ? 1 : 0;
        }
        rows.insert(rows.end(), vec.begin(), vec.end());
        data.ids.push_back(std::move(id));
        data.topics.push_back(std::move(topic));
        flags.push_back(flag);
    }
    data.matrix.rows = data.ids.size();
    data.matrix.cols = dim;
    data.matrix.values = std::move(rows);
    return {std::move(data), std::move(flags)};
}

} // namespace rosae
