#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rosae/ensemble.hpp"
#include "rosae/error.hpp"
#include "rosae/rlae.hpp"
#include "rosae/version.hpp"

namespace rosae {

inline nlohmann::json rlae_config_to_json(const RLAEConfig& cfg) {
    nlohmann::json j;
    j["input_dim"] = cfg.input_dim;
    j["encoder_hidden"] = cfg.encoder_hidden;
    j["enc_out_dim"] = cfg.enc_out_dim;
    j["rsr_dim"] = cfg.rsr_dim;
    j["k_neighbours"] = cfg.k_neighbours;
    j["lambda1"] = cfg.lambda1;
    j["lambda2"] = cfg.lambda2;
    j["lambda3"] = cfg.lambda3;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["prune_range"] = {cfg.prune_low, cfg.prune_high};
    j["lle_reg"] = cfg.lle_reg;
    j["seed"] = cfg.seed;
    return j;
}

inline RLAEConfig rlae_config_from_json(const nlohmann::json& j) {
    RLAEConfig cfg;
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
    cfg.enc_out_dim = j.at("enc_out_dim").get<std::size_t>();
    cfg.rsr_dim = j.at("rsr_dim").get<std::size_t>();
    cfg.k_neighbours = j.at("k_neighbours").get<std::size_t>();
    cfg.lambda1 = j.at("lambda1").get<double>();
    cfg.lambda2 = j.at("lambda2").get<double>();
    cfg.lambda3 = j.at("lambda3").get<double>();
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    const auto range = j.at("prune_range").get<std::vector<double>>();
    if (range.size() != 2) {
        throw SchemaError("model config: prune_range must hold exactly two values");
    }
    cfg.prune_low = range[0];
    cfg.prune_high = range[1];
    cfg.lle_reg = j.at("lle_reg").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

namespace detail {

inline nlohmann::json matrix_to_json(const DenseMatrix& m) {
    return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}};
}

inline DenseMatrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
    DenseMatrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.values = j.at("values").get<std::vector<double>>();
    if (m.values.size() != m.rows * m.cols) {
        throw SchemaError(what + ": matrix has " + std::to_string(m.values.size()) +
                          " values, expected " + std::to_string(m.rows * m.cols));
    }
    return m;
}

inline nlohmann::json layer_to_json(const Layer& layer) {
    std::vector<int> mask(layer.mask.values.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = layer.mask.values[i] != 0.0 ? 1 : 0;
    }
    return nlohmann::json{{"rows", layer.weight.rows},
                          {"cols", layer.weight.cols},
                          {"weight", layer.weight.values},
                          {"mask", mask},
                          {"bias", layer.bias}};
}

inline Layer layer_from_json(const nlohmann::json& j, const std::string& what) {
    Layer layer;
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    layer.weight.rows = rows;
    layer.weight.cols = cols;
    layer.weight.values = j.at("weight").get<std::vector<double>>();
    const auto mask = j.at("mask").get<std::vector<int>>();
    layer.bias = j.at("bias").get<std::vector<double>>();
    if (layer.weight.values.size() != rows * cols || mask.size() != rows * cols ||
        layer.bias.size() != rows) {
        throw SchemaError(what + ": layer arrays do not match the declared shape");
    }
    layer.mask = DenseMatrix(rows, cols);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        layer.mask.values[i] = mask[i] != 0 ? 1.0 : 0.0;
        if (layer.mask.values[i] == 0.0 && layer.weight.values[i] != 0.0) {
            throw SchemaError(what + ": masked weight entry is nonzero");
        }
    }
    return layer;
}

inline nlohmann::json read_json_file(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw SchemaError(what + ": " + path + " is not valid JSON");
    }
    return j;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write file: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

inline void check_version(const nlohmann::json& j, const std::string& what) {
    if (!j.contains("version")) {
        throw SchemaError(what + ": missing mandatory version field");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
        throw SchemaError(what + ": unsupported format version " + std::to_string(version));
    }
}

} // namespace detail

inline nlohmann::json rlae_model_to_json(const RLAEModel& model) {
    nlohmann::json j;
    j["version"] = kModelFormatVersion;
    j["config"] = rlae_config_to_json(model.config);
    j["encoder"] = nlohmann::json::array();
    for (const Layer& layer : model.params.encoder) {
        j["encoder"].push_back(detail::layer_to_json(layer));
    }
    j["rsr"] = detail::matrix_to_json(model.params.rsr);
    j["decoder"] = nlohmann::json::array();
    for (const Layer& layer : model.params.decoder) {
        j["decoder"].push_back(detail::layer_to_json(layer));
    }
    j["loss_curve"] = model.loss_curve;
    return j;
}

inline RLAEModel rlae_model_from_json(const nlohmann::json& j, const std::string& what) {
    detail::check_version(j, what);
    RLAEModel model;
    model.config = rlae_config_from_json(j.at("config"));
    for (const auto& layer : j.at("encoder")) {
        model.params.encoder.push_back(detail::layer_from_json(layer, what));
    }
    model.params.rsr = detail::matrix_from_json(j.at("rsr"), what);
    for (const auto& layer : j.at("decoder")) {
        model.params.decoder.push_back(detail::layer_from_json(layer, what));
    }
    model.loss_curve = j.value("loss_curve", std::vector<double>{});
    return model;
}

inline void save_rlae_model(const RLAEModel& model, const std::string& path) {
    detail::write_json_file(rlae_model_to_json(model), path);
}

inline RLAEModel load_rlae_model(const std::string& path) {
    return rlae_model_from_json(detail::read_json_file(path, "model"), "model " + path);
}

inline std::string member_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "member_%03zu.json", index);
    return buf;
}

/// Saves an ensemble as a directory: one JSON file per member plus a
/// manifest recording the ensemble configuration and normalization
/// statistics.
inline void save_ensemble(const RoSAEModel& model, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir + ": " + ec.message());
    }

    nlohmann::json manifest;
    manifest["version"] = kModelFormatVersion;
    manifest["m"] = model.members.size();
    manifest["master_seed"] = model.config.master_seed;
    manifest["base_config"] = rlae_config_to_json(model.config.base);
    manifest["norm_stats"] = nlohmann::json::array();
    for (const NormStats& stats : model.norm_stats) {
        manifest["norm_stats"].push_back(
            {{"mean", stats.mean}, {"stddev", stats.stddev}, {"degenerate", stats.degenerate()}});
    }
    manifest["members"] = nlohmann::json::array();
    for (std::size_t i = 0; i < model.members.size(); ++i) {
        const std::string name = member_file_name(i);
        manifest["members"].push_back(name);
        save_rlae_model(model.members[i], (std::filesystem::path(dir) / name).string());
    }
    detail::write_json_file(manifest, (std::filesystem::path(dir) / "manifest.json").string());
}

inline RoSAEModel load_ensemble(const std::string& dir) {
    const std::string manifest_path = (std::filesystem::path(dir) / "manifest.json").string();
    const nlohmann::json manifest = detail::read_json_file(manifest_path, "ensemble manifest");
    detail::check_version(manifest, "ensemble manifest " + manifest_path);

    RoSAEModel model;
    model.config.m = manifest.at("m").get<std::size_t>();
    model.config.master_seed = manifest.at("master_seed").get<std::uint64_t>();
    model.config.base = rlae_config_from_json(manifest.at("base_config"));

    const auto member_files = manifest.at("members").get<std::vector<std::string>>();
    if (member_files.size() != model.config.m) {
        throw SchemaError("ensemble manifest: member list does not match m");
    }
    for (const std::string& name : member_files) {
        model.members.push_back(
            load_rlae_model((std::filesystem::path(dir) / name).string()));
    }
    for (const auto& stats : manifest.at("norm_stats")) {
        NormStats ns;
        ns.mean = stats.at("mean").get<double>();
        ns.stddev = stats.at("stddev").get<double>();
        model.norm_stats.push_back(ns);
    }
    if (model.norm_stats.size() != model.members.size()) {
        throw SchemaError("ensemble manifest: norm_stats does not match member count");
    }
    return model;
}

} // namespace rosae
