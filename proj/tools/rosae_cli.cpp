// Command line front end: contamination, training, scoring, evaluation, and
// benchmark pipelines over document embedding files.
//
// Exit codes: 0 success, 1 data or configuration error, 2 usage error.
// Errors are emitted as one JSON object per line on stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <rosae/rosae.hpp>

namespace {

using nlohmann::json;

/// A required value is missing or flags contradict each other: reported as a
/// usage error (exit 2), unlike data errors (exit 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything the CLI can configure, with the library defaults filled in.
/// Config file keys carry exactly these names; flags override file values.
struct PipelineConfig {
    // inputs
    std::string embeddings;
    std::string texts;
    std::string test_embeddings;
    std::string hierarchy;
    std::string stopwords;
    std::string input;
    std::string report;
    std::size_t vocab_size = 2000;

    // contamination
    std::string inlier;
    std::size_t size = 0; // 0 = largest feasible split
    double nu = 0.1;
    std::string mode = "independent";
    bool no_sample = false;
    std::size_t test_size = 0; // 0 = same as size

    // detector
    std::vector<std::size_t> hidden = {128, 64};
    std::size_t enc_dim = 64;
    std::size_t rsr_dim = 32;
    std::size_t k = 5;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lambda3 = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    double prune_min = 0.2;
    double prune_max = 0.5;
    double lle_reg = rosae::kDefaultLleRegularization;

    // ensemble and runs
    std::size_t members = 20;
    std::size_t runs = 10;
    std::uint64_t seed = 0;
    std::size_t jobs = 0; // 0 = available parallelism

    // sweep grids (empty grid = keep the base value)
    std::vector<std::size_t> m_grid = {1, 5, 20};
    std::vector<std::size_t> k_grid = {3, 5, 10};
    std::vector<std::size_t> d_grid = {8, 32};
    std::vector<double> lambda3_grid;

    // outputs
    std::string out;
    std::string model_dir;
};

void emit_error(const std::string& type, const std::string& message) {
    std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

std::string error_type(const rosae::Error& e) {
    if (dynamic_cast<const rosae::InvalidArgument*>(&e)) return "invalid-argument";
    if (dynamic_cast<const rosae::InvalidData*>(&e)) return "invalid-data";
    if (dynamic_cast<const rosae::NumericFailure*>(&e)) return "numeric-failure";
    if (dynamic_cast<const rosae::SchemaError*>(&e)) return "schema-error";
    if (dynamic_cast<const rosae::MissingTopic*>(&e)) return "missing-topic";
    if (dynamic_cast<const rosae::CapacityError*>(&e)) return "capacity-error";
    if (dynamic_cast<const rosae::UndefinedMetric*>(&e)) return "undefined-metric";
    if (dynamic_cast<const rosae::IoError*>(&e)) return "io-error";
    return "error";
}

json pipeline_config_to_json(const PipelineConfig& c, const std::string& command) {
    json j;
    j["command"] = command;
    j["library_version"] = rosae::kLibraryVersion;
    j["embeddings"] = c.embeddings;
    j["texts"] = c.texts;
    j["test_embeddings"] = c.test_embeddings;
    j["hierarchy"] = c.hierarchy;
    j["stopwords"] = c.stopwords;
    j["input"] = c.input;
    j["report"] = c.report;
    j["vocab_size"] = c.vocab_size;
    j["inlier"] = c.inlier;
    j["size"] = c.size;
    j["nu"] = c.nu;
    j["mode"] = c.mode;
    j["no_sample"] = c.no_sample;
    j["test_size"] = c.test_size;
    j["hidden"] = c.hidden;
    j["enc_dim"] = c.enc_dim;
    j["rsr_dim"] = c.rsr_dim;
    j["k"] = c.k;
    j["lambda1"] = c.lambda1;
    j["lambda2"] = c.lambda2;
    j["lambda3"] = c.lambda3;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["lr"] = c.lr;
    j["prune_min"] = c.prune_min;
    j["prune_max"] = c.prune_max;
    j["lle_reg"] = c.lle_reg;
    j["members"] = c.members;
    j["runs"] = c.runs;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["m_grid"] = c.m_grid;
    j["k_grid"] = c.k_grid;
    j["d_grid"] = c.d_grid;
    j["lambda3_grid"] = c.lambda3_grid;
    j["out"] = c.out;
    j["model_dir"] = c.model_dir;
    return j;
}

template <typename T>
void read_key(const json& j, const std::string& key, T& into) {
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw rosae::InvalidArgument("config: key \"" + key + "\" has the wrong type");
    }
}

void apply_config_json(PipelineConfig& c, const json& j) {
    if (!j.is_object()) {
        throw rosae::InvalidArgument("config: top level must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key == "embeddings") read_key(j, key, c.embeddings);
        else if (key == "texts") read_key(j, key, c.texts);
        else if (key == "test_embeddings") read_key(j, key, c.test_embeddings);
        else if (key == "hierarchy") read_key(j, key, c.hierarchy);
        else if (key == "stopwords") read_key(j, key, c.stopwords);
        else if (key == "input") read_key(j, key, c.input);
        else if (key == "report") read_key(j, key, c.report);
        else if (key == "vocab_size") read_key(j, key, c.vocab_size);
        else if (key == "inlier") read_key(j, key, c.inlier);
        else if (key == "size") read_key(j, key, c.size);
        else if (key == "nu") read_key(j, key, c.nu);
        else if (key == "mode") read_key(j, key, c.mode);
        else if (key == "no_sample") read_key(j, key, c.no_sample);
        else if (key == "test_size") read_key(j, key, c.test_size);
        else if (key == "hidden") read_key(j, key, c.hidden);
        else if (key == "enc_dim") read_key(j, key, c.enc_dim);
        else if (key == "rsr_dim") read_key(j, key, c.rsr_dim);
        else if (key == "k") read_key(j, key, c.k);
        else if (key == "lambda1") read_key(j, key, c.lambda1);
        else if (key == "lambda2") read_key(j, key, c.lambda2);
        else if (key == "lambda3") read_key(j, key, c.lambda3);
        else if (key == "epochs") read_key(j, key, c.epochs);
        else if (key == "batch_size") read_key(j, key, c.batch_size);
        else if (key == "lr") read_key(j, key, c.lr);
        else if (key == "prune_min") read_key(j, key, c.prune_min);
        else if (key == "prune_max") read_key(j, key, c.prune_max);
        else if (key == "lle_reg") read_key(j, key, c.lle_reg);
        else if (key == "members") read_key(j, key, c.members);
        else if (key == "runs") read_key(j, key, c.runs);
        else if (key == "seed") read_key(j, key, c.seed);
        else if (key == "jobs") read_key(j, key, c.jobs);
        else if (key == "m_grid") read_key(j, key, c.m_grid);
        else if (key == "k_grid") read_key(j, key, c.k_grid);
        else if (key == "d_grid") read_key(j, key, c.d_grid);
        else if (key == "lambda3_grid") read_key(j, key, c.lambda3_grid);
        else if (key == "out") read_key(j, key, c.out);
        else if (key == "model_dir") read_key(j, key, c.model_dir);
        else throw rosae::InvalidArgument("config: unknown key \"" + key + "\"");
    }
}

void apply_config_file(PipelineConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw rosae::IoError("cannot open config file: " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw rosae::SchemaError("config file is not valid JSON: " + path);
    }
    apply_config_json(c, j);
}

/// Finds a --config argument anywhere on the command line so the file can be
/// applied before flag parsing (flags then override file values).
std::optional<std::string> find_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config") {
            if (i + 1 >= argc) {
                throw UsageError("--config requires a file path");
            }
            return std::string(argv[i + 1]);
        }
        if (arg.rfind("--config=", 0) == 0) {
            return arg.substr(9);
        }
    }
    return std::nullopt;
}

void apply_jobs_env(PipelineConfig& c) {
    const char* env = std::getenv("ROSAE_JOBS");
    if (env == nullptr || *env == '\0') {
        return;
    }
    char* end = nullptr;
    const unsigned long value = std::strtoul(env, &end, 10);
    if (end == nullptr || *end != '\0') {
        throw rosae::InvalidArgument("ROSAE_JOBS must be a non-negative integer, got \"" +
                                     std::string(env) + "\"");
    }
    c.jobs = static_cast<std::size_t>(value);
}

rosae::RLAEConfig make_rlae_config(const PipelineConfig& c) {
    rosae::RLAEConfig cfg;
    cfg.encoder_hidden = c.hidden;
    cfg.enc_out_dim = c.enc_dim;
    cfg.rsr_dim = c.rsr_dim;
    cfg.k_neighbours = c.k;
    cfg.lambda1 = c.lambda1;
    cfg.lambda2 = c.lambda2;
    cfg.lambda3 = c.lambda3;
    cfg.epochs = c.epochs;
    cfg.batch_size = c.batch_size;
    cfg.learning_rate = c.lr;
    cfg.prune_low = c.prune_min;
    cfg.prune_high = c.prune_max;
    cfg.lle_reg = c.lle_reg;
    return cfg;
}

rosae::StopwordSet resolve_stopwords(const PipelineConfig& c) {
    return c.stopwords.empty() ? rosae::default_stopwords() : rosae::load_stopwords(c.stopwords);
}

/// Loads the experiment corpus from either an embeddings file or, as the
/// fallback, a text file vectorized with TF-IDF.
rosae::EmbeddedDataset load_input_dataset(const PipelineConfig& c) {
    if (!c.embeddings.empty() && !c.texts.empty()) {
        throw UsageError("give either --embeddings or --texts, not both");
    }
    if (!c.embeddings.empty()) {
        return rosae::load_embeddings(c.embeddings);
    }
    if (!c.texts.empty()) {
        const auto docs = rosae::load_documents(c.texts);
        return rosae::tfidf_vectorize(docs, c.vocab_size, resolve_stopwords(c));
    }
    throw UsageError("an input corpus is required: --embeddings or --texts");
}

rosae::ContaminationSpec make_contamination_spec(const PipelineConfig& c,
                                                 const rosae::EmbeddedDataset& data,
                                                 const rosae::TopicHierarchy& h) {
    rosae::ContaminationSpec spec;
    spec.inlier_topic = c.inlier;
    spec.rate = c.nu;
    spec.mode = rosae::contamination_mode_from_string(c.mode);
    spec.sample = !c.no_sample;
    spec.split_size = c.size;
    if (spec.split_size == 0) {
        const auto parts = rosae::partition_anomalies(data, h, c.inlier);
        const auto& eligible = spec.mode == rosae::ContaminationMode::independent
                                   ? parts.independent
                                   : parts.contextual;
        spec.split_size = rosae::max_split_size(parts.inliers.size(), eligible.size(), c.nu);
        if (spec.split_size == 0) {
            throw rosae::CapacityError("no feasible split: " + std::to_string(parts.inliers.size()) +
                                       " inliers and " + std::to_string(eligible.size()) +
                                       " eligible anomalies for rate " + std::to_string(c.nu));
        }
    }
    return spec;
}

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw UsageError(message);
    }
}

int cmd_tac(const PipelineConfig& c) {
    require(!c.hierarchy.empty(), "--hierarchy is required");
    require(!c.inlier.empty(), "--inlier is required");
    require(!c.out.empty(), "--out is required");

    const auto data = load_input_dataset(c);
    const auto h = rosae::load_hierarchy(c.hierarchy);
    auto spec = make_contamination_spec(c, data, h);
    spec.seed = rosae::seed_split(c.seed, "tac");

    const auto split = rosae::contaminate(data, h, spec);
    json extra;
    extra["pipeline_config"] = pipeline_config_to_json(c, "tac");
    rosae::save_split(split, c.out, c.out + ".manifest.json", extra);

    std::cout << json{{"rows", split.dataset.size()},
                      {"anomalies", split.anomaly_count},
                      {"out", c.out}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_train(const PipelineConfig& c) {
    require(!c.input.empty(), "--input is required");
    require(!c.model_dir.empty(), "--model-dir is required");

    const auto [data, flags] = rosae::load_split(c.input);
    (void)flags; // training is unsupervised; labels on the split are ignored

    rosae::EnsembleConfig cfg;
    cfg.m = c.members;
    cfg.base = make_rlae_config(c);
    cfg.master_seed = rosae::seed_split(c.seed, "fit");

    const auto model = rosae::fit_ensemble(data.matrix, cfg, c.jobs);
    rosae::save_ensemble(model, c.model_dir);

    for (std::size_t i : model.degenerate_members()) {
        std::cerr << json{{"warning", {{"type", "degenerate-member"}, {"member", i}}}}.dump()
                  << '\n';
    }
    std::cout << json{{"members", model.size()},
                      {"rows", data.size()},
                      {"model_dir", c.model_dir}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_score(const PipelineConfig& c) {
    require(!c.model_dir.empty(), "--model-dir is required");
    require(!c.input.empty(), "--input is required");
    require(!c.out.empty(), "--out is required");

    const auto model = rosae::load_ensemble(c.model_dir);
    const auto [data, flags] = rosae::load_split(c.input);

    rosae::ScoreReport report;
    report.ids = data.ids;
    report.scores = rosae::decision_scores(model, data.matrix);
    report.labels = flags;
    rosae::save_report_csv(report, c.out);

    std::cout << json{{"rows", report.size()}, {"out", c.out}}.dump() << '\n';
    return 0;
}

int cmd_eval(const PipelineConfig& c) {
    require(!c.report.empty(), "--report is required");

    const auto report = rosae::load_report_csv(c.report);
    const double auc = rosae::roc_auc(report.scores, report.labels);
    const double ap = rosae::average_precision(report.scores, report.labels);
    std::size_t positives = 0;
    for (auto label : report.labels) {
        positives += label != 0 ? 1 : 0;
    }
    std::cout << json{{"auc", auc}, {"ap", ap}, {"n", report.size()}, {"positives", positives}}
                     .dump()
              << '\n';
    return 0;
}

rosae::BenchmarkSpec make_benchmark_spec(const PipelineConfig& c,
                                         const rosae::EmbeddedDataset& data,
                                         const rosae::TopicHierarchy& h) {
    rosae::BenchmarkSpec spec;
    spec.split = make_contamination_spec(c, data, h);
    spec.test_size = c.test_size;
    spec.ensemble.m = c.members;
    spec.ensemble.base = make_rlae_config(c);
    spec.runs = c.runs;
    spec.seed = c.seed;
    return spec;
}

int cmd_bench(const PipelineConfig& c) {
    require(!c.hierarchy.empty(), "--hierarchy is required");
    require(!c.inlier.empty(), "--inlier is required");
    require(!c.out.empty(), "--out is required");

    const auto train_pool = load_input_dataset(c);
    const auto test_pool =
        c.test_embeddings.empty() ? train_pool : rosae::load_embeddings(c.test_embeddings);
    const auto h = rosae::load_hierarchy(c.hierarchy);
    const auto spec = make_benchmark_spec(c, train_pool, h);

    const auto result = rosae::run_benchmark(train_pool, test_pool, h, spec, c.jobs);

    json doc;
    doc["version"] = rosae::kModelFormatVersion;
    doc["config"] = pipeline_config_to_json(c, "bench");
    doc["resolved_split_size"] = spec.split.split_size;
    doc["result"] = rosae::benchmark_result_to_json(result);
    std::ofstream out(c.out);
    if (!out) {
        throw rosae::IoError("cannot write file: " + c.out);
    }
    out << doc.dump(2) << '\n';

    std::cout << json{{"runs", c.runs},
                      {"auc_mean", result.auc_summary.mean},
                      {"ap_mean", result.ap_summary.mean},
                      {"out", c.out}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_sweep(const PipelineConfig& c) {
    require(!c.hierarchy.empty(), "--hierarchy is required");
    require(!c.inlier.empty(), "--inlier is required");
    require(!c.out.empty(), "--out is required");

    const auto train_pool = load_input_dataset(c);
    const auto test_pool =
        c.test_embeddings.empty() ? train_pool : rosae::load_embeddings(c.test_embeddings);
    const auto h = rosae::load_hierarchy(c.hierarchy);
    const auto base_spec = make_benchmark_spec(c, train_pool, h);

    const auto m_grid = c.m_grid.empty() ? std::vector<std::size_t>{c.members} : c.m_grid;
    const auto k_grid = c.k_grid.empty() ? std::vector<std::size_t>{c.k} : c.k_grid;
    const auto d_grid = c.d_grid.empty() ? std::vector<std::size_t>{c.rsr_dim} : c.d_grid;
    const auto l3_grid = c.lambda3_grid.empty() ? std::vector<double>{c.lambda3} : c.lambda3_grid;

    json cells = json::array();
    for (std::size_t m : m_grid) {
        for (std::size_t k : k_grid) {
            for (std::size_t d : d_grid) {
                for (double l3 : l3_grid) {
                    rosae::BenchmarkSpec spec = base_spec;
                    spec.ensemble.m = m;
                    spec.ensemble.base.k_neighbours = k;
                    spec.ensemble.base.rsr_dim = d;
                    spec.ensemble.base.lambda3 = l3;
                    const auto result =
                        rosae::run_benchmark(train_pool, test_pool, h, spec, c.jobs);
                    json cell;
                    cell["m"] = m;
                    cell["k"] = k;
                    cell["rsr_dim"] = d;
                    cell["lambda3"] = l3;
                    cell["result"] = rosae::benchmark_result_to_json(result);
                    cells.push_back(std::move(cell));
                }
            }
        }
    }

    json doc;
    doc["version"] = rosae::kModelFormatVersion;
    doc["config"] = pipeline_config_to_json(c, "sweep");
    doc["resolved_split_size"] = base_spec.split.split_size;
    doc["cells"] = std::move(cells);
    std::ofstream out(c.out);
    if (!out) {
        throw rosae::IoError("cannot write file: " + c.out);
    }
    out << doc.dump(2) << '\n';

    std::cout << json{{"cells", doc["cells"].size()}, {"out", c.out}}.dump() << '\n';
    return 0;
}

void add_input_options(CLI::App* cmd, PipelineConfig& c, bool with_test_pool) {
    cmd->add_option("--embeddings", c.embeddings, "Embeddings JSONL corpus")
        ->capture_default_str();
    cmd->add_option("--texts", c.texts, "Text JSONL corpus (TF-IDF fallback)")
        ->capture_default_str();
    cmd->add_option("--stopwords", c.stopwords, "Stopword file, one word per line")
        ->capture_default_str();
    cmd->add_option("--vocab-size", c.vocab_size, "TF-IDF vocabulary size")
        ->capture_default_str();
    cmd->add_option("--hierarchy", c.hierarchy, "Topic hierarchy JSON (child -> parent)")
        ->capture_default_str();
    if (with_test_pool) {
        cmd->add_option("--test-embeddings", c.test_embeddings,
                        "Separate embeddings pool for test splits")
            ->capture_default_str();
    }
}

void add_tac_options(CLI::App* cmd, PipelineConfig& c) {
    cmd->add_option("--inlier", c.inlier, "Inlier topic")->capture_default_str();
    cmd->add_option("--size", c.size, "Split size (0 = largest feasible)")
        ->capture_default_str();
    cmd->add_option("--nu", c.nu, "Contamination rate in [0,1)")->capture_default_str();
    cmd->add_option("--mode", c.mode, "Anomaly kind")
        ->check(CLI::IsMember({"independent", "contextual"}))
        ->capture_default_str();
    cmd->add_flag("--no-sample", c.no_sample,
                  "Take eligible rows in corpus order instead of sampling");
}

void add_model_options(CLI::App* cmd, PipelineConfig& c) {
    cmd->add_option("--hidden", c.hidden, "Encoder hidden layer widths")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--enc-dim", c.enc_dim, "Encoder output dimension e")->capture_default_str();
    cmd->add_option("--rsr-dim", c.rsr_dim, "RSR latent dimension d")->capture_default_str();
    cmd->add_option("--k", c.k, "Neighbour count for the local graph")->capture_default_str();
    cmd->add_option("--lambda1", c.lambda1, "Projection loss weight")->capture_default_str();
    cmd->add_option("--lambda2", c.lambda2, "Orthogonality loss weight")->capture_default_str();
    cmd->add_option("--lambda3", c.lambda3, "Neighbourhood loss weight")->capture_default_str();
    cmd->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", c.batch_size, "Mini-batch size (capped at N)")
        ->capture_default_str();
    cmd->add_option("--lr", c.lr, "Learning rate")->capture_default_str();
    cmd->add_option("--prune-min", c.prune_min, "Lower disconnection probability")
        ->capture_default_str();
    cmd->add_option("--prune-max", c.prune_max, "Upper disconnection probability")
        ->capture_default_str();
    cmd->add_option("--lle-reg", c.lle_reg, "Local Gram regularization (relative to trace)")
        ->capture_default_str();
    cmd->add_option("--members,-m", c.members, "Base detector count")->capture_default_str();
    cmd->add_option("--jobs", c.jobs, "Worker pool size (0 = available parallelism)")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    PipelineConfig cfg;
    int parsed_stage = 0;
    try {
        apply_jobs_env(cfg);
        if (const auto config_path = find_config_path(argc, argv)) {
            apply_config_file(cfg, *config_path);
        }
        parsed_stage = 1;

        CLI::App app{"RoSAE: robust subspace local recovery autoencoder ensembles for "
                     "textual anomaly detection"};
        app.require_subcommand(1);
        app.set_version_flag("--version", rosae::kLibraryVersion);
        std::string config_file;
        app.add_option("--config", config_file, "JSON config file; flags override its values");

        CLI::App* tac = app.add_subcommand("tac", "Build a contaminated split");
        add_input_options(tac, cfg, false);
        add_tac_options(tac, cfg);
        tac->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
        tac->add_option("--out", cfg.out, "Output split JSONL path")->capture_default_str();
        tac->add_option("--config", config_file, "JSON config file");

        CLI::App* train = app.add_subcommand("train", "Fit an ensemble on a split");
        train->add_option("--input", cfg.input, "Training split or embeddings JSONL")
            ->capture_default_str();
        add_model_options(train, cfg);
        train->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
        train->add_option("--model-dir", cfg.model_dir, "Output model directory")
            ->capture_default_str();
        train->add_option("--config", config_file, "JSON config file");

        CLI::App* score = app.add_subcommand("score", "Score a split with a trained ensemble");
        score->add_option("--model-dir", cfg.model_dir, "Trained model directory")
            ->capture_default_str();
        score->add_option("--input", cfg.input, "Split or embeddings JSONL to score")
            ->capture_default_str();
        score->add_option("--out", cfg.out, "Output report CSV path")->capture_default_str();
        score->add_option("--config", config_file, "JSON config file");

        CLI::App* eval = app.add_subcommand("eval", "Evaluate a score report");
        eval->add_option("--report", cfg.report, "Report CSV (id,score,label)")
            ->capture_default_str();
        eval->add_option("--config", config_file, "JSON config file");

        CLI::App* bench = app.add_subcommand("bench", "Multi-run contaminate/train/score/eval");
        add_input_options(bench, cfg, true);
        add_tac_options(bench, cfg);
        bench->add_option("--test-size", cfg.test_size, "Test split size (0 = same as --size)")
            ->capture_default_str();
        add_model_options(bench, cfg);
        bench->add_option("--runs", cfg.runs, "Number of runs")->capture_default_str();
        bench->add_option("--seed", cfg.seed, "Base seed for all runs")->capture_default_str();
        bench->add_option("--out", cfg.out, "Output benchmark JSON path")->capture_default_str();
        bench->add_option("--config", config_file, "JSON config file");

        CLI::App* sweep = app.add_subcommand("sweep", "Benchmark over ablation grids");
        add_input_options(sweep, cfg, true);
        add_tac_options(sweep, cfg);
        sweep->add_option("--test-size", cfg.test_size, "Test split size (0 = same as --size)")
            ->capture_default_str();
        add_model_options(sweep, cfg);
        sweep->add_option("--runs", cfg.runs, "Runs per grid cell")->capture_default_str();
        sweep->add_option("--seed", cfg.seed, "Base seed shared by all cells")
            ->capture_default_str();
        sweep->add_option("--m-grid", cfg.m_grid, "Detector count grid")
            ->delimiter(',')
            ->capture_default_str();
        sweep->add_option("--k-grid", cfg.k_grid, "Neighbour count grid")
            ->delimiter(',')
            ->capture_default_str();
        sweep->add_option("--d-grid", cfg.d_grid, "RSR dimension grid")
            ->delimiter(',')
            ->capture_default_str();
        sweep->add_option("--lambda3-grid", cfg.lambda3_grid, "Neighbourhood weight grid")
            ->delimiter(',')
            ->capture_default_str();
        sweep->add_option("--out", cfg.out, "Output sweep JSON path")->capture_default_str();
        sweep->add_option("--config", config_file, "JSON config file");

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForVersion& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            emit_error("usage", e.what());
            return 2;
        }

        if (tac->parsed()) return cmd_tac(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (score->parsed()) return cmd_score(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        emit_error("usage", "a subcommand is required");
        return 2;
    } catch (const UsageError& e) {
        emit_error("usage", e.what());
        return 2;
    } catch (const rosae::Error& e) {
        emit_error(error_type(e), e.what());
        return 1;
    } catch (const json::exception& e) {
        emit_error("schema-error", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error(parsed_stage == 0 ? "config-error" : "internal", e.what());
        return 1;
    }
}
