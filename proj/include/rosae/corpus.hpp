#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rosae/error.hpp"
#include "rosae/matrix.hpp"

namespace rosae {

/// One corpus document. Carries raw text, a precomputed embedding, or both.
struct Document {
    std::string id;
    std::string topic;
    std::optional<std::string> text;
    std::optional<std::vector<double>> vector;
};

/// Child topic -> direct parent topic map. The parent graph must be a forest.
struct TopicHierarchy {
    std::map<std::string, std::string> parent_of;

    bool contains(const std::string& topic) const { return parent_of.count(topic) != 0; }

    const std::string& parent(const std::string& topic) const {
        const auto it = parent_of.find(topic);
        if (it == parent_of.end()) {
            throw MissingTopic("unknown topic: " + topic);
        }
        return it->second;
    }

    /// Rejects hierarchies whose parent chains loop back on themselves.
    void validate() const {
        for (const auto& [child, _] : parent_of) {
            std::unordered_set<std::string> seen;
            const std::string* cur = &child;
            while (parent_of.count(*cur) != 0) {
                if (!seen.insert(*cur).second) {
                    throw SchemaError("topic hierarchy contains a cycle through: " + *cur);
                }
                cur = &parent_of.at(*cur);
            }
        }
    }
};

/// N documents embedded as the rows of an N x D matrix, with aligned ids
/// and topic labels.
struct EmbeddedDataset {
    DenseMatrix matrix;
    std::vector<std::string> ids;
    std::vector<std::string> topics;

    std::size_t size() const { return matrix.rows; }
    std::size_t dim() const { return matrix.cols; }
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    return in;
}

inline nlohmann::json parse_json_line(const std::string& line, const std::string& path,
                                      std::size_t line_no) {
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw SchemaError(path + ": line " + std::to_string(line_no) + " is not a JSON object");
    }
    return record;
}

inline std::string require_string(const nlohmann::json& record, const char* key,
                                  const std::string& path, std::size_t line_no) {
    if (!record.contains(key) || !record[key].is_string()) {
        throw SchemaError(path + ": line " + std::to_string(line_no) + " lacks string field \"" +
                          key + "\"");
    }
    return record[key].get<std::string>();
}

} // namespace detail

/// Reads an embeddings JSONL file: one {"id", "topic", "vector"} object per
/// line. All vectors must share one dimensionality and ids must be unique.
/// An optional integer "anomaly" field is tolerated (and ignored) so that
/// contaminated split files load as plain datasets too.
inline EmbeddedDataset load_embeddings(const std::string& path) {
    auto in = detail::open_input(path);
    EmbeddedDataset out;
    std::unordered_set<std::string> seen_ids;
    std::vector<double> rows;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
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
        std::vector<double> vec;
        vec.reserve(record["vector"].size());
        for (const auto& v : record["vector"]) {
            if (!v.is_number()) {
                throw SchemaError(path + ": record " + id + " has a non-numeric vector entry");
            }
            const double x = v.get<double>();
            if (!std::isfinite(x)) {
                throw SchemaError(path + ": record " + id + " has a non-finite vector entry");
            }
            vec.push_back(x);
        }
        if (out.ids.empty()) {
            dim = vec.size();
            if (dim == 0) {
                throw SchemaError(path + ": record " + id + " has an empty vector");
            }
        } else if (vec.size() != dim) {
            throw SchemaError(path + ": record " + id + " (line " + std::to_string(line_no) +
                              ") has vector length " + std::to_string(vec.size()) +
                              ", expected " + std::to_string(dim));
        }
        if (!seen_ids.insert(id).second) {
            throw SchemaError(path + ": duplicate id " + id);
        }
        rows.insert(rows.end(), vec.begin(), vec.end());
        out.ids.push_back(std::move(id));
        out.topics.push_back(std::move(topic));
    }
    out.matrix.rows = out.ids.size();
    out.matrix.cols = dim;
    out.matrix.values = std::move(rows);
    return out;
}

/// Writes a dataset in the embeddings JSONL format read by load_embeddings.
inline void save_embeddings(const EmbeddedDataset& data, const std::string& path) {
    std::ofstream outfile(path);
    if (!outfile) {
        throw IoError("cannot write file: " + path);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        nlohmann::json record;
        record["id"] = data.ids[i];
        record["topic"] = data.topics[i];
        record["vector"] = std::vector<double>(data.matrix.row(i), data.matrix.row(i) + data.dim());
        outfile << record.dump() << '\n';
    }
}

/// Reads a text JSONL file: one {"id", "topic", "text"} object per line.
inline std::vector<Document> load_documents(const std::string& path) {
    auto in = detail::open_input(path);
    std::vector<Document> docs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto record = detail::parse_json_line(line, path, line_no);
        Document doc;
        doc.id = detail::require_string(record, "id", path, line_no);
        doc.topic = detail::require_string(record, "topic", path, line_no);
        doc.text = detail::require_string(record, "text", path, line_no);
        if (!seen_ids.insert(doc.id).second) {
            throw SchemaError(path + ": duplicate id " + doc.id);
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

/// Reads a hierarchy JSON file: one object mapping child topic -> parent.
inline TopicHierarchy load_hierarchy(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json obj = nlohmann::json::parse(in, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        throw SchemaError(path + ": expected a single JSON object");
    }
    TopicHierarchy h;
    for (const auto& [child, parent] : obj.items()) {
        if (!parent.is_string()) {
            throw SchemaError(path + ": parent of \"" + child + "\" is not a string");
        }
        h.parent_of[child] = parent.get<std::string>();
    }
    h.validate();
    return h;
}

using StopwordSet = std::unordered_set<std::string>;

/// Bundled English stopword list used when no file is supplied.
inline const StopwordSet& default_stopwords() {
    static const StopwordSet words = {
        "a",     "about", "above", "after", "again",  "all",   "also",  "am",    "an",
        "and",   "any",   "are",   "as",    "at",     "be",    "been",  "being", "below",
        "but",   "by",    "can",   "could", "did",    "do",    "does",  "doing", "down",
        "during", "each", "few",   "for",   "from",   "had",   "has",   "have",  "having",
        "he",    "her",   "here",  "hers",  "him",    "his",   "how",   "i",     "if",
        "in",    "into",  "is",    "it",    "its",    "just",  "me",    "more",  "most",
        "my",    "no",    "nor",   "not",   "now",    "of",    "off",   "on",    "once",
        "only",  "or",    "other", "our",   "ours",   "out",   "over",  "own",   "s",
        "same",  "she",   "should", "so",   "some",   "such",  "t",     "than",  "that",
        "the",   "their", "theirs", "them", "then",   "there", "these", "they",  "this",
        "those", "through", "to",  "too",   "under",  "until", "up",    "very",  "was",
        "we",    "were",  "what",  "when",  "where",  "which", "while", "who",   "whom",
        "why",   "will",  "with",  "would", "you",    "your",  "yours",
    };
    return words;
}

/// Reads a stopword file: one word per line, blank lines ignored.
inline StopwordSet load_stopwords(const std::string& path) {
    auto in = detail::open_input(path);
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty()) {
            words.insert(line);
        }
    }
    return words;
}

/// Lowercases, splits on whitespace/punctuation, and drops stopwords while
/// preserving token order. Token characters are ASCII alphanumerics plus any
/// non-ASCII byte, so UTF-8 sequences survive intact.
inline std::vector<std::string> preprocess_text(const std::string& raw,
                                                const StopwordSet& stopwords) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            if (stopwords.count(current) == 0) {
                tokens.push_back(current);
            }
            current.clear();
        }
    };
    for (unsigned char c : raw) {
        if (c >= 0x80) {
            current.push_back(static_cast<char>(c));
        } else if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

/// TF-IDF fallback vectorizer. The vocabulary is the `vocab_size` tokens with
/// the highest document frequency (ties broken lexicographically); weights
/// are term count times idf with idf = ln(N / df) + 1, and each nonzero row
/// is scaled to unit L2 norm.
inline EmbeddedDataset tfidf_vectorize(const std::vector<Document>& corpus,
                                       std::size_t vocab_size,
                                       const StopwordSet& stopwords = default_stopwords()) {
    if (corpus.empty()) {
        throw InvalidArgument("tfidf_vectorize: empty corpus");
    }
    if (vocab_size == 0) {
        throw InvalidArgument("tfidf_vectorize: vocab_size must be positive");
    }
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(corpus.size());
    std::map<std::string, std::size_t> doc_freq;
    for (const auto& doc : corpus) {
        if (!doc.text) {
            throw InvalidArgument("tfidf_vectorize: document " + doc.id + " has no text");
        }
        auto tokens = preprocess_text(*doc.text, stopwords);
        std::unordered_set<std::string> distinct(tokens.begin(), tokens.end());
        for (const auto& t : distinct) {
            ++doc_freq[t];
        }
        tokenized.push_back(std::move(tokens));
    }

    // Highest document frequency first; lexicographic order breaks ties
    // (doc_freq iterates in lexicographic order, stable_sort keeps it).
    std::vector<std::pair<std::string, std::size_t>> by_freq(doc_freq.begin(), doc_freq.end());
    std::stable_sort(by_freq.begin(), by_freq.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t vocab = std::min(vocab_size, by_freq.size());

    std::unordered_map<std::string, std::size_t> index_of;
    std::vector<double> idf(vocab);
    const double n_docs = static_cast<double>(corpus.size());
    for (std::size_t i = 0; i < vocab; ++i) {
        index_of.emplace(by_freq[i].first, i);
        idf[i] = std::log(n_docs / static_cast<double>(by_freq[i].second)) + 1.0;
    }

    EmbeddedDataset out;
    out.matrix = DenseMatrix(corpus.size(), vocab);
    out.ids.reserve(corpus.size());
    out.topics.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        double* row = out.matrix.row(i);
        for (const auto& token : tokenized[i]) {
            const auto it = index_of.find(token);
            if (it != index_of.end()) {
                row[it->second] += 1.0;
            }
        }
        for (std::size_t j = 0; j < vocab; ++j) {
            row[j] *= idf[j];
        }
        const double norm = norm2(out.matrix.row_span(i));
        if (norm > 0.0) {
            for (std::size_t j = 0; j < vocab; ++j) {
                row[j] /= norm;
            }
        }
        out.ids.push_back(corpus[i].id);
        out.topics.push_back(corpus[i].topic);
    }
    return out;
}

} // namespace rosae
