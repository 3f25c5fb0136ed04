#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rosae/error.hpp"

namespace rosae {

/// Ids, anomaly scores, and ground-truth labels of one scored split.
struct ScoreReport {
    std::vector<std::string> ids;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return ids.size(); }
};

namespace detail {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

inline void save_report_csv(const ScoreReport& report, const std::string& path) {
    if (report.scores.size() != report.ids.size() || report.labels.size() != report.ids.size()) {
        throw InvalidArgument("report: ids, scores, and labels differ in length");
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write file: " + path);
    }
    out << "id,score,label\n";
    out.precision(17);
    for (std::size_t i = 0; i < report.size(); ++i) {
        out << detail::csv_escape(report.ids[i]) << ',' << report.scores[i] << ','
            << static_cast<int>(report.labels[i]) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

inline ScoreReport load_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != "id,score,label") {
        throw SchemaError(path + ": expected header \"id,score,label\"");
    }
    ScoreReport report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::string id;
        std::size_t pos = 0;
        if (line[0] == '"') {
            pos = 1;
            while (pos < line.size()) {
                if (line[pos] == '"') {
                    if (pos + 1 < line.size() && line[pos + 1] == '"') {
                        id += '"';
                        pos += 2;
                        continue;
                    }
                    ++pos;
                    break;
                }
                id += line[pos++];
            }
            if (pos >= line.size() || line[pos] != ',') {
                throw SchemaError(path + ":" + std::to_string(line_no) + ": malformed quoted id");
            }
            ++pos;
        } else {
            const std::size_t comma = line.find(',');
            if (comma == std::string::npos) {
                throw SchemaError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
            }
            id = line.substr(0, comma);
            pos = comma + 1;
        }
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        }
        const std::string score_text = line.substr(pos, comma - pos);
        const std::string label_text = line.substr(comma + 1);
        try {
            std::size_t consumed = 0;
            report.scores.push_back(std::stod(score_text, &consumed));
            if (consumed != score_text.size()) {
                throw std::invalid_argument(score_text);
            }
            const int label = std::stoi(label_text);
            if (label != 0 && label != 1) {
                throw SchemaError(path + ":" + std::to_string(line_no) +
                                  ": label must be 0 or 1");
            }
            report.labels.push_back(static_cast<std::uint8_t>(label));
        } catch (const SchemaError&) {
            throw;
        } catch (const std::exception&) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": malformed numeric field");
        }
        report.ids.push_back(std::move(id));
    }
    return report;
}

} // namespace rosae
