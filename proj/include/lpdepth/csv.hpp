#pragma once

// RFC 4180 CSV reading and dataset ingestion.

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lpdepth/error.hpp"

namespace lpdepth {

using CsvRow = std::vector<std::string>;

// Splits RFC 4180 text into records. Quoted fields may contain commas, CR/LF
// and doubled quotes; a trailing newline does not start a new record.
inline std::vector<CsvRow> parse_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool after_quote = false;
    std::size_t line = 1;
    const auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
        after_quote = false;
    };
    const auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == ',') {
            end_field();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
            ++line;
        } else if (c == '"') {
            if (field_started || after_quote) throw ParseError("csv line " + std::to_string(line) + ": stray quote");
            in_quotes = true;
            field_started = true;
        } else {
            if (after_quote) throw ParseError("csv line " + std::to_string(line) + ": text after closing quote");
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted field");
    if (field_started || after_quote || !row.empty()) end_row();
    return rows;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline std::string trim_ws(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Strict decimal parse of a whole (whitespace-trimmed) cell.
inline bool parse_number(const std::string& cell, double& out) {
    const std::string t = trim_ws(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

struct Dataset {
    std::string name;
    std::vector<std::string> feature_names;
    Eigen::MatrixXd features;                // n x d
    std::vector<int> labels;                 // index into class_names
    std::vector<std::string> class_names;    // ascending (numeric when every label is a number)

    Eigen::Index rows() const { return features.rows(); }
    int dim() const { return static_cast<int>(features.cols()); }
    std::size_t num_classes() const { return class_names.size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> c(class_names.size(), 0);
        for (int l : labels) ++c[static_cast<std::size_t>(l)];
        return c;
    }
};

// Orders labels numerically if all of them are numbers, else lexicographically.
inline std::vector<std::string> sorted_labels(const std::set<std::string>& labels) {
    std::vector<std::string> out(labels.begin(), labels.end());
    bool numeric = true;
    for (const auto& l : out) {
        double v;
        if (!parse_number(l, v)) numeric = false;
    }
    if (numeric) {
        std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
            double x, y;
            parse_number(a, x);
            parse_number(b, y);
            return x < y;
        });
    }
    return out;
}

struct IngestOptions {
    std::string label_column;
    std::vector<std::string> drop_columns;
    bool require_label = true;  // false: unlabeled data for prediction
    std::size_t min_classes = 2;
};

// Dataset from parsed records (first record is the header). Row numbers in
// messages count data rows from 1.
inline Dataset dataset_from_records(const std::vector<CsvRow>& records, const IngestOptions& opt, std::string name = "") {
    if (records.empty()) throw ParseError("csv: no header row");
    const CsvRow header = [&] {
        CsvRow h;
        for (const auto& c : records.front()) h.push_back(trim_ws(c));
        return h;
    }();
    std::set<std::string> seen;
    for (const auto& h : header) {
        if (!seen.insert(h).second) throw ParseError("csv: duplicate column name '" + h + "'");
    }
    for (const auto& d : opt.drop_columns) {
        if (!seen.count(d)) throw ConfigError("csv: column to drop '" + d + "' not found");
    }
    std::ptrdiff_t label_idx = -1;
    if (!opt.label_column.empty()) {
        const auto it = std::find(header.begin(), header.end(), opt.label_column);
        if (it != header.end()) {
            label_idx = it - header.begin();
        } else if (opt.require_label) {
            throw ConfigError("csv: label column '" + opt.label_column + "' not found");
        }
    } else if (opt.require_label) {
        throw ConfigError("csv: no label column given");
    }
    std::vector<std::size_t> feat_idx;
    Dataset ds;
    ds.name = std::move(name);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == label_idx) continue;
        if (std::find(opt.drop_columns.begin(), opt.drop_columns.end(), header[j]) != opt.drop_columns.end()) continue;
        feat_idx.push_back(j);
        ds.feature_names.push_back(header[j]);
    }
    if (feat_idx.empty()) throw ConfigError("csv: no feature columns");

    std::vector<CsvRow> data;
    for (std::size_t r = 1; r < records.size(); ++r) {
        // A record that is a single empty field is a blank line.
        if (records[r].size() == 1 && trim_ws(records[r][0]).empty()) continue;
        data.push_back(records[r]);
    }
    if (data.empty()) throw InsufficientData("csv: no data rows");
    ds.features.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(feat_idx.size()));
    std::vector<std::string> raw_labels;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto& rec = data[r];
        const auto cell = [&](std::size_t j) -> std::string {
            if (j >= rec.size() || trim_ws(rec[j]).empty()) {
                throw ParseError("csv row " + std::to_string(r + 1) + ", column '" + header[j] + "': missing value");
            }
            return rec[j];
        };
        if (rec.size() > header.size()) {
            throw ParseError("csv row " + std::to_string(r + 1) + ": " + std::to_string(rec.size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        for (std::size_t k = 0; k < feat_idx.size(); ++k) {
            const std::string c = cell(feat_idx[k]);
            double v;
            if (!parse_number(c, v)) {
                throw ParseError("csv row " + std::to_string(r + 1) + ", column '" + header[feat_idx[k]] +
                                 "': not a number: '" + c + "'");
            }
            ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
        }
        if (label_idx >= 0) raw_labels.push_back(trim_ws(cell(static_cast<std::size_t>(label_idx))));
    }
    if (label_idx >= 0) {
        ds.class_names = sorted_labels(std::set<std::string>(raw_labels.begin(), raw_labels.end()));
        if (ds.class_names.size() < opt.min_classes) {
            throw InsufficientData("csv: need at least " + std::to_string(opt.min_classes) + " classes, found " +
                                   std::to_string(ds.class_names.size()));
        }
        std::map<std::string, int> index;
        for (std::size_t i = 0; i < ds.class_names.size(); ++i) index[ds.class_names[i]] = static_cast<int>(i);
        for (const auto& l : raw_labels) ds.labels.push_back(index.at(l));
    }
    return ds;
}

inline Dataset ingest_csv(const std::string& path, const IngestOptions& opt) {
    return dataset_from_records(parse_csv(read_text_file(path)), opt, path);
}

inline Dataset ingest_csv(const std::string& path, const std::string& label_column,
                          const std::vector<std::string>& drop_columns = {}) {
    return ingest_csv(path, IngestOptions{label_column, drop_columns});
}

// Quotes a field when needed for RFC 4180 output.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace lpdepth
