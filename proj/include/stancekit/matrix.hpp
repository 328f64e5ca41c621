#pragma once

// FeatureMatrix: a named-column numeric table keyed by state code or
// user id, with NaN as the missing marker and a provenance tag per
// column. Shared by the feature and stats modules.

#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stancekit/common.hpp"

namespace stancekit {

class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::vector<std::string> row_keys) : rows_(std::move(row_keys)) {
        for (std::size_t i = 0; i < rows_.size(); ++i) row_index_[rows_[i]] = i;
    }

    std::size_t n_rows() const { return rows_.size(); }
    std::size_t n_cols() const { return names_.size(); }
    const std::vector<std::string>& row_keys() const { return rows_; }
    const std::vector<std::string>& column_names() const { return names_; }
    const std::string& provenance(std::size_t col) const { return tags_.at(col); }

    bool has_column(const std::string& name) const {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }

    std::size_t column_index(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw std::out_of_range("no column: " + name);
        return static_cast<std::size_t>(it - names_.begin());
    }

    std::size_t row_index(const std::string& key) const {
        auto it = row_index_.find(key);
        if (it == row_index_.end()) throw std::out_of_range("no row: " + key);
        return it->second;
    }

    void add_column(const std::string& name, const std::string& tag, std::vector<double> values) {
        if (values.size() != rows_.size()) throw std::invalid_argument("column length mismatch: " + name);
        if (has_column(name)) throw std::invalid_argument("duplicate column: " + name);
        if (tag.empty()) throw std::invalid_argument("provenance tag required for column: " + name);
        names_.push_back(name);
        tags_.push_back(tag);
        cols_.push_back(std::move(values));
    }

    double cell(std::size_t row, std::size_t col) const { return cols_.at(col).at(row); }
    void set_cell(std::size_t row, std::size_t col, double v) { cols_.at(col).at(row) = v; }
    const std::vector<double>& column(std::size_t col) const { return cols_.at(col); }
    const std::vector<double>& column(const std::string& name) const { return cols_.at(column_index(name)); }

    FeatureMatrix select_columns(const std::vector<std::string>& keep) const {
        FeatureMatrix out(rows_);
        for (const auto& name : keep) {
            std::size_t c = column_index(name);
            out.add_column(name, tags_[c], cols_[c]);
        }
        return out;
    }

    FeatureMatrix select_rows(const std::vector<std::size_t>& keep) const {
        std::vector<std::string> keys;
        keys.reserve(keep.size());
        for (std::size_t r : keep) keys.push_back(rows_.at(r));
        FeatureMatrix out(keys);
        for (std::size_t c = 0; c < names_.size(); ++c) {
            std::vector<double> v;
            v.reserve(keep.size());
            for (std::size_t r : keep) v.push_back(cols_[c][r]);
            out.add_column(names_[c], tags_[c], std::move(v));
        }
        return out;
    }

    void export_csv(std::ostream& out, const std::string& key_header = "key") const {
        out << csv_escape(key_header);
        for (const auto& n : names_) out << ',' << csv_escape(n);
        out << '\n';
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            out << csv_escape(rows_[r]);
            for (std::size_t c = 0; c < names_.size(); ++c) out << ',' << fmt_num(cols_[c][r]);
            out << '\n';
        }
    }

    nlohmann::json provenance_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t c = 0; c < names_.size(); ++c) j[names_[c]] = tags_[c];
        return j;
    }

private:
    std::vector<std::string> rows_;
    std::map<std::string, std::size_t> row_index_;
    std::vector<std::string> names_;
    std::vector<std::string> tags_;
    std::vector<std::vector<double>> cols_;
};

// External statistical table: key column + named numeric columns.
struct ExternalTable {
    std::vector<std::string> columns;
    std::map<std::string, std::vector<double>> rows;  // key -> values

    static ExternalTable from_csv(std::istream& in) {
        ExternalTable t;
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("external table: empty file");
        auto header = split_csv_line(line);
        if (header.size() < 2) throw std::runtime_error("external table: need key + >=1 column");
        t.columns.assign(header.begin() + 1, header.end());
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto f = split_csv_line(line);
            if (f.size() != header.size()) throw std::runtime_error("external table: ragged row: " + line);
            std::string key = trim(f[0]);
            if (t.rows.count(key)) throw std::runtime_error("external table: duplicate key: " + key);
            std::vector<double> vals;
            for (std::size_t i = 1; i < f.size(); ++i) {
                auto v = parse_double(f[i]);
                vals.push_back(v ? *v : kMissing);
            }
            t.rows[key] = std::move(vals);
        }
        return t;
    }
};

}  // namespace stancekit
