#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seqbench/space.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(TooFewRowsError);
SEQBENCH_DEFINE_ERROR(DatasetError);

/// Published-style tabular data: one (design, target) pair per row.
/// Rows may have missing entries (design keys simply absent).
struct Dataset {
    std::vector<std::pair<Design, double>> rows;
    std::string target_name;
    Objective objective = Objective::maximize;

    std::size_t size() const { return rows.size(); }

    std::vector<double> targets() const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.second);
        return out;
    }
};

/// Invariants: >= 3 rows, finite targets, every parameter observed at least
/// once across the rows.
inline void validate_dataset(const Dataset& data, const ParameterSpace& space) {
    if (data.rows.size() < 3)
        throw TooFewRowsError("dataset has " + std::to_string(data.rows.size()) +
                              " rows, need >= 3");
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        if (!std::isfinite(data.rows[i].second))
            throw DatasetError("non-finite target in row " + std::to_string(i + 1));
    for (const ParameterSpec& p : space.params()) {
        bool seen = false;
        for (const auto& r : data.rows)
            if (r.first.has(p.name)) { seen = true; break; }
        if (!seen)
            throw DatasetError("parameter '" + p.name + "' has no observed value");
    }
}

namespace detail {

// Minimal RFC-4180 field splitting: quotes, "" escapes, no embedded newlines.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace detail

/// Loads the comma-separated dataset table: header row, one column per
/// parameter plus the target column, empty cell = missing. Column order in
/// the file is free; unknown columns are an error.
inline Dataset load_dataset_csv(const std::string& path, const ParameterSpace& space,
                                const std::string& target_name, Objective objective) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DatasetError("dataset file '" + path + "' is empty");
    std::vector<std::string> header = detail::split_csv_line(line);
    int target_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        header[i] = detail::trim(header[i]);
        if (header[i] == target_name) {
            if (target_col >= 0) throw DatasetError("duplicate target column '" + target_name + "'");
            target_col = static_cast<int>(i);
        } else {
            space.at(header[i]);  // throws UnknownParameterError for stray columns
        }
    }
    if (target_col < 0)
        throw DatasetError("target column '" + target_name + "' not found in '" + path + "'");

    Dataset data;
    data.target_name = target_name;
    data.objective = objective;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DatasetError(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
        Design d;
        double target = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string cell = detail::trim(fields[i]);
            if (cell.empty()) continue;  // missing
            if (static_cast<int>(i) == target_col) {
                try {
                    target = std::stod(cell);
                } catch (const std::exception&) {
                    throw DatasetError(path + ":" + std::to_string(lineno) +
                                       ": bad target value '" + cell + "'");
                }
                continue;
            }
            const ParameterSpec& spec = space.at(header[i]);
            if (spec.is_numeric()) {
                try {
                    d.set(header[i], std::stod(cell));
                } catch (const std::exception&) {
                    throw DatasetError(path + ":" + std::to_string(lineno) + ": bad numeric '" +
                                       cell + "' for parameter '" + header[i] + "'");
                }
            } else {
                d.set(header[i], cell);
            }
        }
        if (std::isnan(target))
            throw DatasetError(path + ":" + std::to_string(lineno) + ": missing target value");
        data.rows.emplace_back(std::move(d), target);
    }
    validate_dataset(data, space);
    return data;
}

/// Writes a dataset in the same format load_dataset_csv reads
/// (parameters in declaration order, target last).
inline void write_dataset_csv(const std::string& path, const Dataset& data,
                              const ParameterSpace& space) {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write dataset file '" + path + "'");
    for (const ParameterSpec& p : space.params()) out << detail::csv_escape(p.name) << ",";
    out << detail::csv_escape(data.target_name) << "\n";
    for (const auto& [design, target] : data.rows) {
        for (const ParameterSpec& p : space.params()) {
            if (design.has(p.name)) {
                if (p.is_numeric())
                    out << format_sig6(design.numeric(p.name));
                else
                    out << detail::csv_escape(design.option(p.name));
            }
            out << ",";
        }
        out << format_sig6(target) << "\n";
    }
}

}  // namespace seqbench
