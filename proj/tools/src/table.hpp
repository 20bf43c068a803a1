#pragma once

// Row-table output: one schema, two serializations (CSV with RFC-4180
// quoting, or a JSON array of objects). Numeric cells are preformatted by
// the caller so both formats emit identical digits.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace jointcal::cli {

enum class OutFormat { csv, json };

inline OutFormat parse_out_format(const std::string& text) {
    if (text == "csv") return OutFormat::csv;
    if (text == "json") return OutFormat::json;
    throw std::invalid_argument("unknown output format: " + text);
}

inline const char* extension(OutFormat format) {
    return format == OutFormat::csv ? ".csv" : ".json";
}

// Fixed-precision decimal formatting: enough digits to round-trip doubles
// that matter here, no locale dependence.
inline std::string num(double value, const char* fmt = "%.10g") {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), fmt, value);
    return buffer;
}

struct Table {
    std::vector<std::string> header;  // unit-suffixed column names
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size())
            throw std::logic_error("Table: row width mismatch");
        rows.push_back(std::move(row));
    }
};

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        quoted += c;
        if (c == '"') quoted += '"';
    }
    quoted += '"';
    return quoted;
}

inline void write_table(const Table& table, const std::string& path,
                        OutFormat format) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open output file: " + path);
    if (format == OutFormat::csv) {
        for (std::size_t c = 0; c < table.header.size(); ++c)
            out << (c ? "," : "") << csv_quote(table.header[c]);
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << (c ? "," : "") << csv_quote(row[c]);
            out << '\n';
        }
    } else {
        nlohmann::json array = nlohmann::json::array();
        for (const auto& row : table.rows) {
            nlohmann::json object;
            for (std::size_t c = 0; c < row.size(); ++c)
                object[table.header[c]] = row[c];
            array.push_back(std::move(object));
        }
        out << array.dump(2) << '\n';
    }
    if (!out)
        throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace jointcal::cli
