#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonlocal/errors.hpp"

namespace nonlocal {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

/// RFC-4180 CSV: comma separated, CRLF line endings, '.' decimal point.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<double>& cells) {
        if (cells.size() != header_.size())
            throw dimension_error("csv row has " + std::to_string(cells.size()) +
                                  " cells, header has " + std::to_string(header_.size()));
        rows_.push_back(cells);
    }

    std::string str() const {
        std::string out;
        for (std::size_t c = 0; c < header_.size(); ++c) {
            if (c) out += ',';
            out += header_[c];
        }
        out += "\r\n";
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                out += format_double(row[c]);
            }
            out += "\r\n";
        }
        return out;
    }

    void write(const std::filesystem::path& path) const { write_text(path, str()); }

    static void write_text(const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot write '" + path.string() + "'");
        out << text;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    CsvWriter::write_text(path, j.dump(2) + "\n");
}

}  // namespace nonlocal
