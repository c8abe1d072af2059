#pragma once

// Deterministic CSV/JSON emission: 17 significant digits, fixed column and
// key order, provenance (config hash + version) on every artifact.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qdsf::io {

inline constexpr const char* artifact_version = "1.0.0";

inline std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class CsvTable {
public:
    CsvTable(std::string provenance, std::vector<std::string> columns)
        : provenance_(std::move(provenance)), columns_(std::move(columns)) {}

    void add_row(const std::vector<double>& row) {
        if (row.size() != columns_.size())
            throw std::logic_error("CsvTable: row width mismatch");
        rows_.push_back(row);
    }

    std::string str() const {
        std::string out = "# " + provenance_ + "\n";
        for (std::size_t i = 0; i < columns_.size(); ++i)
            out += (i ? "," : "") + columns_[i];
        out += '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i)
                out += (i ? "," : "") + format_float(r[i]);
            out += '\n';
        }
        return out;
    }

private:
    std::string provenance_;
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace qdsf::io
