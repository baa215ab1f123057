#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsm/trajectory.hpp"

namespace qsm {

/// Named numeric columns of equal length.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values) {
        if (!columns.empty() && values.size() != columns.front().size())
            throw std::logic_error("table: column '" + name + "' has mismatched length");
        header.push_back(std::move(name));
        columns.push_back(std::move(values));
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Trajectory channels in file order. Empty channels are left out.
inline Table to_table(const Trajectory& tr) {
    tr.validate();
    Table t;
    t.add("t", tr.times);
    t.add("mean_x", tr.mean_x);
    const std::pair<const char*, const std::vector<double>*> optional[] = {
        {"sigma", &tr.spread},       {"norm", &tr.norm},         {"energy", &tr.energy},
        {"force_expect", &tr.force_expect}, {"cost_accum", &tr.cost_accum}, {"mean_x2", &tr.mean_x2},
        {"covariance", &tr.covariance}, {"mismatch_weight", &tr.mismatch_weight}};
    for (const auto& [name, values] : optional)
        if (!values->empty()) t.add(name, *values);
    return t;
}

/// Fixed 17-significant-digit rendering, so identical doubles give identical bytes.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c) out += ',';
        out += t.header[c];
    }
    out += '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c) out += ',';
            out += format_number(t.columns[c][r]);
        }
        out += '\n';
    }
    return out;
}

/// Writes next to the target and renames over it, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const Table& t) { write_file_atomic(path, render_csv(t)); }

}  // namespace qsm
