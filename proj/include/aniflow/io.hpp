#pragma once

// File formats: curve CSV ("x,y", one node per row, no closing duplicate),
// diagnostics CSV, stabilizer-table CSV ("theta,k0"), gamma-table CSV
// ("theta,gamma"). All numbers are written with 17 significant digits so
// identical configurations produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aniflow/diagnostics.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/geometry.hpp"
#include "aniflow/stabilization.hpp"

namespace aniflow {

/// Shortest representation that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return fields;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(context + ": cannot parse number '" + s + "'");
    }
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

// Reads a two-column CSV with the given exact header.
inline std::vector<std::pair<double, double>> read_two_column_csv(
    const std::filesystem::path& path, const std::string& header) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        const auto fields = split_csv_line(line);
        const auto expect = split_csv_line(header);
        if (fields != expect)
            throw IoError(path.string() + ": expected header '" + header + "', got '" + line +
                          "'");
    }
    std::vector<std::pair<double, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 2 fields");
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        rows.emplace_back(parse_double(fields[0], ctx), parse_double(fields[1], ctx));
    }
    return rows;
}

} // namespace detail

inline void write_curve_csv(const std::filesystem::path& path, const ClosedCurve& curve) {
    std::ofstream out = detail::open_out(path);
    out << "x,y\n";
    for (const Vec2& p : curve.nodes())
        out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

/// Reads a curve CSV and normalizes it to clockwise orientation.
inline ClosedCurve read_curve_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_two_column_csv(path, "x,y");
    if (rows.size() < 3) throw IoError(path.string() + ": need at least 3 nodes");
    std::vector<Vec2> nodes;
    nodes.reserve(rows.size());
    for (const auto& [x, y] : rows) nodes.emplace_back(x, y);
    return ensure_clockwise(ClosedCurve(std::move(nodes)));
}

inline void write_diagnostics_csv(const std::filesystem::path& path,
                                  const std::vector<DiagnosticsRecord>& records) {
    std::ofstream out = detail::open_out(path);
    out << "t,area,energy,rel_area_loss,norm_energy,mesh_ratio,newton_iters\n";
    for (const DiagnosticsRecord& r : records)
        out << format_double(r.t) << ',' << format_double(r.area) << ','
            << format_double(r.energy) << ',' << format_double(r.rel_area_loss) << ','
            << format_double(r.norm_energy) << ',' << format_double(r.mesh_ratio) << ','
            << r.newton_iterations << '\n';
}

inline void write_stabilizer_csv(const std::filesystem::path& path, const StabilizerTable& table) {
    std::ofstream out = detail::open_out(path);
    out << "theta,k0\n";
    const auto angles = table.angles();
    for (std::size_t i = 0; i < table.size(); ++i)
        out << format_double(angles[i]) << ',' << format_double(table.values()[i]) << '\n';
}

/// Loads a stabilizer table written by write_stabilizer_csv (uniform theta
/// grid on [0, 2*pi) starting at 0).
inline StabilizerTable read_stabilizer_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_two_column_csv(path, "theta,k0");
    if (rows.empty()) throw IoError(path.string() + ": empty table");
    const auto m = static_cast<double>(rows.size());
    std::vector<double> k;
    k.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (std::abs(rows[i].first - two_pi * static_cast<double>(i) / m) > 1e-9)
            throw IoError(path.string() + ": theta grid must be uniform on [0, 2*pi) from 0");
        k.push_back(rows[i].second);
    }
    return StabilizerTable(std::move(k));
}

/// Reads a gamma(theta) table ("theta,gamma") for user-defined anisotropies.
inline std::pair<std::vector<double>, std::vector<double>> read_gamma_table_csv(
    const std::filesystem::path& path) {
    const auto rows = detail::read_two_column_csv(path, "theta,gamma");
    std::vector<double> theta, gamma;
    theta.reserve(rows.size());
    gamma.reserve(rows.size());
    for (const auto& [t, g] : rows) {
        theta.push_back(t);
        gamma.push_back(g);
    }
    return {std::move(theta), std::move(gamma)};
}

} // namespace aniflow
