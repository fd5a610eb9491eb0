#pragma once

// Simulation configuration: JSON schema, anisotropy/stabilizer specs, and
// initial-shape generation.
//
// Anisotropy specs appear in two equivalent forms:
//   JSON:   {"kind":"isotropic"} | {"kind":"case1"}
//         | {"kind":"kfold","beta":0.333333,"k":3,"phase":0.0}
//         | {"kind":"table","file":"gamma.csv"}
//   string: "isotropic" | "case1" | "kfold:beta=0.333333,k=3,phase=0"
//         | "table:file=gamma.csv"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aniflow/anisotropy.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/flows.hpp"
#include "aniflow/geometry.hpp"
#include "aniflow/io.hpp"
#include "aniflow/solver.hpp"
#include "aniflow/stabilization.hpp"

namespace aniflow {

struct AnisotropySpec {
    std::string kind;  // isotropic | case1 | kfold | table
    double beta = 0.0;
    int k = 3;
    double phase = 0.0;
    std::filesystem::path file;

    Anisotropy build(const std::filesystem::path& base_dir = {}) const {
        if (kind == "isotropic") return Anisotropy::isotropic();
        if (kind == "case1") return Anisotropy::case1();
        if (kind == "kfold") return Anisotropy::kfold(beta, k, phase);
        if (kind == "table") {
            const auto path = file.is_absolute() ? file : base_dir / file;
            auto [theta, gamma] = read_gamma_table_csv(path);
            return Anisotropy::from_table(std::move(theta), std::move(gamma));
        }
        throw ConfigError("unknown anisotropy kind '" + kind + "'");
    }
};

struct StabilizerSpec {
    enum class Mode { Auto, File, Constant };
    Mode mode = Mode::Auto;
    int points = 20;          // M_n (auto)
    int grid = 1024;          // inner nhat grid (auto)
    double safety = 1.0;      // multiplier on k0 (auto)
    std::filesystem::path file;
    double value = 0.0;       // constant mode

    StabilizerTable build(const Anisotropy& a, const std::filesystem::path& base_dir = {}) const {
        switch (mode) {
            case Mode::Auto:
                return build_stabilizer_table(a, points, grid, safety);
            case Mode::File:
                return read_stabilizer_csv(file.is_absolute() ? file : base_dir / file);
            case Mode::Constant:
                return StabilizerTable::constant(value);
        }
        throw ConfigError("invalid stabilizer mode");
    }
};

struct ShapeSpec {
    std::string kind;  // ellipse | circle | file
    double a = 2.0;
    double b = 0.5;
    double r = 1.0;
    std::filesystem::path file;

    /// Node j at parameter rho_j = j/N, X(rho) = (a cos(2 pi rho), -b sin(2 pi rho));
    /// clockwise by construction.
    ClosedCurve build(int n_nodes, const std::filesystem::path& base_dir = {}) const {
        if (kind == "file")
            return read_curve_csv(file.is_absolute() ? file : base_dir / file);
        double sa = 0.0, sb = 0.0;
        if (kind == "ellipse") {
            sa = a;
            sb = b;
        } else if (kind == "circle") {
            sa = r;
            sb = r;
        } else {
            throw ConfigError("unknown initial shape kind '" + kind + "'");
        }
        std::vector<Vec2> nodes(static_cast<std::size_t>(n_nodes));
        for (int j = 0; j < n_nodes; ++j) {
            const double rho = static_cast<double>(j) / static_cast<double>(n_nodes);
            nodes[static_cast<std::size_t>(j)] =
                Vec2(sa * std::cos(two_pi * rho), -sb * std::sin(two_pi * rho));
        }
        return ClosedCurve(std::move(nodes));
    }
};

struct SimConfig {
    FlowKind flow = FlowKind::SurfaceDiffusion;
    AnisotropySpec anisotropy;
    int n_nodes = 128;
    double tau = 0.0;
    double t_end = 0.0;
    StabilizerSpec stabilizer;
    NewtonSettings newton;
    bool implicit = true;
    ShapeSpec initial_shape;
    int snapshot_every = 100;
    std::filesystem::path output_dir = "out";
    std::filesystem::path base_dir;  // directory of the config file, for relative paths

    void validate() const {
        if (n_nodes < 8) throw ConfigError("N must be >= 8");
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        if (!(t_end >= tau)) throw ConfigError("t_end must be >= tau");
        if (snapshot_every < 1) throw ConfigError("snapshot_every must be >= 1");
        if (!(newton.tolerance > 0.0)) throw ConfigError("newton tolerance must be positive");
    }
};

inline FlowKind parse_flow_kind(const std::string& s) {
    if (s == "surface_diffusion" || s == "surface-diffusion") return FlowKind::SurfaceDiffusion;
    if (s == "curvature_flow" || s == "curvature" || s == "curvature-flow")
        return FlowKind::CurvatureFlow;
    if (s == "area_conserved" || s == "area-conserved" ||
        s == "area_conserved_curvature_flow")
        return FlowKind::AreaConservedCurvatureFlow;
    throw ConfigError("unknown flow '" + s + "'");
}

inline std::string flow_kind_name(FlowKind f) {
    switch (f) {
        case FlowKind::SurfaceDiffusion: return "surface_diffusion";
        case FlowKind::CurvatureFlow: return "curvature_flow";
        case FlowKind::AreaConservedCurvatureFlow: return "area_conserved";
    }
    return "?";
}

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

} // namespace detail

inline AnisotropySpec parse_anisotropy_json(const nlohmann::json& j) {
    AnisotropySpec spec;
    spec.kind = detail::require<std::string>(j, "kind");
    if (spec.kind == "kfold") {
        spec.beta = detail::require<double>(j, "beta");
        spec.k = detail::get_or<int>(j, "k", 3);
        spec.phase = detail::get_or<double>(j, "phase", 0.0);
    } else if (spec.kind == "table") {
        spec.file = detail::require<std::string>(j, "file");
    } else if (spec.kind != "isotropic" && spec.kind != "case1") {
        throw ConfigError("unknown anisotropy kind '" + spec.kind + "'");
    }
    return spec;
}

/// Parses the CLI string form, e.g. "kfold:beta=0.333333,k=3,phase=0".
inline AnisotropySpec parse_anisotropy_string(const std::string& s) {
    AnisotropySpec spec;
    const auto colon = s.find(':');
    spec.kind = s.substr(0, colon);
    if (spec.kind != "isotropic" && spec.kind != "case1" && spec.kind != "kfold" &&
        spec.kind != "table")
        throw ConfigError("unknown anisotropy kind '" + spec.kind + "'");
    if (colon == std::string::npos) {
        if (spec.kind == "kfold") throw ConfigError("kfold anisotropy requires beta=...");
        if (spec.kind == "table") throw ConfigError("table anisotropy requires file=...");
        return spec;
    }
    std::string rest = s.substr(colon + 1);
    bool have_beta = false, have_file = false;
    std::size_t pos = 0;
    while (pos < rest.size()) {
        auto comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        const std::string item = rest.substr(pos, comma - pos);
        pos = comma + 1;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("bad anisotropy parameter '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            if (key == "beta") {
                spec.beta = std::stod(val);
                have_beta = true;
            } else if (key == "k") {
                spec.k = std::stoi(val);
            } else if (key == "phase") {
                spec.phase = std::stod(val);
            } else if (key == "file") {
                spec.file = val;
                have_file = true;
            } else {
                throw ConfigError("unknown anisotropy parameter '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad value for anisotropy parameter '" + key + "'");
        }
    }
    if (spec.kind == "kfold" && !have_beta) throw ConfigError("kfold anisotropy requires beta=...");
    if (spec.kind == "table" && !have_file) throw ConfigError("table anisotropy requires file=...");
    return spec;
}

inline StabilizerSpec parse_stabilizer_json(const nlohmann::json& j) {
    StabilizerSpec spec;
    const auto mode = detail::get_or<std::string>(j, "mode", "auto");
    if (mode == "auto") {
        spec.mode = StabilizerSpec::Mode::Auto;
        spec.points = detail::get_or<int>(j, "points", 20);
        spec.grid = detail::get_or<int>(j, "grid", 1024);
        spec.safety = detail::get_or<double>(j, "safety", 1.0);
    } else if (mode == "file") {
        spec.mode = StabilizerSpec::Mode::File;
        spec.file = detail::require<std::string>(j, "file");
    } else if (mode == "constant") {
        spec.mode = StabilizerSpec::Mode::Constant;
        spec.value = detail::require<double>(j, "value");
    } else {
        throw ConfigError("unknown stabilizer mode '" + mode + "'");
    }
    return spec;
}

inline ShapeSpec parse_shape_json(const nlohmann::json& j) {
    ShapeSpec spec;
    spec.kind = detail::require<std::string>(j, "kind");
    if (spec.kind == "ellipse") {
        spec.a = detail::require<double>(j, "a");
        spec.b = detail::require<double>(j, "b");
    } else if (spec.kind == "circle") {
        spec.r = detail::require<double>(j, "r");
    } else if (spec.kind == "file") {
        spec.file = detail::require<std::string>(j, "path");
    } else {
        throw ConfigError("unknown initial shape kind '" + spec.kind + "'");
    }
    return spec;
}

inline SimConfig parse_sim_config(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {}) {
    SimConfig cfg;
    cfg.base_dir = base_dir;
    cfg.flow = parse_flow_kind(detail::require<std::string>(j, "flow"));
    if (!j.contains("anisotropy")) throw ConfigError("missing required field 'anisotropy'");
    cfg.anisotropy = parse_anisotropy_json(j.at("anisotropy"));
    cfg.n_nodes = detail::require<int>(j, "N");
    cfg.tau = detail::require<double>(j, "tau");
    cfg.t_end = detail::require<double>(j, "t_end");
    if (j.contains("stabilizer")) cfg.stabilizer = parse_stabilizer_json(j.at("stabilizer"));
    if (j.contains("newton")) {
        const auto& n = j.at("newton");
        cfg.newton.tolerance = detail::get_or<double>(n, "tolerance", 1e-12);
        cfg.newton.max_iterations = detail::get_or<int>(n, "max_iterations", 20);
        cfg.newton.residual_tolerance = detail::get_or<double>(n, "residual_tolerance", 1e-10);
    }
    cfg.implicit = detail::get_or<bool>(j, "implicit", true);
    if (!j.contains("initial_shape")) throw ConfigError("missing required field 'initial_shape'");
    cfg.initial_shape = parse_shape_json(j.at("initial_shape"));
    cfg.snapshot_every = detail::get_or<int>(j, "snapshot_every", 100);
    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
    cfg.validate();
    return cfg;
}

inline SimConfig load_sim_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_sim_config(j, path.parent_path());
}

} // namespace aniflow
