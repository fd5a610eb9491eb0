#pragma once

// Command implementations behind the aniflow executable. Each cmd_* returns
// a process exit code: 0 success, 2 configuration/parse error, 3 the
// energy-stability condition fails (without --force), 4 solver failure.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aniflow/config.hpp"
#include "aniflow/diagnostics.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/io.hpp"
#include "aniflow/solver.hpp"

namespace aniflow {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_condition_violated = 3;
inline constexpr int exit_solver_failure = 4;

namespace detail {

inline unsigned thread_cap() {
    if (const char* env = std::getenv("ANIFLOW_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Runs fn(0..count-1) on up to thread_cap() workers; rethrows the first
/// task exception after all workers join.
template <typename Fn>
void parallel_tasks(std::size_t count, Fn&& fn) {
    const unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline bool energy_monotone(double w0, const std::vector<DiagnosticsRecord>& records) {
    double prev = w0;
    for (const DiagnosticsRecord& r : records) {
        if (r.energy > prev * (1.0 + 1e-12)) return false;
        prev = r.energy;
    }
    return true;
}

inline void write_plot_script(const std::filesystem::path& dir) {
    std::ofstream out = open_out(dir / "plot.py");
    out << "#!/usr/bin/env python3\n"
           "# Plots the diagnostics and curve snapshots written next to this script.\n"
           "import csv, glob, os\n"
           "import matplotlib.pyplot as plt\n"
           "\n"
           "here = os.path.dirname(os.path.abspath(__file__))\n"
           "\n"
           "def read_csv(path):\n"
           "    with open(path) as f:\n"
           "        rows = list(csv.DictReader(f))\n"
           "    return rows\n"
           "\n"
           "diag = read_csv(os.path.join(here, 'diagnostics.csv'))\n"
           "t = [float(r['t']) for r in diag]\n"
           "fig, axes = plt.subplots(2, 2, figsize=(11, 8))\n"
           "axes[0][0].plot(t, [float(r['norm_energy']) for r in diag])\n"
           "axes[0][0].set_title('normalized energy W/W0')\n"
           "axes[0][1].plot(t, [float(r['rel_area_loss']) for r in diag])\n"
           "axes[0][1].set_title('relative area loss')\n"
           "axes[1][0].plot(t, [float(r['mesh_ratio']) for r in diag])\n"
           "axes[1][0].set_title('weighted mesh ratio')\n"
           "axes[1][1].plot(t, [int(r['newton_iters']) for r in diag])\n"
           "axes[1][1].set_title('Newton iterations')\n"
           "for ax in axes.flat:\n"
           "    ax.set_xlabel('t')\n"
           "fig.tight_layout()\n"
           "fig.savefig(os.path.join(here, 'diagnostics.png'), dpi=150)\n"
           "\n"
           "fig2, ax2 = plt.subplots(figsize=(7, 7))\n"
           "snaps = sorted(glob.glob(os.path.join(here, 'curve_*.csv')),\n"
           "               key=lambda p: int(os.path.basename(p)[6:-4]))\n"
           "for path in snaps:\n"
           "    rows = read_csv(path)\n"
           "    xs = [float(r['x']) for r in rows] + [float(rows[0]['x'])]\n"
           "    ys = [float(r['y']) for r in rows] + [float(rows[0]['y'])]\n"
           "    ax2.plot(xs, ys, lw=0.8)\n"
           "ax2.set_aspect('equal')\n"
           "ax2.set_title('curve evolution')\n"
           "fig2.savefig(os.path.join(here, 'curves.png'), dpi=150)\n"
           "print('wrote diagnostics.png and curves.png')\n";
}

} // namespace detail

/// Runs one simulation and writes curve_<step>.csv snapshots,
/// diagnostics.csv and summary.json into the configured output directory.
inline int cmd_simulate(const SimConfig& cfg, bool force = false, bool plots = false) {
    try {
        cfg.validate();
        const Anisotropy a = cfg.anisotropy.build(cfg.base_dir);

        const StabilityReport rep = check_stability_condition(a, 1024);
        if (!rep.holds) {
            std::cerr << "energy-stability condition 3*gamma(n) > gamma(-n) FAILS: margin "
                      << format_double(rep.worst_margin) << " at theta = "
                      << format_double(rep.worst_angle) << "\n";
            if (!force) return exit_condition_violated;
            std::cerr << "continuing because --force was given\n";
        }
        const StabilizerTable ktable = cfg.stabilizer.build(a, cfg.base_dir);
        const ClosedCurve initial =
            ensure_clockwise(cfg.initial_shape.build(cfg.n_nodes, cfg.base_dir));

        const RunResult res = run(cfg.flow, initial, a, ktable, cfg.tau, cfg.t_end, cfg.newton,
                                  cfg.implicit, cfg.snapshot_every);

        std::filesystem::create_directories(cfg.output_dir);
        for (const auto& [step_index, curve] : res.snapshots)
            write_curve_csv(cfg.output_dir / ("curve_" + std::to_string(step_index) + ".csv"),
                            curve);
        write_diagnostics_csv(cfg.output_dir / "diagnostics.csv", res.diagnostics);

        double max_rel_loss = 0.0;
        int max_newton = 0;
        for (const DiagnosticsRecord& r : res.diagnostics) {
            max_rel_loss = std::max(max_rel_loss, std::abs(r.rel_area_loss));
            max_newton = std::max(max_newton, r.newton_iterations);
        }
        nlohmann::json summary;
        summary["flow"] = flow_kind_name(cfg.flow);
        summary["steps"] = res.diagnostics.size();
        summary["t_end"] = cfg.t_end;
        summary["initial_area"] = res.initial_area;
        summary["initial_energy"] = res.initial_energy;
        summary["final_area"] = res.diagnostics.empty() ? res.initial_area
                                                        : res.diagnostics.back().area;
        summary["final_energy"] = res.diagnostics.empty() ? res.initial_energy
                                                          : res.diagnostics.back().energy;
        summary["max_rel_area_loss"] = max_rel_loss;
        summary["monotone_energy"] = detail::energy_monotone(res.initial_energy, res.diagnostics);
        summary["max_newton_iterations"] = max_newton;
        {
            std::ofstream out = detail::open_out(cfg.output_dir / "summary.json");
            out << summary.dump(2) << '\n';
        }
        if (plots) detail::write_plot_script(cfg.output_dir);
        std::cout << "wrote " << (cfg.output_dir / "summary.json").string() << "\n";
        return exit_ok;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what()
                  << "; try a smaller time step (e.g. tau = " << format_double(cfg.tau / 2.0)
                  << ")\n";
        return exit_solver_failure;
    } catch (const ConditionViolated& e) {
        std::cerr << "condition violated: " << e.what() << "\n";
        return exit_condition_violated;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver_failure;
    }
}

/// Reference solution for a convergence study: either a full configuration
/// (run it) or an already-computed curve file.
using ConvergeReference = std::variant<SimConfig, std::filesystem::path>;

/// Runs the configured flow for each h in h_list (N = 1/h, tau = h^2) up to
/// the requested time, measures the manifold distance to the reference and
/// writes convergence.csv (columns h,error,order). Runs execute in parallel,
/// capped by ANIFLOW_THREADS.
inline int cmd_converge(const SimConfig& base, const std::vector<double>& h_list,
                        const ConvergeReference& reference, double time) {
    try {
        if (h_list.size() < 2) throw ConfigError("converge: need at least 2 h values");
        for (std::size_t i = 0; i + 1 < h_list.size(); ++i)
            if (std::abs(h_list[i + 1] - 0.5 * h_list[i]) > 1e-12 * h_list[i])
                throw ConfigError("converge: h list must be strictly halving");
        if (!(time > 0.0)) throw ConfigError("converge: time must be positive");

        struct RunSpec {
            SimConfig cfg;
            std::optional<ClosedCurve> result;
        };
        std::vector<RunSpec> runs;
        for (double h : h_list) {
            SimConfig cfg = base;
            const double n_real = 1.0 / h;
            cfg.n_nodes = static_cast<int>(std::llround(n_real));
            if (std::abs(n_real - cfg.n_nodes) > 1e-9)
                throw ConfigError("converge: 1/h must be an integer node count");
            cfg.tau = h * h;
            cfg.t_end = time;
            cfg.validate();
            runs.push_back(RunSpec{cfg, std::nullopt});
        }
        if (std::holds_alternative<SimConfig>(reference)) {
            SimConfig cfg = std::get<SimConfig>(reference);
            cfg.t_end = time;
            cfg.validate();
            runs.push_back(RunSpec{cfg, std::nullopt});
        }

        const Anisotropy a = base.anisotropy.build(base.base_dir);
        const StabilityReport rep = check_stability_condition(a, 1024);
        if (!rep.holds) {
            std::cerr << "energy-stability condition fails (margin "
                      << format_double(rep.worst_margin) << ")\n";
            return exit_condition_violated;
        }
        const StabilizerTable ktable = base.stabilizer.build(a, base.base_dir);

        detail::parallel_tasks(runs.size(), [&](std::size_t i) {
            const SimConfig& cfg = runs[i].cfg;
            const ClosedCurve initial =
                ensure_clockwise(cfg.initial_shape.build(cfg.n_nodes, cfg.base_dir));
            RunResult r = run(cfg.flow, initial, a, ktable, cfg.tau, cfg.t_end, cfg.newton,
                              cfg.implicit, std::max(1, static_cast<int>(cfg.t_end / cfg.tau)));
            runs[i].result = std::move(r.final_curve);
        });

        const ClosedCurve ref_curve = std::holds_alternative<SimConfig>(reference)
                                          ? *runs.back().result
                                          : read_curve_csv(std::get<std::filesystem::path>(reference));
        const SimplePolygon ref_poly(ref_curve);

        std::vector<std::pair<double, double>> errors;
        for (std::size_t i = 0; i < h_list.size(); ++i)
            errors.emplace_back(h_list[i],
                                manifold_distance(SimplePolygon(*runs[i].result), ref_poly));

        std::filesystem::create_directories(base.output_dir);
        std::ofstream out = detail::open_out(base.output_dir / "convergence.csv");
        out << "h,error,order\n";
        std::vector<double> orders;
        const bool computable = std::all_of(errors.begin(), errors.end(),
                                            [](const auto& p) { return p.second > 0.0; });
        if (computable) orders = convergence_order(errors);
        for (std::size_t i = 0; i < errors.size(); ++i) {
            out << format_double(errors[i].first) << ',' << format_double(errors[i].second) << ',';
            if (i > 0 && computable) out << format_double(orders[i - 1]);
            out << '\n';
        }
        for (std::size_t i = 0; i < h_list.size(); ++i)
            write_curve_csv(base.output_dir / ("converge_h" + std::to_string(i) + ".csv"),
                            *runs[i].result);
        write_curve_csv(base.output_dir / "converge_reference.csv", ref_curve);
        std::cout << "wrote " << (base.output_dir / "convergence.csv").string() << "\n";
        return exit_ok;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "; try a smaller time step\n";
        return exit_solver_failure;
    } catch (const ConditionViolated& e) {
        std::cerr << "condition violated: " << e.what() << "\n";
        return exit_condition_violated;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver_failure;
    }
}

/// Tabulates k0 over M_n angles and writes theta,k0 CSV.
inline int cmd_k0_table(const std::string& anisotropy_spec, int points, int grid,
                        const std::filesystem::path& out_path) {
    try {
        const Anisotropy a = parse_anisotropy_string(anisotropy_spec).build();
        const StabilizerTable table = build_stabilizer_table(a, points, grid, 1.0);
        write_stabilizer_csv(out_path, table);
        std::cout << "wrote " << out_path.string() << "\n";
        return exit_ok;
    } catch (const ConditionViolated& e) {
        std::cerr << "condition violated: " << e.what() << "\n";
        return exit_condition_violated;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
}

/// Prints the energy-stability margin report.
inline int cmd_check_gamma(const std::string& anisotropy_spec, int grid = 1024) {
    try {
        const Anisotropy a = parse_anisotropy_string(anisotropy_spec).build();
        const StabilityReport rep = check_stability_condition(a, grid);
        std::cout << "3*gamma(n) - gamma(-n): min margin " << format_double(rep.worst_margin)
                  << " at theta = " << format_double(rep.worst_angle) << " -> "
                  << (rep.holds ? "condition HOLDS" : "condition FAILS") << "\n";
        return rep.holds ? exit_ok : exit_condition_violated;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
}

/// Prints the manifold distance between two curve files.
inline int cmd_distance(const std::filesystem::path& file1, const std::filesystem::path& file2) {
    try {
        const SimplePolygon p1(read_curve_csv(file1));
        const SimplePolygon p2(read_curve_csv(file2));
        std::cout << format_double(manifold_distance(p1, p2)) << "\n";
        return exit_ok;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
}

} // namespace aniflow
