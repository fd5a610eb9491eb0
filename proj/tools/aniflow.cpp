// aniflow: evolve closed planar curves under anisotropic geometric flows.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aniflow/aniflow.hpp"

namespace {

std::vector<double> parse_h_list(const std::string& csv) {
    std::vector<double> hs;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            hs.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw aniflow::ConfigError("bad h value '" + item + "'");
        }
    }
    return hs;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure-preserving parametric FEM for anisotropic curve flows"};
    app.require_subcommand(1);

    std::string config_path;
    bool force = false;
    bool plots = false;
    bool semi_implicit = false;

    auto* simulate = app.add_subcommand("simulate", "run one flow simulation");
    simulate->add_option("--config", config_path, "JSON configuration file")->required();
    simulate->add_flag("--force", force, "run even if the stability condition fails");
    simulate->add_flag("--plots", plots, "emit a plotting script next to the CSV outputs");
    simulate->add_flag("--semi-implicit", semi_implicit,
                       "freeze the half-step normal at n^m (linear scheme)");

    std::string h_csv;
    std::string reference_path;
    double time = 0.0;
    auto* converge = app.add_subcommand("converge", "spatial convergence study");
    converge->add_option("--config", config_path, "base JSON configuration")->required();
    converge->add_option("--h", h_csv, "comma-separated halving mesh sizes, h = 1/N")->required();
    converge->add_option("--reference", reference_path,
                         "reference: a config (.json) to run or a curve (.csv)")
        ->required();
    converge->add_option("--time", time, "comparison time")->required();

    std::string anisotropy_spec;
    int points = 20;
    int grid = 1024;
    std::string out_path = "k0.csv";
    auto* k0 = app.add_subcommand("k0-table", "tabulate the minimal stabilizing function");
    k0->add_option("--anisotropy", anisotropy_spec, "e.g. kfold:beta=0.333333,k=3")->required();
    k0->add_option("--points", points, "number of table angles (default 20)");
    k0->add_option("--grid", grid, "inner direction-grid size (default 1024)");
    k0->add_option("--out", out_path, "output CSV path");

    auto* check = app.add_subcommand("check-gamma", "check 3*gamma(n) > gamma(-n)");
    check->add_option("--anisotropy", anisotropy_spec, "anisotropy spec")->required();
    check->add_option("--grid", grid, "angular grid size (default 1024)");

    std::string file1, file2;
    auto* distance = app.add_subcommand("distance", "manifold distance between two curve files");
    distance->add_option("file1", file1, "first curve CSV")->required();
    distance->add_option("file2", file2, "second curve CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : aniflow::exit_config_error;
    }

    try {
        if (simulate->parsed()) {
            aniflow::SimConfig cfg = aniflow::load_sim_config(config_path);
            if (semi_implicit) cfg.implicit = false;
            return aniflow::cmd_simulate(cfg, force, plots);
        }
        if (converge->parsed()) {
            const aniflow::SimConfig base = aniflow::load_sim_config(config_path);
            const std::filesystem::path ref(reference_path);
            aniflow::ConvergeReference reference;
            if (ref.extension() == ".json")
                reference = aniflow::load_sim_config(ref);
            else
                reference = ref;
            return aniflow::cmd_converge(base, parse_h_list(h_csv), reference, time);
        }
        if (k0->parsed()) return aniflow::cmd_k0_table(anisotropy_spec, points, grid, out_path);
        if (check->parsed()) return aniflow::cmd_check_gamma(anisotropy_spec, grid);
        if (distance->parsed()) return aniflow::cmd_distance(file1, file2);
    } catch (const aniflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return aniflow::exit_config_error;
    } catch (const aniflow::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return aniflow::exit_config_error;
    }
    return aniflow::exit_config_error;
}
