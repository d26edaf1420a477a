// Experiment driver: meshing, fine/multiscale solves, spectral dumps,
// convergence sweeps and report rendering.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "msdarcy/experiment.hpp"

namespace {

using msdarcy::ExperimentConfig;

/// Loads the config file named by --config (if any) before CLI11 applies
/// flag overrides on top.
ExperimentConfig preload_config(int argc, char** argv) {
    std::string path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") path = argv[i + 1];
    if (path.empty()) return {};
    std::ifstream is(path);
    if (!is) throw msdarcy::Error("cannot open config file: " + path);
    std::vector<std::string> errors;
    ExperimentConfig cfg = msdarcy::parse_config(is, errors);
    if (!errors.empty()) {
        std::string all = "config file " + path + ":";
        for (const std::string& e : errors) all += "\n  - " + e;
        throw msdarcy::Error(all);
    }
    return cfg;
}

struct SideFlags {
    std::string left, right, bottom, top;

    void apply(ExperimentConfig& cfg) const {
        auto one = [](const std::string& s, std::optional<double>& target) {
            if (s.empty()) return;
            if (s == "none")
                target.reset();
            else
                target = std::stod(s);
        };
        one(left, cfg.g_left);
        one(right, cfg.g_right);
        one(bottom, cfg.g_bottom);
        one(top, cfg.g_top);
    }
};

void add_grid_options(CLI::App* sub, ExperimentConfig& cfg, std::string& config_path) {
    sub->add_option("--config", config_path, "config file (key value lines, schema 1)");
    sub->add_option("--nx", cfg.nx, "fine cells in x");
    sub->add_option("--ny", cfg.ny, "fine cells in y");
    sub->add_option("--lx", cfg.lx, "domain length in x");
    sub->add_option("--ly", cfg.ly, "domain length in y");
    sub->add_option(
        "--seed",
        [&cfg](const CLI::results_t& res) {
            cfg.perf_seed = std::stoull(res[0]);
            return true;
        },
        "perforation seed (mandatory with --perf-count)");
    sub->add_option("--perf-count", cfg.perf_count, "number of random perforations");
    sub->add_option("--perf-rmin", cfg.perf_rmin, "smallest perforation radius");
    sub->add_option("--perf-rmax", cfg.perf_rmax, "largest perforation radius");
    sub->add_option("--kappa", cfg.kappa_kind, "permeability kind: constant|loguniform|lognormal");
    sub->add_option("--kappa-value", cfg.kappa_value, "constant permeability value");
    sub->add_option("--kappa-sigma", cfg.kappa_sigma, "lognormal sigma");
    sub->add_option("--kappa-mu", cfg.kappa_mu, "lognormal mu");
    sub->add_option("--kappa-log10-min", cfg.kappa_log10_min, "loguniform exponent lower bound");
    sub->add_option("--kappa-log10-max", cfg.kappa_log10_max, "loguniform exponent upper bound");
    sub->add_option("--kappa-seed", cfg.kappa_seed, "permeability field seed");
    sub->add_option("--out", cfg.out_dir, "output directory");
}

void add_solver_options(CLI::App* sub, ExperimentConfig& cfg, SideFlags& sides) {
    sub->add_option("--cx", cfg.cx, "fine cells per block in x");
    sub->add_option("--cy", cfg.cy, "fine cells per block in y");
    sub->add_option("--g-left", sides.left, "left Dirichlet pressure or 'none'");
    sub->add_option("--g-right", sides.right, "right Dirichlet pressure or 'none'");
    sub->add_option("--g-bottom", sides.bottom, "bottom Dirichlet pressure or 'none'");
    sub->add_option("--g-top", sides.top, "top Dirichlet pressure or 'none'");
    sub->add_option("--source", cfg.source_constant, "constant source term");
    sub->add_option("--basis,-L", cfg.L, "offline basis functions per block");
    sub->add_option("--eig-cutoff", cfg.eig_cutoff, "offline eigenvalue cutoff");
    sub->add_option("--theta", cfg.theta, "online adaptivity parameter in [0,1]");
    sub->add_option("--iter", cfg.iter, "online enrichment iterations");
    sub->add_option("--skip-tol", cfg.skip_tol, "relative residual below which a block is skipped");
    sub->add_option("--threads", cfg.threads, "worker threads for per-block stages");
}

int run_and_report(const ExperimentConfig& cfg) {
    const msdarcy::RunResult result = msdarcy::run(cfg, &std::cout);
    for (const std::string& f : result.files) std::cout << "wrote " << f << "\n";
    if (!result.bounds_pass) {
        std::cerr << "error: theoretical error bounds violated; see bound_check.json\n";
        return 2;
    }
    return 0;
}

int run_mesh(const ExperimentConfig& cfg) {
    msdarcy::validate_or_throw(cfg);
    const msdarcy::FineGrid grid = msdarcy::build_grid(
        cfg.nx, cfg.ny, cfg.lx, cfg.ly, msdarcy::make_perforations(cfg), msdarcy::make_field(cfg));
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/grid.txt", std::ios::binary);
    msdarcy::save_grid(grid, os);
    std::cout << "active cells: " << grid.n_cells() << "\n";
    std::cout << "interior edges: " << grid.interior_edges.size() << "\n";
    std::cout << "wrote " << cfg.out_dir << "/grid.txt\n";
    return 0;
}

int run_spectrum(const ExperimentConfig& cfg) {
    msdarcy::validate_or_throw(cfg);
    const msdarcy::FineGrid grid = msdarcy::build_grid(
        cfg.nx, cfg.ny, cfg.lx, cfg.ly, msdarcy::make_perforations(cfg), msdarcy::make_field(cfg));
    const msdarcy::CoarsePartition part = msdarcy::build_partition(grid, cfg.cx, cfg.cy);
    const msdarcy::BoundarySpec bc = msdarcy::make_bc(cfg);
    std::vector<msdarcy::BlockSpectrum> spectra(part.n_blocks());
    msdarcy::parallel_for(part.n_blocks(), cfg.threads, [&](int b) {
        const msdarcy::BlockOperators ops = msdarcy::block_operators(grid, part, bc, b);
        spectra[b] = msdarcy::solve_block_spectrum(ops.a_interior, ops.s, b);
    });
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/spectrum.csv", std::ios::binary);
    msdarcy::write_spectrum_csv(os, spectra, msdarcy::resolved_config_lines(cfg));
    std::cout << "wrote " << cfg.out_dir << "/spectrum.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        ExperimentConfig cfg = preload_config(argc, argv);
        std::string config_path;
        SideFlags sides;

        CLI::App app{"multiscale solver for Darcy flow in perforated domains"};
        app.require_subcommand(1);

        CLI::App* mesh = app.add_subcommand("mesh", "build and save the perforated grid");
        add_grid_options(mesh, cfg, config_path);

        CLI::App* solve = app.add_subcommand("solve", "run a fine, offline or online solve");
        add_grid_options(solve, cfg, config_path);
        add_solver_options(solve, cfg, sides);
        solve->add_option("--mode", cfg.mode, "fine | offline | online");

        CLI::App* spectrum = app.add_subcommand(
            "spectrum", "dump per-block eigenvalues for spectral-decay inspection");
        add_grid_options(spectrum, cfg, config_path);
        add_solver_options(spectrum, cfg, sides);

        CLI::App* sweep = app.add_subcommand("sweep", "offline-vs-online convergence sweep");
        add_grid_options(sweep, cfg, config_path);
        add_solver_options(sweep, cfg, sides);
        std::string sweep_L_str;
        sweep->add_option("--sweep-L", sweep_L_str,
                          "offline basis counts for the sweep table, comma-separated");
        sweep->add_option("--online-iter", cfg.sweep_online_iter, "online steps in the sweep");

        std::string report_dir;
        CLI::App* report = app.add_subcommand("report", "render table and plot from a sweep run");
        report->add_option("dir", report_dir, "run directory")->required();

        CLI11_PARSE(app, argc, argv);
        sides.apply(cfg);
        if (!sweep_L_str.empty()) {
            cfg.sweep_L.clear();
            std::istringstream ls(sweep_L_str);
            std::string tok;
            while (std::getline(ls, tok, ',')) cfg.sweep_L.push_back(std::stoi(tok));
        }

        if (app.got_subcommand(mesh)) {
            cfg.mode = "fine";  // no partition involved
            return run_mesh(cfg);
        }
        if (app.got_subcommand(solve)) return run_and_report(cfg);
        if (app.got_subcommand(spectrum)) {
            cfg.mode = "offline";  // partition bounds apply
            return run_spectrum(cfg);
        }
        if (app.got_subcommand(sweep)) {
            cfg.mode = "sweep";
            return run_and_report(cfg);
        }
        if (app.got_subcommand(report)) {
            for (const std::string& f : msdarcy::report(report_dir))
                std::cout << "wrote " << f << "\n";
            return 0;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
