#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "msdarcy/io.hpp"
#include "msdarcy/online.hpp"

namespace msdarcy {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Experiment configuration. The file format is line-oriented `key value`
/// pairs with `#` comments; the schema version is mandatory and unknown keys
/// are errors.
struct ExperimentConfig {
    // grid
    int nx = 100, ny = 100;
    double lx = 1.0, ly = 1.0;
    // perforations: explicit circles or seeded random generation
    std::vector<Circle> circles;
    std::optional<std::uint64_t> perf_seed;
    int perf_count = 0;
    double perf_rmin = 0.02, perf_rmax = 0.08;
    // permeability
    std::string kappa_kind = "constant";  // constant | loguniform | lognormal
    double kappa_value = 1.0;
    double kappa_log10_min = -1.0, kappa_log10_max = 1.0;
    double kappa_mu = 0.0, kappa_sigma = 1.0;
    std::uint64_t kappa_seed = 0;
    // coarse partition (paper default: 20 fine cells per block per direction)
    int cx = 20, cy = 20;
    // boundary and source
    std::optional<double> g_left = 1.0, g_right = 0.0, g_bottom, g_top;
    double source_constant = 0.0;
    // offline stage
    int L = 3;
    double eig_cutoff = 1e5;
    // online stage
    double theta = 1.0;
    int iter = 0;
    double skip_tol = 1e-3;
    // execution
    std::string mode = "online";  // fine | offline | online | sweep
    std::string out_dir = "out";
    std::vector<int> sweep_L = {1, 2, 4, 8};
    int sweep_online_iter = 9;
    int threads = 1;
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

inline bool parse_int(const std::string& s, long long& out) {
    try {
        std::size_t pos = 0;
        out = std::stoll(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace detail

/// Parses a config file, collecting every error rather than stopping at the
/// first. Returns the config; `errors` receives one message per problem.
inline ExperimentConfig parse_config(std::istream& is, std::vector<std::string>& errors) {
    ExperimentConfig cfg;
    bool schema_seen = false;
    std::string line;
    int line_no = 0;

    auto bad = [&](const std::string& msg) {
        errors.push_back("line " + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value;
        std::getline(ls, value);
        const std::size_t first = value.find_first_not_of(" \t");
        value = (first == std::string::npos) ? "" : value.substr(first);
        const std::size_t last = value.find_last_not_of(" \t\r");
        if (last != std::string::npos) value = value.substr(0, last + 1);

        auto as_double = [&](double& target) {
            double v;
            if (detail::parse_double(value, v))
                target = v;
            else
                bad("key '" + key + "' expects a number, got '" + value + "'");
        };
        auto as_int = [&](int& target) {
            long long v;
            if (detail::parse_int(value, v))
                target = static_cast<int>(v);
            else
                bad("key '" + key + "' expects an integer, got '" + value + "'");
        };
        auto as_u64 = [&](std::uint64_t& target) {
            long long v;
            if (detail::parse_int(value, v) && v >= 0)
                target = static_cast<std::uint64_t>(v);
            else
                bad("key '" + key + "' expects a nonnegative integer, got '" + value + "'");
        };
        auto as_side = [&](std::optional<double>& target) {
            if (value == "none") {
                target.reset();
                return;
            }
            double v;
            if (detail::parse_double(value, v))
                target = v;
            else
                bad("key '" + key + "' expects a number or 'none', got '" + value + "'");
        };

        if (key == "schema") {
            long long v;
            if (!detail::parse_int(value, v) || v != 1)
                bad("unsupported schema version '" + value + "' (expected 1)");
            else
                schema_seen = true;
        } else if (key == "mode") {
            cfg.mode = value;
        } else if (key == "nx") {
            as_int(cfg.nx);
        } else if (key == "ny") {
            as_int(cfg.ny);
        } else if (key == "lx") {
            as_double(cfg.lx);
        } else if (key == "ly") {
            as_double(cfg.ly);
        } else if (key == "circle") {
            std::istringstream cs(value);
            Circle c;
            if (cs >> c.cx >> c.cy >> c.r)
                cfg.circles.push_back(c);
            else
                bad("key 'circle' expects 'cx cy r', got '" + value + "'");
        } else if (key == "perf_seed") {
            std::uint64_t s = 0;
            as_u64(s);
            cfg.perf_seed = s;
        } else if (key == "perf_count") {
            as_int(cfg.perf_count);
        } else if (key == "perf_rmin") {
            as_double(cfg.perf_rmin);
        } else if (key == "perf_rmax") {
            as_double(cfg.perf_rmax);
        } else if (key == "kappa_kind") {
            cfg.kappa_kind = value;
        } else if (key == "kappa_value") {
            as_double(cfg.kappa_value);
        } else if (key == "kappa_log10_min") {
            as_double(cfg.kappa_log10_min);
        } else if (key == "kappa_log10_max") {
            as_double(cfg.kappa_log10_max);
        } else if (key == "kappa_mu") {
            as_double(cfg.kappa_mu);
        } else if (key == "kappa_sigma") {
            as_double(cfg.kappa_sigma);
        } else if (key == "kappa_seed") {
            as_u64(cfg.kappa_seed);
        } else if (key == "cx") {
            as_int(cfg.cx);
        } else if (key == "cy") {
            as_int(cfg.cy);
        } else if (key == "g_left") {
            as_side(cfg.g_left);
        } else if (key == "g_right") {
            as_side(cfg.g_right);
        } else if (key == "g_bottom") {
            as_side(cfg.g_bottom);
        } else if (key == "g_top") {
            as_side(cfg.g_top);
        } else if (key == "source_constant") {
            as_double(cfg.source_constant);
        } else if (key == "L") {
            as_int(cfg.L);
        } else if (key == "eig_cutoff") {
            as_double(cfg.eig_cutoff);
        } else if (key == "theta") {
            as_double(cfg.theta);
        } else if (key == "iter") {
            as_int(cfg.iter);
        } else if (key == "skip_tol") {
            as_double(cfg.skip_tol);
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "sweep_L") {
            cfg.sweep_L.clear();
            std::istringstream vs(value);
            std::string tok;
            while (std::getline(vs, tok, ',')) {
                long long v;
                if (detail::parse_int(tok, v) && v >= 1)
                    cfg.sweep_L.push_back(static_cast<int>(v));
                else
                    bad("key 'sweep_L' expects comma-separated positive integers");
            }
        } else if (key == "sweep_online_iter") {
            as_int(cfg.sweep_online_iter);
        } else if (key == "threads") {
            as_int(cfg.threads);
        } else {
            bad("unknown key '" + key + "'");
        }
    }
    if (!schema_seen) errors.push_back("missing mandatory 'schema 1' line");
    return cfg;
}

/// Full validation; returns one message per violated constraint.
inline std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> errors;
    auto req = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    req(cfg.nx >= 1 && cfg.ny >= 1, "nx and ny must be >= 1");
    req(cfg.lx > 0 && cfg.ly > 0, "lx and ly must be > 0");
    if (cfg.mode != "fine") {
        // fine solves never touch the coarse partition
        req(cfg.cx >= 1 && cfg.cx <= cfg.nx, "cx must be in [1, nx]");
        req(cfg.cy >= 1 && cfg.cy <= cfg.ny, "cy must be in [1, ny]");
    }
    req(cfg.mode == "fine" || cfg.mode == "offline" || cfg.mode == "online" ||
            cfg.mode == "sweep",
        "mode must be one of fine, offline, online, sweep");
    req(cfg.perf_count >= 0, "perf_count must be >= 0");
    if (cfg.perf_count > 0) {
        req(cfg.perf_seed.has_value(), "perf_seed is mandatory for random perforations");
        req(cfg.perf_rmin > 0 && cfg.perf_rmin <= cfg.perf_rmax,
            "need 0 < perf_rmin <= perf_rmax");
        req(cfg.circles.empty(), "explicit circles and perf_count are mutually exclusive");
    }
    for (const Circle& c : cfg.circles) req(c.r > 0, "circle radius must be > 0");
    req(cfg.kappa_kind == "constant" || cfg.kappa_kind == "loguniform" ||
            cfg.kappa_kind == "lognormal",
        "kappa_kind must be constant, loguniform or lognormal");
    if (cfg.kappa_kind == "constant") req(cfg.kappa_value > 0, "kappa_value must be > 0");
    if (cfg.kappa_kind == "loguniform")
        req(cfg.kappa_log10_min <= cfg.kappa_log10_max,
            "kappa_log10_min must be <= kappa_log10_max");
    if (cfg.kappa_kind == "lognormal") req(cfg.kappa_sigma >= 0, "kappa_sigma must be >= 0");
    req(cfg.L >= 1, "L must be >= 1");
    req(cfg.eig_cutoff > 0, "eig_cutoff must be > 0");
    req(cfg.theta >= 0 && cfg.theta <= 1, "theta must be in [0, 1]");
    req(cfg.iter >= 0, "iter must be >= 0");
    req(cfg.skip_tol >= 0, "skip_tol must be >= 0");
    req(!cfg.out_dir.empty(), "out_dir must not be empty");
    req(cfg.threads >= 1, "threads must be >= 1");
    req(cfg.sweep_online_iter >= 0, "sweep_online_iter must be >= 0");
    if (cfg.mode == "sweep") req(!cfg.sweep_L.empty(), "sweep mode needs a nonempty sweep_L");
    return errors;
}

/// The resolved experiment definition, one `key value` line per entry;
/// embedded as comment lines in every emitted CSV for auditability.
/// Execution details (threads, out_dir) are excluded: outputs are identical
/// across thread counts and directories by contract.
inline std::vector<std::string> resolved_config_lines(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    auto kv = [&](const std::string& k, const std::string& v) { out.push_back(k + " " + v); };
    auto side = [](const std::optional<double>& v) {
        return v ? detail::fmt_g17(*v) : std::string("none");
    };
    kv("schema", "1");
    kv("mode", cfg.mode);
    kv("nx", std::to_string(cfg.nx));
    kv("ny", std::to_string(cfg.ny));
    kv("lx", detail::fmt_g17(cfg.lx));
    kv("ly", detail::fmt_g17(cfg.ly));
    for (const Circle& c : cfg.circles)
        kv("circle",
           detail::fmt_g17(c.cx) + " " + detail::fmt_g17(c.cy) + " " + detail::fmt_g17(c.r));
    if (cfg.perf_seed) kv("perf_seed", std::to_string(*cfg.perf_seed));
    kv("perf_count", std::to_string(cfg.perf_count));
    kv("perf_rmin", detail::fmt_g17(cfg.perf_rmin));
    kv("perf_rmax", detail::fmt_g17(cfg.perf_rmax));
    kv("kappa_kind", cfg.kappa_kind);
    if (cfg.kappa_kind == "constant") kv("kappa_value", detail::fmt_g17(cfg.kappa_value));
    if (cfg.kappa_kind == "loguniform") {
        kv("kappa_log10_min", detail::fmt_g17(cfg.kappa_log10_min));
        kv("kappa_log10_max", detail::fmt_g17(cfg.kappa_log10_max));
    }
    if (cfg.kappa_kind == "lognormal") {
        kv("kappa_mu", detail::fmt_g17(cfg.kappa_mu));
        kv("kappa_sigma", detail::fmt_g17(cfg.kappa_sigma));
    }
    if (cfg.kappa_kind != "constant") kv("kappa_seed", std::to_string(cfg.kappa_seed));
    kv("cx", std::to_string(cfg.cx));
    kv("cy", std::to_string(cfg.cy));
    kv("g_left", side(cfg.g_left));
    kv("g_right", side(cfg.g_right));
    kv("g_bottom", side(cfg.g_bottom));
    kv("g_top", side(cfg.g_top));
    kv("source_constant", detail::fmt_g17(cfg.source_constant));
    kv("L", std::to_string(cfg.L));
    kv("eig_cutoff", detail::fmt_g17(cfg.eig_cutoff));
    kv("theta", detail::fmt_g17(cfg.theta));
    kv("iter", std::to_string(cfg.iter));
    kv("skip_tol", detail::fmt_g17(cfg.skip_tol));
    if (cfg.mode == "sweep") {
        std::string ls;
        for (std::size_t k = 0; k < cfg.sweep_L.size(); ++k) {
            if (k) ls += ",";
            ls += std::to_string(cfg.sweep_L[k]);
        }
        kv("sweep_L", ls);
        kv("sweep_online_iter", std::to_string(cfg.sweep_online_iter));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config -> problem data
// ---------------------------------------------------------------------------

inline PerforationSpec make_perforations(const ExperimentConfig& cfg) {
    if (cfg.perf_count > 0)
        return random_perforations(*cfg.perf_seed, cfg.perf_count, cfg.perf_rmin, cfg.perf_rmax,
                                   cfg.lx, cfg.ly);
    PerforationSpec perf;
    perf.circles = cfg.circles;
    return perf;
}

inline PermeabilitySpec make_field(const ExperimentConfig& cfg) {
    if (cfg.kappa_kind == "constant") return PermeabilitySpec::constant(cfg.kappa_value);
    if (cfg.kappa_kind == "loguniform")
        return PermeabilitySpec::log_uniform(cfg.kappa_log10_min, cfg.kappa_log10_max,
                                             cfg.kappa_seed);
    return PermeabilitySpec::log_normal(cfg.kappa_mu, cfg.kappa_sigma, cfg.kappa_seed);
}

inline BoundarySpec make_bc(const ExperimentConfig& cfg) {
    BoundarySpec bc;
    bc.left = cfg.g_left;
    bc.right = cfg.g_right;
    bc.bottom = cfg.g_bottom;
    bc.top = cfg.g_top;
    return bc;
}

inline void validate_or_throw(const ExperimentConfig& cfg) {
    const std::vector<std::string> errors = validate(cfg);
    if (!errors.empty()) {
        std::string all = "invalid config:";
        for (const std::string& e : errors) all += "\n  - " + e;
        throw Error(all);
    }
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

struct RunResult {
    std::vector<std::string> files;  // paths written, in write order
    bool bounds_pass = true;
    std::vector<IterationRecord> history;
};

namespace detail {

inline void write_file(const std::string& path, const std::string& contents,
                       std::vector<std::string>& files) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open output file: " + path);
    os << contents;
    files.push_back(path);
}

inline std::vector<BlockSpectrum> solve_all_spectra(const FineGrid& grid,
                                                    const CoarsePartition& part,
                                                    const BoundarySpec& bc, int threads) {
    std::vector<BlockSpectrum> spectra(part.n_blocks());
    parallel_for(part.n_blocks(), threads, [&](int b) {
        const BlockOperators ops = block_operators(grid, part, bc, b);
        spectra[b] = solve_block_spectrum(ops.a_interior, ops.s, b);
    });
    return spectra;
}

}  // namespace detail

/// Executes one experiment; writes all artifacts under cfg.out_dir. Timing
/// goes to `log` (and never into the deterministic output files).
inline RunResult run(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    validate_or_throw(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::vector<std::string> header = resolved_config_lines(cfg);
    RunResult result;

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto note = [&](const std::string& msg) {
        if (log) *log << "[" << detail::fmt_f2(elapsed()) << "s] " << msg << "\n";
    };

    const PerforationSpec perf = make_perforations(cfg);
    const PermeabilitySpec field = make_field(cfg);
    const BoundarySpec bc = make_bc(cfg);
    const SourceSpec source = SourceSpec::constant(cfg.source_constant);

    const FineGrid grid = build_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly, perf, field);
    note("grid: " + std::to_string(grid.n_cells()) + " active cells, " +
         std::to_string(grid.interior_edges.size()) + " interior edges");
    {
        std::ostringstream os;
        save_grid(grid, os);
        detail::write_file(cfg.out_dir + "/grid.txt", os.str(), result.files);
    }

    const FineOperator op = assemble(grid, source, bc);
    const PressureField p_fine = solve_fine(grid, op);
    note("fine solve done, n = " + std::to_string(op.size()));
    const FluxField flux_fine = recover_flux(grid, p_fine, bc);
    {
        std::ostringstream os;
        write_pressure_csv(os, grid, p_fine, header);
        detail::write_file(cfg.out_dir + "/pressure_fine.csv", os.str(), result.files);
        std::ostringstream fs_os;
        write_flux_csv(fs_os, grid, flux_fine, header);
        detail::write_file(cfg.out_dir + "/flux_fine.csv", fs_os.str(), result.files);
    }
    if (cfg.mode == "fine") return result;

    const CoarsePartition part = build_partition(grid, cfg.cx, cfg.cy);
    const std::vector<BlockSpectrum> spectra =
        detail::solve_all_spectra(grid, part, bc, cfg.threads);
    note("spectra solved for " + std::to_string(part.n_blocks()) + " blocks");
    {
        std::ostringstream os;
        write_spectrum_csv(os, spectra, header);
        detail::write_file(cfg.out_dir + "/spectrum.csv", os.str(), result.files);
    }

    auto emit_solution = [&](const std::string& stem, const PressureField& p) {
        std::ostringstream ps;
        write_pressure_csv(ps, grid, p, header);
        detail::write_file(cfg.out_dir + "/" + stem + ".csv", ps.str(), result.files);
        std::ostringstream us;
        write_flux_csv(us, grid, recover_flux(grid, p, bc), header);
        detail::write_file(cfg.out_dir + "/flux_" + stem.substr(stem.find('_') + 1) + ".csv",
                           us.str(), result.files);
    };

    auto emit_history = [&](const std::vector<IterationRecord>& history, double theta) {
        std::ostringstream ls;
        write_iteration_log_csv(ls, history, header);
        detail::write_file(cfg.out_dir + "/iteration_log.csv", ls.str(), result.files);
        std::vector<BoundSample> samples;
        for (const IterationRecord& rec : history)
            samples.push_back({rec.iteration, rec.energy_sq, rec.sum_delta_sq, rec.lambda, theta});
        const BoundCheckReport report = bound_check(samples);
        std::ostringstream bs;
        write_bound_report_json(bs, report);
        detail::write_file(cfg.out_dir + "/bound_check.json", bs.str(), result.files);
        result.bounds_pass = result.bounds_pass && report.pass;
        result.history = history;
    };

    if (cfg.mode == "offline" || cfg.mode == "online") {
        MultiscaleSpace space = build_offline_space(spectra, cfg.L, cfg.eig_cutoff);
        OnlineConfig online;
        online.theta = cfg.theta;
        online.max_iter = (cfg.mode == "online") ? cfg.iter : 0;
        online.skip_tol = cfg.skip_tol;
        online.n_threads = cfg.threads;
        const EnrichResult enriched =
            enrich_loop(grid, op, part, bc, std::move(space), online, p_fine);
        note("multiscale solve done, dim = " + std::to_string(enriched.space.dim()));
        emit_solution("pressure_ms", enriched.pressures.back());
        emit_history(enriched.history, online.theta);
        std::vector<ConvergenceRow> rows;
        for (const IterationRecord& rec : enriched.history)
            rows.push_back({rec.dim, rec.e_p, rec.e_u});
        std::ostringstream cs;
        write_convergence_csv(cs, rows, header);
        detail::write_file(cfg.out_dir + "/convergence.csv", cs.str(), result.files);
        return result;
    }

    // sweep: offline table over sweep_L, online curve from L = 1.
    std::vector<ConvergenceRow> offline_rows;
    for (int L : cfg.sweep_L) {
        const MultiscaleSpace space = build_offline_space(spectra, L, cfg.eig_cutoff);
        const CoarseSolution sol = coarse_solve(op, part, space);
        offline_rows.push_back({space.dim(), pressure_error(p_fine, sol.p, grid),
                                velocity_error(flux_fine, recover_flux(grid, sol.p, bc), grid)});
        note("offline L = " + std::to_string(L) + ": dim = " + std::to_string(space.dim()) +
             ", e_p = " + detail::fmt_g17(offline_rows.back().e_p));
    }
    {
        std::ostringstream os;
        write_convergence_csv(os, offline_rows, header);
        detail::write_file(cfg.out_dir + "/sweep_offline.csv", os.str(), result.files);
    }

    MultiscaleSpace space = build_offline_space(spectra, 1, cfg.eig_cutoff);
    OnlineConfig online;
    online.theta = cfg.theta;
    online.max_iter = cfg.sweep_online_iter;
    online.skip_tol = cfg.skip_tol;
    online.n_threads = cfg.threads;
    const EnrichResult enriched =
        enrich_loop(grid, op, part, bc, std::move(space), online, p_fine);
    note("online sweep done, final dim = " + std::to_string(enriched.space.dim()));
    std::vector<ConvergenceRow> online_rows;
    for (const IterationRecord& rec : enriched.history)
        online_rows.push_back({rec.dim, rec.e_p, rec.e_u});
    {
        std::ostringstream os;
        write_convergence_csv(os, online_rows, header);
        detail::write_file(cfg.out_dir + "/sweep_online.csv", os.str(), result.files);
    }
    emit_solution("pressure_ms", enriched.pressures.back());
    emit_history(enriched.history, online.theta);
    return result;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<ConvergenceRow> read_convergence_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("report: missing artifact " + path);
    std::vector<ConvergenceRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "dim,e_p,e_u") throw Error("report: unexpected header in " + path);
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        ConvergenceRow row;
        char c1 = 0, c2 = 0;
        if (!(ls >> row.dim >> c1 >> row.e_p >> c2 >> row.e_u) || c1 != ',' || c2 != ',')
            throw Error("report: malformed row in " + path + ": " + line);
        rows.push_back(row);
    }
    if (!header_seen) throw Error("report: no header in " + path);
    return rows;
}

inline std::string fmt_e3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace detail

/// Renders the human-readable convergence table and the SVG plot from a
/// completed sweep directory. Deterministic byte output.
inline std::vector<std::string> report(const std::string& run_dir) {
    const std::vector<ConvergenceRow> offline =
        detail::read_convergence_csv(run_dir + "/sweep_offline.csv");
    const std::vector<ConvergenceRow> online =
        detail::read_convergence_csv(run_dir + "/sweep_online.csv");
    if (offline.empty() || online.empty())
        throw Error("report: empty sweep tables in " + run_dir);

    // e_p and e_u are squared-ratio errors as defined; square roots are
    // listed alongside under distinct labels.
    std::ostringstream txt;
    txt << "convergence report\n";
    txt << "==================\n";
    auto table = [&txt](const char* name, const std::vector<ConvergenceRow>& rows) {
        txt << "\n" << name << "\n";
        txt << "Dim      e_p        e_u        sqrt(e_p)  sqrt(e_u)\n";
        for (const ConvergenceRow& r : rows) {
            char line[200];
            std::snprintf(line, sizeof line, "%-8d %-10s %-10s %-10s %-10s\n", r.dim,
                          detail::fmt_e3(r.e_p).c_str(), detail::fmt_e3(r.e_u).c_str(),
                          detail::fmt_e3(std::sqrt(r.e_p)).c_str(),
                          detail::fmt_e3(std::sqrt(r.e_u)).c_str());
            txt << line;
        }
    };
    table("offline enrichment", offline);
    table("online enrichment", online);

    std::vector<std::string> files;
    {
        std::ofstream os(run_dir + "/report.txt", std::ios::binary);
        if (!os) throw Error("report: cannot write report.txt");
        os << txt.str();
        files.push_back(run_dir + "/report.txt");
    }
    {
        std::ofstream os(run_dir + "/convergence.svg", std::ios::binary);
        if (!os) throw Error("report: cannot write convergence.svg");
        write_convergence_svg(os,
                              {{"offline", "#1f77b4", offline}, {"online", "#d62728", online}},
                              "pressure error vs space dimension");
        files.push_back(run_dir + "/convergence.svg");
    }
    return files;
}

}  // namespace msdarcy
