// Batch front end: config parsing, experiment dispatch, CSV/SVG emission and
// run manifests. Subcommands: validate-map, simulate, tail, ulam, stability,
// birkhoff.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include "rdslab/config.hpp"
#include "rdslab/experiments.hpp"
#include "rdslab/report_io.hpp"

namespace fs = std::filesystem;
using namespace rdslab;

namespace {

constexpr const char* kVersion = "rdslab 0.1.0";

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string seed_str;
    int threads = 0;
    int grid_n = 0;
    std::string eps_list;
};

void add_common(CLI::App* cmd, CommonFlags& fl) {
    cmd->add_option("--config", fl.config_path, "key=value config file")->required();
    cmd->add_option("--out", fl.out_dir, "output directory");
    cmd->add_option("--seed", fl.seed_str, "RNG seed (overrides config)");
    cmd->add_option("--threads", fl.threads, "worker threads (overrides config)");
    cmd->add_option("--grid", fl.grid_n, "grid cells (overrides config)");
    cmd->add_option("--eps", fl.eps_list, "noise level list (overrides config)");
}

Config load_config(const CommonFlags& fl) {
    Config cfg = Config::parse_file(fl.config_path);
    if (!fl.out_dir.empty()) cfg.set("run.out", fl.out_dir);
    if (!fl.seed_str.empty()) cfg.set("run.seed", fl.seed_str);
    if (fl.threads > 0) cfg.set("run.threads", std::to_string(fl.threads));
    if (fl.grid_n > 0) cfg.set("run.grid", std::to_string(fl.grid_n));
    if (!fl.eps_list.empty()) cfg.set("run.eps", fl.eps_list);
    return cfg;
}

MapSpec map_from_config(const Config& cfg) {
    if (cfg.has("map.file")) return MapSpec::load_file(cfg.get("map.file"));
    std::string kind = cfg.get("map.kind");
    double alpha = cfg.get_double_or("map.alpha", 0.5);
    if (kind == "pm") return MapSpec::pomeau_manneville(alpha);
    if (kind == "lsv") return MapSpec::lsv(alpha);
    if (kind == "doubling") return MapSpec::doubling();
    throw config_error("map.kind must be pm|lsv|doubling (or use map.file)");
}

std::uint64_t require_seed(const Config& cfg) {
    if (!cfg.has("run.seed"))
        throw config_error(
            "an explicit run.seed is required; ambient-entropy runs are refused");
    return cfg.get_u64("run.seed");
}

fs::path out_dir(const Config& cfg) {
    fs::path p = cfg.get_or("run.out", ".");
    fs::create_directories(p);
    return p;
}

std::string now_string() {
    auto t = std::chrono::system_clock::now().time_since_epoch();
    return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(t).count());
}

std::vector<std::pair<std::string, std::string>> manifest_base(
    const Config& cfg, const std::string& command, const std::string& start) {
    std::vector<std::pair<std::string, std::string>> m;
    m.emplace_back("manifest_version", "1");
    m.emplace_back("artifact", kVersion);
    m.emplace_back("command", command);
    m.emplace_back("start_unix", start);
    m.emplace_back("end_unix", now_string());
    for (const auto& kv : cfg.items()) m.emplace_back("config." + kv.first, kv.second);
    return m;
}

NeighborhoodI build_neighborhood(const MapSpec& f, double eps, double radius) {
    return build_I(f, eps, std::vector<double>(f.fixed_points().size(), radius));
}

int cmd_validate_map(const CommonFlags& fl) {
    Config cfg = load_config(fl);
    MapSpec f = map_from_config(cfg);
    auto rep = f.validate_class();
    fs::path dir = out_dir(cfg);
    std::vector<std::vector<std::string>> rows;
    for (const auto& tr : rep.neutral_traces)
        for (std::size_t i = 0; i < tr.offsets.size(); ++i)
            rows.push_back({format_double(tr.p0), tr.side == Side::Right ? "right" : "left",
                            format_double(tr.offsets[i]), format_double(tr.ratios[i]),
                            format_double(tr.declared_A)});
    write_csv((dir / "neutral_ratios.csv").string(),
              {"p0", "side", "offset", "ratio", "declared_A"}, rows);
    std::cout << "map: degree " << f.degree() << ", alpha " << f.alpha() << ", "
              << f.fixed_points().size() << " fixed point(s)\n";
    std::cout << "min Df off P0: " << rep.min_right_deriv_off_p0 << "\n";
    if (rep.ok) {
        std::cout << "class conditions: PASS\n";
        return 0;
    }
    std::cout << "class conditions: FAIL\n";
    for (const auto& m : rep.failures) std::cout << "  " << m << "\n";
    return 1;
}

int cmd_simulate(const CommonFlags& fl) {
    Config cfg = load_config(fl);
    std::string start = now_string();
    MapSpec f = map_from_config(cfg);
    std::uint64_t seed = require_seed(cfg);
    double eps = cfg.get_double_or("simulate.eps", 0.0);
    long steps = cfg.get_long_or("simulate.steps", 1000);
    double x0 = cfg.get_double_or("simulate.x0", 0.5);
    fs::path dir = out_dir(cfg);

    NoiseSeq ts = sample_noise(NoiseModel(eps), steps, seed, 0);
    auto rec = orbit(f, x0, ts);
    ts.save((dir / "noise.bin").string());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rec.points.size(); ++i)
        rows.push_back({std::to_string(i), format_double(rec.points[i]),
                        format_double(rec.log_cocycle[i])});
    write_csv((dir / "orbit.csv").string(), {"step", "x", "log_cocycle"}, rows);

    auto man = manifest_base(cfg, "simulate", start);
    man.emplace_back("output.orbit_csv", (dir / "orbit.csv").string());
    man.emplace_back("output.noise_bin", (dir / "noise.bin").string());
    write_manifest((dir / "manifest.txt").string(), man);
    std::cout << "wrote " << (dir / "orbit.csv").string() << " (" << rec.points.size()
              << " points)\n";
    return 0;
}

int cmd_tail(const CommonFlags& fl) {
    Config cfg = load_config(fl);
    std::string start = now_string();
    MapSpec f = map_from_config(cfg);
    std::uint64_t seed = require_seed(cfg);
    int threads = static_cast<int>(cfg.get_long_or("run.threads", 1));
    std::string kind = cfg.get_or("tail.kind", "escape");
    double eps = cfg.has("run.eps") ? cfg.get_double_list("run.eps")[0]
                                    : cfg.get_double("tail.eps");
    long samples = cfg.get_long_or("tail.samples", 100000);
    long m_max = cfg.get_long_or("tail.m_max", 1024);
    double i_radius = cfg.get_double_or("tail.i_radius", 0.1);
    int probes = static_cast<int>(cfg.get_long_or("tail.probes", 17));
    fs::path dir = out_dir(cfg);

    FitWindowSpec window = FitWindowSpec::floor_rule();
    if (cfg.has("tail.window_lo") && cfg.has("tail.window_hi"))
        window = FitWindowSpec::explicit_window(cfg.get_long("tail.window_lo"),
                                                cfg.get_long("tail.window_hi"));
    else if (cfg.has("tail.crossover_level"))
        window = FitWindowSpec::crossover(cfg.get_double("tail.crossover_level"));

    TailReport rep;
    if (kind == "escape") {
        auto I = build_neighborhood(f, eps, i_radius);
        rep = tail_escape(f, I, eps, samples, m_max, seed, threads, window);
    } else if (kind == "mk") {
        auto I = build_neighborhood(f, eps, i_radius);
        auto c = Constants::defaults(f, I);
        double K = cfg.get_double("tail.K");
        rep = tail_mK(f, I, c, eps, K, samples, m_max, seed, threads,
                      cfg.get_double_or("tail.alpha_bar", 0.0), probes, window);
    } else if (kind == "mv") {
        double v_radius = cfg.get_double_or("tail.v_radius", 0.05);
        auto I = build_neighborhood(f, eps, i_radius);
        auto c = Constants::defaults(f, I);
        auto V = NeighborhoodI::around_fixed_points(f, v_radius);
        rep = tail_mV(f, V, c, eps, samples, m_max, seed, threads, probes, window);
    } else {
        throw config_error("tail.kind must be escape|mk|mv");
    }

    write_tail_csv((dir / "tail.csv").string(), rep);
    SvgCurve curve;
    curve.label = "survival";
    for (std::size_t i = 0; i < rep.m_grid.size(); ++i) {
        curve.x.push_back(static_cast<double>(rep.m_grid[i]));
        curve.y.push_back(rep.survival[i]);
    }
    write_svg_lines((dir / "tail.svg").string(), "survival of " + kind, {curve}, true,
                    true);

    auto man = manifest_base(cfg, "tail", start);
    man.emplace_back("output.tail_csv", (dir / "tail.csv").string());
    man.emplace_back("output.tail_svg", (dir / "tail.svg").string());
    man.emplace_back("result.fitted_slope", format_double(rep.fit.slope));
    man.emplace_back("result.slope_stderr", format_double(rep.fit.stderr_slope));
    man.emplace_back("result.r2", format_double(rep.fit.r2));
    man.emplace_back("result.target_slope", format_double(rep.target_slope));
    man.emplace_back("result.window", std::to_string(rep.fit.window_lo) + ".." +
                                          std::to_string(rep.fit.window_hi));
    man.emplace_back("result.window_rule", rep.window_rule);
    man.emplace_back("result.censored_fraction", format_double(rep.censored_fraction));
    man.emplace_back(
        "result.slope_within_target",
        std::fabs(rep.fit.slope - rep.target_slope) <= 0.25 ? "pass" : "fail");
    write_manifest((dir / "manifest.txt").string(), man);
    std::cout << "fitted slope " << rep.fit.slope << " (target " << rep.target_slope
              << ", window " << rep.window_rule << ")\n";
    return 0;
}

int cmd_ulam(const CommonFlags& fl) {
    Config cfg = load_config(fl);
    std::string start = now_string();
    MapSpec f = map_from_config(cfg);
    int n = static_cast<int>(cfg.get_long_or("run.grid", cfg.get_long_or("ulam.grid", 1024)));
    bool graded = cfg.get_bool_or("ulam.graded", true);
    double eps = cfg.has("run.eps") ? cfg.get_double_list("run.eps")[0]
                                    : cfg.get_double_or("ulam.eps", 0.0);
    double tol = cfg.get_double_or("ulam.tol", 1e-11);
    fs::path dir = out_dir(cfg);

    Grid grid = graded ? Grid::graded(n, f.fixed_points()) : Grid::uniform(n);
    auto M = annealed_build(f, grid, eps);
    auto st = stationary(M, tol);
    write_density_csv((dir / "stationary.csv").string(), st.density);
    write_density_binary((dir / "stationary.bin").string(), st.density, eps);
    if (cfg.get_bool_or("ulam.write_matrix", false))
        write_matrix_csv((dir / "matrix.csv").string(), M);

    SvgCurve curve;
    curve.label = "stationary density";
    for (int i = 0; i < grid.size(); ++i) {
        curve.x.push_back(grid.cell_mid(i));
        curve.y.push_back(st.density.values[i]);
    }
    write_svg_lines((dir / "stationary.svg").string(), "stationary density", {curve},
                    false, false);

    auto man = manifest_base(cfg, "ulam", start);
    man.emplace_back("output.stationary_csv", (dir / "stationary.csv").string());
    man.emplace_back("output.stationary_bin", (dir / "stationary.bin").string());
    man.emplace_back("output.stationary_svg", (dir / "stationary.svg").string());
    man.emplace_back("result.iterations", std::to_string(st.iterations));
    man.emplace_back("result.residual", format_double(st.residual));
    man.emplace_back("result.row_sum_error", format_double(M.max_row_sum_error()));
    write_manifest((dir / "manifest.txt").string(), man);
    std::cout << "stationary density: " << st.iterations << " iterations, residual "
              << st.residual << "\n";
    return 0;
}

int cmd_stability(const CommonFlags& fl) {
    Config cfg = load_config(fl);
    std::string start = now_string();
    MapSpec f = map_from_config(cfg);
    int n = static_cast<int>(
        cfg.get_long_or("run.grid", cfg.get_long_or("stability.grid", 4096)));
    std::vector<double> eps_list = cfg.has("run.eps")
                                       ? cfg.get_double_list("run.eps")
                                       : cfg.get_double_list("stability.eps_list");
    double tol = cfg.get_double_or("stability.tol", 1e-11);
    fs::path dir = out_dir(cfg);

    Grid grid = Grid::graded(n, f.fixed_points());
    auto rep = stability_sweep(f, eps_list, grid, tol);
    write_stability_csv((dir / "stability.csv").string(), rep);
    SvgCurve curve;
    curve.label = "l1 distance";
    for (std::size_t i = 0; i < rep.eps_grid.size(); ++i) {
        curve.x.push_back(rep.eps_grid[i]);
        curve.y.push_back(rep.l1[i]);
    }
    write_svg_lines((dir / "stability.svg").string(), "strong stochastic stability",
                    {curve}, false, false);

    bool nonincreasing = true;
    for (std::size_t i = 0; i + 1 < rep.l1.size(); ++i)
        if (rep.l1[i + 1] > rep.l1[i] + rep.error_bar[i + 1] + rep.error_bar[i])
            nonincreasing = false;
    auto man = manifest_base(cfg, "stability", start);
    man.emplace_back("output.stability_csv", (dir / "stability.csv").string());
    man.emplace_back("output.stability_svg", (dir / "stability.svg").string());
    man.emplace_back("result.first_l1", format_double(rep.l1.front()));
    man.emplace_back("result.last_l1", format_double(rep.l1.back()));
    man.emplace_back("result.nonincreasing", nonincreasing ? "pass" : "fail");
    man.emplace_back("result.last_below_first_third",
                     rep.l1.back() < rep.l1.front() / 3.0 ? "pass" : "fail");
    write_manifest((dir / "manifest.txt").string(), man);
    std::cout << "l1 curve:";
    for (double v : rep.l1) std::cout << " " << v;
    std::cout << "\n";
    return 0;
}

int cmd_birkhoff(const CommonFlags& fl) {
    Config cfg = load_config(fl);
    std::string start = now_string();
    MapSpec f = map_from_config(cfg);
    std::uint64_t seed = require_seed(cfg);
    double eps = cfg.has("run.eps") ? cfg.get_double_list("run.eps")[0]
                                    : cfg.get_double("birkhoff.eps");
    long steps = cfg.get_long_or("birkhoff.steps", 10000000);
    long burn_in = cfg.get_long_or("birkhoff.burn_in", 10000);
    int n = static_cast<int>(
        cfg.get_long_or("run.grid", cfg.get_long_or("birkhoff.grid", 4096)));
    double radius = cfg.get_double_or("birkhoff.indicator_radius", 0.1);
    fs::path dir = out_dir(cfg);

    Grid grid = Grid::graded(n, f.fixed_points());
    auto rep = birkhoff_check(f, eps, default_observables(f, radius), steps, burn_in,
                              seed, grid);
    write_birkhoff_csv((dir / "birkhoff.csv").string(), rep);
    auto man = manifest_base(cfg, "birkhoff", start);
    man.emplace_back("output.birkhoff_csv", (dir / "birkhoff.csv").string());
    bool all = true;
    for (const auto& l : rep.lines) {
        man.emplace_back("result." + l.name,
                         format_double(std::fabs(l.time_average - l.ulam_integral)) +
                             " <= " + format_double(l.tolerance) +
                             (l.pass ? " pass" : " fail"));
        all = all && l.pass;
    }
    man.emplace_back("result.all_pass", all ? "pass" : "fail");
    write_manifest((dir / "manifest.txt").string(), man);
    for (const auto& l : rep.lines)
        std::cout << l.name << ": |" << l.time_average << " - " << l.ulam_integral
                  << "| vs " << l.tolerance << (l.pass ? " PASS" : " FAIL") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for noisy intermittent circle maps"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonFlags fl;
    auto* validate = app.add_subcommand("validate-map", "check class conditions");
    add_common(validate, fl);
    auto* simulate = app.add_subcommand("simulate", "run and store one noisy orbit");
    add_common(simulate, fl);
    auto* tail = app.add_subcommand("tail", "escape/expansion/return tail experiment");
    add_common(tail, fl);
    auto* ulam = app.add_subcommand("ulam", "stationary density of the discretized operator");
    add_common(ulam, fl);
    auto* stability =
        app.add_subcommand("stability", "noise sweep of stationary densities");
    add_common(stability, fl);
    auto* birkhoff =
        app.add_subcommand("birkhoff", "time averages against operator integrals");
    add_common(birkhoff, fl);

    CLI11_PARSE(app, argc, argv);
    try {
        if (validate->parsed()) return cmd_validate_map(fl);
        if (simulate->parsed()) return cmd_simulate(fl);
        if (tail->parsed()) return cmd_tail(fl);
        if (ulam->parsed()) return cmd_ulam(fl);
        if (stability->parsed()) return cmd_stability(fl);
        if (birkhoff->parsed()) return cmd_birkhoff(fl);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
