#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rdslab/experiments.hpp"
#include "rdslab/transfer_operator.hpp"

namespace rdslab {

/// Shortest round-trip decimal representation (%.17g).
std::string format_double(double v);

/// Plain CSV writer; rows of pre-formatted fields.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Documented schemas (one file per curve):
//   tail:      m, survival, wilson_lo, wilson_hi
//   stability: eps, l1, l1_refined, error_bar, l1_core_excluded
//   badset:    n, theta_exact, theta_mc, theta_mc_lo, theta_mc_hi
//   badfreq:   N, bad_freq, lo, hi
//   birkhoff:  observable, time_average, ulam_integral, mc_stderr, grid_bound,
//              tolerance, pass
//   density:   cell_lo, cell_hi, value
//   matrix:    i, j, value
//   orbit:     step, x
void write_tail_csv(const std::string& path, const TailReport& rep);
void write_stability_csv(const std::string& path, const StabilityReport& rep);
void write_badset_csv(const std::string& theta_path, const std::string& badfreq_path,
                      const BadsetReport& rep);
void write_birkhoff_csv(const std::string& path, const BirkhoffReport& rep);
void write_density_csv(const std::string& path, const Density& d);
void write_matrix_csv(const std::string& path, const UlamMatrix& M);

/// Compact binary density format. Header: magic "RDSD", u32 version, u64 N,
/// f64 eps, then N f64 cell breaks[N+1] and N f64 values.
void write_density_binary(const std::string& path, const Density& d, double eps);
Density read_density_binary(const std::string& path, double* eps_out = nullptr);

struct SvgCurve {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart (axes, ticks, one polyline per curve). Convenience
/// output only; never load-bearing. No timestamps, so output is reproducible.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<SvgCurve>& curves, bool log_x, bool log_y);

/// key=value run manifest, written atomically (temp file + rename). The
/// configuration is echoed under "config." so the manifest can be re-run.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace rdslab
