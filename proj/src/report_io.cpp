#include "rdslab/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace rdslab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary: stable newlines
    if (!out) throw error("write_csv: cannot open " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
    if (!out) throw error("write_csv: write failed: " + path);
}

void write_tail_csv(const std::string& path, const TailReport& rep) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rep.m_grid.size(); ++i)
        rows.push_back({std::to_string(rep.m_grid[i]), format_double(rep.survival[i]),
                        format_double(rep.wilson_lo[i]), format_double(rep.wilson_hi[i])});
    write_csv(path, {"m", "survival", "wilson_lo", "wilson_hi"}, rows);
}

void write_stability_csv(const std::string& path, const StabilityReport& rep) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rep.eps_grid.size(); ++i)
        rows.push_back({format_double(rep.eps_grid[i]), format_double(rep.l1[i]),
                        format_double(rep.l1_refined[i]), format_double(rep.error_bar[i]),
                        format_double(rep.l1_core_excluded[i])});
    write_csv(path, {"eps", "l1", "l1_refined", "error_bar", "l1_core_excluded"}, rows);
}

void write_badset_csv(const std::string& theta_path, const std::string& badfreq_path,
                      const BadsetReport& rep) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rep.n_grid.size(); ++i)
        rows.push_back({std::to_string(rep.n_grid[i]), format_double(rep.theta_exact[i]),
                        format_double(rep.theta_mc[i]), format_double(rep.theta_mc_lo[i]),
                        format_double(rep.theta_mc_hi[i])});
    write_csv(theta_path, {"n", "theta_exact", "theta_mc", "theta_mc_lo", "theta_mc_hi"},
              rows);
    rows.clear();
    for (std::size_t i = 0; i < rep.N_list.size(); ++i)
        rows.push_back({format_double(rep.N_list[i]), format_double(rep.bad_freq[i]),
                        format_double(rep.bad_freq_lo[i]),
                        format_double(rep.bad_freq_hi[i])});
    write_csv(badfreq_path, {"N", "bad_freq", "lo", "hi"}, rows);
}

void write_birkhoff_csv(const std::string& path, const BirkhoffReport& rep) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& l : rep.lines)
        rows.push_back({l.name, format_double(l.time_average),
                        format_double(l.ulam_integral), format_double(l.mc_stderr),
                        format_double(l.grid_bound), format_double(l.tolerance),
                        l.pass ? "1" : "0"});
    write_csv(path,
              {"observable", "time_average", "ulam_integral", "mc_stderr", "grid_bound",
               "tolerance", "pass"},
              rows);
}

void write_density_csv(const std::string& path, const Density& d) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < d.grid.size(); ++i)
        rows.push_back({format_double(d.grid.cell_lo(i)), format_double(d.grid.cell_hi(i)),
                        format_double(d.values[i])});
    write_csv(path, {"cell_lo", "cell_hi", "value"}, rows);
}

void write_matrix_csv(const std::string& path, const UlamMatrix& M) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < M.P.rows(); ++i)
        for (SparseRowMatrix::InnerIterator it(M.P, i); it; ++it)
            rows.push_back({std::to_string(it.row()), std::to_string(it.col()),
                            format_double(it.value())});
    write_csv(path, {"i", "j", "value"}, rows);
}

void write_density_binary(const std::string& path, const Density& d, double eps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("write_density_binary: cannot open " + path);
    const char magic[4] = {'R', 'D', 'S', 'D'};
    out.write(magic, 4);
    std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    std::uint64_t n = static_cast<std::uint64_t>(d.grid.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&eps), sizeof eps);
    out.write(reinterpret_cast<const char*>(d.grid.breaks().data()),
              static_cast<std::streamsize>((n + 1) * sizeof(double)));
    out.write(reinterpret_cast<const char*>(d.values.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw error("write_density_binary: write failed: " + path);
}

Density read_density_binary(const std::string& path, double* eps_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("read_density_binary: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::string(magic, 4) != "RDSD")
        throw error("read_density_binary: bad magic in " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    double eps = 0.0;
    in.read(reinterpret_cast<char*>(&eps), sizeof eps);
    std::vector<double> breaks(n + 1);
    in.read(reinterpret_cast<char*>(breaks.data()),
            static_cast<std::streamsize>((n + 1) * sizeof(double)));
    Eigen::ArrayXd vals(static_cast<long>(n));
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw error("read_density_binary: truncated: " + path);
    if (eps_out != nullptr) *eps_out = eps;
    Density d;
    d.grid = Grid::from_breaks(std::move(breaks));
    d.values = vals;
    return d;
}

namespace {

double tick_nice(double span) {
    double raw = span / 6.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double r = raw / mag;
    if (r < 1.5) return mag;
    if (r < 3.5) return 2.0 * mag;
    if (r < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<SvgCurve>& curves, bool log_x, bool log_y) {
    const double W = 860, H = 560, ml = 80, mr = 30, mt = 45, mb = 55;
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if (log_x && !(c.x[i] > 0.0)) continue;
            if (log_y && !(c.y[i] > 0.0)) continue;
            if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
            xmin = std::min(xmin, tx(c.x[i]));
            xmax = std::max(xmax, tx(c.x[i]));
            ymin = std::min(ymin, ty(c.y[i]));
            ymax = std::max(ymax, ty(c.y[i]));
        }
    if (!(xmax > xmin)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymax > ymin)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (ty(v) - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("write_svg_lines: cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << " " << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << W / 2 << "' y='25' text-anchor='middle' font-size='16'>" << title
        << "</text>\n"
        << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='"
        << H - mb << "' stroke='black'/>\n"
        << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    // ticks
    double xstep = tick_nice(xmax - xmin), ystep = tick_nice(ymax - ymin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9; t += xstep) {
        double X = ml + (t - xmin) / (xmax - xmin) * (W - ml - mr);
        out << "<line x1='" << X << "' y1='" << H - mb << "' x2='" << X << "' y2='"
            << H - mb + 5 << "' stroke='black'/>\n"
            << "<text x='" << X << "' y='" << H - mb + 20 << "' text-anchor='middle' "
            << "font-size='11'>" << (log_x ? "1e" : "") << format_double(t).substr(0, 8)
            << "</text>\n";
    }
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9; t += ystep) {
        double Y = H - mb - (t - ymin) / (ymax - ymin) * (H - mt - mb);
        out << "<line x1='" << ml - 5 << "' y1='" << Y << "' x2='" << ml << "' y2='" << Y
            << "' stroke='black'/>\n"
            << "<text x='" << ml - 8 << "' y='" << Y + 4 << "' text-anchor='end' "
            << "font-size='11'>" << (log_y ? "1e" : "") << format_double(t).substr(0, 8)
            << "</text>\n";
    }
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    int ci = 0;
    for (const auto& c : curves) {
        out << "<polyline fill='none' stroke='" << colors[ci % 6] << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if (log_x && !(c.x[i] > 0.0)) continue;
            if (log_y && !(c.y[i] > 0.0)) continue;
            if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
            out << px(c.x[i]) << "," << py(c.y[i]) << " ";
        }
        out << "'/>\n";
        out << "<text x='" << W - mr - 5 << "' y='" << mt + 16 * (ci + 1)
            << "' text-anchor='end' font-size='12' fill='" << colors[ci % 6] << "'>"
            << c.label << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
    if (!out) throw error("write_svg_lines: write failed: " + path);
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw error("write_manifest: cannot open " + tmp);
        for (const auto& kv : entries) out << kv.first << "=" << kv.second << "\n";
        if (!out) throw error("write_manifest: write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw error("write_manifest: rename failed for " + path);
}

}  // namespace rdslab
