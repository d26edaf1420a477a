#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msdarcy/assembly.hpp"
#include "msdarcy/grid.hpp"
#include "msdarcy/metrics.hpp"
#include "msdarcy/online.hpp"

namespace msdarcy {

// All writers use fixed formatting so identical inputs give identical bytes.

inline void write_pressure_csv(std::ostream& os, const FineGrid& grid, const PressureField& p,
                               const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) os << "# " << line << "\n";
    os << "i,j,value\n";
    for (int id = 0; id < grid.n_cells(); ++id)
        os << grid.cell_ix[id] << "," << grid.cell_iy[id] << "," << detail::fmt_g17(p[id]) << "\n";
}

/// Edge records carry the owning cell (i, j) plus an edge tag: interior
/// edges are tagged by axis (x edges couple (i,j) with (i+1,j)), boundary
/// edges by side.
inline void write_flux_csv(std::ostream& os, const FineGrid& grid, const FluxField& flux,
                           const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) os << "# " << line << "\n";
    os << "i,j,edge,flux,u\n";
    for (std::size_t k = 0; k < grid.interior_edges.size(); ++k) {
        const InteriorEdge& e = grid.interior_edges[k];
        os << grid.cell_ix[e.w1] << "," << grid.cell_iy[e.w1] << ","
           << (e.axis == Axis::X ? "x" : "y") << "," << detail::fmt_g17(flux.interior_flux[k])
           << "," << detail::fmt_g17(flux.interior_u[k]) << "\n";
    }
    for (std::size_t k = 0; k < flux.dirichlet_edges.size(); ++k) {
        const DirichletEdge& d = flux.dirichlet_edges[k];
        os << grid.cell_ix[d.w] << "," << grid.cell_iy[d.w] << "," << side_name(d.side) << ","
           << detail::fmt_g17(flux.dirichlet_flux[k]) << "," << detail::fmt_g17(flux.dirichlet_u[k])
           << "\n";
    }
}

inline void write_spectrum_csv(std::ostream& os, const std::vector<BlockSpectrum>& spectra,
                               const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) os << "# " << line << "\n";
    os << "block,j,lambda\n";
    for (const BlockSpectrum& s : spectra)
        for (int j = 0; j < s.size(); ++j)
            os << s.block_id << "," << j + 1 << "," << detail::fmt_g17(s.eigenvalues[j]) << "\n";
}

inline void write_iteration_log_csv(std::ostream& os, const std::vector<IterationRecord>& history,
                                    const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) os << "# " << line << "\n";
    os << "iter,dim,e_p,e_u,energy_sq,sum_delta_sq,lambda_min,bound_lhs,bound_rhs,"
          "selected_blocks\n";
    for (const IterationRecord& rec : history) {
        os << rec.iteration << "," << rec.dim << "," << detail::fmt_g17(rec.e_p) << ","
           << detail::fmt_g17(rec.e_u) << "," << detail::fmt_g17(rec.energy_sq) << ","
           << detail::fmt_g17(rec.sum_delta_sq) << "," << detail::fmt_g17(rec.lambda) << ","
           << detail::fmt_g17(rec.bound_lhs) << "," << detail::fmt_g17(rec.bound_rhs) << ",";
        for (std::size_t k = 0; k < rec.selected_blocks.size(); ++k) {
            if (k) os << ";";
            os << rec.selected_blocks[k];
        }
        os << "\n";
    }
}

struct ConvergenceRow {
    int dim = 0;
    double e_p = 0.0;
    double e_u = 0.0;
};

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows,
                                  const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) os << "# " << line << "\n";
    os << "dim,e_p,e_u\n";
    for (const ConvergenceRow& r : rows)
        os << r.dim << "," << detail::fmt_g17(r.e_p) << "," << detail::fmt_g17(r.e_u) << "\n";
}

inline void write_bound_report_json(std::ostream& os, const BoundCheckReport& report) {
    nlohmann::ordered_json j;
    j["pass"] = report.pass;
    j["decay_checked"] = report.decay_checked;
    auto entries = [](const std::vector<BoundCheckEntry>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const BoundCheckEntry& e : v) {
            nlohmann::ordered_json o;
            o["iter"] = e.iteration;
            o["lhs"] = e.lhs;
            o["rhs"] = e.rhs;
            o["margin"] = e.margin;
            o["holds"] = e.holds;
            arr.push_back(o);
        }
        return arr;
    };
    j["residual_bound"] = entries(report.residual_bound);
    j["decay"] = entries(report.decay);
    os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// SVG convergence plot
// ---------------------------------------------------------------------------

struct PlotSeries {
    std::string name;
    std::string color;
    std::vector<ConvergenceRow> rows;
};

namespace detail {

inline std::string fmt_f2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/// Dimension vs log10(e_p) line plot. Deterministic byte output for fixed
/// inputs.
inline void write_convergence_svg(std::ostream& os, const std::vector<PlotSeries>& series,
                                  const std::string& title) {
    const double width = 640, height = 480;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    double dim_min = 1e300, dim_max = -1e300, log_min = 1e300, log_max = -1e300;
    for (const PlotSeries& s : series) {
        for (const ConvergenceRow& r : s.rows) {
            const double le = std::log10(std::max(r.e_p, 1e-18));
            dim_min = std::min(dim_min, static_cast<double>(r.dim));
            dim_max = std::max(dim_max, static_cast<double>(r.dim));
            log_min = std::min(log_min, le);
            log_max = std::max(log_max, le);
        }
    }
    if (dim_max <= dim_min) dim_max = dim_min + 1;
    if (log_max <= log_min) log_max = log_min + 1;

    auto sx = [&](double dim) {
        return ml + (dim - dim_min) / (dim_max - dim_min) * (width - ml - mr);
    };
    auto sy = [&](double le) {
        return height - mb - (le - log_min) / (log_max - log_min) * (height - mt - mb);
    };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
          "viewBox=\"0 0 640 480\">\n";
    os << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    os << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"16\">"
       << title << "</text>\n";
    // Axes
    os << "<line x1=\"" << detail::fmt_f2(ml) << "\" y1=\"" << detail::fmt_f2(height - mb)
       << "\" x2=\"" << detail::fmt_f2(width - mr) << "\" y2=\"" << detail::fmt_f2(height - mb)
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << detail::fmt_f2(ml) << "\" y1=\"" << detail::fmt_f2(mt) << "\" x2=\""
       << detail::fmt_f2(ml) << "\" y2=\"" << detail::fmt_f2(height - mb)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"320\" y=\"470\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">multiscale space dimension</text>\n";
    os << "<text x=\"16\" y=\"240\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\" transform=\"rotate(-90 16 240)\">log10 e_p</text>\n";
    // Integer log gridlines
    for (int g = static_cast<int>(std::ceil(log_min)); g <= static_cast<int>(std::floor(log_max));
         ++g) {
        os << "<line x1=\"" << detail::fmt_f2(ml) << "\" y1=\"" << detail::fmt_f2(sy(g))
           << "\" x2=\"" << detail::fmt_f2(width - mr) << "\" y2=\"" << detail::fmt_f2(sy(g))
           << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << detail::fmt_f2(ml - 8) << "\" y=\"" << detail::fmt_f2(sy(g) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << g
           << "</text>\n";
    }
    // Dimension ticks at the extremes
    for (double dim : {dim_min, dim_max}) {
        os << "<text x=\"" << detail::fmt_f2(sx(dim)) << "\" y=\""
           << detail::fmt_f2(height - mb + 16)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << static_cast<long long>(dim) << "</text>\n";
    }
    // Curves and legend
    double legend_y = mt + 10;
    for (const PlotSeries& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < s.rows.size(); ++k) {
            if (k) os << " ";
            os << detail::fmt_f2(sx(s.rows[k].dim)) << ","
               << detail::fmt_f2(sy(std::log10(std::max(s.rows[k].e_p, 1e-18))));
        }
        os << "\"/>\n";
        os << "<rect x=\"" << detail::fmt_f2(width - mr - 150) << "\" y=\""
           << detail::fmt_f2(legend_y - 9) << "\" width=\"12\" height=\"4\" fill=\"" << s.color
           << "\"/>\n";
        os << "<text x=\"" << detail::fmt_f2(width - mr - 132) << "\" y=\""
           << detail::fmt_f2(legend_y - 3) << "\" font-family=\"sans-serif\" font-size=\"12\">"
           << s.name << "</text>\n";
        legend_y += 18;
    }
    os << "</svg>\n";
}

}  // namespace msdarcy
