#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "msdarcy/assembly.hpp"
#include "msdarcy/grid.hpp"

namespace msdarcy {

// ---------------------------------------------------------------------------
// Relative errors (ratios of squared L2 integrals, no square root)
// ---------------------------------------------------------------------------

/// e_p: cell-volume-weighted ratio of |p_h - p_ms|^2 to |p_h|^2.
inline double pressure_error(const PressureField& p_h, const PressureField& p_ms,
                             const FineGrid& grid) {
    if (p_h.size() != p_ms.size() || p_h.size() != grid.n_cells())
        throw Error("pressure_error: field sizes do not match the grid");
    const double vol = grid.cell_volume();
    const double ref = vol * p_h.squaredNorm();
    if (ref == 0.0) throw Error("pressure_error: reference pressure is zero");
    return vol * (p_h - p_ms).squaredNorm() / ref;
}

/// Trapezoidal quadrature of |u|^2 over the domain from edge dofs:
/// (|w1|+|w2|)/2 per interior edge, |w|/2 one-sided on Dirichlet faces.
inline double velocity_l2_sq(const FluxField& u, const FineGrid& grid) {
    const double vol = grid.cell_volume();
    double acc = 0.0;
    for (double ue : u.interior_u) acc += vol * ue * ue;
    for (double ue : u.dirichlet_u) acc += 0.5 * vol * ue * ue;
    return acc;
}

/// e_u: same quadrature applied to the difference field, relative to the
/// reference. Can exceed 1 for poor approximation spaces.
inline double velocity_error(const FluxField& u_h, const FluxField& u_ms, const FineGrid& grid) {
    if (u_h.interior_u.size() != u_ms.interior_u.size() ||
        u_h.dirichlet_u.size() != u_ms.dirichlet_u.size())
        throw Error("velocity_error: flux fields live on different edge sets");
    const double ref = velocity_l2_sq(u_h, grid);
    if (ref == 0.0) throw Error("velocity_error: reference velocity is zero");
    const double vol = grid.cell_volume();
    double num = 0.0;
    for (std::size_t k = 0; k < u_h.interior_u.size(); ++k) {
        const double du = u_h.interior_u[k] - u_ms.interior_u[k];
        num += vol * du * du;
    }
    for (std::size_t k = 0; k < u_h.dirichlet_u.size(); ++k) {
        const double du = u_h.dirichlet_u[k] - u_ms.dirichlet_u[k];
        num += 0.5 * vol * du * du;
    }
    return num / ref;
}

/// Energy error a(p_h - p_ms, p_h - p_ms); identical to the kappa^{-1}
/// weighted velocity error under the lumped quadrature.
inline double energy_error(const FineOperator& op, const PressureField& p_h,
                           const PressureField& p_ms) {
    const Eigen::VectorXd d = p_h - p_ms;
    return d.dot(op.A * d);
}

// ---------------------------------------------------------------------------
// Coarse-level conservation
// ---------------------------------------------------------------------------

/// Net outflow through each block's coupling and Dirichlet edges. Because
/// every block (component) indicator lies in the multiscale space, this
/// equals the block's source integral for Galerkin solutions.
inline std::vector<double> block_net_outflow(const FineGrid& grid, const CoarsePartition& part,
                                             const FluxField& flux) {
    std::vector<double> net(part.n_blocks(), 0.0);
    for (int b = 0; b < part.n_blocks(); ++b) {
        for (int k : part.block_coupling_edges[b]) {
            const InteriorEdge& e = grid.interior_edges[k];
            if (part.block_of_cell[e.w1] == b)
                net[b] -= flux.interior_flux[k];
            else
                net[b] += flux.interior_flux[k];
        }
    }
    for (std::size_t k = 0; k < flux.dirichlet_edges.size(); ++k)
        net[part.block_of_cell[flux.dirichlet_edges[k].w]] -= flux.dirichlet_flux[k];
    return net;
}

inline std::vector<double> block_source_integral(const FineGrid& grid,
                                                 const CoarsePartition& part,
                                                 const SourceSpec& source) {
    std::vector<double> f(part.n_blocks(), 0.0);
    for (int b = 0; b < part.n_blocks(); ++b)
        for (int id : part.block_cells[b]) f[b] += source.cell_integral(grid, id);
    return f;
}

// ---------------------------------------------------------------------------
// Theory-bound evaluation
// ---------------------------------------------------------------------------

/// Inputs per logged iteration; mirrors the enrichment history.
struct BoundSample {
    int iteration = 0;
    double energy_sq = 0.0;
    double sum_delta_sq = 0.0;
    double lambda = 0.0;
    double theta = 0.0;
};

struct BoundCheckEntry {
    int iteration = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs, nonnegative when the bound holds
    bool holds = false;
};

struct BoundCheckReport {
    std::vector<BoundCheckEntry> residual_bound;  // energy <= (2/Lambda) sum delta^2
    std::vector<BoundCheckEntry> decay;           // energy_n vs factor * energy_{n-1}
    bool decay_checked = false;  // false when Lambda is infinite or factor outside (0,1)
    bool pass = true;
};

/// Evaluates the residual-indicator bound on every sample and the per-step
/// decay between consecutive samples. Slack of 1e-6 relative covers
/// floating-point evaluation; an absolute floor of 1e-12 times the largest
/// energy covers the all-zero case.
inline BoundCheckReport bound_check(const std::vector<BoundSample>& samples) {
    BoundCheckReport report;
    double energy_scale = 0.0;
    for (const BoundSample& s : samples) energy_scale = std::max(energy_scale, s.energy_sq);
    const double floor = 1e-12 * energy_scale;

    for (const BoundSample& s : samples) {
        BoundCheckEntry e;
        e.iteration = s.iteration;
        e.lhs = s.energy_sq;
        const bool lambda_finite = std::isfinite(s.lambda) && s.lambda > 0.0;
        e.rhs = lambda_finite ? (2.0 / s.lambda) * s.sum_delta_sq : 0.0;
        if (!lambda_finite) {
            // Full offline space: both sides vanish up to roundoff.
            e.holds = s.energy_sq <= floor;
        } else {
            e.holds = e.lhs <= e.rhs * (1.0 + 1e-6) + floor;
        }
        e.margin = e.rhs - e.lhs;
        report.residual_bound.push_back(e);
        report.pass = report.pass && e.holds;
    }
    for (std::size_t n = 1; n < samples.size(); ++n) {
        const BoundSample& prev = samples[n - 1];
        const BoundSample& cur = samples[n];
        BoundCheckEntry e;
        e.iteration = cur.iteration;
        e.lhs = cur.energy_sq;
        double factor = 1.0;  // nesting alone guarantees non-increase
        if (std::isfinite(prev.lambda) && prev.lambda > 0.0) {
            const double theory = 1.0 - cur.theta * prev.lambda / 2.0;
            if (theory > 0.0 && theory < 1.0) {
                factor = theory;
                report.decay_checked = true;
            }
        }
        e.rhs = factor * prev.energy_sq;
        e.holds = e.lhs <= e.rhs * (1.0 + 1e-6) + floor;
        e.margin = e.rhs - e.lhs;
        report.decay.push_back(e);
        report.pass = report.pass && e.holds;
    }
    return report;
}

}  // namespace msdarcy
