#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "msdarcy/metrics.hpp"
#include "msdarcy/offline.hpp"
#include "msdarcy/parallel.hpp"

namespace msdarcy {

// ---------------------------------------------------------------------------
// Block-local linear solves
// ---------------------------------------------------------------------------

/// Dense solver for a block operator a_interior + diag(extra). The operator
/// decouples over the block's connected components. A component whose extra
/// diagonal is nonzero somewhere is SPD and solved by Cholesky; otherwise the
/// component operator has the constants as nullspace and the zero-mean
/// solution of the bordered system is returned.
class BlockLocalSolver {
public:
    BlockLocalSolver() = default;

    BlockLocalSolver(const Eigen::MatrixXd& a_interior, const Eigen::VectorXd& extra_diag,
                     const std::vector<int>& comp, int n_comp) {
        const int m = static_cast<int>(comp.size());
        comps_.resize(n_comp);
        for (int l = 0; l < m; ++l) comps_[comp[l]].cells.push_back(l);
        for (Component& c : comps_) {
            const int mc = static_cast<int>(c.cells.size());
            Eigen::MatrixXd a(mc, mc);
            for (int i = 0; i < mc; ++i)
                for (int j = 0; j < mc; ++j) a(i, j) = a_interior(c.cells[i], c.cells[j]);
            double extra = 0.0;
            for (int i = 0; i < mc; ++i) {
                a(i, i) += extra_diag[c.cells[i]];
                extra += extra_diag[c.cells[i]];
            }
            c.spd = extra > 0.0;
            if (c.spd) {
                c.llt.compute(a);
                if (c.llt.info() != Eigen::Success)
                    throw Error("block solver: Cholesky failed on an SPD component");
            } else {
                // Bordered system enforces the zero-mean constraint.
                Eigen::MatrixXd k(mc + 1, mc + 1);
                k.setZero();
                k.topLeftCorner(mc, mc) = a;
                k.topRightCorner(mc, 1).setOnes();
                k.bottomLeftCorner(1, mc).setOnes();
                c.lu.compute(k);
            }
        }
    }

    bool all_spd() const {
        for (const Component& c : comps_)
            if (!c.spd) return false;
        return true;
    }

    /// Largest |1^T r| / ||r|| over singular components (0 when all SPD).
    double compatibility_defect(const Eigen::VectorXd& r) const {
        double worst = 0.0;
        const double norm = r.norm();
        if (norm == 0.0) return 0.0;
        for (const Component& c : comps_) {
            if (c.spd) continue;
            double sum = 0.0;
            for (int cell : c.cells) sum += r[cell];
            worst = std::max(worst, std::abs(sum) / norm);
        }
        return worst;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& r) const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
        for (const Component& c : comps_) {
            const int mc = static_cast<int>(c.cells.size());
            Eigen::VectorXd rc(mc);
            for (int i = 0; i < mc; ++i) rc[i] = r[c.cells[i]];
            if (c.spd) {
                const Eigen::VectorXd xc = c.llt.solve(rc);
                for (int i = 0; i < mc; ++i) x[c.cells[i]] = xc[i];
            } else {
                Eigen::VectorXd rhs(mc + 1);
                rhs.head(mc) = rc;
                rhs[mc] = 0.0;
                const Eigen::VectorXd xc = c.lu.solve(rhs);
                for (int i = 0; i < mc; ++i) x[c.cells[i]] = xc[i];
            }
        }
        return x;
    }

private:
    struct Component {
        std::vector<int> cells;  // local indices within the block
        bool spd = false;
        Eigen::LLT<Eigen::MatrixXd> llt;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    };
    std::vector<Component> comps_;
};

/// Per-block state reused across enrichment iterations: the local operators
/// and factorizations of the velocity-norm operator (for indicators) and of
/// the online local operator.
struct BlockWorkspace {
    BlockOperators ops;
    BlockLocalSolver v_solver;      // a_interior + coupling diagonal
    BlockLocalSolver local_solver;  // a_interior + Dirichlet diagonal
};

inline std::vector<BlockWorkspace> make_block_workspaces(const FineGrid& grid,
                                                         const CoarsePartition& part,
                                                         const BoundarySpec& bc,
                                                         int n_threads = 1) {
    std::vector<BlockWorkspace> ws(part.n_blocks());
    parallel_for(part.n_blocks(), n_threads, [&](int b) {
        BlockWorkspace& w = ws[b];
        w.ops = block_operators(grid, part, bc, b);
        w.v_solver =
            BlockLocalSolver(w.ops.a_interior, w.ops.coupling_diag, w.ops.comp, w.ops.n_comp);
        w.local_solver =
            BlockLocalSolver(w.ops.a_interior, w.ops.dirichlet_diag, w.ops.comp, w.ops.n_comp);
    });
    return ws;
}

// ---------------------------------------------------------------------------
// Residual indicators
// ---------------------------------------------------------------------------

/// Per-block restrictions of the global residual F - A p_ms and the dual
/// norms delta_i = sqrt(r_i^T (A_V^i)^{-1} r_i) that drive enrichment.
struct ResidualIndicators {
    std::vector<Eigen::VectorXd> residuals;  // per block, local order
    std::vector<double> delta;               // per block
    double sum_delta_sq = 0.0;
    int iteration = 0;
};

inline ResidualIndicators compute_indicators(const FineOperator& op, const CoarsePartition& part,
                                             const std::vector<BlockWorkspace>& ws,
                                             const PressureField& p_ms, int n_threads = 1,
                                             int iteration = 0) {
    const Eigen::VectorXd global_residual = op.F - op.A * p_ms;
    ResidualIndicators ind;
    ind.iteration = iteration;
    const int nb = part.n_blocks();
    ind.residuals.resize(nb);
    ind.delta.assign(nb, 0.0);
    parallel_for(nb, n_threads, [&](int b) {
        const std::vector<int>& cells = part.block_cells[b];
        Eigen::VectorXd r(cells.size());
        for (int l = 0; l < static_cast<int>(cells.size()); ++l) r[l] = global_residual[cells[l]];
        ind.residuals[b] = r;
        if (r.isZero(0.0)) return;
        const Eigen::VectorXd x = ws[b].v_solver.solve(r);
        ind.delta[b] = std::sqrt(std::max(0.0, r.dot(x)));
    });
    // Fixed-order reduction keeps the sum independent of the thread count.
    for (int b = 0; b < nb; ++b) ind.sum_delta_sq += ind.delta[b] * ind.delta[b];
    return ind;
}

// ---------------------------------------------------------------------------
// Block selection (theta rule)
// ---------------------------------------------------------------------------

/// Sorts blocks by delta descending (ties by block id) and keeps the
/// shortest prefix whose squared sum reaches theta times the total. Blocks
/// with delta below skip_tol * delta_ref are dropped even if selected;
/// blocks with delta = 0 are never selected.
inline std::vector<int> select_blocks(const ResidualIndicators& ind, double theta,
                                      double skip_tol, double delta_ref) {
    if (theta < 0.0 || theta > 1.0) throw Error("select_blocks: theta must be in [0, 1]");
    if (theta == 0.0 || ind.sum_delta_sq == 0.0) return {};

    const int nb = static_cast<int>(ind.delta.size());
    std::vector<int> order(nb);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (ind.delta[a] != ind.delta[b]) return ind.delta[a] > ind.delta[b];
        return a < b;
    });
    const double target = theta * ind.sum_delta_sq;
    std::vector<int> selected;
    double cumulative = 0.0;
    for (int b : order) {
        if (cumulative >= target) break;
        cumulative += ind.delta[b] * ind.delta[b];
        if (ind.delta[b] > 0.0 && ind.delta[b] >= skip_tol * delta_ref) selected.push_back(b);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

// ---------------------------------------------------------------------------
// Online basis
// ---------------------------------------------------------------------------

/// Solves the block-local residual problem and returns the new basis vector,
/// normalized to unit s-norm. Returns a zero vector when the residual
/// vanishes. On blocks without Dirichlet edges the solve is zero-mean; the
/// residual must be compatible there, or the space is broken.
inline Eigen::VectorXd online_basis(const BlockWorkspace& ws, const Eigen::VectorXd& r_i) {
    if (r_i.isZero(0.0)) return Eigen::VectorXd::Zero(r_i.size());
    const double defect = ws.local_solver.compatibility_defect(r_i);
    if (defect > 1e-8)
        throw Error("online_basis: residual incompatible on a Neumann block (|1^T r|/||r|| = " +
                    std::to_string(defect) + "); constant modes missing from the space");
    Eigen::VectorXd beta = ws.local_solver.solve(r_i);
    const double s_norm = std::sqrt(beta.dot(ws.ops.s.cwiseProduct(beta)));
    if (s_norm == 0.0) return Eigen::VectorXd::Zero(r_i.size());
    beta /= s_norm;
    return beta;
}

// ---------------------------------------------------------------------------
// Enrichment loop
// ---------------------------------------------------------------------------

struct OnlineConfig {
    double theta = 1.0;       // 1: uniform enrichment, 0: none
    int max_iter = 0;         // Iter
    double skip_tol = 1e-3;   // local stopping rule, relative to delta_ref
    int n_threads = 1;
};

/// One row per space state: state 0 is the offline solve, state n the result
/// of n enrichment iterations. Indicators and bound quantities are evaluated
/// on this state; n_selected counts the columns appended to produce it.
struct IterationRecord {
    int iteration = 0;
    int dim = 0;
    double e_p = 0.0;
    double e_u = 0.0;
    double energy_sq = 0.0;      // a(p_h - p_ms, p_h - p_ms)
    double sum_delta_sq = 0.0;
    double lambda = 0.0;         // capital Lambda of the offline selection
    double bound_lhs = 0.0;      // energy_sq
    double bound_rhs = 0.0;      // (2 / Lambda) * sum_delta_sq
    int n_selected = 0;
    std::vector<int> selected_blocks;  // blocks enriched to produce this state
};

struct EnrichResult {
    MultiscaleSpace space;
    std::vector<PressureField> pressures;  // per state
    std::vector<IterationRecord> history;  // per state
};

/// Residual-driven enrichment: from the given offline space, repeatedly
/// computes indicators, selects blocks by the theta rule, adds one online
/// basis per selected block and re-solves the coarse problem. Stops early
/// when nothing is selected. p_fine is the reference solution used for the
/// recorded error metrics.
inline EnrichResult enrich_loop(const FineGrid& grid, const FineOperator& op,
                                const CoarsePartition& part, const BoundarySpec& bc,
                                MultiscaleSpace space, const OnlineConfig& cfg,
                                const PressureField& p_fine) {
    const std::vector<BlockWorkspace> ws = make_block_workspaces(grid, part, bc, cfg.n_threads);
    const FluxField flux_fine = recover_flux(grid, p_fine, bc);

    EnrichResult result;
    result.space = std::move(space);

    double delta_ref = 0.0;  // max delta at the first online iteration
    std::vector<int> selected;

    for (int n = 0; n <= cfg.max_iter; ++n) {
        CoarseSolution sol = coarse_solve(op, part, result.space);
        const ResidualIndicators ind =
            compute_indicators(op, part, ws, sol.p, cfg.n_threads, n);

        IterationRecord rec;
        rec.iteration = n;
        rec.dim = result.space.dim();
        rec.e_p = pressure_error(p_fine, sol.p, grid);
        rec.e_u = velocity_error(flux_fine, recover_flux(grid, sol.p, bc), grid);
        rec.energy_sq = energy_error(op, p_fine, sol.p);
        rec.sum_delta_sq = ind.sum_delta_sq;
        rec.lambda = result.space.lambda_excluded;
        rec.bound_lhs = rec.energy_sq;
        rec.bound_rhs = std::isfinite(rec.lambda) && rec.lambda > 0.0
                            ? (2.0 / rec.lambda) * ind.sum_delta_sq
                            : 0.0;
        rec.n_selected = static_cast<int>(selected.size());
        rec.selected_blocks = selected;
        result.pressures.push_back(sol.p);
        result.history.push_back(rec);

        if (n == cfg.max_iter) break;
        if (n == 0) delta_ref = ind.delta.empty()
                                    ? 0.0
                                    : *std::max_element(ind.delta.begin(), ind.delta.end());

        selected = select_blocks(ind, cfg.theta, cfg.skip_tol, delta_ref);
        if (selected.empty()) break;

        std::vector<Eigen::VectorXd> betas(selected.size());
        parallel_for(static_cast<int>(selected.size()), cfg.n_threads, [&](int k) {
            betas[k] = online_basis(ws[selected[k]], ind.residuals[selected[k]]);
        });
        for (std::size_t k = 0; k < selected.size(); ++k) {
            if (betas[k].isZero(0.0)) continue;
            BasisColumn col;
            col.block_id = selected[k];
            col.kind = BasisColumn::Kind::Online;
            col.values = betas[k];
            result.space.columns.push_back(std::move(col));
            ++result.space.online_counts[selected[k]];
        }
        ++result.space.generation;
    }
    return result;
}

}  // namespace msdarcy
