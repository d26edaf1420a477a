#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msdarcy/grid.hpp"

namespace msdarcy {

using PressureField = Eigen::VectorXd;  // one value per active cell, cell-id indexed

// ---------------------------------------------------------------------------
// Problem data
// ---------------------------------------------------------------------------

/// Dirichlet pressure per domain side; a side without a value is no-flux.
/// The default is the unit pressure drop: p = 1 on the left boundary, p = 0
/// on the right, no-flux top and bottom.
struct BoundarySpec {
    std::optional<double> left = 1.0;
    std::optional<double> right = 0.0;
    std::optional<double> bottom;
    std::optional<double> top;

    static BoundarySpec pressure_drop(double g_left = 1.0, double g_right = 0.0) {
        BoundarySpec b;
        b.left = g_left;
        b.right = g_right;
        return b;
    }
    static BoundarySpec uniform(double g) {
        BoundarySpec b;
        b.left = b.right = b.bottom = b.top = g;
        return b;
    }
    static BoundarySpec neumann() {
        BoundarySpec b;
        b.left.reset();
        b.right.reset();
        return b;
    }

    const std::optional<double>& value(Side s) const {
        switch (s) {
            case Side::Left: return left;
            case Side::Right: return right;
            case Side::Bottom: return bottom;
            case Side::Top: return top;
        }
        return left;  // unreachable
    }
    bool pure_neumann() const {
        return !left.has_value() && !right.has_value() && !bottom.has_value() && !top.has_value();
    }
};

/// Source term f(x, y); integrated per cell with the midpoint rule, which
/// matches the piecewise-constant pressure space.
struct SourceSpec {
    std::function<double(double, double)> f;  // empty means zero

    static SourceSpec zero() { return {}; }
    static SourceSpec constant(double c) {
        SourceSpec s;
        if (c != 0.0) s.f = [c](double, double) { return c; };
        return s;
    }
    static SourceSpec of(std::function<double(double, double)> fn) {
        SourceSpec s;
        s.f = std::move(fn);
        return s;
    }

    double cell_integral(const FineGrid& g, int id) const {
        if (!f) return 0.0;
        return f(g.cell_center_x(id), g.cell_center_y(id)) * g.cell_volume();
    }
};

/// Boundary face bound to Dirichlet data.
struct DirichletEdge {
    int w = -1;
    Side side = Side::Left;
    double g = 0.0;
    double t = 0.0;
};

/// Boundary faces of the grid that carry Dirichlet data under bc, in the
/// grid's face order. All other boundary faces are no-flux.
inline std::vector<DirichletEdge> collect_dirichlet_edges(const FineGrid& grid,
                                                          const BoundarySpec& bc) {
    std::vector<DirichletEdge> out;
    for (const BoundaryFace& f : grid.boundary_faces) {
        const std::optional<double>& g = bc.value(f.side);
        if (g.has_value()) out.push_back({f.w, f.side, *g, f.t});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fine operator
// ---------------------------------------------------------------------------

/// The velocity-eliminated pressure system: A is the sparse SPD operator on
/// active-cell pressures with entries built from edge transmissibilities;
/// Dirichlet data is folded into the diagonal and the load vector
/// (half-cell rule).
struct FineOperator {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd F;
    std::vector<DirichletEdge> dirichlet_edges;
    bool pure_neumann = false;

    int size() const { return static_cast<int>(A.rows()); }
};

inline FineOperator assemble(const FineGrid& grid, const SourceSpec& source,
                             const BoundarySpec& bc) {
    const int n = grid.n_cells();
    FineOperator op;
    op.dirichlet_edges = collect_dirichlet_edges(grid, bc);
    op.pure_neumann = op.dirichlet_edges.empty();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * grid.interior_edges.size() + op.dirichlet_edges.size());
    for (const InteriorEdge& e : grid.interior_edges) {
        trips.emplace_back(e.w1, e.w1, e.t);
        trips.emplace_back(e.w2, e.w2, e.t);
        trips.emplace_back(e.w1, e.w2, -e.t);
        trips.emplace_back(e.w2, e.w1, -e.t);
    }
    op.F = Eigen::VectorXd::Zero(n);
    for (int id = 0; id < n; ++id) op.F[id] = source.cell_integral(grid, id);
    for (const DirichletEdge& d : op.dirichlet_edges) {
        trips.emplace_back(d.w, d.w, d.t);
        op.F[d.w] += d.t * d.g;
    }
    op.A.resize(n, n);
    op.A.setFromTriplets(trips.begin(), trips.end());
    op.A.makeCompressed();

    if (op.pure_neumann) {
        // Compatibility: the net source must vanish or no solution exists.
        const double total = op.F.sum();
        const double scale = op.F.cwiseAbs().sum();
        if (std::abs(total) > 1e-12 * std::max(1.0, scale))
            throw Error("assemble: pure Neumann problem with incompatible source (integral of f "
                        "is nonzero)");
    }
    return op;
}

// ---------------------------------------------------------------------------
// Fine solve
// ---------------------------------------------------------------------------

/// Direct sparse factorization with iterative refinement until the residual
/// contract ||F - A p|| <= tol * ||F|| is met.
inline PressureField solve_spd(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& F,
                               double rel_tol, const char* what) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw Error(std::string(what) + ": factorization failed (matrix singular or indefinite)");
    const auto& d = ldlt.vectorD();
    const double d_max = d.maxCoeff();
    if (d.minCoeff() <= 1e-14 * d_max)
        throw Error(std::string(what) + ": matrix is rank deficient");
    Eigen::VectorXd p = ldlt.solve(F);
    const double f_norm = F.norm();
    if (f_norm == 0.0) return Eigen::VectorXd::Zero(F.size());
    for (int pass = 0; pass < 4; ++pass) {
        const Eigen::VectorXd r = F - A * p;
        if (r.norm() <= rel_tol * f_norm) return p;
        p += ldlt.solve(r);
    }
    const double res = (F - A * p).norm() / f_norm;
    if (res > rel_tol)
        throw Error(std::string(what) + ": residual contract violated (relative residual " +
                    std::to_string(res) + ")");
    return p;
}

/// Solves the fine system. Throws if any connected component carries no
/// Dirichlet edge (the system is singular there), naming the component.
inline PressureField solve_fine(const FineGrid& grid, const FineOperator& op) {
    if (op.pure_neumann)
        throw Error("solve_fine: pure Neumann system is singular (no Dirichlet edge on any "
                    "component)");
    auto [comp, n_comp] = connected_components(grid);
    std::vector<char> anchored(n_comp, 0);
    for (const DirichletEdge& d : op.dirichlet_edges) anchored[comp[d.w]] = 1;
    for (int c = 0; c < n_comp; ++c) {
        if (anchored[c]) continue;
        int cells = 0, sample = -1;
        for (int id = 0; id < grid.n_cells(); ++id)
            if (comp[id] == c) {
                ++cells;
                if (sample < 0) sample = id;
            }
        throw Error("solve_fine: connected component " + std::to_string(c) + " (" +
                    std::to_string(cells) + " cells, e.g. cell (" +
                    std::to_string(grid.cell_ix[sample]) + "," + std::to_string(grid.cell_iy[sample]) +
                    ")) has no Dirichlet edge; system is singular");
    }
    return solve_spd(op.A, op.F, 1e-10, "solve_fine");
}

// ---------------------------------------------------------------------------
// Flux recovery
// ---------------------------------------------------------------------------

/// Edge fluxes and edge velocity dofs recovered from a pressure field.
/// Interior: flux = t * (p[w2] - p[w1]); u = flux / |e|. Dirichlet:
/// flux = t * (g - p[w]), positive into the domain. Unlisted faces carry
/// zero flux by construction.
struct FluxField {
    std::vector<double> interior_flux;  // per grid.interior_edges
    std::vector<double> interior_u;
    std::vector<DirichletEdge> dirichlet_edges;
    std::vector<double> dirichlet_flux;  // per dirichlet_edges
    std::vector<double> dirichlet_u;
};

inline FluxField recover_flux(const FineGrid& grid, const PressureField& p,
                              const BoundarySpec& bc) {
    FluxField flux;
    flux.interior_flux.resize(grid.interior_edges.size());
    flux.interior_u.resize(grid.interior_edges.size());
    for (std::size_t k = 0; k < grid.interior_edges.size(); ++k) {
        const InteriorEdge& e = grid.interior_edges[k];
        const double edge_len = (e.axis == Axis::X) ? grid.hy : grid.hx;
        const double jump = p[e.w2] - p[e.w1];
        flux.interior_flux[k] = e.t * jump;
        flux.interior_u[k] = e.t * jump / edge_len;
    }
    flux.dirichlet_edges = collect_dirichlet_edges(grid, bc);
    flux.dirichlet_flux.resize(flux.dirichlet_edges.size());
    flux.dirichlet_u.resize(flux.dirichlet_edges.size());
    for (std::size_t k = 0; k < flux.dirichlet_edges.size(); ++k) {
        const DirichletEdge& d = flux.dirichlet_edges[k];
        const double edge_len = (d.side == Side::Left || d.side == Side::Right) ? grid.hy : grid.hx;
        const double jump = d.g - p[d.w];
        flux.dirichlet_flux[k] = d.t * jump;
        flux.dirichlet_u[k] = d.t * jump / edge_len;
    }
    return flux;
}

/// Per-cell conservation defect: net outflow minus the cell source. For the
/// fine solution this is the algebraic residual and vanishes to solver
/// tolerance.
inline Eigen::VectorXd divergence_defect(const FineGrid& grid, const FluxField& flux,
                                         const SourceSpec& source) {
    Eigen::VectorXd defect = Eigen::VectorXd::Zero(grid.n_cells());
    for (std::size_t k = 0; k < grid.interior_edges.size(); ++k) {
        const InteriorEdge& e = grid.interior_edges[k];
        defect[e.w1] -= flux.interior_flux[k];  // outflow from w1 is -flux
        defect[e.w2] += flux.interior_flux[k];
    }
    for (std::size_t k = 0; k < flux.dirichlet_edges.size(); ++k)
        defect[flux.dirichlet_edges[k].w] -= flux.dirichlet_flux[k];
    for (int id = 0; id < grid.n_cells(); ++id) defect[id] -= source.cell_integral(grid, id);
    return defect;
}

}  // namespace msdarcy
