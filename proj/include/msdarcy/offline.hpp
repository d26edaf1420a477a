#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "msdarcy/assembly.hpp"
#include "msdarcy/grid.hpp"

namespace msdarcy {

// ---------------------------------------------------------------------------
// Block-local operators
// ---------------------------------------------------------------------------

/// Dense block-local operators over the block's cells (in block_cells
/// order):
///   a_interior    - bilinear form over edges interior to the block
///   s             - spectral mass weights kappa_w * |w| (diagonal)
///   coupling_diag - per-cell transmissibility sum of coupling edges plus
///                   the block's Dirichlet edges; a_interior + diag of this
///                   is the velocity-weighted norm operator (equal to the
///                   block-diagonal restriction of the global A)
///   dirichlet_diag- Dirichlet-edge part only; a_interior + diag of this is
///                   the online local operator
/// comp/n_comp describe connectivity through interior edges only.
struct BlockOperators {
    int block_id = -1;
    std::vector<int> cells;  // global cell ids
    Eigen::MatrixXd a_interior;
    Eigen::VectorXd s;
    Eigen::VectorXd coupling_diag;
    Eigen::VectorXd dirichlet_diag;
    std::vector<int> comp;  // per local cell
    int n_comp = 0;

    int size() const { return static_cast<int>(cells.size()); }
    Eigen::MatrixXd a_v() const {
        Eigen::MatrixXd m = a_interior;
        m.diagonal() += coupling_diag;
        return m;
    }
    Eigen::MatrixXd a_local() const {
        Eigen::MatrixXd m = a_interior;
        m.diagonal() += dirichlet_diag;
        return m;
    }
};

inline BlockOperators block_operators(const FineGrid& grid, const CoarsePartition& part,
                                      const BoundarySpec& bc, int block_id) {
    const std::vector<int>& cells = part.block_cells[block_id];
    if (cells.empty()) throw Error("block_operators: empty block");
    const int m = static_cast<int>(cells.size());

    std::vector<int> local_of_cell(grid.n_cells(), -1);
    for (int l = 0; l < m; ++l) local_of_cell[cells[l]] = l;

    BlockOperators ops;
    ops.block_id = block_id;
    ops.cells = cells;
    ops.a_interior = Eigen::MatrixXd::Zero(m, m);
    ops.s.resize(m);
    ops.coupling_diag = Eigen::VectorXd::Zero(m);
    ops.dirichlet_diag = Eigen::VectorXd::Zero(m);

    const double vol = grid.cell_volume();
    for (int l = 0; l < m; ++l) ops.s[l] = grid.kappa[cells[l]] * vol;

    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };

    for (int k : part.block_interior_edges[block_id]) {
        const InteriorEdge& e = grid.interior_edges[k];
        const int l1 = local_of_cell[e.w1];
        const int l2 = local_of_cell[e.w2];
        ops.a_interior(l1, l1) += e.t;
        ops.a_interior(l2, l2) += e.t;
        ops.a_interior(l1, l2) -= e.t;
        ops.a_interior(l2, l1) -= e.t;
        const int a = find(l1), b = find(l2);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    for (int k : part.block_coupling_edges[block_id]) {
        const InteriorEdge& e = grid.interior_edges[k];
        const int l = (local_of_cell[e.w1] >= 0) ? local_of_cell[e.w1] : local_of_cell[e.w2];
        ops.coupling_diag[l] += e.t;
    }
    for (int k : part.block_boundary_faces[block_id]) {
        const BoundaryFace& f = grid.boundary_faces[k];
        if (!bc.value(f.side).has_value()) continue;
        const int l = local_of_cell[f.w];
        ops.coupling_diag[l] += f.t;
        ops.dirichlet_diag[l] += f.t;
    }

    ops.comp.resize(m);
    std::vector<int> comp_of_root(m, -1);
    for (int l = 0; l < m; ++l) {
        const int root = find(l);
        if (comp_of_root[root] < 0) comp_of_root[root] = ops.n_comp++;
        ops.comp[l] = comp_of_root[root];
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Local spectral problem
// ---------------------------------------------------------------------------

/// Full generalized eigendecomposition of (a_interior, diag(s)) on one
/// block: ascending eigenvalues, s-orthonormal eigenvectors, deterministic
/// sign (first nonzero entry positive) and lexicographic order within
/// numerically equal eigenvalues.
struct BlockSpectrum {
    int block_id = -1;
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // local cells x modes, s-orthonormal

    int size() const { return static_cast<int>(eigenvalues.size()); }

    /// Number of (numerically) zero eigenvalues; equals the number of
    /// connected components of the block.
    int zero_modes() const {
        const double lmax = eigenvalues.size() ? eigenvalues[eigenvalues.size() - 1] : 0.0;
        const double tol = 1e-10 * std::max(lmax, 0.0);
        int n = 0;
        while (n < size() && eigenvalues[n] <= tol) ++n;
        return n;
    }
};

inline BlockSpectrum solve_block_spectrum(const Eigen::MatrixXd& a_interior,
                                          const Eigen::VectorXd& s, int block_id = -1) {
    const int m = static_cast<int>(s.size());
    for (int l = 0; l < m; ++l)
        if (!(s[l] > 0.0)) throw Error("solve_block_spectrum: mass weights must be positive");

    // Fold the diagonal mass into a standard symmetric problem.
    const Eigen::VectorXd d = s.cwiseSqrt();
    Eigen::MatrixXd b = a_interior;
    for (int c = 0; c < m; ++c)
        for (int r = 0; r < m; ++r) b(r, c) /= d[r] * d[c];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success) throw Error("solve_block_spectrum: eigensolver failed");

    BlockSpectrum spec;
    spec.block_id = block_id;
    spec.eigenvalues = eig.eigenvalues();
    spec.eigenvectors = eig.eigenvectors();
    for (int c = 0; c < m; ++c) spec.eigenvectors.col(c).array() /= d.array();

    // Deterministic sign: make the first significant entry positive.
    for (int c = 0; c < m; ++c) {
        auto col = spec.eigenvectors.col(c);
        const double thresh = 1e-12 * col.cwiseAbs().maxCoeff();
        for (int r = 0; r < m; ++r) {
            if (std::abs(col[r]) > thresh) {
                if (col[r] < 0.0) col = -col;
                break;
            }
        }
    }
    // Lexicographic order inside numerically equal eigenvalue groups.
    const double lscale = std::max(std::abs(spec.eigenvalues[m - 1]), 1e-300);
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(spec.eigenvalues[a] - spec.eigenvalues[b]) > 1e-12 * lscale)
            return spec.eigenvalues[a] < spec.eigenvalues[b];
        for (int r = 0; r < m; ++r) {
            const double va = spec.eigenvectors(r, a), vb = spec.eigenvectors(r, b);
            if (va != vb) return va < vb;
        }
        return false;
    });
    Eigen::VectorXd ev(m);
    Eigen::MatrixXd vecs(m, m);
    for (int c = 0; c < m; ++c) {
        ev[c] = spec.eigenvalues[order[c]];
        vecs.col(c) = spec.eigenvectors.col(order[c]);
    }
    spec.eigenvalues = std::move(ev);
    spec.eigenvectors = std::move(vecs);
    return spec;
}

// ---------------------------------------------------------------------------
// Multiscale space
// ---------------------------------------------------------------------------

struct BasisColumn {
    enum class Kind { Offline, Online };
    int block_id = -1;
    Kind kind = Kind::Offline;
    Eigen::VectorXd values;  // over the block's cells, zero elsewhere
};

/// Direct-sum multiscale space: each column lives on one block. Columns are
/// ordered by (block, mode) for the offline part; online columns are
/// appended in enrichment order.
struct MultiscaleSpace {
    std::vector<BasisColumn> columns;
    std::vector<int> offline_counts;  // per block, l_i
    std::vector<int> online_counts;   // per block
    double lambda_excluded = std::numeric_limits<double>::infinity();  // capital Lambda
    int generation = 0;  // online iteration index

    int dim() const { return static_cast<int>(columns.size()); }
};

/// Selects the offline space: per block the first l_i eigenfunctions where
/// l_i = min(L, block size, number of eigenvalues <= cutoff), except that
/// every zero mode (one constant per connected component) is always kept.
/// Lambda is the smallest excluded eigenvalue over all blocks; blocks with
/// nothing excluded contribute +infinity.
inline MultiscaleSpace build_offline_space(const std::vector<BlockSpectrum>& spectra, int L,
                                           double eig_cutoff) {
    if (L < 1) throw Error("build_offline_space: L must be >= 1");
    if (!(eig_cutoff > 0.0)) throw Error("build_offline_space: eig_cutoff must be > 0");

    MultiscaleSpace space;
    const int nb = static_cast<int>(spectra.size());
    space.offline_counts.resize(nb);
    space.online_counts.assign(nb, 0);
    space.lambda_excluded = std::numeric_limits<double>::infinity();

    for (int b = 0; b < nb; ++b) {
        const BlockSpectrum& spec = spectra[b];
        const int m = spec.size();
        int below_cutoff = 0;
        while (below_cutoff < m && spec.eigenvalues[below_cutoff] <= eig_cutoff) ++below_cutoff;
        int l = std::min(L, below_cutoff);
        l = std::max(l, spec.zero_modes());  // conservation needs every constant mode
        l = std::max(l, 1);
        l = std::min(l, m);
        space.offline_counts[b] = l;
        if (l < m) space.lambda_excluded = std::min(space.lambda_excluded, spec.eigenvalues[l]);
        for (int j = 0; j < l; ++j) {
            BasisColumn col;
            col.block_id = spec.block_id;
            col.kind = BasisColumn::Kind::Offline;
            col.values = spec.eigenvectors.col(j);
            space.columns.push_back(std::move(col));
        }
    }
    return space;
}

/// The coarse-space operator R0 as a sparse matrix (fine cells x columns).
inline Eigen::SparseMatrix<double> build_r0(const CoarsePartition& part,
                                            const MultiscaleSpace& space, int n_cells) {
    std::vector<Eigen::Triplet<double>> trips;
    std::size_t nnz = 0;
    for (const BasisColumn& col : space.columns) nnz += col.values.size();
    trips.reserve(nnz);
    for (int c = 0; c < space.dim(); ++c) {
        const BasisColumn& col = space.columns[c];
        const std::vector<int>& cells = part.block_cells[col.block_id];
        for (int l = 0; l < static_cast<int>(cells.size()); ++l)
            if (col.values[l] != 0.0) trips.emplace_back(cells[l], c, col.values[l]);
    }
    Eigen::SparseMatrix<double> r0(n_cells, space.dim());
    r0.setFromTriplets(trips.begin(), trips.end());
    r0.makeCompressed();
    return r0;
}

// ---------------------------------------------------------------------------
// Coarse solve
// ---------------------------------------------------------------------------

struct CoarseSystem {
    Eigen::SparseMatrix<double> A_c;  // R0^T A R0; couples only adjacent blocks
    Eigen::VectorXd F_c;              // R0^T F
};

struct CoarseSolution {
    PressureField p;  // prolongated to the fine grid
    Eigen::VectorXd y;
    CoarseSystem system;
};

/// Galerkin solve on the multiscale space: A_c y = F_c with
/// ||F_c - A_c y|| <= 1e-12 ||F_c||, prolongated back to the fine cells.
inline CoarseSolution coarse_solve(const FineOperator& op, const CoarsePartition& part,
                                   const MultiscaleSpace& space) {
    if (space.dim() < 1) throw Error("coarse_solve: empty multiscale space");
    const Eigen::SparseMatrix<double> r0 = build_r0(part, space, op.size());
    CoarseSolution sol;
    sol.system.A_c = (Eigen::SparseMatrix<double>(r0.transpose()) * (op.A * r0).eval()).pruned();
    sol.system.A_c.makeCompressed();
    sol.system.F_c = r0.transpose() * op.F;
    sol.y = solve_spd(sol.system.A_c, sol.system.F_c, 1e-12, "coarse_solve");
    sol.p = r0 * sol.y;
    return sol;
}

}  // namespace msdarcy
