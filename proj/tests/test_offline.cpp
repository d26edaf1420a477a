#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "msdarcy/metrics.hpp"
#include "msdarcy/offline.hpp"
#include "test_helpers.hpp"

using namespace msdarcy;
using msdarcy::test::unit_grid;

namespace {

/// 2x1 grid of unit cells: one interior edge with t = 1, S = I.
FineGrid two_cell_grid() { return unit_grid(2, 1, 2.0, 1.0); }

std::vector<BlockSpectrum> all_spectra(const FineGrid& g, const CoarsePartition& p,
                                       const BoundarySpec& bc) {
    std::vector<BlockSpectrum> spectra;
    for (int b = 0; b < p.n_blocks(); ++b) {
        const BlockOperators ops = block_operators(g, p, bc, b);
        spectra.push_back(solve_block_spectrum(ops.a_interior, ops.s, b));
    }
    return spectra;
}

}  // namespace

TEST_CASE("block operators on hand-checked blocks") {
    SECTION("two-cell Neumann block") {
        const FineGrid g = two_cell_grid();
        const CoarsePartition p = build_partition(g, 2, 1);
        const BlockOperators ops = block_operators(g, p, BoundarySpec::neumann(), 0);
        REQUIRE(ops.size() == 2);
        CHECK(ops.a_interior(0, 0) == Approx(1.0));
        CHECK(ops.a_interior(0, 1) == Approx(-1.0));
        CHECK(ops.a_interior(1, 1) == Approx(1.0));
        CHECK(ops.s[0] == Approx(1.0));
        CHECK(ops.s[1] == Approx(1.0));
        CHECK(ops.coupling_diag.isZero());
        CHECK(ops.n_comp == 1);
    }
    SECTION("single-cell block with one coupling edge") {
        const FineGrid g = two_cell_grid();
        const CoarsePartition p = build_partition(g, 1, 1);
        REQUIRE(p.n_blocks() == 2);
        const BlockOperators ops = block_operators(g, p, BoundarySpec::neumann(), 0);
        REQUIRE(ops.size() == 1);
        CHECK(ops.a_interior(0, 0) == 0.0);
        CHECK(ops.a_v()(0, 0) == Approx(1.0));
        CHECK(ops.dirichlet_diag[0] == 0.0);
    }
    SECTION("a_v matches the block-diagonal restriction of the global operator") {
        const FineGrid g =
            build_grid(8, 8, 1.0, 1.0, random_perforations(17, 3, 0.05, 0.15, 1.0, 1.0),
                       PermeabilitySpec::log_uniform(-1, 1, 2));
        const CoarsePartition p = build_partition(g, 4, 4);
        const BoundarySpec bc = BoundarySpec::pressure_drop();
        const FineOperator op = assemble(g, SourceSpec::zero(), bc);
        const Eigen::MatrixXd a = Eigen::MatrixXd(op.A);
        for (int b = 0; b < p.n_blocks(); ++b) {
            const BlockOperators ops = block_operators(g, p, bc, b);
            const Eigen::MatrixXd av = ops.a_v();
            for (int i = 0; i < ops.size(); ++i)
                for (int j = 0; j < ops.size(); ++j)
                    CHECK(av(i, j) == Approx(a(ops.cells[i], ops.cells[j])).margin(1e-13));
            // The norm-operator excess over the interior form is a nonnegative diagonal.
            const Eigen::MatrixXd diff = av - ops.a_interior;
            for (int i = 0; i < ops.size(); ++i) {
                CHECK(diff(i, i) >= 0.0);
                for (int j = 0; j < ops.size(); ++j)
                    if (i != j) CHECK(diff(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("two-cell spectral problem solves by hand") {
    const FineGrid g = two_cell_grid();
    const CoarsePartition p = build_partition(g, 2, 1);
    const BlockOperators ops = block_operators(g, p, BoundarySpec::neumann(), 0);
    const BlockSpectrum spec = solve_block_spectrum(ops.a_interior, ops.s, 0);
    REQUIRE(spec.size() == 2);
    CHECK(spec.eigenvalues[0] == Approx(0.0).margin(1e-14));
    CHECK(spec.eigenvalues[1] == Approx(2.0).margin(1e-13));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(spec.eigenvectors(0, 0) == Approx(inv_sqrt2));
    CHECK(spec.eigenvectors(1, 0) == Approx(inv_sqrt2));
    CHECK(spec.eigenvectors(0, 1) == Approx(inv_sqrt2));
    CHECK(spec.eigenvectors(1, 1) == Approx(-inv_sqrt2));
}

TEST_CASE("single-cell spectrum is the normalized constant") {
    Eigen::MatrixXd a(1, 1);
    a << 0.0;
    Eigen::VectorXd s(1);
    s << 3.0 * 0.25;  // kappa = 3, |w| = 0.25
    const BlockSpectrum spec = solve_block_spectrum(a, s, 0);
    CHECK(spec.eigenvalues[0] == 0.0);
    CHECK(spec.eigenvectors(0, 0) == Approx(1.0 / std::sqrt(0.75)));
}

TEST_CASE("spectral identities hold on a heterogeneous block") {
    const FineGrid g =
        build_grid(12, 12, 1.0, 1.0, random_perforations(9, 2, 0.08, 0.2, 1.0, 1.0),
                   PermeabilitySpec::log_normal(0.0, 2.0, 5));
    const CoarsePartition p = build_partition(g, 12, 12);
    const BlockOperators ops = block_operators(g, p, BoundarySpec::neumann(), 0);
    const BlockSpectrum spec = solve_block_spectrum(ops.a_interior, ops.s, 0);
    const int m = spec.size();

    // Ascending order and eigenpair residuals.
    double lmax = spec.eigenvalues[m - 1];
    for (int j = 0; j + 1 < m; ++j) CHECK(spec.eigenvalues[j] <= spec.eigenvalues[j + 1]);
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd res = ops.a_interior * spec.eigenvectors.col(j) -
                                    spec.eigenvalues[j] * ops.s.cwiseProduct(spec.eigenvectors.col(j));
        CHECK(res.norm() <= 1e-10 * std::max(1.0, lmax));
    }
    // s-orthonormality and a-diagonality.
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            const double sjk = spec.eigenvectors.col(j).dot(ops.s.cwiseProduct(spec.eigenvectors.col(k)));
            const double ajk = spec.eigenvectors.col(j).dot(ops.a_interior * spec.eigenvectors.col(k));
            CHECK(sjk == Approx(j == k ? 1.0 : 0.0).margin(1e-10));
            CHECK(ajk == Approx(j == k ? spec.eigenvalues[j] : 0.0).margin(1e-10 * std::max(1.0, lmax)));
        }
    }
    // lambda_1 = 0 with constant eigenvector (block is connected here).
    REQUIRE(ops.n_comp == 1);
    CHECK(spec.eigenvalues[0] <= 1e-10 * lmax);
    const Eigen::VectorXd zero_mode = spec.eigenvectors.col(0);
    CHECK((zero_mode.array() - zero_mode[0]).abs().maxCoeff() <= 1e-10 * std::abs(zero_mode[0]));
}

TEST_CASE("disconnected block carries one zero mode per component") {
    // A vertical perforation wall inside a single block.
    PerforationSpec perf;
    for (int k = 0; k < 10; ++k) perf.circles.push_back({0.5, 0.1 * k + 0.05, 0.12});
    const FineGrid g = build_grid(10, 10, 1.0, 1.0, perf, PermeabilitySpec::constant(1.0));
    const CoarsePartition p = build_partition(g, 10, 10);
    const BlockOperators ops = block_operators(g, p, BoundarySpec::neumann(), 0);
    REQUIRE(ops.n_comp >= 2);
    const BlockSpectrum spec = solve_block_spectrum(ops.a_interior, ops.s, 0);
    CHECK(spec.zero_modes() == ops.n_comp);
    // Zero modes are constant on every component.
    for (int j = 0; j < spec.zero_modes(); ++j) {
        std::vector<double> value(ops.n_comp, std::numeric_limits<double>::quiet_NaN());
        for (int l = 0; l < ops.size(); ++l) {
            double& v = value[ops.comp[l]];
            if (std::isnan(v))
                v = spec.eigenvectors(l, j);
            else
                CHECK(spec.eigenvectors(l, j) == Approx(v).margin(1e-10));
        }
    }
}

TEST_CASE("offline space selection") {
    const FineGrid g = two_cell_grid();
    const CoarsePartition p = build_partition(g, 2, 1);
    const auto spectra = all_spectra(g, p, BoundarySpec::neumann());

    SECTION("L = 1 keeps one constant per block, Lambda = lambda_2") {
        const MultiscaleSpace space = build_offline_space(spectra, 1, 1e5);
        CHECK(space.dim() == p.n_blocks());
        CHECK(space.lambda_excluded == Approx(2.0));
        CHECK(space.offline_counts[0] == 1);
    }
    SECTION("L beyond the block size caps and contributes +inf") {
        const MultiscaleSpace space = build_offline_space(spectra, 5, 1e5);
        CHECK(space.offline_counts[0] == 2);
        CHECK(std::isinf(space.lambda_excluded));
    }
    SECTION("cutoff drops the second mode but keeps the constant") {
        const MultiscaleSpace space = build_offline_space(spectra, 2, 1.0);
        CHECK(space.offline_counts[0] == 1);
        CHECK(space.lambda_excluded == Approx(2.0));
    }
    SECTION("zero modes survive any cutoff") {
        PerforationSpec perf;
        for (int k = 0; k < 10; ++k) perf.circles.push_back({0.5, 0.1 * k + 0.05, 0.12});
        const FineGrid split = build_grid(10, 10, 1.0, 1.0, perf, PermeabilitySpec::constant(1.0));
        const CoarsePartition sp = build_partition(split, 10, 10);
        const auto sspec = all_spectra(split, sp, BoundarySpec::pressure_drop());
        const MultiscaleSpace space = build_offline_space(sspec, 1, 1e5);
        CHECK(space.offline_counts[0] == sspec[0].zero_modes());
        CHECK(space.offline_counts[0] >= 2);
    }
}

TEST_CASE("coarse solve is a Galerkin projection") {
    const FineGrid g =
        build_grid(20, 20, 1.0, 1.0, random_perforations(3, 4, 0.05, 0.12, 1.0, 1.0),
                   PermeabilitySpec::log_normal(0.0, 1.0, 8));
    const CoarsePartition p = build_partition(g, 5, 5);
    const BoundarySpec bc = BoundarySpec::pressure_drop();
    const FineOperator op = assemble(g, SourceSpec::constant(0.7), bc);
    const PressureField p_h = solve_fine(g, op);
    const auto spectra = all_spectra(g, p, bc);

    SECTION("full space reproduces the fine solution") {
        const MultiscaleSpace space =
            build_offline_space(spectra, 10000, std::numeric_limits<double>::infinity());
        CHECK(space.dim() == g.n_cells());
        const CoarseSolution sol = coarse_solve(op, p, space);
        CHECK(pressure_error(p_h, sol.p, g) <= 1e-16 + 1e-8);
    }
    SECTION("constants solve the uniform-Dirichlet problem exactly") {
        const BoundarySpec uni = BoundarySpec::uniform(3.0);
        const FineOperator op_uni = assemble(g, SourceSpec::zero(), uni);
        const auto spectra_uni = all_spectra(g, p, uni);
        const MultiscaleSpace space = build_offline_space(spectra_uni, 1, 1e5);
        const CoarseSolution sol = coarse_solve(op_uni, p, space);
        for (int id = 0; id < g.n_cells(); ++id) CHECK(sol.p[id] == Approx(3.0).margin(1e-10));
    }
    SECTION("Galerkin orthogonality against every basis column") {
        const MultiscaleSpace space = build_offline_space(spectra, 3, 1e5);
        const CoarseSolution sol = coarse_solve(op, p, space);
        const Eigen::VectorXd residual = op.F - op.A * sol.p;
        const double scale = p_h.dot(op.A * p_h);
        for (const BasisColumn& col : space.columns) {
            double dot = 0.0;
            const auto& cells = p.block_cells[col.block_id];
            for (int l = 0; l < static_cast<int>(cells.size()); ++l)
                dot += residual[cells[l]] * col.values[l];
            CHECK(std::abs(dot) <= 1e-8 * scale);
        }
    }
    SECTION("enlarging the space never increases the energy error") {
        double prev = std::numeric_limits<double>::infinity();
        for (int L : {1, 2, 3, 5, 8}) {
            const MultiscaleSpace space = build_offline_space(spectra, L, 1e5);
            const CoarseSolution sol = coarse_solve(op, p, space);
            const double energy = energy_error(op, p_h, sol.p);
            CHECK(energy <= prev * (1.0 + 1e-12) + 1e-14);
            prev = energy;
        }
    }
    SECTION("duplicate columns make the coarse system rank deficient") {
        MultiscaleSpace space = build_offline_space(spectra, 2, 1e5);
        space.columns.push_back(space.columns.front());
        CHECK_THROWS_AS(coarse_solve(op, p, space), Error);
    }
    SECTION("coarse-level conservation block by block") {
        const SourceSpec f = SourceSpec::constant(0.7);
        const MultiscaleSpace space = build_offline_space(spectra, 2, 1e5);
        const CoarseSolution sol = coarse_solve(op, p, space);
        const FluxField flux = recover_flux(g, sol.p, bc);
        const auto net = block_net_outflow(g, p, flux);
        const auto src = block_source_integral(g, p, f);
        const double scale = op.F.cwiseAbs().maxCoeff() + 1.0;
        for (int b = 0; b < p.n_blocks(); ++b)
            CHECK(std::abs(net[b] - src[b]) <= 1e-8 * scale);
    }
}
