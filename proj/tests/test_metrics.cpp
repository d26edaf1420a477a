#include <catch2/catch.hpp>

#include <cmath>
#include <limits>
#include <numeric>

#include "msdarcy/metrics.hpp"
#include "test_helpers.hpp"

using namespace msdarcy;
using msdarcy::test::unit_grid;

TEST_CASE("pressure error basics") {
    const FineGrid g = unit_grid(2, 1, 2.0, 1.0);
    Eigen::VectorXd p_h(2), p_ms(2);
    p_h << 1.0, 0.0;
    p_ms << 1.0, 0.0;
    CHECK(pressure_error(p_h, p_ms, g) == 0.0);
    p_ms << 0.0, 0.0;
    CHECK(pressure_error(p_h, p_ms, g) == Approx(1.0));
    p_ms << 0.5, 0.5;
    CHECK(pressure_error(p_h, p_ms, g) == Approx(0.5));
    CHECK_THROWS_AS(pressure_error(Eigen::VectorXd::Zero(2), p_ms, g), Error);
}

TEST_CASE("velocity error basics") {
    const FineGrid g = unit_grid(4, 4);
    const BoundarySpec bc = BoundarySpec::pressure_drop();
    const FineOperator op = assemble(g, SourceSpec::zero(), bc);
    const PressureField p = solve_fine(g, op);
    const FluxField u = recover_flux(g, p, bc);
    CHECK(velocity_error(u, u, g) == 0.0);
    const FluxField zero = recover_flux(g, Eigen::VectorXd::Zero(g.n_cells()), BoundarySpec::uniform(0.0));
    SECTION("zero approximation gives error one when edge sets match") {
        FluxField u0 = u;
        for (double& v : u0.interior_u) v = 0.0;
        for (double& v : u0.dirichlet_u) v = 0.0;
        CHECK(velocity_error(u, u0, g) == Approx(1.0));
    }
    SECTION("mismatched edge sets are rejected") {
        FluxField truncated = u;
        truncated.interior_u.pop_back();
        CHECK_THROWS_AS(velocity_error(u, truncated, g), Error);
    }
}

TEST_CASE("energy error equals the edge-jump sum") {
    const FineGrid g = build_grid(6, 6, 1.0, 1.0, random_perforations(4, 2, 0.06, 0.15, 1.0, 1.0),
                                  PermeabilitySpec::log_uniform(-1, 1, 6));
    const BoundarySpec bc = BoundarySpec::pressure_drop();
    const FineOperator op = assemble(g, SourceSpec::zero(), bc);
    const Eigen::VectorXd a = msdarcy::test::random_field(g.n_cells(), 3);
    const Eigen::VectorXd b = msdarcy::test::random_field(g.n_cells(), 4);
    CHECK(energy_error(op, a, a) == 0.0);

    const Eigen::VectorXd d = a - b;
    double edge_sum = 0.0;
    for (const InteriorEdge& e : g.interior_edges) {
        const double jump = d[e.w2] - d[e.w1];
        edge_sum += e.t * jump * jump;
    }
    for (const DirichletEdge& de : collect_dirichlet_edges(g, bc))
        edge_sum += de.t * d[de.w] * d[de.w];
    CHECK(energy_error(op, a, b) == Approx(edge_sum).epsilon(1e-12));
}

TEST_CASE("metrics are invariant under cell relabeling") {
    const FineGrid g = build_grid(5, 4, 1.0, 0.8, PerforationSpec::none(),
                                  PermeabilitySpec::log_uniform(-1, 1, 11));
    const BoundarySpec bc = BoundarySpec::pressure_drop();
    const FineOperator op = assemble(g, SourceSpec::zero(), bc);
    const PressureField p_h = solve_fine(g, op);
    const PressureField p_ms = p_h + 0.1 * msdarcy::test::random_field(g.n_cells(), 8);

    // Relabel cell ids by a fixed permutation and rebuild all references.
    const int n = g.n_cells();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(99);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);

    FineGrid pg = g;
    for (int id = 0; id < n; ++id) {
        pg.cell_ix[perm[id]] = g.cell_ix[id];
        pg.cell_iy[perm[id]] = g.cell_iy[id];
        pg.kappa[perm[id]] = g.kappa[id];
    }
    for (auto& c : pg.cell_id)
        if (c >= 0) c = perm[c];
    for (InteriorEdge& e : pg.interior_edges) {
        e.w1 = perm[e.w1];
        e.w2 = perm[e.w2];
    }
    for (BoundaryFace& f : pg.boundary_faces) f.w = perm[f.w];

    Eigen::VectorXd ph_p(n), pms_p(n);
    for (int id = 0; id < n; ++id) {
        ph_p[perm[id]] = p_h[id];
        pms_p[perm[id]] = p_ms[id];
    }
    const FineOperator op_p = assemble(pg, SourceSpec::zero(), bc);

    CHECK(pressure_error(p_h, p_ms, g) == Approx(pressure_error(ph_p, pms_p, pg)).epsilon(1e-13));
    CHECK(energy_error(op, p_h, p_ms) == Approx(energy_error(op_p, ph_p, pms_p)).epsilon(1e-12));
    const double eu = velocity_error(recover_flux(g, p_h, bc), recover_flux(g, p_ms, bc), g);
    const double eu_p = velocity_error(recover_flux(pg, ph_p, bc), recover_flux(pg, pms_p, bc), pg);
    CHECK(eu == Approx(eu_p).epsilon(1e-12));
}

TEST_CASE("bound check report") {
    SECTION("holding bounds pass with positive margins") {
        std::vector<BoundSample> samples = {
            {0, 1.0, 10.0, 4.0, 1.0},   // rhs = 5
            {1, 0.5, 4.0, 4.0, 1.0},    // rhs = 2
        };
        const BoundCheckReport rep = bound_check(samples);
        CHECK(rep.pass);
        REQUIRE(rep.residual_bound.size() == 2);
        CHECK(rep.residual_bound[0].margin == Approx(4.0));
        REQUIRE(rep.decay.size() == 1);
        CHECK_FALSE(rep.decay_checked);  // 1 - theta * Lambda / 2 = -1, outside (0, 1)
        CHECK(rep.decay[0].rhs == Approx(1.0));
    }
    SECTION("violated residual bound fails") {
        std::vector<BoundSample> samples = {{0, 5.0, 1.0, 4.0, 1.0}};  // rhs = 0.5 < lhs
        CHECK_FALSE(bound_check(samples).pass);
    }
    SECTION("energy increase fails the decay check") {
        std::vector<BoundSample> samples = {
            {0, 1.0, 100.0, 0.1, 1.0},
            {1, 1.5, 100.0, 0.1, 1.0},
        };
        CHECK_FALSE(bound_check(samples).pass);
    }
    SECTION("small decay factor is enforced when inside (0, 1)") {
        std::vector<BoundSample> samples = {
            {0, 1.0, 100.0, 1.0, 1.0},   // factor = 1 - 0.5 = 0.5
            {1, 0.49, 100.0, 1.0, 1.0},  // 0.49 <= 0.5 holds
        };
        const BoundCheckReport rep = bound_check(samples);
        CHECK(rep.decay_checked);
        CHECK(rep.pass);
        samples[1].energy_sq = 0.51;  // violates the theoretical factor
        CHECK_FALSE(bound_check(samples).pass);
    }
    SECTION("full offline space: both sides zero, trivially pass") {
        std::vector<BoundSample> samples = {
            {0, 0.0, 0.0, std::numeric_limits<double>::infinity(), 1.0}};
        const BoundCheckReport rep = bound_check(samples);
        CHECK(rep.pass);
        CHECK_FALSE(rep.decay_checked);
    }
    SECTION("single sample has no decay entries") {
        std::vector<BoundSample> samples = {{0, 1.0, 10.0, 1.0, 0.0}};
        CHECK(bound_check(samples).decay.empty());
    }
}

TEST_CASE("coarse conservation diagnostics sum consistently") {
    const FineGrid g = unit_grid(8, 8);
    const CoarsePartition part = build_partition(g, 4, 4);
    const BoundarySpec bc = BoundarySpec::pressure_drop();
    const SourceSpec f = SourceSpec::constant(2.0);
    const FineOperator op = assemble(g, f, bc);
    const PressureField p = solve_fine(g, op);
    const FluxField flux = recover_flux(g, p, bc);
    const auto net = block_net_outflow(g, part, flux);
    const auto src = block_source_integral(g, part, f);
    // The fine solution conserves on every block (it conserves per cell).
    for (int b = 0; b < part.n_blocks(); ++b)
        CHECK(net[b] == Approx(src[b]).margin(1e-10));
    CHECK(std::accumulate(src.begin(), src.end(), 0.0) == Approx(2.0));
}
