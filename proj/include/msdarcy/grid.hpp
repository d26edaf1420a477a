#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msdarcy/rng.hpp"

namespace msdarcy {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Perforations
// ---------------------------------------------------------------------------

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
};

/// A set of circular perforations removed from the rectangular domain.
/// Circles may overlap. Random generation with equal seed is reproducible
/// bit for bit.
struct PerforationSpec {
    std::vector<Circle> circles;
    std::uint64_t rng_seed = 0;  // provenance when generated randomly

    static PerforationSpec none() { return {}; }

    bool contains_strictly(double x, double y) const {
        for (const Circle& c : circles) {
            const double dx = x - c.cx;
            const double dy = y - c.cy;
            if (dx * dx + dy * dy < c.r * c.r) return true;
        }
        return false;
    }
};

/// Circles with centers uniform in [0,lx]x[0,ly] and radii uniform in
/// [r_min, r_max], reproducible from the seed.
inline PerforationSpec random_perforations(std::uint64_t seed, int count, double r_min,
                                           double r_max, double lx, double ly) {
    if (count < 0) throw Error("random_perforations: count must be >= 0");
    if (!(r_min > 0.0) || !(r_min <= r_max))
        throw Error("random_perforations: need 0 < r_min <= r_max");
    PerforationSpec spec;
    spec.rng_seed = seed;
    spec.circles.reserve(count);
    Rng rng(seed);
    for (int k = 0; k < count; ++k) {
        Circle c;
        c.cx = rng.uniform(0.0, lx);
        c.cy = rng.uniform(0.0, ly);
        c.r = rng.uniform(r_min, r_max);
        spec.circles.push_back(c);
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Permeability
// ---------------------------------------------------------------------------

/// Cell-wise permeability generator. Values are attached to full-grid cell
/// indices, so a cell's kappa does not depend on which other cells are
/// active.
struct PermeabilitySpec {
    enum class Kind { Constant, LogUniform, LogNormal };

    Kind kind = Kind::Constant;
    double value = 1.0;                        // Constant
    double log10_min = -1.0, log10_max = 1.0;  // LogUniform: 10^U
    double mu = 0.0, sigma = 1.0;              // LogNormal: exp(N(mu, sigma))
    std::uint64_t seed = 0;

    static PermeabilitySpec constant(double v) {
        PermeabilitySpec s;
        s.value = v;
        return s;
    }
    static PermeabilitySpec log_uniform(double lo10, double hi10, std::uint64_t seed) {
        PermeabilitySpec s;
        s.kind = Kind::LogUniform;
        s.log10_min = lo10;
        s.log10_max = hi10;
        s.seed = seed;
        return s;
    }
    static PermeabilitySpec log_normal(double mu, double sigma, std::uint64_t seed) {
        PermeabilitySpec s;
        s.kind = Kind::LogNormal;
        s.mu = mu;
        s.sigma = sigma;
        s.seed = seed;
        return s;
    }

    void validate() const {
        if (kind == Kind::Constant && !(value > 0.0))
            throw Error("permeability: constant value must be > 0");
        if (kind == Kind::LogUniform && !(log10_min <= log10_max))
            throw Error("permeability: log10_min must be <= log10_max");
        if (kind == Kind::LogNormal && !(sigma >= 0.0))
            throw Error("permeability: sigma must be >= 0");
    }

    double sample(std::uint64_t cell_index) const {
        switch (kind) {
            case Kind::Constant:
                return value;
            case Kind::LogUniform: {
                Rng rng = indexed_rng(seed, cell_index);
                return std::pow(10.0, rng.uniform(log10_min, log10_max));
            }
            case Kind::LogNormal: {
                Rng rng = indexed_rng(seed, cell_index);
                return std::exp(mu + sigma * rng.normal());
            }
        }
        return 1.0;  // unreachable
    }
};

// ---------------------------------------------------------------------------
// Fine grid
// ---------------------------------------------------------------------------

enum class Axis : std::uint8_t { X = 0, Y = 1 };
enum class Side : std::uint8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline const char* side_name(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
    }
    return "?";
}

/// Interior face between two active cells. Orientation convention: the
/// pressure jump across the edge is p[w2] - p[w1].
struct InteriorEdge {
    int w1 = -1;
    int w2 = -1;
    Axis axis = Axis::X;
    double t = 0.0;  // transmissibility
};

/// Geometric face of an active cell on the outer domain boundary. Whether it
/// carries Dirichlet data is decided by the boundary spec at assembly time;
/// faces on sides without data act as no-flux by omission, exactly like
/// perforation faces.
struct BoundaryFace {
    int w = -1;
    Side side = Side::Left;
    double t = 0.0;  // half-cell transmissibility
};

/// Transmissibility of an interior face: volume-weighted harmonic average of
/// the two cell permeabilities times the squared face length.
inline double interior_transmissibility(double vol1, double k1, double vol2, double k2,
                                        double edge_len) {
    const double kbar = 2.0 / (vol1 / k1 + vol2 / k2);
    return kbar * edge_len * edge_len;
}

/// Half-cell (one-sided harmonic limit) transmissibility of a boundary face.
inline double boundary_transmissibility(double vol, double k, double edge_len) {
    return (2.0 * k / vol) * edge_len * edge_len;
}

/// Perforated Cartesian grid with per-cell permeability and
/// transmissibility-decorated faces. Immutable after construction.
struct FineGrid {
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    double hx = 0.0, hy = 0.0;
    PerforationSpec perforations;

    std::vector<std::uint8_t> active;  // nx*ny, row-major j*nx + i
    std::vector<int> cell_id;          // nx*ny -> active id, or -1
    std::vector<int> cell_ix;          // id -> i
    std::vector<int> cell_iy;          // id -> j
    std::vector<double> kappa;         // per active cell

    std::vector<InteriorEdge> interior_edges;
    std::vector<BoundaryFace> boundary_faces;

    int n_cells() const { return static_cast<int>(kappa.size()); }
    double cell_volume() const { return hx * hy; }
    double cell_center_x(int id) const { return (cell_ix[id] + 0.5) * hx; }
    double cell_center_y(int id) const { return (cell_iy[id] + 0.5) * hy; }
    int linear_index(int i, int j) const { return j * nx + i; }
    bool is_active(int i, int j) const { return active[linear_index(i, j)] != 0; }
    int id_at(int i, int j) const { return cell_id[linear_index(i, j)]; }
};

namespace detail {

/// Rebuilds interior edges and boundary faces from mask and kappa. Listing
/// order is fixed: x-edges row-major, then y-edges row-major, then boundary
/// faces left/right/bottom/top.
inline void build_faces(FineGrid& g) {
    g.interior_edges.clear();
    g.boundary_faces.clear();
    const double vol = g.cell_volume();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            if (g.is_active(i, j) && g.is_active(i + 1, j)) {
                InteriorEdge e;
                e.w1 = g.id_at(i, j);
                e.w2 = g.id_at(i + 1, j);
                e.axis = Axis::X;
                e.t = interior_transmissibility(vol, g.kappa[e.w1], vol, g.kappa[e.w2], g.hy);
                g.interior_edges.push_back(e);
            }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.is_active(i, j) && g.is_active(i, j + 1)) {
                InteriorEdge e;
                e.w1 = g.id_at(i, j);
                e.w2 = g.id_at(i, j + 1);
                e.axis = Axis::Y;
                e.t = interior_transmissibility(vol, g.kappa[e.w1], vol, g.kappa[e.w2], g.hx);
                g.interior_edges.push_back(e);
            }
    auto add_face = [&](int i, int j, Side side, double edge_len) {
        if (!g.is_active(i, j)) return;
        BoundaryFace f;
        f.w = g.id_at(i, j);
        f.side = side;
        f.t = boundary_transmissibility(vol, g.kappa[f.w], edge_len);
        g.boundary_faces.push_back(f);
    };
    for (int j = 0; j < g.ny; ++j) add_face(0, j, Side::Left, g.hy);
    for (int j = 0; j < g.ny; ++j) add_face(g.nx - 1, j, Side::Right, g.hy);
    for (int i = 0; i < g.nx; ++i) add_face(i, 0, Side::Bottom, g.hx);
    for (int i = 0; i < g.nx; ++i) add_face(i, g.ny - 1, Side::Top, g.hx);
}

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Builds the perforated grid. A cell is excluded iff all four of its
/// corners lie strictly inside the union of the perforation circles; faces
/// adjacent to excluded cells are not listed, which realizes the no-flux
/// condition on perforation boundaries.
inline FineGrid build_grid(int nx, int ny, double lx, double ly, const PerforationSpec& perf,
                           const PermeabilitySpec& field) {
    if (nx < 1 || ny < 1) throw Error("build_grid: nx, ny must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0)) throw Error("build_grid: lx, ly must be > 0");
    for (const Circle& c : perf.circles)
        if (!(c.r > 0.0)) throw Error("build_grid: perforation radius must be > 0");
    field.validate();

    FineGrid g;
    g.nx = nx;
    g.ny = ny;
    g.lx = lx;
    g.ly = ly;
    g.hx = lx / nx;
    g.hy = ly / ny;
    g.perforations = perf;
    g.active.assign(static_cast<std::size_t>(nx) * ny, 0);
    g.cell_id.assign(static_cast<std::size_t>(nx) * ny, -1);

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double x0 = i * g.hx, x1 = (i + 1) * g.hx;
            const double y0 = j * g.hy, y1 = (j + 1) * g.hy;
            const bool removed =
                perf.contains_strictly(x0, y0) && perf.contains_strictly(x1, y0) &&
                perf.contains_strictly(x0, y1) && perf.contains_strictly(x1, y1);
            if (!removed) {
                const int lin = g.linear_index(i, j);
                g.active[lin] = 1;
                g.cell_id[lin] = static_cast<int>(g.cell_ix.size());
                g.cell_ix.push_back(i);
                g.cell_iy.push_back(j);
            }
        }
    }
    if (g.cell_ix.empty()) throw Error("build_grid: empty domain (all cells perforated)");

    g.kappa.resize(g.cell_ix.size());
    for (int id = 0; id < g.n_cells(); ++id) {
        const std::uint64_t lin = static_cast<std::uint64_t>(g.cell_iy[id]) * nx + g.cell_ix[id];
        const double k = field.sample(lin);
        if (!(k > 0.0) || !std::isfinite(k)) throw Error("build_grid: non-positive permeability");
        g.kappa[id] = k;
    }

    detail::build_faces(g);
    return g;
}

/// Connected components over interior edges; returns component index per
/// active cell and the number of components.
inline std::pair<std::vector<int>, int> connected_components(const FineGrid& g) {
    std::vector<int> parent(g.n_cells());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (const InteriorEdge& e : g.interior_edges) {
        const int a = find(e.w1), b = find(e.w2);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<int> comp(g.n_cells(), -1);
    int n_comp = 0;
    for (int id = 0; id < g.n_cells(); ++id) {
        const int root = find(id);
        if (comp[root] < 0) comp[root] = n_comp++;
        comp[id] = comp[root];
    }
    return {comp, n_comp};
}

// ---------------------------------------------------------------------------
// Coarse partition
// ---------------------------------------------------------------------------

/// Partition of the active cells into axis-aligned blocks of cx-by-cy fine
/// cells. Blocks with no active cells are dropped and ids compacted.
struct CoarsePartition {
    int cx = 0, cy = 0;

    std::vector<std::vector<int>> block_cells;           // block -> sorted active cell ids
    std::vector<int> block_of_cell;                      // cell id -> block
    std::vector<std::vector<int>> block_interior_edges;  // indices into grid.interior_edges
    std::vector<std::vector<int>> block_coupling_edges;  // interior edges with one cell inside
    std::vector<std::vector<int>> block_boundary_faces;  // indices into grid.boundary_faces

    int n_blocks() const { return static_cast<int>(block_cells.size()); }
};

inline CoarsePartition build_partition(const FineGrid& g, int cx, int cy) {
    if (cx < 1 || cx > g.nx || cy < 1 || cy > g.ny)
        throw Error("build_partition: need 1 <= cx <= nx and 1 <= cy <= ny");

    CoarsePartition p;
    p.cx = cx;
    p.cy = cy;
    const int nbx = (g.nx + cx - 1) / cx;
    const int nby = (g.ny + cy - 1) / cy;

    std::vector<int> raw_of_cell(g.n_cells());
    std::vector<int> raw_count(nbx * nby, 0);
    for (int id = 0; id < g.n_cells(); ++id) {
        const int raw = (g.cell_iy[id] / cy) * nbx + (g.cell_ix[id] / cx);
        raw_of_cell[id] = raw;
        ++raw_count[raw];
    }
    std::vector<int> compact(nbx * nby, -1);
    int nb = 0;
    for (int raw = 0; raw < nbx * nby; ++raw)
        if (raw_count[raw] > 0) compact[raw] = nb++;

    p.block_cells.resize(nb);
    p.block_of_cell.resize(g.n_cells());
    for (int id = 0; id < g.n_cells(); ++id) {
        const int b = compact[raw_of_cell[id]];
        p.block_of_cell[id] = b;
        p.block_cells[b].push_back(id);
    }

    p.block_interior_edges.resize(nb);
    p.block_coupling_edges.resize(nb);
    p.block_boundary_faces.resize(nb);
    for (int k = 0; k < static_cast<int>(g.interior_edges.size()); ++k) {
        const InteriorEdge& e = g.interior_edges[k];
        const int b1 = p.block_of_cell[e.w1];
        const int b2 = p.block_of_cell[e.w2];
        if (b1 == b2) {
            p.block_interior_edges[b1].push_back(k);
        } else {
            p.block_coupling_edges[b1].push_back(k);
            p.block_coupling_edges[b2].push_back(k);
        }
    }
    for (int k = 0; k < static_cast<int>(g.boundary_faces.size()); ++k)
        p.block_boundary_faces[p.block_of_cell[g.boundary_faces[k].w]].push_back(k);
    return p;
}

// ---------------------------------------------------------------------------
// Grid file format
// ---------------------------------------------------------------------------

/// Writes the self-describing grid file: header, perforation list, then one
/// record (i, j, active, kappa) per full-grid cell. load(save(g))
/// reproduces g exactly.
inline void save_grid(const FineGrid& g, std::ostream& os) {
    os << "msdarcy-grid 1\n";
    os << "nx " << g.nx << "\n";
    os << "ny " << g.ny << "\n";
    os << "lx " << detail::fmt_g17(g.lx) << "\n";
    os << "ly " << detail::fmt_g17(g.ly) << "\n";
    os << "seed " << g.perforations.rng_seed << "\n";
    os << "perforations " << g.perforations.circles.size() << "\n";
    for (const Circle& c : g.perforations.circles)
        os << "circle " << detail::fmt_g17(c.cx) << " " << detail::fmt_g17(c.cy) << " "
           << detail::fmt_g17(c.r) << "\n";
    os << "cells " << g.nx * g.ny << "\n";
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int id = g.cell_id[g.linear_index(i, j)];
            if (id >= 0)
                os << i << " " << j << " 1 " << detail::fmt_g17(g.kappa[id]) << "\n";
            else
                os << i << " " << j << " 0 0\n";
        }
    }
}

inline FineGrid load_grid(std::istream& is) {
    auto expect = [&](const char* key) {
        std::string tok;
        if (!(is >> tok) || tok != key)
            throw Error(std::string("grid file: expected '") + key + "'");
    };
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "msdarcy-grid" || version != 1)
        throw Error("grid file: bad magic or unsupported version");

    FineGrid g;
    std::uint64_t seed = 0;
    expect("nx");
    is >> g.nx;
    expect("ny");
    is >> g.ny;
    expect("lx");
    is >> g.lx;
    expect("ly");
    is >> g.ly;
    expect("seed");
    is >> seed;
    expect("perforations");
    std::size_t n_perf = 0;
    is >> n_perf;
    g.perforations.rng_seed = seed;
    g.perforations.circles.resize(n_perf);
    for (Circle& c : g.perforations.circles) {
        expect("circle");
        is >> c.cx >> c.cy >> c.r;
    }
    expect("cells");
    int n_records = 0;
    is >> n_records;
    if (!is || g.nx < 1 || g.ny < 1 || n_records != g.nx * g.ny)
        throw Error("grid file: inconsistent header");
    g.hx = g.lx / g.nx;
    g.hy = g.ly / g.ny;
    g.active.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
    g.cell_id.assign(static_cast<std::size_t>(g.nx) * g.ny, -1);

    std::vector<double> kappa_by_lin(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
    for (int rec = 0; rec < n_records; ++rec) {
        int i = 0, j = 0, act = 0;
        double k = 0;
        if (!(is >> i >> j >> act >> k)) throw Error("grid file: truncated cell records");
        if (i < 0 || i >= g.nx || j < 0 || j >= g.ny)
            throw Error("grid file: cell index out of range");
        g.active[g.linear_index(i, j)] = act ? 1 : 0;
        kappa_by_lin[g.linear_index(i, j)] = k;
    }
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int lin = g.linear_index(i, j);
            if (!g.active[lin]) continue;
            g.cell_id[lin] = static_cast<int>(g.cell_ix.size());
            g.cell_ix.push_back(i);
            g.cell_iy.push_back(j);
            if (!(kappa_by_lin[lin] > 0.0))
                throw Error("grid file: active cell with non-positive permeability");
            g.kappa.push_back(kappa_by_lin[lin]);
        }
    }
    if (g.kappa.empty()) throw Error("grid file: empty domain");

    detail::build_faces(g);
    return g;
}

}  // namespace msdarcy
