#pragma once

#include "bvlab/field.hpp"
#include "bvlab/lifting.hpp"

namespace bvlab {

// A grid cell of the projection decomposition: a group of mesh triangles with
// its free interior nodes and clamped boundary nodes.
struct SuperCell {
    std::vector<int> tris;
    std::vector<int> interior_nodes;
    std::vector<int> boundary_nodes;
    std::vector<int> boundary_loop;  // ordered loop for the degree check
};

struct PolarGrid {
    double delta = 0.0;      // target cell side eta^beta (times the disk radius)
    int ring_stride = 1, theta_stride = 1;
    int ring_offset = 0, theta_offset = 0;
    std::vector<int> rings;  // chosen mesh ring indices, ascending
    int outer_ring = 0;
    std::vector<SuperCell> cells;
    double grid_energy = 0.0;  // GL energy restricted to the grid lines
    double grid_bound = 0.0;   // (2 / eta^beta) * bulk GL energy
};

namespace detail {

// GL energy density per cell (no anchoring): |grad u|^2 + (1-|u|^2)^2/eta^2
// with the penalty taken as the vertex mean.
inline double gl_cell_density(const Domain& d, const VectorField2D& u, int c) {
    const Tri& T = d.cells[c];
    Vec2 g1 = p1_gradient_component(d, c, u.values[T.v[0]].x, u.values[T.v[1]].x,
                                    u.values[T.v[2]].x);
    Vec2 g2 = p1_gradient_component(d, c, u.values[T.v[0]].y, u.values[T.v[1]].y,
                                    u.values[T.v[2]].y);
    double pen = 0.0;
    for (int k = 0; k < 3; ++k) {
        double m2 = norm2(u.values[T.v[k]]);
        pen += (1.0 - m2) * (1.0 - m2) / 3.0;
    }
    return norm2(g1) + norm2(g2) + pen / (u.eta * u.eta);
}

// cell index of quad (i, j), first triangle; i in [1, n_r), j in [0, n_theta)
inline int quad_t1(const Domain& d, int i, int j) {
    j = ((j % d.n_theta) + d.n_theta) % d.n_theta;
    return d.n_theta + ((i - 1) * d.n_theta + j) * 2;
}
inline int quad_t2(const Domain& d, int i, int j) { return quad_t1(d, i, j) + 1; }

// line integral of the GL density along mesh circle `i` (averaged adjacent
// cells) and along the radial mesh line at angular index `j` between rings.
inline double ring_line_energy(const Domain& d, const VectorField2D& u, int i) {
    double acc = 0.0;
    for (int j = 0; j < d.n_theta; ++j) {
        int inner = i == 1 ? j : quad_t1(d, i - 1, j);
        int outer = quad_t2(d, i, j);  // valid for i <= n_r - 1
        double den = 0.5 * (gl_cell_density(d, u, inner) + gl_cell_density(d, u, outer));
        double ds = norm(d.nodes[d.node_index(i, j + 1)] - d.nodes[d.node_index(i, j)]);
        acc += den * ds;
    }
    return acc;
}

inline double radial_line_energy(const Domain& d, const VectorField2D& u, int j, int i_lo,
                                 int i_hi) {
    double acc = 0.0;
    for (int i = std::max(1, i_lo); i < i_hi; ++i) {
        double den = 0.5 * (gl_cell_density(d, u, quad_t1(d, i, j)) +
                            gl_cell_density(d, u, quad_t2(d, i, j - 1)));
        double ds = norm(d.nodes[d.node_index(i + 1, j)] - d.nodes[d.node_index(i, j)]);
        acc += den * ds;
    }
    return acc;
}

}  // namespace detail

// Shifted polar grid of side ~ eta^beta aligned with the mesh rings/radii.
// The shifts are chosen by discrete averaging (minimum over offsets), so the
// restricted GL energy obeys the mean-value bound by construction. Cells are
// regrouped angularly toward the center so all sides stay of order eta^beta.
inline PolarGrid build_polar_grid(const VectorField2D& u, double beta, double eta) {
    const Domain& d = *u.domain;
    require(d.shape.kind == BoundaryShape::Kind::Disk, "invalid-argument",
            "polar grid construction requires a disk mesh");
    require(beta > 0.5 && beta < 1.0, "invalid-argument", "beta must lie in (1/2, 1)");
    double R = d.shape.radius;
    double delta = std::pow(eta, beta) * R;

    PolarGrid grid;
    grid.delta = delta;
    double dr_mean = R / d.n_r;  // uniform-grading spacing
    double darc = 2.0 * kPi * R / d.n_theta;
    require(delta >= 2.0 * std::max(dr_mean, darc), "resolution",
            "eta^beta below mesh resolution; refine the mesh or raise eta");

    int k_r = std::max(2, static_cast<int>(std::lround(delta / dr_mean)));
    int k_th = std::max(2, static_cast<int>(std::lround(delta / darc)));
    grid.ring_stride = k_r;
    grid.theta_stride = k_th;

    // bulk GL energy for the mean-value bound
    EnergyBreakdown eb = energy(u);
    double bulk = eb.dirichlet + eb.penalty;
    grid.grid_bound = 2.0 / std::pow(eta, beta) * bulk;

    // ring offset: rings counted inward from just below the boundary
    double best = 1e300;
    int best_off = 0;
    for (int off = 0; off < k_r; ++off) {
        double e = 0.0;
        for (int i = d.n_r - 1 - off; i >= 1; i -= k_r) e += detail::ring_line_energy(d, u, i);
        if (e < best) {
            best = e;
            best_off = off;
        }
    }
    grid.ring_offset = best_off;
    double ring_energy = best;
    for (int i = d.n_r - 1 - best_off; i >= 1; i -= k_r) grid.rings.push_back(i);
    std::sort(grid.rings.begin(), grid.rings.end());
    // drop inner rings until the center cell has radius ~ delta
    while (grid.rings.size() > 1 && d.radial_frac[grid.rings.front()] * R < 0.75 * delta)
        grid.rings.erase(grid.rings.begin());
    grid.outer_ring = grid.rings.back();

    // angular offset over the radial net
    best = 1e300;
    int best_th = 0;
    for (int off = 0; off < k_th; ++off) {
        double e = 0.0;
        for (int j = off; j < d.n_theta; j += k_th)
            e += detail::radial_line_energy(d, u, j, grid.rings.front(), grid.outer_ring);
        if (e < best) {
            best = e;
            best_th = off;
        }
    }
    grid.theta_offset = best_th;
    grid.grid_energy = ring_energy + best;

    // --- assemble supercells ---
    auto add_ring_nodes = [&](SuperCell& sc, int i, int j0, int len, bool as_boundary) {
        for (int j = j0; j <= j0 + len; ++j) {
            int node = d.node_index(i, j);
            auto& dst = as_boundary ? sc.boundary_nodes : sc.interior_nodes;
            dst.push_back(node);
        }
    };
    (void)add_ring_nodes;

    // center cell: everything up to the innermost chosen ring
    {
        SuperCell sc;
        int i1 = grid.rings.front();
        for (int j = 0; j < d.n_theta; ++j) sc.tris.push_back(j);  // center fan
        for (int i = 1; i < i1; ++i)
            for (int j = 0; j < d.n_theta; ++j) {
                sc.tris.push_back(detail::quad_t1(d, i, j));
                sc.tris.push_back(detail::quad_t2(d, i, j));
            }
        sc.interior_nodes.push_back(0);
        for (int i = 1; i < i1; ++i)
            for (int j = 0; j < d.n_theta; ++j) sc.interior_nodes.push_back(d.node_index(i, j));
        for (int j = 0; j < d.n_theta; ++j) {
            sc.boundary_nodes.push_back(d.node_index(i1, j));
            sc.boundary_loop.push_back(d.node_index(i1, j));
        }
        grid.cells.push_back(std::move(sc));
    }

    // bands between consecutive rings, angular groups sized to keep arcs ~ delta
    for (size_t b = 0; b + 1 < grid.rings.size(); ++b) {
        int ia = grid.rings[b], ib = grid.rings[b + 1];
        double r_out = d.radial_frac[ib] * R;
        int mult = std::max(1, static_cast<int>(std::lround(delta / (r_out * 2.0 * kPi / d.n_theta) /
                                                            k_th)));
        int len = k_th * mult;
        for (int j0 = grid.theta_offset; j0 < grid.theta_offset + d.n_theta;) {
            int len_here = len;
            int remaining = grid.theta_offset + d.n_theta - j0;
            if (remaining < 2 * len) len_here = remaining;  // absorb the tail
            SuperCell sc;
            for (int i = ia; i < ib; ++i)
                for (int j = j0; j < j0 + len_here; ++j) {
                    sc.tris.push_back(detail::quad_t1(d, i, j));
                    sc.tris.push_back(detail::quad_t2(d, i, j));
                }
            for (int i = ia; i <= ib; ++i)
                for (int j = j0; j <= j0 + len_here; ++j) {
                    int node = d.node_index(i, j);
                    bool bdry = (i == ia || i == ib || j == j0 || j == j0 + len_here);
                    (bdry ? sc.boundary_nodes : sc.interior_nodes).push_back(node);
                }
            // counterclockwise boundary loop
            for (int j = j0; j < j0 + len_here; ++j) sc.boundary_loop.push_back(d.node_index(ia, j));
            for (int i = ia; i < ib; ++i) sc.boundary_loop.push_back(d.node_index(i, j0 + len_here));
            for (int j = j0 + len_here; j > j0; --j) sc.boundary_loop.push_back(d.node_index(ib, j));
            for (int i = ib; i > ia; --i) sc.boundary_loop.push_back(d.node_index(i, j0));
            grid.cells.push_back(std::move(sc));
            j0 += len_here;
        }
    }
    return grid;
}

struct ProjectReport {
    double l2_sq = 0.0;           // |U - u|^2 over the disk
    double l2_bdry_sq = 0.0;      // |U - u|^2 over the boundary
    double sup_modulus_dev = 0.0; // sup | |w|^2 - 1 | over the grid region
    double min_boundary_modulus = 1e300;
    int degree_violations = 0;
    int cell_count = 0;
    double fitted_beta_tilde = 0.0;
    EnergyBreakdown energy_u, energy_U;
    PolarGrid grid;
};

namespace detail {

// Minimize the GL energy over the listed triangles with clamped boundary
// data; Barzilai-Borwein descent with an Armijo safeguard (the subproblems
// are small and strongly smoothed by the penalty).
inline void minimize_supercell(const Domain& d, VectorField2D& w, const SuperCell& sc,
                               int max_iters = 300) {
    if (sc.interior_nodes.empty()) return;
    const double inv_eta2 = 1.0 / (w.eta * w.eta);
    auto cell_energy = [&]() {
        double acc = 0.0;
        for (int c : sc.tris) acc += d.cell_area[c] * gl_cell_density(d, w, c);
        return acc;
    };
    auto gradient = [&](std::vector<Vec2>& g) {
        g.assign(sc.interior_nodes.size(), Vec2{0, 0});
        std::vector<int> slot(d.nodes.size(), -1);
        for (size_t k = 0; k < sc.interior_nodes.size(); ++k) slot[sc.interior_nodes[k]] = k;
        for (int c : sc.tris) {
            const Tri& T = d.cells[c];
            Vec2 g1 = p1_gradient_component(d, c, w.values[T.v[0]].x, w.values[T.v[1]].x,
                                            w.values[T.v[2]].x);
            Vec2 g2 = p1_gradient_component(d, c, w.values[T.v[0]].y, w.values[T.v[1]].y,
                                            w.values[T.v[2]].y);
            for (int k = 0; k < 3; ++k) {
                int s = slot[T.v[k]];
                if (s < 0) continue;
                double wgt = 2.0 * d.cell_area[c];
                g[s].x += wgt * dot(g1, d.cell_grad[c][k]);
                g[s].y += wgt * dot(g2, d.cell_grad[c][k]);
                double m2 = norm2(w.values[T.v[k]]);
                g[s] -= (d.cell_area[c] / 3.0 * 4.0 * inv_eta2 * (1.0 - m2)) * w.values[T.v[k]];
            }
        }
    };
    // static slot vector rebuilt per call keeps this simple; cells are small
    double f = cell_energy();
    std::vector<Vec2> g, gprev, sdir;
    gradient(g);
    double step = 0.25 * w.eta * w.eta;
    std::vector<Vec2> xprev(sc.interior_nodes.size());
    for (int it = 0; it < max_iters; ++it) {
        double gn2 = 0.0;
        for (auto& v : g) gn2 += norm2(v);
        if (gn2 < 1e-20 * (1.0 + f * f)) break;
        for (size_t k = 0; k < sc.interior_nodes.size(); ++k)
            xprev[k] = w.values[sc.interior_nodes[k]];
        double fnew = f;
        double st = step;
        for (int bt = 0; bt < 40; ++bt) {
            for (size_t k = 0; k < sc.interior_nodes.size(); ++k)
                w.values[sc.interior_nodes[k]] = xprev[k] - st * g[k];
            fnew = cell_energy();
            if (fnew <= f - 1e-4 * st * gn2) break;
            st *= 0.5;
        }
        if (fnew >= f) {
            for (size_t k = 0; k < sc.interior_nodes.size(); ++k)
                w.values[sc.interior_nodes[k]] = xprev[k];
            break;
        }
        f = fnew;
        gprev = g;
        gradient(g);
        double sy = 0.0, yy = 0.0;
        for (size_t k = 0; k < sc.interior_nodes.size(); ++k) {
            Vec2 s = w.values[sc.interior_nodes[k]] - xprev[k];
            Vec2 y = g[k] - gprev[k];
            sy += dot(s, y);
            yy += dot(y, y);
        }
        if (sy > 0.0 && yy > 0.0) step = sy / yy;
    }
    (void)sdir;
}

// P1 interpolation on the polar mesh at a point given in polar form.
inline Vec2 interp_field(const Domain& d, const std::vector<Vec2>& vals, Vec2 x) {
    Vec2 rel = x - d.shape.center;
    double r = norm(rel) / d.shape.radius;
    double th = std::atan2(rel.y, rel.x);
    if (th < 0.0) th += 2.0 * kPi;
    r = std::min(r, 1.0 - 1e-14);
    auto it = std::upper_bound(d.radial_frac.begin(), d.radial_frac.end(), r);
    int i = std::max(0, static_cast<int>(it - d.radial_frac.begin()) - 1);
    i = std::min(i, d.n_r - 1);
    double dth = 2.0 * kPi / d.n_theta;
    int j = std::min(d.n_theta - 1, static_cast<int>(th / dth));
    // barycentric evaluation inside the two candidate triangles
    auto eval_tri = [&](int a, int b, int c, Vec2& out) {
        Vec2 pa = d.nodes[a], pb = d.nodes[b], pc = d.nodes[c];
        double A2 = cross(pb - pa, pc - pa);
        double la = cross(pb - x, pc - x) / A2;
        double lb = cross(pc - x, pa - x) / A2;
        double lc = 1.0 - la - lb;
        if (la < -1e-9 || lb < -1e-9 || lc < -1e-9) return false;
        out = la * vals[a] + lb * vals[b] + lc * vals[c];
        return true;
    };
    Vec2 out;
    if (i == 0) {
        if (eval_tri(0, d.node_index(1, j), d.node_index(1, j + 1), out)) return out;
    } else {
        int p00 = d.node_index(i, j), p10 = d.node_index(i + 1, j);
        int p11 = d.node_index(i + 1, j + 1), p01 = d.node_index(i, j + 1);
        if (eval_tri(p00, p10, p11, out)) return out;
        if (eval_tri(p00, p11, p01, out)) return out;
    }
    // fall back to the nearest node (clamped corner cases)
    int nearest = d.node_index(std::max(1, i), j);
    return vals[nearest];
}

}  // namespace detail

// Unit-length approximation of u: cell-wise GL minimization with Dirichlet
// data u on the grid lines, normalization of the minimizer, and the radial
// rescaling that stretches the grid region back over the full disk. Output
// nodal values are exactly unit length.
inline std::pair<VectorField2D, ProjectReport> project_to_s1(const VectorField2D& u, double beta) {
    u.check();
    const Domain& d = *u.domain;
    ProjectReport rep;
    rep.grid = build_polar_grid(u, beta, u.eta);
    rep.cell_count = static_cast<int>(rep.grid.cells.size());
    rep.energy_u = energy(u);

    VectorField2D w = u;
    for (const SuperCell& sc : rep.grid.cells) detail::minimize_supercell(d, w, sc);

    // modulus control and per-cell boundary degree
    double supdev = 0.0;
    for (const SuperCell& sc : rep.grid.cells) {
        for (int n : sc.interior_nodes)
            supdev = std::max(supdev, std::abs(norm2(w.values[n]) - 1.0));
        for (int n : sc.boundary_nodes) {
            supdev = std::max(supdev, std::abs(norm2(w.values[n]) - 1.0));
            rep.min_boundary_modulus = std::min(rep.min_boundary_modulus, norm(w.values[n]));
        }
    }
    rep.sup_modulus_dev = supdev;
    require(rep.min_boundary_modulus >= 0.5, "vortex-in-cell",
            "|w| < 1/2 on a cell boundary: unit approximation invalid at this resolution");
    for (const SuperCell& sc : rep.grid.cells) {
        double windsum = 0.0;
        int m = static_cast<int>(sc.boundary_loop.size());
        for (int k = 0; k < m; ++k) {
            const Vec2& a = w.values[sc.boundary_loop[k]];
            const Vec2& b = w.values[sc.boundary_loop[(k + 1) % m]];
            windsum += wrap_angle(std::atan2(b.y, b.x) - std::atan2(a.y, a.x));
        }
        if (std::abs(windsum) > kPi) ++rep.degree_violations;
    }
    require(rep.degree_violations == 0, "vortex-in-cell",
            "nonzero boundary degree on a grid cell: unit approximation invalid");

    // normalize inside the grid region
    std::vector<Vec2> what(w.values.size());
    for (size_t i = 0; i < w.values.size(); ++i) {
        double m = norm(w.values[i]);
        what[i] = m > 0.0 ? w.values[i] / m : Vec2{1.0, 0.0};
    }

    // radial rescaling int(R) -> disk, then exact renormalization
    double lambda = d.radial_frac[rep.grid.outer_ring];
    VectorField2D U = u;
    for (size_t i = 0; i < d.nodes.size(); ++i) {
        Vec2 xs = d.shape.center + lambda * (d.nodes[i] - d.shape.center);
        Vec2 v = detail::interp_field(d, what, xs);
        double m = norm(v);
        U.values[i] = m > 0.0 ? v / m : Vec2{1.0, 0.0};
    }

    rep.energy_U = energy(U);
    double l2 = 0.0;
    for (size_t i = 0; i < d.nodes.size(); ++i) l2 += d.node_mass[i] * norm2(U.values[i] - u.values[i]);
    rep.l2_sq = l2;
    double l2b = 0.0;
    for (int j = 0; j < d.num_boundary(); ++j) {
        int n = d.boundary_node[j];
        l2b += d.boundary_w[j] * norm2(U.values[n] - u.values[n]);
    }
    rep.l2_bdry_sq = l2b;
    rep.fitted_beta_tilde =
        supdev > 0.0 && u.eta < 1.0 ? std::log(supdev) / std::log(u.eta) : 0.0;
    return {std::move(U), std::move(rep)};
}

}  // namespace bvlab
