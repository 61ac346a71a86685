#pragma once

#include <algorithm>
#include <memory>
#include <utility>

#include "bvlab/core.hpp"

namespace bvlab {

// Star-shaped boundary curve given by an analytic radial function rho(t)
// about `center`, t in [0, 2pi). Derivatives are analytic so curvature and
// frames are exact at any parameter (no finite differences).
struct BoundaryShape {
    enum class Kind { Disk, Fourier, Ellipse };

    Kind kind = Kind::Disk;
    double radius = 1.0;                                 // disk / fourier base radius
    std::vector<std::pair<double, int>> coeffs;          // fourier: (amplitude, mode)
    double a = 1.0, b = 1.0;                             // ellipse semi-axes
    Vec2 center{0.0, 0.0};

    double rho(double t) const {
        switch (kind) {
            case Kind::Disk: return radius;
            case Kind::Fourier: {
                double r = 1.0;
                for (auto& [amp, m] : coeffs) r += amp * std::cos(m * t);
                return radius * r;
            }
            case Kind::Ellipse: {
                double c = std::cos(t), s = std::sin(t);
                return a * b / std::sqrt(b * b * c * c + a * a * s * s);
            }
        }
        return radius;
    }

    double drho(double t) const {
        switch (kind) {
            case Kind::Disk: return 0.0;
            case Kind::Fourier: {
                double r = 0.0;
                for (auto& [amp, m] : coeffs) r -= amp * m * std::sin(m * t);
                return radius * r;
            }
            case Kind::Ellipse: {
                double D = b * b * std::cos(t) * std::cos(t) + a * a * std::sin(t) * std::sin(t);
                double Dp = (a * a - b * b) * std::sin(2.0 * t);
                return -0.5 * a * b * Dp / (D * std::sqrt(D));
            }
        }
        return 0.0;
    }

    double ddrho(double t) const {
        switch (kind) {
            case Kind::Disk: return 0.0;
            case Kind::Fourier: {
                double r = 0.0;
                for (auto& [amp, m] : coeffs) r -= amp * m * m * std::cos(m * t);
                return radius * r;
            }
            case Kind::Ellipse: {
                double D = b * b * std::cos(t) * std::cos(t) + a * a * std::sin(t) * std::sin(t);
                double Dp = (a * a - b * b) * std::sin(2.0 * t);
                double Dpp = 2.0 * (a * a - b * b) * std::cos(2.0 * t);
                return a * b * (0.75 * Dp * Dp / (D * D * std::sqrt(D)) - 0.5 * Dpp / (D * std::sqrt(D)));
            }
        }
        return 0.0;
    }

    Vec2 point(double t) const {
        double r = rho(t);
        return center + Vec2{r * std::cos(t), r * std::sin(t)};
    }

    Vec2 dpoint(double t) const {
        double r = rho(t), rp = drho(t);
        Vec2 e{std::cos(t), std::sin(t)};
        return rp * e + r * perp(e);
    }

    double speed(double t) const {
        double r = rho(t), rp = drho(t);
        return std::sqrt(r * r + rp * rp);
    }

    // Plane-curve curvature of a polar graph: (rho^2 + 2 rho'^2 - rho rho'') / |gamma'|^3.
    double curvature(double t) const {
        double r = rho(t), rp = drho(t), rpp = ddrho(t);
        double num = r * r + 2.0 * rp * rp - r * rpp;
        double den = std::pow(r * r + rp * rp, 1.5);
        return num / den;
    }

    // Unit tangent (counterclockwise) and outward normal; tau = perp(nu) holds
    // exactly because nu is derived from tau.
    Vec2 tangent(double t) const {
        Vec2 d = dpoint(t);
        return d / norm(d);
    }
    Vec2 normal(double t) const {
        Vec2 tau = tangent(t);
        return {tau.y, -tau.x};
    }
};

struct Tri {
    int v[3];
};

// Immutable polar-structured mesh of a star-shaped C^{1,1} domain.
// Boundary cells carry the circular-segment area correction so that cell
// areas sum to the exact domain area.
class Domain {
public:
    BoundaryShape shape;
    int n_r = 0;
    int n_theta = 0;
    double grading = 1.0;  // radial fractions s_i = 1 - (1 - i/n_r)^grading

    std::vector<double> radial_frac;  // graded radial fractions, size n_r + 1
    std::vector<Vec2> nodes;
    std::vector<Tri> cells;
    std::vector<double> cell_area;                 // includes boundary-segment correction
    std::vector<std::array<Vec2, 3>> cell_grad;    // P1 basis gradients per cell
    std::vector<double> node_mass;                 // lumped quadrature mass

    // Boundary ring, ordered by increasing arc length, starting at t = 0.
    std::vector<int> boundary_node;     // node index per boundary position j
    std::vector<double> boundary_s;     // arc coordinate of node j
    std::vector<double> boundary_kappa;
    std::vector<Vec2> boundary_nu, boundary_tau;
    std::vector<double> boundary_ds;    // arc length of edge (j, j+1 mod nb)
    std::vector<double> boundary_w;     // trapezoid weight per node
    std::vector<int> boundary_edge_cell;  // owning cell of boundary edge j

    double perimeter = 0.0;
    double area = 0.0;
    double diameter = 0.0;

    int node_index(int i, int j) const {
        j = ((j % n_theta) + n_theta) % n_theta;
        return i == 0 ? 0 : 1 + (i - 1) * n_theta + j;
    }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_boundary() const { return static_cast<int>(boundary_node.size()); }
    bool is_boundary(int node) const { return node >= 1 + (n_r - 1) * n_theta; }

    // Tubular-neighborhood radius estimate (valid for the convex-ish shapes
    // supported here); reported, not proven.
    double reach_estimate() const {
        double kmax = 0.0;
        for (double k : boundary_kappa) kmax = std::max(kmax, std::abs(k));
        return kmax > 0.0 ? 1.0 / kmax : 0.0;
    }

    double gauss_bonnet() const {
        // Uniform-in-parameter trapezoid of kappa |gamma'|; spectrally accurate
        // for the analytic shapes used here.
        double s = 0.0;
        double dt = 2.0 * kPi / n_theta;
        for (int j = 0; j < n_theta; ++j) {
            double t = dt * j;
            s += shape.curvature(t) * shape.speed(t) * dt;
        }
        return s;
    }

    // Arc length -> parameter inversion (exact for the disk).
    double param_of_arc(double s) const;
    std::pair<Vec2, Vec2> frame_at_arc(double s) const;  // (nu, tau)

private:
    friend Domain build_domain(const BoundaryShape& shape, int n_r, int n_theta, double grading);
    std::vector<double> arc_table_t_, arc_table_s_;  // fine cumulative samples
};

namespace detail {

// 5-point Gauss-Legendre on [a, b].
template <typename F>
double gauss5(F&& f, double a, double b) {
    static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double ws[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) acc += ws[k] * f(mid + half * xs[k]);
    return acc * half;
}

}  // namespace detail

inline double Domain::param_of_arc(double s) const {
    require(s >= 0.0 && s < perimeter + 1e-12, "invalid-argument",
            "arc coordinate out of [0, perimeter)");
    if (shape.kind == BoundaryShape::Kind::Disk) return s / shape.radius;
    // Locate bracketing entry in the fine table, then a few Newton steps.
    auto it = std::upper_bound(arc_table_s_.begin(), arc_table_s_.end(), s);
    size_t hi = std::min<size_t>(arc_table_s_.size() - 1, it - arc_table_s_.begin());
    size_t lo = hi == 0 ? 0 : hi - 1;
    double t = arc_table_t_[lo];
    if (arc_table_s_[hi] > arc_table_s_[lo])
        t += (s - arc_table_s_[lo]) / (arc_table_s_[hi] - arc_table_s_[lo]) *
             (arc_table_t_[hi] - arc_table_t_[lo]);
    for (int iter = 0; iter < 8; ++iter) {
        // residual s(t) - s via local integration from the table anchor
        double s_t = arc_table_s_[lo] + detail::gauss5([&](double q) { return shape.speed(q); },
                                                       arc_table_t_[lo], t);
        t -= (s_t - s) / shape.speed(t);
    }
    return t;
}

inline std::pair<Vec2, Vec2> Domain::frame_at_arc(double s) const {
    double t = param_of_arc(s);
    return {shape.normal(t), shape.tangent(t)};
}

inline Domain build_domain(const BoundaryShape& shape, int n_r, int n_theta, double grading = 1.0) {
    require(n_r >= 4 && n_theta >= 8, "invalid-argument", "mesh resolution too coarse");
    // Reject self-intersecting / collapsed parametrizations.
    if (shape.kind == BoundaryShape::Kind::Fourier) {
        double rmin = 1e300;
        for (int j = 0; j < 4096; ++j) rmin = std::min(rmin, shape.rho(2.0 * kPi * j / 4096.0));
        require(rmin > 1e-9 * shape.radius, "geometry",
                "fourier perturbation collapses the radial map (min radius <= 0)");
    }
    require(shape.a > 0 && shape.b > 0 && shape.radius > 0, "invalid-argument",
            "non-positive size parameter");

    Domain d;
    d.shape = shape;
    d.n_r = n_r;
    d.n_theta = n_theta;
    d.grading = grading;

    // Radial fractions, graded toward the boundary for grading > 1.
    std::vector<double> frac(n_r + 1);
    for (int i = 0; i <= n_r; ++i)
        frac[i] = 1.0 - std::pow(1.0 - static_cast<double>(i) / n_r, grading);
    frac[n_r] = 1.0;
    d.radial_frac = frac;

    d.nodes.resize(1 + n_r * n_theta);
    d.nodes[0] = shape.center;
    double dt = 2.0 * kPi / n_theta;
    for (int i = 1; i <= n_r; ++i)
        for (int j = 0; j < n_theta; ++j) {
            double t = dt * j;
            Vec2 bp = shape.point(t) - shape.center;
            d.nodes[d.node_index(i, j)] = shape.center + frac[i] * bp;
        }

    // Cells: center fan plus split quads, all counterclockwise.
    auto add_cell = [&](int a, int b, int c) {
        d.cells.push_back({a, b, c});
    };
    for (int j = 0; j < n_theta; ++j) add_cell(0, d.node_index(1, j), d.node_index(1, j + 1));
    d.boundary_edge_cell.assign(n_theta, -1);
    for (int i = 1; i < n_r; ++i)
        for (int j = 0; j < n_theta; ++j) {
            int p00 = d.node_index(i, j), p10 = d.node_index(i + 1, j);
            int p11 = d.node_index(i + 1, j + 1), p01 = d.node_index(i, j + 1);
            add_cell(p00, p10, p11);
            if (i == n_r - 1) d.boundary_edge_cell[j] = static_cast<int>(d.cells.size()) - 1;
            add_cell(p00, p11, p01);
        }

    // Straight areas and P1 gradients.
    size_t nc = d.cells.size();
    d.cell_area.resize(nc);
    d.cell_grad.resize(nc);
    for (size_t c = 0; c < nc; ++c) {
        const Tri& T = d.cells[c];
        Vec2 pa = d.nodes[T.v[0]], pb = d.nodes[T.v[1]], pc = d.nodes[T.v[2]];
        double A2 = cross(pb - pa, pc - pa);
        require(A2 > 0.0, "geometry", "degenerate or inverted mesh cell");
        d.cell_area[c] = 0.5 * A2;
        d.cell_grad[c][0] = perp(pc - pb) / A2;
        d.cell_grad[c][1] = perp(pa - pc) / A2;
        d.cell_grad[c][2] = perp(pb - pa) / A2;
    }

    // Boundary ring data.
    d.boundary_node.resize(n_theta);
    d.boundary_s.resize(n_theta);
    d.boundary_kappa.resize(n_theta);
    d.boundary_nu.resize(n_theta);
    d.boundary_tau.resize(n_theta);
    d.boundary_ds.resize(n_theta);
    d.boundary_w.resize(n_theta);

    std::vector<double> seg(n_theta);
    double s_acc = 0.0;
    for (int j = 0; j < n_theta; ++j) {
        double t = dt * j;
        d.boundary_node[j] = d.node_index(n_r, j);
        d.boundary_s[j] = s_acc;
        d.boundary_kappa[j] = shape.curvature(t);
        d.boundary_nu[j] = shape.normal(t);
        d.boundary_tau[j] = shape.tangent(t);
        double ds = detail::gauss5([&](double q) { return shape.speed(q); }, t, t + dt);
        d.boundary_ds[j] = ds;
        s_acc += ds;
        // area between the curved edge and its chord
        double arc_part = 0.5 * detail::gauss5(
                              [&](double q) {
                                  return cross(shape.point(q) - shape.center, shape.dpoint(q));
                              },
                              t, t + dt);
        Vec2 g0 = shape.point(t) - shape.center, g1 = shape.point(t + dt) - shape.center;
        seg[j] = arc_part - 0.5 * cross(g0, g1);
    }
    d.perimeter = s_acc;
    for (int j = 0; j < n_theta; ++j) {
        int jm = (j + n_theta - 1) % n_theta;
        d.boundary_w[j] = 0.5 * (d.boundary_ds[j] + d.boundary_ds[jm]);
    }

    // Lumped masses from the straight areas, then fold the segment corrections
    // into the owning boundary cells and the two boundary vertices of each edge.
    d.node_mass.assign(d.nodes.size(), 0.0);
    for (size_t c = 0; c < nc; ++c)
        for (int k = 0; k < 3; ++k) d.node_mass[d.cells[c].v[k]] += d.cell_area[c] / 3.0;
    for (int j = 0; j < n_theta; ++j) {
        d.cell_area[d.boundary_edge_cell[j]] += seg[j];
        d.node_mass[d.node_index(n_r, j)] += 0.5 * seg[j];
        d.node_mass[d.node_index(n_r, j + 1)] += 0.5 * seg[j];
    }

    d.area = 0.0;
    for (double a : d.cell_area) d.area += a;

    // Diameter from boundary nodes (adequate for star-shaped domains).
    double diam = 0.0;
    int stride = std::max(1, n_theta / 512);
    for (int i = 0; i < n_theta; i += stride)
        for (int j = i; j < n_theta; j += stride)
            diam = std::max(diam, norm(d.nodes[d.boundary_node[i]] - d.nodes[d.boundary_node[j]]));
    d.diameter = diam;

    // Fine cumulative arc-length table for param_of_arc.
    int M = 16 * n_theta;
    d.arc_table_t_.resize(M + 1);
    d.arc_table_s_.resize(M + 1);
    double acc = 0.0, dtf = 2.0 * kPi / M;
    for (int k = 0; k <= M; ++k) {
        d.arc_table_t_[k] = dtf * k;
        d.arc_table_s_[k] = acc;
        if (k < M) acc += detail::gauss5([&](double q) { return shape.speed(q); }, dtf * k, dtf * (k + 1));
    }
    return d;
}

inline Domain make_disk(double radius, int n_r, int n_theta, double grading = 1.0,
                        Vec2 center = {0.0, 0.0}) {
    require(radius > 0.0, "invalid-argument", "disk radius must be positive");
    BoundaryShape s;
    s.kind = BoundaryShape::Kind::Disk;
    s.radius = radius;
    s.center = center;
    return build_domain(s, n_r, n_theta, grading);
}

inline Domain make_perturbed_disk(const std::vector<std::pair<double, int>>& coeffs, int n_r,
                                  int n_theta, double grading = 1.0, double radius = 1.0) {
    BoundaryShape s;
    s.kind = BoundaryShape::Kind::Fourier;
    s.radius = radius;
    s.coeffs = coeffs;
    return build_domain(s, n_r, n_theta, grading);
}

inline Domain make_ellipse(double a, double b, int n_r, int n_theta, double grading = 1.0) {
    BoundaryShape s;
    s.kind = BoundaryShape::Kind::Ellipse;
    s.a = a;
    s.b = b;
    return build_domain(s, n_r, n_theta, grading);
}

inline std::pair<Vec2, Vec2> boundary_frame(const Domain& d, double s) {
    return d.frame_at_arc(s);
}

}  // namespace bvlab
