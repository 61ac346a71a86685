#pragma once

#include <functional>
#include <limits>

#include "bvlab/geometry.hpp"

namespace bvlab {

// Nodal R^2-valued map on a Domain mesh with its penalty/anchoring parameters.
struct VectorField2D {
    const Domain* domain = nullptr;
    std::vector<Vec2> values;
    double eps = 0.1;
    double eta = 0.01;

    void check() const {
        require(domain != nullptr, "invalid-argument", "field has no domain");
        require(values.size() == domain->nodes.size(), "invalid-argument",
                "field size does not match mesh");
        require(eps > 0.0 && eta > 0.0, "invalid-argument", "eps and eta must be positive");
        for (const Vec2& v : values)
            require(std::isfinite(v.x) && std::isfinite(v.y), "invalid-argument",
                    "non-finite nodal value");
    }
};

struct EnergyBreakdown {
    double dirichlet = 0.0;
    double penalty = 0.0;
    double anchoring = 0.0;
    double total = 0.0;

    static EnergyBreakdown make(double d, double p, double a) {
        EnergyBreakdown e;
        e.dirichlet = d;
        e.penalty = p;
        e.anchoring = a;
        e.total = d + p + a;
        return e;
    }
};

namespace detail {

inline Vec2 p1_gradient_component(const Domain& d, size_t c, double fa, double fb, double fc) {
    const auto& g = d.cell_grad[c];
    return fa * g[0] + fb * g[1] + fc * g[2];
}

}  // namespace detail

// Cell-wise quadrature of the three energy terms restricted to a cell set.
// Dirichlet: exact for P1 fields; penalty: vertex rule with lumped segment
// corrections; anchoring: trapezoid on the curved arc (the 1/eps weight makes
// chord-length quadrature too lossy). Attribution is per cell / per boundary
// edge so that disjoint masks add exactly.
inline EnergyBreakdown local_energy(const VectorField2D& u, const std::vector<char>& cell_mask) {
    const Domain& d = *u.domain;
    double dir = 0.0, pen = 0.0, anc = 0.0;
    size_t nc = d.cells.size();
    for (size_t c = 0; c < nc; ++c) {
        if (!cell_mask.empty() && !cell_mask[c]) continue;
        const Tri& T = d.cells[c];
        const Vec2 &ua = u.values[T.v[0]], &ub = u.values[T.v[1]], &uc = u.values[T.v[2]];
        Vec2 g1 = detail::p1_gradient_component(d, c, ua.x, ub.x, uc.x);
        Vec2 g2 = detail::p1_gradient_component(d, c, ua.y, ub.y, uc.y);
        dir += d.cell_area[c] * (norm2(g1) + norm2(g2));
        double p = 0.0;
        for (int k = 0; k < 3; ++k) {
            double m2 = norm2(u.values[T.v[k]]);
            p += (1.0 - m2) * (1.0 - m2);
        }
        pen += d.cell_area[c] / 3.0 * p;
    }
    int nb = d.num_boundary();
    for (int j = 0; j < nb; ++j) {
        int cell = d.boundary_edge_cell[j];
        if (!cell_mask.empty() && !cell_mask[cell]) continue;
        int a = d.boundary_node[j], b = d.boundary_node[(j + 1) % nb];
        double fa = dot(u.values[a], d.boundary_nu[j]);
        double fb = dot(u.values[b], d.boundary_nu[(j + 1) % nb]);
        anc += 0.5 * d.boundary_ds[j] * (fa * fa + fb * fb);
    }
    return EnergyBreakdown::make(dir, pen / (u.eta * u.eta), anc / (2.0 * kPi * u.eps));
}

inline EnergyBreakdown energy(const VectorField2D& u) {
    u.check();
    return local_energy(u, {});
}

// Analytic gradient of the discrete energy with respect to nodal values.
inline std::vector<Vec2> energy_gradient(const VectorField2D& u) {
    const Domain& d = *u.domain;
    std::vector<Vec2> g(d.nodes.size(), Vec2{0.0, 0.0});
    size_t nc = d.cells.size();
    for (size_t c = 0; c < nc; ++c) {
        const Tri& T = d.cells[c];
        const Vec2 &ua = u.values[T.v[0]], &ub = u.values[T.v[1]], &uc = u.values[T.v[2]];
        Vec2 g1 = detail::p1_gradient_component(d, c, ua.x, ub.x, uc.x);
        Vec2 g2 = detail::p1_gradient_component(d, c, ua.y, ub.y, uc.y);
        for (int k = 0; k < 3; ++k) {
            double w = 2.0 * d.cell_area[c];
            g[T.v[k]].x += w * dot(g1, d.cell_grad[c][k]);
            g[T.v[k]].y += w * dot(g2, d.cell_grad[c][k]);
        }
    }
    double inv_eta2 = 1.0 / (u.eta * u.eta);
    for (size_t i = 0; i < g.size(); ++i) {
        double m2 = norm2(u.values[i]);
        g[i] -= (4.0 * d.node_mass[i] * inv_eta2 * (1.0 - m2)) * u.values[i];
    }
    int nb = d.num_boundary();
    double wanc = 1.0 / (2.0 * kPi * u.eps);
    for (int j = 0; j < nb; ++j) {
        int n = d.boundary_node[j];
        double f = dot(u.values[n], d.boundary_nu[j]);
        g[n] += (2.0 * wanc * d.boundary_w[j] * f) * d.boundary_nu[j];
    }
    return g;
}

// Energy of a unit-length field written through a scalar phase:
// Dirichlet of phi plus sin^2(phi - g) anchoring, g the tangent lifting values
// at boundary nodes. Matches energy(e^{i phi}) up to P1 interpolation error
// (the anchoring parts agree identically at the nodes).
inline double ks_energy(const std::vector<double>& phi, const Domain& d,
                        const std::vector<double>& tangent_lift, double eps) {
    require(phi.size() == d.nodes.size(), "invalid-argument", "phase size mismatch");
    require(tangent_lift.size() == static_cast<size_t>(d.num_boundary()), "invalid-argument",
            "tangent lifting size mismatch");
    double dir = 0.0;
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        Vec2 gp = detail::p1_gradient_component(d, c, phi[T.v[0]], phi[T.v[1]], phi[T.v[2]]);
        dir += d.cell_area[c] * norm2(gp);
    }
    double anc = 0.0;
    int nb = d.num_boundary();
    for (int j = 0; j < nb; ++j) {
        double sj = std::sin(phi[d.boundary_node[j]] - tangent_lift[j]);
        anc += d.boundary_w[j] * sj * sj;
    }
    return dir + anc / (2.0 * kPi * eps);
}

inline VectorField2D exp_field(const Domain& d, const std::vector<double>& phi, double eps,
                               double eta) {
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.resize(d.nodes.size());
    for (size_t i = 0; i < phi.size(); ++i) u.values[i] = {std::cos(phi[i]), std::sin(phi[i])};
    return u;
}

// Mass-weighted L2 norm of u - v and plain L2 of one field.
inline double l2_distance(const VectorField2D& u, const VectorField2D& v) {
    const Domain& d = *u.domain;
    double acc = 0.0;
    for (size_t i = 0; i < u.values.size(); ++i)
        acc += d.node_mass[i] * norm2(u.values[i] - v.values[i]);
    return std::sqrt(acc);
}

inline double h1_seminorm(const VectorField2D& u) {
    double dir = 0.0;
    const Domain& d = *u.domain;
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        Vec2 g1 = detail::p1_gradient_component(d, c, u.values[T.v[0]].x, u.values[T.v[1]].x,
                                                u.values[T.v[2]].x);
        Vec2 g2 = detail::p1_gradient_component(d, c, u.values[T.v[0]].y, u.values[T.v[1]].y,
                                                u.values[T.v[2]].y);
        dir += d.cell_area[c] * (norm2(g1) + norm2(g2));
    }
    return std::sqrt(dir);
}

inline Vec2 mean_value(const VectorField2D& u) {
    const Domain& d = *u.domain;
    Vec2 acc{0.0, 0.0};
    for (size_t i = 0; i < u.values.size(); ++i) acc += d.node_mass[i] * u.values[i];
    return acc / d.area;
}

// L2 distance after removing the means of both fields (the interior Jacobian
// is invariant under adding a fixed vector, so stability estimates may use it).
inline double l2_distance_mean_free(const VectorField2D& u, const VectorField2D& v) {
    Vec2 mu = mean_value(u), mv = mean_value(v);
    const Domain& d = *u.domain;
    double acc = 0.0;
    for (size_t i = 0; i < u.values.size(); ++i)
        acc += d.node_mass[i] * norm2(u.values[i] - v.values[i] - mu + mv);
    return std::sqrt(acc);
}

// Smooth random field for property tests: a handful of low-frequency modes
// with seeded coefficients, optionally clamped to |u| <= 1.
inline VectorField2D random_smooth_field(const Domain& d, Rng& rng, double eps, double eta,
                                         int n_modes = 4, double amplitude = 1.0,
                                         bool clamp_unit = false) {
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.assign(d.nodes.size(), Vec2{0.0, 0.0});
    for (int c = 0; c < 2; ++c) {
        double offs = uniform(rng, -amplitude, amplitude);
        for (size_t i = 0; i < d.nodes.size(); ++i)
            (c == 0 ? u.values[i].x : u.values[i].y) = offs;
        for (int m = 0; m < n_modes; ++m) {
            Vec2 k{uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)};
            double ph = uniform(rng, 0.0, 2.0 * kPi);
            double a = amplitude * uniform(rng, 0.1, 1.0) / n_modes;
            for (size_t i = 0; i < d.nodes.size(); ++i) {
                double v = a * std::cos(dot(k, d.nodes[i]) + ph);
                (c == 0 ? u.values[i].x : u.values[i].y) += v;
            }
        }
    }
    if (clamp_unit) {
        for (Vec2& v : u.values) {
            double n = norm(v);
            if (n > 1.0) v = v / n;
        }
    }
    return u;
}

}  // namespace bvlab
