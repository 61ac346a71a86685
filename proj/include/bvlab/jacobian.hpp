#pragma once

#include <numeric>

#include "bvlab/lifting.hpp"

namespace bvlab {

// Lipschitz test function sampled at mesh nodes. Entries are normalized so
// the P1 interpolant satisfies |grad zeta| <= 1 cell-wise; boundary-vanishing
// entries are exactly zero at boundary nodes.
struct TestFunction {
    std::string name;
    std::vector<double> values;
    bool vanishes_on_boundary = false;
    double grad_sup = 0.0;
    double sup = 0.0;
};

struct TestDictionary {
    std::vector<TestFunction> entries;
};

namespace detail {

inline double cell_grad_sup(const Domain& d, const std::vector<double>& z) {
    double m = 0.0;
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        m = std::max(m, norm(p1_gradient_component(d, c, z[T.v[0]], z[T.v[1]], z[T.v[2]])));
    }
    return m;
}

inline void normalize_entry(const Domain& d, TestFunction& f) {
    double m = cell_grad_sup(d, f.values);
    if (m > 1.0)
        for (double& v : f.values) v /= m;
    f.grad_sup = cell_grad_sup(d, f.values);
    f.sup = 0.0;
    for (double v : f.values) f.sup = std::max(f.sup, std::abs(v));
}

}  // namespace detail

// Default dictionary: affine moments, a scaled quadratic, Lipschitz-1 cone
// bumps on a boundary-arc grid and an interior grid, plus boundary-vanishing
// truncations of the bumps (min with the distance to the boundary).
inline TestDictionary default_dictionary(const Domain& d, int boundary_bumps = 12,
                                         int interior_grid = 3) {
    TestDictionary dict;
    size_t n = d.nodes.size();
    Vec2 c = d.shape.center;

    auto push = [&](TestFunction f) {
        detail::normalize_entry(d, f);
        dict.entries.push_back(std::move(f));
    };

    TestFunction fx{"x1", std::vector<double>(n), false, 0, 0};
    TestFunction fy{"x2", std::vector<double>(n), false, 0, 0};
    TestFunction fq{"r2_half", std::vector<double>(n), false, 0, 0};
    for (size_t i = 0; i < n; ++i) {
        fx.values[i] = d.nodes[i].x - c.x;
        fy.values[i] = d.nodes[i].y - c.y;
        fq.values[i] = norm2(d.nodes[i] - c) / (2.0 * d.diameter);
    }
    push(std::move(fx));
    push(std::move(fy));
    push(std::move(fq));

    // distance to the boundary, approximated from boundary nodes (exact zero there)
    std::vector<double> dist_b(n, 1e300);
    for (size_t i = 0; i < n; ++i)
        for (int j = 0; j < d.num_boundary(); ++j)
            dist_b[i] = std::min(dist_b[i], norm(d.nodes[i] - d.nodes[d.boundary_node[j]]));

    auto cone = [&](Vec2 center, double radius, std::vector<double>& out) {
        out.resize(n);
        for (size_t i = 0; i < n; ++i)
            out[i] = std::max(0.0, radius - norm(d.nodes[i] - center));
    };

    int nb = d.num_boundary();
    double rad_b = 1.2 * d.perimeter / std::max(1, boundary_bumps);
    for (int k = 0; k < boundary_bumps; ++k) {
        int j = (k * nb) / boundary_bumps;
        TestFunction f{"bdry_bump_" + std::to_string(k), {}, false, 0, 0};
        cone(d.nodes[d.boundary_node[j]], rad_b, f.values);
        TestFunction f0{"bdry_bump0_" + std::to_string(k), f.values, true, 0, 0};
        for (size_t i = 0; i < n; ++i) f0.values[i] = std::min(f0.values[i], dist_b[i]);
        push(std::move(f));
        push(std::move(f0));
    }

    double R = 0.5 * d.diameter;
    double rad_i = 0.8 * R / std::max(1, interior_grid);
    for (int ix = 0; ix < interior_grid; ++ix)
        for (int iy = 0; iy < interior_grid; ++iy) {
            Vec2 p = c + Vec2{(-0.6 + 1.2 * ix / std::max(1, interior_grid - 1)) * R,
                              (-0.6 + 1.2 * iy / std::max(1, interior_grid - 1)) * R};
            TestFunction f{"int_bump_" + std::to_string(ix) + "_" + std::to_string(iy),
                           {}, false, 0, 0};
            cone(p, rad_i, f.values);
            TestFunction f0{f.name + "_0", f.values, true, 0, 0};
            for (size_t i = 0; i < n; ++i) f0.values[i] = std::min(f0.values[i], dist_b[i]);
            push(std::move(f));
            push(std::move(f0));
        }
    return dict;
}

// Per-cell interior Jacobian jac(u) = d1 u x d2 u (constant on P1 cells).
inline std::vector<double> interior_jacobian(const VectorField2D& u) {
    const Domain& d = *u.domain;
    std::vector<double> jac(d.cells.size());
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        Vec2 g1 = detail::p1_gradient_component(d, c, u.values[T.v[0]].x, u.values[T.v[1]].x,
                                                u.values[T.v[2]].x);
        Vec2 g2 = detail::p1_gradient_component(d, c, u.values[T.v[0]].y, u.values[T.v[1]].y,
                                                u.values[T.v[2]].y);
        jac[c] = cross(g1, g2);
    }
    return jac;
}

// <J(u), zeta> = -int u x grad u . perp(grad zeta); exact for P1 data on
// straight cells. Constant zeta pairs to zero identically.
inline double pair_global(const VectorField2D& u, const std::vector<double>& zeta) {
    const Domain& d = *u.domain;
    require(zeta.size() == d.nodes.size(), "invalid-argument", "test function size mismatch");
    double acc = 0.0;
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        const Vec2 &ua = u.values[T.v[0]], &ub = u.values[T.v[1]], &uc = u.values[T.v[2]];
        Vec2 g1 = detail::p1_gradient_component(d, c, ua.x, ub.x, uc.x);
        Vec2 g2 = detail::p1_gradient_component(d, c, ua.y, ub.y, uc.y);
        Vec2 gz = detail::p1_gradient_component(d, c, zeta[T.v[0]], zeta[T.v[1]], zeta[T.v[2]]);
        Vec2 gperp = perp(gz);
        Vec2 um = (ua + ub + uc) / 3.0;
        // u x grad u = (u x d1 u, u x d2 u); d_k u = (g1_k, g2_k)
        double c1 = um.x * g2.x - um.y * g1.x;
        double c2 = um.x * g2.y - um.y * g1.y;
        acc -= d.cell_area[c] * (c1 * gperp.x + c2 * gperp.y);
    }
    return acc;
}

// int 2 jac(u) zeta (centroid rule, exact for P1 zeta on straight cells).
inline double pair_interior(const VectorField2D& u, const std::vector<double>& zeta) {
    const Domain& d = *u.domain;
    std::vector<double> jac = interior_jacobian(u);
    double acc = 0.0;
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        double zm = (zeta[T.v[0]] + zeta[T.v[1]] + zeta[T.v[2]]) / 3.0;
        acc += d.cell_area[c] * 2.0 * jac[c] * zm;
    }
    return acc;
}

// Boundary Jacobian pairing, defined as the difference (holds exactly).
inline double pair_boundary(const VectorField2D& u, const std::vector<double>& zeta) {
    return pair_global(u, zeta) - pair_interior(u, zeta);
}

// Line-integral form -int_bdry (u x d_tau u) zeta ds, valid as a cross-check
// for fields smooth up to the boundary.
inline double pair_boundary_line(const VectorField2D& u, const std::vector<double>& zeta) {
    const Domain& d = *u.domain;
    int nb = d.num_boundary();
    double acc = 0.0;
    for (int j = 0; j < nb; ++j) {
        int a = d.boundary_node[j], b = d.boundary_node[(j + 1) % nb];
        Vec2 um = 0.5 * (u.values[a] + u.values[b]);
        Vec2 dtau = (u.values[b] - u.values[a]) / d.boundary_ds[j];
        double zm = 0.5 * (zeta[a] + zeta[b]);
        acc -= d.boundary_ds[j] * cross(um, dtau) * zm;
    }
    return acc;
}

struct JacobianPairing {
    std::vector<std::string> names;
    std::vector<double> global, interior2, boundary;
};

inline JacobianPairing pair_dictionary(const VectorField2D& u, const TestDictionary& dict) {
    JacobianPairing out;
    for (const auto& f : dict.entries) {
        out.names.push_back(f.name);
        double pg = pair_global(u, f.values);
        double pi = pair_interior(u, f.values);
        out.global.push_back(pg);
        out.interior2.push_back(pi);
        out.boundary.push_back(pg - pi);
    }
    return out;
}

// Dictionary lower bound for the (Lip)^* dual seminorm of J(u) - J(v).
inline double dual_norm_diff(const VectorField2D& u, const VectorField2D& v,
                             const TestDictionary& dict) {
    require(!dict.entries.empty(), "invalid-argument", "empty test dictionary");
    double m = 0.0;
    for (const auto& f : dict.entries)
        m = std::max(m, std::abs(pair_global(u, f.values) - pair_global(v, f.values)));
    return m;
}

inline double dual_norm(const std::vector<double>& pairings) {
    require(!pairings.empty(), "invalid-argument", "empty pairing list");
    double m = 0.0;
    for (double p : pairings) m = std::max(m, std::abs(p));
    return m;
}

// Interior-Jacobian stability: |int (jac u - jac v) zeta| <= 1/2 |u-v|_L2
// (|grad u|_L2 + |grad v|_L2) sup|grad zeta| over boundary-vanishing entries,
// plus the sharper mean-free variant of the right-hand side.
struct InteriorStabilityReport {
    double t_plain = 0.0, t_mean_free = 0.0;
    double worst_margin_plain = 1e300;     // min over zeta of (rhs - lhs)
    double worst_margin_mean_free = 1e300;
    std::string worst_zeta;
    bool ok(double slack) const { return worst_margin_mean_free >= -slack; }
};

inline InteriorStabilityReport stability_check_interior(const VectorField2D& u,
                                                        const VectorField2D& v,
                                                        const TestDictionary& dict) {
    InteriorStabilityReport rep;
    double grads = h1_seminorm(u) + h1_seminorm(v);
    rep.t_plain = l2_distance(u, v) * grads;
    rep.t_mean_free = l2_distance_mean_free(u, v) * grads;
    for (const auto& f : dict.entries) {
        if (!f.vanishes_on_boundary) continue;
        double lhs = std::abs(pair_interior(u, f.values) - pair_interior(v, f.values));
        double margin = 0.5 * rep.t_plain * f.grad_sup - 0.5 * lhs;
        double margin_free = 0.5 * rep.t_mean_free * f.grad_sup - 0.5 * lhs;
        if (margin_free < rep.worst_margin_mean_free) {
            rep.worst_margin_mean_free = margin_free;
            rep.worst_zeta = f.name;
        }
        rep.worst_margin_plain = std::min(rep.worst_margin_plain, margin);
    }
    return rep;
}

// Global-Jacobian stability sample: t = |u-v|(|grad u|+|grad v|), lhs the
// dictionary dual norm; the family-level constant in lhs <= t + C sqrt(t)
// is fitted by the caller across samples.
struct GlobalStabilitySample {
    double t = 0.0, lhs = 0.0;
    double c_hat = 0.0;  // max(0, (lhs - t)/sqrt(t)), 0 when t = 0
};

inline GlobalStabilitySample stability_check_global(const VectorField2D& u,
                                                    const VectorField2D& v,
                                                    const TestDictionary& dict) {
    for (const Vec2& w : v.values)
        require(norm(w) <= 1.0 + 1e-12, "precondition", "|v| <= 1 required");
    GlobalStabilitySample s;
    s.t = l2_distance(u, v) * (h1_seminorm(u) + h1_seminorm(v));
    s.lhs = dual_norm_diff(u, v, dict);
    s.c_hat = s.t > 0.0 ? std::max(0.0, (s.lhs - s.t) / std::sqrt(s.t)) : 0.0;
    return s;
}

// --- Boundary vortex detection -------------------------------------------

// Unwraps the boundary phase of u relative to the tangent lifting, finds the
// crossings of odd multiples of pi/2, clusters them within `window` and reads
// multiplicities off the clustered phase drop (jump -pi d per vortex).
inline VortexSet detect_boundary_vortices(const VectorField2D& u, double window = 0.0,
                                          double threshold = 0.2) {
    const Domain& d = *u.domain;
    int nb = d.num_boundary();
    BoundaryLifting g = tangent_lifting(d);
    if (window <= 0.0) window = std::max(6.0 * d.perimeter / nb, 4.0 * kPi * u.eps);

    std::vector<double> r(nb + 1);
    {
        int n0 = d.boundary_node[0];
        require(norm(u.values[n0]) >= 0.5, "unresolved-core",
                "|u| < 1/2 at a boundary node; cores unresolved at this resolution");
        double prev = std::atan2(u.values[n0].y, u.values[n0].x) - g.values[0];
        r[0] = wrap_angle(prev);
        for (int j = 1; j <= nb; ++j) {
            int njd = d.boundary_node[j % nb];
            require(norm(u.values[njd]) >= 0.5, "unresolved-core",
                    "|u| < 1/2 at a boundary node; cores unresolved at this resolution");
            double gj = j < nb ? g.values[j] : g.values[0] + g.closure;
            double cur = std::atan2(u.values[njd].y, u.values[njd].x) - gj;
            r[j] = r[j - 1] + wrap_angle(cur - prev);
            prev = cur;
        }
    }

    struct Crossing {
        double s;
        int dir;  // -1: r decreasing through the level (multiplicity +1)
        int seg;
    };
    std::vector<Crossing> events;
    auto level_index = [](double x) { return std::floor(x / kPi + 0.5); };  // nearest band
    for (int j = 0; j < nb; ++j) {
        double r0 = r[j], r1 = r[j + 1];
        if (r0 == r1) continue;
        // levels (2m+1) pi/2 strictly between r0 and r1
        double lo = std::min(r0, r1), hi = std::max(r0, r1);
        int m_lo = static_cast<int>(std::ceil((lo - kPi / 2.0) / kPi));
        for (int m = m_lo;; ++m) {
            double lev = kPi / 2.0 + m * kPi;
            if (lev >= hi) break;
            if (lev <= lo) continue;
            double frac = (lev - r0) / (r1 - r0);
            double s0 = d.boundary_s[j];
            double s = s0 + frac * d.boundary_ds[j];
            events.push_back({std::fmod(s, d.perimeter), r1 > r0 ? +1 : -1, j});
        }
    }
    (void)level_index;

    require(!events.empty(), "topology",
            "no boundary transitions found; multiplicities cannot sum to 2");

    std::sort(events.begin(), events.end(),
              [](const Crossing& a, const Crossing& b) { return a.s < b.s; });

    // Circular clustering: cut at every gap exceeding `window`.
    int ne = static_cast<int>(events.size());
    std::vector<double> gap(ne);
    int first_break = -1;
    for (int k = 0; k < ne; ++k) {
        double next_s = (k + 1 < ne) ? events[k + 1].s : events[0].s + d.perimeter;
        gap[k] = next_s - events[k].s;
        if (gap[k] > window && first_break < 0) first_break = k;
    }
    std::vector<int> cluster_of(ne, 0);
    int nclusters = 1;
    if (first_break >= 0) {
        int cid = 0;
        for (int off = 1; off <= ne; ++off) {
            int k = (first_break + off) % ne;
            cluster_of[k] = cid;
            if (gap[k] > window && off < ne) ++cid;
        }
        nclusters = cid + 1;
    }

    struct Cluster {
        double s_sum = 0.0, s_ref = -1.0;
        int count = 0, dsum = 0;
        double s_min = 0.0, s_max = 0.0;
    };
    std::vector<Cluster> clusters(nclusters);
    for (int k = 0; k < ne; ++k) {
        Cluster& cl = clusters[cluster_of[k]];
        double s = events[k].s;
        if (cl.count == 0) {
            cl.s_ref = s;
            cl.s_min = cl.s_max = s;
        } else {
            // unwrap around the seam relative to the first member
            while (s < cl.s_ref - 0.5 * d.perimeter) s += d.perimeter;
            while (s > cl.s_ref + 0.5 * d.perimeter) s -= d.perimeter;
            cl.s_min = std::min(cl.s_min, s);
            cl.s_max = std::max(cl.s_max, s);
        }
        cl.s_sum += s;
        cl.count += 1;
        cl.dsum += -events[k].dir;
    }

    // Residuals: phase change between the plateau midpoints around each cluster.
    auto r_at_arc = [&](double s) {
        s = std::fmod(std::fmod(s, d.perimeter) + d.perimeter, d.perimeter);
        auto it = std::upper_bound(d.boundary_s.begin(), d.boundary_s.end(), s);
        int j = static_cast<int>(it - d.boundary_s.begin()) - 1;
        j = std::max(0, std::min(nb - 1, j));
        double frac = (s - d.boundary_s[j]) / d.boundary_ds[j];
        return r[j] + frac * (r[j + 1] - r[j]);
    };

    VortexSet out;
    std::vector<double> centers(nclusters);
    for (int c = 0; c < nclusters; ++c)
        centers[c] = std::fmod(std::fmod(clusters[c].s_sum / clusters[c].count, d.perimeter) +
                                   d.perimeter,
                               d.perimeter);
    std::vector<int> order(nclusters);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return centers[a] < centers[b]; });

    for (int oi = 0; oi < nclusters; ++oi) {
        int c = order[oi];
        int cn = order[(oi + 1) % nclusters];
        int cp = order[(oi + nclusters - 1) % nclusters];
        const Cluster& cl = clusters[c];
        require(cl.dsum != 0, "topology",
                "balanced +/- transition cluster: zero net multiplicity (out-of-model input)");
        // halfway to the neighbouring clusters (full wrap when alone)
        double lo, hi;
        if (nclusters == 1) {
            lo = cl.s_min - 0.25 * d.perimeter;
            hi = cl.s_max + 0.25 * d.perimeter;
        } else {
            double gap_prev = centers[c] - centers[cp];
            if (gap_prev <= 0) gap_prev += d.perimeter;
            double gap_next = centers[cn] - centers[c];
            if (gap_next <= 0) gap_next += d.perimeter;
            lo = centers[c] - 0.5 * gap_prev;
            hi = centers[c] + 0.5 * gap_next;
        }
        double drop = r_at_arc(hi) - r_at_arc(lo);
        // account for the full-loop drift -2 pi when hi wrapped past the seam
        if (hi >= d.perimeter || lo < 0.0) {
            // r(s + L) = r(s) + (r[nb] - r[0])
            if (hi >= d.perimeter) drop = r_at_arc(hi - d.perimeter) + (r[nb] - r[0]) - r_at_arc(lo);
            if (lo < 0.0) drop = r_at_arc(hi) - (r_at_arc(lo + d.perimeter) - (r[nb] - r[0]));
        }
        double mult = -drop / kPi;
        int dj = static_cast<int>(std::lround(mult));
        require(std::abs(mult - dj) < threshold, "topology",
                "fractional multiplicity residual " + std::to_string(std::abs(mult - dj)) +
                    " exceeds threshold at cluster " + std::to_string(c));
        require(dj == cl.dsum, "topology", "crossing count and phase drop disagree");
        out.items.push_back({centers[c], dj});
    }
    require(out.total_multiplicity() == 2, "topology",
            "detected multiplicities sum to " + std::to_string(out.total_multiplicity()) +
                ", expected 2");
    return out;
}

// --- Escaping-vortex fixture ----------------------------------------------

// Fixed geometry: a disk of radius 1/4 centered at (0, -3/4); the rescaling
// center (0, -1/2) is the top point of its boundary.
inline Domain escaping_vortex_domain(int n_r, int n_theta, double grading = 1.5) {
    return make_disk(0.25, n_r, n_theta, grading, Vec2{0.0, -0.75});
}

namespace detail {

// Unit map on the reference disk with vortices of degree +1 / -1 at
// (0, +1/2) / (0, -1/2), equal to (1, 0) on the unit circle: the singular
// angle difference corrected by the harmonic extension of its boundary trace
// (the Dirichlet-minimizing phase correction, computed spectrally), with a
// linear modulus taper of slope 4 inside the two small disks.
class EscapingVortexMap {
public:
    EscapingVortexMap() {
        const int M = 2048;
        std::vector<double> samples(M);
        double prev = raw_phase(point_on_circle(0));
        double acc = wrap_angle(prev);
        samples[0] = acc;
        for (int m = 1; m < M; ++m) {
            double cur = raw_phase(point_on_circle(m));
            acc += wrap_angle(cur - prev);
            samples[m] = acc;
            prev = cur;
        }
        a_.assign(K + 1, 0.0);
        b_.assign(K + 1, 0.0);
        for (int m = 0; m < M; ++m) {
            double th = 2.0 * kPi * m / M;
            a_[0] += samples[m] / M;
            for (int k = 1; k <= K; ++k) {
                a_[k] += 2.0 * samples[m] * std::cos(k * th) / M;
                b_[k] += 2.0 * samples[m] * std::sin(k * th) / M;
            }
        }
    }

    Vec2 operator()(const Vec2& X) const {
        double rp = norm(X - Pp), rm = norm(X - Pm);
        double modulus = std::min({1.0, 4.0 * rp, 4.0 * rm});
        if (modulus == 0.0) return {0.0, 0.0};
        double chi = raw_phase(X) - harmonic(X);
        return {modulus * std::cos(chi), modulus * std::sin(chi)};
    }

    static constexpr Vec2 Pp{0.0, 0.5};
    static constexpr Vec2 Pm{0.0, -0.5};

private:
    static Vec2 point_on_circle(int m) {
        double th = 2.0 * kPi * m / 2048;
        return {std::cos(th), std::sin(th)};
    }
    static double raw_phase(const Vec2& X) {
        return std::atan2(X.y - Pp.y, X.x - Pp.x) - std::atan2(X.y - Pm.y, X.x - Pm.x);
    }
    double harmonic(const Vec2& X) const {
        double rho = norm(X), th = std::atan2(X.y, X.x);
        double acc = a_[0], rk = 1.0;
        for (int k = 1; k <= K; ++k) {
            rk *= rho;
            acc += rk * (a_[k] * std::cos(k * th) + b_[k] * std::sin(k * th));
        }
        return acc;
    }
    static constexpr int K = 72;
    std::vector<double> a_, b_;
};

}  // namespace detail

// u_eps on the fixture domain: the rescaled vortex map inside B_eps around the
// top boundary point, (1, 0) elsewhere. One interior vortex sits at distance
// eps/2 from the boundary and escapes to it as eps -> 0.
inline VectorField2D build_escaping_vortex(const Domain& d, double eps, double eta = 0.1) {
    require(eps < 0.25, "invalid-argument", "eps must be below the fixture radius 1/4");
    require(d.shape.kind == BoundaryShape::Kind::Disk && std::abs(d.shape.radius - 0.25) < 1e-12 &&
                std::abs(d.shape.center.x) < 1e-12 && std::abs(d.shape.center.y + 0.75) < 1e-12,
            "invalid-argument", "field requires the escaping-vortex fixture domain");
    static const detail::EscapingVortexMap U;
    const Vec2 rescale_center{0.0, -0.5};

    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.assign(d.nodes.size(), Vec2{1.0, 0.0});
    for (size_t i = 0; i < d.nodes.size(); ++i) {
        Vec2 X = (d.nodes[i] - rescale_center) / eps;
        if (norm(X) < 1.0) u.values[i] = U(X);
    }
    return u;
}

}  // namespace bvlab
