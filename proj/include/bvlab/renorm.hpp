#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "bvlab/jacobian.hpp"
#include "bvlab/onedim.hpp"
#include "bvlab/optimize.hpp"

namespace bvlab {

// Renormalised pair energy on a disk of radius R: -2 pi sum_{k<j} d_k d_j
// log |a_k - a_j| for unit multiplicities summing to 2.
inline double w_disk(const VortexSet& vs, double R) {
    vs.check(2.0 * kPi * R);
    std::vector<Vec2> pos;
    for (const auto& v : vs.items) {
        require(v.d == 1 || v.d == -1, "invalid-argument",
                "closed form requires multiplicities +-1");
        double th = v.s / R;
        pos.push_back({R * std::cos(th), R * std::sin(th)});
    }
    double W = 0.0;
    for (size_t k = 0; k < pos.size(); ++k)
        for (size_t j = k + 1; j < pos.size(); ++j) {
            double dist = norm(pos[k] - pos[j]);
            require(dist > 1e-14, "singular-configuration", "coincident vortex points (W = +inf)");
            W -= 2.0 * kPi * vs.items[k].d * vs.items[j].d * std::log(dist);
        }
    return W;
}

// --- Harmonic extension (P1 FEM) -------------------------------------------

inline std::vector<double> harmonic_extend_values(const Domain& d,
                                                  const std::vector<double>& boundary_values) {
    require(boundary_values.size() == static_cast<size_t>(d.num_boundary()), "invalid-argument",
            "boundary data size mismatch");
    int n = d.num_nodes();
    std::vector<int> unknown_of(n, -1);
    std::vector<char> is_b(n, 0);
    for (int j = 0; j < d.num_boundary(); ++j) is_b[d.boundary_node[j]] = 1;
    int m = 0;
    for (int i = 0; i < n; ++i)
        if (!is_b[i]) unknown_of[i] = m++;

    std::vector<double> full(n, 0.0);
    for (int j = 0; j < d.num_boundary(); ++j) full[d.boundary_node[j]] = boundary_values[j];

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        for (int a = 0; a < 3; ++a) {
            int ia = T.v[a];
            if (unknown_of[ia] < 0) continue;
            for (int b = 0; b < 3; ++b) {
                int ib = T.v[b];
                double kab = d.cell_area[c] * dot(d.cell_grad[c][a], d.cell_grad[c][b]);
                if (unknown_of[ib] >= 0)
                    trips.emplace_back(unknown_of[ia], unknown_of[ib], kab);
                else
                    rhs[unknown_of[ia]] -= kab * full[ib];
            }
        }
    }
    Eigen::SparseMatrix<double> K(m, m);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    require(solver.info() == Eigen::Success, "numeric", "harmonic extension factorization failed");
    Eigen::VectorXd sol = solver.solve(rhs);
    require(solver.info() == Eigen::Success, "numeric", "harmonic extension solve failed");
    for (int i = 0; i < n; ++i)
        if (unknown_of[i] >= 0) full[i] = sol[unknown_of[i]];
    return full;
}

inline double dirichlet_energy(const Domain& d, const std::vector<double>& f) {
    double acc = 0.0;
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        acc += d.cell_area[c] *
               norm2(detail::p1_gradient_component(d, c, f[T.v[0]], f[T.v[1]], f[T.v[2]]));
    }
    return acc;
}

// --- Singular harmonic extension phi* = sum d_k theta_k + w ------------------
//
// theta_k is the angle about the boundary vortex p_k with the branch cut along
// the outward normal (outside the closed convex-ish domain), so its boundary
// trace jumps by exactly -pi at p_k; the FEM part w carries the continuous
// remainder of the lifting data. The mesh never has to resolve the log
// singularity of |grad phi*|.
class SingularHarmonicExtension {
public:
    const Domain* domain = nullptr;
    VortexSet vortices;
    std::vector<Vec2> pos, nu, tau;
    std::vector<double> w;  // nodal FEM correction

    static SingularHarmonicExtension build(const Domain& d, const VortexSet& vs) {
        vs.check(d.perimeter);
        SingularHarmonicExtension ext;
        ext.domain = &d;
        ext.vortices = vs;
        for (const auto& v : vs.items) {
            double t = d.param_of_arc(v.s);
            ext.pos.push_back(d.shape.point(t));
            ext.nu.push_back(d.shape.normal(t));
            ext.tau.push_back(d.shape.tangent(t));
        }
        BVLimitLifting phi0 = bv_limit_lifting(d, vs);
        std::vector<double> h0(d.num_boundary());
        for (int j = 0; j < d.num_boundary(); ++j) {
            double acc = phi0.values[j];
            for (size_t k = 0; k < vs.items.size(); ++k)
                acc -= vs.items[k].d * ext.theta(k, d.nodes[d.boundary_node[j]]);
            h0[j] = acc;
        }
        ext.w = harmonic_extend_values(d, h0);
        return ext;
    }

    // angle about vortex k, cut along +nu_k; at the vortex itself returns the
    // one-sided (pre-jump) limit so nodal data stays consistent
    double theta(size_t k, const Vec2& x) const {
        Vec2 rel = x - pos[k];
        if (norm(rel) < 1e-13 * domain->diameter) rel = -1.0 * tau[k];
        double alpha = std::atan2(nu[k].y, nu[k].x);
        double ca = std::cos(kPi - alpha), sa = std::sin(kPi - alpha);
        Vec2 v{ca * rel.x - sa * rel.y, sa * rel.x + ca * rel.y};
        return std::atan2(v.y, v.x);
    }

    Vec2 grad_theta(size_t k, const Vec2& x) const {
        Vec2 rel = x - pos[k];
        return perp(rel) / norm2(rel);
    }

    Vec2 singular_grad(const Vec2& x) const {
        Vec2 acc{0.0, 0.0};
        for (size_t k = 0; k < pos.size(); ++k)
            acc += static_cast<double>(vortices.items[k].d) * grad_theta(k, x);
        return acc;
    }

    double nodal_value(int node) const {
        const Domain& d = *domain;
        double acc = w[node];
        for (size_t k = 0; k < pos.size(); ++k) acc += vortices.items[k].d * theta(k, d.nodes[node]);
        return acc;
    }

    double w_at(const Vec2& x) const {
        const Domain& d = *domain;
        int c = locate_cell(x);
        const Tri& T = d.cells[c];
        Vec2 pa = d.nodes[T.v[0]], pb = d.nodes[T.v[1]], pc = d.nodes[T.v[2]];
        double A2 = cross(pb - pa, pc - pa);
        double la = cross(pb - x, pc - x) / A2;
        double lb = cross(pc - x, pa - x) / A2;
        double lc = 1.0 - la - lb;
        return la * w[T.v[0]] + lb * w[T.v[1]] + lc * w[T.v[2]];
    }

    Vec2 w_grad_at(const Vec2& x) const {
        const Domain& d = *domain;
        int c = locate_cell(x);
        const Tri& T = d.cells[c];
        return detail::p1_gradient_component(d, c, w[T.v[0]], w[T.v[1]], w[T.v[2]]);
    }

    int locate_cell(const Vec2& x) const {
        const Domain& d = *domain;
        Vec2 rel = x - d.shape.center;
        double th = std::atan2(rel.y, rel.x);
        if (th < 0.0) th += 2.0 * kPi;
        double sigma = std::min(1.0 - 1e-14, norm(rel) / d.shape.rho(th));
        auto it = std::upper_bound(d.radial_frac.begin(), d.radial_frac.end(), sigma);
        int i = std::max(0, static_cast<int>(it - d.radial_frac.begin()) - 1);
        i = std::min(i, d.n_r - 1);
        int j = std::min(d.n_theta - 1, static_cast<int>(th / (2.0 * kPi / d.n_theta)));
        if (i == 0) return j;  // center fan
        int base = d.n_theta + ((i - 1) * d.n_theta + j) * 2;
        const Tri& T1 = d.cells[base];
        Vec2 pa = d.nodes[T1.v[0]], pbv = d.nodes[T1.v[1]], pcv = d.nodes[T1.v[2]];
        double A2 = cross(pbv - pa, pcv - pa);
        double la = cross(pbv - x, pcv - x) / A2;
        double lb = cross(pcv - x, pa - x) / A2;
        double lc = 1.0 - la - lb;
        if (la >= -1e-9 && lb >= -1e-9 && lc >= -1e-9) return base;
        return base + 1;
    }
};

// In-domain angular half-widths of the circle of radius r about the boundary
// point p, measured from the inward normal toward +tau / -tau.
inline std::pair<double, double> indomain_halfwidths(const Domain& d, const Vec2& p, const Vec2& nu,
                                                     double r) {
    if (d.shape.kind == BoundaryShape::Kind::Disk) {
        double R = d.shape.radius;
        double hw = std::acos(std::min(1.0, r / (2.0 * R)));
        return {hw, hw};
    }
    auto inside = [&](double psi, double sign) {
        Vec2 in = -1.0 * nu;
        double cs = std::cos(sign * psi), sn = std::sin(sign * psi);
        Vec2 dir{cs * in.x - sn * in.y, sn * in.x + cs * in.y};
        Vec2 x = p + r * dir;
        Vec2 rel = x - d.shape.center;
        double t = std::atan2(rel.y, rel.x);
        return norm(rel) < d.shape.rho(t);
    };
    auto bisect = [&](double sign) {
        require(inside(0.0, sign), "resolution", "vortex ball leaves the domain");
        double lo = 0.0, hi = kPi;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (inside(mid, sign) ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    return {bisect(+1.0), bisect(-1.0)};
}

namespace detail {

// log-spaced Gauss panels in radius, Gauss in the in-domain angle
template <typename F>
double annulus_quadrature(const Domain& d, const Vec2& p, const Vec2& nu, double r0, double r1,
                          F&& integrand, int panels_per_decade = 12, int ang_panels = 6) {
    if (r1 <= r0) return 0.0;
    int panels = std::max(4, static_cast<int>(std::ceil(std::log10(r1 / r0) * panels_per_decade)));
    double acc = 0.0;
    double in_angle = std::atan2(-nu.y, -nu.x);
    for (int pnl = 0; pnl < panels; ++pnl) {
        double ra = r0 * std::pow(r1 / r0, static_cast<double>(pnl) / panels);
        double rb = r0 * std::pow(r1 / r0, static_cast<double>(pnl + 1) / panels);
        acc += gauss5(
            [&](double r) {
                auto [hw_p, hw_m] = indomain_halfwidths(d, p, nu, r);
                double val = 0.0;
                for (int ap = 0; ap < ang_panels; ++ap) {
                    double a0 = -hw_m + (hw_p + hw_m) * ap / ang_panels;
                    double a1 = -hw_m + (hw_p + hw_m) * (ap + 1) / ang_panels;
                    val += gauss5(
                        [&](double psi) {
                            Vec2 dir{std::cos(in_angle + psi), std::sin(in_angle + psi)};
                            return integrand(p + r * dir);
                        },
                        a0, a1);
                }
                return val * r;
            },
            ra, rb);
    }
    return acc;
}

// integral of grad theta_k over one triangle via the gradient theorem
inline Vec2 tri_integral_grad_theta(const Domain& d, const SingularHarmonicExtension& ext,
                                    size_t k, int c) {
    const Tri& T = d.cells[c];
    Vec2 acc{0.0, 0.0};
    for (int e = 0; e < 3; ++e) {
        Vec2 a = d.nodes[T.v[e]], b = d.nodes[T.v[(e + 1) % 3]];
        Vec2 edge = b - a;
        Vec2 nrm{edge.y, -edge.x};  // outward for ccw triangles, length |edge|
        double val = gauss5([&](double t) { return ext.theta(k, a + t * edge); }, 0.0, 1.0);
        acc += val * nrm;
    }
    return acc;
}

}  // namespace detail

// Dirichlet energy of phi* outside vortex balls, with the ball exclusion done
// in vortex-centered polar coordinates (exact in rho) and the singular factor
// localized by a partition of unity so every bulk integrand stays smooth.
class RenormQuadrature {
public:
    RenormQuadrature(const Domain& d, const SingularHarmonicExtension& ext)
        : d_(d), ext_(ext) {
        int N = static_cast<int>(ext.pos.size());
        double min_sep = N > 1 ? 1e300 : 0.5 * d.diameter;
        for (int k = 0; k < N; ++k)
            for (int j = k + 1; j < N; ++j)
                min_sep = std::min(min_sep, norm(ext.pos[k] - ext.pos[j]));
        R0_ = 0.30 * min_sep;
        R1_ = 0.45 * min_sep;

        auto S2 = [&](const Vec2& x) { return norm2(ext_.singular_grad(x)); };
        // far part: (1 - sum chi_k) |S|^2, smooth over the whole domain
        far_ = 0.0;
        int nt = 2 * d.n_theta;
        int ns = 120;
        for (int jt = 0; jt < nt; ++jt) {
            double t0 = 2.0 * kPi * jt / nt, t1 = 2.0 * kPi * (jt + 1) / nt;
            far_ += detail::gauss5(
                [&](double t) {
                    double rr = d.shape.rho(t);
                    double inner = 0.0;
                    for (int is = 0; is < ns; ++is) {
                        double s0 = static_cast<double>(is) / ns;
                        double s1 = static_cast<double>(is + 1) / ns;
                        inner += detail::gauss5(
                            [&](double s) {
                                Vec2 x =
                                    d.shape.center + s * rr * Vec2{std::cos(t), std::sin(t)};
                                double cut = 1.0;
                                for (int k = 0; k < N; ++k) cut -= chi(norm(x - ext_.pos[k]));
                                return cut <= 0.0 ? 0.0 : cut * S2(x) * s * rr * rr;
                            },
                            s0, s1);
                    }
                    return inner;
                },
                t0, t1);
        }

        // FEM part: full Dirichlet energy and the exact cross term with the
        // singular gradient (gradient theorem per cell, no ragged clipping)
        c_full_ = dirichlet_energy(d, ext.w);
        b_full_ = 0.0;
        for (size_t c = 0; c < d.cells.size(); ++c) {
            const Tri& T = d.cells[c];
            Vec2 gw = detail::p1_gradient_component(d, c, ext.w[T.v[0]], ext.w[T.v[1]],
                                                    ext.w[T.v[2]]);
            Vec2 intS{0.0, 0.0};
            for (int k = 0; k < N; ++k)
                intS += static_cast<double>(ext.vortices.items[k].d) *
                        detail::tri_integral_grad_theta(d, ext, k, c);
            b_full_ += 2.0 * dot(gw, intS);
        }
    }

    // int_{Omega minus union B_rho(a_k)} |grad phi*|^2
    double dirichlet_outside(double rho) const {
        auto S2 = [&](const Vec2& x) { return norm2(ext_.singular_grad(x)); };
        double val = far_ + b_full_ + c_full_;
        for (size_t k = 0; k < ext_.pos.size(); ++k) {
            val += detail::annulus_quadrature(
                d_, ext_.pos[k], ext_.nu[k], rho, R1_,
                [&](const Vec2& x) { return chi(norm(x - ext_.pos[k])) * S2(x); });
            val -= detail::annulus_quadrature(
                d_, ext_.pos[k], ext_.nu[k], 1e-3 * rho, rho, [&](const Vec2& x) {
                    Vec2 gw = ext_.w_grad_at(x);
                    return 2.0 * dot(gw, ext_.singular_grad(x)) + norm2(gw);
                });
        }
        return val;
    }

    double R0() const { return R0_; }

private:
    double chi(double r) const {
        return r <= R0_ ? 1.0 : (r >= R1_ ? 0.0 : (R1_ - r) / (R1_ - R0_));
    }
    const Domain& d_;
    const SingularHarmonicExtension& ext_;
    double R0_ = 0.0, R1_ = 0.0;
    double far_ = 0.0, b_full_ = 0.0, c_full_ = 0.0;
};

struct RenormResult {
    double W = 0.0;
    std::vector<double> rhos;
    std::vector<double> intermediates;  // int_{Omega_rho} |grad phi*|^2 - N pi log(1/rho)
    double fit_residual = 0.0;
};

// Renormalised energy by quadrature with linear extrapolation in rho.
inline RenormResult w_numeric(const Domain& d, const VortexSet& vs,
                              std::vector<double> rho_schedule = {}) {
    for (const auto& v : vs.items)
        require(v.d == 1 || v.d == -1, "invalid-argument", "w_numeric requires multiplicities +-1");
    SingularHarmonicExtension ext = SingularHarmonicExtension::build(d, vs);
    RenormQuadrature quad(d, ext);
    int N = static_cast<int>(vs.items.size());

    double R0 = quad.R0();
    if (rho_schedule.empty())
        rho_schedule = {0.60 * R0, 0.45 * R0, 0.34 * R0, 0.25 * R0,
                        0.19 * R0, 0.14 * R0, 0.10 * R0};
    double mesh_h = d.perimeter / d.n_theta;
    require(rho_schedule.back() > 1.5 * mesh_h, "resolution",
            "rho schedule descends below the boundary mesh scale");

    RenormResult res;
    res.rhos = rho_schedule;
    for (double rho : rho_schedule)
        res.intermediates.push_back(quad.dirichlet_outside(rho) -
                                    N * kPi * std::log(1.0 / rho));

    size_t m = res.intermediates.size();
    require(m >= 3, "invalid-argument", "rho schedule needs at least three points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = m - 3; i < m; ++i) {
        sx += res.rhos[i];
        sy += res.intermediates[i];
        sxx += res.rhos[i] * res.rhos[i];
        sxy += res.rhos[i] * res.intermediates[i];
    }
    double denom = 3.0 * sxx - sx * sx;
    double slope = (3.0 * sxy - sx * sy) / denom;
    res.W = (sy - slope * sx) / 3.0;
    for (size_t i = m - 3; i < m; ++i)
        res.fit_residual = std::max(
            res.fit_residual, std::abs(res.intermediates[i] - (res.W + slope * res.rhos[i])));
    require(res.fit_residual < 0.05 * (std::abs(res.W) + 1.0), "resolution",
            "renormalised-energy intermediates not converging (non-Cauchy)");
    return res;
}

}  // namespace bvlab

#include "bvlab/recovery.hpp"
