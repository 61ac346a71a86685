#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "bvlab/core.hpp"

namespace bvlab {

inline double gamma0() { return kPi * (1.0 - std::log(4.0 * kPi)); }

// Scalar phase sampled at uniform nodes on (lo, hi).
struct Profile1D {
    double lo = -1.0, hi = 1.0;
    std::vector<double> phi;
    double eps = 1e-2;

    int n_nodes() const { return static_cast<int>(phi.size()); }
    int n_elems() const { return n_nodes() - 1; }
    double h() const { return (hi - lo) / n_elems(); }
    double node(int i) const { return lo + h() * i; }
    void check() const {
        require(phi.size() >= 3, "invalid-argument", "profile needs at least 3 samples");
        require(eps > 0.0, "invalid-argument", "eps must be positive");
    }
};

// --- Nonlocal quadrature ----------------------------------------------------
//
// The double integral of ((phi(s)-phi(t))/(s-t))^2 is assembled per element
// pair: same element and adjacent elements get the exact piecewise-linear
// value; pairs at distance >= 2 get the corner (product-trapezoid) rule.
// Every term is a nonnegative fixed weight times a squared nodal difference,
// so truncation superadditivity, the pi-shift/reflection symmetries and the
// scaling identity hold exactly for the discrete functional, not just in the
// limit.  Constants: same element h^2 q^2 = (dphi)^2; adjacent elements
// A (dphi_e^2 + dphi_f^2) + 2 B dphi_e dphi_f with A = 1 - log 2,
// B = log 2 - 1/2 (closed-form integrals of a^2/(a+b)^2 and ab/(a+b)^2 over
// the unit square).

namespace detail1d {

constexpr double kAdjA = 0.30685281944005469;  // 1 - log 2
constexpr double kAdjB = 0.19314718055994531;  // log 2 - 1/2

template <typename PairFn>
inline void for_far_corners(const Profile1D& p, PairFn&& fn) {
    int ne = p.n_elems();
    double h = p.h();
    double w = h * h / 4.0;
    for (int e = 0; e + 2 < ne + 1; ++e) {
        for (int f = e + 2; f < ne; ++f) {
            // corners of E_e x E_f; factor 2 for the transposed cell
            for (int da = 0; da < 2; ++da)
                for (int db = 0; db < 2; ++db) fn(e + da, f + db, 2.0 * w);
        }
    }
}

}  // namespace detail1d

inline double f_eps_nonlocal(const Profile1D& p) {
    p.check();
    int ne = p.n_elems();
    double h = p.h();
    double acc = 0.0;
    for (int e = 0; e < ne; ++e) {
        double d = p.phi[e + 1] - p.phi[e];
        acc += d * d;
    }
    for (int e = 0; e + 1 < ne; ++e) {
        double de = p.phi[e + 1] - p.phi[e];
        double df = p.phi[e + 2] - p.phi[e + 1];
        acc += 2.0 * (detail1d::kAdjA * (de * de + df * df) + 2.0 * detail1d::kAdjB * de * df);
    }
    detail1d::for_far_corners(p, [&](int a, int b, double w) {
        double d = p.phi[a] - p.phi[b];
        double ds = (a - b) * h;
        acc += w * d * d / (ds * ds);
    });
    return acc / (2.0 * kPi);
}

inline double f_eps_anchoring(const Profile1D& p) {
    double h = p.h();
    double acc = 0.0;
    int n = p.n_nodes();
    for (int i = 0; i < n; ++i) {
        double s = std::sin(p.phi[i]);
        acc += (i == 0 || i == n - 1 ? 0.5 : 1.0) * h * s * s;
    }
    return acc / (2.0 * kPi * p.eps);
}

inline double f_eps(const Profile1D& p) { return f_eps_nonlocal(p) + f_eps_anchoring(p); }

inline std::vector<double> f_eps_gradient(const Profile1D& p) {
    int n = p.n_nodes(), ne = p.n_elems();
    double h = p.h();
    std::vector<double> g(n, 0.0);
    for (int e = 0; e < ne; ++e) {
        double d = p.phi[e + 1] - p.phi[e];
        g[e + 1] += 2.0 * d;
        g[e] -= 2.0 * d;
    }
    for (int e = 0; e + 1 < ne; ++e) {
        double de = p.phi[e + 1] - p.phi[e];
        double df = p.phi[e + 2] - p.phi[e + 1];
        double gde = 2.0 * (2.0 * detail1d::kAdjA * de + 2.0 * detail1d::kAdjB * df);
        double gdf = 2.0 * (2.0 * detail1d::kAdjA * df + 2.0 * detail1d::kAdjB * de);
        g[e + 1] += gde;
        g[e] -= gde;
        g[e + 2] += gdf;
        g[e + 1] -= gdf;
    }
    detail1d::for_far_corners(p, [&](int a, int b, double w) {
        double ds = (a - b) * h;
        double c = 2.0 * w / (ds * ds) * (p.phi[a] - p.phi[b]);
        g[a] += c;
        g[b] -= c;
    });
    for (double& v : g) v /= 2.0 * kPi;
    double wa = h / (2.0 * kPi * p.eps);
    for (int i = 0; i < n; ++i) {
        double lump = (i == 0 || i == n - 1 ? 0.5 : 1.0) * wa;
        g[i] += lump * std::sin(2.0 * p.phi[i]);
    }
    return g;
}

// --- Truncations -------------------------------------------------------------

// T_k phi = (phi ^ (k+1)pi) v (k pi).
inline Profile1D truncate(const Profile1D& p, int k) {
    Profile1D out = p;
    for (double& v : out.phi) v = std::max(k * kPi, std::min((k + 1) * kPi, v));
    return out;
}

// Shifted truncation phi^{(k)} = T_k phi - k pi, valued in [0, pi].
inline Profile1D truncate_shifted(const Profile1D& p, int k) {
    Profile1D out = truncate(p, k);
    for (double& v : out.phi) v -= k * kPi;
    return out;
}

inline std::pair<int, int> truncation_range(const Profile1D& p) {
    double mn = p.phi[0], mx = p.phi[0];
    for (double v : p.phi) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    int k0 = static_cast<int>(std::floor(mn / kPi)) - 1;
    int k1 = static_cast<int>(std::ceil(mx / kPi)) + 1;
    return {k0, k1};
}

// --- Rearrangement inequality -----------------------------------------------

using IntervalUnion = std::vector<std::pair<double, double>>;

namespace detail1d {

inline double measure(const IntervalUnion& u) {
    double m = 0.0;
    for (auto& [a, b] : u) m += b - a;
    return m;
}

// int over [a1,a2] x [b1,b2] of |s-t|^-2 for disjoint intervals.
inline double kernel_box(double a1, double a2, double b1, double b2) {
    if (a1 > b1) return kernel_box(b1, b2, a1, a2);
    require(a2 <= b1 + 1e-15, "invalid-argument", "interval unions must be disjoint");
    double v = std::log(((b1 - a1) * (b2 - a2)) / ((b1 - a2) * (b2 - a1)));
    return v;
}

}  // namespace detail1d

struct RearrangementBound {
    double lhs = 0.0;
    double rhs = 0.0;
};

// Exact closed forms for both sides of the set rearrangement inequality on I.
inline RearrangementBound rearrangement_bound(const IntervalUnion& A, const IntervalUnion& B,
                                              std::pair<double, double> I) {
    double LI = I.second - I.first;
    require(LI > 0.0, "invalid-argument", "empty base interval");
    auto validate = [&](const IntervalUnion& u, const char* who) {
        require(!u.empty(), "invalid-argument", std::string(who) + " must be nonempty");
        for (auto& [a, b] : u) {
            require(b > a, "invalid-argument", std::string(who) + " has an empty interval");
            require(a >= I.first - 1e-15 && b <= I.second + 1e-15, "invalid-argument",
                    std::string(who) + " not contained in I");
        }
    };
    validate(A, "A");
    validate(B, "B");
    double mA = detail1d::measure(A), mB = detail1d::measure(B);
    require(mA + mB < LI - 1e-15, "invalid-argument",
            "right-hand side undefined: |A| + |B| >= |I|");
    RearrangementBound out;
    for (auto& [a1, a2] : A)
        for (auto& [b1, b2] : B) out.lhs += detail1d::kernel_box(a1, a2, b1, b2);
    out.rhs = std::log(((LI - mA) * (LI - mB)) / (LI * (LI - mA - mB)));
    return out;
}

// Second form: lhs >= log(1 + c |A| / |P|) when |B| >= c |I|.
inline double rearrangement_rhs2(const IntervalUnion& A, const IntervalUnion& B,
                                 std::pair<double, double> I, double c) {
    double LI = I.second - I.first;
    double mA = detail1d::measure(A), mB = detail1d::measure(B);
    require(mB >= c * LI - 1e-12, "invalid-argument", "|B| >= c|I| required");
    double P = LI - mA - mB;
    return std::log(1.0 + c * mA / P);
}

// --- Co-area diagnostic -------------------------------------------------------

struct ThetaCoarea {
    std::vector<double> gammas;
    std::vector<double> theta;      // Theta_phi at each grid gamma
    double lhs = 0.0;               // nonlocal quadrature of phi
    double stieltjes = 0.0;         // sum (1 - 2 gamma/pi)^2 dTheta, right endpoints
    bool monotone = true;
};

// Theta_phi(gamma): nonlocal pair mass of the 0/pi-valued phi-hat restricted
// to E_gamma = {|phi - pi/2| > pi/2 - gamma}. Uses the distance >= 2 corner
// weights of the f_eps quadrature, so lhs >= stieltjes holds exactly at the
// discrete level (each opposite-side pair enters with |dphi| >= pi - 2 gamma).
inline ThetaCoarea theta_coarea(const Profile1D& p, const std::vector<double>& gamma_grid) {
    p.check();
    for (double v : p.phi)
        require(v >= -1e-12 && v <= kPi + 1e-12, "invalid-argument",
                "theta_coarea requires phi in [0, pi]; clamp first");
    int n = p.n_nodes();
    std::vector<double> entry(n);
    std::vector<char> side(n);
    for (int i = 0; i < n; ++i) {
        entry[i] = kPi / 2.0 - std::abs(p.phi[i] - kPi / 2.0);
        side[i] = p.phi[i] >= kPi / 2.0;
    }
    // (entry level, mass) for each opposite-side far pair
    std::vector<std::pair<double, double>> contrib;
    double h = p.h();
    detail1d::for_far_corners(p, [&](int a, int b, double w) {
        if (side[a] == side[b]) return;
        double ds = (a - b) * h;
        contrib.push_back({std::max(entry[a], entry[b]), w * kPi * kPi / (ds * ds)});
    });
    std::sort(contrib.begin(), contrib.end());

    ThetaCoarea out;
    out.gammas = gamma_grid;
    out.theta.resize(gamma_grid.size());
    size_t idx = 0;
    double acc = 0.0;
    for (size_t k = 0; k < gamma_grid.size(); ++k) {
        while (idx < contrib.size() && contrib[idx].first < gamma_grid[k]) {
            acc += contrib[idx].second;
            ++idx;
        }
        out.theta[k] = acc;
        if (k > 0 && out.theta[k] < out.theta[k - 1] - 1e-14) out.monotone = false;
    }
    out.lhs = 2.0 * kPi * f_eps_nonlocal(p);  // undo the 1/2pi normalization
    for (size_t k = 0; k + 1 < gamma_grid.size(); ++k) {
        double w = 1.0 - 2.0 * gamma_grid[k + 1] / kPi;
        out.stieltjes += w * w * (out.theta[k + 1] - out.theta[k]);
    }
    return out;
}

// --- Half-disk fields ---------------------------------------------------------

// Triangulated upper half disk B_r^+ from a tensor grid: x graded toward
// feature points on the segment, y geometric from a boundary layer of scale
// layer0; nodes outside the disk are snapped onto the arc and degenerate
// cells dropped.
struct HalfDiskMesh {
    double r = 1.0;
    std::vector<Vec2> nodes;
    std::vector<Tri> cells;
    std::vector<double> cell_area;
    std::vector<std::array<Vec2, 3>> cell_grad;
    std::vector<int> bottom_nodes;     // nodes with y = 0, ordered by x
    std::vector<double> bottom_w;      // trapezoid weights on the segment
};

inline HalfDiskMesh build_halfdisk_mesh(double r, double layer0,
                                        const std::vector<double>& features = {0.0},
                                        double growth = 1.12, double coarse_frac = 0.02) {
    require(r > 0.0 && layer0 > 0.0 && layer0 < r, "invalid-argument", "bad half-disk mesh sizes");
    double coarse = coarse_frac * r;

    std::vector<double> xs = {-r, 0.0, r};
    for (double f : features) {
        xs.push_back(std::min(r, std::max(-r, f)));
        double step = layer0;
        double off = layer0;
        while (off < 2.0 * r) {
            for (double sgn : {-1.0, 1.0}) {
                double x = f + sgn * off;
                if (x > -r && x < r) xs.push_back(x);
            }
            step *= growth;
            off += step;
            if (step > coarse) step = coarse;
        }
    }
    for (double x = -r; x < r; x += coarse) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    std::vector<double> xs2;
    for (double x : xs)
        if (xs2.empty() || x - xs2.back() > 0.25 * layer0) xs2.push_back(x);
    if (std::abs(xs2.back() - r) > 1e-14) xs2.push_back(r);
    xs = std::move(xs2);

    std::vector<double> ys = {0.0};
    double step = layer0;
    while (ys.back() < r) {
        ys.push_back(std::min(r, ys.back() + step));
        step = std::min(step * growth, coarse);
    }

    int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    HalfDiskMesh m;
    m.r = r;
    m.nodes.resize(static_cast<size_t>(nx) * ny);
    auto id = [&](int i, int j) { return j * nx + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            Vec2 pnt{xs[i], ys[j]};
            double d = norm(pnt);
            if (d > r) pnt = pnt * (r / d);  // snap onto the arc
            m.nodes[id(i, j)] = pnt;
        }
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            int p00 = id(i, j), p10 = id(i + 1, j), p11 = id(i + 1, j + 1), p01 = id(i, j + 1);
            for (auto& t : {Tri{{p00, p10, p11}}, Tri{{p00, p11, p01}}}) {
                Vec2 pa = m.nodes[t.v[0]], pb = m.nodes[t.v[1]], pc = m.nodes[t.v[2]];
                double A2 = cross(pb - pa, pc - pa);
                if (A2 < 1e-14 * r * r) continue;  // collapsed by snapping
                m.cells.push_back(t);
                m.cell_area.push_back(0.5 * A2);
                m.cell_grad.push_back({perp(pc - pb) / A2, perp(pa - pc) / A2, perp(pb - pa) / A2});
            }
        }
    for (int i = 0; i < nx; ++i) m.bottom_nodes.push_back(id(i, 0));
    m.bottom_w.assign(nx, 0.0);
    for (int i = 0; i + 1 < nx; ++i) {
        double dx = xs[i + 1] - xs[i];
        m.bottom_w[i] += 0.5 * dx;
        m.bottom_w[i + 1] += 0.5 * dx;
    }
    return m;
}

struct HalfDiskField {
    std::shared_ptr<HalfDiskMesh> mesh;
    std::vector<double> psi;
    double eps = 1e-2;
    std::vector<double> g;  // boundary phase on bottom nodes; empty = 0

    void check() const {
        require(mesh != nullptr, "invalid-argument", "half-disk field has no mesh");
        require(psi.size() == mesh->nodes.size(), "invalid-argument", "field size mismatch");
        require(g.empty() || g.size() == mesh->bottom_nodes.size(), "invalid-argument",
                "boundary phase size mismatch");
    }
};

// Localised functional: Dirichlet on the half disk plus the sin^2(psi - g)
// line term on the straight boundary segment.
inline double halfdisk_energy(const HalfDiskField& f) {
    f.check();
    const HalfDiskMesh& m = *f.mesh;
    double dir = 0.0;
    for (size_t c = 0; c < m.cells.size(); ++c) {
        const Tri& T = m.cells[c];
        Vec2 gp = f.psi[T.v[0]] * m.cell_grad[c][0] + f.psi[T.v[1]] * m.cell_grad[c][1] +
                  f.psi[T.v[2]] * m.cell_grad[c][2];
        dir += m.cell_area[c] * norm2(gp);
    }
    double anc = 0.0;
    for (size_t k = 0; k < m.bottom_nodes.size(); ++k) {
        double gk = f.g.empty() ? 0.0 : f.g[k];
        double s = std::sin(f.psi[m.bottom_nodes[k]] - gk);
        anc += m.bottom_w[k] * s * s;
    }
    return dir + anc / (2.0 * kPi * f.eps);
}

inline double peierls_phase(double x, double y, double eps) {
    return std::atan2(y + 2.0 * kPi * eps, x);
}

// Explicit half-plane transition profile arg(x + i(y + 2 pi eps)) meshed on
// B_r^+ with a boundary layer resolving the core scale.
inline HalfDiskField peierls_profile(double eps, double r, double growth = 1.1) {
    require(eps < r, "invalid-argument", "peierls_profile requires eps < r");
    auto mesh = std::make_shared<HalfDiskMesh>(build_halfdisk_mesh(r, eps / 4.0, {0.0}, growth));
    HalfDiskField f;
    f.mesh = mesh;
    f.eps = eps;
    f.psi.resize(mesh->nodes.size());
    for (size_t i = 0; i < mesh->nodes.size(); ++i)
        f.psi[i] = peierls_phase(mesh->nodes[i].x, mesh->nodes[i].y, eps);
    return f;
}

// Limit value of the localised energy of the transition profile.
inline double peierls_energy_oracle(double eps, double r) {
    require(eps < r, "invalid-argument", "oracle requires eps < r");
    return kPi * std::log(r / eps) + gamma0();
}

// Uniformly sampled boundary trace of the transition profile.
inline Profile1D peierls_trace(double eps, double r, int n_nodes) {
    Profile1D p;
    p.lo = -r;
    p.hi = r;
    p.eps = eps;
    p.phi.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) p.phi[i] = peierls_phase(p.node(i), 0.0, eps);
    return p;
}

// Multiplicity-d boundary transition: d single transitions at x_j = j/|log eps|
// glued by the radial cutoff f (1 inside r(1-r), linear to 0 at r).
inline HalfDiskField higher_multiplicity_profile(int dmult, double eps, double r,
                                                 double growth = 1.12) {
    require(dmult >= 1, "invalid-argument", "multiplicity must be >= 1");
    require(eps < std::exp(-1.0 / (r * r)), "invalid-argument",
            "requires eps < exp(-1/r^2)");
    double a = 1.0 / std::abs(std::log(eps));
    std::vector<double> features;
    for (int j = 1; j <= dmult; ++j) features.push_back(j * a);
    auto mesh =
        std::make_shared<HalfDiskMesh>(build_halfdisk_mesh(r, eps / 4.0, features, growth));
    HalfDiskField f;
    f.mesh = mesh;
    f.eps = eps;
    f.psi.resize(mesh->nodes.size());
    for (size_t i = 0; i < mesh->nodes.size(); ++i) {
        double x = mesh->nodes[i].x, y = mesh->nodes[i].y;
        double rho = norm(mesh->nodes[i]);
        double cut = rho < r * (1.0 - r) ? 1.0 : (rho <= r ? (r - rho) / (r * r) : 0.0);
        double acc = 0.0;
        for (int j = 1; j <= dmult; ++j)
            acc += std::atan2(y + 2.0 * kPi * eps * cut, x - cut * j * a);
        f.psi[i] = acc;
    }
    return f;
}

// --- Poisson extension --------------------------------------------------------

// Bounded harmonic extension of a trace to the upper half plane, evaluated at
// (x, y): exact kernel integrals against the piecewise-linear interpolant of
// the samples, constants gl / gr on the tails.
struct TraceSamples {
    double lo = 0.0, hi = 0.0;
    std::vector<double> values;
    double tail_left = 0.0, tail_right = 0.0;
};

inline double poisson_extension(const TraceSamples& tr, double x, double y) {
    require(y > 0.0, "invalid-argument", "evaluation height must be positive");
    int n = static_cast<int>(tr.values.size());
    require(n >= 2, "invalid-argument", "need at least two samples");
    double h = (tr.hi - tr.lo) / (n - 1);
    auto cauchy_cdf = [&](double t) { return 0.5 + std::atan2(t, y) / kPi; };
    double acc = tr.tail_left * cauchy_cdf(tr.lo - x) + tr.tail_right * (1.0 - cauchy_cdf(tr.hi - x));
    for (int i = 0; i + 1 < n; ++i) {
        double t0 = tr.lo + h * i, t1 = t0 + h;
        double v0 = tr.values[i], v1 = tr.values[i + 1];
        double b = (v1 - v0) / h;
        double a = v0 - b * t0;
        // int P_y(x - t)(a + b t) dt over [t0, t1]
        double u0 = t0 - x, u1 = t1 - x;
        double atn = std::atan2(u1, y) - std::atan2(u0, y);
        double lg = 0.5 * std::log((u1 * u1 + y * y) / (u0 * u0 + y * y));
        acc += (a + b * x) * atn / kPi + b * y * lg / kPi;
    }
    return acc;
}

// Inversion trace g~(x) = g(r^2/x) for |x| > r, sampled onto a wide window.
inline TraceSamples reflect_trace(const std::function<double(double)>& g, double r, double window,
                                  int n) {
    TraceSamples tr;
    tr.lo = -window;
    tr.hi = window;
    tr.values.resize(n);
    double h = 2.0 * window / (n - 1);
    for (int i = 0; i < n; ++i) {
        double x = -window + h * i;
        tr.values[i] = std::abs(x) <= r ? g(x) : g(r * r / x);
    }
    tr.tail_left = g(r * r / -window);
    tr.tail_right = g(r * r / window);
    return tr;
}

// --- 1D minimization ----------------------------------------------------------

struct MinimizeProfileResult {
    Profile1D profile;
    double value = 0.0;
    double excess = 0.0;          // f_eps - pi log(r/eps)
    double init_grad_norm = 0.0;  // gradient norm at the transition-profile start
    int iters = 0;
    bool converged = false;
};

// Minimizes the discrete functional over profiles clamped to [0, pi] with the
// endpoint values pinned to the transition data (phi near pi left, 0 right).
// Projected gradient descent with Barzilai-Borwein steps and an Armijo
// safeguard; initialized from the explicit transition trace.
inline MinimizeProfileResult minimize_f_eps(double eps, double r, int n_nodes,
                                            int max_iters = 400, double tol = 1e-7) {
    MinimizeProfileResult res;
    Profile1D p = peierls_trace(eps, r, n_nodes);
    for (double& v : p.phi) v = std::max(0.0, std::min(kPi, v));
    int n = p.n_nodes();

    auto project = [&](Profile1D& q) {
        for (int i = 1; i + 1 < n; ++i) q.phi[i] = std::max(0.0, std::min(kPi, q.phi[i]));
        q.phi[0] = p.phi[0];
        q.phi[n - 1] = p.phi[n - 1];
    };
    auto pg_norm = [&](const Profile1D& q, const std::vector<double>& g) {
        double acc = 0.0;
        for (int i = 1; i + 1 < n; ++i) {
            double d = g[i];
            if (q.phi[i] <= 0.0 && d > 0.0) d = 0.0;
            if (q.phi[i] >= kPi && d < 0.0) d = 0.0;
            acc += d * d;
        }
        return std::sqrt(acc);
    };

    double fv = f_eps(p);
    std::vector<double> g = f_eps_gradient(p);
    res.init_grad_norm = pg_norm(p, g);

    double step = 1.0 / (1.0 + 1.0 / (2.0 * kPi * eps));
    Profile1D prev = p;
    std::vector<double> gprev = g;
    for (res.iters = 0; res.iters < max_iters; ++res.iters) {
        if (pg_norm(p, g) < tol * (1.0 + std::abs(fv))) {
            res.converged = true;
            break;
        }
        Profile1D trial = p;
        double st = step;
        double fnew = 0.0;
        for (int bt = 0; bt < 50; ++bt) {
            trial = p;
            for (int i = 1; i + 1 < n; ++i) trial.phi[i] -= st * g[i];
            project(trial);
            fnew = f_eps(trial);
            if (fnew <= fv - 1e-10 * std::abs(fv)) break;
            st *= 0.5;
        }
        if (fnew > fv) break;  // no descent found
        prev = p;
        gprev = g;
        p = trial;
        fv = fnew;
        g = f_eps_gradient(p);
        // BB step from the last move
        double sy = 0.0, yy = 0.0;
        for (int i = 0; i < n; ++i) {
            double si = p.phi[i] - prev.phi[i], yi = g[i] - gprev[i];
            sy += si * yi;
            yy += yi * yi;
        }
        step = (yy > 0.0 && sy > 0.0) ? sy / yy : step;
    }
    res.profile = p;
    res.value = fv;
    res.excess = fv - kPi * std::log(r / eps);
    return res;
}

}  // namespace bvlab
