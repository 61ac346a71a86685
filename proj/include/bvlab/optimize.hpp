#pragma once

#include <deque>

#include "bvlab/field.hpp"

namespace bvlab {

struct MinimizeConfig {
    int max_iters = 4000;
    double grad_tol = 1e-6;      // l2 norm of the nodal gradient vector
    double ls_backtrack = 0.5;   // in (0,1)
    double ls_c1 = 1e-4;         // sufficient-decrease constant
    int memory = 8;
    int max_backtracks = 48;
    std::uint64_t seed = 0;

    void check() const {
        require(max_iters >= 0 && memory >= 1, "invalid-argument", "bad optimizer limits");
        require(grad_tol > 0.0, "invalid-argument", "grad_tol must be positive");
        require(ls_backtrack > 0.0 && ls_backtrack < 1.0, "invalid-argument",
                "backtracking factor must lie in (0,1)");
        require(ls_c1 > 0.0 && ls_c1 < 0.5, "invalid-argument", "sufficient decrease out of range");
    }
};

enum class MinimizeStatus { Converged, IterationCap, LineSearchFailure };

struct MinimizeResult {
    VectorField2D field;
    EnergyBreakdown energy;
    int iters = 0;
    double grad_norm = 0.0;
    MinimizeStatus status = MinimizeStatus::Converged;
};

namespace detail {

// Per-node diagonal of the discrete Hessian (Dirichlet + penalty + anchoring),
// used as the initial metric of the two-loop recursion. The penalty stiffness
// scales like 1/eta^2 and would otherwise dominate the curvature estimate of
// every direction.
inline std::vector<double> hessian_diagonal(const VectorField2D& u) {
    const Domain& d = *u.domain;
    std::vector<double> D(d.nodes.size(), 0.0);
    for (size_t c = 0; c < d.cells.size(); ++c)
        for (int k = 0; k < 3; ++k)
            D[d.cells[c].v[k]] += 2.0 * d.cell_area[c] * norm2(d.cell_grad[c][k]);
    double inv_eta2 = 1.0 / (u.eta * u.eta);
    for (size_t i = 0; i < D.size(); ++i) {
        double m2 = norm2(u.values[i]);
        double pen = d.node_mass[i] * inv_eta2 * std::max(8.0 * m2 - 4.0 * (1.0 - m2), 0.0);
        D[i] += pen;
    }
    double wanc = 1.0 / (kPi * u.eps);
    for (int j = 0; j < d.num_boundary(); ++j) D[d.boundary_node[j]] += wanc * d.boundary_w[j];
    double dmax = 0.0;
    for (double v : D) dmax = std::max(dmax, v);
    for (double& v : D) v = std::max(v, 1e-12 * dmax);
    return D;
}

}  // namespace detail

// Limited-memory quasi-Newton descent on the flattened nodal vector with
// Armijo backtracking; falls back to (preconditioned) steepest descent when
// the curvature pairs break down. Accepted steps never increase the energy.
inline MinimizeResult minimize(const VectorField2D& u0, const MinimizeConfig& cfg) {
    u0.check();
    cfg.check();
    const Domain& d = *u0.domain;
    size_t n = d.nodes.size();

    VectorField2D u = u0;
    auto grad_vec = [&](const VectorField2D& f) { return energy_gradient(f); };

    auto gnorm = [&](const std::vector<Vec2>& g) {
        double acc = 0.0;
        for (const Vec2& v : g) acc += norm2(v);
        return std::sqrt(acc);
    };

    EnergyBreakdown eb = energy(u);
    std::vector<Vec2> g = grad_vec(u);

    struct Pair {
        std::vector<Vec2> s, y;
        double rho;
    };
    std::deque<Pair> mem;

    MinimizeResult res;
    res.status = MinimizeStatus::IterationCap;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        double gn = gnorm(g);
        if (gn <= cfg.grad_tol) {
            res.status = MinimizeStatus::Converged;
            break;
        }
        std::vector<double> D = detail::hessian_diagonal(u);

        // two-loop recursion with diagonal initial metric
        std::vector<Vec2> q = g;
        std::vector<double> alpha(mem.size());
        for (int k = static_cast<int>(mem.size()) - 1; k >= 0; --k) {
            double a = 0.0;
            for (size_t i = 0; i < n; ++i) a += dot(mem[k].s[i], q[i]);
            a *= mem[k].rho;
            alpha[k] = a;
            for (size_t i = 0; i < n; ++i) q[i] -= a * mem[k].y[i];
        }
        std::vector<Vec2> p(n);
        for (size_t i = 0; i < n; ++i) p[i] = q[i] / D[i];
        for (size_t k = 0; k < mem.size(); ++k) {
            double b = 0.0;
            for (size_t i = 0; i < n; ++i) b += dot(mem[k].y[i], p[i]);
            b *= mem[k].rho;
            for (size_t i = 0; i < n; ++i) p[i] += (alpha[k] - b) * mem[k].s[i];
        }
        double slope = 0.0;
        for (size_t i = 0; i < n; ++i) slope -= dot(g[i], p[i]);
        if (!(slope < 0.0)) {
            // curvature breakdown: drop history, plain preconditioned descent
            mem.clear();
            for (size_t i = 0; i < n; ++i) p[i] = g[i] / D[i];
            slope = 0.0;
            for (size_t i = 0; i < n; ++i) slope -= dot(g[i], p[i]);
        }

        double t = 1.0;
        VectorField2D trial = u;
        EnergyBreakdown trial_eb;
        bool accepted = false;
        for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
            for (size_t i = 0; i < n; ++i) trial.values[i] = u.values[i] - t * p[i];
            trial_eb = energy(trial);
            if (trial_eb.total <= eb.total + cfg.ls_c1 * t * slope) {
                accepted = true;
                break;
            }
            t *= cfg.ls_backtrack;
        }
        if (!accepted) {
            res.status = MinimizeStatus::LineSearchFailure;
            break;
        }
        std::vector<Vec2> gnew = grad_vec(trial);
        Pair pr;
        pr.s.resize(n);
        pr.y.resize(n);
        double sy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            pr.s[i] = trial.values[i] - u.values[i];
            pr.y[i] = gnew[i] - g[i];
            sy += dot(pr.s[i], pr.y[i]);
        }
        if (sy > 1e-14) {
            pr.rho = 1.0 / sy;
            mem.push_back(std::move(pr));
            if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
        }
        u = std::move(trial);
        eb = trial_eb;
        g = std::move(gnew);
    }
    res.field = std::move(u);
    res.energy = eb;
    res.iters = it;
    res.grad_norm = gnorm(g);
    return res;
}

// Decreasing eps schedule with either explicit eta values or eta = eps^k.
struct Schedule {
    std::vector<double> eps_list;
    std::vector<double> eta_list;  // empty: use the power rule
    double eta_exponent = 3.0;

    std::vector<std::pair<double, double>> stages() const {
        require(!eps_list.empty(), "invalid-argument", "empty schedule");
        std::vector<std::pair<double, double>> out;
        for (size_t k = 0; k < eps_list.size(); ++k) {
            double eps = eps_list[k];
            require(eps > 0.0, "invalid-argument", "eps must be positive");
            if (k > 0)
                require(eps < eps_list[k - 1], "invalid-argument", "eps must be decreasing");
            double eta = eta_list.empty() ? std::pow(eps, eta_exponent) : eta_list[k];
            require(eta < eps, "invalid-argument",
                    "eta must stay below eps (boundary vortices preferred)");
            out.push_back({eps, eta});
        }
        if (!eta_list.empty())
            require(eta_list.size() == eps_list.size(), "invalid-argument",
                    "eta list length mismatch");
        return out;
    }
};

struct StageRecord {
    double eps = 0.0, eta = 0.0;
    MinimizeResult result;
};

// Warm-started continuation down the schedule.
inline std::vector<StageRecord> continuation(const VectorField2D& u0, const Schedule& schedule,
                                             const MinimizeConfig& cfg) {
    auto stages = schedule.stages();
    std::vector<StageRecord> out;
    VectorField2D u = u0;
    for (size_t k = 0; k < stages.size(); ++k) {
        u.eps = stages[k].first;
        u.eta = stages[k].second;
        StageRecord rec;
        rec.eps = u.eps;
        rec.eta = u.eta;
        try {
            rec.result = minimize(u, cfg);
        } catch (const Error& e) {
            throw Error(e.category(), "continuation stage " + std::to_string(k) + ": " + e.what());
        }
        u = rec.result.field;
        out.push_back(std::move(rec));
    }
    return out;
}

// --- Initial fields ----------------------------------------------------------

inline VectorField2D init_constant(const Domain& d, double eps, double eta) {
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.assign(d.nodes.size(), Vec2{1.0, 0.0});
    return u;
}

// Tangent-aligned ring field with a linear core at the center (carries the
// interior degree-1 obstruction of the tangent data).
inline VectorField2D init_tangent_like(const Domain& d, double eps, double eta,
                                       double core_frac = 0.2) {
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.resize(d.nodes.size());
    double R = 0.5 * d.diameter;
    for (size_t i = 0; i < d.nodes.size(); ++i) {
        Vec2 x = d.nodes[i] - d.shape.center;
        double r = norm(x);
        if (r < 1e-14) {
            u.values[i] = {0.0, 0.0};
            continue;
        }
        Vec2 t = perp(x) / r;
        u.values[i] = std::min(1.0, r / (core_frac * R)) * t;
    }
    return u;
}

inline VectorField2D init_random(const Domain& d, double eps, double eta, std::uint64_t seed) {
    Rng rng(seed);
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.resize(d.nodes.size());
    for (auto& v : u.values) v = {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
    return u;
}

}  // namespace bvlab
