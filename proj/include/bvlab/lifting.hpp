#pragma once

#include <queue>

#include "bvlab/field.hpp"

namespace bvlab {

// Boundary vortex: arc position and nonzero integer multiplicity.
struct BoundaryVortex {
    double s = 0.0;
    int d = 0;
};

struct VortexSet {
    std::vector<BoundaryVortex> items;

    int total_multiplicity() const {
        int t = 0;
        for (auto& v : items) t += v.d;
        return t;
    }
    void check(double perimeter) const {
        require(total_multiplicity() == 2, "topology", "vortex multiplicities must sum to 2");
        for (auto& v : items) {
            require(v.d != 0, "invalid-argument", "vortex multiplicity must be nonzero");
            require(v.s >= 0.0 && v.s < perimeter, "invalid-argument",
                    "vortex arc position out of range");
        }
        for (size_t i = 0; i < items.size(); ++i)
            for (size_t j = i + 1; j < items.size(); ++j) {
                double gap = std::abs(items[i].s - items[j].s);
                gap = std::min(gap, perimeter - gap);
                require(gap > 1e-12, "invalid-argument", "vortex positions must be distinct");
            }
    }
};

// Lifting g of the boundary tangent: e^{ig} = tau at every node. Stored as the
// continuous branch along the ring starting at arc 0; going once around it
// gains 2 pi, so the single -2 pi jump sits at arc position 0.
struct BoundaryLifting {
    std::vector<double> values;    // per boundary node, continuous branch
    double closure = 0.0;          // total increment around the loop (= 2 pi)
    double kappa_consistency = 0.0;  // max |discrete d_tau g - kappa| away from the jump
};

inline BoundaryLifting tangent_lifting(const Domain& d) {
    int nb = d.num_boundary();
    BoundaryLifting g;
    g.values.resize(nb);
    double cur = std::atan2(d.boundary_tau[0].y, d.boundary_tau[0].x);
    g.values[0] = cur;
    for (int j = 1; j < nb; ++j) {
        double raw = std::atan2(d.boundary_tau[j].y, d.boundary_tau[j].x);
        double prev = std::atan2(d.boundary_tau[j - 1].y, d.boundary_tau[j - 1].x);
        cur += wrap_angle(raw - prev);
        g.values[j] = cur;
    }
    double raw0 = std::atan2(d.boundary_tau[0].y, d.boundary_tau[0].x);
    double rawl = std::atan2(d.boundary_tau[nb - 1].y, d.boundary_tau[nb - 1].x);
    g.closure = cur + wrap_angle(raw0 - rawl) - g.values[0];

    double worst = 0.0;
    for (int j = 0; j + 1 < nb; ++j) {
        double slope = (g.values[j + 1] - g.values[j]) / d.boundary_ds[j];
        double kmid = 0.5 * (d.boundary_kappa[j] + d.boundary_kappa[j + 1]);
        worst = std::max(worst, std::abs(slope - kmid));
    }
    g.kappa_consistency = worst;
    return g;
}

// Single-valued phase of a unit-length field on the simply connected mesh,
// propagated over a BFS spanning tree and anchored at node 0 into [0, 2 pi).
// Fails if an edge carries a near-pi phase difference (unresolved) or if any
// triangle has a nonzero winding sum (interior vortex: no lifting exists).
inline std::vector<double> unwrap_phase(const VectorField2D& U, double margin = 0.05) {
    const Domain& d = *U.domain;
    size_t n = d.nodes.size();
    std::vector<double> theta(n);
    for (size_t i = 0; i < n; ++i) {
        require(std::abs(norm(U.values[i]) - 1.0) <= 1e-8, "invalid-argument",
                "unwrap_phase requires |U| = 1 at all nodes");
        theta[i] = std::atan2(U.values[i].y, U.values[i].x);
    }
    auto edge_inc = [&](int a, int b) {
        double w = wrap_angle(theta[b] - theta[a]);
        require(std::abs(w) < kPi - margin, "unresolved-phase",
                "phase difference across a mesh edge exceeds pi - margin");
        return w;
    };
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        double cyc = edge_inc(T.v[0], T.v[1]) + edge_inc(T.v[1], T.v[2]) + edge_inc(T.v[2], T.v[0]);
        require(std::abs(cyc) < kPi, "interior-vortex",
                "nonzero winding around a mesh cell; no single-valued lifting");
    }
    std::vector<double> phi(n, 0.0);
    std::vector<char> seen(n, 0);
    std::vector<std::vector<int>> adj(n);
    for (const Tri& T : d.cells)
        for (int k = 0; k < 3; ++k) {
            adj[T.v[k]].push_back(T.v[(k + 1) % 3]);
            adj[T.v[(k + 1) % 3]].push_back(T.v[k]);
        }
    std::queue<int> q;
    phi[0] = theta[0] < 0.0 ? theta[0] + 2.0 * kPi : theta[0];
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
        int a = q.front();
        q.pop();
        for (int b : adj[a])
            if (!seen[b]) {
                phi[b] = phi[a] + wrap_angle(theta[b] - theta[a]);
                seen[b] = 1;
                q.push(b);
            }
    }
    return phi;
}

// Boundary lifting with jumps -pi d_j at the vortex positions; the absolutely
// continuous part of its tangential derivative is the curvature. The additive
// constant is a multiple of pi relative to the tangent lifting, so e^{i phi0}
// is tangent away from the vortices.
struct BVLimitLifting {
    std::vector<double> values;  // per boundary node
    VortexSet vortices;
};

inline BVLimitLifting bv_limit_lifting(const Domain& d, const VortexSet& vs) {
    vs.check(d.perimeter);
    BoundaryLifting g = tangent_lifting(d);
    int nb = d.num_boundary();
    BVLimitLifting out;
    out.vortices = vs;
    out.values.resize(nb);
    for (int j = 0; j < nb; ++j) {
        double drop = 0.0;
        for (const auto& v : vs.items)
            if (d.boundary_s[j] > v.s) drop += kPi * v.d;
        out.values[j] = g.values[j] - drop;
    }
    return out;
}

}  // namespace bvlab
