#include <catch2/catch_amalgamated.hpp>

#include "bvlab/field.hpp"
#include "bvlab/lifting.hpp"

using namespace bvlab;

namespace {
VectorField2D constant_field(const Domain& d, Vec2 v, double eps, double eta) {
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.assign(d.nodes.size(), v);
    return u;
}
}  // namespace

TEST_CASE("energy of reference fields on the unit disk") {
    Domain d = make_disk(1.0, 64, 256);
    double eps = 0.17, eta = 0.4;

    SECTION("constant (1,0): anchoring = 1/(2 eps)") {
        auto u = constant_field(d, {1.0, 0.0}, eps, eta);
        EnergyBreakdown e = energy(u);
        REQUIRE(e.dirichlet == 0.0);
        REQUIRE(e.penalty == 0.0);
        // int cos^2 over the circle = pi, exactly reproduced by the trapezoid
        REQUIRE(e.anchoring == Catch::Approx(1.0 / (2.0 * eps)).epsilon(1e-12));
        REQUIRE(e.total == e.dirichlet + e.penalty + e.anchoring);
    }

    SECTION("zero field: penalty = |Omega| / eta^2") {
        auto u = constant_field(d, {0.0, 0.0}, eps, eta);
        EnergyBreakdown e = energy(u);
        REQUIRE(e.dirichlet == 0.0);
        REQUIRE(e.anchoring == 0.0);
        REQUIRE(e.penalty == Catch::Approx(kPi / (eta * eta)).epsilon(1e-8));
    }

    SECTION("identity map: (2 pi, pi/(3 eta^2), 1/eps)") {
        auto u = constant_field(d, {0.0, 0.0}, eps, eta);
        for (size_t i = 0; i < d.nodes.size(); ++i) u.values[i] = d.nodes[i];
        EnergyBreakdown e = energy(u);
        REQUIRE(e.dirichlet == Catch::Approx(2.0 * kPi).epsilon(1e-10));
        REQUIRE(e.penalty == Catch::Approx(kPi / (3.0 * eta * eta)).epsilon(1e-3));
        REQUIRE(e.anchoring == Catch::Approx(1.0 / eps).epsilon(1e-12));
    }
}

TEST_CASE("local energy restriction and additivity") {
    Domain d = make_disk(1.0, 32, 128);
    Rng rng(7);
    VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);

    std::vector<char> all(d.cells.size(), 1);
    EnergyBreakdown full = energy(u);
    EnergyBreakdown loc = local_energy(u, all);
    REQUIRE(loc.total == Catch::Approx(full.total).epsilon(1e-14));

    // disjoint masks add exactly
    std::vector<char> g1(d.cells.size(), 0), g2(d.cells.size(), 0);
    for (size_t c = 0; c < d.cells.size(); ++c) {
        const Tri& T = d.cells[c];
        Vec2 mid = (d.nodes[T.v[0]] + d.nodes[T.v[1]] + d.nodes[T.v[2]]) / 3.0;
        (mid.x > 0 ? g1 : g2)[c] = 1;
    }
    EnergyBreakdown e1 = local_energy(u, g1), e2 = local_energy(u, g2);
    REQUIRE(e1.dirichlet + e2.dirichlet == Catch::Approx(full.dirichlet).epsilon(1e-13));
    REQUIRE(e1.penalty + e2.penalty == Catch::Approx(full.penalty).epsilon(1e-13));
    REQUIRE(e1.anchoring + e2.anchoring == Catch::Approx(full.anchoring).epsilon(1e-13));

    // empty mask: all-zero breakdown, no error
    std::vector<char> none(d.cells.size(), 0);
    EnergyBreakdown e0 = local_energy(u, none);
    REQUIRE(e0.total == 0.0);

    // identity map on the half disk {x1 > 0}: half the Dirichlet / anchoring
    for (size_t i = 0; i < d.nodes.size(); ++i) u.values[i] = d.nodes[i];
    u.eps = 0.17;
    EnergyBreakdown half = local_energy(u, g1);
    REQUIRE(half.dirichlet == Catch::Approx(kPi).epsilon(1e-10));
    REQUIRE(half.anchoring == Catch::Approx(0.5 / u.eps).epsilon(1e-12));
}

TEST_CASE("energy gradient matches central finite differences") {
    Domain d = make_disk(1.0, 16, 48);
    Rng rng(123);
    int checked = 0;
    for (int trial = 0; trial < 6; ++trial) {
        VectorField2D u = random_smooth_field(d, rng, 0.25, 0.45);
        std::vector<Vec2> g = energy_gradient(u);
        for (int k = 0; k < 10; ++k) {
            int node = static_cast<int>(uniform(rng, 0, 1) * d.num_nodes()) % d.num_nodes();
            for (int comp = 0; comp < 2; ++comp) {
                double h = 1e-6;
                VectorField2D up = u, um = u;
                (comp == 0 ? up.values[node].x : up.values[node].y) += h;
                (comp == 0 ? um.values[node].x : um.values[node].y) -= h;
                double fd = (energy(up).total - energy(um).total) / (2.0 * h);
                double an = comp == 0 ? g[node].x : g[node].y;
                REQUIRE(an == Catch::Approx(fd).epsilon(1e-5).margin(1e-7));
                ++checked;
            }
        }
    }
    REQUIRE(checked >= 50);

    // interior node of a constant unit field: Dirichlet+penalty gradient zero
    VectorField2D c = random_smooth_field(d, rng, 0.25, 0.45);
    for (auto& v : c.values) v = {1.0, 0.0};
    std::vector<Vec2> g = energy_gradient(c);
    int interior = d.node_index(d.n_r / 2, 3);
    REQUIRE(norm(g[interior]) < 1e-12);

    // |u| = 1 everywhere: penalty part of the gradient vanishes
    VectorField2D s1 = c;
    for (size_t i = 0; i < s1.values.size(); ++i) {
        double th = 0.3 * d.nodes[i].x;
        s1.values[i] = {std::cos(th), std::sin(th)};
    }
    double pen = energy(s1).penalty;
    REQUIRE(pen == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("symmetries of the energy") {
    Domain d = make_disk(1.0, 24, 96);
    Rng rng(5);
    VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
    EnergyBreakdown e = energy(u);

    // u -> -u leaves every term unchanged
    VectorField2D m = u;
    for (auto& v : m.values) v = -v;
    EnergyBreakdown em = energy(m);
    REQUIRE(em.dirichlet == Catch::Approx(e.dirichlet).epsilon(1e-14));
    REQUIRE(em.penalty == Catch::Approx(e.penalty).epsilon(1e-14));
    REQUIRE(em.anchoring == Catch::Approx(e.anchoring).epsilon(1e-14));

    // global rotation: Dirichlet + penalty invariant, anchoring not
    double a = 0.7;
    VectorField2D r = u;
    for (auto& v : r.values)
        v = {std::cos(a) * v.x - std::sin(a) * v.y, std::sin(a) * v.x + std::cos(a) * v.y};
    EnergyBreakdown er = energy(r);
    REQUIRE(er.dirichlet == Catch::Approx(e.dirichlet).epsilon(1e-12));
    REQUIRE(er.penalty == Catch::Approx(e.penalty).epsilon(1e-12));
    REQUIRE(std::abs(er.anchoring - e.anchoring) > 1e-6 * e.anchoring);
}

TEST_CASE("phase form of the energy for unit-length fields") {
    Domain d = make_disk(1.0, 64, 256);
    double eps = 0.2;
    BoundaryLifting g = tangent_lifting(d);

    // constant phase: Dirichlet part zero, anchoring is the sin^2 quadrature
    std::vector<double> phi(d.nodes.size(), 0.9);
    double ks = ks_energy(phi, d, g.values, eps);
    double expect = 0.0;
    for (int j = 0; j < d.num_boundary(); ++j) {
        double s = std::sin(0.9 - g.values[j]);
        expect += d.boundary_w[j] * s * s;
    }
    expect /= 2.0 * kPi * eps;
    REQUIRE(ks == Catch::Approx(expect).epsilon(1e-14));

    // smooth phase: agrees with the vector-field energy up to interpolation
    for (size_t i = 0; i < d.nodes.size(); ++i)
        phi[i] = 0.4 + d.nodes[i].x - 0.5 * d.nodes[i].y;
    VectorField2D u = exp_field(d, phi, eps, 0.3);
    EnergyBreakdown e = energy(u);
    double ks2 = ks_energy(phi, d, g.values, eps);
    REQUIRE(e.penalty == Catch::Approx(0.0).margin(1e-13));
    REQUIRE(std::abs(ks2 - e.total) <= 5e-3 * e.total);

    // anchoring parts agree identically at the nodes
    double anc = 0.0;
    for (int j = 0; j < d.num_boundary(); ++j) {
        double s = std::sin(phi[d.boundary_node[j]] - g.values[j]);
        anc += d.boundary_w[j] * s * s;
    }
    anc /= 2.0 * kPi * eps;
    REQUIRE(e.anchoring == Catch::Approx(anc).epsilon(1e-12));
}
