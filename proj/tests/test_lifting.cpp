#include <catch2/catch_amalgamated.hpp>

#include "bvlab/lifting.hpp"

using namespace bvlab;

TEST_CASE("tangent lifting on the unit disk") {
    Domain d = make_disk(1.0, 16, 256);
    BoundaryLifting g = tangent_lifting(d);

    for (int j = 0; j < d.num_boundary(); ++j) {
        double th = 2.0 * kPi * j / d.n_theta;
        // g = theta + pi/2 on the disk
        REQUIRE(g.values[j] == Catch::Approx(th + kPi / 2.0).margin(1e-12));
        // e^{ig} = tau at every node
        REQUIRE(std::cos(g.values[j]) == Catch::Approx(d.boundary_tau[j].x).margin(1e-10));
        REQUIRE(std::sin(g.values[j]) == Catch::Approx(d.boundary_tau[j].y).margin(1e-10));
    }
    REQUIRE(g.closure == Catch::Approx(2.0 * kPi).margin(1e-10));
    // discrete tangential derivative away from the jump is the curvature
    REQUIRE(g.kappa_consistency < 1e-3);
}

TEST_CASE("tangent lifting on a perturbed disk tracks curvature") {
    Domain d = make_perturbed_disk({{0.05, 3}}, 12, 512);
    BoundaryLifting g = tangent_lifting(d);
    REQUIRE(g.closure == Catch::Approx(2.0 * kPi).margin(1e-9));
    REQUIRE(g.kappa_consistency < 5e-3);
}

TEST_CASE("phase unwrapping") {
    Domain d = make_disk(1.0, 20, 96);

    SECTION("u = e^{i x1}") {
        VectorField2D u;
        u.domain = &d;
        u.eps = 0.1;
        u.eta = 0.1;
        u.values.resize(d.nodes.size());
        for (size_t i = 0; i < d.nodes.size(); ++i)
            u.values[i] = {std::cos(d.nodes[i].x), std::sin(d.nodes[i].x)};
        std::vector<double> phi = unwrap_phase(u);
        for (size_t i = 0; i < phi.size(); ++i)
            REQUIRE(phi[i] - phi[0] ==
                    Catch::Approx(d.nodes[i].x - d.nodes[0].x).margin(1e-10));
    }

    SECTION("constant (0,1) anchors to pi/2") {
        VectorField2D u;
        u.domain = &d;
        u.eps = 0.1;
        u.eta = 0.1;
        u.values.assign(d.nodes.size(), Vec2{0.0, 1.0});
        std::vector<double> phi = unwrap_phase(u);
        for (double p : phi) REQUIRE(p == Catch::Approx(kPi / 2.0).margin(1e-12));
    }

    SECTION("interior vortex obstructs the lifting") {
        // center the winding at a cell centroid so every edge stays resolved
        const Tri& T = d.cells[d.n_theta + 37];
        Vec2 x0 = (d.nodes[T.v[0]] + d.nodes[T.v[1]] + d.nodes[T.v[2]]) / 3.0;
        VectorField2D u;
        u.domain = &d;
        u.eps = 0.1;
        u.eta = 0.1;
        u.values.resize(d.nodes.size());
        for (size_t i = 0; i < d.nodes.size(); ++i) {
            Vec2 r = d.nodes[i] - x0;
            u.values[i] = r / norm(r);
        }
        try {
            unwrap_phase(u);
            FAIL("expected an error");
        } catch (const Error& e) {
            REQUIRE((e.category() == "interior-vortex" || e.category() == "unresolved-phase"));
        }
    }

    SECTION("non-unit input rejected") {
        VectorField2D u;
        u.domain = &d;
        u.eps = 0.1;
        u.eta = 0.1;
        u.values.assign(d.nodes.size(), Vec2{0.5, 0.0});
        REQUIRE_THROWS_AS(unwrap_phase(u), Error);
    }
}

TEST_CASE("unwrap inverts the exponential up to 2 pi") {
    Domain d = make_disk(1.0, 16, 64);
    Rng rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> phi(d.nodes.size());
        double a = uniform(rng, -2.0, 2.0), b = uniform(rng, -2.0, 2.0);
        double c = uniform(rng, -10.0, 10.0);
        for (size_t i = 0; i < phi.size(); ++i)
            phi[i] = a * d.nodes[i].x + b * d.nodes[i].y + c;
        VectorField2D u = exp_field(d, phi, 0.1, 0.1);
        std::vector<double> rec = unwrap_phase(u);
        double shift = rec[0] - phi[0];
        REQUIRE(std::remainder(shift, 2.0 * kPi) == Catch::Approx(0.0).margin(1e-9));
        for (size_t i = 0; i < phi.size(); ++i)
            REQUIRE(rec[i] - phi[i] == Catch::Approx(shift).margin(1e-9));
    }
}

TEST_CASE("limit lifting with prescribed jumps") {
    Domain d = make_disk(1.0, 16, 256);

    SECTION("antipodal +1/+1") {
        VortexSet vs;
        vs.items = {{0.0, 1}, {kPi, 1}};
        BVLimitLifting phi0 = bv_limit_lifting(d, vs);
        BoundaryLifting g = tangent_lifting(d);
        int nb = d.num_boundary();
        // e^{i phi0} tangent: phi0 - g is a multiple of pi at every node
        for (int j = 0; j < nb; ++j) {
            double q = (phi0.values[j] - g.values[j]) / kPi;
            REQUIRE(q == Catch::Approx(std::round(q)).margin(1e-12));
        }
        // away from the jumps the discrete slope is the curvature
        for (int j = 1; j + 1 < nb; ++j) {
            double s_mid = 0.5 * (d.boundary_s[j] + d.boundary_s[j + 1]);
            bool near_jump = std::abs(s_mid - kPi) < 0.1 || s_mid < 0.1 ||
                             s_mid > d.perimeter - 0.1;
            if (near_jump) continue;
            double slope = (phi0.values[j + 1] - phi0.values[j]) / d.boundary_ds[j];
            REQUIRE(slope == Catch::Approx(1.0).margin(1e-3));
        }
        // closure: curvature gains 2 pi around the loop, the jumps remove it
        double total = phi0.values[nb - 1] - phi0.values[0];
        double expected = (g.values[nb - 1] - g.values[0]) - 2.0 * kPi;
        REQUIRE(total == Catch::Approx(expected).margin(1e-10));
    }

    SECTION("contract violations") {
        VortexSet bad1;
        bad1.items = {{0.0, 2}, {kPi, 0}};  // zero multiplicity entry
        REQUIRE_THROWS_AS(bv_limit_lifting(d, bad1), Error);
        VortexSet bad2;
        bad2.items = {{0.0, 1}, {kPi, 2}};  // sum != 2
        REQUIRE_THROWS_AS(bv_limit_lifting(d, bad2), Error);
    }

    SECTION("single vortex of multiplicity 2") {
        VortexSet vs;
        vs.items = {{0.3, 2}};
        BVLimitLifting phi0 = bv_limit_lifting(d, vs);
        // one jump of -2 pi: the node just past s = 0.3 drops by ~2 pi
        int nb = d.num_boundary();
        int jmax = -1;
        double worst = 0.0;
        for (int j = 0; j + 1 < nb; ++j) {
            double inc = phi0.values[j + 1] - phi0.values[j];
            if (std::abs(inc) > worst) {
                worst = std::abs(inc);
                jmax = j;
            }
        }
        REQUIRE(worst == Catch::Approx(2.0 * kPi).margin(0.1));
        REQUIRE(d.boundary_s[jmax] <= 0.3);
        REQUIRE(d.boundary_s[jmax + 1] >= 0.3);
    }
}
