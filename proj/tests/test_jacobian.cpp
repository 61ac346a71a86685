#include <catch2/catch_amalgamated.hpp>

#include "bvlab/jacobian.hpp"

using namespace bvlab;

namespace {
VectorField2D identity_map(const Domain& d, double eps = 0.2, double eta = 0.4) {
    VectorField2D u;
    u.domain = &d;
    u.eps = eps;
    u.eta = eta;
    u.values.resize(d.nodes.size());
    for (size_t i = 0; i < d.nodes.size(); ++i) u.values[i] = d.nodes[i];
    return u;
}

std::vector<double> zeta_quadratic(const Domain& d) {
    std::vector<double> z(d.nodes.size());
    for (size_t i = 0; i < z.size(); ++i) z[i] = 0.5 * norm2(d.nodes[i]);
    return z;
}
}  // namespace

TEST_CASE("interior Jacobian of elementary maps") {
    Domain d = make_disk(1.0, 16, 64);
    VectorField2D u = identity_map(d);
    for (double j : interior_jacobian(u)) REQUIRE(j == Catch::Approx(1.0).margin(1e-12));

    for (auto& v : u.values) v = {0.3, -0.7};
    for (double j : interior_jacobian(u)) REQUIRE(j == Catch::Approx(0.0).margin(1e-14));

    for (size_t i = 0; i < u.values.size(); ++i) u.values[i] = {d.nodes[i].x, -d.nodes[i].y};
    for (double j : interior_jacobian(u)) REQUIRE(j == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("global Jacobian pairs constants to zero") {
    Domain d = make_disk(1.0, 16, 64);
    Rng rng(11);
    std::vector<double> ones(d.nodes.size(), 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
        double scale = 1.0 + std::abs(pair_global(u, zeta_quadratic(d)));
        REQUIRE(std::abs(pair_global(u, ones)) < 1e-10 * scale);
    }
}

TEST_CASE("identity-map pairing triple") {
    // <J(u), |x|^2/2> = -pi/2, int 2 jac zeta = +pi/2, boundary part = -pi
    Domain d = make_disk(1.0, 32, 128);
    VectorField2D u = identity_map(d);
    std::vector<double> z = zeta_quadratic(d);
    double pg = pair_global(u, z);
    double pi2 = pair_interior(u, z);
    double pb = pair_boundary(u, z);
    REQUIRE(pg == Catch::Approx(-kPi / 2.0).epsilon(5e-3));
    REQUIRE(pi2 == Catch::Approx(kPi / 2.0).epsilon(5e-3));
    REQUIRE(pb == Catch::Approx(-kPi).epsilon(5e-3));
    REQUIRE(pg - pi2 == Catch::Approx(pb).margin(1e-14));  // decomposition is exact

    std::vector<double> ones(d.nodes.size(), 1.0);
    REQUIRE(pair_boundary(u, ones) == Catch::Approx(-2.0 * kPi).epsilon(5e-3));
    REQUIRE(pair_boundary_line(u, ones) == Catch::Approx(-2.0 * kPi).epsilon(5e-3));

    // halving the mesh at least halves the quadrature error
    Domain d2 = make_disk(1.0, 64, 256);
    VectorField2D u2 = identity_map(d2);
    double err1 = std::abs(pair_global(u, z) + kPi / 2.0);
    double err2 = std::abs(pair_global(u2, zeta_quadratic(d2)) + kPi / 2.0);
    REQUIRE(err2 <= std::max(0.6 * err1, 1e-12));
}

TEST_CASE("boundary-vanishing test functions reduce to the interior Jacobian") {
    Domain d = make_disk(1.0, 32, 128);
    TestDictionary dict = default_dictionary(d, 8, 2);
    Rng rng(3);
    VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
    int found = 0;
    for (const auto& f : dict.entries) {
        if (!f.vanishes_on_boundary) continue;
        ++found;
        double pg = pair_global(u, f.values);
        double pi2 = pair_interior(u, f.values);
        REQUIRE(pg == Catch::Approx(pi2).margin(0.03 * (1.0 + std::abs(pg))));
    }
    REQUIRE(found >= 4);
}

TEST_CASE("unit-length fields: tangential-derivative form") {
    Domain d = make_disk(1.0, 48, 192);
    std::vector<double> phi(d.nodes.size());
    for (size_t i = 0; i < phi.size(); ++i)
        phi[i] = 0.8 * d.nodes[i].x - 0.3 * d.nodes[i].y + 0.4;
    VectorField2D u = exp_field(d, phi, 0.2, 0.4);

    // interior Jacobian vanishes up to interpolation error
    double worst = 0.0;
    for (double j : interior_jacobian(u)) worst = std::max(worst, std::abs(j));
    REQUIRE(worst < 5e-3);

    // <J(u), zeta> = -int d_tau phi zeta ds for the smooth lifting
    std::vector<double> z = zeta_quadratic(d);
    double pg = pair_global(u, z);
    double line = 0.0;
    int nb = d.num_boundary();
    for (int j = 0; j < nb; ++j) {
        int a = d.boundary_node[j], b = d.boundary_node[(j + 1) % nb];
        double dphi = phi[b] - phi[a];
        line -= dphi * 0.5 * (z[a] + z[b]);
    }
    REQUIRE(pg == Catch::Approx(line).margin(0.02 * (1.0 + std::abs(pg))));
}

TEST_CASE("invariances of jac and the global Jacobian") {
    Domain d = make_disk(1.0, 24, 96);
    Rng rng(17);
    VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
    std::vector<double> z = zeta_quadratic(d);

    // multiplication by a fixed unit complex number
    double alpha = 0.77;
    VectorField2D r = u;
    for (auto& v : r.values)
        v = {std::cos(alpha) * v.x - std::sin(alpha) * v.y,
             std::sin(alpha) * v.x + std::cos(alpha) * v.y};
    REQUIRE(pair_global(r, z) == Catch::Approx(pair_global(u, z)).margin(1e-10));
    REQUIRE(pair_interior(r, z) == Catch::Approx(pair_interior(u, z)).margin(1e-10));

    // jac is invariant under adding a fixed vector; J is not
    VectorField2D t = u;
    for (auto& v : t.values) v += Vec2{0.4, -0.2};
    REQUIRE(pair_interior(t, z) == Catch::Approx(pair_interior(u, z)).margin(1e-11));

    std::vector<double> phi(d.nodes.size());
    for (size_t i = 0; i < phi.size(); ++i) phi[i] = d.nodes[i].x;  // d_tau sin(phi) != 0
    VectorField2D e = exp_field(d, phi, 0.2, 0.4);
    VectorField2D e1 = e;
    for (auto& v : e1.values) v += Vec2{1.0, 0.0};
    REQUIRE(std::abs(pair_global(e1, z) - pair_global(e, z)) > 1e-3);
}

TEST_CASE("dual norm semantics") {
    Domain d = make_disk(1.0, 16, 64);
    TestDictionary dict = default_dictionary(d, 8, 2);
    for (const auto& f : dict.entries) {
        REQUIRE(f.grad_sup <= 1.0 + 1e-10);
        if (f.vanishes_on_boundary)
            for (int j = 0; j < d.num_boundary(); ++j)
                REQUIRE(f.values[d.boundary_node[j]] == 0.0);
    }
    Rng rng(9);
    VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
    REQUIRE(dual_norm_diff(u, u, dict) == 0.0);

    // monotone under dictionary inclusion
    VectorField2D v = random_smooth_field(d, rng, 0.2, 0.5);
    TestDictionary small;
    small.entries.push_back(dict.entries[0]);
    REQUIRE(dual_norm_diff(u, v, small) <= dual_norm_diff(u, v, dict) + 1e-15);

    TestDictionary empty;
    REQUIRE_THROWS_AS(dual_norm_diff(u, v, empty), Error);
}

TEST_CASE("interior stability inequality") {
    Domain d = make_disk(1.0, 24, 96);
    TestDictionary dict = default_dictionary(d, 8, 2);
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
        VectorField2D v = random_smooth_field(d, rng, 0.2, 0.5);
        InteriorStabilityReport rep = stability_check_interior(u, v, dict);
        double scale = 1.0 + rep.t_plain;
        REQUIRE(rep.worst_margin_mean_free >= -1e-6 * scale);
        REQUIRE(rep.worst_margin_plain >= rep.worst_margin_mean_free - 1e-12 * scale);
    }

    // u = v: both sides vanish
    VectorField2D u = random_smooth_field(d, rng, 0.2, 0.5);
    InteriorStabilityReport same = stability_check_interior(u, u, dict);
    REQUIRE(same.t_plain == 0.0);

    // adding a constant: interior pairings unchanged, mean-free bound unchanged
    VectorField2D w = u;
    for (auto& val : w.values) val += Vec2{0.8, 0.1};
    InteriorStabilityReport shifted = stability_check_interior(u, w, dict);
    REQUIRE(shifted.t_mean_free < 1e-10);
    REQUIRE(shifted.t_plain > 0.1);
    REQUIRE(shifted.worst_margin_mean_free >= -1e-8);
}

TEST_CASE("global stability: vanishing perturbations") {
    Domain d = make_disk(1.0, 24, 96);
    TestDictionary dict = default_dictionary(d, 8, 2);
    Rng rng(13);
    std::vector<double> phi(d.nodes.size());
    for (size_t i = 0; i < phi.size(); ++i) phi[i] = 0.6 * d.nodes[i].y;
    VectorField2D v = exp_field(d, phi, 0.2, 0.4);
    VectorField2D pert = random_smooth_field(d, rng, 0.2, 0.4);

    GlobalStabilitySample same = stability_check_global(v, v, dict);
    REQUIRE(same.t == 0.0);
    REQUIRE(same.lhs == 0.0);

    double prev_lhs = 1e300;
    for (double amp : {0.3, 0.1, 0.03, 0.01}) {
        VectorField2D u = v;
        for (size_t i = 0; i < u.values.size(); ++i) u.values[i] += amp * pert.values[i];
        GlobalStabilitySample s = stability_check_global(u, v, dict);
        REQUIRE(s.lhs < prev_lhs + 1e-12);
        REQUIRE(s.lhs <= s.t + 20.0 * std::sqrt(s.t));  // generous family constant
        prev_lhs = s.lhs;
    }
    REQUIRE(prev_lhs < 0.05);

    VectorField2D big = v;
    for (auto& val : big.values) val = 1.5 * val;
    REQUIRE_THROWS_AS(stability_check_global(v, big, dict), Error);
}

TEST_CASE("boundary vortex detector on synthetic traces") {
    Domain d = make_disk(1.0, 8, 512);
    BoundaryLifting g = tangent_lifting(d);
    double width = 0.05;
    auto smooth_step = [&](double x) { return 0.5 * (1.0 + std::tanh(x / width)); };
    auto make_trace_field = [&](const std::vector<std::pair<double, int>>& vortices) {
        VectorField2D u;
        u.domain = &d;
        u.eps = 0.02;
        u.eta = 0.01;
        u.values.assign(d.nodes.size(), Vec2{1.0, 0.0});
        for (int j = 0; j < d.num_boundary(); ++j) {
            double psi = g.values[j];
            for (auto& [a, mult] : vortices) {
                double rel = d.boundary_s[j] - a;
                // place the smooth drop periodically
                rel = std::remainder(rel, d.perimeter);
                psi -= kPi * mult * smooth_step(rel);
            }
            u.values[d.boundary_node[j]] = {std::cos(psi), std::sin(psi)};
        }
        return u;
    };

    SECTION("two simple vortices") {
        VectorField2D u = make_trace_field({{1.0, 1}, {4.0, 1}});
        VortexSet vs = detect_boundary_vortices(u, 0.5, 0.2);
        REQUIRE(vs.items.size() == 2);
        std::sort(vs.items.begin(), vs.items.end(),
                  [](auto& a, auto& b) { return a.s < b.s; });
        REQUIRE(vs.items[0].d == 1);
        REQUIRE(vs.items[1].d == 1);
        REQUIRE(vs.items[0].s == Catch::Approx(1.0).margin(0.1));
        REQUIRE(vs.items[1].s == Catch::Approx(4.0).margin(0.1));
    }

    SECTION("multiplicity two at one point") {
        VectorField2D u = make_trace_field({{2.0, 2}});
        VortexSet vs = detect_boundary_vortices(u, 0.5, 0.2);
        REQUIRE(vs.items.size() == 1);
        REQUIRE(vs.items[0].d == 2);
        REQUIRE(vs.items[0].s == Catch::Approx(2.0).margin(0.1));
    }

    SECTION("signed multiplicities summing to two") {
        VectorField2D u = make_trace_field({{0.5, -1}, {2.5, 2}, {4.5, 1}});
        VortexSet vs = detect_boundary_vortices(u, 0.5, 0.2);
        REQUIRE(vs.items.size() == 3);
        int total = 0;
        for (auto& v : vs.items) total += v.d;
        REQUIRE(total == 2);
    }

    SECTION("constant field is out-of-model") {
        VectorField2D u;
        u.domain = &d;
        u.eps = 0.02;
        u.eta = 0.01;
        u.values.assign(d.nodes.size(), Vec2{1.0, 0.0});
        REQUIRE_THROWS_AS(detect_boundary_vortices(u, 0.5, 0.2), Error);
    }

    SECTION("unresolved core rejected") {
        VectorField2D u = make_trace_field({{1.0, 1}, {4.0, 1}});
        u.values[d.boundary_node[5]] = {0.1, 0.0};
        try {
            detect_boundary_vortices(u, 0.5, 0.2);
            FAIL("expected unresolved-core");
        } catch (const Error& e) {
            REQUIRE(e.category() == "unresolved-core");
        }
    }
}

TEST_CASE("escaping vortex fixture") {
    Domain d = escaping_vortex_domain(48, 512);
    double eps = 0.02;
    VectorField2D u = build_escaping_vortex(d, eps);
    std::vector<double> ones(d.nodes.size(), 1.0);

    // <J_bd(u), 1> = -2 pi deg(u; boundary) = 2 pi
    double jbd = pair_boundary(u, ones);
    REQUIRE(jbd == Catch::Approx(2.0 * kPi).epsilon(0.03));

    // |u - 1|^2 = O(eps^2)
    VectorField2D one = u;
    for (auto& v : one.values) v = {1.0, 0.0};
    double l2a = l2_distance(u, one);
    VectorField2D u2 = build_escaping_vortex(d, eps / 2.0);
    double l2b = l2_distance(u2, one);
    double Ca = l2a * l2a / (eps * eps), Cb = l2b * l2b / (eps * eps / 4.0);
    REQUIRE(Cb < 3.0 * Ca);
    REQUIRE(Ca < 3.0 * Cb);

    // the global Jacobian of the escaping family decays; its boundary part does not
    TestDictionary dict = default_dictionary(d, 8, 2);
    double na = dual_norm_diff(u, one, dict);
    double nb = dual_norm_diff(u2, one, dict);
    REQUIRE(nb < na);
}
