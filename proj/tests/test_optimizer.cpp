#include <catch2/catch_amalgamated.hpp>

#include "bvlab/renorm.hpp"

using namespace bvlab;

TEST_CASE("optimizer configuration validation") {
    MinimizeConfig bad;
    bad.ls_backtrack = 1.5;
    REQUIRE_THROWS_AS(bad.check(), Error);
    bad = MinimizeConfig{};
    bad.grad_tol = -1.0;
    REQUIRE_THROWS_AS(bad.check(), Error);

    Schedule s;
    s.eps_list = {0.1, 0.2};
    REQUIRE_THROWS_AS(s.stages(), Error);
    s.eps_list = {0.1, 0.05};
    s.eta_list = {0.2, 0.2};  // eta >= eps
    REQUIRE_THROWS_AS(s.stages(), Error);
    s.eta_list.clear();
    auto st = s.stages();
    REQUIRE(st[0].second == Catch::Approx(1e-3));
}

TEST_CASE("descent basics") {
    Domain d = make_disk(1.0, 16, 64);
    MinimizeConfig cfg;
    cfg.grad_tol = 1e-5;
    cfg.max_iters = 800;

    Rng rng(4);
    VectorField2D u0 = random_smooth_field(d, rng, 0.3, 0.5, 3, 0.8);
    MinimizeResult res = minimize(u0, cfg);
    REQUIRE(res.energy.total <= energy(u0).total + 1e-12);
    REQUIRE((res.status == MinimizeStatus::Converged || res.grad_norm <= 10 * cfg.grad_tol));

    // a converged point is returned unchanged with zero iterations
    MinimizeResult again = minimize(res.field, cfg);
    if (res.status == MinimizeStatus::Converged) {
        REQUIRE(again.iters == 0);
        for (size_t i = 0; i < res.field.values.size(); ++i) {
            REQUIRE(again.field.values[i].x == res.field.values[i].x);
            REQUIRE(again.field.values[i].y == res.field.values[i].y);
        }
    }

    // determinism: identical runs are bitwise identical
    MinimizeResult r1 = minimize(u0, cfg);
    MinimizeResult r2 = minimize(u0, cfg);
    REQUIRE(r1.iters == r2.iters);
    for (size_t i = 0; i < r1.field.values.size(); ++i) {
        REQUIRE(r1.field.values[i].x == r2.field.values[i].x);
        REQUIRE(r1.field.values[i].y == r2.field.values[i].y);
    }
}

TEST_CASE("initial fields") {
    Domain d = make_disk(1.0, 16, 64);
    VectorField2D c = init_field(d, "constant", 0, 0.1, 1e-3);
    for (auto& v : c.values) {
        REQUIRE(v.x == 1.0);
        REQUIRE(v.y == 0.0);
    }
    VectorField2D r1 = init_field(d, "random", 77, 0.1, 1e-3);
    VectorField2D r2 = init_field(d, "random", 77, 0.1, 1e-3);
    for (size_t i = 0; i < r1.values.size(); ++i) {
        REQUIRE(r1.values[i].x == r2.values[i].x);
        REQUIRE(r1.values[i].y == r2.values[i].y);
    }
    VectorField2D t = init_field(d, "tangent-like", 0, 0.1, 1e-3);
    int nb = d.num_boundary();
    for (int j = 0; j < nb; ++j) {
        Vec2 v = t.values[d.boundary_node[j]];
        REQUIRE(std::abs(dot(v, d.boundary_nu[j])) < 1e-12);
    }
    REQUIRE_THROWS_AS(init_field(d, "bogus", 0, 0.1, 1e-3), Error);

    // ansatz field is tangent except near the two prescribed angles
    VectorField2D a = init_field(d, "two-vortex-ansatz", 0, 0.05, 1e-4);
    int aligned = 0, total = 0;
    for (int j = 0; j < nb; ++j) {
        double s = d.boundary_s[j];
        double gap0 = std::min(s, d.perimeter - s);
        double gap1 = std::abs(s - kPi);
        if (std::min(gap0, gap1) < 0.5) continue;
        Vec2 v = a.values[d.boundary_node[j]];
        ++total;
        if (std::abs(dot(v, d.boundary_nu[j])) < 0.2) ++aligned;
    }
    REQUIRE(total > 0);
    REQUIRE(aligned == total);
}

TEST_CASE("constant start relaxes to two simple boundary vortices") {
    Domain d = make_disk(1.0, 40, 192, 1.3);
    MinimizeConfig cfg;
    cfg.grad_tol = 2e-4;
    cfg.max_iters = 4000;
    VectorField2D u0 = init_constant(d, 0.1, 1e-3);
    MinimizeResult res = minimize(u0, cfg);
    REQUIRE(res.energy.total < energy(u0).total);

    VortexSet vs = detect_boundary_vortices(res.field);
    REQUIRE(vs.items.size() == 2);
    REQUIRE(vs.items[0].d == 1);
    REQUIRE(vs.items[1].d == 1);
    double gap = std::abs(vs.items[0].s - vs.items[1].s);
    gap = std::min(gap, d.perimeter - gap);
    REQUIRE(gap == Catch::Approx(kPi).margin(0.1));
}

TEST_CASE("continuation warm starts and drift") {
    Domain d = make_disk(1.0, 40, 192, 1.3);
    MinimizeConfig cfg;
    cfg.grad_tol = 2e-4;
    cfg.max_iters = 4000;

    Schedule s;
    s.eps_list = {0.1, 0.07};
    VectorField2D u0 = init_constant(d, 0.1, 1e-3);
    auto recs = continuation(u0, s, cfg);
    REQUIRE(recs.size() == 2);

    // single-entry schedule reproduces plain minimize
    Schedule s1;
    s1.eps_list = {0.1};
    auto rec1 = continuation(u0, s1, cfg);
    MinimizeResult direct = minimize(u0, cfg);
    REQUIRE(rec1[0].result.energy.total == Catch::Approx(direct.energy.total).margin(1e-12));

    // vortex positions drift little between consecutive converged stages
    VortexSet v1 = detect_boundary_vortices(recs[0].result.field);
    VortexSet v2 = detect_boundary_vortices(recs[1].result.field);
    REQUIRE(v1.items.size() == v2.items.size());
    std::sort(v1.items.begin(), v1.items.end(), [](auto& a, auto& b) { return a.s < b.s; });
    std::sort(v2.items.begin(), v2.items.end(), [](auto& a, auto& b) { return a.s < b.s; });
    for (size_t k = 0; k < v1.items.size(); ++k) {
        double drift = std::abs(v1.items[k].s - v2.items[k].s);
        drift = std::min(drift, d.perimeter - drift);
        REQUIRE(drift < 0.1);
    }
}
