#pragma once

// Included from renorm.hpp (needs SingularHarmonicExtension / RenormQuadrature).

namespace bvlab {

struct RecoveryField {
    VectorField2D field;       // nodal unit-length field e^{i psi}
    EnergyBreakdown measured;  // quadrature-measured energy (penalty identically 0)
    double r_patch = 0.0;
    double local_margin = 0.0;  // sum of patch energies - pi N log(r_patch/eps)
    VortexSet vortices;
};

// Builds the matched-phase ansatz fields: the harmonic extension away from
// the vortices, with the local angle about each vortex replaced inside a
// patch by its core-smoothed version (shift 2 pi eps of the conjugate
// coordinate, tapered to zero at the patch rim so the phase stays continuous).
// Energies are measured by vortex-centered graded quadrature, so the sharp
// core scale never has to be resolved by the mesh.
class RecoveryBuilder {
public:
    RecoveryBuilder(const Domain& d, const VortexSet& vs)
        : d_(d), ext_(SingularHarmonicExtension::build(d, vs)), quad_(d_, ext_) {}

    double auto_patch_radius(double eps) const {
        double cap = std::min(quad_.R0(), 0.125 * d_.diameter);
        return std::min(10.0 * std::sqrt(eps), cap);
    }

    RecoveryField build(double eps, double eta, double r_patch = 0.0) const {
        if (r_patch <= 0.0) r_patch = auto_patch_radius(eps);
        require(r_patch > 10.0 * eps, "resolution",
                "patch radius must exceed 10 eps to separate core and far field");
        const double taper = 0.3;
        int N = static_cast<int>(ext_.pos.size());

        RecoveryField out;
        out.r_patch = r_patch;
        out.vortices = ext_.vortices;

        auto cut = [&](double rho) {
            if (rho <= (1.0 - taper) * r_patch) return 1.0;
            if (rho >= r_patch) return 0.0;
            return (r_patch - rho) / (taper * r_patch);
        };
        auto cutp = [&](double rho) {
            if (rho <= (1.0 - taper) * r_patch || rho >= r_patch) return 0.0;
            return -1.0 / (taper * r_patch);
        };
        auto to_local = [&](int k, const Vec2& x) {
            Vec2 rel = x - ext_.pos[k];
            double a = std::atan2(ext_.tau[k].y, ext_.tau[k].x);
            double ca = std::cos(-a), sa = std::sin(-a);
            return Vec2{ca * rel.x - sa * rel.y, sa * rel.x + ca * rel.y};
        };
        // Multiplicities above one are realised as |d| single transitions at
        // tangential offsets ~ 1/|log eps| (capped so they stay inside the
        // untapered core of the patch); this carries the quantised first-order
        // energy, the matched core constant is only claimed for |d| = 1.
        auto offsets_of = [&](int k) {
            int dmult = std::abs(ext_.vortices.items[k].d);
            std::vector<double> off;
            if (dmult == 1) {
                off.push_back(0.0);
            } else {
                double a = std::min(1.0 / std::abs(std::log(eps)),
                                    (1.0 - taper) * r_patch / (2.0 * dmult));
                for (int j = 1; j <= dmult; ++j) off.push_back(j * a);
            }
            return off;
        };
        // phase correction replacing d_k theta_k inside the patch
        auto omega = [&](int k, const Vec2& x) {
            Vec2 Z = to_local(k, x);
            double rho = norm(Z);
            double c = cut(rho);
            double Yc = Z.y + 2.0 * kPi * eps * c;
            double sgn = ext_.vortices.items[k].d > 0 ? 1.0 : -1.0;
            double acc = 0.0;
            for (double xo : offsets_of(k))
                acc += std::atan2(Yc, Z.x - c * xo) - std::atan2(Z.y, Z.x);
            return sgn * acc;
        };
        // gradient of the smoothed phase block sgn * sum_j atan2(Yc, X - c x_j)
        // (replaces d_k grad theta_k in the patch)
        auto grad_smooth = [&](int k, const Vec2& x) {
            Vec2 Z = to_local(k, x);
            double rho = norm(Z);
            double c = cut(rho), cp = cutp(rho);
            double Yc = Z.y + 2.0 * kPi * eps * c;
            double dcX = rho > 0.0 ? cp * Z.x / rho : 0.0;
            double dcY = rho > 0.0 ? cp * Z.y / rho : 0.0;
            double sgn = ext_.vortices.items[k].d > 0 ? 1.0 : -1.0;
            double fx = 0.0, fy = 0.0;
            for (double xo : offsets_of(k)) {
                double U = Z.x - c * xo;
                double dUX = 1.0 - xo * dcX, dUY = -xo * dcY;
                double dVX = 2.0 * kPi * eps * dcX, dVY = 1.0 + 2.0 * kPi * eps * dcY;
                double den = U * U + Yc * Yc;
                fx += (U * dVX - Yc * dUX) / den;
                fy += (U * dVY - Yc * dUY) / den;
            }
            fx *= sgn;
            fy *= sgn;
            double a = std::atan2(ext_.tau[k].y, ext_.tau[k].x);
            double ca = std::cos(a), sa = std::sin(a);
            return Vec2{ca * fx - sa * fy, sa * fx + ca * fy};
        };

        // nodal phase and unit field
        VectorField2D u;
        u.domain = &d_;
        u.eps = eps;
        u.eta = eta;
        u.values.resize(d_.nodes.size());
        for (size_t i = 0; i < d_.nodes.size(); ++i) {
            double psi = ext_.nodal_value(static_cast<int>(i));
            for (int k = 0; k < N; ++k)
                if (norm(d_.nodes[i] - ext_.pos[k]) < r_patch) psi += omega(k, d_.nodes[i]);
            u.values[i] = {std::cos(psi), std::sin(psi)};
        }
        out.field = std::move(u);

        // Dirichlet energy: far field + per-patch graded quadrature
        double dir = quad_.dirichlet_outside(r_patch);
        std::vector<double> patch_dir(N, 0.0);
        for (int k = 0; k < N; ++k) {
            patch_dir[k] = detail::annulus_quadrature(
                d_, ext_.pos[k], ext_.nu[k], 0.05 * eps, r_patch, [&](const Vec2& x) {
                    Vec2 g = ext_.w_grad_at(x) + grad_smooth(k, x);
                    for (int l = 0; l < N; ++l)
                        if (l != k)
                            g += static_cast<double>(ext_.vortices.items[l].d) *
                                 ext_.grad_theta(l, x);
                    return norm2(g);
                });
            dir += patch_dir[k];
        }

        // anchoring: graded arc quadrature around each vortex + the quiet rest
        auto trace_psi = [&](double s) {
            s = std::fmod(std::fmod(s, d_.perimeter) + d_.perimeter, d_.perimeter);
            Vec2 x = d_.shape.point(d_.param_of_arc(s));
            double acc = 0.0;
            for (int l = 0; l < N; ++l) acc += ext_.vortices.items[l].d * ext_.theta(l, x);
            // linear interpolation of the FEM part along the boundary
            int nb = d_.num_boundary();
            auto it = std::upper_bound(d_.boundary_s.begin(), d_.boundary_s.end(), s);
            int j = std::max(0, static_cast<int>(it - d_.boundary_s.begin()) - 1);
            int jn = (j + 1) % nb;
            double frac = (s - d_.boundary_s[j]) / d_.boundary_ds[j];
            acc += (1.0 - frac) * ext_.w[d_.boundary_node[j]] + frac * ext_.w[d_.boundary_node[jn]];
            for (int k = 0; k < N; ++k)
                if (norm(x - ext_.pos[k]) < r_patch) acc += omega(k, x);
            return acc;
        };
        auto sin2_miss = [&](double s) {
            auto [nu, tau] = d_.frame_at_arc(
                std::fmod(std::fmod(s, d_.perimeter) + d_.perimeter, d_.perimeter));
            double g = std::atan2(tau.y, tau.x);
            double v = std::sin(trace_psi(s) - g);
            return v * v;
        };
        double anc = 0.0;
        std::vector<double> patch_anc(N, 0.0);
        std::vector<std::pair<double, double>> patch_arcs;  // [s_lo, s_hi] per vortex
        for (int k = 0; k < N; ++k) {
            // arc half-extent where the chord reaches r_patch
            auto chord = [&](double delta) {
                double s = ext_.vortices.items[k].s + delta;
                s = std::fmod(std::fmod(s, d_.perimeter) + d_.perimeter, d_.perimeter);
                return norm(d_.shape.point(d_.param_of_arc(s)) - ext_.pos[k]);
            };
            auto extent = [&](double sign) {
                double lo = 0.0, hi = 0.45 * d_.perimeter;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (chord(sign * mid) < r_patch ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            };
            double ep = extent(+1.0), em = extent(-1.0);
            double s_k = ext_.vortices.items[k].s;
            patch_arcs.push_back({s_k - em, s_k + ep});
            double dmin = eps / 200.0;
            for (double sign : {+1.0, -1.0}) {
                double dmax = sign > 0 ? ep : em;
                int panels = std::max(6, static_cast<int>(std::ceil(std::log10(dmax / dmin) * 10)));
                for (int pnl = 0; pnl < panels; ++pnl) {
                    double a = dmin * std::pow(dmax / dmin, static_cast<double>(pnl) / panels);
                    double b = dmin * std::pow(dmax / dmin, static_cast<double>(pnl + 1) / panels);
                    patch_anc[k] += detail::gauss5(
                        [&](double delta) { return sin2_miss(s_k + sign * delta); }, a, b);
                }
            }
            // |delta| < dmin core sliver: sin^2 <= 1
            patch_anc[k] += 2.0 * dmin;
            anc += patch_anc[k];
        }
        int nb = d_.num_boundary();
        for (int j = 0; j < nb; ++j) {
            double s0 = d_.boundary_s[j], s1 = s0 + d_.boundary_ds[j];
            double mid = 0.5 * (s0 + s1);
            bool in_patch = false;
            for (auto& [lo, hi] : patch_arcs) {
                double rel = std::fmod(std::fmod(mid - lo, d_.perimeter) + d_.perimeter,
                                       d_.perimeter);
                if (rel < hi - lo) in_patch = true;
            }
            if (in_patch) continue;
            anc += detail::gauss5(sin2_miss, s0, s1);
        }
        anc /= 2.0 * kPi * eps;
        for (double& v : patch_anc) v /= 2.0 * kPi * eps;

        out.measured = EnergyBreakdown::make(dir, 0.0, anc);
        double local = 0.0;
        for (int k = 0; k < N; ++k) local += patch_dir[k] + patch_anc[k];
        out.local_margin = local - N * kPi * std::log(r_patch / eps);
        return out;
    }

    const SingularHarmonicExtension& extension() const { return ext_; }

private:
    const Domain& d_;
    SingularHarmonicExtension ext_;
    RenormQuadrature quad_;
};

inline RecoveryField recovery_field(const Domain& d, const VortexSet& vs, double eps, double eta,
                                    double r_patch = 0.0) {
    return RecoveryBuilder(d, vs).build(eps, eta, r_patch);
}

// --- Initial fields (full set) ------------------------------------------------

inline VectorField2D init_field(const Domain& d, const std::string& kind, std::uint64_t seed,
                                double eps, double eta, std::vector<double> ansatz_angles = {}) {
    if (kind == "constant") return init_constant(d, eps, eta);
    if (kind == "tangent-like") return init_tangent_like(d, eps, eta);
    if (kind == "random") return init_random(d, eps, eta, seed);
    if (kind == "two-vortex-ansatz") {
        if (ansatz_angles.empty()) ansatz_angles = {0.0, kPi};
        require(ansatz_angles.size() == 2, "invalid-argument",
                "two-vortex ansatz takes two angles");
        VortexSet vs;
        for (double a : ansatz_angles) {
            double frac = std::fmod(std::fmod(a, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi) / (2.0 * kPi);
            vs.items.push_back({frac * d.perimeter, 1});
        }
        return recovery_field(d, vs, eps, eta).field;
    }
    throw Error("invalid-argument", "unknown initial field kind: " + kind);
}

// --- Expansion sweep harness ---------------------------------------------------

struct SweepStageRecord {
    double eps = 0.0, eta = 0.0;
    EnergyBreakdown energy;
    VortexSet vortices;
    bool detected = false;  // false: carried from the input set (unresolved)
    int iters = 0;
    double grad_norm = 0.0;
    double recovery_mesh_total = 0.0;  // ansatz mesh energy for the comparison
    double local_margin = 0.0;
    double lower_slack = 0.0;  // (pi N |log eps| + W + N gamma0) - E_total
};

struct GammaReport {
    std::string mode;
    std::vector<SweepStageRecord> stages;
    double A = 0.0, B = 0.0;            // fit E = A |log eps| + B
    double A_pred = 0.0, B_pred = 0.0;  // pi sum|d|, W + N gamma0
    double fit_residual = 0.0;
    double W_used = 0.0;
    int N = 0;
    bool unit_multiplicities = true;
    double penalty_anchor_first = 0.0, penalty_anchor_max = 0.0;
    bool recovery_upper_ok = true;
};

struct SweepConfig {
    std::string mode = "recovery";  // "recovery" | "minimize"
    Schedule schedule;
    VortexSet vortices;  // recovery mode input / ansatz positions
    double r_patch = 0.0;
    MinimizeConfig opt;
    std::string init = "constant";
    double detect_window = 0.0;
    double detect_threshold = 0.2;
    bool compare_recovery = true;
};

namespace detail {

inline void fit_line(const std::vector<double>& x, const std::vector<double>& y, double& A,
                     double& B, double& resid) {
    size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    A = (n * sxy - sx * sy) / den;
    B = (sy - A * sx) / n;
    resid = 0.0;
    for (size_t i = 0; i < n; ++i) resid = std::max(resid, std::abs(y[i] - (A * x[i] + B)));
}

}  // namespace detail

inline GammaReport gamma_sweep(const Domain& d, const SweepConfig& cfg) {
    GammaReport rep;
    rep.mode = cfg.mode;
    auto stages = cfg.schedule.stages();
    require(stages.size() >= 3, "invalid-argument", "sweep needs at least three eps values");

    auto W_of = [&](const VortexSet& vs) {
        bool unit = true;
        for (auto& v : vs.items) unit = unit && (v.d == 1 || v.d == -1);
        if (!unit) return std::pair<double, bool>{0.0, false};
        if (d.shape.kind == BoundaryShape::Kind::Disk)
            return std::pair<double, bool>{w_disk(vs, d.shape.radius), true};
        return std::pair<double, bool>{w_numeric(d, vs).W, true};
    };

    if (cfg.mode == "recovery") {
        cfg.vortices.check(d.perimeter);
        RecoveryBuilder builder(d, cfg.vortices);
        double r_patch = cfg.r_patch > 0.0 ? cfg.r_patch
                                           : builder.auto_patch_radius(stages.front().first);
        auto [W, unit] = W_of(cfg.vortices);
        rep.W_used = W;
        rep.unit_multiplicities = unit;
        rep.N = static_cast<int>(cfg.vortices.items.size());
        int sum_abs = 0;
        for (auto& v : cfg.vortices.items) sum_abs += std::abs(v.d);
        rep.A_pred = kPi * sum_abs;
        rep.B_pred = unit ? W + rep.N * gamma0() : 0.0;

        for (auto& [eps, eta] : stages) {
            RecoveryField rf = builder.build(eps, eta, r_patch);
            SweepStageRecord rec;
            rec.eps = eps;
            rec.eta = eta;
            rec.energy = rf.measured;
            rec.local_margin = rf.local_margin;
            try {
                rec.vortices = detect_boundary_vortices(rf.field, cfg.detect_window,
                                                        cfg.detect_threshold);
                rec.detected = true;
            } catch (const Error&) {
                rec.vortices = cfg.vortices;  // cores unresolved at this eps on this mesh
                rec.detected = false;
            }
            if (unit)
                rec.lower_slack = (rep.A_pred * std::abs(std::log(eps)) + rep.B_pred) -
                                  rec.energy.total;
            rep.stages.push_back(std::move(rec));
        }
    } else if (cfg.mode == "minimize") {
        VectorField2D u0 = init_field(d, cfg.init, cfg.opt.seed, stages.front().first,
                                      stages.front().second);
        std::vector<StageRecord> run = continuation(u0, cfg.schedule, cfg.opt);
        for (auto& st : run) {
            SweepStageRecord rec;
            rec.eps = st.eps;
            rec.eta = st.eta;
            rec.energy = st.result.energy;
            rec.iters = st.result.iters;
            rec.grad_norm = st.result.grad_norm;
            try {
                rec.vortices = detect_boundary_vortices(st.result.field, cfg.detect_window,
                                                        cfg.detect_threshold);
                rec.detected = true;
            } catch (const Error& e) {
                throw Error(e.category(),
                            "vortex detection failed at eps = " + std::to_string(st.eps) + ": " +
                                e.what());
            }
            rep.stages.push_back(std::move(rec));
        }
        const VortexSet& final_vs = rep.stages.back().vortices;
        auto [W, unit] = W_of(final_vs);
        rep.W_used = W;
        rep.unit_multiplicities = unit;
        rep.N = static_cast<int>(final_vs.items.size());
        int sum_abs = 0;
        for (auto& v : final_vs.items) sum_abs += std::abs(v.d);
        rep.A_pred = kPi * sum_abs;
        rep.B_pred = unit ? W + rep.N * gamma0() : 0.0;

        if (cfg.compare_recovery) {
            RecoveryBuilder builder(d, final_vs);
            for (auto& rec : rep.stages) {
                RecoveryField rf = builder.build(rec.eps, rec.eta);
                rec.recovery_mesh_total = energy(rf.field).total;
                if (rec.energy.total > rec.recovery_mesh_total + 1e-9 * rec.recovery_mesh_total)
                    rep.recovery_upper_ok = false;
            }
        }
        if (unit)
            for (auto& rec : rep.stages)
                rec.lower_slack =
                    (rep.A_pred * std::abs(std::log(rec.eps)) + rep.B_pred) - rec.energy.total;
    } else {
        throw Error("invalid-argument", "unknown sweep mode: " + cfg.mode);
    }

    std::vector<double> xs, ys;
    for (auto& rec : rep.stages) {
        xs.push_back(std::abs(std::log(rec.eps)));
        ys.push_back(rec.energy.total);
    }
    detail::fit_line(xs, ys, rep.A, rep.B, rep.fit_residual);

    rep.penalty_anchor_first = rep.stages.front().energy.penalty +
                               rep.stages.front().energy.anchoring;
    for (auto& rec : rep.stages)
        rep.penalty_anchor_max =
            std::max(rep.penalty_anchor_max, rec.energy.penalty + rec.energy.anchoring);
    return rep;
}

}  // namespace bvlab
