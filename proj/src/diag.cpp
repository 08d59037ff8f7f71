#include "mkflow/diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mkflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

RescaledFrame rescale_one(const FlowProblem& p, const DualState& snap) {
    const PolarGrid& g = *snap.u_star.grid;
    const double alpha = p.spec.alpha;
    const double B = expansion_factor(alpha, snap.t);

    RescaledFrame fr;
    fr.t = snap.t;
    fr.tau_tilde = rescaled_time(alpha, snap.t);

    fr.u_tilde_star = ScalarField(snap.u_star.grid);
    const double inv_B = 1.0 / B;
    for (std::size_t q = 0; q < g.size(); ++q) fr.u_tilde_star.v[q] = snap.u_star.v[q] * inv_B;
    std::vector<double> gh(g.n_theta);
    for (int j = 0; j < g.n_theta; ++j) gh[j] = snap.u_star.ghost[j] * inv_B;
    fr.u_tilde_star.set_ghost(std::move(gh));

    DualState st;
    st.t = snap.t;
    st.u_star = fr.u_tilde_star;
    const HyperbolicLift lift = hyperbolic_lift(st);
    fr.v_tilde = lift.v;
    fr.Lambda_tilde = lift.Lambda;

    fr.f_neg_alpha = ScalarField(snap.u_star.grid);
    fr.phi = ScalarField(snap.u_star.grid);
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            const std::size_t id = g.idx(i, j);
            const auto [k1, k2] = fr.Lambda_tilde[id].eigenvalues();
            double fna = std::numeric_limits<double>::quiet_NaN();
            if (k1 > 0.0) {
                const double f = f_star_n2(p.spec, k1, k2);
                fna = (alpha == 1.0) ? 1.0 / f : std::pow(f, -alpha);
            }
            fr.f_neg_alpha.v[id] = fna;
            fr.phi.v[id] = fna + fr.v_tilde.v[id];
        }
    return fr;
}
} // namespace

std::vector<RescaledFrame> rescale(const Trajectory& traj, std::span<const double> frame_times) {
    if (traj.snapshots.empty()) throw ArgumentError("rescale: trajectory has no snapshots");
    const double t_lo = traj.snapshots.front().t;
    const double t_hi = traj.snapshots.back().t;

    std::vector<RescaledFrame> out;
    out.reserve(frame_times.size());
    for (double ft : frame_times) {
        if (ft < t_lo - 1e-12 || ft > t_hi + 1e-12)
            throw ArgumentError("rescale: frame time " + std::to_string(ft) +
                                " outside trajectory span");
        // Bracketing snapshots; exact hits are the common case.
        std::size_t hi = 0;
        while (hi + 1 < traj.snapshots.size() && traj.snapshots[hi].t < ft - 1e-12) ++hi;
        const DualState& b = traj.snapshots[hi];
        if (std::abs(b.t - ft) <= 1e-12 || hi == 0) {
            out.push_back(rescale_one(traj.problem, b));
            continue;
        }
        const DualState& a = traj.snapshots[hi - 1];
        DualState mid;
        mid.t = ft;
        mid.u_star = ScalarField(a.u_star.grid);
        const double lam = (ft - a.t) / (b.t - a.t);
        for (std::size_t q = 0; q < mid.u_star.v.size(); ++q)
            mid.u_star.v[q] = (1.0 - lam) * a.u_star.v[q] + lam * b.u_star.v[q];
        mid.u_star.set_ghost(boundary_value(traj.problem, ft));
        out.push_back(rescale_one(traj.problem, mid));
    }
    return out;
}

namespace {
double sup_on_compact(const ScalarField& f, double K_radius, bool absolute) {
    const PolarGrid& g = *f.grid;
    double sup = absolute ? 0.0 : -kInf;
    for (int i = 0; i < g.n_rho && g.rho[i] <= K_radius; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            const double v = f.at(i, j);
            sup = std::max(sup, absolute ? std::abs(v) : v);
        }
    return sup;
}
} // namespace

DecayFit phi_decay(std::span<const RescaledFrame> frames, double K_radius) {
    if (frames.size() < 5) throw ArgumentError("phi_decay: need at least 5 frames");
    const double r = frames.front().phi.grid->r;
    if (!(K_radius > 0.0 && K_radius <= 0.9 * r))
        throw ArgumentError("phi_decay: K_radius must be in (0, 0.9 r]");

    std::vector<double> taus, lsups;
    double last_tau = -kInf;
    bool any_above = false;
    for (const auto& fr : frames) {
        const double sup = sup_on_compact(fr.phi, K_radius, true);
        if (sup >= 1e-14) any_above = true;
        if (fr.tau_tilde - last_tau < 0.2) continue;
        last_tau = fr.tau_tilde;
        if (sup >= 1e-14) {
            taus.push_back(fr.tau_tilde);
            lsups.push_back(std::log(sup));
        }
    }
    DecayFit fit;
    if (!any_above) {
        fit.converged = true;
        return fit;
    }
    if (taus.size() < 2) throw ArgumentError("phi_decay: too few usable frames after spacing");
    const int n = static_cast<int>(taus.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int q = 0; q < n; ++q) {
        sx += taus[q];
        sy += lsups[q];
        sxx += taus[q] * taus[q];
        sxy += taus[q] * lsups[q];
    }
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.frames_used = n;
    return fit;
}

double hyperboloid_distance(const RescaledFrame& frame, double K_radius) {
    const PolarGrid& g = *frame.u_tilde_star.grid;
    if (!(K_radius > 0.0 && K_radius < g.r))
        throw ArgumentError("hyperboloid_distance: K_radius must be in (0, r)");
    double sup = 0.0;
    for (int i = 0; i < g.n_rho && g.rho[i] <= K_radius; ++i)
        for (int j = 0; j < g.n_theta; ++j)
            sup = std::max(sup, std::abs(frame.u_tilde_star.at(i, j) + g.w[i]));
    return sup;
}

BoundsReport monitor_bounds(const Trajectory& traj) {
    BoundsReport rep;
    const auto& recs = traj.records;
    if (recs.empty()) throw ArgumentError("monitor_bounds: trajectory has no records");
    const PolarGrid& g = traj.problem.grid();

    double ring_f_min = kInf, run_f_min = kInf, run_f_max = -kInf;
    double r_ang1_min = kInf, r_ang1_max = -kInf, r_ang2_max = -kInf;
    for (const auto& r : recs) {
        ring_f_min = std::min(ring_f_min, r.f_tilde_ring_min);
        run_f_min = std::min(run_f_min, r.f_tilde_min);
        run_f_max = std::max(run_f_max, r.f_tilde_max);
        r_ang1_min = std::min(r_ang1_min, r.ang1_min);
        r_ang1_max = std::max(r_ang1_max, r.ang1_max);
        r_ang2_max = std::max(r_ang2_max, r.ang2_max);
    }
    rep.parabolic_f_tilde_min = std::min(traj.initial.f_tilde_min, ring_f_min);
    rep.run_f_tilde_min = run_f_min;
    rep.f_lower_ok = run_f_min >= 0.95 * rep.parabolic_f_tilde_min;
    rep.f_hat_min = 1.0 / run_f_max;
    rep.f_hat_positive = std::isfinite(run_f_max) && rep.f_hat_min > 0.0;

    // Angular derivatives on the moving ring keep the t = 0 profile: the
    // schedule shifts the whole ring by a theta-independent amount.
    const auto& gh = traj.problem.u0_star.ghost;
    double ring_a1_min = kInf, ring_a1_max = -kInf, ring_a2_max = -kInf;
    for (int j = 0; j < g.n_theta; ++j) {
        const double a1 = stencil::th1(gh.data(), g.n_theta, j, g.inv_2s);
        const double a2 = stencil::th2(gh.data(), g.n_theta, j, g.inv_4s2);
        ring_a1_min = std::min(ring_a1_min, a1);
        ring_a1_max = std::max(ring_a1_max, a1);
        ring_a2_max = std::max(ring_a2_max, a2);
    }
    rep.ang1_parabolic_min = std::min(traj.initial.ang1_min, ring_a1_min);
    rep.ang1_parabolic_max = std::max(traj.initial.ang1_max, ring_a1_max);
    rep.ang2_parabolic_max = std::max(traj.initial.ang2_max, ring_a2_max);
    rep.ang1_run_min = r_ang1_min;
    rep.ang1_run_max = r_ang1_max;
    rep.ang2_run_max = r_ang2_max;
    rep.ang_scale = std::max({1.0, std::abs(rep.ang1_parabolic_min),
                              std::abs(rep.ang1_parabolic_max)});
    const double slack = 1e-6 * rep.ang_scale;
    rep.ang1_ok = r_ang1_max <= rep.ang1_parabolic_max + slack &&
                  r_ang1_min >= rep.ang1_parabolic_min - slack;
    rep.ang2_ok = r_ang2_max <= rep.ang2_parabolic_max +
                                    1e-6 * std::max(1.0, std::abs(rep.ang2_parabolic_max));

    rep.monotone_decreasing = true;
    for (std::size_t q = 1; q < traj.snapshots.size(); ++q) {
        const auto& a = traj.snapshots[q - 1].u_star.v;
        const auto& b = traj.snapshots[q].u_star.v;
        if (traj.snapshots[q].t <= traj.snapshots[q - 1].t) continue;
        for (std::size_t m = 0; m < a.size(); ++m)
            if (!(b[m] < a[m])) {
                rep.monotone_decreasing = false;
                break;
            }
        if (!rep.monotone_decreasing) break;
    }
    return rep;
}

ScalarField angular_derivative(const ScalarField& f, int k, int l) {
    if (!((k == 1 && l == 2) || (k == 2 && l == 1)))
        throw ArgumentError("angular_derivative: (k,l) must be (1,2) or (2,1) in 2-D");
    const double sign = (k == 1) ? 1.0 : -1.0;
    const PolarGrid& g = *f.grid;
    ScalarField out(f.grid);
    for (int i = 0; i < g.n_rho; ++i) {
        const double* row = f.v.data() + g.idx(i, 0);
        for (int j = 0; j < g.n_theta; ++j)
            out.at(i, j) = sign * stencil::th1(row, g.n_theta, j, g.inv_2s);
    }
    if (f.has_ghost()) {
        std::vector<double> gh(g.n_theta);
        for (int j = 0; j < g.n_theta; ++j)
            gh[j] = sign * stencil::th1(f.ghost.data(), g.n_theta, j, g.inv_2s);
        out.set_ghost(std::move(gh));
    }
    return out;
}

ConvergenceReport convergence_report(const Trajectory& traj,
                                     std::span<const double> frame_times, double K_radius) {
    ConvergenceReport rep;
    rep.K_radius = K_radius;
    const auto frames = rescale(traj, frame_times);
    const PolarGrid& g = traj.problem.grid();

    double a0 = 0.0, a1 = 0.0;
    const bool have_barriers = traj.problem.has_barriers();
    if (have_barriers) {
        const BarrierPair bp = barrier_pair(traj.problem.C0, traj.problem.C1,
                                            traj.problem.spec.alpha);
        a0 = bp.a0;
        a1 = bp.a1;
    }
    rep.v_tilde_min = kInf;
    rep.v_tilde_max = -kInf;
    for (const auto& fr : frames) {
        rep.tau.push_back(fr.tau_tilde);
        rep.phi_sup.push_back(sup_on_compact(fr.phi, K_radius, true));
        rep.hyper_dist.push_back(hyperboloid_distance(fr, K_radius));
        double fmin = kInf, fmax = -kInf, vmin = kInf, vmax = -kInf;
        for (int i = 0; i < g.n_rho && g.rho[i] <= K_radius; ++i)
            for (int j = 0; j < g.n_theta; ++j) {
                const double fv = fr.f_neg_alpha.at(i, j);
                fmin = std::min(fmin, fv);
                fmax = std::max(fmax, fv);
                const double vv = fr.v_tilde.at(i, j);
                vmin = std::min(vmin, vv);
                vmax = std::max(vmax, vv);
            }
        rep.f_neg_alpha_min.push_back(fmin);
        rep.f_neg_alpha_max.push_back(fmax);
        rep.v_tilde_min = std::min(rep.v_tilde_min, vmin);
        rep.v_tilde_max = std::max(rep.v_tilde_max, vmax);
        if (have_barriers && !(vmin >= -(a1 + 1.0) - 1e-9 && vmax <= -a0 + 1e-9))
            rep.rescaled_sandwich_ok = false;
    }
    // A slope needs at least five frames and a usable tau~ span.
    if (frames.size() >= 5 &&
        frames.back().tau_tilde - frames.front().tau_tilde >= 0.85)
        rep.decay = phi_decay(frames, K_radius);
    rep.bounds = monitor_bounds(traj);
    return rep;
}

std::vector<double> pchip_interp(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> xq) {
    const int n = static_cast<int>(x.size());
    if (n < 2 || y.size() != x.size()) throw ArgumentError("pchip_interp: bad data");
    std::vector<double> h(n - 1), del(n - 1), d(n);
    for (int i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        if (!(h[i] > 0.0)) throw ArgumentError("pchip_interp: abscissae not increasing");
        del[i] = (y[i + 1] - y[i]) / h[i];
    }
    // Fritsch-Carlson derivative estimates.
    for (int i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    auto edge = [](double h0, double h1, double d0, double d1) {
        double de = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (de * d0 <= 0.0)
            de = 0.0;
        else if (d0 * d1 < 0.0 && std::abs(de) > 3.0 * std::abs(d0))
            de = 3.0 * d0;
        return de;
    };
    d[0] = (n == 2) ? del[0] : edge(h[0], h[1], del[0], del[1]);
    d[n - 1] = (n == 2) ? del[0] : edge(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);

    std::vector<double> out(xq.size());
    int seg = 0;
    for (std::size_t q = 0; q < xq.size(); ++q) {
        const double xv = xq[q];
        while (seg + 2 < n && x[seg + 1] < xv) ++seg;
        const double t = (xv - x[seg]) / h[seg];
        const double t2 = t * t, t3 = t2 * t;
        out[q] = y[seg] * (2 * t3 - 3 * t2 + 1) + h[seg] * d[seg] * (t3 - 2 * t2 + t) +
                 y[seg + 1] * (-2 * t3 + 3 * t2) + h[seg] * d[seg + 1] * (t3 - t2);
    }
    return out;
}

BoostResult lorentz_boost(const GraphPatch& p, double velocity, double C0, double C1) {
    if (!(std::abs(velocity) <= 0.9))
        throw ArgumentError("lorentz_boost: |velocity| must be <= 0.9");
    if (p.n1() < 4 || p.n2() < 1 || p.u.size() != p.n1() * p.n2())
        throw ArgumentError("lorentz_boost: malformed patch");
    const double gamma = 1.0 / std::sqrt(1.0 - velocity * velocity);

    const std::size_t n1 = p.n1(), n2 = p.n2();
    std::vector<std::vector<double>> xp(n2), up(n2);
    double lo = -kInf, hi = kInf;
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
        xp[i2].resize(n1);
        up[i2].resize(n1);
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
            const double uu = p.at(i1, i2);
            xp[i2][i1] = gamma * (p.x1[i1] - velocity * uu);
            up[i2][i1] = gamma * (uu - velocity * p.x1[i1]);
        }
        for (std::size_t i1 = 0; i1 + 1 < n1; ++i1)
            if (!(xp[i2][i1 + 1] > xp[i2][i1]))
                throw IngestionError(
                    "lorentz_boost: boosted line folds over (input not spacelike?) at x2 index " +
                    std::to_string(i2));
        lo = std::max(lo, xp[i2].front());
        hi = std::min(hi, xp[i2].back());
    }
    if (!(hi > lo)) throw IngestionError("lorentz_boost: empty overlap patch");

    BoostResult res;
    res.boosted.x1.resize(n1);
    for (std::size_t q = 0; q < n1; ++q)
        res.boosted.x1[q] = lo + (hi - lo) * static_cast<double>(q) / (n1 - 1);
    res.boosted.x2 = p.x2;
    res.boosted.u.resize(n1 * n2);
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
        const auto line = pchip_interp(xp[i2], up[i2], res.boosted.x1);
        for (std::size_t q = 0; q < n1; ++q) res.boosted.u[i2 * n1 + q] = line[q];
    }

    if (C0 > 0.0 && C1 > C0) {
        res.sandwich_violations = 0;
        res.margin_low = kInf;
        res.margin_high = kInf;
        for (std::size_t i2 = 0; i2 < n2; ++i2)
            for (std::size_t q = 0; q < n1; ++q) {
                const double x1v = res.boosted.x1[q], x2v = p.x2[i2];
                const double rr = x1v * x1v + x2v * x2v;
                const double uu = res.boosted.u[i2 * n1 + q];
                const double ml = uu - std::sqrt(rr + C0);
                const double mh = std::sqrt(rr + C1) - uu;
                res.margin_low = std::min(res.margin_low, ml);
                res.margin_high = std::min(res.margin_high, mh);
                if (!(ml > 0.0 && mh > 0.0)) ++res.sandwich_violations;
            }
    }
    return res;
}

} // namespace mkflow
