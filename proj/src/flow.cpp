#include "mkflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mkflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeOut {
    double k1, k2, f_tilde, rate, stiff;
    bool ok;
};

inline NodeOut kernel_node(const CurvatureSpec& spec, double tol_convex, double w,
                           double stiff_geom, const SymMat2& a_loc) {
    NodeOut o;
    const double mean = 0.5 * (a_loc.a11 + a_loc.a22);
    const double half = 0.5 * (a_loc.a11 - a_loc.a22);
    const double disc = std::sqrt(half * half + a_loc.a12 * a_loc.a12);
    o.k1 = mean - disc;
    o.k2 = mean + disc;
    if (!(o.k1 > tol_convex) || !std::isfinite(o.k2)) {
        o.ok = false;
        o.f_tilde = 0.0;
        o.rate = 0.0;
        o.stiff = 0.0;
        return o;
    }
    o.ok = true;
    const double f = f_star_n2(spec, o.k1, o.k2);
    double g1, g2, inv_f_alpha, dfp;
    f_star_grad_n2(spec, o.k1, o.k2, f, &g1, &g2);
    if (spec.alpha == 1.0) {
        const double inv_f = 1.0 / f;
        o.f_tilde = f;
        inv_f_alpha = inv_f;
        dfp = inv_f * inv_f;
    } else {
        o.f_tilde = std::pow(f, spec.alpha);
        inv_f_alpha = 1.0 / o.f_tilde;
        dfp = spec.alpha * std::pow(f, -spec.alpha - 1.0);
    }
    o.rate = -w * inv_f_alpha;
    o.stiff = dfp * g1 * stiff_geom; // g1 bounds the derivative spectrum
    return o;
}

// Per-field derivative tables; flat layout keeps the main kernel loop
// branch-free and vectorizable.
struct DerivTables {
    std::vector<double> fth, fth2, frho, frho2, frth;
    std::vector<double> fth_ghost;
};

void build_tables(const PolarGrid& g, const double* u, const double* gh, DerivTables& t,
                  bool parallel) {
    const int nr = g.n_rho, nth = g.n_theta;
    t.fth.resize(g.size());
    t.fth2.resize(g.size());
    t.frho.resize(g.size());
    t.frho2.resize(g.size());
    t.frth.resize(g.size());
    t.fth_ghost.resize(nth);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < nr; ++i) {
        const double* row = u + g.idx(i, 0);
        double* o1 = t.fth.data() + g.idx(i, 0);
        double* o2 = t.fth2.data() + g.idx(i, 0);
        o1[0] = (row[1] - row[nth - 1]) * g.inv_2s;
        o2[0] = (row[1] - 2.0 * row[0] + row[nth - 1]) * g.inv_4s2;
        for (int j = 1; j < nth - 1; ++j) {
            o1[j] = (row[j + 1] - row[j - 1]) * g.inv_2s;
            o2[j] = (row[j + 1] - 2.0 * row[j] + row[j - 1]) * g.inv_4s2;
        }
        o1[nth - 1] = (row[0] - row[nth - 2]) * g.inv_2s;
        o2[nth - 1] = (row[0] - 2.0 * row[nth - 1] + row[nth - 2]) * g.inv_4s2;
    }
    t.fth_ghost[0] = (gh[1] - gh[nth - 1]) * g.inv_2s;
    for (int j = 1; j < nth - 1; ++j) t.fth_ghost[j] = (gh[j + 1] - gh[j - 1]) * g.inv_2s;
    t.fth_ghost[nth - 1] = (gh[0] - gh[nth - 2]) * g.inv_2s;

    // Radial stencils of u and of the angular-derivative field. The
    // antipodal rule serves ring 0, the one-sided ghost stencils the
    // outermost ring.
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < nr; ++i) {
        const double* u0 = u + g.idx(i, 0);
        const double* t0 = t.fth.data() + g.idx(i, 0);
        double* d1 = t.frho.data() + g.idx(i, 0);
        double* d2 = t.frho2.data() + g.idx(i, 0);
        double* dr = t.frth.data() + g.idx(i, 0);
        if (i == nr - 1) {
            const double* um1 = u + g.idx(i - 1, 0);
            const double* um2 = u + g.idx(i - 2, 0);
            const double* tm1 = t.fth.data() + g.idx(i - 1, 0);
            for (int j = 0; j < nth; ++j) {
                d1[j] = g.bd1[0] * um1[j] + g.bd1[1] * u0[j] + g.bd1[2] * gh[j];
                d2[j] = g.bd2[0] * um2[j] + g.bd2[1] * um1[j] + g.bd2[2] * u0[j] +
                        g.bd2[3] * gh[j];
                dr[j] = g.bd1[0] * tm1[j] + g.bd1[1] * t0[j] + g.bd1[2] * t.fth_ghost[j];
            }
        } else if (i == 0) {
            const double* up = u + g.idx(1, 0);
            const double* tp = t.fth.data() + g.idx(1, 0);
            const int half = nth / 2;
            for (int j = 0; j < nth; ++j) {
                const int ja = j < half ? j + half : j - half;
                d1[j] = (up[j] - u0[ja]) * g.inv_2h;
                d2[j] = (up[j] - 2.0 * u0[j] + u0[ja]) * g.inv_h2;
                dr[j] = (tp[j] - t0[ja]) * g.inv_2h;
            }
        } else {
            const double* um = u + g.idx(i - 1, 0);
            const double* up = u + g.idx(i + 1, 0);
            const double* tm = t.fth.data() + g.idx(i - 1, 0);
            const double* tp = t.fth.data() + g.idx(i + 1, 0);
            for (int j = 0; j < nth; ++j) {
                d1[j] = (up[j] - um[j]) * g.inv_2h;
                d2[j] = (up[j] - 2.0 * u0[j] + um[j]) * g.inv_h2;
                dr[j] = (tp[j] - tm[j]) * g.inv_2h;
            }
        }
    }
}

RhsEval eval_impl(const FlowProblem& p, const DualState& s, bool parallel) {
    const PolarGrid& g = s.grid();
    if (!s.u_star.has_ghost()) throw StateError("eval_rhs: boundary ghost ring not populated");
    const int nr = g.n_rho, nth = g.n_theta;
    const double* u = s.u_star.v.data();
    const double* gh = s.u_star.ghost.data();

    DerivTables t;
    build_tables(g, u, gh, t, parallel);

    RhsEval e;
    e.rate = ScalarField(s.u_star.grid);
    double* rate = e.rate.v.data();

    double min_k = kInf, max_k = -kInf, f_min = kInf, f_max = -kInf, f_ring = kInf;
    double max_rhs = 0.0, stiff = 0.0;
    double a1min = kInf, a1max = -kInf, a2max = -kInf;
    int ok_all = 1, finite_all = 1;
    const bool fast = p.spec.alpha == 1.0 && (p.spec.beta == 1.0 || p.spec.k == p.spec.n);
    const double tol = p.tol_convex;

#pragma omp parallel for schedule(static) if (parallel)                                     \
    reduction(min : min_k, f_min, f_ring, a1min)                                            \
    reduction(max : max_k, f_max, max_rhs, stiff, a1max, a2max)                             \
    reduction(& : ok_all, finite_all)
    for (int i = 0; i < nr; ++i) {
        const std::size_t off = g.idx(i, 0);
        const double* fth = t.fth.data() + off;
        const double* fth2 = t.fth2.data() + off;
        const double* frho = t.frho.data() + off;
        const double* frho2 = t.frho2.data() + off;
        const double* frth = t.frth.data() + off;
        double* rrow = rate + off;
        const double w = g.w[i], w2 = g.w2[i], w3 = g.w3[i];
        const double ir = g.inv_rho[i], ir2 = g.inv_rho2[i];
        const double geom = g.stiff_geom[i];
        const bool last = i == nr - 1;

        if (fast) {
            // f_* = sqrt(k1 k2), alpha = 1: branch-free, vectorizable.
            for (int j = 0; j < nth; ++j) {
                const double a11 = w3 * frho2[j];
                const double a12 = w2 * ((frth[j] - fth[j] * ir) * ir);
                const double a22 = w * (fth2[j] * ir2 + frho[j] * ir);
                const double mean = 0.5 * (a11 + a22);
                const double half = 0.5 * (a11 - a22);
                const double disc = std::sqrt(half * half + a12 * a12);
                const double k1 = mean - disc, k2 = mean + disc;
                finite_all &= std::isfinite(k1) && std::isfinite(k2) ? 1 : 0;
                ok_all &= k1 > tol ? 1 : 0;
                const double k1s = std::max(k1, 1e-300), k2s = std::max(k2, 1e-300);
                const double f = std::sqrt(k1s * k2s);
                const double inv_f = 1.0 / f;
                const double r = -w * inv_f;
                const double g1 = 0.5 * f / k1s;
                const double st = inv_f * inv_f * g1 * geom;
                rrow[j] = r;
                min_k = std::min(min_k, k1);
                max_k = std::max(max_k, k2);
                a1min = std::min(a1min, fth[j]);
                a1max = std::max(a1max, fth[j]);
                a2max = std::max(a2max, fth2[j]);
                f_min = std::min(f_min, f);
                f_max = std::max(f_max, f);
                if (last) f_ring = std::min(f_ring, f);
                max_rhs = std::max(max_rhs, std::abs(r));
                stiff = std::max(stiff, st);
            }
        } else {
            for (int j = 0; j < nth; ++j) {
                const SymMat2 a{w3 * frho2[j], w2 * ((frth[j] - fth[j] * ir) * ir),
                                w * (fth2[j] * ir2 + frho[j] * ir)};
                const NodeOut o = kernel_node(p.spec, tol, w, geom, a);
                rrow[j] = o.rate;
                finite_all &= std::isfinite(o.k1) && std::isfinite(o.k2) ? 1 : 0;
                ok_all &= o.ok ? 1 : 0;
                min_k = std::min(min_k, o.k1);
                max_k = std::max(max_k, o.k2);
                a1min = std::min(a1min, fth[j]);
                a1max = std::max(a1max, fth[j]);
                a2max = std::max(a2max, fth2[j]);
                if (o.ok) {
                    f_min = std::min(f_min, o.f_tilde);
                    f_max = std::max(f_max, o.f_tilde);
                    if (last) f_ring = std::min(f_ring, o.f_tilde);
                    max_rhs = std::max(max_rhs, std::abs(o.rate));
                    stiff = std::max(stiff, o.stiff);
                }
            }
        }
    }
    if (!finite_all) {
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nth; ++j)
                if (!std::isfinite(e.rate.v[g.idx(i, j)]))
                    throw NumericError("eval_rhs: non-finite update", i, j);
        throw NumericError("eval_rhs: non-finite curvature");
    }

    e.convex_ok = ok_all != 0;
    e.min_kappa = min_k;
    e.max_kappa = max_k;
    e.f_tilde_min = f_min;
    e.f_tilde_max = f_max;
    e.f_tilde_ring_min = f_ring;
    e.max_abs_rhs = max_rhs;
    e.ang1_min = a1min;
    e.ang1_max = a1max;
    e.ang2_max = a2max;
    e.stiffness_max = stiff;
    if (!e.convex_ok) {
        // Locate the worst node for diagnostics (failure path only).
        double worst = kInf;
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nth; ++j) {
                const NodeDerivs d = node_derivs(s.u_star, i, j);
                const SymMat2 h = hessian_local(g, d, i);
                const SymMat2 a{g.w3[i] * h.a11, g.w2[i] * h.a12, g.w[i] * h.a22};
                const double k1 = a.eigenvalues().first;
                if (k1 < worst) {
                    worst = k1;
                    e.worst_i = i;
                    e.worst_j = j;
                }
            }
    }
    if (!std::isfinite(e.stiffness_max) && e.convex_ok)
        throw NumericError("eval_rhs: non-finite stiffness bound");
    return e;
}

} // namespace

RhsEval eval_rhs(const FlowProblem& p, const DualState& s) { return eval_impl(p, s, true); }

RhsEval eval_rhs_serial(const FlowProblem& p, const DualState& s) {
    // Independent reference: per-node recomputation through node_derivs.
    const PolarGrid& g = s.grid();
    if (!s.u_star.has_ghost()) throw StateError("eval_rhs: boundary ghost ring not populated");
    const auto& geom = g.stiff_geom;

    RhsEval e;
    e.rate = ScalarField(s.u_star.grid);
    e.min_kappa = kInf;
    e.max_kappa = -kInf;
    e.f_tilde_min = kInf;
    e.f_tilde_max = -kInf;
    e.f_tilde_ring_min = kInf;
    e.max_abs_rhs = 0.0;
    e.ang1_min = kInf;
    e.ang1_max = -kInf;
    e.ang2_max = -kInf;
    e.stiffness_max = 0.0;
    e.convex_ok = true;
    double worst = kInf;
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            const NodeDerivs d = node_derivs(s.u_star, i, j);
            const SymMat2 h = hessian_local(g, d, i);
            const SymMat2 a{g.w3[i] * h.a11, g.w2[i] * h.a12, g.w[i] * h.a22};
            const NodeOut o = kernel_node(p.spec, p.tol_convex, g.w[i], geom[i], a);
            if (!std::isfinite(o.k1))
                throw NumericError("eval_rhs: non-finite curvature", i, j);
            e.rate.v[g.idx(i, j)] = o.rate;
            if (!o.ok) {
                e.convex_ok = false;
                if (o.k1 < worst) {
                    worst = o.k1;
                    e.worst_i = i;
                    e.worst_j = j;
                }
            }
            e.min_kappa = std::min(e.min_kappa, o.k1);
            e.max_kappa = std::max(e.max_kappa, o.k2);
            e.ang1_min = std::min(e.ang1_min, d.d_th);
            e.ang1_max = std::max(e.ang1_max, d.d_th);
            e.ang2_max = std::max(e.ang2_max, d.d_th2);
            if (o.ok) {
                e.f_tilde_min = std::min(e.f_tilde_min, o.f_tilde);
                e.f_tilde_max = std::max(e.f_tilde_max, o.f_tilde);
                if (i == g.n_rho - 1) e.f_tilde_ring_min = std::min(e.f_tilde_ring_min, o.f_tilde);
                e.max_abs_rhs = std::max(e.max_abs_rhs, std::abs(o.rate));
                e.stiffness_max = std::max(e.stiffness_max, o.stiff);
            }
        }
    return e;
}

ScalarField rhs(const FlowProblem& p, const DualState& s) {
    RhsEval e = eval_rhs(p, s);
    if (!e.convex_ok)
        throw StepRejected("rhs: convexity violated", e.worst_i, e.worst_j, e.min_kappa);
    return std::move(e.rate);
}

std::vector<double> boundary_value(const FlowProblem& p, double t) {
    const PolarGrid& g = p.grid();
    const double shift = p.eps_eff() * g.w_boundary *
                         (1.0 - expansion_factor(p.spec.alpha, t));
    std::vector<double> out(g.n_theta);
    for (int j = 0; j < g.n_theta; ++j) out[j] = p.u0_star.ghost[j] + shift;
    return out;
}

double stable_dt(const FlowProblem& p, const DualState& s) {
    const RhsEval e = eval_rhs(p, s);
    if (!e.convex_ok)
        throw StepRejected("stable_dt: state not convex", e.worst_i, e.worst_j, e.min_kappa);
    return std::min(p.cfl_safety * 2.0 / e.stiffness_max, p.T / 100.0);
}

void apply_origin_filter(ScalarField& f, long step_index) {
    const PolarGrid& g = *f.grid;
    const int nth = g.n_theta;
    std::vector<int> due;
    for (int i = 0; i < g.n_rho; ++i) {
        const int pd = g.filter_period[i];
        if (pd > 0 && step_index % pd == 0) due.push_back(i);
    }
    if (due.empty()) return;

#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t q = 0; q < due.size(); ++q) {
        const int i = due[q];
        const auto& k = g.filter_kernel[i];
        std::vector<double> buf(2 * nth);
        double* row = f.v.data() + g.idx(i, 0);
        std::copy(row, row + nth, buf.begin());
        std::copy(row, row + nth, buf.begin() + nth);
        for (int j = 0; j < nth; ++j) {
            double acc = 0.0;
            const double* b = buf.data() + j;
            for (int d = 0; d < nth; ++d) acc = std::fma(k[d], b[d], acc);
            row[j] = acc;
        }
    }
}

namespace {

DualState heun_advance(const FlowProblem& p, const DualState& s, const RhsEval& k1, double dt,
                       long step_index, RhsEval* k_out) {
    const PolarGrid& g = s.grid();
    const std::size_t n = g.size();
    const double tn = s.t + dt;
    auto ghost_n = boundary_value(p, tn);

    DualState pred;
    pred.t = tn;
    pred.u_star = ScalarField(s.u_star.grid);
    for (std::size_t q = 0; q < n; ++q)
        pred.u_star.v[q] = s.u_star.v[q] + dt * k1.rate.v[q];
    pred.u_star.set_ghost(ghost_n);

    const RhsEval k2 = eval_rhs(p, pred);
    if (!k2.convex_ok)
        throw StepRejected("step: predictor lost convexity", k2.worst_i, k2.worst_j, k2.min_kappa);

    DualState out;
    out.t = tn;
    out.u_star = ScalarField(s.u_star.grid);
    const double half = 0.5 * dt;
    for (std::size_t q = 0; q < n; ++q)
        out.u_star.v[q] = s.u_star.v[q] + half * (k1.rate.v[q] + k2.rate.v[q]);
    out.u_star.set_ghost(std::move(ghost_n));
    apply_origin_filter(out.u_star, step_index);

    *k_out = eval_rhs(p, out);
    if (!k_out->convex_ok)
        throw StepRejected("step: update lost convexity", k_out->worst_i, k_out->worst_j,
                           k_out->min_kappa);
    return out;
}

void barrier_margins(const FlowProblem& p, const DualState& s, StepRecord* rec) {
    if (!p.has_barriers()) {
        rec->barrier_low_margin = std::numeric_limits<double>::quiet_NaN();
        rec->barrier_high_margin = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    const BarrierPair bp = barrier_pair(p.C0, p.C1, p.spec.alpha);
    const PolarGrid& g = s.grid();
    const double B = expansion_factor(p.spec.alpha, s.t);
    double lo = kInf, hi = kInf;
    for (int i = 0; i < g.n_rho; ++i) {
        const double lower = -(bp.a1 + 1.0) * B * g.w[i];
        const double upper = -bp.a0 * B * g.w[i];
        const double* row = s.u_star.v.data() + g.idx(i, 0);
        for (int j = 0; j < g.n_theta; ++j) {
            lo = std::min(lo, row[j] - lower);
            hi = std::min(hi, upper - row[j]);
        }
    }
    const double lower_b = -(bp.a1 + 1.0) * B * g.w_boundary;
    const double upper_b = -bp.a0 * B * g.w_boundary;
    for (int j = 0; j < g.n_theta; ++j) {
        lo = std::min(lo, s.u_star.ghost[j] - lower_b);
        hi = std::min(hi, upper_b - s.u_star.ghost[j]);
    }
    rec->barrier_low_margin = lo;
    rec->barrier_high_margin = hi;
}

StepRecord make_record(const FlowProblem& p, const DualState& s, const RhsEval& e, double dt) {
    StepRecord r;
    r.t = s.t;
    r.dt = dt;
    r.min_kappa_star = e.min_kappa;
    r.max_kappa_star = e.max_kappa;
    r.f_tilde_min = e.f_tilde_min;
    r.f_tilde_max = e.f_tilde_max;
    r.f_tilde_ring_min = e.f_tilde_ring_min;
    r.max_rhs = e.max_abs_rhs;
    r.ang1_min = e.ang1_min;
    r.ang1_max = e.ang1_max;
    r.ang2_max = e.ang2_max;
    double bsum = 0.0;
    for (double gv : s.u_star.ghost) bsum += gv;
    r.boundary_value = bsum / s.u_star.ghost.size();
    barrier_margins(p, s, &r);
    return r;
}

} // namespace

DualState step(const FlowProblem& p, const DualState& s, double dt) {
    if (dt < 0.0) throw ArgumentError("step: dt must be >= 0");
    if (dt == 0.0) return s;
    const RhsEval k1 = eval_rhs(p, s);
    if (!k1.convex_ok)
        throw StepRejected("step: state not convex", k1.worst_i, k1.worst_j, k1.min_kappa);
    RhsEval k_out;
    return heun_advance(p, s, k1, dt, 0, &k_out);
}

Trajectory run(const FlowProblem& p, std::span<const double> snapshot_times) {
    const PolarGrid& g = p.grid();
    for (std::size_t q = 0; q < snapshot_times.size(); ++q) {
        if (snapshot_times[q] < 0.0 || snapshot_times[q] > p.T)
            throw ArgumentError("run: snapshot time outside [0, T]");
        if (q > 0 && !(snapshot_times[q] > snapshot_times[q - 1]))
            throw ArgumentError("run: snapshot times must be strictly increasing");
    }

    Trajectory traj;
    traj.problem = p;

    DualState state;
    state.t = 0.0;
    state.u_star = p.u0_star;

    // The t = 0 snapshot always holds the raw initial data.
    traj.snapshots.push_back(state);
    std::size_t next_snap = 0;
    while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= 0.0) ++next_snap;

    apply_origin_filter(state.u_star, 0);
    RhsEval k1 = eval_rhs(p, state);
    if (!k1.convex_ok)
        throw IngestionError("run: initial state not strictly convex at node (" +
                             std::to_string(k1.worst_i) + "," + std::to_string(k1.worst_j) + ")");
    traj.initial = make_record(p, state, k1, 0.0);

    double dt_ctrl = p.cfl_safety * 2.0 / k1.stiffness_max;
    int streak = 0, consec_rej = 0;
    long step_index = 1;
    while (state.t < p.T) {
        const double dt = std::min({dt_ctrl, p.cfl_safety * 2.0 / k1.stiffness_max,
                                    p.T - state.t, p.T / 100.0});
        RhsEval k_new;
        DualState snew;
        try {
            snew = heun_advance(p, state, k1, dt, step_index, &k_new);
        } catch (const StepRejected& rej) {
            ++traj.steps_rejected;
            if (++consec_rej >= 20)
                throw NumericError("run: 20 consecutive step rejections at t=" +
                                       std::to_string(state.t) + ", worst node (" +
                                       std::to_string(rej.node_i()) + "," +
                                       std::to_string(rej.node_j()) +
                                       "), min kappa*=" + std::to_string(rej.min_kappa()),
                                   rej.node_i(), rej.node_j());
            dt_ctrl = 0.5 * dt;
            continue;
        }

        while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= snew.t) {
            const double ts = snapshot_times[next_snap];
            DualState snap;
            snap.t = ts;
            snap.u_star = ScalarField(state.u_star.grid);
            const double lam = (ts - state.t) / (snew.t - state.t);
            for (std::size_t q = 0; q < g.size(); ++q)
                snap.u_star.v[q] =
                    (1.0 - lam) * state.u_star.v[q] + lam * snew.u_star.v[q];
            snap.u_star.set_ghost(boundary_value(p, ts));
            traj.snapshots.push_back(std::move(snap));
            ++next_snap;
        }

        traj.records.push_back(make_record(p, snew, k_new, dt));
        state = std::move(snew);
        k1 = std::move(k_new);
        ++traj.steps_accepted;
        ++step_index;
        consec_rej = 0;
        if (++streak >= 10) {
            dt_ctrl = 1.2 * dt;
            streak = 0;
        }
    }
    return traj;
}

FlowProblem make_problem(const CurvatureSpec& spec, ScalarField u0_star, double T,
                         double strictify_eps, double cfl_safety, double tol_convex, double C0,
                         double C1) {
    spec.validate();
    if (spec.n != 2)
        throw ArgumentError("make_problem: the disk solver is two-dimensional; use radial_run "
                            "for higher ambient dimension");
    if (!u0_star.grid) throw ArgumentError("make_problem: field has no grid");
    const PolarGrid& g = *u0_star.grid;
    if (!(g.r > 0.5 && g.r < 1.0))
        throw ArgumentError("make_problem: ball radius must lie in (1/2, 1)");
    if (g.n_rho < 8 || g.n_theta < 16)
        throw ArgumentError("make_problem: solver needs n_rho >= 8 and n_theta >= 16");
    if (!(T > 0.0)) throw ArgumentError("make_problem: T must be > 0");
    if (!(cfl_safety > 0.0 && cfl_safety < 1.0))
        throw ArgumentError("make_problem: cfl_safety must be in (0,1)");
    if (!(strictify_eps >= 0.0 && strictify_eps <= 1.0))
        throw ArgumentError("make_problem: strictify_eps must be in [0,1]");
    if (!u0_star.has_ghost())
        throw ArgumentError("make_problem: initial data needs its rho = r ring value");

    FlowProblem p;
    p.spec = spec;
    p.T = T;
    p.strictify_eps = strictify_eps;
    p.cfl_safety = cfl_safety;
    p.tol_convex = tol_convex;
    p.C0 = C0;
    p.C1 = C1;

    for (double v : u0_star.v)
        if (!std::isfinite(v)) throw IngestionError("make_problem: non-finite initial data");
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j)
            if (!(u0_star.at(i, j) < 0.0))
                throw IngestionError("make_problem: u0* must be negative in the interior");

    if (p.has_barriers()) {
        for (int i = 0; i < g.n_rho; ++i) {
            const double lo = -std::sqrt(C1) * g.w[i], hi = -std::sqrt(C0) * g.w[i];
            for (int j = 0; j < g.n_theta; ++j) {
                const double v = u0_star.at(i, j);
                if (!(v > lo && v < hi))
                    throw IngestionError(
                        "make_problem: initial data violates the dual Conditions-A sandwich "
                        "at node (" + std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
        for (int j = 0; j < g.n_theta; ++j) {
            const double v = u0_star.ghost[j];
            if (!(v > -std::sqrt(C1) * g.w_boundary && v < -std::sqrt(C0) * g.w_boundary))
                throw IngestionError("make_problem: ring data violates the dual sandwich");
        }
    }

    DualState s0;
    s0.t = 0.0;
    s0.u_star = u0_star;
    const CurvatureField cf = dual_curvatures(s0);
    if (!(cf.min_kappa > 0.0))
        throw IngestionError("make_problem: u0* not strictly convex (min kappa* = " +
                             std::to_string(cf.min_kappa) + " at node (" +
                             std::to_string(cf.min_i) + "," + std::to_string(cf.min_j) + "))");

    // u0_hat* convexity. Its curvature matrix is the initial one shifted by
    // -eps_eff * I exactly, so the minimum shifts by -eps_eff; tolerate
    // discretization noise around zero (the exact-hyperboloid case).
    const double hat_min = cf.min_kappa - p.eps_eff();
    const double noise = 50.0 * g.h_rho * g.h_rho;
    if (hat_min < -noise) {
        const double suggestion = 0.9 * cf.min_kappa;
        throw IngestionError(
            "make_problem: u0_hat* = u0* + eps sqrt(1-|xi|^2) is not convex (margin " +
            std::to_string(hat_min) + "); suggested strictify_eps = " +
            std::to_string(suggestion));
    }

    // With a strictified schedule the upper barrier is a supersolution only
    // when its coefficient stays below eps on the moving boundary.
    if (p.has_barriers() && p.eps_eff() < 1.0) {
        const double a0 = std::sqrt(0.9 * std::min(C0, 1.0));
        if (!(p.eps_eff() > a0))
            throw IngestionError(
                "make_problem: strictify_eps must exceed the upper-barrier coefficient a0 = " +
                std::to_string(a0) + " for the barrier monitors to apply");
    }

    p.u0_hat_star = u0_star;
    const double eps = p.eps_eff();
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j) p.u0_hat_star.at(i, j) += eps * g.w[i];
    for (int j = 0; j < g.n_theta; ++j) p.u0_hat_star.ghost[j] += eps * g.w_boundary;

    p.u0_star = std::move(u0_star);
    return p;
}

} // namespace mkflow
