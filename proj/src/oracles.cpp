#include "mkflow/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace mkflow {

double expansion_factor(double alpha, double t) {
    const double tt = t + 1.0 / (1.0 + alpha);
    return std::pow((1.0 + alpha) * tt, 1.0 / (1.0 + alpha));
}

double expansion_factor_dt(double alpha, double t) {
    const double tt = t + 1.0 / (1.0 + alpha);
    return std::pow((1.0 + alpha) * tt, 1.0 / (1.0 + alpha) - 1.0);
}

double rescaled_time(double alpha, double t) {
    const double tt = t + 1.0 / (1.0 + alpha);
    return std::log((1.0 + alpha) * tt) / (1.0 + alpha);
}

double time_from_rescaled(double alpha, double tau) {
    return std::exp((1.0 + alpha) * tau) / (1.0 + alpha) - 1.0 / (1.0 + alpha);
}

namespace {
double cap(double xi1, double xi2) {
    const double n2 = xi1 * xi1 + xi2 * xi2;
    if (n2 >= 1.0) throw DomainBoundaryError("special solution: |xi| >= 1");
    return std::sqrt(1.0 - n2);
}
} // namespace

double special_dual(double xi1, double xi2, double t, double alpha) {
    return -std::pow((1.0 + alpha) * t, 1.0 / (1.0 + alpha)) * cap(xi1, xi2);
}

double special_dual_shifted(double xi1, double xi2, double t, double alpha) {
    return -expansion_factor(alpha, t) * cap(xi1, xi2);
}

double special_primal(double x1, double x2, double t, double alpha) {
    const double b = std::pow((1.0 + alpha) * t, 2.0 / (1.0 + alpha));
    return std::sqrt(x1 * x1 + x2 * x2 + b);
}

double special_primal_shifted(double x1, double x2, double t, double alpha) {
    const double b = expansion_factor(alpha, t);
    return std::sqrt(x1 * x1 + x2 * x2 + b * b);
}

double BarrierPair::lower(double xi_norm2, double t) const {
    return -(a1 + 1.0) * expansion_factor(alpha, t) * std::sqrt(1.0 - xi_norm2);
}

double BarrierPair::upper(double xi_norm2, double t) const {
    return -a0 * expansion_factor(alpha, t) * std::sqrt(1.0 - xi_norm2);
}

BarrierPair barrier_pair(double C0, double C1, double alpha) {
    if (!(C0 > 0.0 && C1 > C0)) throw ArgumentError("barrier_pair: need 0 < C0 < C1");
    BarrierPair b;
    b.a0 = std::sqrt(0.9 * std::min(C0, 1.0));
    b.a1 = std::sqrt(1.1 * std::max(C1, 1.0));
    b.alpha = alpha;
    return b;
}

double AffineCapBarrier::operator()(double xi1, double xi2) const {
    return -a * std::sqrt(1.0 - xi1 * xi1 - xi2 * xi2) + b1 * xi1 + b2 * xi2 + d;
}

AffineCapBarrier tangent_barrier(const DualState& s, int ring_i, int j_hat, double a,
                                 BarrierSide side) {
    const PolarGrid& g = s.grid();
    if (!(a > 0.0)) throw ArgumentError("tangent_barrier: cap coefficient a must be > 0");
    if (ring_i < 0 || ring_i >= g.n_rho || j_hat < 0 || j_hat >= g.n_theta)
        throw ArgumentError("tangent_barrier: node out of range");
    const double rt = g.rho[ring_i];
    if (!(rt > 0.5 && rt < g.r))
        throw ArgumentError("tangent_barrier: touch circle must have radius in (1/2, r)");

    const double wt = g.w[ring_i];
    const double u_hat = s.u_star.at(ring_i, j_hat);

    // Tangential slope at the touch point, in the frame where xi_hat lies
    // on the first axis.
    const double* row = s.u_star.v.data() + g.idx(ring_i, 0);
    const double b_tan = stencil::th1(row, g.n_theta, j_hat, g.inv_2s) / rt;

    double scale = std::abs(u_hat);
    for (int j = 0; j < g.n_theta; ++j) scale = std::max(scale, std::abs(row[j]));
    scale = std::max(scale, 1.0);

    const double sgn = (side == BarrierSide::upper) ? 1.0 : -1.0;
    double d_try = 0.0;
    double max_violation = 0.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double b_rad = (u_hat + a * wt - d_try) / rt; // exact touch at xi_hat
        // One-sidedness over the ring, rotated frame: xi = rt (cos s, sin s)
        // with s measured from the touch node.
        double worst = 0.0;
        for (int j = 0; j < g.n_theta; ++j) {
            if (j == j_hat) continue;
            const double ss = (j - j_hat) * g.h_theta;
            const double h = -a * wt + b_rad * rt * std::cos(ss) + b_tan * rt * std::sin(ss) + d_try;
            const double gap = sgn * (h - row[j]);
            worst = std::min(worst, gap);
        }
        if (worst >= -1e-10 * scale) {
            // Map (b_rad, b_tan) back to the original Cartesian frame.
            const double c = g.cth[j_hat], sn = g.sth[j_hat];
            AffineCapBarrier out;
            out.a = a;
            out.b1 = c * b_rad - sn * b_tan;
            out.b2 = sn * b_rad + c * b_tan;
            out.d = d_try;
            return out;
        }
        max_violation = std::max(max_violation, -worst);
        d_try = (d_try == 0.0) ? sgn * std::max(1.0, 2.0 * scale) : 2.0 * d_try;
    }
    throw BarrierError("tangent_barrier: one-sidedness not certified (cap a likely too large)",
                       max_violation);
}

RadialProfile make_radial_profile(int dim, double r, int n_rho,
                                  const std::function<double(double)>& u0_of_rho) {
    if (dim < 2) throw ArgumentError("make_radial_profile: dim must be >= 2");
    if (!(r > 0.0 && r < 1.0)) throw ArgumentError("make_radial_profile: r must be in (0,1)");
    if (n_rho < 3) throw ArgumentError("make_radial_profile: n_rho must be >= 3");
    RadialProfile p;
    p.dim = dim;
    p.r = r;
    p.rho.resize(n_rho);
    p.v.resize(n_rho);
    const double h = r / n_rho;
    for (int i = 0; i < n_rho; ++i) {
        p.rho[i] = (i + 0.5) * h;
        p.v[i] = u0_of_rho(p.rho[i]);
    }
    p.boundary = u0_of_rho(r);
    return p;
}

namespace {
double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
    return r;
}
} // namespace

double f_star_radial(const CurvatureSpec& spec, double lam_r, double lam_t) {
    const int n = spec.n;
    if (spec.beta == 1.0 || spec.k == spec.n)
        return std::pow(lam_r * std::pow(lam_t, n - 1), 1.0 / n);
    const int k = spec.k;
    const double ek = binom(n - 1, k) * std::pow(lam_t, k) +
                      binom(n - 1, k - 1) * lam_r * std::pow(lam_t, k - 1);
    const double sk = ek / binom(n, k);
    const double sn = lam_r * std::pow(lam_t, n - 1);
    return std::pow(sn, spec.beta / n) * std::pow(sk, (1.0 - spec.beta) / k);
}

void f_star_radial_grad(const CurvatureSpec& spec, double lam_r, double lam_t, double f,
                        double* d_lam_r, double* d_lam_t) {
    const int n = spec.n;
    if (spec.beta == 1.0 || spec.k == spec.n) {
        *d_lam_r = f / (n * lam_r);
        *d_lam_t = f * (n - 1) / (n * lam_t);
        return;
    }
    const int k = spec.k;
    const double ck = binom(n - 1, k), ck1 = binom(n - 1, k - 1);
    const double ek = ck * std::pow(lam_t, k) + ck1 * lam_r * std::pow(lam_t, k - 1);
    const double dek_dr = ck1 * std::pow(lam_t, k - 1);
    const double dek_dt = k * ck * std::pow(lam_t, k - 1) +
                          (k - 1) * ck1 * lam_r * ((k >= 2) ? std::pow(lam_t, k - 2) : 0.0);
    const double bn = spec.beta / n, ob = (1.0 - spec.beta) / k;
    *d_lam_r = f * (bn / lam_r + ob * dek_dr / ek);
    *d_lam_t = f * (bn * (n - 1) / lam_t + ob * dek_dt / ek);
}

RadialTrajectory radial_run(const CurvatureSpec& spec, const RadialProfile& u0, double T,
                            std::span<const double> snapshot_times, const RadialOptions& opt) {
    spec.validate();
    if (spec.n != u0.dim) throw ArgumentError("radial_run: spec.n must match profile dim");
    if (!(T > 0.0)) throw ArgumentError("radial_run: T must be > 0");
    const int N = static_cast<int>(u0.rho.size());
    if (N < 3) throw ArgumentError("radial_run: need at least 3 radial nodes");
    for (std::size_t q = 1; q < snapshot_times.size(); ++q)
        if (!(snapshot_times[q] > snapshot_times[q - 1]))
            throw ArgumentError("radial_run: snapshot times must be sorted strictly");
    if (!snapshot_times.empty() && (snapshot_times.front() < 0.0 || snapshot_times.back() > T))
        throw ArgumentError("radial_run: snapshot times outside [0, T]");

    const double r = u0.r;
    const double h = r / N;
    const double inv_2h = 1.0 / (2.0 * h), inv_h2 = 1.0 / (h * h);
    const double wb = std::sqrt(1.0 - r * r);
    const double pts1[3] = {-h, 0.0, 0.5 * h};
    const double pts2[4] = {-2.0 * h, -h, 0.0, 0.5 * h};
    const auto bd1 = fd_weights(0.0, std::span<const double>(pts1, 3), 1);
    const auto bd2 = fd_weights(0.0, std::span<const double>(pts2, 4), 2);

    std::vector<double> w(N), w3(N), w4(N), inv_rho(N);
    for (int i = 0; i < N; ++i) {
        const double rho = u0.rho[i];
        const double wi = std::sqrt(1.0 - rho * rho);
        w[i] = wi;
        w3[i] = wi * wi * wi;
        w4[i] = w3[i] * wi;
        inv_rho[i] = 1.0 / rho;
    }

    const double alpha = spec.alpha;
    auto boundary_at = [&](double t) {
        return u0.boundary + opt.eps_eff * wb * (1.0 - expansion_factor(alpha, t));
    };

    struct Eval {
        std::vector<double> rate;
        double min_kappa, f_min, f_max, S_max;
        bool ok;
    };
    auto eval = [&](const std::vector<double>& u, double ghost, Eval& e) {
        e.rate.resize(N);
        e.min_kappa = std::numeric_limits<double>::infinity();
        e.f_min = std::numeric_limits<double>::infinity();
        e.f_max = -std::numeric_limits<double>::infinity();
        e.S_max = 0.0;
        e.ok = true;
        for (int i = 0; i < N; ++i) {
            double d1, d2;
            if (i == 0) {
                d1 = (u[1] - u[0]) * inv_2h;
                d2 = (u[1] - u[0]) * inv_h2; // even mirror across the origin
            } else if (i == N - 1) {
                d1 = bd1[0] * u[i - 1] + bd1[1] * u[i] + bd1[2] * ghost;
                d2 = bd2[0] * u[i - 2] + bd2[1] * u[i - 1] + bd2[2] * u[i] + bd2[3] * ghost;
            } else {
                d1 = (u[i + 1] - u[i - 1]) * inv_2h;
                d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
            }
            const double lam_r = w3[i] * d2;
            const double lam_t = w[i] * d1 * inv_rho[i];
            const double mk = std::min(lam_r, lam_t);
            e.min_kappa = std::min(e.min_kappa, mk);
            if (!(mk > opt.tol_convex)) {
                e.ok = false;
                e.rate[i] = 0.0;
                continue;
            }
            const double f = f_star_radial(spec, lam_r, lam_t);
            const double ft = std::pow(f, alpha);
            e.f_min = std::min(e.f_min, ft);
            e.f_max = std::max(e.f_max, ft);
            e.rate[i] = -w[i] / ft;
            double gr, gt;
            f_star_radial_grad(spec, lam_r, lam_t, f, &gr, &gt);
            const double dfp = alpha * std::pow(f, -alpha - 1.0);
            const double S = 4.0 * dfp * gr * w4[i] * inv_h2 +
                             2.0 * dfp * gt * w[i] * w[i] * inv_rho[i] * inv_2h * 2.0;
            e.S_max = std::max(e.S_max, S);
        }
        if (!std::isfinite(e.S_max)) throw NumericError("radial_run: non-finite stiffness");
    };

    RadialTrajectory traj;
    std::vector<double> u = u0.v;
    double t = 0.0;
    std::size_t next_snap = 0;
    auto push_snapshot = [&](double ts, const std::vector<double>& a, double ta,
                             const std::vector<double>& b, double tb) {
        RadialProfile p;
        p.dim = u0.dim;
        p.r = r;
        p.rho = u0.rho;
        p.t = ts;
        p.v.resize(N);
        if (tb > ta) {
            const double lam = (ts - ta) / (tb - ta);
            for (int i = 0; i < N; ++i) p.v[i] = (1.0 - lam) * a[i] + lam * b[i];
        } else {
            p.v = a;
        }
        p.boundary = boundary_at(ts);
        traj.snapshots.push_back(std::move(p));
    };
    while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= 0.0) {
        push_snapshot(0.0, u, 0.0, u, 0.0);
        ++next_snap;
    }

    Eval k1, k2, knew;
    eval(u, boundary_at(0.0), k1);
    if (!k1.ok) throw IngestionError("radial_run: initial profile not strictly convex");

    double dt_ctrl = opt.cfl_safety * 2.0 / k1.S_max;
    int streak = 0, consec_rej = 0;
    std::vector<double> pred(N), unew(N);
    while (t < T) {
        const double dt = std::min({dt_ctrl, opt.cfl_safety * 2.0 / k1.S_max, T - t, T / 100.0});
        const double tn = t + dt;
        const double gh_n = boundary_at(tn);
        for (int i = 0; i < N; ++i) pred[i] = u[i] + dt * k1.rate[i];
        eval(pred, gh_n, k2);
        bool ok = k2.ok;
        if (ok) {
            for (int i = 0; i < N; ++i) unew[i] = u[i] + 0.5 * dt * (k1.rate[i] + k2.rate[i]);
            eval(unew, gh_n, knew);
            ok = knew.ok;
        }
        if (!ok) {
            if (++consec_rej >= 20)
                throw NumericError("radial_run: 20 consecutive step rejections at t=" +
                                   std::to_string(t));
            dt_ctrl = 0.5 * dt;
            ++traj.steps_rejected;
            continue;
        }
        while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= tn) {
            push_snapshot(snapshot_times[next_snap], u, t, unew, tn);
            ++next_snap;
        }
        traj.records.push_back({tn, dt, knew.min_kappa, knew.f_min, knew.f_max});
        u.swap(unew);
        k1 = knew;
        t = tn;
        ++traj.steps_accepted;
        consec_rej = 0;
        if (++streak >= 10) {
            dt_ctrl = 1.2 * dt;
            streak = 0;
        }
    }
    return traj;
}

double interp_profile(const RadialProfile& p, double rho) {
    const int N = static_cast<int>(p.rho.size());
    const double h = p.r / N;
    // Symmetric extension below rho_0; clamp stencil at the outer end.
    int i1 = static_cast<int>(std::floor(rho / h - 0.5));
    i1 = std::clamp(i1, 0, N - 2);
    int lo = std::clamp(i1 - 1, 0, N - 4);
    double xs[4], ys[4];
    for (int m = 0; m < 4; ++m) {
        xs[m] = p.rho[lo + m];
        ys[m] = p.v[lo + m];
    }
    // Lagrange cubic.
    double acc = 0.0;
    for (int m = 0; m < 4; ++m) {
        double L = 1.0;
        for (int q = 0; q < 4; ++q)
            if (q != m) L *= (rho - xs[q]) / (xs[m] - xs[q]);
        acc += ys[m] * L;
    }
    return acc;
}

double radial_dual_value(const std::function<double(double)>& U,
                         const std::function<double(double)>& Uprime, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ArgumentError("radial_dual_value: rho must be in [0,1)");
    if (rho == 0.0) return -U(0.0);
    // U' is strictly increasing from 0 toward 1; bracket then bisect.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && Uprime(hi) < rho; ++it) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (Uprime(mid) < rho)
            lo = mid;
        else
            hi = mid;
    }
    const double s = 0.5 * (lo + hi);
    return s * rho - U(s);
}

} // namespace mkflow
