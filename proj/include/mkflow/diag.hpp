#pragma once

#include <span>
#include <vector>

#include "mkflow/flow.hpp"

namespace mkflow {

// Snapshot pulled to the self-similar frame: u~* = u*/B(t), tau~ = ln B(t),
// v~ = u~*/w*, Lambda~ the dual curvature of u~*, and
// Phi = F_*^{-alpha}(Lambda~) + v~ (zero exactly on the unit hyperboloid).
struct RescaledFrame {
    double t = 0.0, tau_tilde = 0.0;
    ScalarField u_tilde_star; // ghost carried
    ScalarField v_tilde;
    std::vector<SymMat2> Lambda_tilde;
    ScalarField f_neg_alpha; // F_*^{-alpha}(Lambda~) per node
    ScalarField phi;
};

std::vector<RescaledFrame> rescale(const Trajectory& traj, std::span<const double> frame_times);

struct DecayFit {
    bool converged = false; // every sup below the 1e-14 sentinel
    double slope = 0.0;     // d ln sup|Phi| / d tau~
    int frames_used = 0;
};

// Least-squares slope of ln sup_{|xi|<=K}|Phi| against tau~. Frames closer
// than 0.2 in tau~ to the previously used one are skipped (early-time
// transients bias the fit).
DecayFit phi_decay(std::span<const RescaledFrame> frames, double K_radius);

// sup over |xi| <= K of |u~* + sqrt(1-|xi|^2)|.
double hyperboloid_distance(const RescaledFrame& frame, double K_radius);

// Runtime-bound verdicts over a trajectory's step records.
struct BoundsReport {
    double parabolic_f_tilde_min = 0.0;
    double run_f_tilde_min = 0.0;
    bool f_lower_ok = false; // run min >= 0.95 * parabolic min

    double f_hat_min = 0.0; // min over the run of 1/F~max
    bool f_hat_positive = false;

    double ang1_parabolic_min = 0.0, ang1_parabolic_max = 0.0, ang2_parabolic_max = 0.0;
    double ang1_run_min = 0.0, ang1_run_max = 0.0, ang2_run_max = 0.0;
    double ang_scale = 1.0;
    bool ang1_ok = false, ang2_ok = false;

    bool monotone_decreasing = false; // u* strictly decreasing between snapshots

    bool all_ok() const {
        return f_lower_ok && f_hat_positive && ang1_ok && ang2_ok && monotone_decreasing;
    }
};

BoundsReport monitor_bounds(const Trajectory& traj);

// Angular derivative xi_k d_l - xi_l d_k; on the polar grid this is
// +/- d/dtheta, so only (k,l) in {(1,2),(2,1)} is meaningful in 2-D.
ScalarField angular_derivative(const ScalarField& f, int k, int l);

struct ConvergenceReport {
    double K_radius = 0.0;
    std::vector<double> tau;
    std::vector<double> phi_sup;
    std::vector<double> hyper_dist;
    std::vector<double> f_neg_alpha_min, f_neg_alpha_max; // per-frame bounds on K
    DecayFit decay;
    BoundsReport bounds;
    double v_tilde_min = 0.0, v_tilde_max = 0.0; // over frames on K
    bool rescaled_sandwich_ok = true;            // -(a1+1) <= v~ <= -a0 when barriers known
};

ConvergenceReport convergence_report(const Trajectory& traj,
                                     std::span<const double> frame_times, double K_radius);

// Lorentz boost of graph samples along x1 with |velocity| <= 0.9, followed
// by re-interpolation (monotone cubic per boosted coordinate line) onto a
// tensor patch over the overlap. When 0 < C0 < C1 are given, reports
// whether the Conditions-A sandwich survives sample-wise.
struct BoostResult {
    GraphPatch boosted;
    int sandwich_violations = -1; // -1 when no sandwich requested
    double margin_low = 0.0;      // min of u' - sqrt(|x'|^2 + C0)
    double margin_high = 0.0;     // min of sqrt(|x'|^2 + C1) - u'
};

BoostResult lorentz_boost(const GraphPatch& p, double velocity, double C0 = 0.0,
                          double C1 = 0.0);

// Shape-preserving cubic interpolation (Fritsch-Carlson slopes) of the
// data (x, y) at ascending query points.
std::vector<double> pchip_interp(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> xq);

} // namespace mkflow
