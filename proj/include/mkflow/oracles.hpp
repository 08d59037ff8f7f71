#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mkflow/curvfun.hpp"
#include "mkflow/dualgeo.hpp"

namespace mkflow {

// B(t) = [(1+alpha) t~]^(1/(1+alpha)) with t~ = t + (1+alpha)^-1, so that
// B(0) = 1. The expanding special solution scales every hyperboloid
// profile by exactly this factor.
double expansion_factor(double alpha, double t);
double expansion_factor_dt(double alpha, double t);

// tau~(t) = (1+alpha)^-1 ln((1+alpha) t~); note B(t) = exp(tau~).
double rescaled_time(double alpha, double t);
double time_from_rescaled(double alpha, double tau);

// z*(xi, t) = -[(1+alpha) t]^(1/(1+alpha)) sqrt(1-|xi|^2), the raw paper
// normalization. special_dual_shifted uses B(t) instead (the flow clock).
double special_dual(double xi1, double xi2, double t, double alpha);
double special_dual_shifted(double xi1, double xi2, double t, double alpha);

// z(x, t) = sqrt(|x|^2 + [(1+alpha) t]^(2/(1+alpha))).
double special_primal(double x1, double x2, double t, double alpha);
double special_primal_shifted(double x1, double x2, double t, double alpha);

// Explicit sub/supersolution pair trapping any solution with
// Conditions-A constants C0 < C1:
//   lower  u_b^{r*} = -(a1+1) B(t) sqrt(1-|xi|^2)
//   upper  u_s^{r*} = -a0 B(t) sqrt(1-|xi|^2)
// with a0^2 = 0.9 min(C0,1), a1^2 = 1.1 max(C1,1).
struct BarrierPair {
    double a0 = 0.0, a1 = 0.0, alpha = 1.0;

    double lower(double xi_norm2, double t) const;
    double upper(double xi_norm2, double t) const;
};
BarrierPair barrier_pair(double C0, double C1, double alpha);

// Affine-plus-cap function h = -a sqrt(1-|xi|^2) + b.xi + d.
struct AffineCapBarrier {
    double a = 0.0, b1 = 0.0, b2 = 0.0, d = 0.0;
    double operator()(double xi1, double xi2) const;
};

enum class BarrierSide { lower, upper };

// Tangent barrier touching u* at the grid node (ring_i, j_hat) on the
// circle of radius rho[ring_i] in (1/2, r). The tangential slope is
// matched at the touch point, the radial coefficient enforces the touch,
// and d comes from a doubling search starting at 0. One-sidedness over
// the whole ring is verified on the grid nodes; failure raises
// BarrierError with the worst violation (a typical cause is a cap
// coefficient `a` that is too large for the state's curvature bound).
AffineCapBarrier tangent_barrier(const DualState& s, int ring_i, int j_hat, double a,
                                 BarrierSide side);

// Radially symmetric dual profile in ambient dimension `dim` (the only
// path for dim > 2). Values at cell-centered radii plus the rho = r value.
struct RadialProfile {
    int dim = 2;
    double r = 0.0;
    std::vector<double> rho;
    std::vector<double> v;
    double boundary = 0.0;
    double t = 0.0;
};

// Samples a profile function at cell-centered nodes.
RadialProfile make_radial_profile(int dim, double r, int n_rho,
                                  const std::function<double(double)>& u0_of_rho);

// f_* evaluated at the radial eigenvalue pattern (lam_r, lam_t, ..., lam_t);
// closed form in the two distinct values. Agrees with f_star on the
// expanded vector.
double f_star_radial(const CurvatureSpec& spec, double lam_r, double lam_t);
void f_star_radial_grad(const CurvatureSpec& spec, double lam_r, double lam_t, double f,
                        double* d_lam_r, double* d_lam_t);

struct RadialOptions {
    double eps_eff = 1.0;   // boundary schedule coefficient
    double cfl_safety = 0.65;
    double tol_convex = 1e-10;
};

struct RadialStepRecord {
    double t, dt, min_kappa, f_tilde_min, f_tilde_max;
};

struct RadialTrajectory {
    std::vector<RadialProfile> snapshots;
    std::vector<RadialStepRecord> records;
    long steps_accepted = 0, steps_rejected = 0;
};

// Evolves u*_t = -f_*(kappa*_rad)^(-alpha) w* with
// kappa*_rad = (w*^3 u'', w* u'/rho x (dim-1)) under the same moving
// Dirichlet schedule and step-rejection contract as the disk solver.
RadialTrajectory radial_run(const CurvatureSpec& spec, const RadialProfile& u0, double T,
                            std::span<const double> snapshot_times,
                            const RadialOptions& opt = {});

// Cubic interpolation of a radial profile (used to compare solutions
// across resolutions; interpolation error O(h^4) stays far below the
// schemes' own O(h^2)).
double interp_profile(const RadialProfile& p, double rho);

// Dual profile of a smooth strictly convex radial entire graph:
// u*(rho) = max_s (s rho - U(s)), solved by bisection on U'(s) = rho.
// Kink-free, unlike the discrete-sup transform.
double radial_dual_value(const std::function<double(double)>& U,
                         const std::function<double(double)>& Uprime, double rho);

} // namespace mkflow
