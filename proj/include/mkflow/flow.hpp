#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mkflow/curvfun.hpp"
#include "mkflow/dualgeo.hpp"
#include "mkflow/oracles.hpp"

namespace mkflow {

// The approximate dual problem on B_r with its moving Dirichlet boundary:
//   u*_t = -F_*^{-alpha}(w* gamma* u*_kl gamma*) w*              in B_r
//   u*   = u0_hat* - eps_eff B(t) sqrt(1-r^2)                    on the ring
// where u0_hat* = u0* + eps_eff sqrt(1-|xi|^2). strictify_eps = 0 selects
// the plain problem (eps_eff = 1); a value in (0,1) selects the
// strictified variant for data whose u0_hat* fails strict convexity.
struct FlowProblem {
    CurvatureSpec spec;                 // spec.n must be 2 for the disk solver
    ScalarField u0_star;                // ghost ring populated with u0*(r)
    ScalarField u0_hat_star;            // u0* + eps_eff sqrt(1-|xi|^2), derived
    double T = 1.0;
    double strictify_eps = 0.0;
    double cfl_safety = 0.65;
    double tol_convex = 1e-10;
    // Conditions-A constants; barrier monitoring is enabled when both > 0.
    double C0 = 0.0, C1 = 0.0;

    double eps_eff() const { return strictify_eps == 0.0 ? 1.0 : strictify_eps; }
    bool has_barriers() const { return C0 > 0.0 && C1 > C0; }
    const PolarGrid& grid() const { return *u0_star.grid; }
};

// Builds the derived field and validates: grid radius in (1/2,1), solver
// limits n_rho >= 8 / n_theta >= 16, u0* < 0 and strictly convex, the
// Conditions-A dual sandwich when C0/C1 are given, and convexity of
// u0_hat* (a zero minimum, the exact-hyperboloid case, is accepted; a
// negative one raises IngestionError with a suggested strictify_eps).
FlowProblem make_problem(const CurvatureSpec& spec, ScalarField u0_star, double T,
                         double strictify_eps = 0.0, double cfl_safety = 0.65,
                         double tol_convex = 1e-10, double C0 = 0.0, double C1 = 0.0);

// Dirichlet profile on the ghost ring at time t.
std::vector<double> boundary_value(const FlowProblem& p, double t);

struct StepRecord {
    double t = 0.0, dt = 0.0;
    double min_kappa_star = 0.0, max_kappa_star = 0.0;
    double f_tilde_min = 0.0, f_tilde_max = 0.0; // F~ = f_*(kappa*)^alpha extremes
    double f_tilde_ring_min = 0.0;               // outermost interior ring
    double boundary_value = 0.0;                 // ring mean
    double max_rhs = 0.0;                        // max |u*_t|
    double ang1_min = 0.0, ang1_max = 0.0;       // angular-derivative extremes
    double ang2_max = 0.0;                       // angular second derivative max
    double barrier_low_margin = 0.0, barrier_high_margin = 0.0; // NaN without barriers
};

struct Trajectory {
    FlowProblem problem;
    std::vector<DualState> snapshots;
    std::vector<StepRecord> records; // one per accepted step
    StepRecord initial;              // monitors of the t = 0 state (dt = 0)
    long steps_accepted = 0, steps_rejected = 0;
};

// One right-hand-side evaluation with all per-step monitors.
struct RhsEval {
    ScalarField rate; // du*/dt, no ghost
    bool convex_ok = false;
    double min_kappa = 0.0, max_kappa = 0.0;
    int worst_i = 0, worst_j = 0; // filled when convex_ok is false
    double f_tilde_min = 0.0, f_tilde_max = 0.0, f_tilde_ring_min = 0.0;
    double max_abs_rhs = 0.0;
    double ang1_min = 0.0, ang1_max = 0.0, ang2_max = 0.0;
    double stiffness_max = 0.0; // max over nodes of the explicit-update bound
};

// Batched OpenMP kernel and the straightforward per-node reference; both
// produce bit-identical results.
RhsEval eval_rhs(const FlowProblem& p, const DualState& s);
RhsEval eval_rhs_serial(const FlowProblem& p, const DualState& s);

// Spec surface: the rate field alone; throws StepRejected on convexity
// violation, carrying the worst node.
ScalarField rhs(const FlowProblem& p, const DualState& s);

// cfl_safety * 2 / S_max (the Heun real-axis interval is [-2, 0]),
// additionally capped at T/100.
double stable_dt(const FlowProblem& p, const DualState& s);

// Angular low-pass at the rings the grid's filter plan marks, realized as
// circular convolution (commutes with index rotation bit-exactly). Rings
// are processed when their cadence divides step_index.
void apply_origin_filter(ScalarField& f, long step_index = 0);

// Heun step with the ghost ring moved to the target time. Throws
// StepRejected when the update violates min kappa* > tol_convex;
// dt == 0 returns the state unchanged.
DualState step(const FlowProblem& p, const DualState& s, double dt);

// Adaptive-dt integration emitting snapshots by linear interpolation
// between bracketing accepted states. Snapshot time 0 is always included.
Trajectory run(const FlowProblem& p, std::span<const double> snapshot_times);

} // namespace mkflow
