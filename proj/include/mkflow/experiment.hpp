#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "mkflow/diag.hpp"
#include "mkflow/io.hpp"

namespace mkflow {

// Fully resolved experiment description. Built from a ConfigMap with
// field-level diagnostics; every run emits the resolved form next to its
// results so a report can always be reproduced from itself.
struct ExperimentConfig {
    CurvatureSpec spec;
    std::string initial = "sandwiched-bump"; // hyperboloid-c | sandwiched-bump |
                                             // perturbed-bump | custom-sample-file
    double hyperboloid_c = 1.0;
    double C0 = 0.0, C1 = 0.0;
    double perturb_delta = 0.005; // mode-2 dual perturbation of perturbed-bump
    std::string sample_file;

    double r = 0.9;
    double T = 1.0;
    int n_rho = 96, n_theta = 192;
    std::vector<double> snapshot_times; // defaulted to 9 uniform times
    std::vector<double> frame_times;    // defaulted to snapshot_times
    double K_radius = 0.0;              // defaulted to 0.8 r

    double strictify_eps = 0.0;
    double cfl_safety = 0.65;
    double tol_convex = 1e-10;
    std::uint64_t seed = 12345; // sample jitter in condition checks

    std::string out_dir;
    bool quiet = false;

    // Optional report gates (enabled when set).
    std::optional<double> check_decay_slope_max;
    std::optional<double> check_final_distance_max;
    std::optional<double> check_distance_ratio_max;
};

ExperimentConfig config_from_map(const ConfigMap& map);
std::string canonical_config_text(const ExperimentConfig& cfg);

// Builtin initial data as a dual field on the grid (ghost included).
// hyperboloid-c and sandwiched-bump go through the exact radial Legendre
// solve; custom-sample-file goes through the discrete sup transform.
ScalarField build_initial_dual(const ExperimentConfig& cfg,
                               std::shared_ptr<const PolarGrid> grid);

// The primal bump profile U(s) = sqrt(s^2 + c(s^2)),
// c(q) = C0 + (C1-C0)(0.5 + 0.3 exp(-q)), and its derivative.
std::function<double(double)> bump_primal(double C0, double C1);
std::function<double(double)> bump_primal_slope(double C0, double C1);

FlowProblem problem_from_config(const ExperimentConfig& cfg);

struct ExperimentResult {
    ConvergenceReport report;
    double barrier_low_min = 0.0, barrier_high_min = 0.0; // over initial + all records
    bool barriers_ok = true;
    bool monitors_ok = false;
    double final_error_vs_special = -1.0; // set for the unit-hyperboloid data
    long steps_accepted = 0, steps_rejected = 0;
    double wall_seconds = 0.0;
    int exit_code = 0;
    std::uint64_t config_hash = 0;
};

// Full pipeline: ingest, run, diagnose, write artifacts into cfg.out_dir
// (resolved.cfg, snap_*.mkf, records.tsv, frames.tsv, report.txt,
// summary.json). Exit code 0 = all monitors pass, 1 = monitor violation
// (report still written), 2 = configuration/ingestion error, 3 = numeric
// abort; the error paths throw and the CLI maps them.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log);

struct StudyLevel {
    int n_rho = 0, n_theta = 0;
    double err = 0.0;
    double order = 0.0; // vs previous level; 0 for the first
    double seconds = 0.0;
};

// Runs `levels` resolutions doubling from the config grid, measures the
// final-time max-norm error against the closed form (unit hyperboloid
// data) or a 4096-node radial reference (radial data), and reports
// observed orders log2(e_l / e_{l+1}).
std::vector<StudyLevel> convergence_study(const ExperimentConfig& cfg, int levels,
                                          std::ostream* log);

} // namespace mkflow
