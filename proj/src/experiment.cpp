#include "mkflow/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mkflow {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig config_from_map(const ConfigMap& map) {
    static const std::set<std::string> known = {
        "spec.n", "spec.k", "spec.beta", "spec.alpha", "initial", "hyperboloid_c", "C0", "C1",
        "perturb_delta", "sample_file", "r", "T", "n_rho", "n_theta", "snapshot_times",
        "frame_times", "K_radius", "strictify_eps", "cfl_safety", "tol_convex", "seed", "out",
        "quiet", "check.decay_slope_max", "check.final_distance_max", "check.distance_ratio_max"};
    for (const auto& [k, v] : map.kv)
        if (!known.count(k)) throw FormatError("config: unknown field '" + k + "'");

    ExperimentConfig c;
    c.spec.n = static_cast<int>(map.get_int("spec.n", 2));
    c.spec.k = static_cast<int>(map.get_int("spec.k", 1));
    c.spec.beta = map.get_num("spec.beta", 1.0);
    c.spec.alpha = map.get_num("spec.alpha", 1.0);
    c.initial = map.get("initial", "sandwiched-bump");
    c.hyperboloid_c = map.get_num("hyperboloid_c", 1.0);
    c.C0 = map.get_num("C0", 0.0);
    c.C1 = map.get_num("C1", 0.0);
    c.perturb_delta = map.get_num("perturb_delta", 0.005);
    c.sample_file = map.get("sample_file", "");
    c.r = map.get_num("r", 0.9);
    c.T = map.get_num("T", 1.0);
    c.n_rho = static_cast<int>(map.get_int("n_rho", 96));
    c.n_theta = static_cast<int>(map.get_int("n_theta", 192));
    c.snapshot_times = map.get_list("snapshot_times");
    c.frame_times = map.get_list("frame_times");
    c.K_radius = map.get_num("K_radius", 0.0);
    c.strictify_eps = map.get_num("strictify_eps", 0.0);
    c.cfl_safety = map.get_num("cfl_safety", 0.65);
    c.tol_convex = map.get_num("tol_convex", 1e-10);
    c.seed = static_cast<std::uint64_t>(map.get_int("seed", 12345));
    c.out_dir = map.get("out", "");
    c.quiet = map.get_int("quiet", 0) != 0;
    if (map.has("check.decay_slope_max"))
        c.check_decay_slope_max = map.get_num("check.decay_slope_max", 0.0);
    if (map.has("check.final_distance_max"))
        c.check_final_distance_max = map.get_num("check.final_distance_max", 0.0);
    if (map.has("check.distance_ratio_max"))
        c.check_distance_ratio_max = map.get_num("check.distance_ratio_max", 0.0);

    // Field-level validation beyond what make_problem re-checks.
    if (c.initial != "hyperboloid-c" && c.initial != "sandwiched-bump" &&
        c.initial != "perturbed-bump" && c.initial != "custom-sample-file")
        throw FormatError("config: field 'initial' has unknown selector '" + c.initial + "'");
    if (c.initial == "sandwiched-bump" || c.initial == "perturbed-bump") {
        if (!(c.C0 > 0.0)) throw FormatError("config: field 'C0' must be > 0");
        if (!(c.C1 > c.C0)) throw FormatError("config: field 'C1' must exceed C0");
    }
    if (c.initial == "custom-sample-file" && c.sample_file.empty())
        throw FormatError("config: field 'sample_file' required for custom-sample-file");
    if (c.C0 != 0.0 || c.C1 != 0.0) {
        if (!(c.C0 > 0.0 && c.C1 > c.C0))
            throw FormatError("config: fields 'C0','C1' must satisfy 0 < C0 < C1");
    }
    if (!(c.T > 0.0)) throw FormatError("config: field 'T' must be > 0");

    if (c.snapshot_times.empty()) {
        for (int q = 0; q <= 8; ++q) c.snapshot_times.push_back(c.T * q / 8.0);
    }
    if (c.frame_times.empty()) c.frame_times = c.snapshot_times;
    if (c.K_radius == 0.0) c.K_radius = 0.8 * c.r;
    return c;
}

std::string canonical_config_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o.precision(17);
    auto list = [](const std::vector<double>& v) {
        std::ostringstream s;
        s.precision(17);
        for (std::size_t q = 0; q < v.size(); ++q) s << (q ? "," : "") << v[q];
        return s.str();
    };
    o << "spec.n = " << c.spec.n << "\nspec.k = " << c.spec.k << "\nspec.beta = " << c.spec.beta
      << "\nspec.alpha = " << c.spec.alpha << "\ninitial = " << c.initial
      << "\nhyperboloid_c = " << c.hyperboloid_c << "\nC0 = " << c.C0 << "\nC1 = " << c.C1
      << "\nperturb_delta = " << c.perturb_delta << "\nsample_file = " << c.sample_file
      << "\nr = " << c.r << "\nT = " << c.T << "\nn_rho = " << c.n_rho
      << "\nn_theta = " << c.n_theta << "\nsnapshot_times = " << list(c.snapshot_times)
      << "\nframe_times = " << list(c.frame_times) << "\nK_radius = " << c.K_radius
      << "\nstrictify_eps = " << c.strictify_eps << "\ncfl_safety = " << c.cfl_safety
      << "\ntol_convex = " << c.tol_convex << "\nseed = " << c.seed << "\n";
    if (c.check_decay_slope_max) o << "check.decay_slope_max = " << *c.check_decay_slope_max << "\n";
    if (c.check_final_distance_max)
        o << "check.final_distance_max = " << *c.check_final_distance_max << "\n";
    if (c.check_distance_ratio_max)
        o << "check.distance_ratio_max = " << *c.check_distance_ratio_max << "\n";
    return o.str();
}

std::function<double(double)> bump_primal(double C0, double C1) {
    return [C0, C1](double s) {
        const double q = s * s;
        const double c = C0 + (C1 - C0) * (0.5 + 0.3 * std::exp(-q));
        return std::sqrt(q + c);
    };
}

std::function<double(double)> bump_primal_slope(double C0, double C1) {
    auto U = bump_primal(C0, C1);
    return [C0, C1, U](double s) {
        const double q = s * s;
        const double gp = -0.3 * (C1 - C0) * std::exp(-q);
        return s * (1.0 + gp) / U(s);
    };
}

ScalarField build_initial_dual(const ExperimentConfig& cfg,
                               std::shared_ptr<const PolarGrid> grid) {
    const PolarGrid& g = *grid;
    ScalarField f(grid);
    std::vector<double> ghost(g.n_theta);

    auto fill_radial = [&](const std::function<double(double)>& profile) {
        for (int i = 0; i < g.n_rho; ++i) {
            const double v = profile(g.rho[i]);
            for (int j = 0; j < g.n_theta; ++j) f.at(i, j) = v;
        }
        const double vb = profile(g.r);
        for (int j = 0; j < g.n_theta; ++j) ghost[j] = vb;
    };

    if (cfg.initial == "hyperboloid-c") {
        const double c = cfg.hyperboloid_c;
        if (!(c > 0.0)) throw FormatError("config: hyperboloid_c must be > 0");
        fill_radial([c](double rho) { return -c * std::sqrt(1.0 - rho * rho); });
    } else if (cfg.initial == "sandwiched-bump" || cfg.initial == "perturbed-bump") {
        auto U = bump_primal(cfg.C0, cfg.C1);
        auto Up = bump_primal_slope(cfg.C0, cfg.C1);
        fill_radial([&](double rho) { return radial_dual_value(U, Up, rho); });
        if (cfg.initial == "perturbed-bump") {
            // Mode-2 dual perturbation, polynomial at the origin, vanishing
            // at the ring so the boundary schedule stays radial.
            const double d = cfg.perturb_delta;
            for (int i = 0; i < g.n_rho; ++i) {
                const double s = g.rho[i] / g.r;
                const double rad = d * s * s * std::pow(1.0 - s * s, 2);
                for (int j = 0; j < g.n_theta; ++j)
                    f.at(i, j) += rad * std::cos(2.0 * g.theta[j]);
            }
        }
    } else if (cfg.initial == "custom-sample-file") {
        const GraphPatch p = load_graph_patch(cfg.sample_file);
        return legendre_primal_to_dual(p, grid);
    } else {
        throw FormatError("config: unknown initial selector " + cfg.initial);
    }
    f.set_ghost(std::move(ghost));
    return f;
}

FlowProblem problem_from_config(const ExperimentConfig& cfg) {
    auto grid = build_grid(cfg.r, cfg.n_rho, cfg.n_theta);
    ScalarField u0 = build_initial_dual(cfg, grid);
    double C0 = cfg.C0, C1 = cfg.C1;
    if (cfg.initial == "hyperboloid-c" && C0 == 0.0 && C1 == 0.0) {
        const double c2 = cfg.hyperboloid_c * cfg.hyperboloid_c;
        C0 = 0.9 * c2;
        C1 = 1.1 * c2;
    }
    return make_problem(cfg.spec, std::move(u0), cfg.T, cfg.strictify_eps, cfg.cfl_safety,
                        cfg.tol_convex, C0, C1);
}

namespace {

void write_records_tsv(const Trajectory& traj, const std::string& path) {
    std::ofstream o(path);
    o << "t\tdt\tmin_kappa\tmax_kappa\tf_tilde_min\tf_tilde_max\tf_tilde_ring_min\t"
         "boundary\tmax_rhs\tang1_min\tang1_max\tang2_max\tbarrier_low\tbarrier_high\n";
    o.precision(12);
    auto row = [&](const StepRecord& r) {
        o << r.t << '\t' << r.dt << '\t' << r.min_kappa_star << '\t' << r.max_kappa_star << '\t'
          << r.f_tilde_min << '\t' << r.f_tilde_max << '\t' << r.f_tilde_ring_min << '\t'
          << r.boundary_value << '\t' << r.max_rhs << '\t' << r.ang1_min << '\t' << r.ang1_max
          << '\t' << r.ang2_max << '\t' << r.barrier_low_margin << '\t' << r.barrier_high_margin
          << '\n';
    };
    row(traj.initial);
    for (const auto& r : traj.records) row(r);
}

void write_frames_tsv(const ConvergenceReport& rep, const std::string& path) {
    std::ofstream o(path);
    o << "tau\tphi_sup\thyper_dist\tf_neg_alpha_min\tf_neg_alpha_max\n";
    o.precision(12);
    for (std::size_t q = 0; q < rep.tau.size(); ++q)
        o << rep.tau[q] << '\t' << rep.phi_sup[q] << '\t' << rep.hyper_dist[q] << '\t'
          << rep.f_neg_alpha_min[q] << '\t' << rep.f_neg_alpha_max[q] << '\n';
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    const std::string resolved = canonical_config_text(cfg);
    res.config_hash = fnv1a64(resolved);

    FlowProblem problem = problem_from_config(cfg);

    // Ensure T is a snapshot so final-state checks always have it.
    std::vector<double> snaps = cfg.snapshot_times;
    if (snaps.empty() || std::abs(snaps.back() - cfg.T) > 1e-12) snaps.push_back(cfg.T);

    Trajectory traj = run(problem, snaps);
    res.steps_accepted = traj.steps_accepted;
    res.steps_rejected = traj.steps_rejected;

    res.report = convergence_report(traj, cfg.frame_times, cfg.K_radius);

    if (problem.has_barriers()) {
        double lo = std::min(traj.initial.barrier_low_margin, traj.initial.barrier_high_margin);
        res.barrier_low_min = traj.initial.barrier_low_margin;
        res.barrier_high_min = traj.initial.barrier_high_margin;
        for (const auto& r : traj.records) {
            res.barrier_low_min = std::min(res.barrier_low_min, r.barrier_low_margin);
            res.barrier_high_min = std::min(res.barrier_high_min, r.barrier_high_margin);
        }
        (void)lo;
        res.barriers_ok = res.barrier_low_min > 0.0 && res.barrier_high_min > 0.0;
    }

    // Exact-solution error for the unit-hyperboloid data.
    if (cfg.initial == "hyperboloid-c" && cfg.hyperboloid_c == 1.0) {
        const DualState& fin = traj.snapshots.back();
        const PolarGrid& g = *fin.u_star.grid;
        const double B = expansion_factor(cfg.spec.alpha, fin.t);
        double err = 0.0;
        for (int i = 0; i < g.n_rho; ++i)
            for (int j = 0; j < g.n_theta; ++j)
                err = std::max(err, std::abs(fin.u_star.at(i, j) + B * g.w[i]));
        res.final_error_vs_special = err;
    }

    bool gates_ok = true;
    if (cfg.check_decay_slope_max) {
        gates_ok &= !res.report.decay.converged ? res.report.decay.slope <= *cfg.check_decay_slope_max
                                                : true;
    }
    if (cfg.check_final_distance_max)
        gates_ok &= !res.report.hyper_dist.empty() &&
                    res.report.hyper_dist.back() <= *cfg.check_final_distance_max;
    if (cfg.check_distance_ratio_max && !res.report.hyper_dist.empty()) {
        // Reference frame: the first frame with tau >= 0.3.
        double ref = -1.0;
        for (std::size_t q = 0; q < res.report.tau.size(); ++q)
            if (res.report.tau[q] >= 0.3 - 1e-12) {
                ref = res.report.hyper_dist[q];
                break;
            }
        gates_ok &= ref > 0.0 && res.report.hyper_dist.back() <= *cfg.check_distance_ratio_max * ref;
    }

    res.monitors_ok = res.report.bounds.all_ok() && res.barriers_ok &&
                      res.report.rescaled_sandwich_ok && gates_ok;
    res.exit_code = res.monitors_ok ? 0 : 1;
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        const fs::path dir(cfg.out_dir);
        {
            std::ofstream o(dir / "resolved.cfg");
            char hash[32];
            std::snprintf(hash, sizeof hash, "%016llx",
                          static_cast<unsigned long long>(res.config_hash));
            o << "# config_hash = " << hash << "\n" << resolved;
        }
        for (std::size_t q = 0; q < traj.snapshots.size(); ++q) {
            char name[64];
            std::snprintf(name, sizeof name, "snap_%04zu.mkf", q);
            emit_snapshot(traj.snapshots[q], (dir / name).string());
        }
        write_records_tsv(traj, (dir / "records.tsv").string());
        write_frames_tsv(res.report, (dir / "frames.tsv").string());

        std::ofstream rep(dir / "report.txt");
        char hash[32];
        std::snprintf(hash, sizeof hash, "%016llx",
                      static_cast<unsigned long long>(res.config_hash));
        rep.precision(10);
        rep << "mkflow experiment report\nconfig_hash = " << hash << "\n\n";
        rep << "[steps]    accepted " << res.steps_accepted << ", rejected " << res.steps_rejected
            << ", wall " << res.wall_seconds << " s\n";
        const auto& b = res.report.bounds;
        rep << "[barrier]  low_margin_min " << res.barrier_low_min << "  high_margin_min "
            << res.barrier_high_min << "  pass " << (res.barriers_ok ? "yes" : "NO") << "\n";
        rep << "[f-bounds] parabolic_min " << b.parabolic_f_tilde_min << "  run_min "
            << b.run_f_tilde_min << "  pass " << (b.f_lower_ok ? "yes" : "NO") << "; f_hat_min "
            << b.f_hat_min << "  pass " << (b.f_hat_positive ? "yes" : "NO") << "\n";
        rep << "[angular]  d1 run [" << b.ang1_run_min << ", " << b.ang1_run_max
            << "] parabolic [" << b.ang1_parabolic_min << ", " << b.ang1_parabolic_max
            << "] pass " << (b.ang1_ok ? "yes" : "NO") << "; d2 run max " << b.ang2_run_max
            << " parabolic " << b.ang2_parabolic_max << " pass " << (b.ang2_ok ? "yes" : "NO")
            << "\n";
        rep << "[monotone] " << (b.monotone_decreasing ? "yes" : "NO") << "\n";
        rep << "[v-tilde]  [" << res.report.v_tilde_min << ", " << res.report.v_tilde_max
            << "] sandwich pass " << (res.report.rescaled_sandwich_ok ? "yes" : "NO") << "\n";
        if (res.report.decay.converged)
            rep << "[decay]    converged (sup|Phi| below sentinel)\n";
        else
            rep << "[decay]    slope " << res.report.decay.slope << " over "
                << res.report.decay.frames_used << " frames\n";
        if (!res.report.hyper_dist.empty())
            rep << "[distance] final " << res.report.hyper_dist.back() << "\n";
        if (res.final_error_vs_special >= 0.0)
            rep << "[special]  final max-norm error vs closed form " << res.final_error_vs_special
                << "\n";
        rep << "\nframes (tau, sup|Phi|, dist):\n";
        for (std::size_t q = 0; q < res.report.tau.size(); ++q)
            rep << "  " << res.report.tau[q] << "  " << res.report.phi_sup[q] << "  "
                << res.report.hyper_dist[q] << "\n";
        rep << "\nresult " << (res.monitors_ok ? "PASS" : "FAIL") << "\n";

        json j;
        j["config_hash"] = hash;
        j["resolved_config"] = resolved;
        j["steps_accepted"] = res.steps_accepted;
        j["steps_rejected"] = res.steps_rejected;
        j["wall_seconds"] = res.wall_seconds;
        j["monitors_ok"] = res.monitors_ok;
        j["barrier"] = {{"low_min", res.barrier_low_min},
                        {"high_min", res.barrier_high_min},
                        {"ok", res.barriers_ok}};
        j["f_bounds"] = {{"parabolic_min", b.parabolic_f_tilde_min},
                         {"run_min", b.run_f_tilde_min},
                         {"f_hat_min", b.f_hat_min},
                         {"lower_ok", b.f_lower_ok},
                         {"hat_ok", b.f_hat_positive}};
        j["angular_ok"] = b.ang1_ok && b.ang2_ok;
        j["monotone"] = b.monotone_decreasing;
        j["tau"] = res.report.tau;
        j["phi_sup"] = res.report.phi_sup;
        j["hyper_dist"] = res.report.hyper_dist;
        j["f_neg_alpha_min"] = res.report.f_neg_alpha_min;
        j["f_neg_alpha_max"] = res.report.f_neg_alpha_max;
        if (!res.report.decay.converged) j["decay_slope"] = res.report.decay.slope;
        j["decay_converged"] = res.report.decay.converged;
        if (res.final_error_vs_special >= 0.0)
            j["final_error_vs_special"] = res.final_error_vs_special;
        std::ofstream js(dir / "summary.json");
        js << j.dump(2) << "\n";
    }

    if (log && !cfg.quiet) {
        *log << "run: " << res.steps_accepted << " steps (" << res.steps_rejected
             << " rejected), wall " << res.wall_seconds << " s, monitors "
             << (res.monitors_ok ? "PASS" : "FAIL") << "\n";
        if (res.final_error_vs_special >= 0.0)
            *log << "final max-norm error vs closed form: " << res.final_error_vs_special << "\n";
    }
    return res;
}

std::vector<StudyLevel> convergence_study(const ExperimentConfig& cfg, int levels,
                                          std::ostream* log) {
    if (levels < 2 || levels > 4)
        throw ArgumentError("convergence_study: levels must be in [2,4]");
    const bool exact_ref = cfg.initial == "hyperboloid-c" && cfg.hyperboloid_c == 1.0;
    const bool radial_ref = cfg.initial == "sandwiched-bump" ||
                            (cfg.initial == "hyperboloid-c" && cfg.hyperboloid_c != 1.0);
    if (!exact_ref && !radial_ref)
        throw ArgumentError("convergence_study: needs closed-form or radial reference data");

    RadialTrajectory oracle;
    if (radial_ref) {
        auto U = bump_primal(cfg.C0, cfg.C1);
        auto Up = bump_primal_slope(cfg.C0, cfg.C1);
        std::function<double(double)> profile;
        if (cfg.initial == "hyperboloid-c") {
            const double c = cfg.hyperboloid_c;
            profile = [c](double rho) { return -c * std::sqrt(1.0 - rho * rho); };
        } else {
            profile = [U, Up](double rho) { return radial_dual_value(U, Up, rho); };
        }
        RadialProfile p0 = make_radial_profile(cfg.spec.n, cfg.r, 4096, profile);
        RadialOptions ro;
        ro.eps_eff = cfg.strictify_eps == 0.0 ? 1.0 : cfg.strictify_eps;
        ro.cfl_safety = cfg.cfl_safety;
        const double st[1] = {cfg.T};
        oracle = radial_run(cfg.spec, p0, cfg.T, std::span<const double>(st, 1), ro);
    }

    std::vector<StudyLevel> table;
    int nr = cfg.n_rho, nt = cfg.n_theta;
    for (int lev = 0; lev < levels; ++lev, nr *= 2, nt *= 2) {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentConfig c = cfg;
        c.n_rho = nr;
        c.n_theta = nt;
        c.out_dir.clear();
        FlowProblem problem = problem_from_config(c);
        const double st[1] = {c.T};
        Trajectory traj = run(problem, std::span<const double>(st, 1));
        const DualState& fin = traj.snapshots.back();
        const PolarGrid& g = *fin.u_star.grid;

        double err = 0.0;
        if (exact_ref) {
            const double B = expansion_factor(c.spec.alpha, fin.t);
            for (int i = 0; i < g.n_rho; ++i)
                for (int j = 0; j < g.n_theta; ++j)
                    err = std::max(err, std::abs(fin.u_star.at(i, j) + B * g.w[i]));
        } else {
            const RadialProfile& ref = oracle.snapshots.back();
            for (int i = 0; i < g.n_rho; ++i) {
                const double rv = interp_profile(ref, g.rho[i]);
                for (int j = 0; j < g.n_theta; ++j)
                    err = std::max(err, std::abs(fin.u_star.at(i, j) - rv));
            }
        }
        StudyLevel lv;
        lv.n_rho = nr;
        lv.n_theta = nt;
        lv.err = err;
        lv.order = table.empty() ? 0.0 : std::log2(table.back().err / err);
        lv.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        table.push_back(lv);
        if (log)
            *log << "level " << nr << "x" << nt << ": err " << err << " order "
                 << (table.size() > 1 ? std::to_string(lv.order) : std::string("-")) << " ("
                 << lv.seconds << " s)\n";
    }
    return table;
}

} // namespace mkflow
