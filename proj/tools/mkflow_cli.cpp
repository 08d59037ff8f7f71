#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <omp.h>

#include "mkflow/experiment.hpp"

namespace {

void apply_thread_hint() {
    if (const char* env = std::getenv("MKFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

int mapped_exit(const std::exception& e, bool quiet) {
    if (!quiet) std::cerr << "error: " << e.what() << "\n";
    if (dynamic_cast<const mkflow::FormatError*>(&e)) return 2;
    if (dynamic_cast<const mkflow::ArgumentError*>(&e)) return 2;
    if (dynamic_cast<const mkflow::IngestionError*>(&e)) return 2;
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_hint();

    CLI::App app{"mkflow: dual-formulation curvature flow on the disk"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    bool quiet = false;
    int levels = 3;

    auto* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--out", out_override, "output directory override");
    run_cmd->add_flag("--quiet", quiet, "suppress progress output");

    auto* study_cmd = app.add_subcommand("study", "grid-refinement convergence study");
    study_cmd->add_option("--config", config_path, "config file")->required();
    study_cmd->add_option("--levels", levels, "refinement levels (2-4)");
    study_cmd->add_option("--out", out_override, "output directory override");
    study_cmd->add_flag("--quiet", quiet, "suppress progress output");

    std::vector<std::string> spec_strs;
    int cc_samples = 200;
    unsigned long long cc_seed = 20240901ull;
    auto* cc_cmd = app.add_subcommand("check-conditions",
                                      "verify the structural conditions of the operator family");
    cc_cmd->add_option("--spec", spec_strs,
                       "spec as n,k,beta,alpha (repeatable; default: the four stock specs)");
    cc_cmd->add_option("--samples", cc_samples, "sample count per spec");
    cc_cmd->add_option("--seed", cc_seed, "sample RNG seed");
    cc_cmd->add_flag("--quiet", quiet, "suppress progress output");

    double bt_velocity = 0.5, bt_C0 = 1.0, bt_C1 = 3.0;
    auto* bt_cmd = app.add_subcommand("boost-test",
                                      "Lorentz-boost invariance and sandwich preservation");
    bt_cmd->add_option("--velocity", bt_velocity, "boost velocity in (-0.9, 0.9)");
    bt_cmd->add_option("--C0", bt_C0, "lower sandwich constant");
    bt_cmd->add_option("--C1", bt_C1, "upper sandwich constant");
    bt_cmd->add_flag("--quiet", quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            auto cfg = mkflow::config_from_map(mkflow::parse_config_file(config_path));
            if (!out_override.empty()) cfg.out_dir = out_override;
            cfg.quiet = cfg.quiet || quiet;
            const auto res = mkflow::run_experiment(cfg, &std::cout);
            return res.exit_code;
        }
        if (study_cmd->parsed()) {
            auto cfg = mkflow::config_from_map(mkflow::parse_config_file(config_path));
            cfg.quiet = cfg.quiet || quiet;
            const auto table = mkflow::convergence_study(cfg, levels, quiet ? nullptr : &std::cout);
            if (!out_override.empty()) {
                std::filesystem::create_directories(out_override);
                std::ofstream o(std::filesystem::path(out_override) / "study.txt");
                o << "n_rho\tn_theta\terr\torder\tseconds\n";
                o.precision(10);
                for (const auto& lv : table)
                    o << lv.n_rho << '\t' << lv.n_theta << '\t' << lv.err << '\t' << lv.order
                      << '\t' << lv.seconds << '\n';
            }
            return 0;
        }
        if (cc_cmd->parsed()) {
            std::vector<mkflow::CurvatureSpec> specs;
            if (spec_strs.empty()) {
                specs = {{2, 0, 1.0, 1.0}, {2, 1, 0.5, 1.0}, {3, 1, 0.5, 2.0}, {3, 2, 1.0, 0.5}};
            } else {
                for (const auto& s : spec_strs) {
                    mkflow::CurvatureSpec sp;
                    if (std::sscanf(s.c_str(), "%d,%d,%lg,%lg", &sp.n, &sp.k, &sp.beta,
                                    &sp.alpha) != 4)
                        throw mkflow::ArgumentError("check-conditions: --spec wants n,k,beta,alpha");
                    specs.push_back(sp);
                }
            }
            bool all_ok = true;
            for (const auto& sp : specs) {
                const auto samples = mkflow::sample_cone(sp.n, cc_samples, 0.1, 10.0, cc_seed);
                const auto rep = mkflow::check_structural_conditions(sp, samples);
                all_ok &= rep.all_pass();
                if (!quiet) {
                    std::printf("spec (n=%d,k=%d,beta=%g,alpha=%g): %s  eps0=%.6g  "
                                "worst_concavity=%.3g  samples=%d\n",
                                sp.n, sp.k, sp.beta, sp.alpha,
                                rep.all_pass() ? "PASS" : "FAIL", rep.epsilon0_estimate,
                                rep.worst_concavity_eigenvalue, rep.sample_count);
                    if (!rep.all_pass() && rep.failing_condition)
                        std::printf("  first failure: %s\n", rep.failing_condition);
                }
            }
            return all_ok ? 0 : 1;
        }
        if (bt_cmd->parsed()) {
            // Unit-hyperboloid invariance.
            mkflow::GraphPatch p;
            const int n1 = 6001, n2 = 41;
            p.x1.resize(n1);
            p.x2.resize(n2);
            p.u.resize(static_cast<std::size_t>(n1) * n2);
            for (int q = 0; q < n1; ++q) p.x1[q] = -6.0 + 12.0 * q / (n1 - 1);
            for (int q = 0; q < n2; ++q) p.x2[q] = -2.0 + 4.0 * q / (n2 - 1);
            for (int i2 = 0; i2 < n2; ++i2)
                for (int i1 = 0; i1 < n1; ++i1)
                    p.u[static_cast<std::size_t>(i2) * n1 + i1] =
                        std::sqrt(1.0 + p.x1[i1] * p.x1[i1] + p.x2[i2] * p.x2[i2]);
            const auto inv = mkflow::lorentz_boost(p, bt_velocity);
            double err = 0.0;
            for (std::size_t i2 = 0; i2 < inv.boosted.n2(); ++i2)
                for (std::size_t i1 = 0; i1 < inv.boosted.n1(); ++i1) {
                    const double x1v = inv.boosted.x1[i1], x2v = inv.boosted.x2[i2];
                    if (x1v * x1v + x2v * x2v > 16.0) continue;
                    err = std::max(err, std::abs(inv.boosted.at(i1, i2) -
                                                 std::sqrt(1.0 + x1v * x1v + x2v * x2v)));
                }
            // Sandwich preservation for u = sqrt(|x|^2 + (C0+C1)/2).
            const double Cmid = 0.5 * (bt_C0 + bt_C1);
            for (int i2 = 0; i2 < n2; ++i2)
                for (int i1 = 0; i1 < n1; ++i1)
                    p.u[static_cast<std::size_t>(i2) * n1 + i1] =
                        std::sqrt(Cmid + p.x1[i1] * p.x1[i1] + p.x2[i2] * p.x2[i2]);
            const auto sw = mkflow::lorentz_boost(p, bt_velocity, bt_C0, bt_C1);
            if (!quiet) {
                std::printf("hyperboloid invariance max error: %.3g (tolerance 1e-6)\n", err);
                std::printf("sandwich violations: %d, margins [%.4g, %.4g]\n",
                            sw.sandwich_violations, sw.margin_low, sw.margin_high);
            }
            return (err <= 1e-6 && sw.sandwich_violations == 0) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        return mapped_exit(e, quiet);
    }
    return 0;
}
