// Timings of the OpenMP flow kernel against the serial per-node reference,
// plus one full Heun step. Usage: bench_kernels [n_rho n_theta reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "mkflow/experiment.hpp"

using namespace mkflow;
using clk = std::chrono::steady_clock;

namespace {
double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}
} // namespace

int main(int argc, char** argv) {
    int n_rho = 128, n_theta = 256, reps = 50;
    if (argc >= 3) {
        n_rho = std::atoi(argv[1]);
        n_theta = std::atoi(argv[2]);
    }
    if (argc >= 4) reps = std::atoi(argv[3]);

    ExperimentConfig cfg;
    cfg.initial = "sandwiched-bump";
    cfg.C0 = 0.5;
    cfg.C1 = 2.0;
    cfg.strictify_eps = 0.8;
    cfg.n_rho = n_rho;
    cfg.n_theta = n_theta;
    FlowProblem p = problem_from_config(cfg);

    DualState s;
    s.t = 0.0;
    s.u_star = p.u0_star;

    const double nodes = static_cast<double>(n_rho) * n_theta;
    std::printf("grid %dx%d, %d reps, omp max threads %d\n", n_rho, n_theta, reps,
                omp_get_max_threads());

    // Warm up and correctness cross-check.
    const RhsEval a = eval_rhs(p, s);
    const RhsEval b = eval_rhs_serial(p, s);
    double dmax = 0.0;
    for (std::size_t q = 0; q < a.rate.v.size(); ++q)
        dmax = std::max(dmax, std::abs(a.rate.v[q] - b.rate.v[q]));
    std::printf("parallel vs serial rate field max diff: %.3g %s\n", dmax,
                dmax == 0.0 ? "(bit-identical)" : "");

    auto t0 = clk::now();
    for (int q = 0; q < reps; ++q) (void)eval_rhs_serial(p, s);
    const double ts = seconds_since(t0) / reps;

    t0 = clk::now();
    for (int q = 0; q < reps; ++q) (void)eval_rhs(p, s);
    const double tp = seconds_since(t0) / reps;

    const double dt = 0.25 * stable_dt(p, s);
    t0 = clk::now();
    for (int q = 0; q < reps; ++q) (void)step(p, s, dt);
    const double tstep = seconds_since(t0) / reps;

    std::printf("rhs serial   : %8.3f ms  (%6.1f ns/node)\n", ts * 1e3, ts / nodes * 1e9);
    std::printf("rhs parallel : %8.3f ms  (%6.1f ns/node)  speedup %.2fx\n", tp * 1e3,
                tp / nodes * 1e9, ts / tp);
    std::printf("heun step    : %8.3f ms\n", tstep * 1e3);
    return 0;
}
