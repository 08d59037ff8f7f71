#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mkflow/errors.hpp"

namespace mkflow {

// Operator family f_* = (s_n)^(beta/n) (s_k)^((1-beta)/k) on the positive
// cone, together with the flow speed power alpha. k = 0 is admitted only
// with beta = 1 (the pure s_n member), otherwise the exponent on s_k is
// undefined and degree-1 homogeneity fails.
struct CurvatureSpec {
    int n = 2;
    int k = 1;
    double beta = 1.0;
    double alpha = 1.0;

    void validate() const;
};

// Inputs with min component in (0, kKappaFloor] are treated as boundary:
// f_* vanishes there and gradients blow up.
inline constexpr double kKappaFloor = 1e-12;

// Normalized elementary symmetric polynomial e_k(kappa)/C(n,k), s_0 = 1.
// Stable O(n^2) recurrence over the coefficients of prod(1 + kappa_i x).
double sym_poly(int k, std::span<const double> kappa);

double f_star(const CurvatureSpec& spec, std::span<const double> kappa);
std::vector<double> f_star_grad(const CurvatureSpec& spec, std::span<const double> kappa);

// F(kappa) = 1 / f_*(1/kappa_1, ..., 1/kappa_n).
double big_f(const CurvatureSpec& spec, std::span<const double> kappa);

// Fast two-dimensional path shared by the disk solver; must agree with
// f_star(spec, {k1,k2}) to the last bit, so f_star delegates here for n=2.
inline double f_star_n2(const CurvatureSpec& spec, double k1, double k2) {
    if (spec.beta == 1.0 || spec.k == spec.n) return std::sqrt(k1 * k2);
    // k == 1: s_1 = (k1+k2)/2, s_2 = k1 k2
    return std::pow(k1 * k2, 0.5 * spec.beta) * std::pow(0.5 * (k1 + k2), 1.0 - spec.beta);
}

// Gradient components of the n=2 family, analytic (log differentiation).
inline void f_star_grad_n2(const CurvatureSpec& spec, double k1, double k2, double f,
                           double* g1, double* g2) {
    if (spec.beta == 1.0 || spec.k == spec.n) {
        *g1 = 0.5 * f / k1;
        *g2 = 0.5 * f / k2;
        return;
    }
    const double s1 = 0.5 * (k1 + k2);
    const double hb = 0.5 * spec.beta, ob = 0.5 * (1.0 - spec.beta);
    *g1 = f * (hb / k1 + ob / s1);
    *g2 = f * (hb / k2 + ob / s1);
}

struct ConditionReport {
    bool concave = false;          // (1.2)
    bool positive = false;         // (1.3)
    bool monotone = false;         // (1.4)
    bool homogeneous = false;      // (1.5)
    bool epsilon0_positive = false;// (1.6)
    bool unbounded_in_last = false;// (1.7)
    bool normalized = false;       // (1.8)

    double epsilon0_estimate = 0.0;        // min over samples of sum f^i k_i^2 / (f_* sum k_i)
    double worst_concavity_eigenvalue = 0.0;
    double max_R_found = 0.0;              // largest R the (1.7) search needed
    int sample_count = 0;

    // First failing sample, if any condition failed.
    std::vector<double> failing_sample;
    const char* failing_condition = nullptr;

    bool all_pass() const {
        return concave && positive && monotone && homogeneous && epsilon0_positive &&
               unbounded_in_last && normalized;
    }
};

struct ConditionCheckOptions {
    double tol_concavity = 1e-6;   // max FD-Hessian eigenvalue allowed
    double tol_homogeneity = 1e-10;// relative, at c in {0.5, 2}
    double growth_target = 100.0;  // the C of condition (1.7)
    double fd_rel_step = 1e-4;     // relative h of the FD Hessian
};

// Verifies conditions (1.2)-(1.8) empirically at each sample. Never
// silently passes: the first failure is recorded with its sample.
ConditionReport check_structural_conditions(const CurvatureSpec& spec,
                                            std::span<const std::vector<double>> samples,
                                            const ConditionCheckOptions& opt = {});

// Log-uniform sample cloud in [lo, hi]^n, deterministic in `seed`.
std::vector<std::vector<double>> sample_cone(int n, int count, double lo, double hi,
                                             std::uint64_t seed);

} // namespace mkflow
