#include "mkflow/curvfun.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "mkflow/linalg.hpp"

namespace mkflow {

void CurvatureSpec::validate() const {
    if (n < 2) throw ArgumentError("CurvatureSpec: n must be >= 2");
    if (k < 0 || k > n) throw ArgumentError("CurvatureSpec: need 0 <= k <= n");
    if (!(beta > 0.0 && beta <= 1.0)) throw ArgumentError("CurvatureSpec: beta must be in (0,1]");
    if (!(alpha > 0.0)) throw ArgumentError("CurvatureSpec: alpha must be > 0");
    if (k == 0 && beta != 1.0)
        throw ArgumentError("CurvatureSpec: k = 0 requires beta = 1 (exponent on s_0 undefined)");
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
    return r;
}

// Coefficients e_0..e_m of prod(1 + kappa_i x); all terms nonnegative for
// kappa in the positive cone, so the recurrence is cancellation-free.
void elem_sym_all(std::span<const double> kappa, int m, std::vector<double>& e) {
    e.assign(m + 1, 0.0);
    e[0] = 1.0;
    for (double kv : kappa) {
        for (int j = std::min<int>(m, static_cast<int>(e.size()) - 1); j >= 1; --j)
            e[j] += kv * e[j - 1];
    }
}

void require_interior(std::span<const double> kappa) {
    for (std::size_t i = 0; i < kappa.size(); ++i) {
        if (!std::isfinite(kappa[i]))
            throw DomainBoundaryError("kappa component not finite", static_cast<int>(i));
        if (kappa[i] <= kKappaFloor)
            throw DomainBoundaryError("kappa touches the boundary of the positive cone",
                                      static_cast<int>(i));
    }
}

} // namespace

double sym_poly(int k, std::span<const double> kappa) {
    const int n = static_cast<int>(kappa.size());
    if (k < 0 || k > n) throw ArgumentError("sym_poly: index out of range");
    for (std::size_t i = 0; i < kappa.size(); ++i)
        if (!std::isfinite(kappa[i]))
            throw ArgumentError("sym_poly: non-finite component " + std::to_string(i));
    if (k == 0) return 1.0;
    std::vector<double> e;
    elem_sym_all(kappa, k, e);
    return e[k] / binom(n, k);
}

double f_star(const CurvatureSpec& spec, std::span<const double> kappa) {
    spec.validate();
    if (static_cast<int>(kappa.size()) != spec.n)
        throw ArgumentError("f_star: kappa length must equal spec.n");
    require_interior(kappa);
    if (spec.n == 2) return f_star_n2(spec, kappa[0], kappa[1]);
    if (spec.beta == 1.0 || spec.k == spec.n) {
        double logsum = 0.0;
        for (double kv : kappa) logsum += std::log(kv);
        return std::exp(logsum / spec.n);
    }
    const double sn = sym_poly(spec.n, kappa);
    const double sk = sym_poly(spec.k, kappa);
    return std::pow(sn, spec.beta / spec.n) * std::pow(sk, (1.0 - spec.beta) / spec.k);
}

std::vector<double> f_star_grad(const CurvatureSpec& spec, std::span<const double> kappa) {
    spec.validate();
    if (static_cast<int>(kappa.size()) != spec.n)
        throw ArgumentError("f_star_grad: kappa length must equal spec.n");
    require_interior(kappa);

    const int n = spec.n;
    std::vector<double> g(n);
    const double f = f_star(spec, kappa);

    if (spec.n == 2) {
        f_star_grad_n2(spec, kappa[0], kappa[1], f, &g[0], &g[1]);
        return g;
    }
    if (spec.beta == 1.0 || spec.k == spec.n) {
        for (int i = 0; i < n; ++i) g[i] = f / (n * kappa[i]);
        return g;
    }

    // d/dk_i log f = (beta/n) e_{n-1}(kappa_-i)/e_n + ((1-beta)/k) e_{k-1}(kappa_-i)/e_k
    std::vector<double> e, reduced(n - 1), er;
    elem_sym_all(kappa, n, e);
    for (int i = 0; i < n; ++i) {
        int m = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) reduced[m++] = kappa[j];
        elem_sym_all(reduced, n - 1, er);
        const double term_sn = (spec.beta / n) * er[n - 1] / e[n];
        const double term_sk = ((1.0 - spec.beta) / spec.k) * er[spec.k - 1] / e[spec.k];
        g[i] = f * (term_sn + term_sk);
    }
    return g;
}

double big_f(const CurvatureSpec& spec, std::span<const double> kappa) {
    require_interior(kappa);
    std::vector<double> inv(kappa.size());
    for (std::size_t i = 0; i < kappa.size(); ++i) inv[i] = 1.0 / kappa[i];
    return 1.0 / f_star(spec, inv);
}

std::vector<std::vector<double>> sample_cone(int n, int count, double lo, double hi,
                                             std::uint64_t seed) {
    if (!(lo > 0.0 && hi > lo)) throw ArgumentError("sample_cone: need 0 < lo < hi");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    std::vector<std::vector<double>> out(count, std::vector<double>(n));
    for (auto& s : out)
        for (auto& kv : s) kv = std::exp(u(rng));
    return out;
}

ConditionReport check_structural_conditions(const CurvatureSpec& spec,
                                            std::span<const std::vector<double>> samples,
                                            const ConditionCheckOptions& opt) {
    spec.validate();
    if (samples.empty()) throw ArgumentError("check_structural_conditions: empty sample set");

    ConditionReport rep;
    rep.sample_count = static_cast<int>(samples.size());
    rep.concave = rep.positive = rep.monotone = rep.homogeneous = true;
    rep.epsilon0_positive = rep.unbounded_in_last = true;
    rep.epsilon0_estimate = std::numeric_limits<double>::infinity();
    rep.worst_concavity_eigenvalue = -std::numeric_limits<double>::infinity();

    auto fail = [&](const char* cond, const std::vector<double>& s, bool* flag) {
        *flag = false;
        if (!rep.failing_condition) {
            rep.failing_condition = cond;
            rep.failing_sample = s;
        }
    };

    // (1.8) normalization
    std::vector<double> ones(spec.n, 1.0);
    rep.normalized = std::abs(f_star(spec, ones) - 1.0) <= 1e-14;
    if (!rep.normalized && !rep.failing_condition) {
        rep.failing_condition = "(1.8) normalization";
        rep.failing_sample = ones;
    }

    const int n = spec.n;
    std::vector<double> kp(n);
    for (const auto& s : samples) {
        require_interior(s);
        const double f = f_star(spec, s);
        const auto g = f_star_grad(spec, s);

        // (1.3) positivity
        if (!(f > 0.0)) fail("(1.3) positivity of f_*", s, &rep.positive);

        // (1.4) monotonicity
        for (double gi : g)
            if (!(gi > 0.0)) {
                fail("(1.4) positivity of the gradient", s, &rep.monotone);
                break;
            }

        // (1.5) degree-1 homogeneity at c in {0.5, 2}
        for (double c : {0.5, 2.0}) {
            for (int i = 0; i < n; ++i) kp[i] = c * s[i];
            const double fc = f_star(spec, kp);
            if (std::abs(fc - c * f) > opt.tol_homogeneity * std::max(1.0, std::abs(c * f))) {
                fail("(1.5) homogeneity", s, &rep.homogeneous);
                break;
            }
        }

        // (1.6) epsilon_0 estimate
        double num = 0.0, den_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            num += g[i] * s[i] * s[i];
            den_sum += s[i];
        }
        const double eps0 = num / (f * den_sum);
        rep.epsilon0_estimate = std::min(rep.epsilon0_estimate, eps0);
        if (!(eps0 > 0.0)) fail("(1.6) epsilon_0 positive", s, &rep.epsilon0_positive);

        // (1.7) growth in the last slot, doubling search
        {
            bool found = false;
            double R = 1.0;
            for (int it = 0; it < 60; ++it) {
                for (int i = 0; i < n - 1; ++i) kp[i] = s[i];
                kp[n - 1] = s[n - 1] + R;
                if (f_star(spec, kp) > opt.growth_target) {
                    found = true;
                    break;
                }
                R *= 2.0;
            }
            rep.max_R_found = std::max(rep.max_R_found, R);
            if (!found) fail("(1.7) growth in the last argument", s, &rep.unbounded_in_last);
        }

        // (1.2) concavity: finite-difference Hessian, max eigenvalue
        {
            std::vector<double> H(static_cast<std::size_t>(n) * n, 0.0);
            std::vector<double> h(n);
            for (int i = 0; i < n; ++i) h[i] = opt.fd_rel_step * s[i];
            auto feval = [&](const std::vector<double>& x) { return f_star(spec, x); };
            std::vector<double> x(s.begin(), s.end());
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    double v;
                    if (i == j) {
                        x[i] = s[i] + h[i]; const double fp = feval(x);
                        x[i] = s[i] - h[i]; const double fm = feval(x);
                        x[i] = s[i];
                        v = (fp - 2.0 * f + fm) / (h[i] * h[i]);
                    } else {
                        x[i] = s[i] + h[i]; x[j] = s[j] + h[j]; const double fpp = feval(x);
                        x[j] = s[j] - h[j]; const double fpm = feval(x);
                        x[i] = s[i] - h[i]; const double fmm = feval(x);
                        x[j] = s[j] + h[j]; const double fmp = feval(x);
                        x[i] = s[i]; x[j] = s[j];
                        v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
                    }
                    H[static_cast<std::size_t>(i) * n + j] = v;
                    H[static_cast<std::size_t>(j) * n + i] = v;
                }
            }
            const auto ev = jacobi_eigenvalues(H, n);
            rep.worst_concavity_eigenvalue = std::max(rep.worst_concavity_eigenvalue, ev.back());
            if (ev.back() > opt.tol_concavity) fail("(1.2) concavity", s, &rep.concave);
        }
    }
    return rep;
}

} // namespace mkflow
