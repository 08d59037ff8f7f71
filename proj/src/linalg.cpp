#include "mkflow/linalg.hpp"

#include <algorithm>
#include <cstdlib>

#include "mkflow/errors.hpp"

namespace mkflow {

std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
    if (n < 1 || static_cast<std::size_t>(n) * n != a.size())
        throw ArgumentError("jacobi_eigenvalues: bad dimension");
    auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-30) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

std::vector<double> fd_weights(double x0, std::span<const double> x, int m) {
    const int nd = static_cast<int>(x.size());
    if (nd == 0 || m < 0 || m >= nd)
        throw ArgumentError("fd_weights: need more nodes than derivative order");

    // Fornberg (1988), Mathematics of Computation 51, 699-706.
    std::vector<double> c(static_cast<std::size_t>(nd) * (m + 1), 0.0);
    auto C = [&](int i, int j) -> double& { return c[static_cast<std::size_t>(i) * (m + 1) + j]; };

    double c1 = 1.0;
    double c4 = x[0] - x0;
    C(0, 0) = 1.0;
    for (int i = 1; i < nd; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(nd);
    for (int i = 0; i < nd; ++i) w[i] = C(i, m);
    return w;
}

} // namespace mkflow
