#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mkflow {

// Symmetric 2x2 matrix. Component names follow the frame the caller uses
// (Cartesian xx/xy/yy or polar rr/rt/tt).
struct SymMat2 {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;

    // Eigenvalues in ascending order, closed form. Entries in this project
    // are O(1), so the plain square root cannot overflow.
    std::pair<double, double> eigenvalues() const {
        const double mean = 0.5 * (a11 + a22);
        const double half = 0.5 * (a11 - a22);
        const double disc = std::sqrt(half * half + a12 * a12);
        return {mean - disc, mean + disc};
    }

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a12; }

    SymMat2 operator+(const SymMat2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
    SymMat2 operator-(const SymMat2& o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
    SymMat2 operator*(double c) const { return {c * a11, c * a12, c * a22}; }

    // R(th) * A * R(th)^T with R the active rotation by angle th.
    SymMat2 rotated(double cos_th, double sin_th) const {
        const double c = cos_th, s = sin_th;
        return {c * c * a11 - 2.0 * c * s * a12 + s * s * a22,
                c * s * (a11 - a22) + (c * c - s * s) * a12,
                s * s * a11 + 2.0 * c * s * a12 + c * c * a22};
    }
};

// Cyclic Jacobi eigenvalue iteration for small dense symmetric matrices
// (n <= 8 in this project). `a` is row-major n*n, overwritten. Returns
// eigenvalues in ascending order.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n);

// Finite-difference weights for the m-th derivative at x0 from the nodes
// x (Fornberg's recursion). Exact for polynomials of degree < x.size().
std::vector<double> fd_weights(double x0, std::span<const double> x, int m);

} // namespace mkflow
