#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "mkflow/errors.hpp"
#include "mkflow/linalg.hpp"

namespace mkflow {

// Cell-centered polar grid on the disk of radius r. Radial nodes sit at
// rho_i = (i + 1/2) * r / n_rho, so no node lies at rho = 0 or rho = r;
// Dirichlet data lives on a ghost ring at rho = r exactly. n_theta is
// even so every node has an antipodal partner across the origin.
//
// Angular first/second differences use trig-corrected denominators
// (2 sin h, 4 sin^2(h/2)); mode-1 fields, and hence linear Cartesian
// fields, differentiate exactly.
struct PolarGrid {
    double r = 0.0;
    int n_rho = 0;
    int n_theta = 0;
    double h_rho = 0.0, h_theta = 0.0;

    std::vector<double> rho, theta, cth, sth;
    std::vector<double> w;            // sqrt(1 - rho^2) per ring
    std::vector<double> w2, w3;       // powers used by the dual metric
    std::vector<double> inv_rho, inv_rho2;

    double inv_2h = 0.0, inv_h2 = 0.0; // uniform radial stencils
    double inv_2s = 0.0, inv_4s2 = 0.0;// corrected angular denominators
    double w_boundary = 0.0;           // sqrt(1 - r^2)

    // Last-ring one-sided stencils through the ghost node at rho = r
    // (offsets -h, 0, +h/2 and -2h, -h, 0, +h/2).
    double bd1[3] = {0, 0, 0};
    double bd2[4] = {0, 0, 0, 0};

    // Angular low-pass plan for the origin neighborhood: at ring i only
    // Fourier modes |m| <= mode_cap[i] are kept by the flow integrator.
    // mode_cap[i] == n_theta/2 means the ring is never filtered. The
    // kernel realizes the projection as a circular convolution, which
    // commutes with index rotation bit-exactly. filter_period[i] is the
    // step cadence that keeps round-off-seeded unstable modes below
    // ~1e-11 between applications.
    std::vector<int> mode_cap;
    std::vector<int> filter_period;
    std::vector<std::vector<double>> filter_kernel; // empty for unfiltered rings

    // Per-ring explicit-update bound of the filtered second-difference
    // symbols, per unit diffusion coefficient (radial + capped angular,
    // with the dual metric powers folded in).
    std::vector<double> stiff_geom;

    std::size_t size() const { return static_cast<std::size_t>(n_rho) * n_theta; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_theta + j; }
    int antipode(int j) const { return (j + n_theta / 2) % n_theta; }
    int jnext(int j) const { return j + 1 == n_theta ? 0 : j + 1; }
    int jprev(int j) const { return j == 0 ? n_theta - 1 : j - 1; }

    double xi1(int i, int j) const { return rho[i] * cth[j]; }
    double xi2(int i, int j) const { return rho[i] * sth[j]; }
};

std::shared_ptr<const PolarGrid> build_grid(double r, int n_rho, int n_theta);

// Scalar field sampled at the grid nodes, plus an optional ghost ring
// carrying the Dirichlet value at rho = r.
struct ScalarField {
    std::shared_ptr<const PolarGrid> grid;
    std::vector<double> v;
    std::vector<double> ghost; // size n_theta when set, empty otherwise

    ScalarField() = default;
    explicit ScalarField(std::shared_ptr<const PolarGrid> g, double fill = 0.0)
        : grid(std::move(g)), v(grid->size(), fill) {}

    bool has_ghost() const { return !ghost.empty(); }
    double& at(int i, int j) { return v[grid->idx(i, j)]; }
    double at(int i, int j) const { return v[grid->idx(i, j)]; }
    void set_ghost(std::vector<double> g);
};

// All five polar derivatives at one node. Radial stencils across the
// origin use the antipodal ring-0 node; the outermost ring uses the
// one-sided stencils through the ghost value.
struct NodeDerivs {
    double d_rho, d_rho2, d_th, d_th2, d_rth;
};

namespace stencil {

inline double th1(const double* row, int n_theta, int j, double inv_2s) {
    const int jp = j + 1 == n_theta ? 0 : j + 1;
    const int jm = j == 0 ? n_theta - 1 : j - 1;
    return (row[jp] - row[jm]) * inv_2s;
}

inline double th2(const double* row, int n_theta, int j, double inv_4s2) {
    const int jp = j + 1 == n_theta ? 0 : j + 1;
    const int jm = j == 0 ? n_theta - 1 : j - 1;
    return (row[jp] - 2.0 * row[j] + row[jm]) * inv_4s2;
}

// First/second radial derivative of the array `u` (with ghost `gh`) at
// node (i, j). Works for any per-node field laid out like the grid.
inline void radial(const PolarGrid& g, const double* u, const double* gh, int i, int j,
                   double* d1, double* d2) {
    const int nth = g.n_theta;
    const double u0 = u[static_cast<std::size_t>(i) * nth + j];
    if (i == g.n_rho - 1) {
        const double um1 = u[static_cast<std::size_t>(i - 1) * nth + j];
        const double um2 = u[static_cast<std::size_t>(i - 2) * nth + j];
        const double ub = gh[j];
        *d1 = g.bd1[0] * um1 + g.bd1[1] * u0 + g.bd1[2] * ub;
        *d2 = g.bd2[0] * um2 + g.bd2[1] * um1 + g.bd2[2] * u0 + g.bd2[3] * ub;
    } else {
        const double vm = (i == 0) ? u[g.antipode(j)]
                                   : u[static_cast<std::size_t>(i - 1) * nth + j];
        const double vp = u[static_cast<std::size_t>(i + 1) * nth + j];
        *d1 = (vp - vm) * g.inv_2h;
        *d2 = (vp - 2.0 * u0 + vm) * g.inv_h2;
    }
}

} // namespace stencil

// Self-contained per-node derivative evaluation (recomputes neighbor
// angular derivatives in place). Reference path; the batched flow kernel
// reproduces it bit-exactly.
NodeDerivs node_derivs(const ScalarField& f, int i, int j);

// Hessian in the local (radial, tangential) orthonormal frame at (i, j):
//   H_rr = f_rhorho,  H_rt = (f_rhotheta - f_theta/rho)/rho,
//   H_tt = f_thetatheta/rho^2 + f_rho/rho.
SymMat2 hessian_local(const PolarGrid& g, const NodeDerivs& d, int i);

struct VectorField2 {
    std::vector<double> x, y;
};

// Cartesian gradient / Hessian of a field (second-order accurate; exact
// on linear fields by the corrected angular stencils).
VectorField2 gradient(const ScalarField& f);
std::vector<SymMat2> hessian(const ScalarField& f);

} // namespace mkflow
