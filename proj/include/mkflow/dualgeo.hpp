#pragma once

#include <array>
#include <span>
#include <vector>

#include "mkflow/grid.hpp"

namespace mkflow {

// Discretized dual potential u* on the polar grid at time t. The dual
// domain is spacelike by construction (grid radius r < 1).
struct DualState {
    ScalarField u_star;
    double t = 0.0;

    const PolarGrid& grid() const { return *u_star.grid; }
};

// Per-node eigenvalues of the dual curvature matrix, ascending, plus the
// dual metric factor w*. kappa are the reciprocals of the primal
// principal curvatures; a valid convex state has kappa1 > 0 everywhere.
struct CurvatureField {
    std::vector<double> kappa1, kappa2;
    std::vector<double> w_star;
    double min_kappa = 0.0;
    int min_i = 0, min_j = 0;
};

// A = w* gamma* H gamma* in the local (radial, tangential) frame, where
// gamma* = diag(w*, 1) exactly. Eigenvalues agree with the Cartesian
// form; the local frame keeps every coefficient independent of theta.
SymMat2 dual_curvature_local(const DualState& s, int i, int j);

// Same matrix in Cartesian components.
SymMat2 dual_curvature_matrix(const DualState& s, int i, int j);

CurvatureField dual_curvatures(const DualState& s);
CurvatureField dual_curvatures_serial(const DualState& s);

// v = u*/w* together with Lambda_ij = nabla^bar_ij v - v delta_ij, which
// equals the dual curvature matrix; Lambda is computed once through the
// same code path as dual_curvature_matrix, never re-derived from v.
struct HyperbolicLift {
    ScalarField v;                 // ghost carried over when present
    std::vector<SymMat2> Lambda;   // Cartesian components
};
HyperbolicLift hyperbolic_lift(const DualState& s);

// Graph samples u(x) on a Cartesian tensor patch x1 x x2,
// u[i2 * x1.size() + i1].
struct GraphPatch {
    std::vector<double> x1, x2;
    std::vector<double> u;

    std::size_t n1() const { return x1.size(); }
    std::size_t n2() const { return x2.size(); }
    double at(std::size_t i1, std::size_t i2) const { return u[i2 * x1.size() + i1]; }
    double& at(std::size_t i1, std::size_t i2) { return u[i2 * x1.size() + i1]; }
};

// Discrete Legendre transform, dual -> primal: u(x) = sup_xi (x.xi - u*(xi)),
// sup over grid nodes and the ghost ring. Lower approximation, O(h) in value.
std::vector<double> legendre_dual_to_primal(const DualState& s,
                                            std::span<const std::array<double, 2>> xs);

// Discrete Legendre transform at one dual point from graph samples.
double legendre_point(const GraphPatch& p, double xi1, double xi2);

// Ingest graph-form initial data: u*(xi) = sup_x (x.xi - u(x)) at every
// node and on the ghost ring. Rejects patches whose discrete slopes
// between neighbors reach |Du| >= 1 (not spacelike).
ScalarField legendre_primal_to_dual(const GraphPatch& p, std::shared_ptr<const PolarGrid> grid);

} // namespace mkflow
