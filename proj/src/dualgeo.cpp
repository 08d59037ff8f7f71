#include "mkflow/dualgeo.hpp"

#include <cmath>
#include <string>

namespace mkflow {

namespace {

// Angular-derivative table for one field: values at all nodes plus the
// ghost ring. The batched curvature kernels read radial stencils off it.
struct ThetaTable {
    std::vector<double> fth;
    std::vector<double> fth_ghost;
};

void build_theta_table(const ScalarField& f, ThetaTable& t, bool parallel) {
    const PolarGrid& g = *f.grid;
    const int nth = g.n_theta;
    t.fth.resize(g.size());
    t.fth_ghost.resize(nth);
    const double* u = f.v.data();

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < g.n_rho; ++i) {
        const double* row = u + g.idx(i, 0);
        double* out = t.fth.data() + g.idx(i, 0);
        for (int j = 0; j < nth; ++j) out[j] = stencil::th1(row, nth, j, g.inv_2s);
    }
    for (int j = 0; j < nth; ++j)
        t.fth_ghost[j] = stencil::th1(f.ghost.data(), nth, j, g.inv_2s);
}

inline double radial_d1(const PolarGrid& g, const double* u, const double* gh, int i, int j) {
    const int nth = g.n_theta;
    if (i == g.n_rho - 1) {
        const double um1 = u[static_cast<std::size_t>(i - 1) * nth + j];
        const double u0 = u[static_cast<std::size_t>(i) * nth + j];
        return g.bd1[0] * um1 + g.bd1[1] * u0 + g.bd1[2] * gh[j];
    }
    const double vm = (i == 0) ? u[g.antipode(j)] : u[static_cast<std::size_t>(i - 1) * nth + j];
    const double vp = u[static_cast<std::size_t>(i + 1) * nth + j];
    return (vp - vm) * g.inv_2h;
}

inline SymMat2 a_loc_at(const PolarGrid& g, const double* u, const double* gh,
                        const ThetaTable& t, int i, int j) {
    NodeDerivs d;
    stencil::radial(g, u, gh, i, j, &d.d_rho, &d.d_rho2);
    const std::size_t id = g.idx(i, j);
    d.d_th = t.fth[id];
    d.d_th2 = stencil::th2(u + g.idx(i, 0), g.n_theta, j, g.inv_4s2);
    d.d_rth = radial_d1(g, t.fth.data(), t.fth_ghost.data(), i, j);
    const SymMat2 h = hessian_local(g, d, i);
    return {g.w3[i] * h.a11, g.w2[i] * h.a12, g.w[i] * h.a22};
}

CurvatureField curvatures_impl(const DualState& s, bool parallel) {
    const PolarGrid& g = s.grid();
    if (!s.u_star.has_ghost())
        throw StateError("dual_curvatures: boundary ghost ring not populated");

    ThetaTable t;
    build_theta_table(s.u_star, t, parallel);

    CurvatureField cf;
    cf.kappa1.resize(g.size());
    cf.kappa2.resize(g.size());
    cf.w_star.resize(g.size());
    const double* u = s.u_star.v.data();
    const double* gh = s.u_star.ghost.data();

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < g.n_rho; ++i) {
        for (int j = 0; j < g.n_theta; ++j) {
            const SymMat2 a = a_loc_at(g, u, gh, t, i, j);
            const auto [k1, k2] = a.eigenvalues();
            const std::size_t id = g.idx(i, j);
            cf.kappa1[id] = k1;
            cf.kappa2[id] = k2;
            cf.w_star[id] = g.w[i];
        }
    }

    cf.min_kappa = cf.kappa1[0];
    cf.min_i = cf.min_j = 0;
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            const double k1 = cf.kappa1[g.idx(i, j)];
            if (!std::isfinite(k1))
                throw NumericError("dual_curvatures: non-finite matrix entries", i, j);
            if (k1 < cf.min_kappa) {
                cf.min_kappa = k1;
                cf.min_i = i;
                cf.min_j = j;
            }
        }
    return cf;
}

} // namespace

SymMat2 dual_curvature_local(const DualState& s, int i, int j) {
    const PolarGrid& g = s.grid();
    if (g.rho[i] >= 1.0) throw DomainBoundaryError("dual_curvature: |xi| >= 1", i);
    const NodeDerivs d = node_derivs(s.u_star, i, j);
    const SymMat2 h = hessian_local(g, d, i);
    return {g.w3[i] * h.a11, g.w2[i] * h.a12, g.w[i] * h.a22};
}

SymMat2 dual_curvature_matrix(const DualState& s, int i, int j) {
    const PolarGrid& g = s.grid();
    return dual_curvature_local(s, i, j).rotated(g.cth[j], g.sth[j]);
}

CurvatureField dual_curvatures(const DualState& s) { return curvatures_impl(s, true); }
CurvatureField dual_curvatures_serial(const DualState& s) { return curvatures_impl(s, false); }

HyperbolicLift hyperbolic_lift(const DualState& s) {
    const PolarGrid& g = s.grid();
    HyperbolicLift out;
    out.v = ScalarField(s.u_star.grid);
    for (int i = 0; i < g.n_rho; ++i) {
        const double inv_w = 1.0 / g.w[i];
        for (int j = 0; j < g.n_theta; ++j) out.v.at(i, j) = s.u_star.at(i, j) * inv_w;
    }
    if (s.u_star.has_ghost()) {
        std::vector<double> vg(g.n_theta);
        for (int j = 0; j < g.n_theta; ++j) vg[j] = s.u_star.ghost[j] / g.w_boundary;
        out.v.set_ghost(std::move(vg));
    }
    out.Lambda.resize(g.size());
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j)
            out.Lambda[g.idx(i, j)] = dual_curvature_matrix(s, i, j);
    return out;
}

std::vector<double> legendre_dual_to_primal(const DualState& s,
                                            std::span<const std::array<double, 2>> xs) {
    if (xs.empty()) throw ArgumentError("legendre_dual_to_primal: empty sample list");
    const PolarGrid& g = s.grid();
    std::vector<double> out(xs.size());
    for (std::size_t q = 0; q < xs.size(); ++q) {
        const double x1 = xs[q][0], x2 = xs[q][1];
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < g.n_rho; ++i)
            for (int j = 0; j < g.n_theta; ++j) {
                const double val =
                    x1 * g.xi1(i, j) + x2 * g.xi2(i, j) - s.u_star.at(i, j);
                if (val > best) best = val;
            }
        if (s.u_star.has_ghost())
            for (int j = 0; j < g.n_theta; ++j) {
                const double val = g.r * (x1 * g.cth[j] + x2 * g.sth[j]) - s.u_star.ghost[j];
                if (val > best) best = val;
            }
        out[q] = best;
    }
    return out;
}

double legendre_point(const GraphPatch& p, double xi1, double xi2) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i2 = 0; i2 < p.n2(); ++i2)
        for (std::size_t i1 = 0; i1 < p.n1(); ++i1) {
            const double val = p.x1[i1] * xi1 + p.x2[i2] * xi2 - p.at(i1, i2);
            if (val > best) best = val;
        }
    return best;
}

ScalarField legendre_primal_to_dual(const GraphPatch& p, std::shared_ptr<const PolarGrid> grid) {
    if (p.n1() < 2 || p.n2() < 2 || p.u.size() != p.n1() * p.n2())
        throw ArgumentError("legendre_primal_to_dual: malformed patch");

    // Spacelike check on discrete slopes between neighbors.
    for (std::size_t i2 = 0; i2 < p.n2(); ++i2)
        for (std::size_t i1 = 0; i1 + 1 < p.n1(); ++i1) {
            const double slope =
                (p.at(i1 + 1, i2) - p.at(i1, i2)) / (p.x1[i1 + 1] - p.x1[i1]);
            if (std::abs(slope) >= 1.0)
                throw IngestionError("samples not spacelike between x1 neighbors (" +
                                     std::to_string(i1) + "," + std::to_string(i2) + ")-(" +
                                     std::to_string(i1 + 1) + "," + std::to_string(i2) + ")");
        }
    for (std::size_t i1 = 0; i1 < p.n1(); ++i1)
        for (std::size_t i2 = 0; i2 + 1 < p.n2(); ++i2) {
            const double slope =
                (p.at(i1, i2 + 1) - p.at(i1, i2)) / (p.x2[i2 + 1] - p.x2[i2]);
            if (std::abs(slope) >= 1.0)
                throw IngestionError("samples not spacelike between x2 neighbors (" +
                                     std::to_string(i1) + "," + std::to_string(i2) + ")-(" +
                                     std::to_string(i1) + "," + std::to_string(i2 + 1) + ")");
        }

    ScalarField f(grid);
    const PolarGrid& g = *grid;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j)
            f.at(i, j) = legendre_point(p, g.xi1(i, j), g.xi2(i, j));
    std::vector<double> ghost(g.n_theta);
    for (int j = 0; j < g.n_theta; ++j)
        ghost[j] = legendre_point(p, g.r * g.cth[j], g.r * g.sth[j]);
    f.set_ghost(std::move(ghost));
    return f;
}

} // namespace mkflow
