#include "mkflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mkflow {

std::shared_ptr<const PolarGrid> build_grid(double r, int n_rho, int n_theta) {
    if (!(r > 0.0 && r < 1.0)) throw ArgumentError("build_grid: r must lie in (0,1)");
    if (n_rho < 3) throw ArgumentError("build_grid: n_rho must be >= 3");
    if (n_theta < 4 || n_theta % 2 != 0)
        throw ArgumentError("build_grid: n_theta must be even and >= 4");

    auto g = std::make_shared<PolarGrid>();
    g->r = r;
    g->n_rho = n_rho;
    g->n_theta = n_theta;
    g->h_rho = r / n_rho;
    g->h_theta = 2.0 * std::numbers::pi / n_theta;

    g->rho.resize(n_rho);
    g->w.resize(n_rho);
    g->w2.resize(n_rho);
    g->w3.resize(n_rho);
    g->inv_rho.resize(n_rho);
    g->inv_rho2.resize(n_rho);
    for (int i = 0; i < n_rho; ++i) {
        const double rho = (i + 0.5) * g->h_rho;
        g->rho[i] = rho;
        const double w = std::sqrt(1.0 - rho * rho);
        g->w[i] = w;
        g->w2[i] = w * w;
        g->w3[i] = w * w * w;
        g->inv_rho[i] = 1.0 / rho;
        g->inv_rho2[i] = 1.0 / (rho * rho);
    }

    g->theta.resize(n_theta);
    g->cth.resize(n_theta);
    g->sth.resize(n_theta);
    for (int j = 0; j < n_theta; ++j) {
        const double th = j * g->h_theta;
        g->theta[j] = th;
        g->cth[j] = std::cos(th);
        g->sth[j] = std::sin(th);
    }

    g->inv_2h = 1.0 / (2.0 * g->h_rho);
    g->inv_h2 = 1.0 / (g->h_rho * g->h_rho);
    g->inv_2s = 1.0 / (2.0 * std::sin(g->h_theta));
    const double sh = std::sin(0.5 * g->h_theta);
    g->inv_4s2 = 1.0 / (4.0 * sh * sh);
    g->w_boundary = std::sqrt(1.0 - r * r);

    {
        const double h = g->h_rho;
        const double pts1[3] = {-h, 0.0, 0.5 * h};
        const double pts2[4] = {-2.0 * h, -h, 0.0, 0.5 * h};
        const auto w1 = fd_weights(0.0, std::span<const double>(pts1, 3), 1);
        const auto w2 = fd_weights(0.0, std::span<const double>(pts2, 4), 2);
        std::copy(w1.begin(), w1.end(), g->bd1);
        std::copy(w2.begin(), w2.end(), g->bd2);
    }

    // Origin filter plan. The mode cap keeps the angular stiffness of
    // surviving modes at or below the radial one:
    //   sin(pi M / n_theta) <= rho_i h_theta w_i / h_rho.
    g->mode_cap.resize(n_rho);
    g->filter_period.resize(n_rho);
    g->filter_kernel.resize(n_rho);
    const int half = n_theta / 2;
    for (int i = 0; i < n_rho; ++i) {
        const double ratio = g->rho[i] * g->h_theta * g->w[i] / g->h_rho;
        int cap = half;
        if (ratio < 1.0)
            cap = std::max(1, static_cast<int>(std::floor(
                      (n_theta / std::numbers::pi) * std::asin(ratio))));
        g->mode_cap[i] = cap;
        if (cap >= half) {
            g->filter_period[i] = 0; // never filtered
            continue;
        }
        // Heun amplification of the stiffest removed mode ~ z^2/2 per step
        // with z ~ (h_rho / (rho h_theta))^2; pick the cadence that keeps
        // round-off-seeded growth under ~3e6 between applications.
        const double z = std::pow(g->h_rho / (g->rho[i] * g->h_theta), 2);
        const double growth = std::max(1.05, 0.5 * z * z);
        const int period = static_cast<int>(std::floor(std::log(3e6) / std::log(growth)));
        g->filter_period[i] = std::clamp(period, 1, 64);

        // Dirichlet projector kernel onto modes <= cap, normalized so a
        // constant ring is reproduced to round-off.
        auto& k = g->filter_kernel[i];
        k.resize(n_theta);
        double sum = 0.0;
        for (int d = 0; d < n_theta; ++d) {
            double acc = 1.0;
            for (int m = 1; m <= cap; ++m)
                acc += 2.0 * std::cos(2.0 * std::numbers::pi * m * d / n_theta);
            k[d] = acc / n_theta;
            sum += k[d];
        }
        for (double& kv : k) kv /= sum;
    }

    g->stiff_geom.resize(n_rho);
    for (int i = 0; i < n_rho; ++i) {
        const double rad = g->w3[i] * g->w[i] * 4.0 * g->inv_h2;
        const double s = std::sin(0.5 * g->mode_cap[i] * g->h_theta);
        const double ang = g->w2[i] * 4.0 * s * s * g->inv_4s2 * g->inv_rho2[i];
        g->stiff_geom[i] = rad + ang;
    }
    return g;
}

void ScalarField::set_ghost(std::vector<double> g) {
    if (static_cast<int>(g.size()) != grid->n_theta)
        throw ArgumentError("ScalarField::set_ghost: size mismatch");
    ghost = std::move(g);
}

NodeDerivs node_derivs(const ScalarField& f, int i, int j) {
    const PolarGrid& g = *f.grid;
    if (!f.has_ghost() && i >= g.n_rho - 1)
        throw StateError("node_derivs: boundary ghost ring not populated");

    const int nth = g.n_theta;
    const double* u = f.v.data();
    NodeDerivs d{};
    const double* row = u + g.idx(i, 0);
    d.d_th = stencil::th1(row, nth, j, g.inv_2s);
    d.d_th2 = stencil::th2(row, nth, j, g.inv_4s2);
    stencil::radial(g, u, f.ghost.data(), i, j, &d.d_rho, &d.d_rho2);

    // d_rth: radial stencil applied to the angular derivative. The
    // antipodal rule carries over because d/dtheta commutes with the
    // antipodal reflection.
    if (i == g.n_rho - 1) {
        const double tm1 = stencil::th1(u + g.idx(i - 1, 0), nth, j, g.inv_2s);
        const double t0 = d.d_th;
        const double tb = stencil::th1(f.ghost.data(), nth, j, g.inv_2s);
        d.d_rth = g.bd1[0] * tm1 + g.bd1[1] * t0 + g.bd1[2] * tb;
    } else {
        const double tm = (i == 0) ? stencil::th1(u + g.idx(0, 0), nth, g.antipode(j), g.inv_2s)
                                   : stencil::th1(u + g.idx(i - 1, 0), nth, j, g.inv_2s);
        const double tp = stencil::th1(u + g.idx(i + 1, 0), nth, j, g.inv_2s);
        d.d_rth = (tp - tm) * g.inv_2h;
    }
    return d;
}

SymMat2 hessian_local(const PolarGrid& g, const NodeDerivs& d, int i) {
    SymMat2 h;
    h.a11 = d.d_rho2;
    h.a12 = (d.d_rth - d.d_th * g.inv_rho[i]) * g.inv_rho[i];
    h.a22 = d.d_th2 * g.inv_rho2[i] + d.d_rho * g.inv_rho[i];
    return h;
}

VectorField2 gradient(const ScalarField& f) {
    const PolarGrid& g = *f.grid;
    if (!f.has_ghost()) throw StateError("gradient: boundary ghost ring not populated");
    VectorField2 out;
    out.x.resize(g.size());
    out.y.resize(g.size());
    for (int i = 0; i < g.n_rho; ++i) {
        for (int j = 0; j < g.n_theta; ++j) {
            const NodeDerivs d = node_derivs(f, i, j);
            const double ft = d.d_th * g.inv_rho[i];
            out.x[g.idx(i, j)] = g.cth[j] * d.d_rho - g.sth[j] * ft;
            out.y[g.idx(i, j)] = g.sth[j] * d.d_rho + g.cth[j] * ft;
        }
    }
    return out;
}

std::vector<SymMat2> hessian(const ScalarField& f) {
    const PolarGrid& g = *f.grid;
    if (!f.has_ghost()) throw StateError("hessian: boundary ghost ring not populated");
    std::vector<SymMat2> out(g.size());
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j)
            out[g.idx(i, j)] = hessian_local(g, node_derivs(f, i, j), i).rotated(g.cth[j], g.sth[j]);
    return out;
}

} // namespace mkflow
