#pragma once

// High-level reconstruction drivers.
//
// The three iteratively reweighted solvers (irn_tv, irn_piple, irn_piccs)
// share one skeleton: per outer cycle, freeze diagonal weights computed from
// the previous iterate, assemble a stacked least-squares system
//
//     irn_tv     [ A ; a*W*D ]                 rhs [ b ; 0 ]
//     irn_piple  [ A ; a*W*D ; l*I ]           rhs [ b ; 0 ; l*prior ]
//     irn_piccs  [ A ; a*W1*D ; l*W2*D ]       rhs [ b ; 0 ; l*W2*D*prior ]
//
// and run a warm-started inner cgls() on it. With the tangent-majorant
// weights from tv_weights() every cycle decreases the matching smoothed
// objective (see evaluate_objective), which is the property the descent
// tests pin down. Blocks whose scale is zero are omitted, so setting
// lambda = 0 reproduces irn_tv exactly, floating point and all.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "diffreg.hpp"
#include "krylov.hpp"
#include "linear_map.hpp"
#include "projector.hpp"
#include "types.hpp"
#include "vector_ops.hpp"

namespace kryct {

struct RegularizationParams {
    double alpha = 0.05;       // weight of the reweighted TV block
    double lambda = -1.0;      // prior coupling; negative means "use alpha"
    double tau = 0.0;          // l1 smoothing; <= 0 resolves from the dynamic range
    std::size_t outer_iters = 4;
    std::size_t inner_iters = 25;
    double inner_tolerance = 0.0;
    bool warm_start = true;    // inner solves continue from the previous iterate

    double resolved_lambda() const { return lambda < 0.0 ? alpha : lambda; }

    void validate() const {
        if (outer_iters < 1 || inner_iters < 1)
            throw ConfigError("reconstruction needs at least one outer and one inner iteration");
        if (alpha < 0.0) throw ConfigError("alpha must be non-negative");
        if (!std::isfinite(alpha) || !std::isfinite(lambda) || !std::isfinite(tau))
            throw ConfigError("regularisation parameters must be finite");
    }
};

/// tau is fixed once per reconstruction: an explicit positive value is used
/// as-is, otherwise 1e-4 times the dynamic range of the given reference
/// volume (floored at 1e-8; plain 1e-4 if there is nothing to measure).
inline double resolve_tau(double tau, std::span<const double> reference = {}) {
    if (tau > 0.0) return tau;
    if (reference.empty()) return 1e-4;
    auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
    const double range = *hi - *lo;
    return range > 0.0 ? std::max(1e-8, 1e-4 * range) : 1e-4;
}

struct ReconOptions {
    const Volume* initial = nullptr;        // start from zeros when absent
    const Volume* ground_truth = nullptr;   // enables per-iteration error history
    IterateHook hook;
};

struct ReconReport {
    Volume volume;
    std::vector<double> objective_history;      // one value per outer cycle
    std::vector<double> residual_history;       // solved-system residual per inner iteration
    std::vector<double> error_history;          // rel. error vs ground truth per inner iteration
    std::vector<std::size_t> outer_boundaries;  // history index reached after each outer cycle
    std::vector<double> outer_seconds;
    double solve_seconds = 0.0;
    bool converged = false;
};

enum class ObjectiveKind { tv, piple, piccs };

/// The smoothed objective each reweighted solver decreases:
///   tv:     ||Ax-b||^2 + 2 a^2 sum_v sqrt(|grad x|_v^2 + tau^2)
///   piple:  ... + l^2 ||x - prior||^2
///   piccs:  ... + 2 l^2 sum_v sqrt(|grad (x - prior)|_v^2 + tau^2)
/// The factor 2 comes from the tangent-majorant construction: the weighted
/// quadratic plus its constant term touch 2*sqrt(.) at the expansion point.
inline double evaluate_objective(ObjectiveKind kind, const LinearMap& A,
                                 std::span<const double> b, std::span<const double> x,
                                 std::span<const double> prior, Dims3 dims, double alpha,
                                 double lambda, double tau) {
    if (x.size() != dims.count()) throw ConfigError("objective: x does not match dims");
    std::vector<double> ax(A.range_size());
    A.apply(x, ax);
    double obj = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        const double d = ax[i] - b[i];
        obj += d * d;
    }
    DiffOperator diff(dims);
    if (alpha != 0.0) obj += 2.0 * alpha * alpha * smoothed_tv(diff.apply(x), tau);
    if (kind == ObjectiveKind::piple && lambda != 0.0) {
        if (prior.size() != x.size()) throw ConfigError("objective: prior size mismatch");
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - prior[i];
            q += d * d;
        }
        obj += lambda * lambda * q;
    } else if (kind == ObjectiveKind::piccs && lambda != 0.0) {
        if (prior.size() != x.size()) throw ConfigError("objective: prior size mismatch");
        obj += 2.0 * lambda * lambda * smoothed_tv(diff.apply(sub(x, prior)), tau);
    }
    return obj;
}

namespace detail {

inline double rel_error_span(std::span<const double> x, std::span<const double> ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct IrnSetup {
    std::shared_ptr<const ConeBeamProjector> A;
    std::shared_ptr<const DiffOperator> D;
    std::vector<double> x;
    double tau = 0.0;
};

inline IrnSetup irn_setup(const ProjectionSet& proj, const GridSpec& grid,
                          const RegularizationParams& params, const ReconOptions& opts,
                          const Volume* prior) {
    proj.validate();
    grid.validate();
    params.validate();
    if (prior && !(prior->dims == grid.dims))
        throw ConfigError("prior volume does not match the reconstruction grid");
    if (opts.initial && !(opts.initial->dims == grid.dims))
        throw ConfigError("initial volume does not match the reconstruction grid");
    if (opts.ground_truth && !(opts.ground_truth->dims == grid.dims))
        throw ConfigError("ground truth does not match the reconstruction grid");

    IrnSetup s;
    s.A = make_projector(grid, proj.geometry);
    s.D = make_diff(grid.dims);
    s.x = opts.initial ? opts.initial->data : std::vector<double>(grid.dims.count(), 0.0);
    // Auto-tau consults the prior only when the prior term is active, so that
    // lambda = 0 runs resolve the same tau a prior-free solve would.
    std::span<const double> tau_ref;
    if (opts.initial)
        tau_ref = opts.initial->data;
    else if (prior && params.resolved_lambda() != 0.0)
        tau_ref = prior->data;
    s.tau = resolve_tau(params.tau, tau_ref);
    return s;
}

inline ReconReport irn_solve(ObjectiveKind kind, const ProjectionSet& proj, const GridSpec& grid,
                             const Volume* prior, const RegularizationParams& params,
                             const ReconOptions& opts) {
    auto setup = irn_setup(proj, grid, params, opts, prior);
    const auto& A = setup.A;
    const auto& D = setup.D;
    const double alpha = params.alpha;
    const double lambda = params.resolved_lambda();
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
    const std::size_t m = grid.dims.count();

    ReconReport rep;
    rep.volume = Volume(grid);
    std::vector<double>& x = setup.x;
    std::span<const double> prior_data =
        prior ? std::span<const double>(prior->data) : std::span<const double>();

    const auto t_start = std::chrono::steady_clock::now();
    // Objective at the starting point, so the recorded history demonstrates
    // descent from the very first majorization step onwards.
    rep.objective_history.push_back(evaluate_objective(kind, *A, proj.data, x, prior_data,
                                                       grid.dims, alpha, lambda, setup.tau));
    std::size_t global_iter = 0;
    for (std::size_t cycle = 0; cycle < params.outer_iters; ++cycle) {
        const auto t_cycle = std::chrono::steady_clock::now();

        std::vector<ScaledBlock> blocks;
        std::vector<double> rhs(proj.data.begin(), proj.data.end());
        blocks.push_back({1.0, A});
        if (alpha != 0.0) {
            auto w = tv_weights(D->apply(x), setup.tau);
            blocks.push_back({alpha, compose(std::make_shared<DiagonalMap>(std::move(w)), D)});
            rhs.resize(rhs.size() + 3 * m, 0.0);
        }
        if (kind == ObjectiveKind::piple && lambda != 0.0) {
            blocks.push_back({lambda, std::make_shared<IdentityMap>(m)});
            const std::size_t off = rhs.size();
            rhs.resize(off + m);
            for (std::size_t i = 0; i < m; ++i) rhs[off + i] = lambda * prior_data[i];
        } else if (kind == ObjectiveKind::piccs && lambda != 0.0) {
            auto w2 = tv_weights(D->apply(sub(x, prior_data)), setup.tau);
            auto w2d = compose(std::make_shared<DiagonalMap>(std::move(w2)), D);
            auto w2d_prior = w2d->apply(prior_data);
            blocks.push_back({lambda, w2d});
            const std::size_t off = rhs.size();
            rhs.resize(off + w2d_prior.size());
            for (std::size_t i = 0; i < w2d_prior.size(); ++i)
                rhs[off + i] = lambda * w2d_prior[i];
        }
        auto system = stack_maps(std::move(blocks));

        KrylovConfig inner;
        inner.max_iters = params.inner_iters;
        inner.tolerance = params.inner_tolerance;
        inner.hook = [&](std::size_t, std::span<const double> xi) {
            ++global_iter;
            if (opts.ground_truth)
                rep.error_history.push_back(rel_error_span(xi, opts.ground_truth->data));
            if (opts.hook) opts.hook(global_iter, xi);
        };

        std::vector<double> start = params.warm_start ? x : std::vector<double>(m, 0.0);
        auto result = cgls(*system, rhs, start, inner);
        x = std::move(result.x);
        rep.converged = result.trace.converged;
        rep.residual_history.insert(rep.residual_history.end(),
                                    result.trace.residual_norms.begin(),
                                    result.trace.residual_norms.end());
        rep.outer_boundaries.push_back(rep.residual_history.size());
        rep.objective_history.push_back(evaluate_objective(kind, *A, proj.data, x, prior_data,
                                                           grid.dims, alpha, lambda, setup.tau));
        rep.outer_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_cycle).count());
    }
    rep.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    rep.volume.data = std::move(x);
    return rep;
}

}  // namespace detail

/// Edge-preserving reconstruction: data term plus reweighted total variation.
inline ReconReport irn_tv(const ProjectionSet& proj, const GridSpec& grid,
                          const RegularizationParams& params, const ReconOptions& opts = {}) {
    return detail::irn_solve(ObjectiveKind::tv, proj, grid, nullptr, params, opts);
}

/// TV-regularised reconstruction tethered to a prior image through a plain
/// quadratic penalty; the prior fills in whatever the sparse data leaves
/// unconstrained.
inline ReconReport irn_piple(const ProjectionSet& proj, const GridSpec& grid, const Volume& prior,
                             const RegularizationParams& params, const ReconOptions& opts = {}) {
    return detail::irn_solve(ObjectiveKind::piple, proj, grid, &prior, params, opts);
}

/// Prior-image constrained variant: both the iterate's own gradient and the
/// gradient of its difference to the prior are driven sparse.
inline ReconReport irn_piccs(const ProjectionSet& proj, const GridSpec& grid, const Volume& prior,
                             const RegularizationParams& params, const ReconOptions& opts = {}) {
    return detail::irn_solve(ObjectiveKind::piccs, proj, grid, &prior, params, opts);
}

namespace detail {

inline ReconReport baseline_solve(bool use_sirt, const ProjectionSet& proj, const GridSpec& grid,
                                  std::size_t iters, double tolerance,
                                  const ReconOptions& opts) {
    proj.validate();
    grid.validate();
    if (iters < 1) throw ConfigError("reconstruction needs at least one iteration");
    if (opts.initial && !(opts.initial->dims == grid.dims))
        throw ConfigError("initial volume does not match the reconstruction grid");
    auto A = make_projector(grid, proj.geometry);
    std::vector<double> x0 =
        opts.initial ? opts.initial->data : std::vector<double>(grid.dims.count(), 0.0);

    ReconReport rep;
    rep.volume = Volume(grid);
    KrylovConfig cfg;
    cfg.max_iters = iters;
    cfg.tolerance = tolerance;
    cfg.hook = [&](std::size_t it, std::span<const double> xi) {
        if (opts.ground_truth)
            rep.error_history.push_back(rel_error_span(xi, opts.ground_truth->data));
        if (opts.hook) opts.hook(it, xi);
    };
    const auto t0 = std::chrono::steady_clock::now();
    auto result = use_sirt ? sirt(*A, proj.data, x0, cfg) : cgls(*A, proj.data, x0, cfg);
    rep.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.residual_history = result.trace.residual_norms;
    for (double r : rep.residual_history) rep.objective_history.push_back(r * r);
    rep.outer_boundaries.push_back(rep.residual_history.size());
    rep.outer_seconds.push_back(rep.solve_seconds);
    rep.converged = result.trace.converged;
    rep.volume.data = std::move(result.x);
    return rep;
}

}  // namespace detail

/// Unregularised least-squares baseline.
inline ReconReport cgls_recon(const ProjectionSet& proj, const GridSpec& grid, std::size_t iters,
                              const ReconOptions& opts = {}, double tolerance = 0.0) {
    return detail::baseline_solve(false, proj, grid, iters, tolerance, opts);
}

/// Simultaneous-ART baseline.
inline ReconReport sirt_recon(const ProjectionSet& proj, const GridSpec& grid, std::size_t iters,
                              const ReconOptions& opts = {}, double tolerance = 0.0) {
    return detail::baseline_solve(true, proj, grid, iters, tolerance, opts);
}

// ---------------------------------------------------------------------------
// Adaptive-steepest-descent POCS: alternate a relaxed per-angle SART sweep
// (with positivity) against a few steepest-descent steps on smoothed TV, with
// the usual adaptive step-length bookkeeping and the opposing-directions
// stopping rule.

struct AsdPocsConfig {
    std::size_t max_iters = 100;
    double beta = 1.0;            // SART relaxation
    double beta_red = 0.995;      // per-iteration relaxation decay
    int ng = 20;                  // TV descent steps per iteration
    double tv_step_ratio = 0.2;   // first TV step as a fraction of the SART update norm
    double tv_step_red = 0.95;    // TV step decay when it outruns the data step
    double r_max = 0.95;          // allowed ratio ||TV step|| / ||data step||
    double epsilon = 0.0;         // target data residual (0: keep reducing)
    double stop_cosine = -0.99;   // opposition threshold for the early stop
    // The early stop fires only once the data residual is inside the epsilon
    // ball AND the TV and data steps directly oppose; with epsilon = 0 the
    // sweep always runs its full iteration budget.
    double tv_eps = 1e-8;         // smoothing inside the TV gradient

    void validate() const {
        if (max_iters < 1) throw ConfigError("asd-pocs needs at least one iteration");
        if (ng < 1) throw ConfigError("asd-pocs needs at least one TV step");
        if (!(beta > 0.0)) throw ConfigError("asd-pocs relaxation must be positive");
    }
};

/// Smoothed-TV steepest descent direction: grad = D^T (Dx / sqrt(|Dx|^2+eps^2)).
inline std::vector<double> tv_gradient(const DiffOperator& d, std::span<const double> x,
                                       double eps) {
    std::vector<double> g = d.apply(x);
    const std::size_t m = g.size() / 3;
    for (std::size_t v = 0; v < m; ++v) {
        const double rho = std::sqrt(g[v] * g[v] + g[m + v] * g[m + v] +
                                     g[2 * m + v] * g[2 * m + v] + eps * eps);
        g[v] /= rho;
        g[m + v] /= rho;
        g[2 * m + v] /= rho;
    }
    return d.apply_adjoint(g);
}

inline ReconReport asd_pocs_tv(const ProjectionSet& proj, const GridSpec& grid,
                               const AsdPocsConfig& cfg, const ReconOptions& opts = {}) {
    proj.validate();
    grid.validate();
    cfg.validate();
    if (opts.initial && !(opts.initial->dims == grid.dims))
        throw ConfigError("initial volume does not match the reconstruction grid");

    const ConeBeamGeometry& geom = proj.geometry;
    const std::size_t na = geom.n_angles();
    const std::size_t per = geom.rays_per_angle();
    const std::size_t m = grid.dims.count();
    DiffOperator diff(grid.dims);

    // Per-angle operators plus their zero-guarded inverse row/column sums.
    std::vector<std::shared_ptr<const ConeBeamProjector>> ops(na);
    std::vector<std::vector<double>> row_inv(na), col_inv(na);
    {
        const std::vector<double> ones_m(m, 1.0);
        const std::vector<double> ones_r(per, 1.0);
        for (std::size_t ia = 0; ia < na; ++ia) {
            ConeBeamGeometry g1 = geom;
            g1.angles = {geom.angles[ia]};
            ops[ia] = make_projector(grid, g1);
            row_inv[ia] = ops[ia]->apply(ones_m);
            col_inv[ia] = ops[ia]->apply_adjoint(ones_r);
            for (double& v : row_inv[ia]) v = v != 0.0 ? 1.0 / v : 0.0;
            for (double& v : col_inv[ia]) v = v != 0.0 ? 1.0 / v : 0.0;
        }
    }

    ReconReport rep;
    rep.volume = Volume(grid);
    std::vector<double> x =
        opts.initial ? opts.initial->data : std::vector<double>(m, 0.0);
    std::vector<double> res(per), upd(m);
    double beta = cfg.beta;
    double dtvg = 0.0;

    const auto t_start = std::chrono::steady_clock::now();
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        const auto t_cycle = std::chrono::steady_clock::now();
        const std::vector<double> x_prev = x;

        // Data step: one relaxed SART sweep, then positivity.
        for (std::size_t ia = 0; ia < na; ++ia) {
            ops[ia]->apply(x, res);
            const double* ba = proj.data.data() + ia * per;
            for (std::size_t i = 0; i < per; ++i)
                res[i] = (ba[i] - res[i]) * row_inv[ia][i];
            ops[ia]->apply_adjoint(res, upd);
            for (std::size_t i = 0; i < m; ++i) x[i] += beta * col_inv[ia][i] * upd[i];
        }
        for (double& v : x) v = std::max(v, 0.0);
        if (!all_finite(x)) throw SolverError("asd-pocs: non-finite iterate");

        // Residual of the full system (extra forward pass).
        double dd = 0.0;
        for (std::size_t ia = 0; ia < na; ++ia) {
            ops[ia]->apply(x, res);
            const double* ba = proj.data.data() + ia * per;
            for (std::size_t i = 0; i < per; ++i) {
                const double d = res[i] - ba[i];
                dd += d * d;
            }
        }
        dd = std::sqrt(dd);

        const std::vector<double> x_data = x;
        std::vector<double> data_step(m);
        for (std::size_t i = 0; i < m; ++i) data_step[i] = x_data[i] - x_prev[i];
        const double dp = norm2(data_step);
        if (it == 1) dtvg = cfg.tv_step_ratio * dp;

        // Regularisation step: ng normalised steepest-descent moves on TV.
        for (int s = 0; s < cfg.ng; ++s) {
            auto g = tv_gradient(diff, x, cfg.tv_eps);
            const double gn = norm2(g);
            if (gn == 0.0) break;
            axpy(-dtvg / gn, g, x);
        }
        std::vector<double> tv_step(m);
        for (std::size_t i = 0; i < m; ++i) tv_step[i] = x[i] - x_data[i];
        const double dg = norm2(tv_step);

        if (dg > cfg.r_max * dp && dd > cfg.epsilon) dtvg *= cfg.tv_step_red;
        beta *= cfg.beta_red;

        rep.residual_history.push_back(dd);
        rep.objective_history.push_back(tv(diff.apply(x)));
        rep.outer_boundaries.push_back(rep.residual_history.size());
        rep.outer_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_cycle).count());
        if (opts.ground_truth)
            rep.error_history.push_back(detail::rel_error_span(x, opts.ground_truth->data));
        if (opts.hook) opts.hook(it, x);

        if (dd <= cfg.epsilon && dg > 0.0 && dp > 0.0) {
            const double c = dot(tv_step, data_step) / (dg * dp);
            if (c <= cfg.stop_cosine) {
                rep.converged = true;
                break;
            }
        }
    }
    rep.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    rep.volume.data = std::move(x);
    return rep;
}

}  // namespace kryct
