#pragma once

// Matrix-free least-squares solvers. cgls() is the workhorse: conjugate
// gradients on the normal equations (algebraically equivalent to LSQR on
// well-conditioned problems), with warm starting via the shifted residual
// b - A*x0. sirt() is the classical simultaneous-ART baseline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "linear_map.hpp"
#include "types.hpp"
#include "vector_ops.hpp"

namespace kryct {

/// Called after each completed iteration with the current iterate.
using IterateHook = std::function<void(std::size_t iteration, std::span<const double> x)>;

struct KrylovConfig {
    std::size_t max_iters = 100;
    /// Relative tolerance on ||A^T r|| (cgls) resp. ||r|| (sirt). cgls measures
    /// it against the gradient at the zero vector, so a warm start near the
    /// solution exits immediately instead of chasing its own start value.
    /// 0 disables early stopping.
    double tolerance = 0.0;
    IterateHook hook;
};

struct SolveTrace {
    std::size_t iterations = 0;
    bool converged = false;      // tolerance reached before max_iters
    bool breakdown = false;      // exact stagnation (zero search direction)
    std::vector<double> residual_norms;   // ||b - A x|| after each iteration
    std::vector<double> wall_times;       // seconds since solve start, per iteration
};

struct SolveResult {
    std::vector<double> x;
    SolveTrace trace;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Minimises ||A x - b||_2 starting from x0. Warm starts shift the problem to
/// the residual system, so a restarted solve continues where the previous one
/// stopped instead of discarding progress.
inline SolveResult cgls(const LinearMap& A, std::span<const double> b,
                        std::span<const double> x0, const KrylovConfig& cfg = {}) {
    if (b.size() != A.range_size()) throw ConfigError("cgls: rhs size mismatch");
    if (x0.size() != A.domain_size()) throw ConfigError("cgls: x0 size mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    SolveResult res;
    res.x.assign(x0.begin(), x0.end());

    std::vector<double> r(b.size());
    A.apply(res.x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];

    std::vector<double> s(A.domain_size());
    A.apply_adjoint(r, s);
    double gamma = dot(s, s);
    if (!std::isfinite(gamma)) throw SolverError("cgls: non-finite normal residual");
    if (gamma == 0.0) {
        res.trace.converged = true;   // x0 already satisfies the normal equations
        return res;
    }

    double stop_tol = 0.0;
    if (cfg.tolerance > 0.0) {
        double ref2 = gamma;          // x0 = 0: the start gradient is A^T b already
        if (std::any_of(res.x.begin(), res.x.end(), [](double v) { return v != 0.0; })) {
            std::vector<double> sb(A.domain_size());
            A.apply_adjoint(b, sb);
            ref2 = dot(sb, sb);
        }
        stop_tol = cfg.tolerance * std::sqrt(ref2);
        if (std::sqrt(gamma) <= stop_tol) {
            res.trace.converged = true;
            return res;
        }
    }

    std::vector<double> p = s;
    std::vector<double> q(A.range_size());
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        A.apply(p, q);
        const double delta = dot(q, q);
        if (!std::isfinite(delta)) throw SolverError("cgls: non-finite iterate");
        if (delta == 0.0) {
            res.trace.breakdown = true;
            break;
        }
        const double alpha = gamma / delta;
        axpy(alpha, p, res.x);
        axpy(-alpha, q, r);
        A.apply_adjoint(r, s);
        const double gamma_next = dot(s, s);
        if (!std::isfinite(gamma_next)) throw SolverError("cgls: non-finite iterate");

        res.trace.iterations = it;
        res.trace.residual_norms.push_back(norm2(r));
        res.trace.wall_times.push_back(detail::seconds_since(t0));
        if (cfg.hook) cfg.hook(it, res.x);

        if (std::sqrt(gamma_next) <= stop_tol) {
            res.trace.converged = true;
            break;
        }
        const double beta = gamma_next / gamma;
        gamma = gamma_next;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
    }
    return res;
}

/// Simultaneous iterative reconstruction: x += C A^T R (b - A x) with
/// R = 1/row-sums and C = 1/column-sums obtained matrix-free from products
/// with all-ones vectors. Zero sums (rays missing the volume, voxels hit by
/// no ray) get weight zero, which freezes the corresponding components.
inline SolveResult sirt(const LinearMap& A, std::span<const double> b,
                        std::span<const double> x0, const KrylovConfig& cfg = {}) {
    if (b.size() != A.range_size()) throw ConfigError("sirt: rhs size mismatch");
    if (x0.size() != A.domain_size()) throw ConfigError("sirt: x0 size mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> ones_dom(A.domain_size(), 1.0);
    std::vector<double> ones_rng(A.range_size(), 1.0);
    std::vector<double> row_inv = A.apply(ones_dom);
    std::vector<double> col_inv = A.apply_adjoint(ones_rng);
    for (double& v : row_inv) v = v != 0.0 ? 1.0 / v : 0.0;
    for (double& v : col_inv) v = v != 0.0 ? 1.0 / v : 0.0;

    SolveResult res;
    res.x.assign(x0.begin(), x0.end());
    std::vector<double> r(b.size());
    std::vector<double> upd(A.domain_size());
    double r0_norm = -1.0;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        A.apply(res.x, r);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
        const double rnorm = norm2(r);
        if (!std::isfinite(rnorm)) throw SolverError("sirt: non-finite residual");
        if (r0_norm < 0.0) r0_norm = rnorm;
        for (std::size_t i = 0; i < r.size(); ++i) r[i] *= row_inv[i];
        A.apply_adjoint(r, upd);
        for (std::size_t i = 0; i < upd.size(); ++i) res.x[i] += col_inv[i] * upd[i];

        res.trace.iterations = it;
        res.trace.residual_norms.push_back(rnorm);
        res.trace.wall_times.push_back(detail::seconds_since(t0));
        if (cfg.hook) cfg.hook(it, res.x);
        if (cfg.tolerance > 0.0 && rnorm <= cfg.tolerance * r0_norm) {
            res.trace.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace kryct
