#pragma once

// Finite differences and the reweighting machinery behind the iteratively
// reweighted solvers. The difference operator D stacks forward differences
// along x, y and z (zero at the far boundary of each axis), so D maps M
// voxels to a 3M gradient field stored block-wise [dx; dy; dz], each block
// in the usual x-fastest voxel order.

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "linear_map.hpp"
#include "types.hpp"

namespace kryct {

class DiffOperator final : public LinearMap {
  public:
    using LinearMap::apply;
    using LinearMap::apply_adjoint;

    explicit DiffOperator(Dims3 dims) : dims_(dims) {
        if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
            throw ConfigError("diff operator: dims must be positive");
    }

    Dims3 dims() const { return dims_; }
    std::size_t domain_size() const override { return dims_.count(); }
    std::size_t range_size() const override { return 3 * dims_.count(); }

    void apply(std::span<const double> x, std::span<double> out) const override {
        check_domain(x.size());
        check_range(out.size());
        const std::size_t m = dims_.count();
        const std::size_t sx = 1;
        const std::size_t sy = static_cast<std::size_t>(dims_.nx);
        const std::size_t sz = sy * static_cast<std::size_t>(dims_.ny);
        std::size_t v = 0;
        for (int k = 0; k < dims_.nz; ++k)
            for (int j = 0; j < dims_.ny; ++j)
                for (int i = 0; i < dims_.nx; ++i, ++v) {
                    out[v] = i + 1 < dims_.nx ? x[v + sx] - x[v] : 0.0;
                    out[m + v] = j + 1 < dims_.ny ? x[v + sy] - x[v] : 0.0;
                    out[2 * m + v] = k + 1 < dims_.nz ? x[v + sz] - x[v] : 0.0;
                }
    }

    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        check_range(y.size());
        check_domain(out.size());
        std::fill(out.begin(), out.end(), 0.0);
        const std::size_t m = dims_.count();
        const std::size_t sx = 1;
        const std::size_t sy = static_cast<std::size_t>(dims_.nx);
        const std::size_t sz = sy * static_cast<std::size_t>(dims_.ny);
        std::size_t v = 0;
        for (int k = 0; k < dims_.nz; ++k)
            for (int j = 0; j < dims_.ny; ++j)
                for (int i = 0; i < dims_.nx; ++i, ++v) {
                    if (i + 1 < dims_.nx) {
                        out[v] -= y[v];
                        out[v + sx] += y[v];
                    }
                    if (j + 1 < dims_.ny) {
                        out[v] -= y[m + v];
                        out[v + sy] += y[m + v];
                    }
                    if (k + 1 < dims_.nz) {
                        out[v] -= y[2 * m + v];
                        out[v + sz] += y[2 * m + v];
                    }
                }
    }

  private:
    Dims3 dims_;
};

inline std::shared_ptr<const DiffOperator> make_diff(Dims3 dims) {
    return std::make_shared<DiffOperator>(dims);
}

/// Per-voxel gradient magnitudes of a stacked [dx; dy; dz] field.
inline std::vector<double> gradient_magnitude(std::span<const double> grad) {
    if (grad.size() % 3 != 0) throw ConfigError("gradient field length must be 3*M");
    const std::size_t m = grad.size() / 3;
    std::vector<double> mag(m);
    for (std::size_t v = 0; v < m; ++v)
        mag[v] = std::sqrt(grad[v] * grad[v] + grad[m + v] * grad[m + v] +
                           grad[2 * m + v] * grad[2 * m + v]);
    return mag;
}

/// Isotropic total variation of a gradient field: sum of per-voxel magnitudes.
inline double tv(std::span<const double> grad) {
    double s = 0.0;
    for (double m : gradient_magnitude(grad)) s += m;
    return s;
}

inline double tv_of(const Volume& vol) {
    DiffOperator d(vol.dims);
    return tv(d.apply(vol.data));
}

/// Smoothed l1 surrogate: sum_i sqrt(z_i^2 + tau^2).
inline double smoothed_l1(std::span<const double> z, double tau) {
    double s = 0.0;
    for (double zi : z) s += std::sqrt(zi * zi + tau * tau);
    return s;
}

/// Smoothed TV: per-voxel sqrt(|grad|^2 + tau^2), summed. Equals M*tau on a
/// constant volume and approaches tv() as tau -> 0.
inline double smoothed_tv(std::span<const double> grad, double tau) {
    if (grad.size() % 3 != 0) throw ConfigError("gradient field length must be 3*M");
    const std::size_t m = grad.size() / 3;
    double s = 0.0;
    for (std::size_t v = 0; v < m; ++v)
        s += std::sqrt(grad[v] * grad[v] + grad[m + v] * grad[m + v] +
                       grad[2 * m + v] * grad[2 * m + v] + tau * tau);
    return s;
}

/// Component-wise reweighting w_i = (z_i^2 + tau^2)^(-1/4). With these
/// weights ||diag(w) z||_2^2 = sum_i z_i^2 / sqrt(z_i^2 + tau^2), which
/// converges to ||z||_1 as tau -> 0.
inline std::vector<double> smoothed_l1_weights(std::span<const double> z, double tau) {
    if (!(tau > 0.0)) throw ConfigError("reweighting requires tau > 0");
    std::vector<double> w(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        w[i] = 1.0 / std::sqrt(std::sqrt(z[i] * z[i] + tau * tau));
    return w;
}

/// Isotropic TV weights: one weight per voxel from its gradient magnitude,
/// w_v = (|grad_v|^2 + tau^2)^(-1/4), replicated across the three difference
/// blocks so that ||diag(w) grad||_2^2 = sum_v w_v^2 |grad_v|^2.
inline std::vector<double> tv_weights(std::span<const double> grad, double tau) {
    if (!(tau > 0.0)) throw ConfigError("reweighting requires tau > 0");
    if (grad.size() % 3 != 0) throw ConfigError("gradient field length must be 3*M");
    const std::size_t m = grad.size() / 3;
    std::vector<double> w(grad.size());
    for (std::size_t v = 0; v < m; ++v) {
        const double m2 = grad[v] * grad[v] + grad[m + v] * grad[m + v] +
                          grad[2 * m + v] * grad[2 * m + v];
        const double wv = 1.0 / std::sqrt(std::sqrt(m2 + tau * tau));
        w[v] = wv;
        w[m + v] = wv;
        w[2 * m + v] = wv;
    }
    return w;
}

struct PiccsWeights {
    std::vector<double> w_tv;      // from the gradient of x
    std::vector<double> w_prior;   // from the gradient of x - prior
};

/// Both weight fields used by the prior-constrained solver: TV weights of the
/// current iterate and TV weights of its difference against the prior image.
inline PiccsWeights piccs_weights(const DiffOperator& d, std::span<const double> x,
                                  std::span<const double> prior, double tau) {
    if (x.size() != prior.size()) throw ConfigError("piccs weights: size mismatch");
    std::vector<double> diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - prior[i];
    return {tv_weights(d.apply(x), tau), tv_weights(d.apply(diff), tau)};
}

}  // namespace kryct
