#pragma once

// Image-quality metrics between a reconstruction and its ground truth.
// All of them are plain deterministic reductions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "types.hpp"
#include "vector_ops.hpp"

namespace kryct {

/// Ceiling reported when the images are numerically identical (MSE == 0).
inline constexpr double kPsnrCap = 400.0;

/// Peak signal-to-noise ratio in dB against the given data range (defaults
/// to the ground-truth range). Capped at kPsnrCap so exact matches stay
/// finite and comparable.
inline double psnr(std::span<const double> x, std::span<const double> ref,
                   double data_range = 0.0) {
    if (x.size() != ref.size() || x.empty()) throw ConfigError("psnr: size mismatch");
    if (data_range <= 0.0) {
        auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
        data_range = *hi - *lo;
        if (data_range <= 0.0) data_range = 1.0;
    }
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - ref[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

/// ||x - ref|| / ||ref|| (plain absolute error if the reference is zero).
inline double rel_error(std::span<const double> x, std::span<const double> ref) {
    if (x.size() != ref.size()) throw ConfigError("rel_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace detail {

/// Inclusive 3D prefix sums with a zero guard layer, so any box sum is an
/// eight-corner lookup.
class BoxSums {
  public:
    BoxSums(std::span<const double> a, std::span<const double> b, Dims3 d)
        : nx_(d.nx + 1), ny_(d.ny + 1), nz_(d.nz + 1),
          s_(static_cast<std::size_t>(nx_) * ny_ * nz_, 0.0) {
        for (int k = 1; k < nz_; ++k)
            for (int j = 1; j < ny_; ++j)
                for (int i = 1; i < nx_; ++i) {
                    const std::size_t src = static_cast<std::size_t>(i - 1) +
                                            static_cast<std::size_t>(d.nx) *
                                                ((j - 1) + static_cast<std::size_t>(d.ny) * (k - 1));
                    s_[at(i, j, k)] = a[src] * b[src] + s_[at(i - 1, j, k)] +
                                      s_[at(i, j - 1, k)] + s_[at(i, j, k - 1)] -
                                      s_[at(i - 1, j - 1, k)] - s_[at(i - 1, j, k - 1)] -
                                      s_[at(i, j - 1, k - 1)] + s_[at(i - 1, j - 1, k - 1)];
                }
    }

    /// Sum over [i0, i0+w) x [j0, j0+w) x [k0, k0+w).
    double window(int i0, int j0, int k0, int w) const {
        const int i1 = i0 + w, j1 = j0 + w, k1 = k0 + w;
        return s_[at(i1, j1, k1)] - s_[at(i0, j1, k1)] - s_[at(i1, j0, k1)] -
               s_[at(i1, j1, k0)] + s_[at(i0, j0, k1)] + s_[at(i0, j1, k0)] +
               s_[at(i1, j0, k0)] - s_[at(i0, j0, k0)];
    }

  private:
    std::size_t at(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx_) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny_) * k);
    }
    int nx_, ny_, nz_;
    std::vector<double> s_;
};

}  // namespace detail

/// Mean structural similarity over all fully contained cubic windows
/// (default 7^3), the direct 3D extension of the classic 2D index with
/// uniform window weights. Requires the window to fit in every axis.
inline double ssim3d(std::span<const double> x, std::span<const double> ref, Dims3 dims,
                     int window = 7, double data_range = 0.0, double k1 = 0.01,
                     double k2 = 0.03) {
    if (x.size() != ref.size() || x.size() != dims.count())
        throw ConfigError("ssim: size mismatch");
    if (window < 2 || window > dims.nx || window > dims.ny || window > dims.nz)
        throw ConfigError("ssim: window must fit inside the volume");
    if (data_range <= 0.0) {
        auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
        data_range = *hi - *lo;
        if (data_range <= 0.0) data_range = 1.0;
    }
    const double c1 = (k1 * data_range) * (k1 * data_range);
    const double c2 = (k2 * data_range) * (k2 * data_range);

    std::vector<double> ones(x.size(), 1.0);
    detail::BoxSums sx(x, ones, dims), sy(ref, ones, dims);
    detail::BoxSums sxx(x, x, dims), syy(ref, ref, dims), sxy(x, ref, dims);

    const double n = static_cast<double>(window) * window * window;
    double total = 0.0;
    std::size_t count = 0;
    for (int k = 0; k + window <= dims.nz; ++k)
        for (int j = 0; j + window <= dims.ny; ++j)
            for (int i = 0; i + window <= dims.nx; ++i) {
                const double mx = sx.window(i, j, k, window) / n;
                const double my = sy.window(i, j, k, window) / n;
                const double vx = sxx.window(i, j, k, window) / n - mx * mx;
                const double vy = syy.window(i, j, k, window) / n - my * my;
                const double cxy = sxy.window(i, j, k, window) / n - mx * my;
                const double s = ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                                 ((mx * mx + my * my + c1) * (vx + vy + c2));
                total += s;
                ++count;
            }
    return total / static_cast<double>(count);
}

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double rel_error = 0.0;
};

inline MetricReport compute_metrics(const Volume& x, const Volume& ref, int ssim_window = 7) {
    if (!(x.dims == ref.dims)) throw ConfigError("metrics: volume dims differ");
    MetricReport r;
    r.psnr = psnr(x.data, ref.data);
    r.ssim = ssim3d(x.data, ref.data, x.dims, ssim_window);
    r.rel_error = rel_error(x.data, ref.data);
    return r;
}

}  // namespace kryct
