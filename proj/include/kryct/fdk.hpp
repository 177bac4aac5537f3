#pragma once

// Feldkamp-Davis-Kress filtered backprojection for circular cone-beam scans.
// Three stages: cosine weighting of each projection, row-wise ramp filtering
// (Ram-Lak kernel applied via FFT in a zero-padded buffer), and distance-
// weighted backprojection onto the voxel grid. Detector coordinates are
// rescaled to a virtual detector through the rotation axis, which makes the
// textbook weights directly applicable.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "detail/fft.hpp"
#include "types.hpp"

namespace kryct {

namespace detail {

/// Frequency response of the discrete Ram-Lak kernel for sample pitch du,
/// evaluated on a padded length-n grid (kernel laid out wrap-around style).
inline std::vector<std::complex<double>> ramlak_response(std::size_t n, double du) {
    std::vector<std::complex<double>> h(n, 0.0);
    const double inv = 1.0 / (du * du);
    h[0] = 0.25 * inv;
    for (std::size_t k = 1; k < n / 2; k += 2) {
        const double v = -inv / (std::numbers::pi * std::numbers::pi *
                                 static_cast<double>(k) * static_cast<double>(k));
        h[k] = v;
        h[n - k] = v;
    }
    fft_inplace(h, false);
    return h;
}

}  // namespace detail

/// Approximate reconstruction of a full circular scan. Projections should
/// cover [0, 2pi); short scans are not compensated. The result is exact in
/// the midplane for band-limited objects and the usual FDK approximation
/// away from it.
inline Volume fdk(const ProjectionSet& proj, const GridSpec& grid) {
    proj.validate();
    grid.validate();
    const ConeBeamGeometry& g = proj.geometry;
    if (g.n_angles() < 2) throw ConfigError("fdk needs at least two projection angles");

    const int nu = g.detector.nu, nv = g.detector.nv;
    const std::size_t na = g.n_angles();
    const std::size_t per = g.rays_per_angle();
    const double mag = g.dso / g.dsd;          // rescale to detector through the axis
    const double du = g.detector.pu * mag;
    const double dv = g.detector.pv * mag;
    const double u0 = (0.5 - 0.5 * nu) * du + g.offset_u * mag;   // centre of pixel 0
    const double v0 = (0.5 - 0.5 * nv) * dv + g.offset_v * mag;

    // Stage 1+2: cosine weight and ramp filter every row of every projection.
    const std::size_t pad = detail::next_pow2(2 * static_cast<std::size_t>(nu));
    const auto ramp = detail::ramlak_response(pad, du);
    std::vector<double> filtered(proj.data.size());
    std::vector<std::complex<double>> row(pad);
    for (std::size_t ia = 0; ia < na; ++ia) {
        for (int iv = 0; iv < nv; ++iv) {
            const double v = v0 + iv * dv;
            std::fill(row.begin(), row.end(), std::complex<double>(0.0, 0.0));
            const std::size_t base = ia * per + static_cast<std::size_t>(iv) * nu;
            for (int iu = 0; iu < nu; ++iu) {
                const double u = u0 + iu * du;
                const double cosw = g.dso / std::sqrt(g.dso * g.dso + u * u + v * v);
                row[static_cast<std::size_t>(iu)] = proj.data[base + iu] * cosw;
            }
            detail::fft_inplace(row, false);
            for (std::size_t i = 0; i < pad; ++i) row[i] *= ramp[i];
            detail::fft_inplace(row, true);
            for (int iu = 0; iu < nu; ++iu)
                filtered[base + iu] = row[static_cast<std::size_t>(iu)].real() * du;
        }
    }

    // Stage 3: weighted backprojection. Each voxel sums its own angle loop,
    // so parallelising over slices stays deterministic.
    Volume out(grid);
    std::vector<double> cs(na), sn(na);
    for (std::size_t ia = 0; ia < na; ++ia) {
        cs[ia] = std::cos(g.angles[ia]);
        sn[ia] = std::sin(g.angles[ia]);
    }
    const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(na);
    const double scale = 0.5 * dtheta;
    const double* fdat = filtered.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int k = 0; k < grid.dims.nz; ++k) {
        const double z = grid.origin.z + (k + 0.5) * grid.spacing.z;
        for (int j = 0; j < grid.dims.ny; ++j) {
            const double y = grid.origin.y + (j + 0.5) * grid.spacing.y;
            for (int i = 0; i < grid.dims.nx; ++i) {
                const double x = grid.origin.x + (i + 0.5) * grid.spacing.x;
                double acc = 0.0;
                for (std::size_t ia = 0; ia < na; ++ia) {
                    const double s = x * cs[ia] + y * sn[ia];
                    const double t = -x * sn[ia] + y * cs[ia];
                    const double L = g.dso - s;
                    if (L <= 1e-6 * g.dso) continue;
                    const double u = t * g.dso / L;
                    const double v = z * g.dso / L;
                    const double fu = (u - u0) / du;
                    const double fv = (v - v0) / dv;
                    const int ju = static_cast<int>(std::floor(fu));
                    const int jv = static_cast<int>(std::floor(fv));
                    if (ju < -1 || ju > nu - 1 || jv < -1 || jv > nv - 1) continue;
                    const double au = fu - ju, av = fv - jv;
                    const std::size_t base = ia * per;
                    auto sample = [&](int uu, int vv) -> double {
                        if (uu < 0 || uu >= nu || vv < 0 || vv >= nv) return 0.0;
                        return fdat[base + static_cast<std::size_t>(vv) * nu + uu];
                    };
                    const double val = (1.0 - au) * (1.0 - av) * sample(ju, jv) +
                                       au * (1.0 - av) * sample(ju + 1, jv) +
                                       (1.0 - au) * av * sample(ju, jv + 1) +
                                       au * av * sample(ju + 1, jv + 1);
                    const double w = (g.dso * g.dso) / (L * L);
                    acc += w * val;
                }
                out.at(i, j, k) = scale * acc;
            }
        }
    }
    return out;
}

}  // namespace kryct
