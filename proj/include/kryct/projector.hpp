#pragma once

// Matrix-free cone-beam projector. Rays are cast from the source through
// each detector pixel centre and traversed with a Siddon-style walk that
// yields the exact intersection length of the ray with every voxel it
// crosses. The adjoint reuses the identical traversal, so forward and
// back projection form an exact adjoint pair by construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "linear_map.hpp"
#include "types.hpp"

namespace kryct {

inline Vec3 source_position(const ConeBeamGeometry& g, std::size_t ia) {
    const double t = g.angles[ia];
    return {g.dso * std::cos(t), g.dso * std::sin(t), 0.0};
}

/// World position of the centre of detector pixel (iu, iv) at angle ia.
inline Vec3 detector_pixel_center(const ConeBeamGeometry& g, std::size_t ia, int iu, int iv) {
    const double t = g.angles[ia];
    const double c = std::cos(t), s = std::sin(t);
    const Vec3 u_dir{-s, c, 0.0};
    const Vec3 v_dir{0.0, 0.0, 1.0};
    const Vec3 center = -(g.dsd - g.dso) * Vec3{c, s, 0.0};
    const double du = (iu + 0.5 - 0.5 * g.detector.nu) * g.detector.pu + g.offset_u;
    const double dv = (iv + 0.5 - 0.5 * g.detector.nv) * g.detector.pv + g.offset_v;
    return center + du * u_dir + dv * v_dir;
}

namespace detail {

inline bool point_in_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y && p.z > lo.z && p.z < hi.z;
}

}  // namespace detail

/// Walks the segment src -> dst through the grid and calls
/// visit(linear_voxel_index, intersection_length_mm) for every voxel crossed,
/// in ray order. Returns the [t_in, t_out] parameter interval of the segment
/// against the grid bounding box (empty interval if the ray misses).
template <class Visitor>
inline std::pair<double, double> traverse_ray(const Vec3& src, const Vec3& dst,
                                              const GridSpec& grid, Visitor&& visit) {
    const Vec3 lo = grid.origin;
    const Vec3 hi = grid.max_corner();
    const Vec3 dir = dst - src;
    const double ray_len = vec_norm(dir);
    if (ray_len == 0.0) return {0.0, 0.0};

    const double d[3] = {dir.x, dir.y, dir.z};
    const double s0[3] = {src.x, src.y, src.z};
    const double bmin[3] = {lo.x, lo.y, lo.z};
    const double bmax[3] = {hi.x, hi.y, hi.z};
    const double sp[3] = {grid.spacing.x, grid.spacing.y, grid.spacing.z};
    const int n[3] = {grid.dims.nx, grid.dims.ny, grid.dims.nz};

    // Clip the parametric segment [0,1] against the box (slab method).
    double t0 = 0.0, t1 = 1.0;
    for (int a = 0; a < 3; ++a) {
        if (d[a] != 0.0) {
            double ta = (bmin[a] - s0[a]) / d[a];
            double tb = (bmax[a] - s0[a]) / d[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        } else if (s0[a] <= bmin[a] || s0[a] >= bmax[a]) {
            return {0.0, 0.0};
        }
    }
    if (!(t0 < t1)) return {0.0, 0.0};

    // Entry voxel and per-axis stepping state.
    int idx[3];
    int step[3];
    double t_next[3];
    double t_delta[3];
    const std::size_t stride[3] = {
        1, static_cast<std::size_t>(n[0]),
        static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1])};

    for (int a = 0; a < 3; ++a) {
        const double p = s0[a] + t0 * d[a];
        int i = static_cast<int>(std::floor((p - bmin[a]) / sp[a]));
        idx[a] = std::clamp(i, 0, n[a] - 1);
        if (d[a] > 0.0) {
            step[a] = 1;
            t_delta[a] = sp[a] / d[a];
            t_next[a] = (bmin[a] + (idx[a] + 1) * sp[a] - s0[a]) / d[a];
        } else if (d[a] < 0.0) {
            step[a] = -1;
            t_delta[a] = -sp[a] / d[a];
            t_next[a] = (bmin[a] + idx[a] * sp[a] - s0[a]) / d[a];
        } else {
            step[a] = 0;
            t_delta[a] = std::numeric_limits<double>::infinity();
            t_next[a] = std::numeric_limits<double>::infinity();
        }
    }

    std::size_t lin = static_cast<std::size_t>(idx[0]) * stride[0] +
                      static_cast<std::size_t>(idx[1]) * stride[1] +
                      static_cast<std::size_t>(idx[2]) * stride[2];
    double t = t0;
    while (true) {
        int m = 0;
        if (t_next[1] < t_next[m]) m = 1;
        if (t_next[2] < t_next[m]) m = 2;
        const double t_stop = std::min(t_next[m], t1);
        const double len = (t_stop - t) * ray_len;
        if (len > 0.0) visit(lin, len);
        if (t_next[m] >= t1) break;
        t = t_next[m];
        idx[m] += step[m];
        if (idx[m] < 0 || idx[m] >= n[m]) break;
        lin = step[m] > 0 ? lin + stride[m] : lin - stride[m];
        t_next[m] += t_delta[m];
    }
    return {t0, t1};
}

/// Materialised ray: bounding-box entry/exit parameters plus the ordered
/// voxel visits. Mostly useful for tests and debugging; the hot paths use
/// traverse_ray directly.
struct RayPath {
    double t_entry = 0.0;
    double t_exit = 0.0;
    std::vector<std::size_t> voxels;     // linear indices, in ray order
    std::vector<double> lengths;         // intersection lengths, mm

    double total_length() const {
        double s = 0.0;
        for (double l : lengths) s += l;
        return s;
    }
};

inline RayPath trace_ray(const Vec3& src, const Vec3& dst, const GridSpec& grid) {
    RayPath path;
    auto [t0, t1] = traverse_ray(src, dst, grid, [&](std::size_t lin, double len) {
        path.voxels.push_back(lin);
        path.lengths.push_back(len);
    });
    path.t_entry = t0;
    path.t_exit = t1;
    return path;
}

namespace detail {

inline void require_source_outside(const ConeBeamGeometry& g, const GridSpec& grid) {
    const Vec3 lo = grid.origin;
    const Vec3 hi = grid.max_corner();
    for (std::size_t ia = 0; ia < g.n_angles(); ++ia)
        if (point_in_box(source_position(g, ia), lo, hi))
            throw ConfigError("source position lies inside the volume");
}

}  // namespace detail

/// Forward projection of the rays of a single angle into out[0 .. nu*nv).
inline void project_forward_angle(std::span<const double> vol, const GridSpec& grid,
                                  const ConeBeamGeometry& g, std::size_t ia,
                                  std::span<double> out) {
    const int nu = g.detector.nu, nv = g.detector.nv;
    const Vec3 src = source_position(g, ia);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int iv = 0; iv < nv; ++iv) {
        for (int iu = 0; iu < nu; ++iu) {
            const Vec3 dst = detector_pixel_center(g, ia, iu, iv);
            double acc = 0.0;
            traverse_ray(src, dst, grid,
                         [&](std::size_t lin, double len) { acc += len * vol[lin]; });
            out[static_cast<std::size_t>(iu) + static_cast<std::size_t>(nu) * iv] = acc;
        }
    }
}

/// y = A x for the full angle set. Deterministic: every output ray is an
/// independent sum, so threading never changes results.
inline void project_forward(std::span<const double> vol, const GridSpec& grid,
                            const ConeBeamGeometry& g, std::span<double> out) {
    g.validate();
    grid.validate();
    if (vol.size() != grid.dims.count()) throw ConfigError("forward: volume size mismatch");
    if (out.size() != g.ray_count()) throw ConfigError("forward: projection size mismatch");
    detail::require_source_outside(g, grid);
    const std::size_t per = g.rays_per_angle();
    for (std::size_t ia = 0; ia < g.n_angles(); ++ia)
        project_forward_angle(vol, grid, g, ia, out.subspan(ia * per, per));
}

/// Accumulates A^T y for a single angle into vol (no zeroing). Sequential.
inline void project_adjoint_angle_accumulate(std::span<const double> proj, const GridSpec& grid,
                                             const ConeBeamGeometry& g, std::size_t ia,
                                             std::span<double> vol) {
    const int nu = g.detector.nu, nv = g.detector.nv;
    const Vec3 src = source_position(g, ia);
    for (int iv = 0; iv < nv; ++iv) {
        for (int iu = 0; iu < nu; ++iu) {
            const double w = proj[static_cast<std::size_t>(iu) + static_cast<std::size_t>(nu) * iv];
            if (w == 0.0) continue;
            const Vec3 dst = detector_pixel_center(g, ia, iu, iv);
            traverse_ray(src, dst, grid,
                         [&](std::size_t lin, double len) { vol[lin] += len * w; });
        }
    }
}

/// x = A^T y over all angles. Rays scatter into shared voxels, so each thread
/// accumulates into a private buffer; buffers are reduced in fixed thread
/// order. For a fixed thread count the result is bit-identical across runs.
inline void project_adjoint(std::span<const double> proj, const GridSpec& grid,
                            const ConeBeamGeometry& g, std::span<double> vol) {
    g.validate();
    grid.validate();
    if (vol.size() != grid.dims.count()) throw ConfigError("adjoint: volume size mismatch");
    if (proj.size() != g.ray_count()) throw ConfigError("adjoint: projection size mismatch");
    detail::require_source_outside(g, grid);
    std::fill(vol.begin(), vol.end(), 0.0);
    const std::size_t per = g.rays_per_angle();
    const std::size_t na = g.n_angles();
#ifdef _OPENMP
    int n_threads = 1;
#pragma omp parallel
    {
#pragma omp single
        n_threads = omp_get_num_threads();
    }
    if (n_threads > 1) {
        std::vector<std::vector<double>> partial(
            static_cast<std::size_t>(n_threads), std::vector<double>(vol.size(), 0.0));
#pragma omp parallel num_threads(n_threads)
        {
            auto& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
            for (std::ptrdiff_t ia = 0; ia < static_cast<std::ptrdiff_t>(na); ++ia)
                project_adjoint_angle_accumulate(
                    proj.subspan(static_cast<std::size_t>(ia) * per, per), grid, g,
                    static_cast<std::size_t>(ia), mine);
        }
        for (const auto& buf : partial) axpy(1.0, buf, vol);
        return;
    }
#endif
    for (std::size_t ia = 0; ia < na; ++ia)
        project_adjoint_angle_accumulate(proj.subspan(ia * per, per), grid, g, ia, vol);
}

/// The system operator A as a LinearMap: domain = voxels, range = rays.
class ConeBeamProjector final : public LinearMap {
  public:
    using LinearMap::apply;
    using LinearMap::apply_adjoint;

    ConeBeamProjector(GridSpec grid, ConeBeamGeometry geometry)
        : grid_(grid), geom_(std::move(geometry)) {
        grid_.validate();
        geom_.validate();
        detail::require_source_outside(geom_, grid_);
    }

    std::size_t domain_size() const override { return grid_.dims.count(); }
    std::size_t range_size() const override { return geom_.ray_count(); }
    const GridSpec& grid() const { return grid_; }
    const ConeBeamGeometry& geometry() const { return geom_; }

    void apply(std::span<const double> x, std::span<double> out) const override {
        project_forward(x, grid_, geom_, out);
    }
    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        project_adjoint(y, grid_, geom_, out);
    }

  private:
    GridSpec grid_;
    ConeBeamGeometry geom_;
};

inline std::shared_ptr<const ConeBeamProjector> make_projector(const GridSpec& grid,
                                                               const ConeBeamGeometry& geom) {
    return std::make_shared<ConeBeamProjector>(grid, geom);
}

/// Keeps every floor(i * n / n_keep)-th angle; used to emulate sparse-view
/// scans from a densely sampled one.
inline std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t n_keep) {
    if (n_keep < 1 || n_keep > n) throw ConfigError("subsample: need 1 <= n_keep <= n_angles");
    std::vector<std::size_t> keep(n_keep);
    for (std::size_t i = 0; i < n_keep; ++i) keep[i] = i * n / n_keep;
    return keep;
}

inline ProjectionSet subsample_angles(const ProjectionSet& full, std::size_t n_keep) {
    const auto keep = subsample_indices(full.geometry.n_angles(), n_keep);
    ConeBeamGeometry g = full.geometry;
    g.angles.clear();
    for (std::size_t ia : keep) g.angles.push_back(full.geometry.angles[ia]);
    ProjectionSet out(g);
    const std::size_t per = full.geometry.rays_per_angle();
    for (std::size_t i = 0; i < keep.size(); ++i)
        std::copy_n(full.data.begin() + static_cast<std::ptrdiff_t>(keep[i] * per), per,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * per));
    return out;
}

}  // namespace kryct
