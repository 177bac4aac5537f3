#pragma once

// Synthetic test objects. All phantoms are evaluated analytically at voxel
// centres on normalised coordinates ([-1,1]^3 mapped to the grid box), take
// values in [0,1] and are fully deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "types.hpp"

namespace kryct {

struct Ellipsoid {
    double value;          // additive contrast
    double a, b, c;        // semi-axes, normalised units
    double x0, y0, z0;     // centre
    double phi_deg;        // rotation about z, degrees
};

/// The ten-ellipsoid modified Shepp-Logan head (the usual low-contrast
/// variant with 0.1/0.2 tissue deltas).
inline const std::vector<Ellipsoid>& shepp_logan_ellipsoids() {
    static const std::vector<Ellipsoid> table = {
        {1.0, 0.69, 0.92, 0.81, 0.0, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.874, 0.78, 0.0, -0.0184, 0.0, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.22, 0.0, 0.0, -18.0},
        {-0.2, 0.16, 0.41, 0.28, -0.22, 0.0, 0.0, 18.0},
        {0.1, 0.21, 0.25, 0.41, 0.0, 0.35, -0.15, 0.0},
        {0.1, 0.046, 0.046, 0.05, 0.0, 0.1, 0.25, 0.0},
        {0.1, 0.046, 0.046, 0.05, 0.0, -0.1, 0.25, 0.0},
        {0.1, 0.046, 0.023, 0.05, -0.08, -0.605, 0.0, 0.0},
        {0.1, 0.023, 0.023, 0.02, 0.0, -0.606, 0.0, 0.0},
        {0.1, 0.023, 0.046, 0.02, 0.06, -0.605, 0.0, 0.0},
    };
    return table;
}

inline Volume render_ellipsoids(const GridSpec& grid, const std::vector<Ellipsoid>& ellipsoids) {
    grid.validate();
    Volume vol(grid);
    const Dims3 d = grid.dims;
    for (int k = 0; k < d.nz; ++k) {
        const double z = -1.0 + 2.0 * (k + 0.5) / d.nz;
        for (int j = 0; j < d.ny; ++j) {
            const double y = -1.0 + 2.0 * (j + 0.5) / d.ny;
            for (int i = 0; i < d.nx; ++i) {
                const double x = -1.0 + 2.0 * (i + 0.5) / d.nx;
                double acc = 0.0;
                for (const auto& e : ellipsoids) {
                    const double phi = e.phi_deg * std::numbers::pi / 180.0;
                    const double cp = std::cos(phi), sp = std::sin(phi);
                    const double dx = x - e.x0, dy = y - e.y0, dz = z - e.z0;
                    const double qx = cp * dx + sp * dy;
                    const double qy = -sp * dx + cp * dy;
                    const double r = (qx * qx) / (e.a * e.a) + (qy * qy) / (e.b * e.b) +
                                     (dz * dz) / (e.c * e.c);
                    if (r <= 1.0) acc += e.value;
                }
                vol.at(i, j, k) = std::clamp(acc, 0.0, 1.0);
            }
        }
    }
    return vol;
}

inline Volume shepp3d(const GridSpec& grid) {
    return render_ellipsoids(grid, shepp_logan_ellipsoids());
}

struct Insert {
    enum class Shape { cube, cylinder, sphere };
    Shape shape = Shape::cube;
    double value = 0.1;     // additive contrast
    Vec3 center{0, 0, 0};   // normalised coordinates
    Vec3 size{0.1, 0.1, 0.1};   // semi-extent per axis (cylinder: x/y radii, z half-height)
};

/// Adds the inserts to an existing volume (normalised coordinates), then
/// clamps to [0,1].
inline void add_inserts(Volume& vol, const std::vector<Insert>& inserts) {
    const Dims3 d = vol.dims;
    for (int k = 0; k < d.nz; ++k) {
        const double z = -1.0 + 2.0 * (k + 0.5) / d.nz;
        for (int j = 0; j < d.ny; ++j) {
            const double y = -1.0 + 2.0 * (j + 0.5) / d.ny;
            for (int i = 0; i < d.nx; ++i) {
                const double x = -1.0 + 2.0 * (i + 0.5) / d.nx;
                double acc = vol.at(i, j, k);
                for (const auto& ins : inserts) {
                    const double dx = x - ins.center.x, dy = y - ins.center.y,
                                 dz = z - ins.center.z;
                    bool inside = false;
                    switch (ins.shape) {
                        case Insert::Shape::cube:
                            inside = std::abs(dx) <= ins.size.x && std::abs(dy) <= ins.size.y &&
                                     std::abs(dz) <= ins.size.z;
                            break;
                        case Insert::Shape::cylinder:
                            inside = (dx * dx) / (ins.size.x * ins.size.x) +
                                             (dy * dy) / (ins.size.y * ins.size.y) <=
                                         1.0 &&
                                     std::abs(dz) <= ins.size.z;
                            break;
                        case Insert::Shape::sphere:
                            inside = (dx * dx) / (ins.size.x * ins.size.x) +
                                         (dy * dy) / (ins.size.y * ins.size.y) +
                                         (dz * dz) / (ins.size.z * ins.size.z) <=
                                     1.0;
                            break;
                    }
                    if (inside) acc += ins.value;
                }
                vol.at(i, j, k) = std::clamp(acc, 0.0, 1.0);
            }
        }
    }
}

/// Shepp-Logan head plus a deterministic sprinkle of low-contrast spheres in
/// the brain region, so reconstructions have fine structure to preserve.
inline Volume head_phantom(const GridSpec& grid) {
    Volume vol = shepp3d(grid);
    std::mt19937 rng(0x5eed5u);   // fixed: the phantom is a constant of the library
    std::uniform_real_distribution<double> pos(-0.45, 0.45);
    std::uniform_real_distribution<double> rad(0.03, 0.08);
    std::uniform_real_distribution<double> con(0.02, 0.05);
    std::vector<Insert> dots;
    for (int n = 0; n < 12; ++n) {
        Insert ins;
        ins.shape = Insert::Shape::sphere;
        const double r = rad(rng);
        ins.center = {pos(rng), 0.8 * pos(rng), 0.6 * pos(rng)};
        ins.size = {r, r, r};
        ins.value = (n % 2 == 0 ? 1.0 : -1.0) * con(rng);
        dots.push_back(ins);
    }
    add_inserts(vol, dots);
    return vol;
}

/// Soft cylindrical body with high-contrast needle-like inserts; the classic
/// prior-image scenario where a known baseline object acquires a few new
/// features.
inline Volume needle_phantom(const GridSpec& grid) {
    grid.validate();
    Volume vol(grid);
    std::vector<Insert> parts;
    parts.push_back({Insert::Shape::cylinder, 0.2, {0, 0, 0}, {0.85, 0.85, 0.9}});
    parts.push_back({Insert::Shape::cylinder, 0.05, {0.3, 0.2, 0}, {0.25, 0.25, 0.5}});
    parts.push_back({Insert::Shape::cylinder, -0.1, {-0.35, -0.25, 0}, {0.2, 0.2, 0.45}});
    // the "needles": thin, strongly attenuating rods
    parts.push_back({Insert::Shape::cube, 0.7, {0.0, 0.0, 0.0}, {0.04, 0.04, 0.55}});
    parts.push_back({Insert::Shape::cube, 0.6, {-0.3, 0.3, 0.1}, {0.05, 0.05, 0.35}});
    parts.push_back({Insert::Shape::cylinder, 0.65, {0.25, -0.3, -0.1}, {0.05, 0.05, 0.4}});
    add_inserts(vol, parts);
    return vol;
}

/// needle_phantom without the needles; serves as the prior-image object.
inline Volume needle_phantom_baseline(const GridSpec& grid) {
    grid.validate();
    Volume vol(grid);
    std::vector<Insert> parts;
    parts.push_back({Insert::Shape::cylinder, 0.2, {0, 0, 0}, {0.85, 0.85, 0.9}});
    parts.push_back({Insert::Shape::cylinder, 0.05, {0.3, 0.2, 0}, {0.25, 0.25, 0.5}});
    parts.push_back({Insert::Shape::cylinder, -0.1, {-0.35, -0.25, 0}, {0.2, 0.2, 0.45}});
    add_inserts(vol, parts);
    return vol;
}

inline Volume sphere_phantom(const GridSpec& grid, double radius = 0.6, double value = 1.0) {
    grid.validate();
    Volume vol(grid);
    std::vector<Insert> parts;
    parts.push_back({Insert::Shape::sphere, value, {0, 0, 0}, {radius, radius, radius}});
    add_inserts(vol, parts);
    return vol;
}

inline Volume uniform_phantom(const GridSpec& grid, double value = 0.5) {
    grid.validate();
    Volume vol(grid);
    std::fill(vol.data.begin(), vol.data.end(), std::clamp(value, 0.0, 1.0));
    return vol;
}

}  // namespace kryct
