#pragma once

// Core domain types shared by every solver: volumes, cone-beam geometry,
// projection stacks, and the error taxonomy used across the library.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kryct {

/// Raised for invalid geometry, mismatched dimensions, bad parameters and
/// malformed configuration files.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a solver cannot produce a usable result (non-finite iterates,
/// unusable inputs discovered mid-solve).
class SolverError : public std::runtime_error {
  public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double c, const Vec3& a) { return {c * a.x, c * a.y, c * a.z}; }
inline double vec_norm(const Vec3& a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

struct Dims3 {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    int operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    bool operator==(const Dims3&) const = default;
};

/// Voxel grid placement: dims, spacing in mm, and the world position of the
/// minimum corner of voxel (0,0,0).
struct GridSpec {
    Dims3 dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};

    /// Grid of the given size centred on the rotation axis (world origin).
    static GridSpec centered(Dims3 dims, Vec3 spacing) {
        Vec3 extent{dims.nx * spacing.x, dims.ny * spacing.y, dims.nz * spacing.z};
        return GridSpec{dims, spacing, -0.5 * extent};
    }

    Vec3 max_corner() const {
        return {origin.x + dims.nx * spacing.x, origin.y + dims.ny * spacing.y,
                origin.z + dims.nz * spacing.z};
    }

    void validate() const {
        if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
            throw ConfigError("grid dims must be positive");
        if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0))
            throw ConfigError("voxel spacing must be strictly positive");
    }

    bool operator==(const GridSpec&) const = default;
};

inline bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
}

/// Dense 3D scalar field. Data is a flat array in x-fastest ordering:
/// index = i + nx*(j + ny*k). This single convention is used everywhere,
/// including the projector and the difference operators.
struct Volume {
    Dims3 dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    std::vector<double> data;

    Volume() = default;
    explicit Volume(const GridSpec& grid)
        : dims(grid.dims), spacing(grid.spacing), origin(grid.origin),
          data(grid.dims.count(), 0.0) {}

    static Volume zeros(const GridSpec& grid) { return Volume(grid); }
    static Volume centered(Dims3 dims, Vec3 spacing = {1.0, 1.0, 1.0}) {
        return Volume(GridSpec::centered(dims, spacing));
    }

    GridSpec grid() const { return {dims, spacing, origin}; }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.nx) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(dims.ny) * static_cast<std::size_t>(k));
    }
    double& at(int i, int j, int k) { return data[index(i, j, k)]; }
    double at(int i, int j, int k) const { return data[index(i, j, k)]; }

    void validate() const {
        grid().validate();
        if (data.size() != dims.count())
            throw ConfigError("volume data length does not match dims");
        for (double v : data)
            if (!std::isfinite(v)) throw ConfigError("volume contains non-finite values");
    }
};

struct DetectorSpec {
    int nu = 0;          // pixels along u (in-plane)
    int nv = 0;          // pixels along v (axial)
    double pu = 1.0;     // pixel pitch in mm
    double pv = 1.0;
};

/// Circular-trajectory cone-beam geometry with a flat detector.
///
/// World frame: the rotation axis is z. At angle theta the source sits at
/// dso*(cos t, sin t, 0); the detector centre sits opposite the source at
/// distance dsd from it, offset by (offset_u, offset_v) along the detector
/// axes u = (-sin t, cos t, 0) and v = (0, 0, 1).
struct ConeBeamGeometry {
    double dso = 0.0;    // source-to-axis distance, mm
    double dsd = 0.0;    // source-to-detector distance, mm
    DetectorSpec detector;
    std::vector<double> angles;   // rotation angles in radians
    double offset_u = 0.0;        // detector offset along u, mm
    double offset_v = 0.0;        // detector offset along v, mm

    std::size_t n_angles() const { return angles.size(); }
    std::size_t rays_per_angle() const {
        return static_cast<std::size_t>(detector.nu) * static_cast<std::size_t>(detector.nv);
    }
    std::size_t ray_count() const { return rays_per_angle() * angles.size(); }

    void validate() const {
        if (!(dso > 0.0) || !(dsd > dso))
            throw ConfigError("geometry requires dsd > dso > 0");
        if (detector.nu < 1 || detector.nv < 1)
            throw ConfigError("detector must have at least one pixel per axis");
        if (!(detector.pu > 0.0) || !(detector.pv > 0.0))
            throw ConfigError("detector pixel pitch must be positive");
        if (angles.empty()) throw ConfigError("geometry requires at least one angle");
    }
};

/// Stacked 2D detector readings, one per angle. Layout is u-fastest:
/// index = iu + nu*(iv + nv*ia).
struct ProjectionSet {
    ConeBeamGeometry geometry;
    std::vector<double> data;

    ProjectionSet() = default;
    explicit ProjectionSet(ConeBeamGeometry geom)
        : geometry(std::move(geom)), data(geometry.ray_count(), 0.0) {}

    std::size_t index(int iu, int iv, std::size_t ia) const {
        return static_cast<std::size_t>(iu) +
               static_cast<std::size_t>(geometry.detector.nu) *
                   (static_cast<std::size_t>(iv) +
                    static_cast<std::size_t>(geometry.detector.nv) * ia);
    }

    void validate() const {
        geometry.validate();
        if (data.size() != geometry.ray_count())
            throw ConfigError("projection data length does not match geometry");
        for (double v : data)
            if (!std::isfinite(v)) throw ConfigError("projections contain non-finite values");
    }
};

}  // namespace kryct
