#pragma once

// On-disk formats. Volumes and projection stacks are raw little-endian
// float32 arrays (x- resp. u-fastest) next to a small JSON sidecar
// ("<name>.meta.json") describing shape and geometry. Values are promoted to
// double on load; a float32 round trip is therefore byte-stable.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "types.hpp"

namespace kryct {

static_assert(std::endian::native == std::endian::little,
              "raw volume io assumes a little-endian host");

namespace detail {

inline void write_raw_f32(const std::filesystem::path& path, std::span<const double> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    std::vector<float> buf(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) buf[i] = static_cast<float>(data[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw ConfigError("short write: " + path.string());
}

inline std::vector<double> read_raw_f32(const std::filesystem::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path.string());
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
        throw ConfigError("raw file shorter than its metadata claims: " + path.string());
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = buf[i];
    return out;
}

/// "<dir>/name" or "<dir>/name.raw" -> ("<dir>/name.raw", "<dir>/name.meta.json")
inline std::pair<std::filesystem::path, std::filesystem::path> raw_pair(
    std::filesystem::path stem) {
    if (stem.extension() == ".raw") stem.replace_extension();
    std::filesystem::path raw = stem;
    raw += ".raw";
    std::filesystem::path meta = stem;
    meta += ".meta.json";
    return {raw, meta};
}

inline nlohmann::json load_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open metadata: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad metadata in " + path.string() + ": " + e.what());
    }
    return j;
}

}  // namespace detail

inline void write_volume(const std::filesystem::path& stem, const Volume& vol) {
    vol.validate();
    auto [raw, meta] = detail::raw_pair(stem);
    detail::write_raw_f32(raw, vol.data);
    nlohmann::json j = {
        {"type", "volume"},
        {"dtype", "float32"},
        {"dims", {vol.dims.nx, vol.dims.ny, vol.dims.nz}},
        {"spacing", {vol.spacing.x, vol.spacing.y, vol.spacing.z}},
        {"origin", {vol.origin.x, vol.origin.y, vol.origin.z}},
        {"order", "x-fastest"},
    };
    std::ofstream out(meta);
    if (!out) throw ConfigError("cannot open for writing: " + meta.string());
    out << j.dump(2) << '\n';
}

inline Volume read_volume(const std::filesystem::path& stem) {
    auto [raw, meta] = detail::raw_pair(stem);
    nlohmann::json j = detail::load_meta(meta);
    try {
        if (j.at("type").get<std::string>() != "volume")
            throw ConfigError(meta.string() + " does not describe a volume");
        GridSpec grid;
        grid.dims = {j.at("dims").at(0).get<int>(), j.at("dims").at(1).get<int>(),
                     j.at("dims").at(2).get<int>()};
        grid.spacing = {j.at("spacing").at(0).get<double>(), j.at("spacing").at(1).get<double>(),
                        j.at("spacing").at(2).get<double>()};
        grid.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>(),
                       j.at("origin").at(2).get<double>()};
        Volume vol(grid);
        vol.data = detail::read_raw_f32(raw, grid.dims.count());
        vol.validate();
        return vol;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad metadata in " + meta.string() + ": " + e.what());
    }
}

inline void write_projections(const std::filesystem::path& stem, const ProjectionSet& proj) {
    proj.validate();
    auto [raw, meta] = detail::raw_pair(stem);
    detail::write_raw_f32(raw, proj.data);
    const ConeBeamGeometry& g = proj.geometry;
    nlohmann::json j = {
        {"type", "projections"},
        {"dtype", "float32"},
        {"order", "u-fastest"},
        {"geometry",
         {{"dso", g.dso},
          {"dsd", g.dsd},
          {"detector", {{"nu", g.detector.nu}, {"nv", g.detector.nv}, {"pu", g.detector.pu},
                        {"pv", g.detector.pv}}},
          {"offsets", {g.offset_u, g.offset_v}},
          {"angles", g.angles}}},
    };
    std::ofstream out(meta);
    if (!out) throw ConfigError("cannot open for writing: " + meta.string());
    out << j.dump(2) << '\n';
}

inline ProjectionSet read_projections(const std::filesystem::path& stem) {
    auto [raw, meta] = detail::raw_pair(stem);
    nlohmann::json j = detail::load_meta(meta);
    try {
        if (j.at("type").get<std::string>() != "projections")
            throw ConfigError(meta.string() + " does not describe projections");
        const auto& jg = j.at("geometry");
        ConeBeamGeometry g;
        g.dso = jg.at("dso").get<double>();
        g.dsd = jg.at("dsd").get<double>();
        g.detector.nu = jg.at("detector").at("nu").get<int>();
        g.detector.nv = jg.at("detector").at("nv").get<int>();
        g.detector.pu = jg.at("detector").at("pu").get<double>();
        g.detector.pv = jg.at("detector").at("pv").get<double>();
        g.offset_u = jg.at("offsets").at(0).get<double>();
        g.offset_v = jg.at("offsets").at(1).get<double>();
        g.angles = jg.at("angles").get<std::vector<double>>();
        ProjectionSet proj(g);
        proj.data = detail::read_raw_f32(raw, g.ray_count());
        proj.validate();
        return proj;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad metadata in " + meta.string() + ": " + e.what());
    }
}

/// Binary 8-bit PGM of one axial slice, window [lo, hi] mapped to 0..255.
inline void write_pgm_slice(const std::filesystem::path& path, const Volume& vol, int k,
                            double lo, double hi) {
    if (k < 0 || k >= vol.dims.nz) throw ConfigError("pgm: slice index out of range");
    if (!(hi > lo)) throw ConfigError("pgm: window must satisfy hi > lo");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "P5\n" << vol.dims.nx << ' ' << vol.dims.ny << "\n255\n";
    for (int j = 0; j < vol.dims.ny; ++j)
        for (int i = 0; i < vol.dims.nx; ++i) {
            double v = (vol.at(i, j, k) - lo) / (hi - lo);
            v = std::clamp(v, 0.0, 1.0);
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
    if (!out) throw ConfigError("short write: " + path.string());
}

/// Deterministic float formatting for CSV output ("%.9g", locale-free).
inline std::string format_csv(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace kryct
