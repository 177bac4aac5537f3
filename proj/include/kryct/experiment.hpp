#pragma once

// Experiment orchestration: JSON config -> simulated scan -> reconstructions
// -> metrics tables and image artifacts on disk. This is the layer the CLI
// drives; everything underneath is the plain library API.
//
// Directory layout per run:
//   <out>/ground_truth.{raw,meta.json}
//   <out>/prior.{raw,meta.json}                 (when a prior is configured)
//   <out>/angles_<n>/projections.{raw,meta.json}
//   <out>/angles_<n>/<algorithm>/volume.{raw,meta.json}
//   <out>/angles_<n>/<algorithm>/slice_recon.pgm, slice_diff.pgm
//   <out>/angles_<n>/<algorithm>/history.csv    (iterative methods)
//   <out>/metrics.csv                           (deterministic for a fixed seed)
//   <out>/timings.csv                           (wall clock; varies run to run)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdk.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "phantoms.hpp"
#include "projector.hpp"
#include "recon.hpp"
#include "types.hpp"

namespace kryct {

struct PhantomSpec {
    std::string kind = "head";   // head | shepp | needle | sphere | uniform
    Dims3 dims{64, 64, 64};
    Vec3 spacing{1.0, 1.0, 1.0};
    // Features added on top of the base object (normalised coordinates). The
    // baseline variant used for priors omits them: they model what changed
    // between the prior scan and the current one.
    std::vector<Insert> inserts;
};

struct PriorSpec {
    // none:          no prior volume (prior-based algorithms are rejected)
    // clean_scan:    FDK of the full noiseless scan of the imaged object
    // baseline_scan: same, but of the object's baseline variant (needle
    //                phantom without its inserts; identical otherwise)
    // file:          volume loaded from disk
    std::string kind = "none";
    std::filesystem::path path;
};

struct AlgorithmSpec {
    std::string name;                // fdk | cgls | sirt | irn-tv | irn-piple | irn-piccs | asd-pocs-tv
    std::size_t iterations = 100;    // cgls / sirt / asd-pocs-tv
    RegularizationParams reg;        // irn-* solvers
    bool auto_alpha = false;         // calibrate alpha from the FDK reconstruction
    AsdPocsConfig pocs;

    bool uses_prior() const { return name == "irn-piple" || name == "irn-piccs"; }
    bool is_irn() const { return name.rfind("irn-", 0) == 0; }
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    PhantomSpec phantom;
    ConeBeamGeometry geometry;           // full-scan geometry (angles filled in)
    double noise_sigma_rel = 0.0;        // gaussian sigma relative to max reading
    PriorSpec prior;
    std::vector<std::size_t> angle_counts;
    std::vector<AlgorithmSpec> algorithms;
    int slice = -1;                      // axial slice for PGMs; -1 = middle

    void validate() const;
};

namespace detail {

inline std::vector<double> uniform_angles(std::size_t n) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i)
        a[i] = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    return a;
}

inline void require_inserts_in_bounds(const std::vector<Insert>& inserts) {
    for (const auto& ins : inserts) {
        if (!(ins.size.x > 0.0) || !(ins.size.y > 0.0) || !(ins.size.z > 0.0))
            throw ConfigError("phantom insert sizes must be positive");
        if (std::abs(ins.center.x) + ins.size.x > 1.0 ||
            std::abs(ins.center.y) + ins.size.y > 1.0 ||
            std::abs(ins.center.z) + ins.size.z > 1.0)
            throw ConfigError("phantom insert lies outside the volume");
    }
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
    geometry.validate();
    GridSpec::centered(phantom.dims, phantom.spacing).validate();
    static const std::vector<std::string> kinds = {"head", "shepp", "needle", "sphere",
                                                   "uniform"};
    if (std::find(kinds.begin(), kinds.end(), phantom.kind) == kinds.end())
        throw ConfigError("unknown phantom kind: " + phantom.kind);
    detail::require_inserts_in_bounds(phantom.inserts);
    static const std::vector<std::string> priors = {"none", "clean_scan", "baseline_scan",
                                                    "file"};
    if (std::find(priors.begin(), priors.end(), prior.kind) == priors.end())
        throw ConfigError("unknown prior kind: " + prior.kind);
    if (prior.kind == "file" && prior.path.empty())
        throw ConfigError("prior kind 'file' needs a path");
    if (angle_counts.empty()) throw ConfigError("angle_counts must not be empty");
    for (std::size_t n : angle_counts)
        if (n < 1 || n > geometry.n_angles())
            throw ConfigError("angle counts must lie in [1, full scan size]");
    if (algorithms.empty()) throw ConfigError("no algorithms configured");
    static const std::vector<std::string> known = {"fdk",     "cgls",      "sirt",
                                                   "irn-tv",  "irn-piple", "irn-piccs",
                                                   "asd-pocs-tv"};
    for (const auto& a : algorithms) {
        if (std::find(known.begin(), known.end(), a.name) == known.end())
            throw ConfigError("unknown algorithm: " + a.name);
        if (a.uses_prior() && prior.kind == "none")
            throw ConfigError(a.name + " requires a prior image");
        if (!(noise_sigma_rel >= 0.0)) throw ConfigError("noise sigma must be >= 0");
    }
}

// --- JSON parsing -----------------------------------------------------------

namespace detail {

template <class F>
auto json_guard(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + where + ": " + e.what());
    }
}

inline Vec3 parse_vec3(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline Dims3 parse_dims(const nlohmann::json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

inline Insert parse_insert(const nlohmann::json& j) {
    Insert ins;
    const auto shape = j.at("shape").get<std::string>();
    if (shape == "cube")
        ins.shape = Insert::Shape::cube;
    else if (shape == "cylinder")
        ins.shape = Insert::Shape::cylinder;
    else if (shape == "sphere")
        ins.shape = Insert::Shape::sphere;
    else
        throw ConfigError("unknown insert shape: " + shape);
    ins.value = j.at("value").get<double>();
    ins.center = parse_vec3(j.at("center"));
    ins.size = parse_vec3(j.at("size"));
    return ins;
}

inline AlgorithmSpec parse_algorithm(const nlohmann::json& j) {
    AlgorithmSpec a;
    a.name = j.at("name").get<std::string>();
    if (j.contains("iterations")) a.iterations = j.at("iterations").get<std::size_t>();
    if (j.contains("outer")) a.reg.outer_iters = j.at("outer").get<std::size_t>();
    if (j.contains("inner")) a.reg.inner_iters = j.at("inner").get<std::size_t>();
    if (j.contains("alpha"))
        a.reg.alpha = j.at("alpha").get<double>();
    else
        a.auto_alpha = a.is_irn();
    if (j.contains("lambda")) a.reg.lambda = j.at("lambda").get<double>();
    if (j.contains("tau")) a.reg.tau = j.at("tau").get<double>();
    if (j.contains("inner_tolerance"))
        a.reg.inner_tolerance = j.at("inner_tolerance").get<double>();
    if (j.contains("warm_start")) a.reg.warm_start = j.at("warm_start").get<bool>();
    if (a.name == "asd-pocs-tv") {
        a.pocs.max_iters = a.iterations;
        if (j.contains("beta")) a.pocs.beta = j.at("beta").get<double>();
        if (j.contains("beta_red")) a.pocs.beta_red = j.at("beta_red").get<double>();
        if (j.contains("ng")) a.pocs.ng = j.at("ng").get<int>();
        if (j.contains("tv_step_ratio"))
            a.pocs.tv_step_ratio = j.at("tv_step_ratio").get<double>();
        if (j.contains("tv_step_red")) a.pocs.tv_step_red = j.at("tv_step_red").get<double>();
        if (j.contains("r_max")) a.pocs.r_max = j.at("r_max").get<double>();
        if (j.contains("epsilon")) a.pocs.epsilon = j.at("epsilon").get<double>();
        if (j.contains("stop_cosine")) a.pocs.stop_cosine = j.at("stop_cosine").get<double>();
    }
    return a;
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const nlohmann::json& j) {
    return detail::json_guard("experiment", [&] {
        ExperimentConfig c;
        if (j.contains("name")) c.name = j.at("name").get<std::string>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();

        const auto& jp = j.at("phantom");
        c.phantom.kind = jp.at("kind").get<std::string>();
        c.phantom.dims = detail::parse_dims(jp.at("dims"));
        if (jp.contains("spacing")) c.phantom.spacing = detail::parse_vec3(jp.at("spacing"));
        if (jp.contains("inserts"))
            for (const auto& ji : jp.at("inserts"))
                c.phantom.inserts.push_back(detail::parse_insert(ji));

        const auto& jg = j.at("geometry");
        c.geometry.dso = jg.at("dso").get<double>();
        c.geometry.dsd = jg.at("dsd").get<double>();
        c.geometry.detector.nu = jg.at("detector").at("nu").get<int>();
        c.geometry.detector.nv = jg.at("detector").at("nv").get<int>();
        c.geometry.detector.pu = jg.at("detector").at("pu").get<double>();
        c.geometry.detector.pv = jg.at("detector").at("pv").get<double>();
        if (jg.contains("offsets")) {
            c.geometry.offset_u = jg.at("offsets").at(0).get<double>();
            c.geometry.offset_v = jg.at("offsets").at(1).get<double>();
        }
        c.geometry.angles = detail::uniform_angles(jg.at("full_scan_angles").get<std::size_t>());

        if (j.contains("noise")) c.noise_sigma_rel = j.at("noise").at("sigma_rel").get<double>();
        if (j.contains("prior")) {
            c.prior.kind = j.at("prior").at("kind").get<std::string>();
            if (j.at("prior").contains("path"))
                c.prior.path = j.at("prior").at("path").get<std::string>();
        }
        c.angle_counts = j.at("angle_counts").get<std::vector<std::size_t>>();
        for (const auto& ja : j.at("algorithms")) c.algorithms.push_back(detail::parse_algorithm(ja));
        if (j.contains("slice")) c.slice = j.at("slice").get<int>();
        c.validate();
        return c;
    });
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config_json(j);
}

// --- simulation --------------------------------------------------------------

/// The baseline variant of a phantom: what the object looked like before its
/// "new" features appeared. The needle phantom loses its built-in rods, and
/// any configured inserts are left out.
inline Volume make_phantom_baseline(const PhantomSpec& spec) {
    const GridSpec grid = GridSpec::centered(spec.dims, spec.spacing);
    if (spec.kind == "head") return head_phantom(grid);
    if (spec.kind == "shepp") return shepp3d(grid);
    if (spec.kind == "needle") return needle_phantom_baseline(grid);
    if (spec.kind == "sphere") return sphere_phantom(grid);
    if (spec.kind == "uniform") return uniform_phantom(grid);
    throw ConfigError("unknown phantom kind: " + spec.kind);
}

inline Volume make_phantom(const PhantomSpec& spec) {
    detail::require_inserts_in_bounds(spec.inserts);
    Volume vol = spec.kind == "needle"
                     ? needle_phantom(GridSpec::centered(spec.dims, spec.spacing))
                     : make_phantom_baseline(spec);
    add_inserts(vol, spec.inserts);
    return vol;
}

inline ProjectionSet simulate_projections(const Volume& vol, const ConeBeamGeometry& geom) {
    ProjectionSet proj(geom);
    project_forward(vol.data, vol.grid(), geom, proj.data);
    return proj;
}

/// Additive gaussian noise with sigma = sigma_rel * max reading, seeded and
/// sequential, so a given (data, seed) pair always yields the same noise.
inline void add_noise(ProjectionSet& proj, double sigma_rel, std::uint64_t seed) {
    if (sigma_rel == 0.0) return;
    if (sigma_rel < 0.0) throw ConfigError("noise sigma must be >= 0");
    double peak = 0.0;
    for (double v : proj.data) peak = std::max(peak, std::abs(v));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_rel * peak);
    for (double& v : proj.data) v += gauss(rng);
}

// --- running ------------------------------------------------------------------

struct MetricsRow {
    std::string algorithm;
    std::size_t angles = 0;
    std::size_t iterations = 0;
    std::string status = "ok";     // ok | failed
    MetricReport metrics;
};

struct TimingRow {
    std::string algorithm;
    std::size_t angles = 0;
    double seconds = 0.0;
};

struct ExperimentResult {
    std::vector<MetricsRow> metrics;
    std::vector<TimingRow> timings;
    std::filesystem::path out_dir;
};

namespace detail {

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::binary);   // binary: one newline convention
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "# kryct metrics v1\n";
    out << "algorithm,angles,iterations,status,psnr,ssim,rel_error\n";
    for (const auto& r : rows) {
        out << r.algorithm << ',' << r.angles << ',' << r.iterations << ',' << r.status << ',';
        if (r.status == "ok")
            out << format_csv(r.metrics.psnr) << ',' << format_csv(r.metrics.ssim) << ','
                << format_csv(r.metrics.rel_error) << '\n';
        else
            out << ",,\n";
    }
}

inline void write_timings_csv(const std::filesystem::path& path,
                              const std::vector<TimingRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "# kryct timings v1\n";
    out << "algorithm,angles,solve_seconds\n";
    for (const auto& r : rows)
        out << r.algorithm << ',' << r.angles << ',' << format_csv(r.seconds) << '\n';
}

inline void write_history_csv(const std::filesystem::path& path, const ReconReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "# kryct history v1\n";
    out << "iteration,outer_cycle,residual,rel_error\n";
    std::size_t cycle = 0;
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
        while (cycle < rep.outer_boundaries.size() && i >= rep.outer_boundaries[cycle]) ++cycle;
        out << (i + 1) << ',' << (cycle + 1) << ',' << format_csv(rep.residual_history[i])
            << ',';
        if (i < rep.error_history.size()) out << format_csv(rep.error_history[i]);
        out << '\n';
    }
}

/// alpha such that the TV penalty starts at a tenth of the data term of the
/// filtered-backprojection reconstruction.
inline double calibrate_alpha(const LinearMap& A, std::span<const double> b,
                              const Volume& fdk_vol) {
    std::vector<double> ax(A.range_size());
    A.apply(fdk_vol.data, ax);
    double res2 = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        const double d = ax[i] - b[i];
        res2 += d * d;
    }
    const double tv_val = tv_of(fdk_vol);
    if (!(tv_val > 0.0) || !std::isfinite(res2)) return 0.05;
    const double a = std::sqrt(0.1 * res2 / tv_val);
    return std::isfinite(a) && a > 0.0 ? a : 0.05;
}

struct AlgoOutcome {
    ReconReport report;
    double seconds = 0.0;
};

inline AlgoOutcome run_algorithm(const AlgorithmSpec& algo, const ProjectionSet& proj,
                                 const GridSpec& grid, const Volume* prior,
                                 const Volume& ground_truth, const Volume& fdk_recon) {
    ReconOptions opts;
    opts.ground_truth = &ground_truth;

    AlgorithmSpec spec = algo;   // local copy so auto-calibration can fill alpha
    if (spec.auto_alpha && spec.is_irn()) {
        ConeBeamProjector A(grid, proj.geometry);
        spec.reg.alpha = calibrate_alpha(A, proj.data, fdk_recon);
    }

    AlgoOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    if (spec.name == "fdk") {
        out.report.volume = fdk_recon;
    } else if (spec.name == "cgls") {
        out.report = cgls_recon(proj, grid, spec.iterations, opts);
    } else if (spec.name == "sirt") {
        out.report = sirt_recon(proj, grid, spec.iterations, opts);
    } else if (spec.name == "irn-tv") {
        out.report = irn_tv(proj, grid, spec.reg, opts);
    } else if (spec.name == "irn-piple") {
        out.report = irn_piple(proj, grid, *prior, spec.reg, opts);
    } else if (spec.name == "irn-piccs") {
        out.report = irn_piccs(proj, grid, *prior, spec.reg, opts);
    } else if (spec.name == "asd-pocs-tv") {
        out.report = asd_pocs_tv(proj, grid, spec.pocs, opts);
    } else {
        throw ConfigError("unknown algorithm: " + spec.name);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!all_finite(out.report.volume.data))
        throw SolverError(spec.name + " produced non-finite values");
    return out;
}

inline std::size_t iterations_of(const AlgorithmSpec& a) {
    if (a.name == "fdk") return 0;
    if (a.is_irn()) return a.reg.outer_iters * a.reg.inner_iters;
    return a.iterations;
}

}  // namespace detail

/// Builds the prior volume called for by the config. The scan-based priors
/// image the (baseline) object over the full angle set without noise and
/// reconstruct with FDK, mimicking a good-quality earlier acquisition.
inline Volume build_prior(const ExperimentConfig& cfg, const GridSpec& grid) {
    if (cfg.prior.kind == "file") return read_volume(cfg.prior.path);
    if (cfg.prior.kind == "clean_scan" || cfg.prior.kind == "baseline_scan") {
        const Volume object = cfg.prior.kind == "clean_scan"
                                  ? make_phantom(cfg.phantom)
                                  : make_phantom_baseline(cfg.phantom);
        return fdk(simulate_projections(object, cfg.geometry), grid);
    }
    throw ConfigError("no prior configured");
}

/// Runs the full experiment described by the config. Solver failures are
/// recorded per row and the remaining algorithms continue; if every
/// reconstruction failed, throws SolverError after writing the tables.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const GridSpec grid = GridSpec::centered(cfg.phantom.dims, cfg.phantom.spacing);
    const Volume ground_truth = make_phantom(cfg.phantom);
    write_volume(out_dir / "ground_truth", ground_truth);

    ProjectionSet full_scan = simulate_projections(ground_truth, cfg.geometry);
    add_noise(full_scan, cfg.noise_sigma_rel, cfg.seed);
    full_scan.validate();

    std::optional<Volume> prior;
    if (cfg.prior.kind != "none") {
        prior = build_prior(cfg, grid);
        write_volume(out_dir / "prior", *prior);
    }

    auto [gt_lo, gt_hi] = std::minmax_element(ground_truth.data.begin(), ground_truth.data.end());
    const double win_lo = *gt_lo;
    const double win_hi = *gt_hi > *gt_lo ? *gt_hi : *gt_lo + 1.0;
    const int slice = cfg.slice >= 0 ? cfg.slice : cfg.phantom.dims.nz / 2;
    if (slice >= cfg.phantom.dims.nz) throw ConfigError("slice index out of range");

    ExperimentResult result;
    result.out_dir = out_dir;
    std::size_t failures = 0, runs = 0;

    for (std::size_t n : cfg.angle_counts) {
        const ProjectionSet proj = subsample_angles(full_scan, n);
        const fs::path angle_dir = out_dir / ("angles_" + std::to_string(n));
        fs::create_directories(angle_dir);
        write_projections(angle_dir / "projections", proj);

        // One FDK reconstruction per angle count: it is both the "fdk"
        // algorithm's result and the operating point for auto alpha.
        Volume fdk_recon;
        std::string fdk_error;
        double fdk_seconds = 0.0;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            fdk_recon = fdk(proj, grid);
            fdk_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } catch (const SolverError& e) {
            fdk_error = e.what();
            fdk_recon = Volume(grid);
        }

        for (const auto& algo : cfg.algorithms) {
            ++runs;
            MetricsRow row;
            row.algorithm = algo.name;
            row.angles = n;
            row.iterations = detail::iterations_of(algo);
            const fs::path algo_dir = angle_dir / algo.name;
            try {
                if (algo.name == "fdk" && !fdk_error.empty()) throw SolverError(fdk_error);
                auto outcome = detail::run_algorithm(algo, proj, grid,
                                                     prior ? &*prior : nullptr, ground_truth,
                                                     fdk_recon);
                fs::create_directories(algo_dir);
                const Volume& vol = outcome.report.volume;
                write_volume(algo_dir / "volume", vol);
                write_pgm_slice(algo_dir / "slice_recon.pgm", vol, slice, win_lo, win_hi);
                Volume diff(grid);
                for (std::size_t i = 0; i < diff.data.size(); ++i)
                    diff.data[i] = std::abs(vol.data[i] - ground_truth.data[i]);
                write_pgm_slice(algo_dir / "slice_diff.pgm", diff, slice, 0.0,
                                0.5 * (win_hi - win_lo));
                if (!outcome.report.residual_history.empty())
                    detail::write_history_csv(algo_dir / "history.csv", outcome.report);
                row.metrics = compute_metrics(vol, ground_truth);
                result.timings.push_back(
                    {algo.name, n, algo.name == "fdk" ? fdk_seconds : outcome.seconds});
            } catch (const SolverError&) {
                row.status = "failed";
                ++failures;
            }
            result.metrics.push_back(row);
        }
    }

    detail::write_metrics_csv(out_dir / "metrics.csv", result.metrics);
    detail::write_timings_csv(out_dir / "timings.csv", result.timings);
    if (failures == runs) throw SolverError("all configured reconstructions failed");
    return result;
}

// --- parameter sweep -----------------------------------------------------------

struct SweepRow {
    double alpha = 0.0;
    double lambda = 0.0;
    std::string status = "ok";
    MetricReport metrics;
    bool best = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::filesystem::path out_dir;
};

/// Grid sweep of (alpha, lambda) for one reweighted algorithm over the first
/// configured angle count. Rows come out in deterministic row-major order
/// (alpha outer, lambda inner); the best row by PSNR is flagged.
inline SweepResult sweep_params(const ExperimentConfig& cfg, const std::string& algorithm,
                                std::vector<double> alphas, std::vector<double> lambdas,
                                const std::filesystem::path& out_dir) {
    cfg.validate();
    if (alphas.empty() || lambdas.empty())
        throw ConfigError("sweep needs non-empty alpha and lambda grids");
    const AlgorithmSpec* base = nullptr;
    for (const auto& a : cfg.algorithms)
        if (a.name == algorithm) base = &a;
    if (!base) throw ConfigError("sweep: config does not configure algorithm " + algorithm);
    if (!base->is_irn())
        throw ConfigError("sweep supports the reweighted solvers only, not " + algorithm);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const GridSpec grid = GridSpec::centered(cfg.phantom.dims, cfg.phantom.spacing);
    const Volume ground_truth = make_phantom(cfg.phantom);
    ProjectionSet full_scan = simulate_projections(ground_truth, cfg.geometry);
    add_noise(full_scan, cfg.noise_sigma_rel, cfg.seed);
    const ProjectionSet proj = subsample_angles(full_scan, cfg.angle_counts.front());
    std::optional<Volume> prior;
    if (cfg.prior.kind != "none") prior = build_prior(cfg, grid);

    SweepResult result;
    result.out_dir = out_dir;
    std::size_t best_idx = 0;
    double best_psnr = -1.0;
    for (double a : alphas)
        for (double l : lambdas) {
            AlgorithmSpec spec = *base;
            spec.auto_alpha = false;
            spec.reg.alpha = a;
            spec.reg.lambda = l;
            SweepRow row;
            row.alpha = a;
            row.lambda = l;
            try {
                auto outcome = detail::run_algorithm(spec, proj, grid,
                                                     prior ? &*prior : nullptr, ground_truth,
                                                     Volume(grid));
                row.metrics = compute_metrics(outcome.report.volume, ground_truth);
                if (row.metrics.psnr > best_psnr) {
                    best_psnr = row.metrics.psnr;
                    best_idx = result.rows.size();
                }
            } catch (const SolverError&) {
                row.status = "failed";
            }
            result.rows.push_back(row);
        }
    if (best_psnr >= 0.0) result.rows[best_idx].best = true;

    std::ofstream out(out_dir / "sweep.csv", std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + (out_dir / "sweep.csv").string());
    out << "# kryct sweep v1\n";
    out << "algorithm,alpha,lambda,status,psnr,ssim,rel_error,best\n";
    for (const auto& r : result.rows) {
        out << algorithm << ',' << format_csv(r.alpha) << ',' << format_csv(r.lambda) << ','
            << r.status << ',';
        if (r.status == "ok")
            out << format_csv(r.metrics.psnr) << ',' << format_csv(r.metrics.ssim) << ','
                << format_csv(r.metrics.rel_error);
        else
            out << ",,";
        out << ',' << (r.best ? 1 : 0) << '\n';
    }
    return result;
}

}  // namespace kryct
