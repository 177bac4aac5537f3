// Command-line front end.
//
//   kryct run <config.json> [--output DIR]
//   kryct sweep <config.json> --algorithm NAME --alpha A... --lambda L... [--output DIR]
//   kryct metrics <volume> <reference>
//
// Exit codes: 0 success, 2 configuration problem, 3 every reconstruction
// failed. Set KRYCT_THREADS (or OMP_NUM_THREADS) to pin the thread count.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include <kryct/kryct.hpp>

namespace {

void apply_thread_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("KRYCT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

int cmd_run(const std::string& config_path, const std::string& output) {
    const kryct::ExperimentConfig cfg = kryct::parse_config(config_path);
    const std::filesystem::path out_dir = output.empty() ? cfg.name : output;
    const auto result = kryct::run_experiment(cfg, out_dir);
    std::cout << "wrote " << (result.out_dir / "metrics.csv").string() << "\n";
    for (const auto& row : result.metrics) {
        std::cout << row.algorithm << " @" << row.angles << " angles: ";
        if (row.status == "ok")
            std::cout << "psnr=" << kryct::format_csv(row.metrics.psnr)
                      << " ssim=" << kryct::format_csv(row.metrics.ssim)
                      << " rel_error=" << kryct::format_csv(row.metrics.rel_error) << "\n";
        else
            std::cout << "FAILED\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& algorithm,
              const std::vector<double>& alphas, const std::vector<double>& lambdas,
              const std::string& output) {
    const kryct::ExperimentConfig cfg = kryct::parse_config(config_path);
    const std::filesystem::path out_dir =
        output.empty() ? std::filesystem::path(cfg.name + "_sweep") : std::filesystem::path(output);
    const auto result = kryct::sweep_params(cfg, algorithm, alphas, lambdas, out_dir);
    std::cout << "wrote " << (result.out_dir / "sweep.csv").string() << "\n";
    for (const auto& row : result.rows) {
        std::cout << "alpha=" << kryct::format_csv(row.alpha)
                  << " lambda=" << kryct::format_csv(row.lambda) << ": ";
        if (row.status == "ok")
            std::cout << "psnr=" << kryct::format_csv(row.metrics.psnr)
                      << (row.best ? "  <-- best" : "") << "\n";
        else
            std::cout << "FAILED\n";
    }
    return 0;
}

int cmd_metrics(const std::string& volume_path, const std::string& reference_path) {
    const kryct::Volume vol = kryct::read_volume(volume_path);
    const kryct::Volume ref = kryct::read_volume(reference_path);
    const auto m = kryct::compute_metrics(vol, ref);
    std::cout << "psnr=" << kryct::format_csv(m.psnr) << " ssim=" << kryct::format_csv(m.ssim)
              << " rel_error=" << kryct::format_csv(m.rel_error) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();

    CLI::App app{"Iterative cone-beam CT reconstruction experiments"};
    app.require_subcommand(1);

    std::string config_path, output, algorithm;
    std::vector<double> alphas, lambdas;
    std::string volume_path, reference_path;

    auto* run = app.add_subcommand("run", "run all reconstructions of an experiment config");
    run->add_option("config", config_path, "experiment JSON")->required();
    run->add_option("--output", output, "output directory (default: experiment name)");

    auto* sweep = app.add_subcommand("sweep", "grid-sweep alpha/lambda for one solver");
    sweep->add_option("config", config_path, "experiment JSON")->required();
    sweep->add_option("--algorithm", algorithm, "irn-tv | irn-piple | irn-piccs")->required();
    sweep->add_option("--alpha", alphas, "alpha grid")->required();
    sweep->add_option("--lambda", lambdas, "lambda grid")->required();
    sweep->add_option("--output", output, "output directory");

    auto* metrics = app.add_subcommand("metrics", "compare two stored volumes");
    metrics->add_option("volume", volume_path, "volume to evaluate")->required();
    metrics->add_option("reference", reference_path, "reference volume")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, output);
        if (sweep->parsed()) return cmd_sweep(config_path, algorithm, alphas, lambdas, output);
        if (metrics->parsed()) return cmd_metrics(volume_path, reference_path);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const kryct::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const kryct::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
