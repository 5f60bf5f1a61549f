#include <CLI11.hpp>

#include "emel/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Spectral Galerkin solver for 1D periodic electromagnetoelastic diffraction problems"};
    app.require_subcommand(1);

    emel::cli::Options opt;
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Seed for randomized instances");
    app.add_option("--threads", opt.threads, "Worker threads for studies")->check(CLI::PositiveNumber);

    auto* run = app.add_subcommand("run", "Solve one configuration and write its artifacts");
    run->add_option("--config", opt.config, "Run config (JSON)")->required();
    run->add_option("--out", opt.out, "Output root (defaults to outputs.dir)");

    auto* study = app.add_subcommand("study", "Run a convergence, stability, uniqueness or oracle study");
    study->add_option("--config", opt.config, "Study manifest (JSON)")->required();
    study->add_option("--out", opt.out, "Output root");

    std::string trajectory, out_path;
    std::vector<double> times;
    int resolution = 64;
    auto* rec = app.add_subcommand("reconstruct", "Synthesize nodal fields from a trajectory CSV");
    rec->add_option("--trajectory", trajectory, "trajectory.csv written by `run`")->required();
    rec->add_option("--times", times, "Times to reconstruct")->required()->delimiter(',');
    rec->add_option("--resolution", resolution, "Uniform z points per time");
    rec->add_option("--out", out_path, "Output CSV (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : emel::cli::kValidation;
    }
    if (app.count("--seed")) opt.seed = seed;

    if (*run) return emel::cli::cmd_run(opt);
    if (*study) return emel::cli::cmd_study(opt);
    return emel::cli::cmd_reconstruct(trajectory, times, resolution, out_path);
}
