// elaa-doa: Monte-Carlo runner and diagnostics for two-ULA sparse arrays.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "elaa/sim_harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailures = 3;

// Writes to `path`, or to stdout when the path is empty or "-".
class Output {
public:
    explicit Output(const std::string& path)
    {
        if (path.empty() || path == "-")
            return;
        file_.open(path);
        if (!file_)
            throw elaa::ConfigError("--out", "cannot open '" + path + "' for writing");
    }

    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

struct RunArgs {
    std::string scenario;
    std::optional<int> trials;
    std::string snr;
    std::string algos;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string debug_out;
    bool full = false;
    bool include_failures = false;
    int threads = 1;
};

int cmd_run(const RunArgs& a)
{
    elaa::ScenarioSpec spec = elaa::resolve_scenario(a.scenario);
    if (a.full)
        spec.n_trials = 5000;
    if (a.trials)
        spec.n_trials = *a.trials;
    if (!a.snr.empty())
        spec.snr_grid_db = elaa::parse_snr_grid(a.snr, "--snr");
    if (!a.algos.empty())
        spec.algorithms = elaa::parse_algorithm_list(a.algos, "--algos");
    if (a.seed)
        spec.base_seed = *a.seed;
    if (a.threads < 1)
        throw elaa::ConfigError("--threads", "must be at least 1");
    spec.validate();

    elaa::RunOptions opts;
    opts.threads = a.threads;
    opts.rmse_include_failures = a.include_failures;
    opts.keep_trials = !a.debug_out.empty();
    const elaa::RunResult result = elaa::run_monte_carlo(spec, opts);

    Output out(a.out);
    elaa::write_metrics_csv(out.stream(), result.rows);
    if (!a.debug_out.empty()) {
        std::ofstream dbg(a.debug_out);
        if (!dbg)
            throw elaa::ConfigError("--debug-out", "cannot open '" + a.debug_out + "' for writing");
        elaa::write_trials_csv(dbg, result.trials);
    }
    for (const auto& row : result.rows)
        if (row.failure_rate > 0.5)
            std::fprintf(stderr, "elaa-doa: %s at %g dB failed in %.1f%% of trials\n",
                         std::string(elaa::to_string(row.algorithm)).c_str(), row.snr_db, 100.0 * row.failure_rate);
    return elaa::failure_threshold_exceeded(result.rows) ? kExitFailures : 0;
}

struct SpectrumArgs {
    std::string scenario;
    double snr = 30.0;
    std::uint64_t seed = 1;
    std::string out;
    std::string mode = "elaa";
};

int cmd_spectrum(const SpectrumArgs& a)
{
    const elaa::ScenarioSpec spec = elaa::resolve_scenario(a.scenario);
    elaa::MusicMode mode = elaa::MusicMode::Elaa;
    if (a.mode == "ula1")
        mode = elaa::MusicMode::Ula1;
    else if (a.mode == "ula2")
        mode = elaa::MusicMode::Ula2;
    else if (a.mode != "elaa")
        throw elaa::ConfigError("--mode", "expected elaa, ula1 or ula2");

    elaa::SnapshotOptions snap_opts;
    snap_opts.model = spec.model;
    snap_opts.regions = spec.regions;
    const double snr = spec.noiseless ? std::numeric_limits<double>::infinity() : a.snr;
    const elaa::Snapshot snap = elaa::make_snapshot(spec.array, spec.targets, snr, a.seed, snap_opts);
    const elaa::MusicEstimator music(spec.array,
                                     elaa::MusicOptions{spec.pencil, spec.grid_step_deg, spec.fusion, spec.refine});
    Output out(a.out);
    elaa::write_spectrum_csv(out.stream(), music.spectrum(snap.y, static_cast<int>(spec.targets.size()), mode));
    return 0;
}

struct ArrayFactorArgs {
    std::string scenario;
    std::string out;
    double step = 0.01;
    double limit = 90.0;
};

int cmd_array_factor(const ArrayFactorArgs& a)
{
    const elaa::ScenarioSpec spec = elaa::resolve_scenario(a.scenario);
    if (!(a.step > 0.0))
        throw elaa::ConfigError("--step", "must be positive");
    if (!(a.limit > 0.0) || a.limit > 90.0)
        throw elaa::ConfigError("--limit", "must lie in (0, 90]");
    const auto grid = elaa::angle_grid(a.step, -a.limit, a.limit);
    const auto full = elaa::array_factor_db(spec.array, grid, false);
    const auto sub = elaa::array_factor_db(spec.array, grid, true);
    Output out(a.out);
    out.stream() << "angle_deg,elaa_db,ula_db\n";
    char buf[96];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", elaa::rad2deg(grid[i]), full[i], sub[i]);
        out.stream() << buf;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Single-snapshot DOA estimation and localization for sparse two-ULA arrays"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Monte-Carlo sweep; writes one metrics row per (algorithm, SNR)");
    run_cmd->add_option("--scenario", run.scenario, "Builtin name or scenario file")->required();
    run_cmd->add_option("--trials", run.trials, "Trials per SNR point");
    run_cmd->add_option("--snr", run.snr, "SNR grid in dB, start:stop:step or a comma list");
    run_cmd->add_option("--algos", run.algos, "Comma list of algorithms");
    run_cmd->add_option("--seed", run.seed, "Base seed");
    run_cmd->add_option("--out", run.out, "Metrics CSV (default stdout)");
    run_cmd->add_option("--debug-out", run.debug_out, "Per-trial CSV");
    run_cmd->add_flag("--full", run.full, "5000 trials per point");
    run_cmd->add_flag("--rmse-include-failures", run.include_failures,
                      "Count failed trials in the RMSE as 90 degree (or full-range) errors");
    run_cmd->add_option("--threads", run.threads, "Worker threads; results do not depend on it");

    SpectrumArgs spec_args;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "MUSIC pseudospectrum of one snapshot");
    spectrum_cmd->add_option("--scenario", spec_args.scenario, "Builtin name or scenario file")->required();
    spectrum_cmd->add_option("--snr", spec_args.snr, "SNR in dB");
    spectrum_cmd->add_option("--seed", spec_args.seed, "Snapshot seed");
    spectrum_cmd->add_option("--out", spec_args.out, "Output CSV (default stdout)");
    spectrum_cmd->add_option("--mode", spec_args.mode, "elaa (fused), ula1 or ula2");

    ArrayFactorArgs af_args;
    auto* af_cmd = app.add_subcommand("array-factor", "Array factor of the ELAA and of one sub-ULA");
    af_cmd->add_option("--scenario", af_args.scenario, "Builtin name or scenario file")->required();
    af_cmd->add_option("--out", af_args.out, "Output CSV (default stdout)");
    af_cmd->add_option("--step", af_args.step, "Angle step in degrees");
    af_cmd->add_option("--limit", af_args.limit, "Half-width of the angle window in degrees");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*spectrum_cmd)
            return cmd_spectrum(spec_args);
        return cmd_array_factor(af_args);
    } catch (const elaa::ConfigError& e) {
        std::fprintf(stderr, "elaa-doa: config error: %s\n", e.what());
        return kExitConfig;
    } catch (const elaa::EstimationError& e) {
        std::fprintf(stderr, "elaa-doa: %s\n", e.what());
        return 1;
    }
}
