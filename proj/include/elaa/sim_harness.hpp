#ifndef ELAA_SIM_HARNESS_HPP
#define ELAA_SIM_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elaa/errors.hpp"
#include "elaa/geometry.hpp"
#include "elaa/signal_model.hpp"
#include "elaa/ss_esprit.hpp"
#include "elaa/ss_music.hpp"

namespace elaa {

enum class Algorithm { MusicElaa, MusicUla1, MusicUla2, Esprit, NfLocalize };

/// ss_music_elaa, ss_music_ula1, ss_music_ula2, ss_esprit, nf_localize
std::string_view to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// M = 16, d = lambda / 2, D_s = 150 lambda at 76 GHz.
ArrayConfig paper_array();

struct ScenarioSpec {
    std::string name = "scenario";
    ArrayConfig array = paper_array();
    std::vector<Target> targets;
    std::vector<double> snr_grid_db{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0};
    int n_trials = 500;
    std::vector<Algorithm> algorithms;
    FusionMode fusion = FusionMode::Product;
    double grid_step_deg = 0.01;
    int pencil = 0; // 0: floor(M / 2) for MUSIC, ceil(M / 3) for ESPRIT
    double hit_tolerance_deg = 0.5;
    double hit_tolerance_m = 0.1;
    std::uint64_t base_seed = 20250101;
    bool noiseless = false; // replaces the SNR grid by a single noise-free point
    std::optional<SteeringModel> model;
    std::optional<FieldRegions> regions;
    SubspaceMode subspace = SubspaceMode::Stacked;
    bool refine = true;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    int resolved_pencil() const; // MUSIC pencil
    std::vector<double> effective_snr_grid() const;
};

///
/// Parses the key = value scenario format (see docs/scenario_format.md).
/// Errors carry the line number and the dotted key.
///
ScenarioSpec parse_scenario(std::istream& in, const std::string& name = "scenario");
ScenarioSpec load_scenario_file(const std::string& path);

/// "start:stop:step" (inclusive) or a comma list; "inf" means noiseless.
/// `field` names the option in error messages.
std::vector<double> parse_snr_grid(const std::string& text, const std::string& field = "run.snr_db", int line = 0);
std::vector<Algorithm> parse_algorithm_list(const std::string& text, const std::string& field = "run.algorithms",
                                            int line = 0);

/// fig3_small_sep, fig3_large_sep, fig4_near_a, fig4_near_b.
std::map<std::string, ScenarioSpec> builtin_scenarios();

/// Builtin name first, then a file path.
ScenarioSpec resolve_scenario(const std::string& name_or_path);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

///
/// seed = base ^ splitmix64(splitmix64(fnv1a64(name) ^ snr_index) ^ trial)
/// where name is the algorithm's CSV name and snr_index the position in the
/// scenario's SNR grid as written.
///
std::uint64_t derive_seed(std::uint64_t base_seed, Algorithm algorithm, std::uint64_t snr_index,
                          std::uint64_t trial_index);

/// Absolute errors after matching estimates to truth by the permutation
/// with the smallest sum of squared errors; entry t belongs to truth[t].
/// Sizes must agree and be at most 8.
std::vector<double> matched_errors(std::span<const double> estimates, std::span<const double> truth);
std::vector<double> matched_errors(std::span<const Vec2> estimates, std::span<const Vec2> truth);

/// One trial's outcome for metric purposes: matched errors, or nothing when
/// the estimator failed.
using TrialErrors = std::optional<std::vector<double>>;

/// sqrt(sum e^2 / (K * successes)) over successful trials; nullopt when
/// none succeeded.
std::optional<double> rmse(std::span<const TrialErrors> trials);

/// Fraction of all trials whose every matched error is <= tolerance.
double hit_rate(std::span<const TrialErrors> trials, double tolerance);

/// Matched errors of one trial's estimates, or nullopt for a failed trial.
TrialErrors score_trial(const std::optional<std::vector<double>>& estimates, std::span<const double> truth);

struct TrialRecord {
    Algorithm algorithm = Algorithm::MusicElaa;
    double snr_db = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::optional<ErrorKind> error;
    std::vector<double> estimates_deg; // angle algorithms, ascending
    std::vector<Vec2> positions;       // nf_localize, in output order
    std::vector<double> residuals;
    std::vector<double> scores;
    std::vector<double> errors; // matched per truth target, degrees or meters
    bool hit = false;
    std::optional<bool> association_correct;
};

struct MetricsRow {
    Algorithm algorithm = Algorithm::MusicElaa;
    double snr_db = 0.0;
    int n_trials = 0;
    std::optional<double> rmse;
    double hit_rate = 0.0;
    double failure_rate = 0.0;
    std::string metric_unit; // deg or m
    std::optional<double> association_rate; // nf_localize only
};

struct RunOptions {
    int threads = 1;
    bool rmse_include_failures = false; // a failure counts as a 90 degree (or full-range) error
    bool keep_trials = false;
};

struct RunResult {
    std::vector<MetricsRow> rows; // sorted by (algorithm name, snr)
    std::vector<TrialRecord> trials; // same order, then trial index; only with keep_trials
};

///
/// Runs every (algorithm, SNR) point of the scenario. Results depend only on
/// the spec, never on the thread count.
///
RunResult run_monte_carlo(const ScenarioSpec& spec, const RunOptions& options = {});

/// Estimates one trial; exposed for tests and the debug tooling.
TrialRecord run_trial(const ScenarioSpec& spec, Algorithm algorithm, double snr_db, std::uint64_t seed);

/// Header: algorithm,snr_db,n_trials,rmse,hit_rate,failure_rate,metric_unit
void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows);

/// One row per (trial, target); failed trials get one row with the error kind.
void write_trials_csv(std::ostream& os, std::span<const TrialRecord> trials);

/// True when any row has failure_rate > 0.5.
bool failure_threshold_exceeded(std::span<const MetricsRow> rows);

} // namespace elaa

#endif
