#include "elaa/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "elaa/nf_localizer.hpp"

namespace elaa {

namespace {

constexpr Algorithm kAllAlgorithms[] = {Algorithm::MusicElaa, Algorithm::MusicUla1, Algorithm::MusicUla2,
                                        Algorithm::Esprit, Algorithm::NfLocalize};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

struct Entry {
    std::string value;
    int line;
};

class Fields {
public:
    explicit Fields(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    int line(const std::string& key) const
    {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    const std::string& raw(const std::string& key)
    {
        used_.insert(key);
        return entries_.at(key).value;
    }

    double number(const std::string& key)
    {
        return parse_number(raw(key), key, line(key));
    }

    std::optional<double> number_opt(const std::string& key)
    {
        if (!has(key))
            return std::nullopt;
        return number(key);
    }

    long long integer(const std::string& key)
    {
        const std::string& v = raw(key);
        long long out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size())
            throw ConfigError(key, "expected an integer, got '" + v + "'", line(key));
        return out;
    }

    bool boolean(const std::string& key)
    {
        const std::string& v = raw(key);
        if (v == "true" || v == "yes" || v == "1")
            return true;
        if (v == "false" || v == "no" || v == "0")
            return false;
        throw ConfigError(key, "expected true or false, got '" + v + "'", line(key));
    }

    std::vector<std::string> unused() const
    {
        std::vector<std::string> out;
        for (const auto& [k, e] : entries_)
            if (!used_.count(k))
                out.push_back(k);
        return out;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }

    static double parse_number(const std::string& v, const std::string& key, int line)
    {
        if (v == "inf" || v == "+inf")
            return std::numeric_limits<double>::infinity();
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
            throw ConfigError(key, "expected a number, got '" + v + "'", line);
        return out;
    }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

std::vector<double> parse_snr_list_impl(const std::string& value, const std::string& key, int line)
{
    std::vector<double> out;
    if (value.find(':') != std::string::npos) {
        const auto parts = split(value, ':');
        if (parts.size() != 3)
            throw ConfigError(key, "range must be start:stop:step", line);
        const double a = Fields::parse_number(parts[0], key, line);
        const double b = Fields::parse_number(parts[1], key, line);
        const double step = Fields::parse_number(parts[2], key, line);
        if (!(step > 0.0) || b < a)
            throw ConfigError(key, "range needs step > 0 and stop >= start", line);
        const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
        for (long long i = 0; i <= n; ++i)
            out.push_back(a + static_cast<double>(i) * step);
        return out;
    }
    for (const auto& part : split(value, ','))
        out.push_back(Fields::parse_number(part, key, line));
    return out;
}

std::vector<Algorithm> parse_algorithm_list_impl(const std::string& value, const std::string& key, int line)
{
    std::vector<Algorithm> out;
    for (const auto& part : split(value, ',')) {
        const auto a = parse_algorithm(part);
        if (!a)
            throw ConfigError(key, "unknown algorithm '" + part + "'", line);
        if (std::find(out.begin(), out.end(), *a) == out.end())
            out.push_back(*a);
    }
    return out;
}

std::vector<Target> paper_pair(double range, double angle_deg)
{
    return {Target{range, deg2rad(-angle_deg)}, Target{range, deg2rad(angle_deg)}};
}

bool is_angle_algorithm(Algorithm a)
{
    return a != Algorithm::NfLocalize;
}

// Exhaustive search for the permutation minimizing the summed cost.
template <typename Cost>
std::vector<std::size_t> best_permutation(std::size_t k, Cost cost)
{
    if (k > 8)
        throw EstimationError(ErrorKind::InvalidArgument, "permutation matching limited to 8 targets");
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t t = 0; t < k; ++t)
            c += cost(t, perm[t]);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

struct Context {
    const ScenarioSpec& spec;
    MusicEstimator music;
    EspritOptions esprit;
    SnapshotOptions snapshot;
    std::vector<double> truth_deg;
    std::vector<Vec2> truth_pos;
    std::array<std::vector<double>, 2> truth_local; // local angles per ULA, per target

    explicit Context(const ScenarioSpec& s)
        : spec(s), music(s.array, MusicOptions{s.pencil, s.grid_step_deg, s.fusion, s.refine})
    {
        esprit.pencil = s.pencil;
        esprit.subspace = s.subspace;
        snapshot.model = s.model;
        snapshot.regions = s.regions;
        for (const auto& t : s.targets) {
            truth_deg.push_back(rad2deg(t.theta));
            truth_pos.push_back(t.position());
        }
        if (std::find(s.algorithms.begin(), s.algorithms.end(), Algorithm::NfLocalize) != s.algorithms.end()) {
            for (const auto& t : s.targets) {
                const auto views = local_geometry(s.array, t);
                truth_local[0].push_back(views[0].theta);
                truth_local[1].push_back(views[1].theta);
            }
        }
    }
};

// Truth index of each local estimate, by permutation matching within one ULA.
std::vector<std::size_t> label_local(std::span<const double> estimates, std::span<const double> truth)
{
    const auto perm = best_permutation(truth.size(), [&](std::size_t t, std::size_t e) {
        const double d = estimates[e] - truth[t];
        return d * d;
    });
    std::vector<std::size_t> label(estimates.size());
    for (std::size_t t = 0; t < perm.size(); ++t)
        label[perm[t]] = t;
    return label;
}

TrialRecord run_trial_in(const Context& ctx, Algorithm algorithm, double snr_db, std::uint64_t seed)
{
    const ScenarioSpec& spec = ctx.spec;
    const int k = static_cast<int>(spec.targets.size());
    TrialRecord rec;
    rec.algorithm = algorithm;
    rec.snr_db = snr_db;
    rec.seed = seed;

    const Snapshot snap = make_snapshot(spec.array, spec.targets, snr_db, seed, ctx.snapshot);
    try {
        if (algorithm == Algorithm::NfLocalize) {
            const Localization loc = localize(ctx.music, snap.y, spec.array, k);
            const auto label1 = label_local(loc.doas.ula1, ctx.truth_local[0]);
            const auto label2 = label_local(loc.doas.ula2, ctx.truth_local[1]);
            bool assoc = true;
            for (const auto& t : loc.targets) {
                rec.positions.push_back(t.position);
                rec.residuals.push_back(t.residual);
                rec.scores.push_back(t.score);
                assoc = assoc && label1[static_cast<std::size_t>(t.ula1_index)] ==
                                     label2[static_cast<std::size_t>(t.ula2_index)];
                if (t.error && !rec.error)
                    rec.error = t.error;
            }
            rec.association_correct = assoc;
            if (!rec.error)
                rec.errors = matched_errors(rec.positions, ctx.truth_pos);
        } else {
            std::vector<double> est;
            switch (algorithm) {
            case Algorithm::MusicElaa: est = ctx.music.estimate(snap.y, k, MusicMode::Elaa); break;
            case Algorithm::MusicUla1: est = ctx.music.estimate(snap.y, k, MusicMode::Ula1); break;
            case Algorithm::MusicUla2: est = ctx.music.estimate(snap.y, k, MusicMode::Ula2); break;
            case Algorithm::Esprit: est = estimate_doa_esprit(snap.y, spec.array, k, ctx.esprit).angles; break;
            case Algorithm::NfLocalize: break;
            }
            for (double a : est)
                rec.estimates_deg.push_back(rad2deg(a));
            std::sort(rec.estimates_deg.begin(), rec.estimates_deg.end());
            rec.errors = matched_errors(rec.estimates_deg, ctx.truth_deg);
        }
    } catch (const EstimationError& e) {
        rec.error = e.kind();
        if (algorithm == Algorithm::NfLocalize && !rec.association_correct)
            rec.association_correct = false;
    }
    if (rec.error)
        rec.errors.clear();

    const double tol = is_angle_algorithm(algorithm) ? spec.hit_tolerance_deg : spec.hit_tolerance_m;
    rec.hit = !rec.error && std::all_of(rec.errors.begin(), rec.errors.end(), [&](double e) { return e <= tol; });
    return rec;
}

std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::string_view to_string(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::MusicElaa: return "ss_music_elaa";
    case Algorithm::MusicUla1: return "ss_music_ula1";
    case Algorithm::MusicUla2: return "ss_music_ula2";
    case Algorithm::Esprit: return "ss_esprit";
    case Algorithm::NfLocalize: return "nf_localize";
    }
    return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name)
{
    for (Algorithm a : kAllAlgorithms)
        if (to_string(a) == name)
            return a;
    return std::nullopt;
}

std::vector<double> parse_snr_grid(const std::string& text, const std::string& field, int line)
{
    return parse_snr_list_impl(trim(text), field, line);
}

std::vector<Algorithm> parse_algorithm_list(const std::string& text, const std::string& field, int line)
{
    return parse_algorithm_list_impl(text, field, line);
}

ArrayConfig paper_array()
{
    return ArrayConfig::in_wavelengths(16, 76e9, 0.5, 150.0);
}

int ScenarioSpec::resolved_pencil() const
{
    return pencil > 0 ? pencil : default_pencil(array.elements_per_ula());
}

std::vector<double> ScenarioSpec::effective_snr_grid() const
{
    if (noiseless)
        return {std::numeric_limits<double>::infinity()};
    return snr_grid_db;
}

void ScenarioSpec::validate() const
{
    if (targets.empty())
        throw ConfigError("target", "at least one target is required");
    if (algorithms.empty())
        throw ConfigError("run.algorithms", "no algorithm selected");
    if (n_trials < 1)
        throw ConfigError("run.trials", "must be at least 1");
    if (!noiseless && snr_grid_db.empty())
        throw ConfigError("run.snr_db", "SNR grid is empty");
    for (double s : snr_grid_db)
        if (std::isnan(s))
            throw ConfigError("run.snr_db", "SNR must be a number");
    if (!(hit_tolerance_deg > 0.0))
        throw ConfigError("run.hit_tolerance_deg", "must be positive");
    if (!(hit_tolerance_m > 0.0))
        throw ConfigError("run.hit_tolerance_m", "must be positive");
    if (!(grid_step_deg > 0.0) || grid_step_deg > 1.0)
        throw ConfigError("run.grid_step_deg", "must lie in (0, 1]");
    if (targets.size() > 3)
        throw ConfigError("target", "at most 3 targets are supported");
    for (const auto& t : targets)
        if (!(t.range > 0.0) || std::abs(t.theta) >= kPi / 2)
            throw ConfigError("target", "targets need range > 0 and |angle| < 90 degrees");

    const int m = array.elements_per_ula();
    const int l = resolved_pencil();
    const int k = static_cast<int>(targets.size());
    if (l < 1 || l >= m)
        throw ConfigError("run.pencil", "pencil must satisfy 1 <= L < M");
    if (k >= std::min(l + 1, m - l))
        throw ConfigError("run.pencil", "pencil leaves no noise subspace for " + std::to_string(k) + " targets");
    const bool esprit = std::find(algorithms.begin(), algorithms.end(), Algorithm::Esprit) != algorithms.end();
    const int l_esprit = pencil > 0 ? pencil : esprit_default_pencil(m);
    if (esprit && (l_esprit < k + 1 || l_esprit >= m))
        throw ConfigError("run.pencil", "ss_esprit needs K + 1 <= L < M");
    if (regions && (!(regions->fraunhofer > 0.0) || !(regions->local_far_field > 0.0) ||
                    !(regions->simplified > 0.0)))
        throw ConfigError("regions", "region thresholds must be positive");
}

ScenarioSpec parse_scenario(std::istream& in, const std::string& name)
{
    std::map<std::string, Entry> entries;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string text = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (text.empty())
            continue;
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3)
                throw ConfigError("", "malformed section header '" + text + "'", line_no);
            section = trim(std::string_view(text).substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "expected 'key = value'", line_no);
        std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty())
            throw ConfigError("", "missing key", line_no);
        if (!section.empty())
            key = section + "." + key;
        if (value.empty())
            throw ConfigError(key, "missing value", line_no);
        if (entries.count(key))
            throw ConfigError(key, "duplicate key (first set on line " + std::to_string(entries[key].line) + ")",
                              line_no);
        entries.emplace(key, Entry{value, line_no});
    }

    Fields f(std::move(entries));
    ScenarioSpec spec;
    spec.name = f.has("name") ? f.raw("name") : name;

    // Array.
    {
        const int elements = f.has("array.elements") ? static_cast<int>(f.integer("array.elements")) : 16;
        if (f.has("array.carrier_hz") && f.has("array.wavelength_m"))
            throw ConfigError("array.wavelength_m", "give either carrier_hz or wavelength_m",
                              f.line("array.wavelength_m"));
        double wavelength = kSpeedOfLight / 76e9;
        std::string wl_key = "array.carrier_hz";
        if (f.has("array.carrier_hz")) {
            const double fc = f.number("array.carrier_hz");
            if (!(fc > 0.0))
                throw ConfigError(wl_key, "must be positive", f.line(wl_key));
            wavelength = kSpeedOfLight / fc;
        } else if (f.has("array.wavelength_m")) {
            wl_key = "array.wavelength_m";
            wavelength = f.number(wl_key);
        }
        auto length = [&](const std::string& wl, const std::string& m, double def_wl) {
            if (f.has(wl) && f.has(m))
                throw ConfigError(m, "give either " + wl + " or " + m, f.line(m));
            if (f.has(m))
                return std::pair{f.number(m), m};
            return std::pair{(f.has(wl) ? f.number(wl) : def_wl) * wavelength, wl};
        };
        const auto [spacing, spacing_key] = length("array.spacing_wavelengths", "array.spacing_m", 0.5);
        const auto [gap, gap_key] = length("array.gap_wavelengths", "array.gap_m", 150.0);
        try {
            spec.array = ArrayConfig::from_wavelength(elements, wavelength, spacing, gap);
        } catch (const ConfigError& e) {
            const std::string field = e.field() == "array.spacing_m" ? spacing_key
                                      : e.field() == "array.gap_m"     ? gap_key
                                      : e.field() == "array.elements"  ? e.field()
                                                                       : wl_key;
            throw ConfigError(field, e.message(), f.line(field));
        }
    }

    // Targets: target.<id>.range_m + angle_deg, or x_m + y_m.
    std::set<std::string> ids;
    for (const auto& [key, entry] : f.entries()) {
        if (key.rfind("target.", 0) != 0)
            continue;
        const auto dot = key.find('.', 7);
        if (dot == std::string::npos)
            throw ConfigError(key, "expected target.<id>.<field>", entry.line);
        ids.insert(key.substr(7, dot - 7));
    }
    for (const auto& id : ids) {
        const std::string p = "target." + id + ".";
        const bool polar = f.has(p + "range_m") || f.has(p + "angle_deg");
        const bool cart = f.has(p + "x_m") || f.has(p + "y_m");
        if (polar == cart)
            throw ConfigError(p.substr(0, p.size() - 1), "give range_m and angle_deg, or x_m and y_m",
                              f.line(p + (polar ? "x_m" : "range_m")));
        const std::string k1 = p + (polar ? "range_m" : "x_m");
        const std::string k2 = p + (polar ? "angle_deg" : "y_m");
        if (!f.has(k1) || !f.has(k2))
            throw ConfigError(f.has(k1) ? k2 : k1, "missing", f.line(f.has(k1) ? k1 : k2));
        const double a = f.number(k1);
        const double b = f.number(k2);
        Target t = polar ? Target{a, deg2rad(b)} : Target::from_position(Vec2(a, b));
        if (!(t.range > 0.0) || std::abs(t.theta) >= kPi / 2)
            throw ConfigError(k1, "target must lie in front of the array", f.line(k1));
        spec.targets.push_back(t);
    }

    if (f.has("run.snr_db"))
        spec.snr_grid_db = parse_snr_list_impl(f.raw("run.snr_db"), "run.snr_db", f.line("run.snr_db"));
    if (f.has("run.trials"))
        spec.n_trials = static_cast<int>(f.integer("run.trials"));
    if (f.has("run.algorithms"))
        spec.algorithms =
            parse_algorithm_list_impl(f.raw("run.algorithms"), "run.algorithms", f.line("run.algorithms"));
    else
        spec.algorithms = {Algorithm::MusicElaa, Algorithm::MusicUla1, Algorithm::MusicUla2, Algorithm::Esprit};
    if (f.has("run.fusion")) {
        const auto m = parse_fusion_mode(f.raw("run.fusion"));
        if (!m)
            throw ConfigError("run.fusion", "expected product or max", f.line("run.fusion"));
        spec.fusion = *m;
    }
    if (f.has("run.grid_step_deg"))
        spec.grid_step_deg = f.number("run.grid_step_deg");
    if (f.has("run.pencil"))
        spec.pencil = static_cast<int>(f.integer("run.pencil"));
    if (f.has("run.hit_tolerance_deg"))
        spec.hit_tolerance_deg = f.number("run.hit_tolerance_deg");
    if (f.has("run.hit_tolerance_m"))
        spec.hit_tolerance_m = f.number("run.hit_tolerance_m");
    if (f.has("run.seed")) {
        const std::string& v = f.raw("run.seed");
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
        if (ec != std::errc() || ptr != v.data() + v.size())
            throw ConfigError("run.seed", "expected an unsigned integer, got '" + v + "'", f.line("run.seed"));
        spec.base_seed = seed;
    }
    if (f.has("run.noiseless"))
        spec.noiseless = f.boolean("run.noiseless");
    if (f.has("run.refine"))
        spec.refine = f.boolean("run.refine");
    if (f.has("run.model")) {
        const std::string& v = f.raw("run.model");
        if (v != "auto") {
            const auto m = parse_steering_model(v);
            if (!m)
                throw ConfigError("run.model", "unknown steering model '" + v + "'", f.line("run.model"));
            spec.model = *m;
        }
    }
    if (f.has("run.subspace")) {
        const std::string& v = f.raw("run.subspace");
        if (v == "stacked")
            spec.subspace = SubspaceMode::Stacked;
        else if (v == "per_ula")
            spec.subspace = SubspaceMode::PerUlaConcat;
        else
            throw ConfigError("run.subspace", "expected stacked or per_ula", f.line("run.subspace"));
    }
    if (f.has("regions.fraunhofer_m") || f.has("regions.local_far_field_m") || f.has("regions.simplified_m")) {
        FieldRegions r = field_regions(spec.array);
        if (auto v = f.number_opt("regions.fraunhofer_m"))
            r.fraunhofer = *v;
        if (auto v = f.number_opt("regions.local_far_field_m"))
            r.local_far_field = *v;
        if (auto v = f.number_opt("regions.simplified_m"))
            r.simplified = *v;
        spec.regions = r;
    }

    for (const auto& key : f.unused())
        throw ConfigError(key, "unknown key", f.line(key));

    try {
        spec.validate();
    } catch (const ConfigError& e) {
        if (e.line() == 0 && f.has(e.field()))
            throw ConfigError(e.field(), e.message(), f.line(e.field()));
        throw;
    }
    return spec;
}

ScenarioSpec load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("scenario", "cannot open '" + path + "'");
    std::string stem = path;
    if (const auto slash = stem.find_last_of('/'); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos && dot > 0)
        stem = stem.substr(0, dot);
    return parse_scenario(in, stem);
}

std::map<std::string, ScenarioSpec> builtin_scenarios()
{
    std::map<std::string, ScenarioSpec> out;
    const std::vector<Algorithm> far{Algorithm::MusicElaa, Algorithm::MusicUla1, Algorithm::MusicUla2,
                                     Algorithm::Esprit};

    ScenarioSpec small;
    small.name = "fig3_small_sep";
    small.targets = paper_pair(250.0, 0.2);
    small.algorithms = far;
    out.emplace(small.name, small);

    ScenarioSpec large = small;
    large.name = "fig3_large_sep";
    large.targets = paper_pair(250.0, 5.0);
    out.emplace(large.name, large);

    ScenarioSpec near_a;
    near_a.name = "fig4_near_a";
    near_a.targets = paper_pair(5.0, 10.0);
    near_a.algorithms = {Algorithm::NfLocalize};
    near_a.snr_grid_db = {30.0};
    out.emplace(near_a.name, near_a);

    ScenarioSpec near_b = near_a;
    near_b.name = "fig4_near_b";
    near_b.targets = {Target::from_position(Vec2(0.0, 4.0)), Target::from_position(Vec2(0.0, 6.0))};
    out.emplace(near_b.name, near_b);

    return out;
}

ScenarioSpec resolve_scenario(const std::string& name_or_path)
{
    auto builtins = builtin_scenarios();
    if (const auto it = builtins.find(name_or_path); it != builtins.end())
        return it->second;
    return load_scenario_file(name_or_path);
}

std::uint64_t splitmix64(std::uint64_t x)
{
    std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base_seed, Algorithm algorithm, std::uint64_t snr_index,
                          std::uint64_t trial_index)
{
    const std::uint64_t h = splitmix64(splitmix64(fnv1a64(to_string(algorithm)) ^ snr_index) ^ trial_index);
    return base_seed ^ h;
}

std::vector<double> matched_errors(std::span<const double> estimates, std::span<const double> truth)
{
    if (estimates.size() != truth.size())
        throw EstimationError(ErrorKind::InvalidArgument, "estimate and truth counts differ");
    const auto perm = best_permutation(truth.size(), [&](std::size_t t, std::size_t e) {
        const double d = estimates[e] - truth[t];
        return d * d;
    });
    std::vector<double> out(truth.size());
    for (std::size_t t = 0; t < truth.size(); ++t)
        out[t] = std::abs(estimates[perm[t]] - truth[t]);
    return out;
}

std::vector<double> matched_errors(std::span<const Vec2> estimates, std::span<const Vec2> truth)
{
    if (estimates.size() != truth.size())
        throw EstimationError(ErrorKind::InvalidArgument, "estimate and truth counts differ");
    const auto perm = best_permutation(
        truth.size(), [&](std::size_t t, std::size_t e) { return (estimates[e] - truth[t]).squaredNorm(); });
    std::vector<double> out(truth.size());
    for (std::size_t t = 0; t < truth.size(); ++t)
        out[t] = (estimates[perm[t]] - truth[t]).norm();
    return out;
}

std::optional<double> rmse(std::span<const TrialErrors> trials)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : trials) {
        if (!t)
            continue;
        for (double e : *t)
            sum += e * e;
        count += t->size();
    }
    if (count == 0)
        return std::nullopt;
    return std::sqrt(sum / static_cast<double>(count));
}

double hit_rate(std::span<const TrialErrors> trials, double tolerance)
{
    if (trials.empty())
        return 0.0;
    std::size_t hits = 0;
    for (const auto& t : trials)
        if (t && std::all_of(t->begin(), t->end(), [&](double e) { return e <= tolerance; }))
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(trials.size());
}

TrialErrors score_trial(const std::optional<std::vector<double>>& estimates, std::span<const double> truth)
{
    if (!estimates)
        return std::nullopt;
    return matched_errors(*estimates, truth);
}

TrialRecord run_trial(const ScenarioSpec& spec, Algorithm algorithm, double snr_db, std::uint64_t seed)
{
    spec.validate();
    const Context ctx(spec);
    return run_trial_in(ctx, algorithm, snr_db, seed);
}

RunResult run_monte_carlo(const ScenarioSpec& spec, const RunOptions& options)
{
    spec.validate();
    const Context ctx(spec);
    const std::vector<double> snrs = spec.effective_snr_grid();

    std::vector<Algorithm> algos = spec.algorithms;
    std::sort(algos.begin(), algos.end(), [](Algorithm a, Algorithm b) { return to_string(a) < to_string(b); });

    struct Point {
        Algorithm algorithm;
        std::size_t snr_index;
    };
    // The seed uses the position in the grid as given; rows follow SNR order.
    std::vector<std::size_t> snr_order(snrs.size());
    std::iota(snr_order.begin(), snr_order.end(), std::size_t{0});
    std::stable_sort(snr_order.begin(), snr_order.end(),
                     [&](std::size_t a, std::size_t b) { return snrs[a] < snrs[b]; });
    std::vector<Point> points;
    for (Algorithm a : algos)
        for (std::size_t i : snr_order)
            points.push_back({a, i});

    const std::size_t per_point = static_cast<std::size_t>(spec.n_trials);
    const std::size_t total = points.size() * per_point;
    std::vector<TrialRecord> records(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t w = next++; w < total; w = next++) {
            const Point& p = points[w / per_point];
            const auto trial = static_cast<int>(w % per_point);
            const std::uint64_t seed =
                derive_seed(spec.base_seed, p.algorithm, p.snr_index, static_cast<std::uint64_t>(trial));
            records[w] = run_trial_in(ctx, p.algorithm, snrs[p.snr_index], seed);
            records[w].trial = trial;
        }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    RunResult out;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const Point& p = points[pi];
        const bool angles = is_angle_algorithm(p.algorithm);
        std::vector<TrialErrors> errs;
        std::size_t failures = 0;
        std::size_t assoc = 0;
        for (std::size_t t = 0; t < per_point; ++t) {
            const TrialRecord& r = records[pi * per_point + t];
            if (r.error) {
                ++failures;
                if (options.rmse_include_failures) {
                    std::vector<double> worst;
                    for (const auto& tg : spec.targets)
                        worst.push_back(angles ? 90.0 : tg.range);
                    errs.emplace_back(std::move(worst));
                } else {
                    errs.emplace_back(std::nullopt);
                }
            } else {
                errs.emplace_back(r.errors);
            }
            if (r.association_correct.value_or(false))
                ++assoc;
        }
        MetricsRow row;
        row.algorithm = p.algorithm;
        row.snr_db = snrs[p.snr_index];
        row.n_trials = spec.n_trials;
        row.rmse = rmse(errs);
        std::size_t hits = 0;
        for (std::size_t t = 0; t < per_point; ++t)
            hits += records[pi * per_point + t].hit ? 1 : 0;
        row.hit_rate = static_cast<double>(hits) / static_cast<double>(per_point);
        row.failure_rate = static_cast<double>(failures) / static_cast<double>(per_point);
        row.metric_unit = angles ? "deg" : "m";
        if (!angles)
            row.association_rate = static_cast<double>(assoc) / static_cast<double>(per_point);
        out.rows.push_back(row);
    }
    if (options.keep_trials)
        out.trials = std::move(records);
    return out;
}

void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows)
{
    os << "algorithm,snr_db,n_trials,rmse,hit_rate,failure_rate,metric_unit\n";
    for (const auto& r : rows) {
        os << to_string(r.algorithm) << ',' << format_number(r.snr_db) << ',' << r.n_trials << ','
           << (r.rmse ? format_number(*r.rmse) : std::string()) << ',' << format_number(r.hit_rate) << ','
           << format_number(r.failure_rate) << ',' << r.metric_unit << '\n';
    }
}

void write_trials_csv(std::ostream& os, std::span<const TrialRecord> trials)
{
    os << "algorithm,snr_db,trial,seed,status,target_id,estimate_deg,x_hat,y_hat,residual,score,error,"
          "association_ok\n";
    for (const auto& r : trials) {
        const std::string prefix = std::string(to_string(r.algorithm)) + ',' + format_number(r.snr_db) + ',' +
                                   std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',';
        const std::string assoc =
            r.association_correct ? (*r.association_correct ? "1" : "0") : std::string();
        if (r.error) {
            os << prefix << to_string(*r.error) << ",,,,,,,," << assoc << '\n';
            continue;
        }
        const std::size_t n = std::max(r.estimates_deg.size(), r.positions.size());
        for (std::size_t i = 0; i < n; ++i) {
            os << prefix << "ok," << i << ',';
            if (i < r.estimates_deg.size())
                os << format_number(r.estimates_deg[i]);
            os << ',';
            if (i < r.positions.size())
                os << format_number(r.positions[i].x()) << ',' << format_number(r.positions[i].y()) << ','
                   << format_number(r.residuals[i]) << ',' << format_number(r.scores[i]);
            else
                os << ",,,";
            os << ',' << (i < r.errors.size() ? format_number(r.errors[i]) : std::string()) << ',' << assoc
               << '\n';
        }
    }
}

bool failure_threshold_exceeded(std::span<const MetricsRow> rows)
{
    return std::any_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.failure_rate > 0.5; });
}

} // namespace elaa
