#include "elaa/signal_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include "elaa/errors.hpp"

namespace elaa {

namespace {

using cd = std::complex<double>;

cd unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

double uniform01(std::mt19937_64& gen)
{
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

} // namespace

std::string_view to_string(SteeringModel model)
{
    switch (model) {
    case SteeringModel::Exact: return "exact";
    case SteeringModel::FarField: return "far_field";
    case SteeringModel::NearFieldLocalPlanar: return "near_field";
    case SteeringModel::NearFieldSharedDoa: return "near_field_shared";
    }
    return "unknown";
}

std::optional<SteeringModel> parse_steering_model(std::string_view name)
{
    for (auto m : {SteeringModel::Exact, SteeringModel::FarField, SteeringModel::NearFieldLocalPlanar,
                   SteeringModel::NearFieldSharedDoa})
        if (to_string(m) == name)
            return m;
    return std::nullopt;
}

SteeringVector steering_exact(const ArrayConfig& cfg, const Target& target)
{
    if (!(target.range > 0.0))
        throw EstimationError(ErrorKind::InvalidArgument, "target range must be positive");
    const auto x = element_positions(cfg);
    const Vec2 p = target.position();
    const double k = cfg.wavenumber();
    CVector a(cfg.total_elements());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double dist = std::hypot(p.x() - x[static_cast<std::size_t>(i)], p.y());
        if (dist <= 1e-12 * std::max(1.0, target.range))
            throw EstimationError(ErrorKind::CoincidentTarget, "target coincides with an element");
        a(i) = unit_phasor(-k * dist);
    }
    return {std::move(a), SteeringModel::Exact};
}

SteeringVector steering_farfield(const ArrayConfig& cfg, double theta)
{
    const auto x = element_positions(cfg);
    const double ku = cfg.wavenumber() * std::sin(theta);
    CVector a(cfg.total_elements());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        a(i) = unit_phasor(ku * x[static_cast<std::size_t>(i)]);
    return {std::move(a), SteeringModel::FarField};
}

SteeringVector steering_nearfield(const ArrayConfig& cfg, const Target& target, bool shared_doa)
{
    const auto views = local_geometry(cfg, target);
    const int m_count = cfg.elements_per_ula();
    const double k = cfg.wavenumber();
    const double d = cfg.spacing();
    CVector a(cfg.total_elements());
    for (int n = 0; n < 2; ++n) {
        const auto& v = views[static_cast<std::size_t>(n)];
        const double u = std::sin(shared_doa ? target.theta : v.theta);
        for (int m = 0; m < m_count; ++m)
            a(n * m_count + m) = unit_phasor(-k * v.range + k * m * d * u);
    }
    return {std::move(a), shared_doa ? SteeringModel::NearFieldSharedDoa : SteeringModel::NearFieldLocalPlanar};
}

SteeringModel select_model(const FieldRegions& regions, double range)
{
    if (range >= regions.fraunhofer)
        return SteeringModel::FarField;
    if (range >= regions.simplified)
        return SteeringModel::NearFieldSharedDoa;
    if (range >= regions.local_far_field)
        return SteeringModel::NearFieldLocalPlanar;
    return SteeringModel::Exact;
}

SteeringVector steering(const ArrayConfig& cfg, const Target& target, SteeringModel model)
{
    switch (model) {
    case SteeringModel::Exact: return steering_exact(cfg, target);
    case SteeringModel::FarField: return steering_farfield(cfg, target.theta);
    case SteeringModel::NearFieldLocalPlanar: return steering_nearfield(cfg, target, false);
    case SteeringModel::NearFieldSharedDoa: return steering_nearfield(cfg, target, true);
    }
    throw EstimationError(ErrorKind::InvalidArgument, "unknown steering model");
}

double noise_variance(double snr_db)
{
    if (std::isinf(snr_db) && snr_db > 0)
        return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

Snapshot make_snapshot(const ArrayConfig& cfg, std::span<const Target> targets, double snr_db,
                       std::uint64_t seed, const SnapshotOptions& options)
{
    std::mt19937_64 gen(seed);
    const FieldRegions regions = options.regions.value_or(field_regions(cfg));

    Snapshot snap;
    snap.snr_db = snr_db;
    snap.seed = seed;
    snap.truth.assign(targets.begin(), targets.end());
    snap.y = CVector::Zero(cfg.total_elements());

    for (const Target& t : targets) {
        cd s = t.amplitude;
        if (options.random_phase)
            s *= unit_phasor(2.0 * kPi * uniform01(gen));
        const SteeringModel model = options.model.value_or(select_model(regions, t.range));
        snap.y += s * steering(cfg, t, model).entries;
    }

    const double var = noise_variance(snr_db);
    if (var > 0.0) {
        const double scale = std::sqrt(var / 2.0);
        for (Eigen::Index i = 0; i < snap.y.size(); ++i) {
            const double u1 = uniform01(gen);
            const double u2 = uniform01(gen);
            const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
            snap.y(i) += scale * radius * unit_phasor(2.0 * kPi * u2);
        }
    }
    return snap;
}

std::vector<double> array_factor_db(const ArrayConfig& cfg, std::span<const double> theta_grid, bool sub_ula)
{
    auto x = element_positions(cfg);
    if (sub_ula)
        x.resize(static_cast<std::size_t>(cfg.elements_per_ula()));
    const double k = cfg.wavenumber();
    const double norm = static_cast<double>(x.size());
    std::vector<double> out;
    out.reserve(theta_grid.size());
    for (double theta : theta_grid) {
        const double ku = k * std::sin(theta);
        cd sum = 0.0;
        for (double xi : x)
            sum += unit_phasor(ku * xi);
        const double mag = std::abs(sum) / norm;
        out.push_back(20.0 * std::log10(std::max(mag, std::numeric_limits<double>::min())));
    }
    return out;
}

namespace {

void write_f64_le(std::ostream& os, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i)
        buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

bool read_f64_le(std::istream& is, double& v)
{
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8))
        return false;
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
    return true;
}

} // namespace

void write_snapshot_binary(std::ostream& os, const CVector& y)
{
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        write_f64_le(os, y(i).real());
        write_f64_le(os, y(i).imag());
    }
}

CVector read_snapshot_binary(std::istream& is)
{
    std::vector<cd> values;
    double re = 0.0;
    double im = 0.0;
    while (read_f64_le(is, re)) {
        if (!read_f64_le(is, im))
            throw EstimationError(ErrorKind::InvalidArgument, "truncated snapshot stream");
        values.emplace_back(re, im);
    }
    CVector y(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = values[i];
    return y;
}

} // namespace elaa
