#ifndef ELAA_SIGNAL_MODEL_HPP
#define ELAA_SIGNAL_MODEL_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "elaa/geometry.hpp"

namespace elaa {

using CVector = Eigen::VectorXcd;

enum class SteeringModel {
    Exact,                // spherical wavefront over every element
    FarField,             // planar over the whole ELAA, common range phase dropped
    NearFieldLocalPlanar, // planar per ULA, local DOA per ULA
    NearFieldSharedDoa,   // planar per ULA, both ULAs see the global DOA
};

std::string_view to_string(SteeringModel model);
std::optional<SteeringModel> parse_steering_model(std::string_view name);

struct SteeringVector {
    CVector entries;
    SteeringModel model;
};

SteeringVector steering_exact(const ArrayConfig& cfg, const Target& target);
SteeringVector steering_farfield(const ArrayConfig& cfg, double theta);
/// Per-ULA planar model. The local-planar assumption is only meaningful for
/// ranges beyond FieldRegions::local_far_field; it is not enforced here.
SteeringVector steering_nearfield(const ArrayConfig& cfg, const Target& target, bool shared_doa);

/// Model implied by the target range: far field beyond the Fraunhofer
/// distance, then the shared-DOA band, then the local-planar band, exact
/// spherical steering below the per-ULA far-field distance.
SteeringModel select_model(const FieldRegions& regions, double range);

SteeringVector steering(const ArrayConfig& cfg, const Target& target, SteeringModel model);

struct SnapshotOptions {
    std::optional<SteeringModel> model;   // overrides select_model()
    std::optional<FieldRegions> regions;  // overrides field_regions(cfg)
    bool random_phase = true;             // multiply each amplitude by e^{j phi}, phi ~ U[0, 2pi)
};

struct Snapshot {
    CVector y;
    double snr_db = 0.0; // +inf means noiseless
    std::uint64_t seed = 0;
    std::vector<Target> truth;
};

/// Noise variance per element for a unit-power source at `snr_db`.
double noise_variance(double snr_db);

///
/// Single snapshot y = sum_k s_k a(r_k, theta_k) + n.
///
/// Random stream: std::mt19937_64 seeded with `seed`. Uniforms are
/// (next() >> 11) * 2^-53. The K source phases are drawn first (when
/// random_phase is set), then one Box-Muller pair per element in order,
/// giving the real and imaginary noise parts each scaled by sigma / sqrt(2).
///
Snapshot make_snapshot(const ArrayConfig& cfg, std::span<const Target> targets, double snr_db,
                       std::uint64_t seed, const SnapshotOptions& options = {});

/// Normalized array-factor magnitude in dB on a grid of broadside angles.
/// With `sub_ula` set, only the M elements of ULA 1 are summed.
std::vector<double> array_factor_db(const ArrayConfig& cfg, std::span<const double> theta_grid,
                                    bool sub_ula = false);

/// Little-endian f64, interleaved re/im, no header.
void write_snapshot_binary(std::ostream& os, const CVector& y);
CVector read_snapshot_binary(std::istream& is);

} // namespace elaa

#endif
