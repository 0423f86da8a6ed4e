#ifndef ELAA_SS_MUSIC_HPP
#define ELAA_SS_MUSIC_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "elaa/geometry.hpp"
#include "elaa/signal_model.hpp"
#include "elaa/subspace.hpp"

namespace elaa {

enum class FusionMode { Product, Max };
enum class MusicMode { Elaa, Ula1, Ula2 };

std::string_view to_string(FusionMode mode);
std::optional<FusionMode> parse_fusion_mode(std::string_view name);

/// Pseudospectrum sampled on a strictly increasing grid of broadside angles (radians).
struct Spectrum {
    std::vector<double> grid;
    std::vector<double> values;
};

/// Broadside angles lo, lo + step, ... strictly below hi (degrees in, radians out).
std::vector<double> angle_grid(double step_deg, double lo_deg = -90.0, double hi_deg = 90.0);

/// Hankel-domain ULA steering [1, z, ..., z^(length-1)], z = exp(j 2 pi (d / lambda) sin theta).
class UlaManifold {
public:
    UlaManifold(double spacing_wavelengths, int length);

    int length() const noexcept { return length_; }
    CVector at(double theta) const;
    CMatrix on_grid(std::span<const double> grid) const;

private:
    double spacing_wl_;
    int length_;
};

/// S(theta) = |a| / |U_noise^H a| with the denominator floored at 1e-12 |a|.
Spectrum pseudospectrum(const SubspacePair& sub, std::span<const double> grid, const UlaManifold& manifold);
double pseudospectrum_at(const SubspacePair& sub, double theta, const UlaManifold& manifold);

Spectrum fuse(const Spectrum& s1, const Spectrum& s2, FusionMode mode);

///
/// K highest strict local maxima (first sample of a plateau counts, grid
/// endpoints never do), refined by a 3-point parabola through the log
/// values. Returned by descending peak height; equal heights keep the lower
/// angle first. Throws UnderResolved when fewer than K maxima exist.
///
std::vector<double> peak_pick(const Spectrum& spectrum, int sources);

struct MusicOptions {
    int pencil = 0;               // 0 selects floor(M / 2)
    double grid_step_deg = 0.01;
    FusionMode fusion = FusionMode::Product;
    bool refine = true;           // golden-section polish of each peak on the continuous spectrum
};

///
/// Single-snapshot MUSIC over one or both ULAs of an ELAA. The Hankel-domain
/// manifold on the search grid is computed once at construction, so one
/// estimator can be shared read-only between Monte-Carlo workers.
///
class MusicEstimator {
public:
    explicit MusicEstimator(const ArrayConfig& cfg, MusicOptions options = {});

    const MusicOptions& options() const noexcept { return options_; }
    int pencil() const noexcept { return pencil_; }
    const std::vector<double>& grid() const noexcept { return grid_; }

    /// Spectrum of one ULA sub-vector (length M).
    Spectrum ula_spectrum(const CVector& y_sub, int sources) const;
    /// Fused (Elaa) or single-ULA spectrum of a full 2M snapshot.
    Spectrum spectrum(const CVector& y, int sources, MusicMode mode) const;

    /// DOAs from one ULA sub-vector, descending by peak height.
    std::vector<double> estimate_ula(const CVector& y_sub, int sources) const;
    /// In Elaa mode a fused maximum is skipped when neither ULA spectrum dips
    /// between it and a stronger maximum already taken.
    std::vector<double> estimate(const CVector& y, int sources, MusicMode mode) const;

private:
    Spectrum spectrum_from(const SubspacePair& sub) const;

    MusicOptions options_;
    int elements_;
    int pencil_;
    std::vector<double> grid_;
    UlaManifold manifold_;
    CMatrix manifold_grid_;
};

std::vector<double> estimate_doa_music(const Snapshot& snapshot, const ArrayConfig& cfg, int sources,
                                       MusicMode mode = MusicMode::Elaa, const MusicOptions& options = {});

/// Two columns: angle_deg,value
void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);

} // namespace elaa

#endif
