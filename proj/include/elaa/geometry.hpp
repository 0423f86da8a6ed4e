#ifndef ELAA_GEOMETRY_HPP
#define ELAA_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace elaa {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

using Vec2 = Eigen::Vector2d;

///
/// Sparse extremely-large-aperture array: two identical ULAs of `M` elements
/// on the x-axis, placed symmetrically about the origin and separated by an
/// edge-to-edge gap `D_s`.
///
/// Angles are measured from broadside (the +y axis); a target at broadside
/// angle theta has direction cosine u = sin(theta) along the array axis.
///
class ArrayConfig {
public:
    /// Throws ConfigError when M < 2 or any length is non-positive.
    static ArrayConfig from_carrier(int elements, double carrier_hz, double spacing_m, double gap_m);
    static ArrayConfig from_wavelength(int elements, double wavelength_m, double spacing_m, double gap_m);

    /// Spacing and gap given in wavelengths (d = spacing * lambda, D_s = gap * lambda).
    static ArrayConfig in_wavelengths(int elements, double carrier_hz, double spacing_wl, double gap_wl);

    int elements_per_ula() const noexcept { return elements_; }
    int total_elements() const noexcept { return 2 * elements_; }
    double wavelength() const noexcept { return wavelength_; }
    double carrier_hz() const noexcept { return kSpeedOfLight / wavelength_; }
    double wavenumber() const noexcept { return 2.0 * kPi / wavelength_; }
    double spacing() const noexcept { return spacing_; }
    double gap() const noexcept { return gap_; }

    /// S_a = (M-1) d
    double subarray_aperture() const noexcept { return (elements_ - 1) * spacing_; }
    /// D_a = D_s + 2 (M-1) d
    double total_aperture() const noexcept { return gap_ + 2.0 * subarray_aperture(); }
    /// D_c = D_s + (M-1) d, distance between the two ULA centers (and
    /// between corresponding elements of the two ULAs).
    double center_separation() const noexcept { return gap_ + subarray_aperture(); }

private:
    ArrayConfig(int elements, double wavelength, double spacing, double gap);

    int elements_;
    double wavelength_;
    double spacing_;
    double gap_;
};

struct Target {
    double range = 1.0;                     // meters from the array center
    double theta = 0.0;                     // broadside angle, radians
    std::complex<double> amplitude{1.0, 0.0};

    Vec2 position() const { return {range * std::sin(theta), range * std::cos(theta)}; }

    static Target from_position(const Vec2& p, std::complex<double> amplitude = {1.0, 0.0});
};

/// x-coordinates of all 2M elements, ULA 1 (left) first.
std::vector<double> element_positions(const ArrayConfig& cfg);

/// x-coordinate of element 0 of ULA `ula` (0 = left, 1 = right).
double reference_x(const ArrayConfig& cfg, int ula);

struct FieldRegions {
    double fraunhofer;     // 2 D_a^2 / lambda
    double local_far_field; // 2 S_a^2 / lambda
    double simplified;     // max(5 D_a, 4 D_a D_s / lambda)
};

FieldRegions field_regions(const ArrayConfig& cfg);

/// Range and broadside angle of a target seen from one ULA's reference element.
struct LocalView {
    double range;
    double theta;
};

/// Throws EstimationError(CoincidentTarget) if the target sits on a reference element.
std::array<LocalView, 2> local_geometry(const ArrayConfig& cfg, const Target& target);

} // namespace elaa

#endif
