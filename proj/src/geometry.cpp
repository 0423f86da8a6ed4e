#include "elaa/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "elaa/errors.hpp"

namespace elaa {

ArrayConfig::ArrayConfig(int elements, double wavelength, double spacing, double gap)
    : elements_(elements), wavelength_(wavelength), spacing_(spacing), gap_(gap)
{
    if (elements_ < 2)
        throw ConfigError("array.elements", "need at least 2 elements per ULA");
    if (!(wavelength_ > 0.0) || !std::isfinite(wavelength_))
        throw ConfigError("array.wavelength_m", "wavelength must be positive");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
        throw ConfigError("array.spacing_m", "element spacing must be positive");
    if (!(gap_ > 0.0) || !std::isfinite(gap_))
        throw ConfigError("array.gap_m", "inter-ULA gap must be positive");
}

ArrayConfig ArrayConfig::from_carrier(int elements, double carrier_hz, double spacing_m, double gap_m)
{
    if (!(carrier_hz > 0.0))
        throw ConfigError("array.carrier_hz", "carrier frequency must be positive");
    return ArrayConfig(elements, kSpeedOfLight / carrier_hz, spacing_m, gap_m);
}

ArrayConfig ArrayConfig::from_wavelength(int elements, double wavelength_m, double spacing_m, double gap_m)
{
    return ArrayConfig(elements, wavelength_m, spacing_m, gap_m);
}

ArrayConfig ArrayConfig::in_wavelengths(int elements, double carrier_hz, double spacing_wl, double gap_wl)
{
    if (!(carrier_hz > 0.0))
        throw ConfigError("array.carrier_hz", "carrier frequency must be positive");
    const double lambda = kSpeedOfLight / carrier_hz;
    return ArrayConfig(elements, lambda, spacing_wl * lambda, gap_wl * lambda);
}

Target Target::from_position(const Vec2& p, std::complex<double> amplitude)
{
    Target t;
    t.range = p.norm();
    t.theta = std::atan2(p.x(), p.y());
    t.amplitude = amplitude;
    return t;
}

std::vector<double> element_positions(const ArrayConfig& cfg)
{
    const int m_count = cfg.elements_per_ula();
    const double d = cfg.spacing();
    const double dc = cfg.center_separation();
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(cfg.total_elements()));
    for (int n = 1; n <= 2; ++n)
        for (int m = 0; m < m_count; ++m)
            x.push_back((m - 0.5 * (m_count - 1)) * d + (n - 1.5) * dc);
    return x;
}

double reference_x(const ArrayConfig& cfg, int ula)
{
    // (n-2)(M-1)d + (n-3/2)D_s with n = ula + 1
    const int n = ula + 1;
    return (n - 2) * cfg.subarray_aperture() + (n - 1.5) * cfg.gap();
}

FieldRegions field_regions(const ArrayConfig& cfg)
{
    const double lambda = cfg.wavelength();
    const double da = cfg.total_aperture();
    const double sa = cfg.subarray_aperture();
    return {
        2.0 * da * da / lambda,
        2.0 * sa * sa / lambda,
        std::max(5.0 * da, 4.0 * da * cfg.gap() / lambda),
    };
}

std::array<LocalView, 2> local_geometry(const ArrayConfig& cfg, const Target& target)
{
    if (!(target.range > 0.0))
        throw EstimationError(ErrorKind::InvalidArgument, "target range must be positive");

    const double r = target.range;
    const double u = std::sin(target.theta); // plays the role of cos(theta) from the x-axis
    std::array<LocalView, 2> out{};
    for (int n = 0; n < 2; ++n) {
        const double x0 = reference_x(cfg, n);
        const double rn = std::sqrt(std::max(0.0, r * r - 2.0 * r * x0 * u + x0 * x0));
        if (rn <= 1e-12 * std::max(1.0, r))
            throw EstimationError(ErrorKind::CoincidentTarget, "target coincides with a ULA reference element");
        const double sin_local = std::clamp((r * u - x0) / rn, -1.0, 1.0);
        const double cos_local = r * std::cos(target.theta) / rn;
        out[static_cast<std::size_t>(n)] = {rn, std::atan2(sin_local, cos_local)};
    }
    return out;
}

} // namespace elaa
