#include "elaa/ss_music.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>

#include "elaa/errors.hpp"

namespace elaa {

namespace {

struct PeakInfo {
    std::size_t index;
    double theta;  // after parabolic refinement
    double height; // spectrum value at the grid node
};

// Every strict local maximum, by descending height.
std::vector<PeakInfo> all_peaks(const Spectrum& spectrum)
{
    const auto& g = spectrum.grid;
    const auto& v = spectrum.values;
    std::vector<PeakInfo> peaks;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (!(v[i] > v[i - 1] && v[i] >= v[i + 1]))
            continue;
        const double l = std::log(v[i - 1]);
        const double c = std::log(v[i]);
        const double r = std::log(v[i + 1]);
        const double denom = l - 2.0 * c + r;
        double offset = denom < 0.0 ? 0.5 * (l - r) / denom : 0.0;
        offset = std::clamp(offset, -0.5, 0.5);
        const double step = offset >= 0.0 ? g[i + 1] - g[i] : g[i] - g[i - 1];
        peaks.push_back({i, g[i] + offset * step, v[i]});
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const PeakInfo& a, const PeakInfo& b) { return a.height > b.height; });
    return peaks;
}

void require_peaks(std::size_t found, int sources)
{
    if (sources < 1)
        throw EstimationError(ErrorKind::InvalidArgument, "need at least one source");
    if (found < static_cast<std::size_t>(sources))
        throw EstimationError(ErrorKind::UnderResolved, "spectrum has " + std::to_string(found) +
                                                            " distinct maxima, " + std::to_string(sources) +
                                                            " requested");
}

std::vector<PeakInfo> find_peaks(const Spectrum& spectrum, int sources)
{
    auto peaks = all_peaks(spectrum);
    require_peaks(peaks.size(), sources);
    peaks.resize(static_cast<std::size_t>(sources));
    return peaks;
}

// True when `v` has no sample strictly below both endpoints between i and j.
bool no_dip(const std::vector<double>& v, std::size_t i, std::size_t j)
{
    if (i > j)
        std::swap(i, j);
    const double floor = std::min(v[i], v[j]);
    for (std::size_t k = i + 1; k < j; ++k)
        if (v[k] < floor)
            return false;
    return true;
}

// Fused maxima, dropping any whose valley towards a stronger kept maximum
// exists only in the fused spectrum. Two ULAs seeing the same source at
// slightly different angles otherwise produce two fused maxima.
std::vector<PeakInfo> find_fused_peaks(const Spectrum& fused, const Spectrum& s1, const Spectrum& s2, int sources)
{
    std::vector<PeakInfo> kept;
    for (const auto& p : all_peaks(fused)) {
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const PeakInfo& q) {
            return no_dip(s1.values, p.index, q.index) && no_dip(s2.values, p.index, q.index);
        });
        if (!duplicate)
            kept.push_back(p);
        if (kept.size() == static_cast<std::size_t>(std::max(sources, 0)))
            break;
    }
    require_peaks(kept.size(), sources);
    return kept;
}

// Golden-section maximization of f on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi, double start, double start_value)
{
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-13; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    const double x = 0.5 * (a + b);
    return f(x) >= start_value ? x : start;
}

} // namespace

std::string_view to_string(FusionMode mode)
{
    return mode == FusionMode::Product ? "product" : "max";
}

std::optional<FusionMode> parse_fusion_mode(std::string_view name)
{
    if (name == "product")
        return FusionMode::Product;
    if (name == "max")
        return FusionMode::Max;
    return std::nullopt;
}

std::vector<double> angle_grid(double step_deg, double lo_deg, double hi_deg)
{
    if (!(step_deg > 0.0) || !(hi_deg > lo_deg))
        throw EstimationError(ErrorKind::InvalidArgument, "invalid angle grid");
    const auto n = static_cast<std::size_t>(std::ceil((hi_deg - lo_deg) / step_deg - 1e-9));
    std::vector<double> grid;
    grid.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        grid.push_back(deg2rad(lo_deg + static_cast<double>(i) * step_deg));
    return grid;
}

UlaManifold::UlaManifold(double spacing_wavelengths, int length) : spacing_wl_(spacing_wavelengths), length_(length)
{
    if (length_ < 1)
        throw EstimationError(ErrorKind::InvalidArgument, "manifold length must be positive");
}

CVector UlaManifold::at(double theta) const
{
    const double phase = 2.0 * kPi * spacing_wl_ * std::sin(theta);
    CVector a(length_);
    for (int i = 0; i < length_; ++i)
        a(i) = std::polar(1.0, phase * i);
    return a;
}

CMatrix UlaManifold::on_grid(std::span<const double> grid) const
{
    CMatrix a(length_, static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j)
        a.col(static_cast<Eigen::Index>(j)) = at(grid[j]);
    return a;
}

namespace {

Spectrum spectrum_on(const SubspacePair& sub, std::span<const double> grid, const CMatrix& a)
{
    if (grid.empty())
        throw EstimationError(ErrorKind::InvalidArgument, "empty angle grid");
    if (sub.noise.cols() == 0)
        throw EstimationError(ErrorKind::InvalidArgument, "noise subspace is empty");
    if (sub.noise.rows() != a.rows())
        throw EstimationError(ErrorKind::InvalidArgument, "manifold length does not match subspace rows");
    const CMatrix proj = sub.noise.adjoint() * a;
    Spectrum s;
    s.grid.assign(grid.begin(), grid.end());
    s.values.resize(grid.size());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double num = a.col(j).norm();
        const double den = std::max(proj.col(j).norm(), 1e-12 * num);
        s.values[static_cast<std::size_t>(j)] = num / den;
    }
    return s;
}

} // namespace

Spectrum pseudospectrum(const SubspacePair& sub, std::span<const double> grid, const UlaManifold& manifold)
{
    return spectrum_on(sub, grid, manifold.on_grid(grid));
}

double pseudospectrum_at(const SubspacePair& sub, double theta, const UlaManifold& manifold)
{
    const CVector a = manifold.at(theta);
    const double num = a.norm();
    const double den = std::max((sub.noise.adjoint() * a).norm(), 1e-12 * num);
    return num / den;
}

Spectrum fuse(const Spectrum& s1, const Spectrum& s2, FusionMode mode)
{
    if (s1.grid != s2.grid)
        throw EstimationError(ErrorKind::InvalidArgument, "cannot fuse spectra on different grids");
    Spectrum out;
    out.grid = s1.grid;
    out.values.resize(s1.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = mode == FusionMode::Product ? s1.values[i] * s2.values[i]
                                                    : std::max(s1.values[i], s2.values[i]);
    return out;
}

std::vector<double> peak_pick(const Spectrum& spectrum, int sources)
{
    std::vector<double> out;
    for (const auto& p : find_peaks(spectrum, sources))
        out.push_back(p.theta);
    return out;
}

MusicEstimator::MusicEstimator(const ArrayConfig& cfg, MusicOptions options)
    : options_(options),
      elements_(cfg.elements_per_ula()),
      pencil_(options.pencil > 0 ? options.pencil : default_pencil(cfg.elements_per_ula())),
      grid_(angle_grid(options.grid_step_deg)),
      manifold_(cfg.spacing() / cfg.wavelength(), pencil_ + 1),
      manifold_grid_(manifold_.on_grid(grid_))
{
    if (pencil_ < 1 || pencil_ >= elements_)
        throw ConfigError("run.pencil", "pencil must satisfy 1 <= L < M");
}

Spectrum MusicEstimator::spectrum_from(const SubspacePair& sub) const
{
    return spectrum_on(sub, grid_, manifold_grid_);
}

Spectrum MusicEstimator::ula_spectrum(const CVector& y_sub, int sources) const
{
    return spectrum_from(split_subspaces(hankel(y_sub, pencil_), sources));
}

Spectrum MusicEstimator::spectrum(const CVector& y, int sources, MusicMode mode) const
{
    const auto [y1, y2] = split_ulas(y);
    switch (mode) {
    case MusicMode::Ula1: return ula_spectrum(y1, sources);
    case MusicMode::Ula2: return ula_spectrum(y2, sources);
    case MusicMode::Elaa: break;
    }
    return fuse(ula_spectrum(y1, sources), ula_spectrum(y2, sources), options_.fusion);
}

std::vector<double> MusicEstimator::estimate_ula(const CVector& y_sub, int sources) const
{
    const SubspacePair sub = split_subspaces(hankel(y_sub, pencil_), sources);
    const Spectrum s = spectrum_from(sub);
    const auto peaks = find_peaks(s, sources);
    std::vector<double> out;
    for (const auto& p : peaks) {
        if (!options_.refine) {
            out.push_back(p.theta);
            continue;
        }
        auto f = [&](double theta) { return std::log(pseudospectrum_at(sub, theta, manifold_)); };
        out.push_back(golden_max(f, grid_[p.index - 1], grid_[p.index + 1], p.theta, f(p.theta)));
    }
    return out;
}

std::vector<double> MusicEstimator::estimate(const CVector& y, int sources, MusicMode mode) const
{
    const auto [y1, y2] = split_ulas(y);
    if (mode == MusicMode::Ula1)
        return estimate_ula(y1, sources);
    if (mode == MusicMode::Ula2)
        return estimate_ula(y2, sources);

    const SubspacePair sub1 = split_subspaces(hankel(y1, pencil_), sources);
    const SubspacePair sub2 = split_subspaces(hankel(y2, pencil_), sources);
    const Spectrum s1 = spectrum_from(sub1);
    const Spectrum s2 = spectrum_from(sub2);
    const auto peaks = find_fused_peaks(fuse(s1, s2, options_.fusion), s1, s2, sources);
    std::vector<double> out;
    for (const auto& p : peaks) {
        if (!options_.refine) {
            out.push_back(p.theta);
            continue;
        }
        auto f = [&](double theta) {
            const double a = pseudospectrum_at(sub1, theta, manifold_);
            const double b = pseudospectrum_at(sub2, theta, manifold_);
            return std::log(options_.fusion == FusionMode::Product ? a * b : std::max(a, b));
        };
        out.push_back(golden_max(f, grid_[p.index - 1], grid_[p.index + 1], p.theta, f(p.theta)));
    }
    return out;
}

std::vector<double> estimate_doa_music(const Snapshot& snapshot, const ArrayConfig& cfg, int sources,
                                       MusicMode mode, const MusicOptions& options)
{
    return MusicEstimator(cfg, options).estimate(snapshot.y, sources, mode);
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum)
{
    os << "angle_deg,value\n";
    char buf[64];
    for (std::size_t i = 0; i < spectrum.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f,%.10g\n", rad2deg(spectrum.grid[i]), spectrum.values[i]);
        os << buf;
    }
}

} // namespace elaa
