#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "elaa/errors.hpp"
#include "elaa/ss_music.hpp"
#include "oracles.hpp"

using namespace elaa;

namespace {

ArrayConfig paper()
{
    return ArrayConfig::in_wavelengths(16, 76e9, 0.5, 150.0);
}

Snapshot far_pair(double a_deg, double b_deg, double snr, std::uint64_t seed)
{
    const std::vector<Target> t{Target{250.0, deg2rad(a_deg)}, Target{250.0, deg2rad(b_deg)}};
    return make_snapshot(paper(), t, snr, seed);
}

Spectrum make_spectrum(std::vector<double> values)
{
    Spectrum s;
    for (std::size_t i = 0; i < values.size(); ++i)
        s.grid.push_back(static_cast<double>(i));
    s.values = std::move(values);
    return s;
}

} // namespace

TEST_CASE("angle grid")
{
    const auto g = angle_grid(0.01);
    CHECK(g.size() == 18000);
    CHECK(g.front() == doctest::Approx(deg2rad(-90.0)));
    CHECK(g.back() == doctest::Approx(deg2rad(89.99)));
    CHECK_THROWS_AS(angle_grid(0.0), EstimationError);
}

TEST_CASE("manifold entries are the ULA phase progression")
{
    const UlaManifold m(0.5, 9);
    const auto a = m.at(deg2rad(30.0));
    for (int i = 0; i < 9; ++i)
        CHECK(std::abs(oracle::wrap(std::arg(a(i)) - oracle::pi * 0.5 * i)) < 1e-12);
}

TEST_CASE("peak picking")
{
    SUBCASE("strict local maxima by descending height")
    {
        const auto s = make_spectrum({0.0, 1.0, 0.5, 3.0, 0.2, 2.0, 0.1});
        const auto p = peak_pick(s, 2);
        REQUIRE(p.size() == 2);
        CHECK(std::abs(p[0] - 3.0) <= 0.5);
        CHECK(std::abs(p[1] - 5.0) <= 0.5);
    }
    SUBCASE("grid endpoints never count")
    {
        const auto s = make_spectrum({5.0, 1.0, 2.0, 1.0, 6.0});
        CHECK(peak_pick(s, 1).size() == 1);
        CHECK_THROWS_AS(peak_pick(s, 2), EstimationError);
    }
    SUBCASE("too few maxima is UnderResolved")
    {
        try {
            (void)peak_pick(make_spectrum({1.0, 2.0, 3.0, 2.0, 1.0}), 2);
            FAIL("expected UnderResolved");
        } catch (const EstimationError& e) {
            CHECK(e.kind() == ErrorKind::UnderResolved);
        }
    }
    SUBCASE("symmetric samples give no parabolic offset")
    {
        const auto p = peak_pick(make_spectrum({1.0, 2.0, 4.0, 2.0, 1.0}), 1);
        CHECK(p[0] == doctest::Approx(2.0));
    }
}

TEST_CASE("product fusion is commutative and associative")
{
    const auto a = make_spectrum({1.0, 2.0, 3.0});
    const auto b = make_spectrum({0.5, 4.0, 1.5});
    const auto c = make_spectrum({2.0, 0.1, 7.0});
    CHECK(fuse(a, b, FusionMode::Product).values == fuse(b, a, FusionMode::Product).values);
    const auto l = fuse(fuse(a, b, FusionMode::Product), c, FusionMode::Product).values;
    const auto r = fuse(a, fuse(b, c, FusionMode::Product), FusionMode::Product).values;
    for (std::size_t i = 0; i < l.size(); ++i)
        CHECK(l[i] == doctest::Approx(r[i]).epsilon(1e-15));
    CHECK(fuse(a, b, FusionMode::Max).values == std::vector<double>{1.0, 4.0, 3.0});

    auto shifted = b;
    shifted.grid[0] = -1.0;
    CHECK_THROWS_AS(fuse(a, shifted, FusionMode::Product), EstimationError);
}

TEST_CASE("noiseless off-grid source: grid node, parabola, continuous polish")
{
    const auto cfg = paper();
    const double truth = 7.3456; // degrees, between grid nodes
    const std::vector<Target> t{Target{250.0, deg2rad(truth)}};
    const auto snap = make_snapshot(cfg, t, INFINITY, 3);
    const auto [y1, y2] = split_ulas(snap.y);

    // Fine-grid oracle: maximize the same spectrum on a 0.001 degree grid.
    const auto sub = split_subspaces(hankel(y1, 8), 1);
    const UlaManifold manifold(0.5, 9);
    double best = 0.0;
    double best_theta = 0.0;
    for (int i = -500; i <= 500; ++i) {
        const double th = deg2rad(truth + i * 0.001);
        const double v = pseudospectrum_at(sub, th, manifold);
        if (v > best) {
            best = v;
            best_theta = rad2deg(th);
        }
    }
    CHECK(std::abs(best_theta - truth) <= 0.0005 + 1e-9);

    MusicOptions grid_only;
    grid_only.refine = false;
    const MusicEstimator coarse(cfg, grid_only);
    const auto spec = coarse.ula_spectrum(y1, 1);
    const auto node = std::max_element(spec.values.begin(), spec.values.end()) - spec.values.begin();
    CHECK(std::abs(rad2deg(spec.grid[static_cast<std::size_t>(node)]) - truth) <= 0.005 + 1e-9);
    // The noiseless peak is a pole, which a log parabola only roughly fits.
    const double parabolic = rad2deg(coarse.estimate_ula(y1, 1)[0]);
    CHECK(std::abs(parabolic - truth) <= 0.005);

    const MusicEstimator polished(cfg);
    const double refined = rad2deg(polished.estimate_ula(y1, 1)[0]);
    CHECK(std::abs(refined - best_theta) <= 0.01 / 20 + 0.0005);
    CHECK(std::abs(refined - truth) < 1e-6);
}

TEST_CASE("noiseless two-source recovery in every mode")
{
    const auto cfg = paper();
    const MusicEstimator music(cfg);
    for (const auto& [a, b] : {std::pair{-5.0, 5.0}, std::pair{-30.0, 12.5}}) {
        const auto snap = far_pair(a, b, INFINITY, 11);
        for (auto mode : {MusicMode::Elaa, MusicMode::Ula1, MusicMode::Ula2}) {
            auto est = music.estimate(snap.y, 2, mode);
            std::sort(est.begin(), est.end());
            CHECK(rad2deg(est[0]) == doctest::Approx(a).epsilon(1e-6));
            CHECK(std::abs(rad2deg(est[0]) - a) < 1e-3);
            CHECK(std::abs(rad2deg(est[1]) - b) < 1e-3);
        }
    }
}

TEST_CASE("fused spectrum peaks where both ULAs agree")
{
    const auto cfg = paper();
    const MusicEstimator music(cfg);
    const auto snap = far_pair(-5.0, 5.0, 30.0, 5);
    const auto fused = music.spectrum(snap.y, 2, MusicMode::Elaa);
    const auto s1 = music.spectrum(snap.y, 2, MusicMode::Ula1);
    const auto s2 = music.spectrum(snap.y, 2, MusicMode::Ula2);
    for (std::size_t i = 0; i < fused.values.size(); i += 97)
        CHECK(fused.values[i] == doctest::Approx(s1.values[i] * s2.values[i]).epsilon(1e-12));
}

TEST_CASE("estimate is invariant to global complex scaling")
{
    const auto cfg = paper();
    const MusicEstimator music(cfg);
    const auto snap = far_pair(-5.0, 5.0, 25.0, 9);
    const auto a = music.estimate(snap.y, 2, MusicMode::Elaa);
    const auto b = music.estimate(std::complex<double>(-3.0, 0.4) * snap.y, 2, MusicMode::Elaa);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("option parsing and validation")
{
    CHECK(parse_fusion_mode("product") == FusionMode::Product);
    CHECK(parse_fusion_mode("max") == FusionMode::Max);
    CHECK_FALSE(parse_fusion_mode("sum").has_value());
    MusicOptions bad;
    bad.pencil = 16;
    CHECK_THROWS_AS(MusicEstimator(paper(), bad), ConfigError);
}

TEST_CASE("spectrum CSV")
{
    std::ostringstream os;
    write_spectrum_csv(os, make_spectrum({1.0, 2.0}));
    const std::string text = os.str();
    CHECK(text.rfind("angle_deg,value\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
