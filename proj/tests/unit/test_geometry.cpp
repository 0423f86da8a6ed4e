#include "doctest.h"

#include <cmath>

#include "elaa/geometry.hpp"
#include "elaa/errors.hpp"
#include "oracles.hpp"

using namespace elaa;

namespace {

ArrayConfig paper()
{
    return ArrayConfig::in_wavelengths(16, 76e9, 0.5, 150.0);
}

} // namespace

TEST_CASE("paper configuration lengths")
{
    const auto cfg = paper();
    const double lambda = 299792458.0 / 76e9;
    CHECK(cfg.wavelength() == doctest::Approx(lambda).epsilon(1e-15));
    CHECK(cfg.spacing() == doctest::Approx(lambda / 2).epsilon(1e-15));
    CHECK(cfg.gap() == doctest::Approx(0.5917).epsilon(0.01));
    CHECK(cfg.subarray_aperture() / lambda == doctest::Approx(7.5));
    CHECK(cfg.total_aperture() / lambda == doctest::Approx(165.0));
    CHECK(cfg.center_separation() / lambda == doctest::Approx(157.5));
    CHECK(cfg.total_elements() == 32);
}

TEST_CASE("element positions match an edge-by-edge construction")
{
    for (int m : {2, 5, 16}) {
        const auto cfg = ArrayConfig::from_wavelength(m, 0.01, 0.004, 0.3);
        const auto x = element_positions(cfg);
        const auto ref = oracle::positions(m, 0.004, 0.3);
        REQUIRE(x.size() == ref.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-13));
        CHECK(x.back() - x.front() == doctest::Approx(cfg.total_aperture()));
        CHECK(x[static_cast<std::size_t>(m)] - x[static_cast<std::size_t>(m - 1)] == doctest::Approx(0.3));
        CHECK(x[static_cast<std::size_t>(m)] - x[0] == doctest::Approx(cfg.center_separation()));
    }
}

TEST_CASE("reference elements are the first element of each ULA")
{
    const auto cfg = paper();
    const auto x = element_positions(cfg);
    CHECK(reference_x(cfg, 0) == doctest::Approx(x[0]).epsilon(1e-14));
    CHECK(reference_x(cfg, 1) == doctest::Approx(x[16]).epsilon(1e-14));
    // -D_a / 2 with D_a = 165 lambda
    CHECK(reference_x(cfg, 0) / cfg.wavelength() == doctest::Approx(-82.5));
}

TEST_CASE("field regions")
{
    const auto cfg = paper();
    const double lambda = cfg.wavelength();
    const auto r = field_regions(cfg);
    CHECK(r.fraunhofer / lambda == doctest::Approx(2 * 165.0 * 165.0));
    CHECK(r.local_far_field / lambda == doctest::Approx(2 * 7.5 * 7.5));
    CHECK(r.simplified / lambda == doctest::Approx(4 * 165.0 * 150.0));
    CHECK(r.fraunhofer == doctest::Approx(214.786).epsilon(1e-5));
}

TEST_CASE("target position round trip")
{
    const Target t{7.0, deg2rad(-23.0)};
    const auto back = Target::from_position(t.position());
    CHECK(back.range == doctest::Approx(7.0));
    CHECK(back.theta == doctest::Approx(deg2rad(-23.0)));
    CHECK(Target::from_position(Vec2(0.0, 3.0)).theta == doctest::Approx(0.0));
    CHECK(Target::from_position(Vec2(1.0, 1.0)).theta == doctest::Approx(oracle::pi / 4));
}

TEST_CASE("local geometry against direct coordinates")
{
    const auto cfg = paper();
    for (const Vec2 p : {Vec2(0.0, 5.0), Vec2(1.0, 5.0), Vec2(-2.0, 0.7), Vec2(0.3, 40.0)}) {
        const auto views = local_geometry(cfg, Target::from_position(p));
        for (int n = 0; n < 2; ++n) {
            const double dx = p.x() - reference_x(cfg, n);
            CHECK(views[static_cast<std::size_t>(n)].range == doctest::Approx(std::hypot(dx, p.y())).epsilon(1e-13));
            CHECK(views[static_cast<std::size_t>(n)].theta == doctest::Approx(std::atan2(dx, p.y())).epsilon(1e-13));
        }
    }
    // Reference elements are the first element of each ULA, so a broadside
    // target is seen at unequal local angles.
    const auto views = local_geometry(cfg, Target::from_position(Vec2(0.0, 5.0)));
    CHECK(views[0].theta > 0.0);
    CHECK(views[1].theta < 0.0);
    const double half = cfg.total_aperture() / 2;
    CHECK(views[0].theta == doctest::Approx(std::atan2(half, 5.0)));
    CHECK(views[1].theta == doctest::Approx(-std::atan2(half - cfg.subarray_aperture(), 5.0)));
}

TEST_CASE("local geometry rejects a target on a reference element")
{
    const auto cfg = paper();
    const Target on_ref = Target::from_position(Vec2(reference_x(cfg, 0), 0.0));
    try {
        (void)local_geometry(cfg, on_ref);
        FAIL("expected CoincidentTarget");
    } catch (const EstimationError& e) {
        CHECK(e.kind() == ErrorKind::CoincidentTarget);
    }
}

TEST_CASE("invalid configurations")
{
    CHECK_THROWS_AS(ArrayConfig::from_wavelength(1, 0.01, 0.005, 1.0), ConfigError);
    CHECK_THROWS_AS(ArrayConfig::from_wavelength(4, -0.01, 0.005, 1.0), ConfigError);
    CHECK_THROWS_AS(ArrayConfig::from_wavelength(4, 0.01, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(ArrayConfig::from_wavelength(4, 0.01, 0.005, -1.0), ConfigError);
    CHECK_THROWS_AS(ArrayConfig::from_carrier(4, 0.0, 0.005, 1.0), ConfigError);
    try {
        (void)ArrayConfig::from_wavelength(4, 0.01, 0.0, 1.0);
    } catch (const ConfigError& e) {
        CHECK(e.field() == "array.spacing_m");
    }
}
