#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "elaa/errors.hpp"
#include "elaa/ss_esprit.hpp"
#include "oracles.hpp"

using namespace elaa;

namespace {

ArrayConfig paper()
{
    return ArrayConfig::in_wavelengths(16, 76e9, 0.5, 150.0);
}

Snapshot far(std::initializer_list<double> degs, double snr, std::uint64_t seed)
{
    std::vector<Target> t;
    for (double d : degs)
        t.push_back(Target{250.0, deg2rad(d)});
    return make_snapshot(paper(), t, snr, seed);
}

} // namespace

TEST_CASE("selection pairs for M = 16, L = 8")
{
    const auto cfg = paper();
    const auto p = selection_pairs(cfg, 8, 2);
    CHECK(p.coarse.rows_a.size() == 16);
    CHECK(p.coarse.rows_b.size() == 16);
    CHECK(p.fine.rows_a.size() == 9);
    CHECK(p.fine.rows_b.size() == 9);
    CHECK(p.coarse.rows_a[8] == 9);  // second block starts at row L + 1
    CHECK(p.coarse.rows_b[8] == 10);
    CHECK(p.fine.rows_b[0] == 9);
    CHECK(p.coarse.delta == doctest::Approx(cfg.wavelength() / 2));
    CHECK(p.fine.delta / cfg.wavelength() == doctest::Approx(157.5));
    CHECK_THROWS_AS(selection_pairs(cfg, 2, 2), EstimationError);
}

TEST_CASE("default ESPRIT pencil")
{
    CHECK(esprit_default_pencil(16) == 6);
    CHECK(esprit_default_pencil(9) == 3);
}

TEST_CASE("shift operator")
{
    const auto cfg = paper();
    const auto snap = far({3.0}, INFINITY, 1);
    const auto [y1, y2] = split_ulas(snap.y);
    const auto sub = stacked_subspace(y1, y2, 8, 1);
    const auto pairs = selection_pairs(cfg, 8, 1);

    SUBCASE("zero shift gives identity")
    {
        ShiftPair same{pairs.fine.rows_a, pairs.fine.rows_a, 1.0};
        CHECK((solve_psi(sub.signal, same) - CMatrix::Identity(1, 1)).norm() < 1e-12);
    }
    SUBCASE("fine phase is 2 pi D_c u / lambda")
    {
        const CMatrix psi = solve_psi(sub.signal, pairs.fine);
        CHECK(std::abs(psi(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
        const double expected = 2 * oracle::pi * cfg.center_separation() * std::sin(deg2rad(3.0)) / cfg.wavelength();
        CHECK(std::abs(oracle::wrap(std::arg(psi(0, 0)) - expected)) < 1e-8);
    }
    SUBCASE("rank-deficient selection is IllConditioned")
    {
        CMatrix u = CMatrix::Zero(18, 2);
        u(0, 0) = 1.0;
        u(1, 0) = 1.0;
        try {
            (void)solve_psi(u, pairs.fine);
            FAIL("expected IllConditioned");
        } catch (const EstimationError& e) {
            CHECK(e.kind() == ErrorKind::IllConditioned);
        }
    }
}

TEST_CASE("noiseless eigenvalues are unit modulus")
{
    const auto cfg = paper();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto snap = far({-5.0, 5.0}, INFINITY, seed);
        const auto [y1, y2] = split_ulas(snap.y);
        const auto sub = stacked_subspace(y1, y2, 8, 2);
        const auto pairs = selection_pairs(cfg, 8, 2);
        for (const auto* pair : {&pairs.coarse, &pairs.fine}) {
            Eigen::ComplexEigenSolver<CMatrix> es(solve_psi(sub.signal, *pair));
            for (Eigen::Index i = 0; i < 2; ++i)
                CHECK(std::abs(std::abs(es.eigenvalues()(i)) - 1.0) < 1e-8);
        }
        const auto pairing = pair_eigenvalues(sub.signal, pairs.coarse, pairs.fine);
        CHECK(pairing.off_diagonal_ratio < 1e-8);
        CHECK_FALSE(pairing.low_quality);
    }
}

TEST_CASE("candidate angles")
{
    const double lambda = 0.004;
    SUBCASE("coarse shift is unambiguous")
    {
        const std::complex<double> one(1.0, 0.0);
        const auto c = angles_from_eigenvalues(std::span(&one, 1), lambda / 2, lambda);
        REQUIRE(c.per_source[0].size() == 1);
        CHECK(c.per_source[0][0].theta == doctest::Approx(0.0));
        const std::complex<double> j(0.0, 1.0);
        const auto c2 = angles_from_eigenvalues(std::span(&j, 1), lambda / 2, lambda);
        REQUIRE(c2.per_source[0].size() == 1);
        CHECK(rad2deg(c2.per_source[0][0].theta) == doctest::Approx(30.0));
    }
    SUBCASE("coarse uniqueness over the whole circle")
    {
        for (int i = 0; i < 720; ++i) {
            const std::complex<double> xi = std::polar(1.0, -oracle::pi + 2 * oracle::pi * (i + 0.5) / 720);
            CHECK(angles_from_eigenvalues(std::span(&xi, 1), lambda / 2, lambda).per_source[0].size() == 1);
        }
    }
    SUBCASE("alias count for delta = 165 lambda")
    {
        std::mt19937 gen(5);
        std::uniform_real_distribution<double> phase(-oracle::pi, oracle::pi);
        for (int i = 0; i < 200; ++i) {
            const std::complex<double> xi = std::polar(1.0, phase(gen));
            const auto c = angles_from_eigenvalues(std::span(&xi, 1), 165 * lambda, lambda);
            const double nu = std::arg(xi) / (2 * oracle::pi);
            const int expected = oracle::count_aliases(nu, 165.0);
            CHECK(static_cast<int>(c.per_source[0].size()) == expected);
            CHECK((expected == 330 || expected == 331));
            for (const auto& cand : c.per_source[0])
                CHECK(std::abs(std::sin(cand.theta)) <= 1.0);
        }
    }
    SUBCASE("zero eigenvalue is rejected")
    {
        const std::complex<double> zero(0.0, 0.0);
        CHECK_THROWS_AS(angles_from_eigenvalues(std::span(&zero, 1), lambda, lambda), EstimationError);
    }
}

TEST_CASE("fine shift maps phase errors D_c / d times smaller")
{
    const auto cfg = paper();
    const double lambda = cfg.wavelength();
    const double delta_phase = 1e-4;
    const std::complex<double> base(1.0, 0.0);
    const std::complex<double> bumped = std::polar(1.0, delta_phase);
    auto shift = [&](double delta) {
        const auto a = angles_from_eigenvalues(std::span(&base, 1), delta, lambda).per_source[0];
        const auto b = angles_from_eigenvalues(std::span(&bumped, 1), delta, lambda).per_source[0];
        auto zero_alias = [](const std::vector<Candidate>& c) {
            return std::find_if(c.begin(), c.end(), [](const Candidate& x) { return x.alias == 0; })->theta;
        };
        return std::abs(zero_alias(b) - zero_alias(a));
    };
    const double ratio = shift(cfg.spacing()) / shift(cfg.center_separation());
    CHECK(ratio == doctest::Approx(cfg.center_separation() / cfg.spacing()).epsilon(0.2));
}

TEST_CASE("dealias")
{
    SUBCASE("closest fine candidate wins")
    {
        CandidateSet fine;
        fine.per_source = {{{deg2rad(9.83), -1}, {deg2rad(10.002), 0}, {deg2rad(10.18), 1}}};
        const double coarse = deg2rad(10.0);
        const auto r = dealias(std::span(&coarse, 1), fine);
        CHECK(rad2deg(r.angles[0]) == doctest::Approx(10.002));
        CHECK(r.alias[0] == 0);
        CHECK(rad2deg(r.disagreement[0]) == doctest::Approx(0.002));
    }
    SUBCASE("midway coarse estimate is ambiguous")
    {
        CandidateSet fine;
        fine.per_source = {{{deg2rad(9.9), 0}, {deg2rad(10.1), 1}}};
        const double coarse = deg2rad(10.0);
        try {
            (void)dealias(std::span(&coarse, 1), fine);
            FAIL("expected AmbiguousDealias");
        } catch (const EstimationError& e) {
            CHECK(e.kind() == ErrorKind::AmbiguousDealias);
        }
        // 10% of the spacing separates the two distances: just outside the tie band
        const double off = deg2rad(10.0 - 0.2 * 0.051);
        CHECK_NOTHROW(dealias(std::span(&off, 1), fine));
    }
    SUBCASE("results come back ascending")
    {
        CandidateSet fine;
        fine.per_source = {{{0.3, 0}}, {{-0.2, 0}}};
        const std::vector<double> coarse{0.3, -0.2};
        const auto r = dealias(coarse, fine);
        CHECK(r.angles[0] < r.angles[1]);
    }
}

TEST_CASE("noiseless end-to-end recovery")
{
    const auto cfg = paper();
    SUBCASE("single source across (-60, 60) degrees")
    {
        std::mt19937 gen(17);
        std::uniform_real_distribution<double> angle(-60.0, 60.0);
        for (int i = 0; i < 60; ++i) {
            const double truth = angle(gen);
            const auto r = estimate_doa_esprit(far({truth}, INFINITY, i), cfg, 1);
            CHECK(std::abs(rad2deg(r.angles[0]) - truth) < 1e-6);
        }
    }
    SUBCASE("closely spaced pair")
    {
        const auto r = estimate_doa_esprit(far({-0.2, 0.2}, INFINITY, 4), cfg, 2);
        CHECK(std::abs(rad2deg(r.angles[0]) + 0.2) < 1e-3);
        CHECK(std::abs(rad2deg(r.angles[1]) - 0.2) < 1e-3);
    }
    SUBCASE("both pencils and subspace variants on a wide pair")
    {
        for (int pencil : {4, 6, 8}) {
            EspritOptions o;
            o.pencil = pencil;
            const auto r = estimate_doa_esprit(far({-5.0, 5.0}, INFINITY, 8), cfg, 2, o);
            CHECK(std::abs(rad2deg(r.angles[0]) + 5.0) < 1e-6);
            CHECK(std::abs(rad2deg(r.angles[1]) - 5.0) < 1e-6);
        }
    }
}

TEST_CASE("estimate is invariant to global complex scaling")
{
    const auto cfg = paper();
    const auto snap = far({-5.0, 5.0}, 30.0, 21);
    const auto a = estimate_doa_esprit(snap.y, cfg, 2);
    const auto b = estimate_doa_esprit(std::complex<double>(0.2, -7.0) * snap.y, cfg, 2);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(a.angles[i] == doctest::Approx(b.angles[i]).epsilon(1e-9));
}

TEST_CASE("degenerate coarse phases are flagged")
{
    // Two sources one fine lobe apart share their coarse phase up to 1/157.5 of a cycle.
    const auto cfg = paper();
    const double u = cfg.wavelength() / cfg.center_separation();
    const auto snap = far({0.0, rad2deg(std::asin(u))}, INFINITY, 2);
    const auto [y1, y2] = split_ulas(snap.y);
    const auto sub = stacked_subspace(y1, y2, 6, 2);
    const auto pairs = selection_pairs(cfg, 6, 2);
    const auto p = pair_eigenvalues(sub.signal, pairs.coarse, pairs.fine);
    CHECK(p.coarse.size() == 2);
    CHECK(p.fine.size() == 2);
}
