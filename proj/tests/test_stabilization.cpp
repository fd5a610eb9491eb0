#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "aniflow/stabilization.hpp"
#include "support/oracles.hpp"

using namespace aniflow;
using Catch::Approx;

TEST_CASE("p_alpha closed form") {
    CHECK(p_alpha(1.7, 0.0, 5.0) == Approx(2.0 * 1.7));
    CHECK(p_alpha(1.0, 1.0, 3.0) == Approx(4.0));

    // Monotone nondecreasing in alpha.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> g(0.1, 3.0), t(-1.0, 1.0), al(0.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double gn = g(rng), tv = t(rng);
        const double a1 = al(rng), a2 = al(rng);
        const double lo = std::min(a1, a2), hi = std::max(a1, a2);
        CHECK(p_alpha(gn, tv, lo) <= p_alpha(gn, tv, hi) + 1e-14);
    }

    CHECK_THROWS_AS(p_alpha(0.0, 0.5, 1.0), Error);
    CHECK_THROWS_AS(p_alpha(1.0, 0.5, -1.0), Error);
}

TEST_CASE("q_fn special values") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0.0, two_pi);
    const auto iso = Anisotropy::isotropic();
    const auto kf = Anisotropy::kfold(1.0 / 3.0, 3, 0.0);
    for (int i = 0; i < 64; ++i) {
        const UnitVec2 n = normal_at(dist(rng));
        const UnitVec2 nhat = normal_at(dist(rng));
        const UnitVec2 minus_n(-n.x, -n.y);

        CHECK(q_fn(kf, n, n) == Approx(2.0 * kf.gamma(n)).margin(1e-12));
        CHECK(q_fn(iso, n, nhat) == Approx(1.0 + n.dot(nhat)).margin(1e-12));
        CHECK(q_fn(kf, n, minus_n) ==
              Approx(kf.gamma(minus_n) - kf.gamma(n)).margin(1e-12));
    }
}

TEST_CASE("per-direction minimal alpha") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> dist(0.0, two_pi);
    const auto iso = Anisotropy::isotropic();
    for (int i = 0; i < 64; ++i) {
        const UnitVec2 n = normal_at(dist(rng));
        const UnitVec2 nhat = normal_at(dist(rng));
        CHECK(min_alpha_for_direction(iso, n, nhat) == 0.0);
        CHECK(min_alpha_for_direction(iso, n, n) == 0.0);
    }

    // Where the result is positive, P at the returned alpha meets Q exactly;
    // cross-checked against a bisection solve of the monotone gap.
    const auto kf = Anisotropy::kfold(1.0 / 3.0, 3, 0.0);
    int positives = 0;
    for (int i = 0; i < 400; ++i) {
        const UnitVec2 n = normal_at(dist(rng));
        const UnitVec2 nhat = normal_at(dist(rng));
        const double alpha = min_alpha_for_direction(kf, n, nhat);
        CHECK(alpha >= 0.0);
        if (alpha > 0.0) {
            ++positives;
            const double t = nhat.dot(n.perp());
            CHECK(p_alpha(kf.gamma(n), t, alpha) == Approx(q_fn(kf, n, nhat)).margin(1e-10));
            CHECK(alpha == Approx(oracle::bisect_min_alpha(kf, n, nhat)).epsilon(1e-9));
        }
    }
    CHECK(positives > 10);

    // Infeasible antipodal direction when the condition fails.
    const auto bad = Anisotropy::kfold(0.6, 3, 0.0);
    // 3 gamma(n) - gamma(-n) = 2 + 4*0.6*cos(3 theta) < 0 at theta = pi/3.
    const UnitVec2 nbad = normal_at(std::numbers::pi / 3.0);
    const UnitVec2 minus_nbad(-nbad.x, -nbad.y);
    CHECK_THROWS_AS(min_alpha_for_direction(bad, nbad, minus_nbad), ConditionViolated);
}

TEST_CASE("k0 at a direction") {
    const auto iso = Anisotropy::isotropic();
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> dist(0.0, two_pi);
    for (int i = 0; i < 16; ++i)
        CHECK(k0_at(iso, normal_at(dist(rng)), 256) == 0.0);

    // At theta = 0, gamma is at its maximum and Q <= 2 gamma(n) in every
    // direction, so k0 is 0 there; it is positive near the gamma minimum.
    const auto kf = Anisotropy::kfold(1.0 / 3.0, 3, 0.0);
    CHECK(k0_at(kf, normal_at(0.0), 1024) == 0.0);
    CHECK(k0_at(kf, normal_at(std::numbers::pi / 3.0), 1024) > 0.1);

    // Post-hoc feasibility of the finite value at theta = 0 for 1e4 random
    // directions (k0 = 0 must already be feasible).
    const UnitVec2 n0 = normal_at(0.0);
    const double k0 = k0_at(kf, n0, 1024);
    CHECK(std::isfinite(k0));
    const double gamma_n = kf.gamma(n0);
    const Vec2 nperp = n0.perp();
    for (int i = 0; i < 10000; ++i) {
        const UnitVec2 nhat = oracle::random_unit(rng);
        const double t = nhat.dot(nperp);
        CHECK(p_alpha(gamma_n, t, k0) >= q_fn(kf, n0, nhat) - 1e-9);
    }

    // Grid-refinement self-consistency.
    const double k0_fine = k0_at(kf, n0, 2048);
    CHECK(std::abs(k0_fine - k0) <= 1e-4 * std::max(1.0, std::abs(k0_fine)));

    CHECK_THROWS_AS(k0_at(kf, n0, 32), Error);
}

TEST_CASE("stabilizer table construction") {
    const auto iso_table = build_stabilizer_table(Anisotropy::isotropic(), 20, 256, 1.0);
    REQUIRE(iso_table.size() == 20);
    for (double k : iso_table.values()) CHECK(k == 0.0);

    const auto kf = Anisotropy::kfold(1.0 / 3.0, 3, 0.0);
    const auto table = build_stabilizer_table(kf, 20, 1024, 1.0);

    SECTION("3-fold symmetry of k0 in theta") {
        for (int i = 0; i < 12; ++i) {
            const double th = two_pi * i / 12.0;
            const double k_a = k0_at(kf, normal_at(th), 1024);
            const double k_b = k0_at(kf, normal_at(th + two_pi / 3.0), 1024);
            CHECK(k_a == Approx(k_b).margin(1e-8));
        }
    }

    SECTION("safety factor scales every entry") {
        const auto doubled = build_stabilizer_table(kf, 20, 1024, 2.0);
        for (std::size_t i = 0; i < table.size(); ++i)
            CHECK(doubled.values()[i] == Approx(2.0 * table.values()[i]));
    }

    SECTION("feasibility of table entries against 1e4 random directions") {
        std::mt19937_64 rng(31);
        const auto angles = table.angles();
        for (std::size_t i = 0; i < table.size(); ++i) {
            const UnitVec2 n = normal_at(angles[i]);
            const double gamma_n = kf.gamma(n);
            const Vec2 nperp = n.perp();
            double worst = 0.0;
            for (int s = 0; s < 10000; ++s) {
                const UnitVec2 nhat = oracle::random_unit(rng);
                const double gap = p_alpha(gamma_n, nhat.dot(nperp), table.values()[i]) -
                                   q_fn(kf, n, nhat);
                worst = std::min(worst, gap);
            }
            CHECK(worst >= -1e-9);
        }
    }

    SECTION("condition violation is rejected") {
        CHECK_THROWS_AS(build_stabilizer_table(Anisotropy::kfold(0.6, 3, 0.0), 20, 256, 1.0),
                        ConditionViolated);
    }
}

TEST_CASE("table interpolation is periodic linear") {
    StabilizerTable t({1.0, 3.0, 2.0, 5.0});
    CHECK(t.evaluate(0.0) == Approx(1.0));
    const double quarter = two_pi / 4.0;
    CHECK(t.evaluate(quarter) == Approx(3.0));
    CHECK(t.evaluate(0.5 * quarter) == Approx(2.0));
    CHECK(t.evaluate(3.5 * quarter) == Approx(3.0));   // wraps to (5 + 1)/2
    CHECK(t.evaluate(-0.5 * quarter) == Approx(3.0));  // negative angles wrap
    CHECK(t.evaluate(two_pi + quarter) == Approx(3.0));

    CHECK_THROWS_AS(StabilizerTable({1.0, -0.5}), Error);
}

TEST_CASE("k0 positive homogeneity and subadditivity") {
    const auto g1 = Anisotropy::kfold(1.0 / 3.0, 3, 0.0);
    const auto g2 = Anisotropy::kfold(0.2, 2, 0.4);

    for (double c : {0.5, 2.0, 7.0}) {
        const auto scaled = Anisotropy::scaled(g1, c);
        for (int i = 0; i < 20; ++i) {
            const double th = two_pi * i / 20.0;
            const double k_base = k0_at(g1, normal_at(th), 1024);
            const double k_scaled = k0_at(scaled, normal_at(th), 1024);
            CHECK(k_scaled == Approx(c * k_base).epsilon(1e-8).margin(1e-12));
        }
    }

    const auto g12 = Anisotropy::sum(g1, g2);
    for (int i = 0; i < 20; ++i) {
        const double th = two_pi * i / 20.0;
        const double k_sum = k0_at(g12, normal_at(th), 1024);
        const double k_1 = k0_at(g1, normal_at(th), 1024);
        const double k_2 = k0_at(g2, normal_at(th), 1024);
        CHECK(k_sum <= k_1 + k_2 + 1e-8);
    }
}
