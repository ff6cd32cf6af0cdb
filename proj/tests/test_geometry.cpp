// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "nfpose/geometry.hpp"

#include <cmath>
#include <set>

using namespace nfpose;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SystemConfig grid(int side, double spacing = 0.0825) {
    SystemConfig cfg;
    cfg.N_x = cfg.N_y = side;
    cfg.P = cfg.N();
    cfg.d_x = cfg.d_y = spacing;
    return cfg;
}

}  // namespace

TEST_CASE("unit_direction axis cases") {
    const Vec3 x = unit_direction(0.0, 0.0);
    CHECK_THAT(x(0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(x(1), WithinAbs(0.0, 1e-15));
    CHECK_THAT(x(2), WithinAbs(0.0, 1e-15));

    const Vec3 y = unit_direction(kPi / 2, 0.0);
    CHECK_THAT(y(0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(y(1), WithinAbs(1.0, 1e-15));

    const Vec3 d = unit_direction(kPi / 4, kPi / 4);
    CHECK_THAT(d(0), WithinAbs(0.5, 1e-12));
    CHECK_THAT(d(1), WithinAbs(0.5, 1e-12));
    CHECK_THAT(d(2), WithinAbs(0.70710678, 1e-8));
}

TEST_CASE("unit_direction has unit norm") {
    Rng rng(11);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) CHECK_THAT(unit_direction(u(rng), u(rng)).norm(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("ris_element_position") {
    const SystemConfig cfg = grid(11);
    CHECK(ris_element_position({0, 0}, cfg).isZero());
    const Vec3 s = ris_element_position({1, -2}, cfg);
    CHECK_THAT(s(0), WithinAbs(0.0825, 1e-15));
    CHECK_THAT(s(1), WithinAbs(-0.165, 1e-15));
    CHECK(s(2) == 0.0);
    const Vec3 corner = ris_element_position({-5, -5}, cfg);
    CHECK_THAT(corner(0), WithinAbs(-0.4125, 1e-15));
    CHECK_THAT(corner(1), WithinAbs(-0.4125, 1e-15));
    CHECK_THROWS_AS(ris_element_position({6, 0}, cfg), std::out_of_range);
    CHECK_THROWS_AS(ris_element_position({0, -6}, cfg), std::out_of_range);
}

TEST_CASE("ue_antenna_position") {
    SystemConfig cfg;
    const Pose pose{2.0, kPi / 2, 0.0, 0.0, 0.0};
    const Vec3 q1 = ue_antenna_position(pose, 1, cfg);
    CHECK_THAT(q1(0), WithinAbs(0.165, 1e-12));
    CHECK_THAT(q1(1), WithinAbs(2.0, 1e-12));
    CHECK_THAT(q1(2), WithinAbs(0.0, 1e-12));

    const Pose p{3.1, 1.2, 0.4, 2.5, 0.9};
    const Vec3 q0 = ue_antenna_position(p, 0, cfg);
    CHECK((q0 - p.r * unit_direction(p.theta, p.phi)).norm() < 1e-15);
    for (int k = 1; k <= cfg.half_k(); ++k) {
        const Vec3 mid = 0.5 * (ue_antenna_position(p, k, cfg) + ue_antenna_position(p, -k, cfg));
        CHECK((mid - q0).norm() < 1e-14);
    }
    CHECK_THROWS_AS(ue_antenna_position(p, cfg.half_k() + 1, cfg), std::out_of_range);
}

TEST_CASE("linear_index and flipped_index") {
    const SystemConfig cfg = grid(11);
    CHECK(linear_index({-5, -5}, cfg) == 1);
    CHECK(linear_index({0, 0}, cfg) == 61);
    CHECK(flipped_index({-5, -5}, cfg) == cfg.N());
    CHECK_THROWS_AS(linear_index({-6, 0}, cfg), std::out_of_range);

    SECTION("bijection and flip identity on rectangular grids") {
        for (auto [nx, ny] : {std::pair{3, 5}, std::pair{7, 7}, std::pair{9, 3}, std::pair{1, 5}}) {
            SystemConfig c;
            c.N_x = nx;
            c.N_y = ny;
            std::set<int> seen;
            for (int n = -c.half_x(); n <= c.half_x(); ++n) {
                for (int m = -c.half_y(); m <= c.half_y(); ++m) {
                    const int i = linear_index({n, m}, c);
                    CHECK(i >= 1);
                    CHECK(i <= c.N());
                    seen.insert(i);
                    // Closed form N - i + 1 agrees with the (-n, -m) definition.
                    CHECK(flipped_index({n, m}, c) == linear_index({-n, -m}, c));
                    const GridIndex back = grid_index(i, c);
                    CHECK(back.n == n);
                    CHECK(back.m == m);
                }
            }
            CHECK(static_cast<int>(seen.size()) == c.N());
        }
    }
}

TEST_CASE("near_field_bounds") {
    const SystemConfig cfg = grid(11);

    // Oracle: aperture extents measured from the extreme element positions.
    const double a = ris_element_position({5, 0}, cfg)(0) - ris_element_position({-5, 0}, cfg)(0);
    const double b = ris_element_position({0, 5}, cfg)(1) - ris_element_position({0, -5}, cfg)(1);
    const double diag = std::hypot(a, b);
    const double fresnel = 0.62 * std::sqrt(diag * diag * diag / cfg.lambda);
    const double rayleigh = 2.0 * diag * diag / cfg.lambda;

    const auto [r_min, r_max] = near_field_bounds(cfg);
    CHECK_THAT(r_min, WithinRel(fresnel, 1e-12));
    CHECK_THAT(r_max, WithinRel(rayleigh, 1e-12));
    CHECK_THAT(r_min, WithinAbs(1.360, 5e-4));
    CHECK_THAT(r_max, WithinAbs(8.250, 5e-4));

    SECTION("ratio is invariant when spacing scales with wavelength") {
        SystemConfig scaled = cfg;
        scaled.lambda *= 3.7;
        scaled.d_x *= 3.7;
        scaled.d_y *= 3.7;
        const auto s = near_field_bounds(scaled);
        CHECK_THAT(s.r_max / s.r_min, WithinRel(r_max / r_min, 1e-12));
    }
    SECTION("doubling a square aperture quadruples r_max") {
        SystemConfig wide = cfg;
        wide.d_x *= 2;
        wide.d_y *= 2;
        CHECK_THAT(near_field_bounds(wide).r_max, WithinRel(4.0 * r_max, 1e-12));
    }
}

TEST_CASE("sample_pose ranges, determinism and moments") {
    const SystemConfig cfg;
    const auto [r_min, r_max] = near_field_bounds(cfg);
    Rng rng(2024);
    const int n = 10000;
    double theta_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const Pose p = sample_pose(rng, cfg);
        REQUIRE(p.r >= r_min);
        REQUIRE(p.r <= r_max);
        REQUIRE(rad2deg(p.theta) >= 10.0);
        REQUIRE(rad2deg(p.theta) <= 170.0);
        REQUIRE(rad2deg(p.phi) >= 10.0);
        REQUIRE(rad2deg(p.phi) <= 80.0);
        REQUIRE(rad2deg(p.psi) >= 15.0);
        REQUIRE(rad2deg(p.psi) <= 170.0);
        REQUIRE(rad2deg(p.gamma) >= 15.0);
        REQUIRE(rad2deg(p.gamma) <= 80.0);
        theta_sum += rad2deg(p.theta);
    }
    // Uniform on [10, 170]: mean 90, sd 160/sqrt(12); 3-sigma band of the sample mean.
    const double sd_of_mean = 160.0 / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(theta_sum / n - 90.0) < 3.0 * sd_of_mean);

    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) {
        const Pose pa = sample_pose(a, cfg);
        const Pose pb = sample_pose(b, cfg);
        CHECK(pa.r == pb.r);
        CHECK(pa.theta == pb.theta);
        CHECK(pa.gamma == pb.gamma);
    }
}

TEST_CASE("SystemConfig validation") {
    SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = [](auto mutate) {
        SystemConfig c;
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(bad([](SystemConfig& c) { c.K = 10; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](SystemConfig& c) { c.N_x = 10; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](SystemConfig& c) { c.P = 100; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](SystemConfig& c) { c.L = 5; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](SystemConfig& c) { c.d_x = 0.1; }).validate(), std::invalid_argument);
}
