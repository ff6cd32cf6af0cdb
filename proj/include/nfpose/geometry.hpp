// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nfpose/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace nfpose {

/// Array and waveform constants of the RIS-assisted uplink.
///
/// The RIS is an N_x x N_y uniform planar array centred at the origin in the
/// xy plane; the UE carries a K-element uniform linear array centred on its
/// location. Defaults reproduce the reference scenario: M=9, K=11, N=121,
/// P=N, L=50, lambda=0.33 m, d_u=d_b=lambda/2, d_x=d_y=lambda/4, P_T=40 dBm.
/// The far-field BS/RIS angles are free parameters; the estimator does not
/// depend on them.
struct SystemConfig {
    int M = 9;
    int K = 11;
    int N_x = 11;
    int N_y = 11;
    int P = 121;
    int L = 50;
    double lambda = 0.33;
    double d_u = 0.165;
    double d_b = 0.165;
    double d_x = 0.0825;
    double d_y = 0.0825;
    double P_T = 10.0;  // watts
    double theta_B = deg2rad(30.0);
    double theta_R = deg2rad(40.0);
    double phi_R = deg2rad(50.0);

    int N() const { return N_x * N_y; }
    int half_x() const { return (N_x - 1) / 2; }
    int half_y() const { return (N_y - 1) / 2; }
    int half_k() const { return (K - 1) / 2; }

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const {
        auto fail = [](const std::string& what) { throw std::invalid_argument("SystemConfig: " + what); };
        if (M < 1) fail("M must be positive");
        if (K < 3 || K % 2 == 0) fail("K must be odd and >= 3");
        if (N_x < 1 || N_x % 2 == 0) fail("N_x must be odd and positive");
        if (N_y < 1 || N_y % 2 == 0) fail("N_y must be odd and positive");
        if (P < N()) fail("P must be >= N");
        if (L < K) fail("L must be >= K");
        if (!(lambda > 0.0)) fail("lambda must be positive");
        if (!(d_u > 0.0) || !(d_b > 0.0) || !(d_x > 0.0) || !(d_y > 0.0)) fail("spacings must be positive");
        // Slack of a few ulps so that d = lambda/4 computed in floating point passes.
        const double quarter = lambda / 4.0 * (1.0 + 1e-12);
        if (d_x > quarter || d_y > quarter) fail("d_x and d_y must not exceed lambda/4");
        if (!(P_T > 0.0)) fail("P_T must be positive");
    }
};

/// The five pose parameters. Angles in radians.
struct Pose {
    double r = 1.0;
    double theta = kPi / 2;
    double phi = kPi / 4;
    double psi = kPi / 2;
    double gamma = kPi / 4;
};

/// RIS element coordinate (n, m), n in [-half_x, half_x], m in [-half_y, half_y].
struct GridIndex {
    int n = 0;
    int m = 0;
};

/// [cos(az)cos(el), sin(az)cos(el), sin(el)]. Used for both the location
/// direction e(theta, phi) and the array orientation g(psi, gamma).
inline Vec3 unit_direction(double azimuth, double elevation) {
    const double ce = std::cos(elevation);
    return {std::cos(azimuth) * ce, std::sin(azimuth) * ce, std::sin(elevation)};
}

inline void check_grid_index(GridIndex g, const SystemConfig& cfg) {
    if (std::abs(g.n) > cfg.half_x() || std::abs(g.m) > cfg.half_y())
        throw std::out_of_range("grid index (" + std::to_string(g.n) + "," + std::to_string(g.m) +
                                ") outside RIS");
}

inline Vec3 ris_element_position(GridIndex g, const SystemConfig& cfg) {
    check_grid_index(g, cfg);
    return {g.n * cfg.d_x, g.m * cfg.d_y, 0.0};
}

/// Position of UE antenna k, k in [-half_k, half_k].
inline Vec3 ue_antenna_position(const Pose& pose, int k, const SystemConfig& cfg) {
    if (std::abs(k) > cfg.half_k()) throw std::out_of_range("UE antenna index " + std::to_string(k) + " out of range");
    return pose.r * unit_direction(pose.theta, pose.phi) + (k * cfg.d_u) * unit_direction(pose.psi, pose.gamma);
}

/// 1-based RIS element index, n-major: (n + half_x) * N_y + (m + half_y) + 1.
inline int linear_index(GridIndex g, const SystemConfig& cfg) {
    check_grid_index(g, cfg);
    return (g.n + cfg.half_x()) * cfg.N_y + (g.m + cfg.half_y()) + 1;
}

/// 1-based index of the point-reflected element (-n, -m). Equals N - i + 1.
inline int flipped_index(GridIndex g, const SystemConfig& cfg) { return cfg.N() - linear_index(g, cfg) + 1; }

/// Inverse of linear_index.
inline GridIndex grid_index(int linear, const SystemConfig& cfg) {
    if (linear < 1 || linear > cfg.N()) throw std::out_of_range("linear index out of range");
    const int z = linear - 1;
    return {z / cfg.N_y - cfg.half_x(), z % cfg.N_y - cfg.half_y()};
}

/// Zero-based matrix row of element g.
inline Eigen::Index row_of(GridIndex g, const SystemConfig& cfg) { return linear_index(g, cfg) - 1; }

/// Zero-based matrix column of UE antenna k. The single place the k <-> column
/// convention lives: column = k + half_k.
inline Eigen::Index column_of(int k, const SystemConfig& cfg) { return k + cfg.half_k(); }

struct RangeBounds {
    double r_min = 0.0;
    double r_max = 0.0;
};

/// Near-field distance interval of the RIS aperture: Fresnel distance
/// 0.62 * sqrt(D^3 / lambda) to Rayleigh distance 2 D^2 / lambda, where D is
/// the aperture diagonal.
inline RangeBounds near_field_bounds(const SystemConfig& cfg) {
    const double a = 2.0 * cfg.half_x() * cfg.d_x;
    const double b = 2.0 * cfg.half_y() * cfg.d_y;
    const double d2 = a * a + b * b;
    return {0.62 / std::sqrt(cfg.lambda) * std::pow(d2, 0.75), 2.0 * d2 / cfg.lambda};
}

/// Angular sampling box of the Monte Carlo protocol (degrees).
struct PoseSamplingRanges {
    double theta_min = 10.0, theta_max = 170.0;
    double phi_min = 10.0, phi_max = 80.0;
    double psi_min = 15.0, psi_max = 170.0;
    double gamma_min = 15.0, gamma_max = 80.0;
};

/// Uniform draw of a pose: angles inside the sampling box, r inside the
/// near-field interval. Draw order is r, theta, phi, psi, gamma.
inline Pose sample_pose(Rng& rng, const SystemConfig& cfg, const PoseSamplingRanges& box = {}) {
    const auto [r_min, r_max] = near_field_bounds(cfg);
    auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    Pose p;
    p.r = uni(r_min, r_max);
    p.theta = deg2rad(uni(box.theta_min, box.theta_max));
    p.phi = deg2rad(uni(box.phi_min, box.phi_max));
    p.psi = deg2rad(uni(box.psi_min, box.psi_max));
    p.gamma = deg2rad(uni(box.gamma_min, box.gamma_max));
    return p;
}

}  // namespace nfpose
