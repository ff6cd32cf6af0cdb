// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <random>

namespace nfpose {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

/// Caller-owned random stream. Every stochastic operation takes one by reference.
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kJ{0.0, 1.0};

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// dBm -> watts.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// e^{j*phase}
inline Complex cis(double phase) { return std::polar(1.0, phase); }

}  // namespace nfpose
