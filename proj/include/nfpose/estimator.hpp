// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form 5D pose estimation from a recovered UE-RIS channel.
//
// The recovered channel A_ddot (N x K) is mapped through three element-wise
// transforms that each isolate a subset of the pose:
//
//   B = A o (A F_K)          depends on r only (column shifts)
//   C = A o (F_N A^* F_K)    depends on (theta, phi) only (row shifts)
//   D = A o (F_N A^*)        depends on all five (row shifts, per column)
//
// Each shift relation "v = u * delta" is solved by a two-column total least
// squares fit, and the phase of delta is inverted in closed form.
//
// Conventions: row = linear_index(n, m) - 1 (n-major), column = k + half_k.

#include "nfpose/recovery.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfpose {

enum class Stage { Recovery, Distance, Direction, Orientation };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::Recovery: return "recovery";
        case Stage::Distance: return "distance";
        case Stage::Direction: return "direction";
        case Stage::Orientation: return "orientation";
    }
    return "unknown";
}

class EstimationError : public std::runtime_error {
public:
    EstimationError(Stage stage, const std::string& what)
        : std::runtime_error(std::string(to_string(stage)) + ": " + what), stage_(stage) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// [B]_{i,k} = [A]_{i,k} [A]_{i,-k}.
inline ComplexMatrix transform_B(const ComplexMatrix& a) {
    if (a.cols() % 2 == 0) throw std::invalid_argument("transform_B: K must be odd");
    return a.cwiseProduct(a.rowwise().reverse());
}

/// [C]_{i,k} = [A]_{i,k} conj([A]_{i_f,-k}), i_f the point-reflected element.
inline ComplexMatrix transform_C(const ComplexMatrix& a) { return a.cwiseProduct(a.reverse().conjugate()); }

/// [D]_{i,k} = [A]_{i,k} conj([A]_{i_f,k}).
inline ComplexMatrix transform_D(const ComplexMatrix& a) { return a.cwiseProduct(a.colwise().reverse().conjugate()); }

// ---------------------------------------------------------------------------
// TLS phase ratio
// ---------------------------------------------------------------------------

/// Total least squares solution of v ~= u * delta.
///
/// The null direction of [u | v] is the right singular vector of the
/// smallest singular value, (V12, V22); delta = -V12 / V22. Returns nullopt
/// when the pair is degenerate (a zero column or V22 = 0).
inline std::optional<Complex> tls_phase_ratio(const ComplexVector& u, const ComplexVector& v) {
    if (u.size() != v.size() || u.size() < 2)
        throw std::invalid_argument("tls_phase_ratio: vectors must have equal length >= 2");
    if (u.squaredNorm() == 0.0 || v.squaredNorm() == 0.0) return std::nullopt;
    Eigen::Matrix<Complex, Eigen::Dynamic, 2> pair(u.size(), 2);
    pair.col(0) = u;
    pair.col(1) = v;
    Eigen::JacobiSVD<Eigen::Matrix<Complex, Eigen::Dynamic, 2>> svd(pair, Eigen::ComputeFullV);
    const auto& vmat = svd.matrixV();
    const Complex v12 = vmat(0, 1);
    const Complex v22 = vmat(1, 1);
    if (std::abs(v22) <= 1e-14 * std::abs(v12) || std::abs(v22) == 0.0) return std::nullopt;
    return -v12 / v22;
}

// ---------------------------------------------------------------------------
// Row shift pairs
// ---------------------------------------------------------------------------

enum class Axis { X, Y };

/// Rows (i, i') of adjacent RIS elements along one axis. Along x the partner
/// is i + N_y; along y it is i + 1 inside each length-N_y block.
struct ShiftPairs {
    Axis axis = Axis::X;
    std::vector<Eigen::Index> kept_rows;
    std::vector<Eigen::Index> shifted_rows;
};

inline ShiftPairs shift_pairs(Axis axis, const SystemConfig& cfg) {
    ShiftPairs out;
    out.axis = axis;
    if (axis == Axis::X) {
        const Eigen::Index count = static_cast<Eigen::Index>(cfg.N_x - 1) * cfg.N_y;
        for (Eigen::Index i = 0; i < count; ++i) {
            out.kept_rows.push_back(i);
            out.shifted_rows.push_back(i + cfg.N_y);
        }
    } else {
        for (int x = 0; x < cfg.N_x; ++x) {
            for (int y = 0; y + 1 < cfg.N_y; ++y) {
                const Eigen::Index i = static_cast<Eigen::Index>(x) * cfg.N_y + y;
                out.kept_rows.push_back(i);
                out.shifted_rows.push_back(i + 1);
            }
        }
    }
    return out;
}

/// TLS ratio between the shifted and kept rows of one column.
inline std::optional<Complex> shift_ratio(const ComplexMatrix& m, const ShiftPairs& pairs, Eigen::Index col) {
    const ComplexVector u = m(pairs.kept_rows, col);
    const ComplexVector v = m(pairs.shifted_rows, col);
    return tls_phase_ratio(u, v);
}

/// Shifts `phase` by whole turns to the branch closest to `predicted`.
inline double unwrap_towards(double phase, double predicted) {
    return phase + 2.0 * kPi * std::round((predicted - phase) / (2.0 * kPi));
}

// ---------------------------------------------------------------------------
// Distance
// ---------------------------------------------------------------------------

struct DistanceEstimate {
    double r_hat = 0.0;
    double coarse_r = 0.0;
    /// Per adjacent-column pair (k, k+1), k = -half_k .. half_k-1. NaN when excluded.
    std::vector<double> per_k;
    std::vector<int> excluded_k;
};

/// Distance from column shifts of B: b_{k+1} = b_k exp(-j 2 pi (2k+1) d_u^2 / (lambda r)).
///
/// Pairs with |2k+1| = 1 carry an unambiguous phase inside the near field;
/// they give a coarse r that selects the 2 pi branch of every other pair
/// before the per-pair inversions are averaged.
inline DistanceEstimate estimate_distance(const ComplexMatrix& b, const SystemConfig& cfg) {
    if (cfg.K < 3 || b.cols() != cfg.K) throw std::invalid_argument("estimate_distance: K must be >= 3 and match B");
    const int hk = cfg.half_k();
    const double du2 = cfg.d_u * cfg.d_u;
    // phase_k = -(2 pi / lambda) (2k+1) d_u^2 / r   <=>   r = -2 pi (2k+1) d_u^2 / (lambda phase_k)
    auto invert = [&](int k, double phase) { return -2.0 * kPi * (2 * k + 1) * du2 / (cfg.lambda * phase); };

    std::vector<std::optional<double>> phases;
    for (int k = -hk; k < hk; ++k) {
        const auto delta = tls_phase_ratio(b.col(column_of(k, cfg)), b.col(column_of(k + 1, cfg)));
        if (delta && std::arg(*delta) != 0.0)
            phases.push_back(std::arg(*delta));
        else
            phases.push_back(std::nullopt);
    }
    auto phase_of = [&](int k) -> const std::optional<double>& { return phases[static_cast<size_t>(k + hk)]; };

    DistanceEstimate out;
    double coarse_sum = 0.0;
    int coarse_count = 0;
    for (int k : {0, -1}) {
        if (phase_of(k)) {
            coarse_sum += invert(k, *phase_of(k));
            ++coarse_count;
        }
    }
    if (coarse_count == 0) throw EstimationError(Stage::Distance, "both unambiguous column pairs are degenerate");
    out.coarse_r = coarse_sum / coarse_count;
    if (!(out.coarse_r > 0.0) || !std::isfinite(out.coarse_r))
        throw EstimationError(Stage::Distance, "coarse distance is not positive");

    double sum = 0.0;
    int used = 0;
    for (int k = -hk; k < hk; ++k) {
        const auto& phase = phase_of(k);
        if (!phase) {
            out.per_k.push_back(std::numeric_limits<double>::quiet_NaN());
            out.excluded_k.push_back(k);
            continue;
        }
        const double predicted = -2.0 * kPi * (2 * k + 1) * du2 / (cfg.lambda * out.coarse_r);
        const double r_k = invert(k, unwrap_towards(*phase, predicted));
        out.per_k.push_back(r_k);
        sum += r_k;
        ++used;
    }
    out.r_hat = sum / used;
    if (!(out.r_hat > 0.0) || !std::isfinite(out.r_hat))
        throw EstimationError(Stage::Distance, "distance estimate is not positive");
    return out;
}

// ---------------------------------------------------------------------------
// Direction
// ---------------------------------------------------------------------------

struct DirectionEstimate {
    double theta_hat = 0.0;
    double phi_hat = 0.0;
    Complex delta_ex_hat{1.0, 0.0};
    Complex delta_ey_hat{1.0, 0.0};
    double phi_cos_unclipped = 0.0;  // arccos argument before clipping to [0, 1]
};

/// Location direction from row shifts of C, which advance by
/// delta_ex = exp(j 4 pi d_x cos(theta) cos(phi) / lambda) along x and
/// delta_ey = exp(j 4 pi d_y sin(theta) cos(phi) / lambda) along y in every
/// column. The per-column complex ratios are averaged before taking phases.
inline DirectionEstimate estimate_direction(const ComplexMatrix& c, const SystemConfig& cfg) {
    if (cfg.N_x < 2 || cfg.N_y < 2) throw std::invalid_argument("estimate_direction: need N_x, N_y >= 2");
    const ShiftPairs px = shift_pairs(Axis::X, cfg);
    const ShiftPairs py = shift_pairs(Axis::Y, cfg);

    Complex sum_x{0.0, 0.0}, sum_y{0.0, 0.0};
    int nx = 0, ny = 0;
    for (Eigen::Index col = 0; col < c.cols(); ++col) {
        if (const auto dx = shift_ratio(c, px, col)) {
            sum_x += *dx;
            ++nx;
        }
        if (const auto dy = shift_ratio(c, py, col)) {
            sum_y += *dy;
            ++ny;
        }
    }
    if (nx == 0 || ny == 0) throw EstimationError(Stage::Direction, "TLS degenerate on every column");

    DirectionEstimate out;
    out.delta_ex_hat = sum_x / static_cast<double>(nx);
    out.delta_ey_hat = sum_y / static_cast<double>(ny);
    const double ux = std::arg(out.delta_ex_hat) / cfg.d_x;  // (4 pi / lambda) cos(theta) cos(phi)
    const double uy = std::arg(out.delta_ey_hat) / cfg.d_y;  // (4 pi / lambda) sin(theta) cos(phi)
    if (ux == 0.0 && uy == 0.0) throw EstimationError(Stage::Direction, "azimuth undefined (zero phase on both axes)");
    out.theta_hat = std::atan2(uy, ux);
    out.phi_cos_unclipped = cfg.lambda / (4.0 * kPi) * std::hypot(ux, uy);
    out.phi_hat = std::acos(std::clamp(out.phi_cos_unclipped, 0.0, 1.0));
    return out;
}

// ---------------------------------------------------------------------------
// Orientation
// ---------------------------------------------------------------------------

struct OrientationEstimate {
    double psi_hat = 0.0;
    double gamma_hat = 0.0;
    std::vector<int> used_k;
    std::vector<double> per_k_psi;
    std::vector<double> per_k_gamma;
    double max_gamma_cos_unclipped = 0.0;
};

/// Orientation from row shifts of D. In column k the x shift is
/// delta_ex * exp(j 4 pi k d_u d_x cos(psi) cos(gamma) / (lambda r)), so the
/// residual phase alpha_{x,k} after removing delta_ex is linear in k (same
/// along y). Phases for |k| > 1 are taken on the branch nearest k times the
/// slope seen at k = +-1.
inline OrientationEstimate estimate_orientation(const ComplexMatrix& d, Complex delta_ex_hat, Complex delta_ey_hat,
                                                double r_hat, const SystemConfig& cfg) {
    if (cfg.K < 3 || d.cols() != cfg.K) throw std::invalid_argument("estimate_orientation: K must be >= 3 and match D");
    if (!(r_hat > 0.0)) throw std::invalid_argument("estimate_orientation: r_hat must be positive");
    const int hk = cfg.half_k();
    const ShiftPairs px = shift_pairs(Axis::X, cfg);
    const ShiftPairs py = shift_pairs(Axis::Y, cfg);

    struct Alpha {
        int k;
        double x, y;
    };
    std::vector<Alpha> alphas;
    for (int k = -hk; k <= hk; ++k) {
        if (k == 0) continue;
        const Eigen::Index col = column_of(k, cfg);
        const auto gx = shift_ratio(d, px, col);
        const auto gy = shift_ratio(d, py, col);
        if (!gx || !gy) continue;
        alphas.push_back({k, std::arg(*gx / delta_ex_hat), std::arg(*gy / delta_ey_hat)});
    }
    if (alphas.empty()) throw EstimationError(Stage::Orientation, "TLS degenerate on every column");

    // Per-unit-k slope from the unambiguous columns k = +-1.
    double slope_x = 0.0, slope_y = 0.0;
    int slope_n = 0;
    for (const auto& a : alphas) {
        if (std::abs(a.k) == 1) {
            slope_x += a.k * a.x;
            slope_y += a.k * a.y;
            ++slope_n;
        }
    }
    if (slope_n > 0) {
        slope_x /= slope_n;
        slope_y /= slope_n;
        for (auto& a : alphas) {
            a.x = unwrap_towards(a.x, a.k * slope_x);
            a.y = unwrap_towards(a.y, a.k * slope_y);
        }
    }

    OrientationEstimate out;
    double psi_sum = 0.0, gamma_sum = 0.0;
    for (const auto& a : alphas) {
        const double sign = a.k > 0 ? 1.0 : -1.0;
        const double ux = sign * a.x / cfg.d_x;
        const double uy = sign * a.y / cfg.d_y;
        const double psi_k = std::atan2(uy, ux);
        const double arg = cfg.lambda * r_hat / (4.0 * kPi * std::abs(a.k) * cfg.d_u) * std::hypot(ux, uy);
        const double gamma_k = std::acos(std::clamp(arg, 0.0, 1.0));
        out.used_k.push_back(a.k);
        out.per_k_psi.push_back(psi_k);
        out.per_k_gamma.push_back(gamma_k);
        out.max_gamma_cos_unclipped = std::max(out.max_gamma_cos_unclipped, arg);
        psi_sum += psi_k;
        gamma_sum += gamma_k;
    }
    out.psi_hat = psi_sum / static_cast<double>(alphas.size());
    out.gamma_hat = gamma_sum / static_cast<double>(alphas.size());
    return out;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct PoseEstimate {
    double r_hat = 0.0;
    double theta_hat = 0.0;
    double phi_hat = 0.0;
    double psi_hat = 0.0;
    double gamma_hat = 0.0;

    std::vector<double> per_k_distance;
    Complex delta_ex_hat{1.0, 0.0};
    Complex delta_ey_hat{1.0, 0.0};
    double phi_cos_unclipped = 0.0;
    double max_gamma_cos_unclipped = 0.0;

    /// Stage that failed, if any. Stages before it keep their results.
    std::optional<Stage> failed_stage;
    std::string failure;

    bool ok() const { return !failed_stage.has_value(); }
    Pose pose() const { return {r_hat, theta_hat, phi_hat, psi_hat, gamma_hat}; }
};

/// Runs the distance, direction and orientation stages on a recovered channel.
inline PoseEstimate estimate_pose_from_channel(const ComplexMatrix& addot, const SystemConfig& cfg) {
    PoseEstimate est;
    Stage stage = Stage::Distance;
    try {
        const DistanceEstimate dist = estimate_distance(transform_B(addot), cfg);
        est.r_hat = dist.r_hat;
        est.per_k_distance = dist.per_k;

        stage = Stage::Direction;
        const DirectionEstimate dir = estimate_direction(transform_C(addot), cfg);
        est.theta_hat = dir.theta_hat;
        est.phi_hat = dir.phi_hat;
        est.delta_ex_hat = dir.delta_ex_hat;
        est.delta_ey_hat = dir.delta_ey_hat;
        est.phi_cos_unclipped = dir.phi_cos_unclipped;

        stage = Stage::Orientation;
        const OrientationEstimate ori =
            estimate_orientation(transform_D(addot), dir.delta_ex_hat, dir.delta_ey_hat, dist.r_hat, cfg);
        est.psi_hat = ori.psi_hat;
        est.gamma_hat = ori.gamma_hat;
        est.max_gamma_cos_unclipped = ori.max_gamma_cos_unclipped;
    } catch (const EstimationError& e) {
        est.failed_stage = e.stage();
        est.failure = e.what();
    } catch (const std::exception& e) {
        est.failed_stage = stage;
        est.failure = std::string(to_string(stage)) + ": " + e.what();
    }
    return est;
}

inline PoseEstimate estimate_pose(const ComplexMatrix& y, const MeasurementInverse& inverse, const SystemConfig& cfg) {
    RecoveredChannel rec;
    try {
        rec = recover_channel(y, inverse);
    } catch (const std::exception& e) {
        PoseEstimate est;
        est.failed_stage = Stage::Recovery;
        est.failure = std::string("recovery: ") + e.what();
        return est;
    }
    return estimate_pose_from_channel(rec.Addot, cfg);
}

/// Full pipeline from stacked observations: recover A_ddot, then distance,
/// direction and orientation.
inline PoseEstimate estimate_pose(const ComplexMatrix& y, const ComplexMatrix& hbar, const ComplexMatrix& s,
                                  const SystemConfig& cfg, bool structured_pinv = true) {
    MeasurementInverse inverse;
    try {
        inverse = {pinv_hbar(hbar, cfg, structured_pinv), pinv_pilot(s)};
    } catch (const std::exception& e) {
        PoseEstimate est;
        est.failed_stage = Stage::Recovery;
        est.failure = std::string("recovery: ") + e.what();
        return est;
    }
    return estimate_pose(y, inverse, cfg);
}

}  // namespace nfpose
