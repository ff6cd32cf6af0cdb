// SPDX-License-Identifier: Apache-2.0
#pragma once

// Self-check suite behind `nfpose validate`: algebraic identities of the
// channel model and transforms, measurement-operator structure, and
// zero-noise recovery of known poses, all at small dimensions.

#include "nfpose/montecarlo.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace nfpose {

struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;      // largest observed deviation
    double tolerance = 0.0;
};

struct ValidationOptions {
    /// Flips the sign of the expected distance shift phase. Exists only to
    /// demonstrate that the suite catches a wrong closed form.
    bool inject_distance_sign_error = false;
};

/// Closed-form shift factors of the noiseless Fresnel-model transforms.
struct ShiftFactors {
    std::vector<Complex> distance;  // b_{k+1} / b_k, k = -half_k .. half_k-1
    Complex ex, ey;                  // C row shifts along x and y
    std::vector<Complex> gx, gy;     // D row shifts in column k = -half_k .. half_k
};

inline ShiftFactors shift_factors(const Pose& p, const SystemConfig& cfg, bool flip_distance_sign = false) {
    const int hk = cfg.half_k();
    const double sign = flip_distance_sign ? 1.0 : -1.0;
    const double four_pi_over_lambda = 4.0 * kPi / cfg.lambda;
    ShiftFactors f;
    for (int k = -hk; k < hk; ++k)
        f.distance.push_back(cis(sign * 2.0 * kPi * (2 * k + 1) * cfg.d_u * cfg.d_u / (cfg.lambda * p.r)));
    f.ex = cis(four_pi_over_lambda * cfg.d_x * std::cos(p.theta) * std::cos(p.phi));
    f.ey = cis(four_pi_over_lambda * cfg.d_y * std::sin(p.theta) * std::cos(p.phi));
    for (int k = -hk; k <= hk; ++k) {
        const double scale = four_pi_over_lambda * k * cfg.d_u / p.r * std::cos(p.gamma);
        f.gx.push_back(f.ex * cis(scale * cfg.d_x * std::cos(p.psi)));
        f.gy.push_back(f.ey * cis(scale * cfg.d_y * std::sin(p.psi)));
    }
    return f;
}

namespace detail {

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() ? (a - b).cwiseAbs().maxCoeff()
                                                        : std::numeric_limits<double>::infinity();
}

inline double row_shift_error(const ComplexMatrix& m, const ShiftPairs& pairs, Eigen::Index col, Complex factor) {
    double worst = 0.0;
    for (size_t i = 0; i < pairs.kept_rows.size(); ++i)
        worst = std::max(worst, std::abs(m(pairs.shifted_rows[i], col) - m(pairs.kept_rows[i], col) * factor));
    return worst;
}

}  // namespace detail

inline std::vector<CheckResult> run_validation(const ValidationOptions& opt = {}) {
    std::vector<CheckResult> out;
    auto record = [&out](std::string name, double worst, double tol) {
        out.push_back({std::move(name), worst <= tol, worst, tol});
    };
    const std::vector<Pose> poses = {
        {1.8, deg2rad(60), deg2rad(40), deg2rad(120), deg2rad(30)},
        {3.2, deg2rad(135), deg2rad(25), deg2rad(40), deg2rad(70)},
        {5.0, deg2rad(20), deg2rad(70), deg2rad(160), deg2rad(50)},
    };

    for (int side : {7, 11}) {
        for (int k_count : {7, 11}) {
            SystemConfig cfg;
            cfg.N_x = cfg.N_y = side;
            cfg.P = cfg.N();
            cfg.K = k_count;
            const std::string tag = " [N=" + std::to_string(cfg.N()) + ",K=" + std::to_string(cfg.K) + "]";
            const ShiftPairs px = shift_pairs(Axis::X, cfg);
            const ShiftPairs py = shift_pairs(Axis::Y, cfg);

            double unit = 0.0, dist = 0.0, cx = 0.0, cy = 0.0, dx = 0.0, dy = 0.0, sym = 0.0;
            for (const Pose& p : poses) {
                const ComplexMatrix a = ris_ue_channel(p, cfg, ChannelMode::Fresnel);
                const ComplexMatrix a_exact = ris_ue_channel(p, cfg, ChannelMode::Exact);
                unit = std::max({unit, (a.cwiseAbs().array() - 1.0).abs().maxCoeff(),
                                 (a_exact.cwiseAbs().array() - 1.0).abs().maxCoeff()});
                const ShiftFactors f = shift_factors(p, cfg, opt.inject_distance_sign_error);
                const ComplexMatrix b = transform_B(a), c = transform_C(a), d = transform_D(a);
                for (int k = -cfg.half_k(); k < cfg.half_k(); ++k) {
                    const auto idx = static_cast<size_t>(k + cfg.half_k());
                    dist = std::max(dist, (b.col(column_of(k + 1, cfg)) - b.col(column_of(k, cfg)) * f.distance[idx])
                                              .cwiseAbs()
                                              .maxCoeff());
                }
                for (Eigen::Index col = 0; col < cfg.K; ++col) {
                    cx = std::max(cx, detail::row_shift_error(c, px, col, f.ex));
                    cy = std::max(cy, detail::row_shift_error(c, py, col, f.ey));
                    dx = std::max(dx, detail::row_shift_error(d, px, col, f.gx[static_cast<size_t>(col)]));
                    dy = std::max(dy, detail::row_shift_error(d, py, col, f.gy[static_cast<size_t>(col)]));
                }
                sym = std::max({sym, detail::max_abs_diff(b.rowwise().reverse(), b),
                                detail::max_abs_diff(c.conjugate().reverse(), c),
                                detail::max_abs_diff(d.conjugate().colwise().reverse(), d)});
            }
            record("channel entries unit modulus" + tag, unit, 1e-12);
            record("distance shift identity (B columns)" + tag, dist, 1e-12);
            record("x shift identity (C rows)" + tag, cx, 1e-12);
            record("y shift identity (C rows)" + tag, cy, 1e-12);
            record("x shift identity (D rows)" + tag, dx, 1e-12);
            record("y shift identity (D rows)" + tag, dy, 1e-12);
            record("flip symmetries B F_K = B, F_N C* F_K = C, F_N D* = D" + tag, sym, 1e-12);

            // Index maps.
            int bad = 0;
            std::vector<bool> hit(static_cast<size_t>(cfg.N() + 1), false);
            for (int n = -cfg.half_x(); n <= cfg.half_x(); ++n) {
                for (int m = -cfg.half_y(); m <= cfg.half_y(); ++m) {
                    const int i = linear_index({n, m}, cfg);
                    if (hit[static_cast<size_t>(i)]) ++bad;
                    hit[static_cast<size_t>(i)] = true;
                    if (flipped_index({n, m}, cfg) != linear_index({-n, -m}, cfg)) ++bad;
                }
            }
            record("linear index bijection and flip map" + tag, bad, 0.0);
        }
    }

    // Measurement operator at N = 49.
    SystemConfig cfg;
    cfg.N_x = cfg.N_y = 7;
    cfg.K = 7;
    for (int mult : {1, 2}) {
        cfg.P = mult * cfg.N();
        const ComplexMatrix phi = ris_profiles(cfg);
        const ComplexMatrix gram = phi.adjoint() * phi;
        record("Phi^H Phi = P I (P=" + std::to_string(cfg.P) + ")",
               detail::max_abs_diff(gram, cfg.P * ComplexMatrix::Identity(cfg.N(), cfg.N())), 1e-9);
    }
    cfg.P = cfg.N();
    const ComplexMatrix s = pilot_matrix(cfg);
    record("S S^H = (P_T/K) I",
           detail::max_abs_diff(s * s.adjoint(), cfg.P_T / cfg.K * ComplexMatrix::Identity(cfg.K, cfg.K)), 1e-12);

    double pinv_gap = 0.0, recover_gap = 0.0, invariance_gap = 0.0;
    const ComplexMatrix h = ris_bs_channel(cfg);
    const ComplexMatrix hbar = khatri_rao(ris_profiles(cfg), h);
    const ComplexMatrix fast = pinv_hbar(hbar, cfg, true);
    pinv_gap = detail::max_abs_diff(fast, pinv_hbar(hbar, cfg, false));
    record("structured pinv(Hbar) matches SVD pinv", pinv_gap, 1e-10);

    SystemConfig other = cfg;
    other.theta_B = deg2rad(-55.0);
    other.theta_R = deg2rad(110.0);
    other.phi_R = deg2rad(15.0);
    const ComplexMatrix hbar_other = khatri_rao(ris_profiles(other), ris_bs_channel(other));
    const ComplexMatrix pinv_other = pinv_hbar(hbar_other, other, true);
    Rng rng(7);
    for (const Pose& p : poses) {
        for (ChannelMode mode : {ChannelMode::Fresnel, ChannelMode::Exact}) {
            const ComplexMatrix a = ris_ue_channel(p, cfg, mode);
            const ComplexMatrix y = observe_stacked(hbar, a, s, 0.0, rng);
            recover_gap = std::max(recover_gap, detail::max_abs_diff(recover_channel(y, hbar, s, cfg).Addot, a));
            invariance_gap = std::max(invariance_gap, detail::max_abs_diff(fast * hbar * a, pinv_other * hbar_other * a));
        }
    }
    record("noiseless recovery reproduces A", recover_gap, 1e-10);
    record("recovery invariant to far-field BS/RIS angles", invariance_gap, 1e-9);

    // Zero-noise end-to-end oracle.
    cfg = SystemConfig{};
    const TrialContext ctx(cfg);
    double pose_gap = 0.0;
    for (const Pose& p : poses) {
        const TrialResult res = run_trial(ctx, p, std::numeric_limits<double>::infinity(), ChannelMode::Fresnel, rng);
        if (res.failed) {
            pose_gap = std::numeric_limits<double>::infinity();
            continue;
        }
        const Pose e = res.estimate.pose();
        pose_gap = std::max({pose_gap, std::abs(e.r - p.r) / p.r, std::abs(e.theta - p.theta),
                             std::abs(e.phi - p.phi), std::abs(e.psi - p.psi), std::abs(e.gamma - p.gamma)});
    }
    record("zero-noise Fresnel pose recovery [N=121,K=11]", pose_gap, 1e-6);
    return out;
}

}  // namespace nfpose
