// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nfpose/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nfpose {

/// How UE-RIS path lengths are evaluated when synthesising A.
///  - Exact:   Euclidean distance between antenna and element.
///  - Fresnel: second-order expansion about the array centre. The estimator's
///             shift identities hold exactly for this model.
enum class ChannelMode { Exact, Fresnel };

inline const char* to_string(ChannelMode m) { return m == ChannelMode::Exact ? "exact" : "fresnel"; }

inline ChannelMode parse_channel_mode(const std::string& s) {
    if (s == "exact") return ChannelMode::Exact;
    if (s == "fresnel") return ChannelMode::Fresnel;
    throw std::invalid_argument("unknown channel mode '" + s + "' (expected exact|fresnel)");
}

/// Excess path length r^k_{n,m} - r between UE antenna k and RIS element s.
inline double excess_path_length(const Pose& pose, int k, const Vec3& s, const SystemConfig& cfg, ChannelMode mode) {
    if (mode == ChannelMode::Exact) {
        return (ue_antenna_position(pose, k, cfg) - s).norm() - pose.r;
    }
    const Vec3 e = unit_direction(pose.theta, pose.phi);
    const Vec3 g = unit_direction(pose.psi, pose.gamma);
    const double kd = k * cfg.d_u;
    return (kd * kd + s.squaredNorm()) / (2.0 * pose.r) + kd * (e.dot(g) - g.dot(s) / pose.r) - e.dot(s);
}

/// UE -> RIS line-of-sight channel A (N x K). Row = linear_index(n,m) - 1,
/// column = k + half_k; entry exp(-j 2 pi (r^k_{n,m} - r) / lambda).
inline ComplexMatrix ris_ue_channel(const Pose& pose, const SystemConfig& cfg, ChannelMode mode) {
    const int hk = cfg.half_k();
    ComplexMatrix a(cfg.N(), cfg.K);
    for (int n = -cfg.half_x(); n <= cfg.half_x(); ++n) {
        for (int m = -cfg.half_y(); m <= cfg.half_y(); ++m) {
            const GridIndex g{n, m};
            const Vec3 s = ris_element_position(g, cfg);
            const Eigen::Index row = row_of(g, cfg);
            for (int k = -hk; k <= hk; ++k) {
                const double excess = excess_path_length(pose, k, s, cfg, mode);
                a(row, column_of(k, cfg)) = cis(-2.0 * kPi * excess / cfg.lambda);
            }
        }
    }
    return a;
}

/// Centred far-field steering vector h(T, zeta): entry t is
/// exp(j 2 pi ((T-1)/2 - t) zeta / lambda), so the middle entry is 1.
inline ComplexVector steering_vector(int size, double zeta, double lambda) {
    ComplexVector h(size);
    const double centre = (size - 1) / 2.0;
    for (int t = 0; t < size; ++t) h(t) = cis(2.0 * kPi * (centre - t) * zeta / lambda);
    return h;
}

/// RIS -> BS far-field channel H = h_b (h_rx kron h_ry)^H, M x N, rank one.
inline ComplexMatrix ris_bs_channel(const SystemConfig& cfg) {
    const ComplexVector hb = steering_vector(cfg.M, cfg.d_b * std::sin(cfg.theta_B), cfg.lambda);
    const ComplexVector hx =
        steering_vector(cfg.N_x, cfg.d_x * std::cos(cfg.theta_R) * std::cos(cfg.phi_R), cfg.lambda);
    const ComplexVector hy =
        steering_vector(cfg.N_y, cfg.d_y * std::sin(cfg.theta_R) * std::cos(cfg.phi_R), cfg.lambda);
    ComplexVector hr(cfg.N());
    for (int x = 0; x < cfg.N_x; ++x) hr.segment(x * cfg.N_y, cfg.N_y) = hx(x) * hy;
    return hb * hr.adjoint();
}

/// DFT phase profiles, [Phi]_{p,i} = exp(-j 2 pi (p-1)(i-1) / N), P x N.
inline ComplexMatrix ris_profiles(const SystemConfig& cfg) {
    const int n = cfg.N();
    if (cfg.P < n) throw std::invalid_argument("ris_profiles: P must be >= N");
    ComplexMatrix phi(cfg.P, n);
    for (int p = 0; p < cfg.P; ++p) {
        for (int i = 0; i < n; ++i) {
            // Reduce the exponent modulo N before scaling so large P keeps full precision.
            const long long e = (static_cast<long long>(p) * i) % n;
            phi(p, i) = cis(-2.0 * kPi * static_cast<double>(e) / n);
        }
    }
    return phi;
}

/// Pilot block S (K x L): first K rows of the L-point DFT scaled so that
/// S S^H = (P_T / K) I_K.
inline ComplexMatrix pilot_matrix(const SystemConfig& cfg) {
    if (cfg.L < cfg.K) throw std::invalid_argument("pilot_matrix: L must be >= K");
    const double scale = std::sqrt(cfg.P_T / (static_cast<double>(cfg.K) * cfg.L));
    ComplexMatrix s(cfg.K, cfg.L);
    for (int k = 0; k < cfg.K; ++k) {
        for (int l = 0; l < cfg.L; ++l) {
            const long long e = (static_cast<long long>(k) * l) % cfg.L;
            s(k, l) = scale * cis(-2.0 * kPi * static_cast<double>(e) / cfg.L);
        }
    }
    return s;
}

/// Column-wise Kronecker product. Block row p of the result is H diag(Phi(p,:)).
inline ComplexMatrix khatri_rao(const ComplexMatrix& phi, const ComplexMatrix& h) {
    if (phi.cols() != h.cols())
        throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(phi.cols()) + " vs " +
                                    std::to_string(h.cols()) + ")");
    const Eigen::Index rows = h.rows();
    ComplexMatrix out(phi.rows() * rows, phi.cols());
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
        for (Eigen::Index p = 0; p < phi.rows(); ++p) out.col(i).segment(p * rows, rows) = phi(p, i) * h.col(i);
    }
    return out;
}

/// Noise standard deviation (per complex entry) that realises the requested
/// SNR for a noiseless observation block, where SNR is the mean received
/// signal power per scalar observation over the noise variance:
/// sigma^2 = ||signal||_F^2 / (entries * 10^{snr/10}). snr_db = +inf yields 0.
inline double noise_sigma_for_signal(const ComplexMatrix& signal, double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    const double power = signal.squaredNorm();
    if (!(power > 0.0)) throw std::invalid_argument("noise_sigma_for_snr: zero signal");
    const double entries = static_cast<double>(signal.rows()) * static_cast<double>(signal.cols());
    return std::sqrt(power / (entries * std::pow(10.0, snr_db / 10.0)));
}

/// Same as noise_sigma_for_signal with signal = Hbar A S (MP x L entries).
inline double noise_sigma_for_snr(const ComplexMatrix& hbar, const ComplexMatrix& a, const ComplexMatrix& s,
                                  double snr_db) {
    return noise_sigma_for_signal(hbar * (a * s), snr_db);
}

/// Adds i.i.d. circular complex Gaussian noise of variance sigma^2 per entry,
/// drawn row by row (real part then imaginary part). Row order keeps the
/// noise of the first P blocks identical when the same stream feeds a taller Y.
inline void add_noise(ComplexMatrix& y, double sigma, Rng& rng) {
    if (sigma == 0.0) return;
    std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(2.0));
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            y(r, c) += Complex(re, im);
        }
    }
}

/// Stacked observations Y = Hbar A S + noise, with Hbar precomputed.
inline ComplexMatrix observe_stacked(const ComplexMatrix& hbar, const ComplexMatrix& a, const ComplexMatrix& s,
                                     double sigma, Rng& rng) {
    ComplexMatrix y = hbar * (a * s);
    add_noise(y, sigma, rng);
    return y;
}

/// Received signal over all P configurations, MP x L; block p is
/// H Omega_p A S + W_p.
inline ComplexMatrix observe(const ComplexMatrix& a, const ComplexMatrix& h, const ComplexMatrix& phi,
                             const ComplexMatrix& s, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("observe: sigma must be nonnegative");
    return observe_stacked(khatri_rao(phi, h), a, s, sigma, rng);
}

}  // namespace nfpose
