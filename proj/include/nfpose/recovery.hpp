// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nfpose/channel.hpp"

#include <Eigen/SVD>

#include <stdexcept>
#include <string>

namespace nfpose {

/// Thrown when a measurement operator cannot be inverted.
class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Moore-Penrose pseudo-inverse of a full-column-rank matrix via SVD.
/// Singular values below 1e-12 * sigma_max count as zero; any such value
/// means the operator does not have full column rank and is rejected.
inline ComplexMatrix pinv_full_column_rank(const ComplexMatrix& m) {
    if (m.rows() < m.cols())
        throw RankDeficientError("pinv: " + std::to_string(m.rows()) + " rows cannot have column rank " +
                                 std::to_string(m.cols()));
    Eigen::BDCSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * sv(0);
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (!(sv(i) > tol)) throw RankDeficientError("pinv: rank deficient at singular value " + std::to_string(i));
    }
    return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
}

/// True when Phi^H Phi = P I_N holds for the DFT profiles, i.e. P is a whole
/// number of DFT periods.
inline bool has_orthogonal_profiles(const SystemConfig& cfg) { return cfg.P % cfg.N() == 0; }

/// Left inverse of the stacked operator Hbar = Phi o H (MP x N).
///
/// With `structured` set and orthogonal profiles, Hbar^H Hbar = P M I_N
/// (unit-modulus H), so the inverse is Hbar^H / (P M). Otherwise the generic
/// SVD path is used.
inline ComplexMatrix pinv_hbar(const ComplexMatrix& hbar, const SystemConfig& cfg, bool structured) {
    if (cfg.P < cfg.N()) throw RankDeficientError("pinv_hbar: P < N, stacked operator cannot have full column rank");
    if (hbar.rows() != static_cast<Eigen::Index>(cfg.M) * cfg.P || hbar.cols() != cfg.N())
        throw std::invalid_argument("pinv_hbar: operator shape does not match configuration");
    if (structured && has_orthogonal_profiles(cfg))
        return hbar.adjoint() / (static_cast<double>(cfg.P) * cfg.M);
    return pinv_full_column_rank(hbar);
}

/// Right inverse of the pilot block, S^H (S S^H)^{-1}. For the DFT pilots
/// this equals (K / P_T) S^H.
inline ComplexMatrix pinv_pilot(const ComplexMatrix& s) {
    if (s.cols() < s.rows()) throw RankDeficientError("pinv_pilot: L < K");
    const ComplexMatrix gram = s * s.adjoint();
    Eigen::LDLT<ComplexMatrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw RankDeficientError("pinv_pilot: S S^H singular");
    return s.adjoint() * ldlt.solve(ComplexMatrix::Identity(s.rows(), s.rows()));
}

struct RecoveredChannel {
    ComplexMatrix Addot;  // N x K, A plus filtered noise
    /// Standard deviation of an entry of the filtered noise per unit of
    /// observation noise sigma (RMS row norm of pinv(Hbar) times RMS column
    /// norm of pinv(S)).
    double residual_noise_scale = 0.0;
};

/// Known-operator inversions reused across many observations of one configuration.
struct MeasurementInverse {
    ComplexMatrix left;   // pinv(Hbar), N x MP
    ComplexMatrix right;  // pinv(S), L x K

    double noise_scale() const {
        const double row = std::sqrt(left.rowwise().squaredNorm().mean());
        const double col = std::sqrt(right.colwise().squaredNorm().mean());
        return row * col;
    }
};

inline RecoveredChannel recover_channel(const ComplexMatrix& y, const MeasurementInverse& inv) {
    if (y.rows() != inv.left.cols() || y.cols() != inv.right.rows())
        throw std::invalid_argument("recover_channel: observation shape does not match operators");
    return {inv.left * y * inv.right, inv.noise_scale()};
}

/// A_ddot = pinv(Hbar) Y pinv(S).
inline RecoveredChannel recover_channel(const ComplexMatrix& y, const ComplexMatrix& hbar, const ComplexMatrix& s,
                                        const SystemConfig& cfg, bool structured = true) {
    return recover_channel(y, MeasurementInverse{pinv_hbar(hbar, cfg, structured), pinv_pilot(s)});
}

}  // namespace nfpose
