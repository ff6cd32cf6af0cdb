// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nfpose/estimator.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace nfpose {

inline constexpr std::array<const char*, 5> kParamNames = {"r", "theta", "phi", "psi", "gamma"};

inline std::array<double, 5> as_array(const Pose& p) { return {p.r, p.theta, p.phi, p.psi, p.gamma}; }

/// Outcome of one synthetic measurement + estimation.
struct TrialResult {
    Pose pose;
    PoseEstimate estimate;
    /// ((x_hat - x) / x)^2 for r, theta, phi, psi, gamma (angles in radians).
    std::array<double, 5> squared_relative_error{};
    bool failed = false;
    std::string stage;  // failing stage label, empty on success
};

/// Everything about one configuration that does not change between trials.
struct TrialContext {
    SystemConfig cfg;
    ComplexMatrix H, Phi, S, Hbar;
    MeasurementInverse inverse;

    explicit TrialContext(const SystemConfig& c, bool structured_pinv = true) : cfg(c) {
        cfg.validate();
        H = ris_bs_channel(cfg);
        Phi = ris_profiles(cfg);
        S = pilot_matrix(cfg);
        Hbar = khatri_rao(Phi, H);
        inverse = {pinv_hbar(Hbar, cfg, structured_pinv), pinv_pilot(S)};
    }
};

inline std::array<double, 5> squared_relative_errors(const Pose& truth, const Pose& est) {
    const auto t = as_array(truth);
    const auto e = as_array(est);
    std::array<double, 5> out{};
    for (size_t i = 0; i < 5; ++i) {
        const double rel = (e[i] - t[i]) / t[i];
        out[i] = rel * rel;
    }
    return out;
}

/// One trial: synthesise A for `pose`, pick sigma for `snr_db` (+inf means
/// noiseless), observe, estimate. Failures are recorded, never thrown.
inline TrialResult run_trial(const TrialContext& ctx, const Pose& pose, double snr_db, ChannelMode mode, Rng& rng) {
    TrialResult res;
    res.pose = pose;
    const ComplexMatrix a = ris_ue_channel(pose, ctx.cfg, mode);
    ComplexMatrix y = ctx.Hbar * (a * ctx.S);
    add_noise(y, noise_sigma_for_signal(y, snr_db), rng);
    res.estimate = estimate_pose(y, ctx.inverse, ctx.cfg);
    if (!res.estimate.ok()) {
        res.failed = true;
        res.stage = to_string(*res.estimate.failed_stage);
        res.squared_relative_error.fill(0.0);
        return res;
    }
    res.squared_relative_error = squared_relative_errors(pose, res.estimate.pose());
    for (double v : res.squared_relative_error) {
        if (!std::isfinite(v)) {
            res.failed = true;
            res.stage = "nonfinite";
            res.squared_relative_error.fill(0.0);
            break;
        }
    }
    return res;
}

inline TrialResult run_trial(const SystemConfig& cfg, const Pose& pose, double snr_db, ChannelMode mode, Rng& rng) {
    return run_trial(TrialContext(cfg), pose, snr_db, mode, rng);
}

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t stream, std::uint64_t trial) { return splitmix64(stream ^ splitmix64(trial)); }

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// One-dimensional sweep around the base settings. Variables: snr_db, N
/// (square RIS, N_x = N_y = sqrt(N)), K, P. For P, `per_n` interprets values
/// as multiples of N.
struct SweepAxis {
    std::string variable;
    std::vector<double> values;
    bool per_n = false;
};

struct SweepSettings {
    SystemConfig base;
    double snr_db = 15.0;
    ChannelMode mode = ChannelMode::Fresnel;
    int trials = 200;
    std::uint64_t master_seed = 1;
    /// P = p_per_n * N whenever N changes; 0 keeps P absolute (raised to N if smaller).
    int p_per_n = 1;
    std::optional<Pose> fixed_pose;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct NmseRow {
    std::string sweep_var;
    double sweep_value = 0.0;
    std::string param;
    double nmse = 0.0;
    int trials = 0;
    int failures = 0;
    std::uint64_t seed = 0;
};

struct NmseTable {
    std::vector<NmseRow> rows;
};

/// Configuration and SNR at one grid point.
struct GridPoint {
    SystemConfig cfg;
    double snr_db = 0.0;
};

inline GridPoint apply_sweep_value(const SweepSettings& s, const SweepAxis& axis, double value) {
    GridPoint gp{s.base, s.snr_db};
    const auto as_int = [&](double v) {
        const double r = std::round(v);
        if (std::abs(r - v) > 1e-9) throw std::invalid_argument(axis.variable + " sweep value must be an integer");
        return static_cast<int>(r);
    };
    if (axis.variable == "snr_db") {
        gp.snr_db = value;
    } else if (axis.variable == "N") {
        const int n = as_int(value);
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
        if (side * side != n || side % 2 == 0)
            throw std::invalid_argument("N sweep value " + std::to_string(n) + " is not the square of an odd integer");
        gp.cfg.N_x = gp.cfg.N_y = side;
        gp.cfg.P = s.p_per_n > 0 ? s.p_per_n * n : n;
    } else if (axis.variable == "K") {
        gp.cfg.K = as_int(value);
    } else if (axis.variable == "P") {
        gp.cfg.P = axis.per_n ? as_int(value) * gp.cfg.N() : as_int(value);
    } else {
        throw std::invalid_argument("unknown sweep variable '" + axis.variable + "'");
    }
    gp.cfg.validate();
    return gp;
}

/// Value written to the sweep_value column (absolute P for per-N axes).
inline double reported_value(const SweepAxis& axis, const GridPoint& gp, double value) {
    if (axis.variable == "P") return gp.cfg.P;
    return value;
}

/// Seeds of the pose and noise streams shared by every grid point of a sweep.
inline std::uint64_t pose_stream_seed(std::uint64_t master) { return splitmix64(master ^ 0x706F73655F736571ULL); }
inline std::uint64_t noise_stream_seed(std::uint64_t master) { return splitmix64(master ^ 0x6E6F6973655F7371ULL); }

/// Runs `trials` trials at one grid point. Trial t draws its pose from
/// trial_seed(pose_stream_seed(master), t) and its noise from
/// trial_seed(noise_stream_seed(master), t), the same at every grid point
/// (common random numbers), so differences between points reflect the swept
/// variable rather than resampling. Results never depend on evaluation order.
inline std::vector<TrialResult> run_point(const GridPoint& gp, const SweepSettings& s) {
    const TrialContext ctx(gp.cfg);
    std::vector<TrialResult> results(static_cast<size_t>(s.trials));
    const std::uint64_t pose_seed = pose_stream_seed(s.master_seed);
    const std::uint64_t noise_seed = noise_stream_seed(s.master_seed);
    auto one = [&](size_t t) {
        Rng pose_rng(trial_seed(pose_seed, t));
        Rng noise_rng(trial_seed(noise_seed, t));
        const Pose pose = s.fixed_pose ? *s.fixed_pose : sample_pose(pose_rng, gp.cfg);
        results[t] = run_trial(ctx, pose, gp.snr_db, s.mode, noise_rng);
    };
    unsigned workers = s.threads ? s.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(results.size()));
    if (workers <= 1) {
        for (size_t t = 0; t < results.size(); ++t) one(t);
        return results;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t t = next++; t < results.size(); t = next++) one(t);
        });
    }
    for (auto& th : pool) th.join();
    return results;
}

/// NMSE per parameter over non-failed trials (sums taken in trial order).
inline std::array<double, 5> nmse_of(const std::vector<TrialResult>& results, int* failures = nullptr) {
    std::array<double, 5> sum{};
    int ok = 0, failed = 0;
    for (const auto& r : results) {
        if (r.failed) {
            ++failed;
            continue;
        }
        for (size_t i = 0; i < 5; ++i) sum[i] += r.squared_relative_error[i];
        ++ok;
    }
    if (failures) *failures = failed;
    for (auto& v : sum) v = ok ? v / ok : std::numeric_limits<double>::quiet_NaN();
    return sum;
}

inline NmseTable run_sweep(const SweepSettings& s, const std::vector<SweepAxis>& grid) {
    if (grid.empty()) throw std::invalid_argument("run_sweep: empty grid");
    if (s.trials < 1) throw std::invalid_argument("run_sweep: trials must be positive");
    NmseTable table;
    for (const auto& axis : grid) {
        if (axis.values.empty()) throw std::invalid_argument("run_sweep: axis '" + axis.variable + "' has no values");
        for (double value : axis.values) {
            const GridPoint gp = apply_sweep_value(s, axis, value);
            const auto results = run_point(gp, s);
            int failures = 0;
            const auto nmse = nmse_of(results, &failures);
            for (size_t i = 0; i < 5; ++i) {
                table.rows.push_back({axis.variable, reported_value(axis, gp, value), kParamNames[i], nmse[i], s.trials,
                                      failures, s.master_seed});
            }
        }
    }
    return table;
}

/// Looks up the NMSE of `param` at (`var`, `value`). NaN if absent.
inline double lookup_nmse(const NmseTable& t, const std::string& var, double value, const std::string& param) {
    for (const auto& r : t.rows)
        if (r.sweep_var == var && r.sweep_value == value && r.param == param) return r.nmse;
    return std::numeric_limits<double>::quiet_NaN();
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr const char* kCsvHeader = "sweep_var,sweep_value,param,nmse,trials,failures,seed";

/// Comma separated, '.' decimal, LF line endings, header first.
inline void write_csv(const NmseTable& t, std::ostream& os) {
    os << kCsvHeader << '\n';
    for (const auto& r : t.rows) {
        os << r.sweep_var << ',' << format_number(r.sweep_value) << ',' << r.param << ',' << format_number(r.nmse)
           << ',' << r.trials << ',' << r.failures << ',' << r.seed << '\n';
    }
}

inline constexpr const char* kNmseDefinition =
    "NMSE_x = mean over non-failed trials of ((x_hat - x) / x)^2, angles in radians; "
    "SNR = mean received signal power per scalar observation / noise variance";

}  // namespace nfpose
