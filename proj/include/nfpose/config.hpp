// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat "key = value" run configuration. '#' starts a comment, blank lines are
// ignored, every key may appear at most once. Angles are degrees and transmit
// power is dBm here; conversion to radians / watts happens in system().

#include "nfpose/montecarlo.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfpose {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& key, const std::string& what)
        : std::runtime_error(describe(line, key, what)), line_(line), key_(key) {}
    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    static std::string describe(int line, const std::string& key, const std::string& what) {
        std::string s = "config";
        if (line > 0) s += " line " + std::to_string(line);
        if (!key.empty()) s += " key '" + key + "'";
        return s + ": " + what;
    }
    int line_;
    std::string key_;
};

enum class OutputFormat { Csv, Json };

struct RunConfig {
    int M = 9;
    int K = 11;
    int N_x = 11;
    int N_y = 11;
    int P = 121;       // used when p_per_n == 0
    int p_per_n = 1;   // P = p_per_n * N; written "1N", "2N", ...
    int L = 50;
    double lambda = 0.33;
    double d_u = 0.165;
    double d_b = 0.165;
    double d_x = 0.0825;
    double d_y = 0.0825;
    double P_T_dBm = 40.0;
    double theta_B_deg = 30.0;
    double theta_R_deg = 40.0;
    double phi_R_deg = 50.0;

    ChannelMode mode = ChannelMode::Fresnel;
    int trials = 200;
    std::uint64_t seed = 1;
    double snr_db = 15.0;
    std::optional<std::array<double, 5>> pose;  // r [m], theta, phi, psi, gamma [deg]

    std::vector<double> sweep_snr_db;
    std::vector<double> sweep_N;
    std::vector<double> sweep_K;
    std::vector<double> sweep_P;
    bool sweep_P_per_n = false;

    std::string out;
    OutputFormat format = OutputFormat::Csv;
    unsigned threads = 0;

    SystemConfig system() const {
        SystemConfig c;
        c.M = M;
        c.K = K;
        c.N_x = N_x;
        c.N_y = N_y;
        c.P = p_per_n > 0 ? p_per_n * N_x * N_y : P;
        c.L = L;
        c.lambda = lambda;
        c.d_u = d_u;
        c.d_b = d_b;
        c.d_x = d_x;
        c.d_y = d_y;
        c.P_T = dbm_to_watts(P_T_dBm);
        c.theta_B = deg2rad(theta_B_deg);
        c.theta_R = deg2rad(theta_R_deg);
        c.phi_R = deg2rad(phi_R_deg);
        return c;
    }

    std::optional<Pose> pose_radians() const {
        if (!pose) return std::nullopt;
        const auto& p = *pose;
        return Pose{p[0], deg2rad(p[1]), deg2rad(p[2]), deg2rad(p[3]), deg2rad(p[4])};
    }

    bool has_sweep() const {
        return !sweep_snr_db.empty() || !sweep_N.empty() || !sweep_K.empty() || !sweep_P.empty();
    }

    std::vector<SweepAxis> sweep_axes() const {
        std::vector<SweepAxis> axes;
        if (!sweep_snr_db.empty()) axes.push_back({"snr_db", sweep_snr_db, false});
        if (!sweep_N.empty()) axes.push_back({"N", sweep_N, false});
        if (!sweep_K.empty()) axes.push_back({"K", sweep_K, false});
        if (!sweep_P.empty()) axes.push_back({"P", sweep_P, sweep_P_per_n});
        return axes;
    }

    SweepSettings sweep_settings() const {
        SweepSettings s;
        s.base = system();
        s.snr_db = snr_db;
        s.mode = mode;
        s.trials = trials;
        s.master_seed = seed;
        s.p_per_n = p_per_n;
        s.fixed_pose = pose_radians();
        s.threads = threads;
        return s;
    }

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

inline double parse_double(const std::string& text, int line, const std::string& key) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw ConfigError(line, key, "expected a number, got '" + text + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& text, int line, const std::string& key) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ConfigError(line, key, "expected an integer, got '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& text, int line, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ConfigError(line, key, "expected an unsigned integer, got '" + text + "'");
    return v;
}

inline int parse_positive_int(const std::string& text, int line, const std::string& key) {
    const auto v = parse_int(text, line, key);
    if (v < 1 || v > 1'000'000'000) throw ConfigError(line, key, "expected a positive integer, got '" + text + "'");
    return static_cast<int>(v);
}

/// "<m>N" -> m, otherwise nullopt.
inline std::optional<int> parse_multiple_of_n(const std::string& text, int line, const std::string& key) {
    if (text.empty() || text.back() != 'N') return std::nullopt;
    const std::string head = text.substr(0, text.size() - 1);
    return head.empty() ? 1 : parse_positive_int(head, line, key);
}

inline std::vector<double> parse_number_list(const std::string& text, int line, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item, line, key));
    if (out.empty()) throw ConfigError(line, key, "empty list");
    return out;
}

}  // namespace detail

inline void validate(const RunConfig& rc) {
    try {
        rc.system().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, "", e.what());
    }
    if (rc.trials < 1) throw ConfigError(0, "trials", "must be positive");
    if (rc.pose && !((*rc.pose)[0] > 0.0)) throw ConfigError(0, "pose", "distance must be positive");
}

/// Parses a configuration stream. Throws ConfigError with line and key.
inline RunConfig parse_run_config(std::istream& in) {
    using namespace detail;
    RunConfig rc;
    std::set<std::string> seen;
    bool spacing_given[4] = {false, false, false, false};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError(line, "", "missing key");
        if (value.empty()) throw ConfigError(line, key, "missing value");
        if (!seen.insert(key).second) throw ConfigError(line, key, "duplicate key");

        if (key == "M") rc.M = parse_positive_int(value, line, key);
        else if (key == "K") rc.K = parse_positive_int(value, line, key);
        else if (key == "N_x") rc.N_x = parse_positive_int(value, line, key);
        else if (key == "N_y") rc.N_y = parse_positive_int(value, line, key);
        else if (key == "P") {
            if (const auto mult = parse_multiple_of_n(value, line, key)) {
                rc.p_per_n = *mult;
            } else {
                rc.P = parse_positive_int(value, line, key);
                rc.p_per_n = 0;
            }
        } else if (key == "L") rc.L = parse_positive_int(value, line, key);
        else if (key == "lambda") rc.lambda = parse_double(value, line, key);
        else if (key == "d_u") { rc.d_u = parse_double(value, line, key); spacing_given[0] = true; }
        else if (key == "d_b") { rc.d_b = parse_double(value, line, key); spacing_given[1] = true; }
        else if (key == "d_x") { rc.d_x = parse_double(value, line, key); spacing_given[2] = true; }
        else if (key == "d_y") { rc.d_y = parse_double(value, line, key); spacing_given[3] = true; }
        else if (key == "P_T_dBm") rc.P_T_dBm = parse_double(value, line, key);
        else if (key == "theta_B_deg") rc.theta_B_deg = parse_double(value, line, key);
        else if (key == "theta_R_deg") rc.theta_R_deg = parse_double(value, line, key);
        else if (key == "phi_R_deg") rc.phi_R_deg = parse_double(value, line, key);
        else if (key == "mode") {
            try {
                rc.mode = parse_channel_mode(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(line, key, e.what());
            }
        } else if (key == "trials") rc.trials = parse_positive_int(value, line, key);
        else if (key == "seed") rc.seed = parse_u64(value, line, key);
        else if (key == "snr_db") rc.snr_db = parse_double(value, line, key);
        else if (key == "pose") {
            const auto v = parse_number_list(value, line, key);
            if (v.size() != 5) throw ConfigError(line, key, "expected r,theta,phi,psi,gamma");
            rc.pose = std::array<double, 5>{v[0], v[1], v[2], v[3], v[4]};
        } else if (key == "sweep.snr_db") rc.sweep_snr_db = parse_number_list(value, line, key);
        else if (key == "sweep.N") rc.sweep_N = parse_number_list(value, line, key);
        else if (key == "sweep.K") rc.sweep_K = parse_number_list(value, line, key);
        else if (key == "sweep.P") {
            const auto items = split_list(value);
            if (items.empty()) throw ConfigError(line, key, "empty list");
            const bool per_n = !items.front().empty() && items.front().back() == 'N';
            for (const auto& item : items) {
                const auto mult = parse_multiple_of_n(item, line, key);
                if (mult.has_value() != per_n) throw ConfigError(line, key, "mixes absolute values and multiples of N");
                rc.sweep_P.push_back(mult ? *mult : parse_positive_int(item, line, key));
            }
            rc.sweep_P_per_n = per_n;
        } else if (key == "out") rc.out = value;
        else if (key == "format") {
            if (value == "csv") rc.format = OutputFormat::Csv;
            else if (value == "json") rc.format = OutputFormat::Json;
            else throw ConfigError(line, key, "expected csv|json");
        } else if (key == "threads") rc.threads = static_cast<unsigned>(parse_int(value, line, key));
        else throw ConfigError(line, key, "unknown key");
    }
    // Spacings default to fractions of the wavelength actually configured.
    if (!spacing_given[0]) rc.d_u = rc.lambda / 2.0;
    if (!spacing_given[1]) rc.d_b = rc.lambda / 2.0;
    if (!spacing_given[2]) rc.d_x = rc.lambda / 4.0;
    if (!spacing_given[3]) rc.d_y = rc.lambda / 4.0;
    validate(rc);
    return rc;
}

inline RunConfig parse_run_config(const std::string& text) {
    std::istringstream in(text);
    return parse_run_config(in);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot open '" + path + "'");
    return parse_run_config(in);
}

/// Writes every key explicitly; parse_run_config(serialize(c)) == c.
inline std::string serialize(const RunConfig& rc) {
    std::ostringstream os;
    auto num = [](double v) { return format_number(v); };
    auto list = [&](const std::vector<double>& v, const char* suffix = "") {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]) + suffix;
        return s;
    };
    os << "M = " << rc.M << '\n'
       << "K = " << rc.K << '\n'
       << "N_x = " << rc.N_x << '\n'
       << "N_y = " << rc.N_y << '\n';
    if (rc.p_per_n > 0)
        os << "P = " << rc.p_per_n << "N\n";
    else
        os << "P = " << rc.P << '\n';
    os << "L = " << rc.L << '\n'
       << "lambda = " << num(rc.lambda) << '\n'
       << "d_u = " << num(rc.d_u) << '\n'
       << "d_b = " << num(rc.d_b) << '\n'
       << "d_x = " << num(rc.d_x) << '\n'
       << "d_y = " << num(rc.d_y) << '\n'
       << "P_T_dBm = " << num(rc.P_T_dBm) << '\n'
       << "theta_B_deg = " << num(rc.theta_B_deg) << '\n'
       << "theta_R_deg = " << num(rc.theta_R_deg) << '\n'
       << "phi_R_deg = " << num(rc.phi_R_deg) << '\n'
       << "mode = " << to_string(rc.mode) << '\n'
       << "trials = " << rc.trials << '\n'
       << "seed = " << rc.seed << '\n'
       << "snr_db = " << num(rc.snr_db) << '\n';
    if (rc.pose) os << "pose = " << list({rc.pose->begin(), rc.pose->end()}) << '\n';
    if (!rc.sweep_snr_db.empty()) os << "sweep.snr_db = " << list(rc.sweep_snr_db) << '\n';
    if (!rc.sweep_N.empty()) os << "sweep.N = " << list(rc.sweep_N) << '\n';
    if (!rc.sweep_K.empty()) os << "sweep.K = " << list(rc.sweep_K) << '\n';
    if (!rc.sweep_P.empty()) os << "sweep.P = " << list(rc.sweep_P, rc.sweep_P_per_n ? "N" : "") << '\n';
    if (!rc.out.empty()) os << "out = " << rc.out << '\n';
    os << "format = " << (rc.format == OutputFormat::Csv ? "csv" : "json") << '\n';
    os << "threads = " << rc.threads << '\n';
    return os.str();
}

}  // namespace nfpose
