// SPDX-License-Identifier: Apache-2.0
//
// nfpose: near-field RIS 5D pose estimation simulator.
//
//   nfpose estimate --pose r,theta,phi,psi,gamma [--config F] [--snr-db X] [--seed U] [--mode exact|fresnel]
//   nfpose sweep    --config F [--trials N] [--seed U] [--mode M] [--out PATH] [--format csv|json]
//   nfpose validate
//
// Exit codes: 0 ok, 1 estimation/validation failure, 2 usage or config error,
// 3 output not writable.

#include "nfpose/config.hpp"
#include "nfpose/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace nfpose;
using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitOutput = 3;

struct Overrides {
    std::string config_path;
    std::string pose;
    std::string snr_db;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string mode;
    std::string out;
    std::string format;
};

RunConfig load_with_overrides(const Overrides& o) {
    RunConfig rc = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (!o.pose.empty()) {
        const auto v = detail::parse_number_list(o.pose, 0, "--pose");
        if (v.size() != 5) throw ConfigError(0, "--pose", "expected r,theta,phi,psi,gamma");
        rc.pose = std::array<double, 5>{v[0], v[1], v[2], v[3], v[4]};
    }
    if (!o.snr_db.empty()) rc.snr_db = detail::parse_double(o.snr_db, 0, "--snr-db");
    if (o.seed) rc.seed = *o.seed;
    if (o.trials) rc.trials = *o.trials;
    if (!o.mode.empty()) {
        try {
            rc.mode = parse_channel_mode(o.mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(0, "--mode", e.what());
        }
    }
    if (!o.out.empty()) rc.out = o.out;
    if (!o.format.empty()) {
        if (o.format == "csv") rc.format = OutputFormat::Csv;
        else if (o.format == "json") rc.format = OutputFormat::Json;
        else throw ConfigError(0, "--format", "expected csv|json");
    }
    validate(rc);
    return rc;
}

void warn_if_outside_box(const RunConfig& rc) {
    const SystemConfig cfg = rc.system();
    const auto [r_min, r_max] = near_field_bounds(cfg);
    const auto& p = *rc.pose;
    if (p[0] < r_min || p[0] > r_max)
        std::cerr << "warning: r = " << p[0] << " m is outside the near-field interval [" << r_min << ", " << r_max
                  << "] m\n";
    const PoseSamplingRanges box;
    if (p[1] <= 0 || p[1] >= 180 || p[3] <= 0 || p[3] >= 180 || p[2] <= 0 || p[2] >= 90 || p[4] <= 0 || p[4] >= 90)
        std::cerr << "warning: angles outside (0,180) x (0,90) azimuth/elevation domain\n";
    else if (p[1] < box.theta_min || p[1] > box.theta_max || p[2] < box.phi_min || p[2] > box.phi_max)
        std::cerr << "warning: direction outside the evaluated sampling box\n";
}

int cmd_estimate(const Overrides& o) {
    const RunConfig rc = load_with_overrides(o);
    if (!rc.pose) throw ConfigError(0, "pose", "no pose given (use --pose or the 'pose' key)");
    warn_if_outside_box(rc);

    const TrialContext ctx(rc.system());
    Rng rng(rc.seed);
    const Pose truth = *rc.pose_radians();
    const TrialResult res = run_trial(ctx, truth, rc.snr_db, rc.mode, rng);

    json report;
    report["mode"] = to_string(rc.mode);
    report["snr_db"] = std::isinf(rc.snr_db) ? json("inf") : json(rc.snr_db);
    report["seed"] = rc.seed;
    report["units"] = {{"r", "m"}, {"angles", "deg"}};
    const auto t = as_array(truth);
    const auto e = as_array(res.estimate.pose());
    for (size_t i = 0; i < 5; ++i) {
        const double scale = i == 0 ? 1.0 : 180.0 / kPi;
        json entry = {{"true", t[i] * scale}};
        if (!res.failed) {
            entry["estimate"] = e[i] * scale;
            entry["sq_rel_err"] = res.squared_relative_error[i];
        } else {
            entry["estimate"] = nullptr;
            entry["sq_rel_err"] = nullptr;
        }
        report[kParamNames[i]] = entry;
    }
    if (res.failed) {
        report["failed_stage"] = res.stage;
        report["failure"] = res.estimate.failure;
    }
    std::cout << report.dump(2) << '\n';
    if (res.failed) {
        std::cerr << "error: estimation failed in stage '" << res.stage << "': " << res.estimate.failure << '\n';
        return kExitFailure;
    }
    return 0;
}

void write_json(const NmseTable& t, const RunConfig& rc, std::ostream& os) {
    json doc;
    doc["metadata"] = {{"nmse_definition", kNmseDefinition},
                       {"mode", to_string(rc.mode)},
                       {"master_seed", rc.seed},
                       {"trials", rc.trials},
                       {"config", serialize(rc)}};
    doc["rows"] = json::array();
    for (const auto& r : t.rows) {
        doc["rows"].push_back({{"sweep_var", r.sweep_var},
                               {"sweep_value", r.sweep_value},
                               {"param", r.param},
                               {"nmse", std::isfinite(r.nmse) ? json(r.nmse) : json(nullptr)},
                               {"trials", r.trials},
                               {"failures", r.failures},
                               {"seed", r.seed}});
    }
    os << doc.dump(2) << '\n';
}

int cmd_sweep(const Overrides& o) {
    if (o.config_path.empty()) throw ConfigError(0, "--config", "sweep requires a configuration file");
    const RunConfig rc = load_with_overrides(o);
    if (!rc.has_sweep()) throw ConfigError(0, "sweep.*", "no sweep axis configured");

    std::ofstream file;
    if (!rc.out.empty()) {
        file.open(rc.out, std::ios::binary | std::ios::trunc);
        if (!file) {
            std::cerr << "error: cannot write '" << rc.out << "'\n";
            return kExitOutput;
        }
    }
    const NmseTable table = run_sweep(rc.sweep_settings(), rc.sweep_axes());
    std::ostream& os = rc.out.empty() ? std::cout : file;
    if (rc.format == OutputFormat::Csv)
        write_csv(table, os);
    else
        write_json(table, rc, os);
    os.flush();
    if (!os) {
        std::cerr << "error: writing '" << rc.out << "' failed\n";
        return kExitOutput;
    }
    return 0;
}

int cmd_validate(const std::string& fault) {
    ValidationOptions opt;
    if (fault == "distance-sign")
        opt.inject_distance_sign_error = true;
    else if (!fault.empty())
        throw ConfigError(0, "--inject-fault", "unknown fault '" + fault + "'");
    const auto t0 = std::chrono::steady_clock::now();
    const auto checks = run_validation(opt);
    int failed = 0;
    for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  (worst " << c.worst << ", tol " << c.tolerance
                  << ")\n";
        failed += c.pass ? 0 : 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << checks.size() - static_cast<size_t>(failed) << "/" << checks.size() << " invariants passed in "
              << secs << " s\n";
    return failed ? kExitFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field RIS 5D pose estimation simulator"};
    app.require_subcommand(1);
    Overrides o;
    std::string fault;

    auto* est = app.add_subcommand("estimate", "Run one trial and report true vs estimated pose as JSON");
    est->add_option("--config", o.config_path, "Configuration file (key = value)");
    est->add_option("--pose", o.pose, "r,theta,phi,psi,gamma (meters, degrees)");
    est->add_option("--snr-db", o.snr_db, "SNR in dB ('inf' for noiseless)");
    est->add_option("--seed", o.seed, "Random seed");
    est->add_option("--mode", o.mode, "Channel model: exact|fresnel");

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo NMSE sweep");
    sweep->add_option("--config", o.config_path, "Configuration file (key = value)")->required();
    sweep->add_option("--snr-db", o.snr_db, "Base SNR in dB");
    sweep->add_option("--seed", o.seed, "Master seed");
    sweep->add_option("--trials", o.trials, "Trials per grid point");
    sweep->add_option("--mode", o.mode, "Channel model: exact|fresnel");
    sweep->add_option("--out", o.out, "Output path (default: standard output)");
    sweep->add_option("--format", o.format, "csv|json");

    auto* val = app.add_subcommand("validate", "Run the invariant suite");
    val->add_option("--inject-fault", fault, "Test hook: distance-sign")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*est) return cmd_estimate(o);
        if (*sweep) return cmd_sweep(o);
        if (*val) return cmd_validate(fault);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
