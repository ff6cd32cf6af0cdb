// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "nfpose/config.hpp"

using namespace nfpose;

namespace {

ConfigError parse_error(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError for:\n" << text);
    return ConfigError(0, "", "");
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
    const RunConfig rc = parse_run_config(std::string{});
    CHECK(rc == RunConfig{});
    const SystemConfig cfg = rc.system();
    CHECK(cfg.N() == 121);
    CHECK(cfg.P == 121);
    CHECK(cfg.P_T == Catch::Approx(10.0));
    CHECK(cfg.theta_R == Catch::Approx(deg2rad(40.0)));
}

TEST_CASE("serialize round trip") {
    RunConfig rc;
    rc.K = 7;
    rc.N_x = 9;
    rc.N_y = 5;
    rc.p_per_n = 2;
    rc.lambda = 0.1;
    rc.d_u = 0.05;
    rc.d_b = 0.05;
    rc.d_x = 0.025;
    rc.d_y = 0.02;
    rc.mode = ChannelMode::Exact;
    rc.seed = 18446744073709551615ULL;
    rc.snr_db = 12.5;
    rc.pose = std::array<double, 5>{1.5, 61.25, 33.0, 100.0, 45.0};
    rc.sweep_snr_db = {0.0, 7.5, 30.0};
    rc.sweep_P = {1, 2, 3};
    rc.sweep_P_per_n = true;
    rc.out = "results.csv";
    rc.format = OutputFormat::Json;
    rc.threads = 4;
    const RunConfig back = parse_run_config(serialize(rc));
    CHECK(back == rc);
    CHECK(serialize(back) == serialize(rc));

    RunConfig absolute;
    absolute.p_per_n = 0;
    absolute.P = 150;
    absolute.sweep_K = {3, 5, 7};
    CHECK(parse_run_config(serialize(absolute)) == absolute);
}

TEST_CASE("P accepts multiples of N") {
    const RunConfig rc = parse_run_config("N_x = 7\nN_y = 7\nP = 2N\n");
    CHECK(rc.system().P == 98);
    const RunConfig abs = parse_run_config("P = 130\n");
    CHECK(abs.system().P == 130);
    CHECK(parse_error("P = 100\n").key().empty());  // fails validation (P < N)
}

TEST_CASE("spacings default to fractions of the configured wavelength") {
    const RunConfig rc = parse_run_config("lambda = 0.2\n");
    CHECK(rc.d_u == Catch::Approx(0.1));
    CHECK(rc.d_b == Catch::Approx(0.1));
    CHECK(rc.d_x == Catch::Approx(0.05));
    CHECK(rc.d_y == Catch::Approx(0.05));
    const RunConfig explicit_du = parse_run_config("lambda = 0.2\nd_u = 0.3\n");
    CHECK(explicit_du.d_u == Catch::Approx(0.3));
}

TEST_CASE("comments and whitespace") {
    const RunConfig rc = parse_run_config("# header\n\n  K = 5   # five antennas\n\tmode=exact\n");
    CHECK(rc.K == 5);
    CHECK(rc.mode == ChannelMode::Exact);
}

TEST_CASE("diagnostics carry line and key") {
    SECTION("malformed number") {
        const ConfigError e = parse_error("K = 5\nlambda = abc\n");
        CHECK(e.line() == 2);
        CHECK(e.key() == "lambda");
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    SECTION("unknown key") {
        const ConfigError e = parse_error("\n\nfoo = 1\n");
        CHECK(e.line() == 3);
        CHECK(e.key() == "foo");
    }
    SECTION("duplicate key") {
        const ConfigError e = parse_error("K = 5\nK = 7\n");
        CHECK(e.line() == 2);
        CHECK(e.key() == "K");
    }
    SECTION("missing equals sign") { CHECK(parse_error("K 5\n").line() == 1); }
    SECTION("bad mode") { CHECK(parse_error("mode = approximate\n").key() == "mode"); }
    SECTION("bad pose length") { CHECK(parse_error("pose = 1,2,3\n").key() == "pose"); }
    SECTION("mixed P sweep") { CHECK(parse_error("sweep.P = 1N,242\n").key() == "sweep.P"); }
    SECTION("trailing garbage") { CHECK(parse_error("K = 5x\n").key() == "K"); }
    SECTION("even K is rejected by validation") { CHECK_THROWS_AS(parse_run_config("K = 4\n"), ConfigError); }
}

TEST_CASE("sweep axes and settings") {
    const RunConfig rc = parse_run_config("sweep.snr_db = 0,10,20\nsweep.P = 1N,2N\ntrials = 9\nseed = 5\n");
    REQUIRE(rc.has_sweep());
    const auto axes = rc.sweep_axes();
    REQUIRE(axes.size() == 2);
    CHECK(axes[0].variable == "snr_db");
    CHECK(axes[0].values == std::vector<double>{0, 10, 20});
    CHECK(axes[1].variable == "P");
    CHECK(axes[1].per_n);
    const SweepSettings s = rc.sweep_settings();
    CHECK(s.trials == 9);
    CHECK(s.master_seed == 5);
    CHECK_FALSE(s.fixed_pose.has_value());
}
