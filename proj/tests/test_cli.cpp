// End-to-end tests of the command-line tool: each case shells out to the
// installed binary, captures stdout/stderr/exit code, and checks the emitted
// CSV/JSON against the library called in-process.  The binary path is baked
// in at configure time (TRUSTGAME_CLI_PATH) and can be overridden with the
// TRUSTGAME_CLI environment variable.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "trustgame/basin.hpp"
#include "trustgame/equilibrium.hpp"

using nlohmann::json;
using namespace trustgame;

namespace {

std::string cli_path() {
    if (const char* env = std::getenv("TRUSTGAME_CLI")) return env;
    return TRUSTGAME_CLI_PATH;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    const std::string out_path = "/tmp/tg_cli_test.out";
    const std::string err_path = "/tmp/tg_cli_test.err";
    const std::string cmd = cli_path() + " " + args + " > " + out_path + " 2> " + err_path;
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

// Parsed CSV: '#' metadata lines, then one header row, then data rows.
struct Csv {
    std::vector<std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    return fields;
}

Csv parse_csv(const std::string& text) {
    Csv csv;
    std::istringstream ss(text);
    std::string line;
    bool have_header = false;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            csv.meta.push_back(line);
            continue;
        }
        if (!have_header) {
            csv.header = split_commas(line);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& f : split_commas(line)) row.push_back(std::stod(f));
        csv.rows.push_back(row);
    }
    return csv;
}

} // namespace

TEST_CASE("equilibrium command reports the cooperative equilibrium at defaults") {
    auto res = run_cli("equilibrium");
    REQUIRE(res.code == 0);
    json j = json::parse(res.out);

    CHECK(j["meta"]["command"] == "equilibrium");
    CHECK(j["meta"]["params"]["mu"] == doctest::Approx(0.02));
    CHECK(j["meta"]["params"]["theta"] == doctest::Approx(1.0));

    // Uncooperative equilibrium is always present.
    CHECK(j["uncooperative"]["x"] == doctest::Approx(0.0));
    CHECK(j["uncooperative"]["mix"][3] == doctest::Approx(1.0));

    REQUIRE(!j["cooperative"].is_null());
    CHECK(j["cooperative"]["y1"] == doctest::Approx(0.02123848515864892).epsilon(1e-12));
    CHECK(j["cooperative"]["y2"] == doctest::Approx(0.9787615148413511).epsilon(1e-12));
    CHECK(j["cooperative"]["x"] == doctest::Approx(0.98).epsilon(1e-12));
    CHECK(j["cooperative"]["bB_star"] == doctest::Approx(0.11699078812691914).epsilon(1e-12));

    auto stab = j["cooperative"]["stability"];
    CHECK(stab["stable"] == true);
    CHECK(stab["trace"].get<double>() < 0.0);
    CHECK(stab["det"].get<double>() > 0.0);
    CHECK(stab["jacobian"].size() == 2);
    CHECK(stab["jacobian"][0].size() == 2);
    CHECK(stab["jacobian"][0][0] == doctest::Approx(-0.001954537123842592).epsilon(1e-9));
}

TEST_CASE("equilibrium reports null cooperative branch when it does not exist") {
    SUBCASE("no image scorers") {
        auto res = run_cli("equilibrium --theta 0");
        REQUIRE(res.code == 0);
        json j = json::parse(res.out);
        CHECK(j["cooperative"].is_null());
        // The would-be singular line is far from balance here.
        CHECK(j["singular"]["present"] == false);
        CHECK(j["singular"]["residual"] == doctest::Approx(-7.3276).epsilon(1e-3));
    }
    SUBCASE("reward below the existence threshold") {
        auto res = run_cli("equilibrium --r 0.05");
        REQUIRE(res.code == 0);
        json j = json::parse(res.out);
        CHECK(j["cooperative"].is_null());
    }
}

TEST_CASE("exit codes distinguish invalid input from numerical failure") {
    SUBCASE("domain violation") {
        auto res = run_cli("equilibrium --mu 0.7");
        CHECK(res.code == 2);
        CHECK(res.err.find("mu") != std::string::npos);
    }
    SUBCASE("unknown flag") {
        auto res = run_cli("equilibrium --bogus 1");
        CHECK(res.code == 2);
    }
    SUBCASE("missing subcommand") {
        auto res = run_cli("");
        CHECK(res.code == 2);
    }
    SUBCASE("help exits zero") {
        auto res = run_cli("--help");
        CHECK(res.code == 0);
        CHECK(res.out.find("equilibrium") != std::string::npos);
    }
    SUBCASE("unreachable tolerance triggers step-size underflow") {
        auto res = run_cli("trajectory --rel-tol 1e-300 --abs-tol 1e-300 --horizon 1");
        CHECK(res.code == 3);
        CHECK(res.err.find("numerical failure") != std::string::npos);
    }
}

TEST_CASE("threshold-curve matches the closed-form critical rewards") {
    auto res = run_cli("threshold-curve --theta-min 0 --theta-max 1 --theta-steps 5");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.header == std::vector<std::string>{"theta", "r_crit"});
    REQUIRE(csv.rows.size() == 5);

    // Full scoring: r_crit ~ 0.1312; no scoring: defection is never deterred
    // short of r = 1.
    CHECK(csv.rows.front()[0] == doctest::Approx(0.0));
    CHECK(csv.rows.front()[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(csv.rows.back()[0] == doctest::Approx(1.0));
    CHECK(csv.rows.back()[1] == doctest::Approx(0.131222).epsilon(1e-4));

    // Monotone decreasing in theta: more scorers, easier cooperation.
    for (size_t i = 1; i < csv.rows.size(); ++i)
        CHECK(csv.rows[i][1] < csv.rows[i - 1][1]);

    // Noisier observation raises the whole curve.
    auto noisy = parse_csv(run_cli("threshold-curve --eps 0.2 --theta-min 0 --theta-max 1 --theta-steps 5").out);
    REQUIRE(noisy.rows.size() == 5);
    for (size_t i = 0; i < 5; ++i)
        CHECK(noisy.rows[i][1] >= csv.rows[i][1]);
}

TEST_CASE("y1star-grid encodes absent equilibria as zero and grows with theta and r") {
    auto res = run_cli("y1star-grid --grid theta-r --theta-min 0.2 --theta-max 1 --theta-steps 3 "
                       "--r-min 0.05 --r-max 0.35 --r-steps 4");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.header == std::vector<std::string>{"theta", "r", "y1_star"});
    REQUIRE(csv.rows.size() == 12);

    // r = 0.05 sits below the existence threshold for every theta.
    for (const auto& row : csv.rows)
        if (row[1] == doctest::Approx(0.05)) CHECK(row[2] == 0.0);

    // Within a theta row, y1_star is nondecreasing in r; across theta at
    // r = 0.35, nondecreasing in theta.
    auto cell = [&](double th, double r) {
        for (const auto& row : csv.rows)
            if (std::fabs(row[0] - th) < 1e-9 && std::fabs(row[1] - r) < 1e-9) return row[2];
        REQUIRE(false);
        return 0.0;
    };
    CHECK(cell(1.0, 0.15) > 0.0);
    CHECK(cell(1.0, 0.25) >= cell(1.0, 0.15));
    CHECK(cell(1.0, 0.35) >= cell(1.0, 0.25));
    CHECK(cell(0.6, 0.35) >= cell(0.2, 0.35));
    CHECK(cell(1.0, 0.35) >= cell(0.6, 0.35));
}

TEST_CASE("trajectory started at the cooperative equilibrium stays there") {
    auto res = run_cli("trajectory --y1 0.02123848515864892 --y2 0.9787615148413511 "
                       "--y3 0 --y4 0 --x 0.98 --horizon 50 --dt 10");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.header == std::vector<std::string>{"t", "y1", "y2", "y3", "y4", "x"});
    REQUIRE(csv.rows.size() == 6);
    for (const auto& row : csv.rows) {
        CHECK(row[1] == doctest::Approx(0.02123848515864892).epsilon(1e-6));
        CHECK(row[2] == doctest::Approx(0.9787615148413511).epsilon(1e-6));
        CHECK(row[3] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
        CHECK(row[5] == doctest::Approx(0.98).epsilon(1e-6));
    }
}

TEST_CASE("trajectory from inside the basin converges to the cooperative equilibrium") {
    auto res = run_cli("trajectory --y1 0.3 --y2 0.3 --y3 0 --y4 0.4 --x 0.8 "
                       "--horizon 20000 --dt 20000");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.rows.size() == 2);
    const auto& last = csv.rows.back();
    CHECK(last[0] == doctest::Approx(20000.0));
    // The orbit spirals out to the x = 1 face, slides along it, and returns;
    // by t = 20000 it sits within 1e-3 of the mixed rest point.
    CHECK(std::fabs(last[1] - 0.02123848515864892) < 1e-3);
    CHECK(std::fabs(last[2] - 0.9787615148413511) < 1e-3);
    CHECK(std::fabs(last[5] - 0.98) < 1e-3);
}

TEST_CASE("trajectory with no scorers drives buyers out of the market") {
    auto res = run_cli("trajectory --theta 0 --y1 0.25 --y2 0.25 --y3 0.25 --y4 0.25 "
                       "--x 0.6 --horizon 150 --dt 50");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.rows.size() == 4);
    for (size_t i = 1; i < csv.rows.size(); ++i)
        CHECK(csv.rows[i][5] < csv.rows[i - 1][5]);
    CHECK(csv.rows.back()[5] < 0.05);
}

TEST_CASE("basin command agrees with an in-process volume estimate") {
    auto res = run_cli("basin --n-samples 200 --seed 9");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.header ==
            std::vector<std::string>{"r", "theta", "volume", "stderr", "n_unclassified", "seed"});
    REQUIRE(csv.rows.size() == 1);

    GameParams p{0.02, 0.1, 0.15, 1.0};
    auto est = basin_volume(p, StateSpace::ThreeStrategy, 200, 9);
    CHECK(csv.rows[0][0] == doctest::Approx(0.15));
    CHECK(csv.rows[0][1] == doctest::Approx(1.0));
    CHECK(csv.rows[0][2] == doctest::Approx(est.volume).epsilon(1e-10));
    CHECK(csv.rows[0][3] == doctest::Approx(est.std_error).epsilon(1e-10));
    CHECK(csv.rows[0][4] == doctest::Approx(double(est.n_unclassified)));
    CHECK(csv.rows[0][5] == doctest::Approx(9.0));

    // Same command, same bytes.
    auto res2 = run_cli("basin --n-samples 200 --seed 9");
    CHECK(res2.out == res.out);
}

TEST_CASE("basin grid sweeps r and theta with one row per cell") {
    auto res = run_cli("basin --n-samples 60 --seed 4 --r-min 0.1 --r-max 0.3 --r-steps 2 "
                       "--theta-min 0.5 --theta-max 1 --theta-steps 2");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.rows.size() == 4);
    // r outer, theta inner.
    CHECK(csv.rows[0][0] == doctest::Approx(0.1));
    CHECK(csv.rows[0][1] == doctest::Approx(0.5));
    CHECK(csv.rows[1][0] == doctest::Approx(0.1));
    CHECK(csv.rows[1][1] == doctest::Approx(1.0));
    CHECK(csv.rows[2][0] == doctest::Approx(0.3));
    CHECK(csv.rows[3][0] == doctest::Approx(0.3));
    for (const auto& row : csv.rows) {
        CHECK(row[2] >= 0.0);
        CHECK(row[2] <= 1.0);
    }
}

TEST_CASE("boundary-scan emits one row per fiber with crossing or sentinel") {
    auto res = run_cli("boundary-scan --resolution 3");
    REQUIRE(res.code == 0);
    Csv csv = parse_csv(res.out);
    REQUIRE(csv.header == std::vector<std::string>{"y1", "y2", "y4", "boundary_x"});
    REQUIRE(csv.rows.size() == 6);
    bool found_crossing = false, found_sentinel = false;
    for (const auto& row : csv.rows) {
        CHECK(row[0] + row[1] + row[2] == doctest::Approx(1.0).epsilon(1e-12));
        if (row[3] >= 0.0) {
            found_crossing = true;
            CHECK(row[3] <= 1.0);
        } else {
            found_sentinel = true;
            CHECK(row[3] == doctest::Approx(-1.0));
        }
    }
    CHECK(found_crossing);
    CHECK(found_sentinel);
}

TEST_CASE("oracle compares the simulated market against the analytic forms") {
    auto res = run_cli("oracle --equilibrium --n-buyers 400 --n-sellers 400 "
                       "--rounds 300 --seed 11");
    REQUIRE(res.code == 0);
    json j = json::parse(res.out);

    CHECK(j["meta"]["market"]["n_buyers"] == 400);
    CHECK(j["meta"]["market"]["rounds"] == 300);
    CHECK(j["empirical"]["regime_warning"] == true); // 10 * 300 >= 400

    // At the equilibrium crowd only Buy and Disc are populated; the
    // comparison for the empty strategies is null.
    REQUIRE(j["z"]["buyer"].size() == 4);
    CHECK(!j["z"]["buyer"][0].is_null());
    CHECK(!j["z"]["buyer"][1].is_null());
    CHECK(j["z"]["buyer"][2].is_null());
    CHECK(j["z"]["buyer"][3].is_null());
    for (int s = 0; s < 2; ++s)
        CHECK(std::fabs(j["z"]["buyer"][s].get<double>()) < 5.0);
    CHECK(std::fabs(j["z"]["sellerC"].get<double>()) < 5.0);

    // Analytic block carries the closed forms evaluated at the realized
    // discretized population.
    CHECK(j["analytic"]["sellerC"].get<double>() > 0.0);
    CHECK(j["analytic"]["rhoC"].get<double>() > 0.8);
    CHECK(j["analytic"]["rhoD"].get<double>() < 0.05);

    // Determinism: identical invocation, identical report.
    auto res2 = run_cli("oracle --equilibrium --n-buyers 400 --n-sellers 400 "
                        "--rounds 300 --seed 11");
    CHECK(res2.out == res.out);
}

TEST_CASE("oracle burn-in check reports initialization-difference z-scores") {
    auto res = run_cli("oracle --equilibrium --n-buyers 200 --n-sellers 200 "
                       "--rounds 500 --burnin-check --seed 6");
    REQUIRE(res.code == 0);
    json j = json::parse(res.out);
    REQUIRE(j.contains("burnin"));
    REQUIRE(j["burnin"]["buyer_diff_z"].size() == 4);
    // Populated strategies: all-good vs all-bad initialization washes out
    // over 500 rounds.
    for (int s = 0; s < 2; ++s) {
        REQUIRE(!j["burnin"]["buyer_diff_z"][s].is_null());
        CHECK(std::fabs(j["burnin"]["buyer_diff_z"][s].get<double>()) < 5.0);
    }
    CHECK(j["burnin"]["buyer_diff_z"][2].is_null());
}

TEST_CASE("config file supplies defaults and explicit flags win") {
    const std::string cfg_path = "/tmp/tg_cli_test.cfg";
    {
        std::ofstream f(cfg_path);
        f << "mu=0.03\n";
        f << "theta=0.8\n";
    }
    auto res = run_cli("--config " + cfg_path + " equilibrium");
    REQUIRE(res.code == 0);
    json j = json::parse(res.out);
    CHECK(j["meta"]["params"]["mu"] == doctest::Approx(0.03));
    CHECK(j["meta"]["params"]["theta"] == doctest::Approx(0.8));
    CHECK(j["meta"]["params"]["eps"] == doctest::Approx(0.1)); // untouched default

    auto res2 = run_cli("--config " + cfg_path + " --mu 0.04 equilibrium");
    REQUIRE(res2.code == 0);
    json j2 = json::parse(res2.out);
    CHECK(j2["meta"]["params"]["mu"] == doctest::Approx(0.04));
    CHECK(j2["meta"]["params"]["theta"] == doctest::Approx(0.8));
}

TEST_CASE("--out writes the report to a file instead of stdout") {
    const std::string out_path = "/tmp/tg_cli_test_artifact.csv";
    std::remove(out_path.c_str());
    auto res = run_cli("threshold-curve --theta-steps 3 --out " + out_path);
    REQUIRE(res.code == 0);
    CHECK(res.out.empty());
    Csv csv = parse_csv(slurp(out_path));
    CHECK(csv.header == std::vector<std::string>{"theta", "r_crit"});
    CHECK(csv.rows.size() == 3);
    CHECK(!csv.meta.empty());
    std::remove(out_path.c_str());
}

TEST_CASE("common flags are accepted after the subcommand name") {
    auto res = run_cli("equilibrium --theta 0.5 --r 0.2");
    REQUIRE(res.code == 0);
    json j = json::parse(res.out);
    CHECK(j["meta"]["params"]["theta"] == doctest::Approx(0.5));
    CHECK(j["meta"]["params"]["r"] == doctest::Approx(0.2));
}
