#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args, bool quiet = false) {
    std::string cmd = std::string(BBM_CLI_PATH) + " " + args;
    if (quiet) cmd += " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() /
                         ("bbm_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
    REQUIRE(f.good());
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json manifest(const fs::path& dir, const std::string& command) {
    return json::parse(slurp(dir / (command + ".manifest.json")));
}

const char* binary_config_text() {
    return R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1]},
                         "beta": 0.5, "mu": 0.0},
               "x": 1.0})";
}

fs::path binary_config(const fs::path& dir) {
    const fs::path p = dir / "config.json";
    write_file(p, binary_config_text());
    return p;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("wave command writes the boundary row and solver summary") {
    const fs::path dir = fresh_dir("wave");
    const fs::path cfg = binary_config(dir);
    CHECK(run_cli("wave --config " + q(cfg) + " --out " + q(dir)) == 0);

    const std::string csv = slurp(dir / "wave.csv");
    CHECK(csv.substr(0, 12) == "x,Q,Qprime\r\n");
    CHECK(csv.find("\r\n0,1,-0.577350") != std::string::npos);

    const json m = manifest(dir, "wave");
    CHECK(m.at("command") == "wave");
    CHECK(m.at("results").at("qprime0").get<double>() ==
          doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-8));
    CHECK(m.at("results").at("lambda_tilde").get<double>() ==
          doctest::Approx(1.0));
    CHECK(m.at("outputs") == json::array({"wave.csv"}));
}

TEST_CASE("reruns are byte-identical") {
    const fs::path a = fresh_dir("rerun_a");
    const fs::path b = fresh_dir("rerun_b");
    const fs::path cfg = binary_config(a);
    CHECK(run_cli("wave --config " + q(cfg) + " --out " + q(a)) == 0);
    CHECK(run_cli("wave --config " + q(cfg) + " --out " + q(b)) == 0);
    CHECK(slurp(a / "wave.csv") == slurp(b / "wave.csv"));
    CHECK(slurp(a / "wave.manifest.json") == slurp(b / "wave.manifest.json"));
}

TEST_CASE("critical-drift search reports the divergent-integral case") {
    const fs::path dir = fresh_dir("muc");
    const fs::path cfg = binary_config(dir);
    CHECK(run_cli("mu-c --config " + q(cfg) + " --out " + q(dir)) == 0);
    const json m = manifest(dir, "mu-c");
    CHECK(m.at("results").at("mu_c") == "infinite");
    CHECK(m.at("results").at("criterion") == "integral_divergent");
    CHECK(slurp(dir / "mu-c.csv") ==
          "mu_c,criterion\r\ninfinite,integral_divergent\r\n");
}

TEST_CASE("radius command matches the driftless oracle") {
    const fs::path dir = fresh_dir("radius");
    const fs::path cfg = binary_config(dir);
    CHECK(run_cli("radius --config " + q(cfg) + " --out " + q(dir)) == 0);
    const json m = manifest(dir, "radius");
    CHECK(m.at("results").at("R").get<double>() ==
          doctest::Approx(1.5).epsilon(1e-6));
    CHECK(m.at("results").at("regime") == "below");
}

TEST_CASE("coeffs command emits the exact direct-absorption weight") {
    const fs::path dir = fresh_dir("coeffs");
    write_file(dir / "config.json",
               R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1]},
                             "beta": 0.5, "mu": 0.0},
                   "x": 1.0, "n_coeffs": 16})");
    CHECK(run_cli("coeffs --config " + q(dir / "config.json") + " --out " +
                  q(dir)) == 0);
    const std::string csv = slurp(dir / "coeffs.csv");
    // q_1(1) = e^{-1}
    CHECK(csv.find("\r\n1,0.3678794411") != std::string::npos);
    CHECK(manifest(dir, "coeffs").at("results").at("N") == 16);
}

TEST_CASE("simulate is deterministic across worker counts") {
    const fs::path dir = fresh_dir("simulate");
    write_file(dir / "config.json",
               R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1]},
                             "beta": 0.5, "mu": 0.0},
                   "x": 1.0, "replicates": 2000, "event_budget": 200,
                   "seed": 7})");
    const fs::path a = fresh_dir("simulate_a");
    const fs::path b = fresh_dir("simulate_b");
    CHECK(run_cli("simulate --config " + q(dir / "config.json") +
                  " --workers 1 --out " + q(a)) == 0);
    CHECK(run_cli("simulate --config " + q(dir / "config.json") +
                  " --workers 4 --out " + q(b)) == 0);
    CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));

    const json m = manifest(a, "simulate");
    const double lo = m.at("results").at("q_hat_low").get<double>();
    const double hi = m.at("results").at("q_hat_high").get<double>();
    const double cf = m.at("results").at("censored_fraction").get<double>();
    CHECK(lo + cf == doctest::Approx(hi).epsilon(1e-12));
    CHECK(hi <= 1.0);
    const std::string csv = slurp(a / "simulate.csv");
    CHECK(csv.substr(0, csv.find("\r\n")) ==
          "i,count,p_hat,ci99_lo,ci99_hi");
}

TEST_CASE("compare below the critical drift is reproducible") {
    const fs::path dir = fresh_dir("compare");
    write_file(dir / "config.json",
               R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1]},
                             "beta": 0.5, "mu": 0.0},
                   "x": 1.0, "n_coeffs": 48, "regime": "below"})");
    const fs::path a = fresh_dir("compare_a");
    const fs::path b = fresh_dir("compare_b");
    CHECK(run_cli("compare --config " + q(dir / "config.json") +
                  " --regime below --out " + q(a)) == 0);
    CHECK(run_cli("compare --config " + q(dir / "config.json") +
                  " --regime below --out " + q(b)) == 0);
    CHECK(slurp(a / "compare.csv") == slurp(b / "compare.csv"));
    const std::string csv = slurp(a / "compare.csv");
    CHECK(csv.substr(0, csv.find("\r\n")) == "i,computed,formula,ratio");
}

TEST_CASE("report aggregates manifests and rejects model mismatches") {
    const fs::path dir = fresh_dir("report");
    const fs::path cfg = binary_config(dir);
    CHECK(run_cli("wave --config " + q(cfg) + " --out " + q(dir)) == 0);
    CHECK(run_cli("mu-c --config " + q(cfg) + " --out " + q(dir)) == 0);
    CHECK(run_cli("report --config " + q(cfg) + " --out " + q(dir)) == 0);
    const json rep = json::parse(slurp(dir / "report.json"));
    CHECK(rep.at("runs").size() == 2);

    // a manifest for a different model aborts the aggregation
    write_file(dir / "alien.manifest.json",
               R"({"command": "wave", "model_hash": "0000000000000000",
                   "results": {}})");
    CHECK(run_cli("report --config " + q(cfg) + " --out " + q(dir), true) ==
          1);
}

TEST_CASE("schema violations and bad models map to exit codes") {
    const fs::path dir = fresh_dir("errors");
    const fs::path cfg = binary_config(dir);

    write_file(dir / "unknown_top.json",
               R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1]},
                             "beta": 0.5, "mu": 0.0},
                   "plot": true})");
    CHECK(run_cli("wave --config " + q(dir / "unknown_top.json") + " --out " +
                  q(dir), true) == 2);

    write_file(dir / "unknown_model.json",
               R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1]},
                             "beta": 0.5, "mu": 0.0, "drift": 1.0}})");
    CHECK(run_cli("wave --config " + q(dir / "unknown_model.json") +
                  " --out " + q(dir), true) == 2);

    write_file(dir / "unknown_law.json",
               R"({"model": {"law": {"family": "explicit", "p": [0, 0, 1],
                                     "radius": 2.0},
                             "beta": 0.5, "mu": 0.0}})");
    CHECK(run_cli("wave --config " + q(dir / "unknown_law.json") + " --out " +
                  q(dir), true) == 2);

    // wave refuses drifts at or below the survival threshold
    CHECK(run_cli("wave --config " + q(cfg) + " --mu -1.0 --out " + q(dir),
                  true) == 2);

    // unreadable or malformed configs are runtime failures
    CHECK(run_cli("wave --config " + q(dir / "missing.json") + " --out " +
                  q(dir), true) == 1);
    write_file(dir / "broken.json", "{not json");
    CHECK(run_cli("wave --config " + q(dir / "broken.json") + " --out " +
                  q(dir), true) == 1);
}
