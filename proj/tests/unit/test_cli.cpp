// End-to-end checks of the command-line surface: exit codes and output
// shapes, run against the real binary.
#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "pfdkit/report.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(PFDKIT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    std::array<char, 4096> buffer{};
    std::size_t got = 0;
    while ((got = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
        result.output.append(buffer.data(), got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/pfdkit_cli_test_" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("run prints the equations result with validity flags") {
    const CliResult r = run_cli("run --case i --method equations");
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("7.46e-03"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("valid_dut=true"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("valid_duu=true"));
}

TEST_CASE("run flags the out-of-validity case ii") {
    const CliResult r = run_cli("run --case ii --method equations");
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("1.38e-01"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("valid_dut=true"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("valid_duu=false"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("lambda_duu_t0=0.213"));
}

TEST_CASE("run covers the other methods") {
    CHECK_THAT(run_cli("run --case i --method markov").output,
               Catch::Matchers::ContainsSubstring("7.41e-03"));
    CHECK_THAT(run_cli("run --case i --method fault_tree").output,
               Catch::Matchers::ContainsSubstring("7.4"));
    const CliResult petri = run_cli("run --case i --method petri --histories 2000 --seed 7");
    CHECK(petri.exit_code == 0);
    CHECK_THAT(petri.output, Catch::Matchers::ContainsSubstring("seed=7"));
    CHECK_THAT(petri.output, Catch::Matchers::ContainsSubstring("histories=2000"));
}

TEST_CASE("run accepts a scenario file") {
    std::ostringstream text;
    pfdkit::write_scenario(text, pfdkit::builtin_case(pfdkit::CaseId::i));
    const std::string path = write_temp("ok.cfg", text.str());
    const CliResult r = run_cli("run --scenario " + path + " --method equations");
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("7.46e-03"));
}

TEST_CASE("invalid scenarios exit with code 2") {
    const std::string bad = write_temp(
        "bad.cfg", "[scenario]\nm = 3\nn = 2\nlambda_d = 1e-6\ndc = 0.5\nptc = 0.9\n"
                   "beta_dd = 0.02\nbeta_dut = 0.05\nbeta_duu = 0.05\n"
                   "mu_dd = 0.04\nmu_dut = 0.04\nt1 = 100\nt0 = 800\n");
    CHECK(run_cli("run --scenario " + bad + " --method equations").exit_code == 2);
    CHECK(run_cli("run --scenario /nonexistent.cfg --method equations").exit_code == 2);
    CHECK(run_cli("run --case vii --method equations").exit_code == 2);
    CHECK(run_cli("run --method equations").exit_code == 2);
    CHECK(run_cli("run --case i --method sorcery").exit_code == 2);
    CHECK(run_cli("run --case i --scenario " + bad).exit_code == 2);  // exclusive flags
}

TEST_CASE("table2 emits a parseable CSV report") {
    const CliResult r = run_cli("table2 --histories 1000 --seed 5 --format csv");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.output);
    const pfdkit::ComparisonReport report = pfdkit::parse_report_csv(in);
    REQUIRE(report.rows.size() == 6);
    for (const auto& row : report.rows)
        for (pfdkit::MethodId m : pfdkit::ComparisonReport::kOrder)
            CHECK(report.cell(row, m).ok);
}

TEST_CASE("table2 text output carries the comparison block") {
    const CliResult r = run_cli("table2 --histories 1000 --seed 5");
    REQUIRE(r.exit_code == 0);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("PFDavg"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("deviation vs petri"));
}

TEST_CASE("export writes the unavailability curve") {
    const std::string out = "/tmp/pfdkit_cli_test_curve.csv";
    std::remove(out.c_str());
    const CliResult r = run_cli("export --case i --method fault_tree "
                                "--grid-points-per-interval 21 --out " + out);
    REQUIRE(r.exit_code == 0);
    std::ifstream in(out);
    REQUIRE(in.good());
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "t_hours,unavailability");
    CHECK(first.rfind("0,", 0) == 0);  // t=0 row has unavailability 0
    CHECK_THAT(first, Catch::Matchers::ContainsSubstring(",0"));
}

TEST_CASE("export rejects methods without a time curve") {
    CHECK(run_cli("export --case i --method petri --out /tmp/x.csv").exit_code == 2);
    CHECK(run_cli("export --case i --method equations --out /tmp/x.csv").exit_code == 2);
    CHECK(run_cli("export --case i --out /tmp/x.csv").exit_code == 2);  // no method
}

TEST_CASE("a refused solver exits with code 3") {
    std::ostringstream text;
    pfdkit::Scenario wide = pfdkit::builtin_case(pfdkit::CaseId::iii);
    wide.n = 9;  // beyond the default markov channel cap
    pfdkit::write_scenario(text, wide);
    const std::string path = write_temp("wide.cfg", text.str());
    const CliResult r = run_cli("run --scenario " + path + " --method markov");
    CHECK(r.exit_code == 3);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("error"));
}

TEST_CASE("filesystem failures exit with code 3") {
    CHECK(run_cli("export --case i --method fault_tree "
                  "--grid-points-per-interval 21 "
                  "--out /nonexistent_directory/curve.csv").exit_code == 3);
}
