// End-to-end checks of the installed command surface: drives the real binary
// (path from SECDOAR_BIN) and verifies that `run` equals the manual
// ingest -> analyze -> report chain byte for byte.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "secdoar/composition.hpp"
#include "secdoar/core.hpp"
#include "test_support.hpp"

using namespace secdoar;

namespace {

std::string binary() {
    const char* env = std::getenv("SECDOAR_BIN");
    REQUIRE_MESSAGE(env != nullptr, "SECDOAR_BIN must point at the CLI binary");
    return env;
}

int run_cmd(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), ("missing file: " + path.string()).c_str());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

const char* kScenarioJson = R"({
  "targets": [{"host": "54.85.240.191", "port": 443}],
  "injections": [{
    "start": 20, "duration": 10, "rate": 50, "n_sources": 40,
    "target": {"host": "54.85.240.191", "port": 443},
    "failure_fraction": 0.0
  }]
})";

std::string registry_json() {
    // build via the library so the file matches to_json output exactly
    composition::ToolRegistry reg;
    reg.add_kind({"SecurityData", {}});
    reg.add_kind({"NetworkAttack", {"SecurityData"}});
    reg.add_kind({"DoS", {"NetworkAttack"}});
    reg.add_kind({"DDoS", {"NetworkAttack"}});
    reg.add_feature("DoS");
    reg.add_feature("DDoS");
    for (const char* id : {"Snort", "Splunk", "LimaCharlie"}) {
        ToolDescriptor t;
        t.id = id;
        t.features = {"DoS", "DDoS"};
        t.functions = {Role::orchestration};
        t.interfaces = {{std::string(id) + ":out", {}, {"DoS", "DDoS"}}};
        reg.register_tool(t);
    }
    return reg.to_json().dump(2);
}

} // namespace

TEST_CASE("run equals the manual ingest-analyze-report chain") {
    testsupport::TempDir dir("cli");
    const std::string bin = binary();
    const auto p = [&](const std::string& name) { return (dir.path / name).string(); };

    write_file(dir.path / "scenario.json", kScenarioJson);
    write_file(dir.path / "registry.json", registry_json());

    CHECK(run_cmd(bin + " simulate --seed 42 --duration 60 --baseline-rate 5"
                        " --scenario " + p("scenario.json") +
                  " --emit zeek --out " + p("trace.zeek")) == 0);

    // manual chain
    CHECK(run_cmd(bin + " ingest --tool zeek --format zeek --input " + p("trace.zeek") +
                  " --store " + p("store") + " --stats-out " + p("stats.json")) == 0);
    CHECK(run_cmd(bin + " analyze --store " + p("store") +
                  " --metric dos --threshold 20 --window-s 1 --ddos-source-min 3"
                  " --out " + p("findings.json")) == 0);
    CHECK(run_cmd(bin + " analyze --store " + p("store") +
                  " --metric access_control --out " + p("aggregates.json")) == 0);
    CHECK(run_cmd(bin + " report --findings " + p("findings.json") +
                  " --aggregates " + p("aggregates.json") +
                  " --ingest " + p("stats.json") +
                  " --format json --fixed-now 2021-07-20T00:15:04 --out " +
                  p("manual.json")) == 0);

    // one-shot pipeline over the same input
    write_file(dir.path / "pipeline.json", R"({
      "inputs": [{"tool_id": "zeek", "format": "zeek", "path": "trace.zeek"}],
      "registry_path": "registry.json",
      "composition": {
        "require": ["DoS", "DDoS"],
        "roles": ["orchestration"],
        "assignment": {"orchestration": ["Snort", "Splunk", "LimaCharlie"]}
      },
      "metrics": [
        {"id": "dos_ddos", "params": {"threshold": 20, "window_s": 1, "ddos_source_min": 3}},
        {"id": "access_control", "params": {}}
      ],
      "report": {"format": "json", "out": "run.json"}
    })");
    CHECK(run_cmd(bin + " run --config " + p("pipeline.json") +
                  " --fixed-now 2021-07-20T00:15:04") == 0);

    CHECK(slurp(dir.path / "run.json") == slurp(dir.path / "manual.json"));

    // the findings file lists exactly the ten injected windows
    const auto findings = nlohmann::json::parse(slurp(dir.path / "findings.json"));
    REQUIRE(findings.at("findings").size() == 10);
    std::set<int> windows;
    for (const auto& f : findings.at("findings")) {
        windows.insert(static_cast<int>(f.at("window").at("start").get<double>()));
        CHECK(f.at("kind") == "ddos");
    }
    CHECK(windows == std::set<int>{20, 21, 22, 23, 24, 25, 26, 27, 28, 29});
}

TEST_CASE("compose derive and check agree on the case-study registry") {
    testsupport::TempDir dir("cli_compose");
    const std::string bin = binary();
    const auto p = [&](const std::string& name) { return (dir.path / name).string(); };
    write_file(dir.path / "registry.json", registry_json());

    CHECK(run_cmd(bin + " compose derive --registry " + p("registry.json") +
                  " --require DoS,DDoS > " + p("derived.json")) == 0);
    const auto derived = nlohmann::json::parse(slurp(dir.path / "derived.json"));
    REQUIRE(!derived.empty());
    CHECK(derived.at(0).at("valid") == true);
    // singleton assignments first; LimaCharlie sorts before Snort and Splunk
    CHECK(derived.at(0).at("assignment").at("orchestration") ==
          nlohmann::json::array({"LimaCharlie"}));

    write_file(dir.path / "assignment.json",
               R"({"orchestration": ["Snort", "Splunk", "LimaCharlie"]})");
    CHECK(run_cmd(bin + " compose check --registry " + p("registry.json") +
                  " --assignment " + p("assignment.json") +
                  " --require DoS,DDoS > " + p("check.json")) == 0);
    CHECK(nlohmann::json::parse(slurp(dir.path / "check.json")).at("valid") == true);

    // an unsatisfied feature flips the verdict and the exit code
    CHECK(run_cmd(bin + " compose check --registry " + p("registry.json") +
                  " --assignment " + p("assignment.json") +
                  " --require DoS,Phishing > " + p("check2.json")) == 2);
}

TEST_CASE("run refuses to start on an invalid composition") {
    testsupport::TempDir dir("cli_gate");
    const std::string bin = binary();
    const auto p = [&](const std::string& name) { return (dir.path / name).string(); };
    write_file(dir.path / "registry.json", registry_json());
    // input file is never created; the composition gate must fire first
    write_file(dir.path / "pipeline.json", R"({
      "inputs": [{"tool_id": "zeek", "format": "zeek", "path": "missing.zeek"}],
      "registry_path": "registry.json",
      "composition": {
        "require": ["Phishing"],
        "roles": ["orchestration"],
        "assignment": {"orchestration": ["Snort"]}
      },
      "metrics": [],
      "report": {"format": "json", "out": "never.json"}
    })");
    CHECK(run_cmd(bin + " run --config " + p("pipeline.json") + " 2> /dev/null") == 2);
    CHECK_FALSE(std::filesystem::exists(dir.path / "never.json"));
}

TEST_CASE("csv reports land one file per section") {
    testsupport::TempDir dir("cli_csv");
    const std::string bin = binary();
    const auto p = [&](const std::string& name) { return (dir.path / name).string(); };
    write_file(dir.path / "scenario.json", kScenarioJson);
    CHECK(run_cmd(bin + " simulate --seed 1 --duration 30 --baseline-rate 3"
                        " --scenario " + p("scenario.json") +
                  " --emit jsonl --out " + p("trace.jsonl")) == 0);

    SUBCASE("snort traces ingest with an explicit year") {
        CHECK(run_cmd(bin + " simulate --seed 2 --duration 60 --baseline-rate 2"
                            " --scenario " + p("scenario.json") +
                      " --emit snort --out " + p("trace.snort")) == 0);
        CHECK(run_cmd(bin + " ingest --tool snort --format snort --year 1970"
                            " --input " + p("trace.snort") +
                      " --store " + p("store2")) == 0);
        CHECK(std::filesystem::exists(dir.path / "store2" / "snort.jsonl"));
    }

    CHECK(run_cmd(bin + " ingest --tool limacharlie --format jsonl --input " +
                  p("trace.jsonl") + " --store " + p("store")) == 0);
    CHECK(run_cmd(bin + " analyze --store " + p("store") +
                  " --metric dos --threshold 20 --out " + p("findings.json")) == 0);
    CHECK(run_cmd(bin + " analyze --store " + p("store") +
                  " --metric access_control --out " + p("aggregates.json")) == 0);
    CHECK(run_cmd(bin + " report --findings " + p("findings.json") +
                  " --aggregates " + p("aggregates.json") +
                  " --format csv --fixed-now 2021-07-20T00:15:04 --out " +
                  p("csv_out")) == 0);
    CHECK(std::filesystem::exists(dir.path / "csv_out" / "login_attempt_aggregates.csv"));
    CHECK(std::filesystem::exists(dir.path / "csv_out" / "attack_target_summary.csv"));
    CHECK(std::filesystem::exists(dir.path / "csv_out" / "attack_source_summary.csv"));

    // unsupported format is refused
    CHECK(run_cmd(bin + " report --findings " + p("findings.json") +
                  " --format xml --out " + p("x.out") + " 2> /dev/null") == 1);

    // ratio metrics run from --param pairs
    CHECK(run_cmd(bin + " analyze --store " + p("store") +
                  " --metric ratio:attackability --param numerator=8"
                  " --param denominator=10 --out " + p("ratio.json")) == 0);
    const auto ratio = nlohmann::json::parse(slurp(dir.path / "ratio.json"));
    CHECK(ratio.at("findings").at(0).at("value").get<double>() ==
          doctest::Approx(0.8));
}
