#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <thread>

#include "secdoar/errors.hpp"
#include "secdoar/orchestration.hpp"
#include "secdoar/reporting.hpp"
#include "secdoar/simgen.hpp"
#include "test_support.hpp"

using namespace secdoar;
using namespace secdoar::orchestration;

namespace {

TaggedRecord tagged(double ts) {
    TaggedRecord tr;
    tr.record.ts = ts;
    tr.record.tool_id = "zeek";
    return tr;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out);
    out << content;
}

// Registry JSON for the three-tool case study.
std::string case_study_registry_json() {
    return R"({
      "kinds": [
        {"id": "SecurityData", "parents": []},
        {"id": "NetworkAttack", "parents": ["SecurityData"]},
        {"id": "DoS", "parents": ["NetworkAttack"]},
        {"id": "DDoS", "parents": ["NetworkAttack"]}
      ],
      "features": ["DoS", "DDoS"],
      "tools": [
        {"id": "Snort", "features": ["DoS", "DDoS"], "functions": ["orchestration"],
         "interfaces": [{"id": "out", "produces": ["DoS", "DDoS"]}]},
        {"id": "Splunk", "features": ["DoS", "DDoS"], "functions": ["orchestration"],
         "interfaces": [{"id": "out", "produces": ["DoS", "DDoS"]}]},
        {"id": "LimaCharlie", "features": ["DoS", "DDoS"], "functions": ["orchestration"],
         "interfaces": [{"id": "out", "produces": ["DoS", "DDoS"]}]}
      ]
    })";
}

// A minimal runnable pipeline over a tiny jsonl input.
std::string pipeline_config_json(const std::string& input_name,
                                 const std::string& report_name,
                                 const std::string& metrics_json) {
    return std::string(R"({
      "inputs": [{"tool_id": "limacharlie", "format": "jsonl", "path": ")") +
           input_name + R"("}],
      "registry_path": "registry.json",
      "composition": {
        "require": ["DoS", "DDoS"],
        "roles": ["orchestration"],
        "assignment": {"orchestration": ["Snort", "Splunk", "LimaCharlie"]}
      },
      "metrics": )" +
           metrics_json + R"(,
      "report": {"format": "json", "out": ")" + report_name + R"("}
    })";
}

std::string tiny_trace_jsonl() {
    std::string out;
    for (int i = 0; i < 30; ++i) {
        TrafficRecord r;
        r.ts = 100.0 + i * 0.01;
        r.src_ip = "203.0.113." + std::to_string(i + 1);
        r.src_port = 40000 + i;
        r.dst_host = "54.85.240.191";
        r.dst_port = 443;
        r.tool_id = "limacharlie";
        r.bytes = 100;
        out += ingest::record_to_jsonl(r) + "\n";
    }
    return out;
}

} // namespace

TEST_CASE("channel preserves FIFO order") {
    auto ch = open_channel("c", 16);
    ch.push(tagged(1.0));
    ch.push(tagged(2.0));
    ch.push(tagged(3.0));
    const auto drained = ch.drain();
    REQUIRE(drained.size() == 3);
    CHECK(drained[0].record.ts == 1.0);
    CHECK(drained[1].record.ts == 2.0);
    CHECK(drained[2].record.ts == 3.0);
    CHECK(ch.size() == 0);
}

TEST_CASE("inactive channels reject pushes but drain") {
    auto ch = open_channel("c", 4);
    ch.push(tagged(1.0));
    ch.deactivate();
    CHECK_THROWS_AS(ch.push(tagged(2.0)), ChannelInactive);
    CHECK(ch.drain().size() == 1);
}

TEST_CASE("full channels reject pushes") {
    auto ch = open_channel("c", 2);
    ch.push(tagged(1.0));
    ch.push(tagged(2.0));
    CHECK_THROWS_AS(ch.push(tagged(3.0)), ChannelFull);
    CHECK(ch.size() == 2);
}

TEST_CASE("channel conserves records under producer/consumer threads") {
    DataChannel ch("pc", 64);
    constexpr int kTotal = 2000;
    std::size_t consumed = 0;
    std::thread producer([&] {
        int sent = 0;
        while (sent < kTotal) {
            try {
                ch.push(tagged(static_cast<double>(sent)));
                ++sent;
            } catch (const ChannelFull&) {
                std::this_thread::yield();
            }
        }
    });
    while (consumed < kTotal) {
        consumed += ch.drain().size();
        std::this_thread::yield();
    }
    producer.join();
    CHECK(consumed == kTotal);
    CHECK(ch.size() == 0);
}

TEST_CASE("tag_data applies first matching rule") {
    TagPolicy policy;
    policy.rules = {{std::string("snort"), std::nullopt, TagLevel::trusted},
                    {std::nullopt, std::string("172.31."), TagLevel::semi_trusted}};
    policy.default_level = TagLevel::public_;

    TrafficRecord snort_record;
    snort_record.tool_id = "snort";
    snort_record.dst_host = "172.31.27.153"; // both rules match: first wins
    CHECK(tag_data(snort_record, policy).level == TagLevel::trusted);

    TrafficRecord zeek_record;
    zeek_record.tool_id = "zeek";
    zeek_record.dst_host = "172.31.27.153";
    CHECK(tag_data(zeek_record, policy).level == TagLevel::semi_trusted);

    TrafficRecord other;
    other.tool_id = "zeek";
    other.dst_host = "10.0.0.1";
    CHECK(tag_data(other, policy).level == TagLevel::public_);
}

TEST_CASE("run_pipeline refuses an invalid composition without reading inputs") {
    testsupport::TempDir dir("gate");
    write_file(dir.path / "registry.json", case_study_registry_json());
    // the input file deliberately does not exist; the gate must fire first
    auto cfg = PipelineConfig::from_json(
        nlohmann::json::parse(pipeline_config_json("missing.jsonl", "report.json",
                                                   "[]")),
        dir.path);
    cfg.composition.required_features = {"DoS", "DDoS", "Phishing"};
    CHECK_THROWS_AS(run_pipeline(cfg), CompositionInvalid);
    CHECK_FALSE(std::filesystem::exists(dir.path / "report.json"));
}

TEST_CASE("run_pipeline with zero metrics still reports ingest statistics") {
    testsupport::TempDir dir("zero");
    write_file(dir.path / "registry.json", case_study_registry_json());
    write_file(dir.path / "trace.jsonl", tiny_trace_jsonl());
    auto cfg = PipelineConfig::from_json(
        nlohmann::json::parse(pipeline_config_json("trace.jsonl", "report.json", "[]")),
        dir.path);
    cfg.fixed_now = 1626740104.0;
    const auto outcome = run_pipeline(cfg);
    CHECK(outcome.findings.empty());
    REQUIRE(outcome.report.sections.size() == 1);
    CHECK(outcome.report.sections[0].title == reporting::kIngestSectionTitle);
    REQUIRE(outcome.report.sections[0].rows.size() == 1);
    CHECK(outcome.report.sections[0].rows[0].at("records") == 30);
    CHECK(std::filesystem::exists(dir.path / "report.json"));
}

TEST_CASE("run_pipeline detects the injected burst end to end") {
    testsupport::TempDir dir("run");
    write_file(dir.path / "registry.json", case_study_registry_json());
    write_file(dir.path / "trace.jsonl", tiny_trace_jsonl());
    auto cfg = PipelineConfig::from_json(
        nlohmann::json::parse(pipeline_config_json(
            "trace.jsonl", "report.json",
            R"([{"id": "dos_ddos", "params": {"threshold": 20, "window_s": 1,
                 "ddos_source_min": 3}},
                {"id": "access_control", "params": {}}])")),
        dir.path);
    cfg.fixed_now = 1626740104.0;
    const auto outcome = run_pipeline(cfg);
    REQUIRE(outcome.findings.size() == 1);
    CHECK(outcome.findings.front().kind == FindingKind::ddos);
    CHECK(outcome.findings.front().subject == "54.85.240.191:443");
    CHECK(outcome.aggregates.size() == 30); // one group per distinct source
    const std::vector<std::string> titles = {
        reporting::kIngestSectionTitle, "Findings: dos_ddos",
        reporting::kLoginAggregatesTitle, reporting::kTargetSummaryTitle,
        reporting::kInvalidAccessTitle, reporting::kSourceSummaryTitle};
    REQUIRE(outcome.report.sections.size() == titles.size());
    for (std::size_t i = 0; i < titles.size(); ++i)
        CHECK(outcome.report.sections[i].title == titles[i]);
}

TEST_CASE("run_pipeline output is deterministic for a fixed now") {
    testsupport::TempDir dir("det");
    write_file(dir.path / "registry.json", case_study_registry_json());
    write_file(dir.path / "trace.jsonl", tiny_trace_jsonl());
    // exercise the sim-file path rather than the built-in default
    write_file(dir.path / "sim.json", semantic::default_sim().to_json().dump(2));
    auto base = nlohmann::json::parse(pipeline_config_json(
        "trace.jsonl", "report.json",
        R"([{"id": "dos_ddos", "params": {"threshold": 20}}])"));
    base["sim_path"] = "sim.json";
    auto cfg = PipelineConfig::from_json(base, dir.path);
    cfg.fixed_now = 1626740104.0;
    const auto a = run_pipeline(cfg);
    const auto b = run_pipeline(cfg);
    CHECK(a.rendered == b.rendered);
    CHECK(a.findings.size() == 1);
}

TEST_CASE("run_pipeline tags findings when a policy is configured") {
    testsupport::TempDir dir("tags");
    write_file(dir.path / "registry.json", case_study_registry_json());
    write_file(dir.path / "trace.jsonl", tiny_trace_jsonl());
    auto base = nlohmann::json::parse(pipeline_config_json(
        "trace.jsonl", "report.json",
        R"([{"id": "dos_ddos", "params": {"threshold": 20}}])"));
    base["tagging"] = {{"default", "semi_trusted"},
                       {"rules", nlohmann::json::array()}};
    auto cfg = PipelineConfig::from_json(base, dir.path);
    cfg.fixed_now = 0.0;
    const auto outcome = run_pipeline(cfg);
    REQUIRE(outcome.findings.size() == 1);
    CHECK(outcome.findings.front().tag == TagLevel::semi_trusted);
}

TEST_CASE("run_pipeline evaluates ratio and availability metrics from params") {
    testsupport::TempDir dir("ratio");
    write_file(dir.path / "registry.json", case_study_registry_json());
    write_file(dir.path / "trace.jsonl", tiny_trace_jsonl());
    auto cfg = PipelineConfig::from_json(
        nlohmann::json::parse(pipeline_config_json(
            "trace.jsonl", "report.json",
            R"([{"id": "ratio:attackability",
                 "params": {"numerator": 8, "denominator": 10}},
                {"id": "availability",
                 "params": {"down": "10-20;15-25", "horizon_start": 0,
                            "horizon_end": 100}}])")),
        dir.path);
    cfg.fixed_now = 0.0;
    const auto outcome = run_pipeline(cfg);
    REQUIRE(outcome.findings.size() == 2);
    CHECK(outcome.findings[0].metric_id == "ratio:attackability");
    CHECK(outcome.findings[0].value == doctest::Approx(0.8));
    CHECK(outcome.findings[1].metric_id == "availability");
    CHECK(outcome.findings[1].value == doctest::Approx(0.85));
}

TEST_CASE("run_pipeline surfaces analysis errors with the stage name") {
    testsupport::TempDir dir("stage");
    write_file(dir.path / "registry.json", case_study_registry_json());
    write_file(dir.path / "trace.jsonl", tiny_trace_jsonl());
    auto cfg = PipelineConfig::from_json(
        nlohmann::json::parse(pipeline_config_json(
            "trace.jsonl", "report.json", R"([{"id": "audit", "params": {}}])")),
        dir.path);
    try {
        run_pipeline(cfg);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "analyze");
        CHECK(std::string(e.what()).find("descriptor-only") != std::string::npos);
    }
}
