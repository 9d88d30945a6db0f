#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "secdoar/composition.hpp"
#include "secdoar/core.hpp"
#include "secdoar/errors.hpp"
#include "secdoar/ingest.hpp"
#include "secdoar/metrics.hpp"
#include "secdoar/orchestration.hpp"
#include "secdoar/reporting.hpp"
#include "secdoar/semantic.hpp"
#include "secdoar/simgen.hpp"

namespace {

using namespace secdoar;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitComposition = 2;
constexpr int kExitIngest = 3;
constexpr int kExitAnalysis = 4;

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    return j;
}

// for content copied verbatim into report rows, document key order matters
nlohmann::ordered_json load_ordered_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    nlohmann::ordered_json j;
    in >> j;
    return j;
}

void write_output(const std::string& path, const std::string& content) {
    if (path == "-" || path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    out << content;
}

std::set<std::string> split_csv(const std::string& s) {
    std::set<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty())
                out.insert(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.insert(cur);
    return out;
}

composition::CompositionRequest make_request(const std::string& features_csv,
                                             const std::string& roles_csv) {
    composition::CompositionRequest req;
    req.required_features = split_csv(features_csv);
    for (const auto& r : split_csv(roles_csv)) {
        auto role = role_from_string(r);
        if (!role)
            throw ConfigError("unknown role: " + r);
        req.roles_required.insert(*role);
    }
    return req;
}

std::map<std::string, std::string> parse_params(const std::vector<std::string>& kvs) {
    std::map<std::string, std::string> out;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("bad --param, expected key=value: " + kv);
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

int cmd_ingest(const std::string& tool, const std::string& format,
               const std::string& input, const std::string& mapping_path,
               const std::string& store_dir, int year, const std::string& stats_out) {
    ingest::FieldMapping mapping =
        mapping_path.empty() ? ingest::default_mapping(format, tool)
                             : ingest::FieldMapping::from_json(load_json(mapping_path));
    if (mapping.tool_id != tool)
        throw MappingMismatch("mapping tool '" + mapping.tool_id +
                              "' does not match --tool '" + tool + "'");
    const auto coverage = mapping.coverage_violations();
    if (!coverage.empty())
        throw ConfigError("mapping: " + coverage.front());
    auto result = ingest::ingest_file(input, format, mapping, year);
    for (const auto& err : result.errors)
        std::cerr << "[ingest] " << input << " " << err << "\n";
    ingest::IntermediateStore store(store_dir);
    const auto counts = store.append(result.records);
    nlohmann::ordered_json stats = nlohmann::ordered_json::array();
    for (const auto& [t, n] : counts) {
        nlohmann::ordered_json row;
        row["toolId"] = t;
        row["records"] = static_cast<std::int64_t>(n);
        stats.push_back(std::move(row));
    }
    const std::string text = stats.dump(2) + "\n";
    if (!stats_out.empty())
        write_output(stats_out, text);
    else
        std::cout << text;
    if (!result.errors.empty())
        return kExitIngest;
    return kExitOk;
}

int cmd_compose_check(const std::string& registry_path, const std::string& assignment_path,
                      const std::string& features_csv, const std::string& roles_csv) {
    const auto registry = composition::ToolRegistry::load_file(registry_path);
    const auto assignment = composition::assignment_from_json(load_json(assignment_path));
    const auto req = make_request(features_csv, roles_csv);
    const auto result = composition::check_composition(registry, assignment, req);
    std::cout << composition::composition_result_to_json(result).dump(2) << "\n";
    return result.valid ? kExitOk : kExitComposition;
}

int cmd_compose_derive(const std::string& registry_path, const std::string& features_csv,
                       const std::string& roles_csv) {
    const auto registry = composition::ToolRegistry::load_file(registry_path);
    const auto req = make_request(features_csv, roles_csv);
    const auto results = composition::derive_compositions(registry, req);
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : results)
        out.push_back(composition::composition_result_to_json(r));
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& store_dir, const std::string& sim_path,
                const std::string& metric, double threshold, double window_s,
                int ddos_source_min, const std::vector<std::string>& params_kv,
                const std::string& out_path) {
    ingest::IntermediateStore store(store_dir);
    std::vector<std::vector<TrafficRecord>> datasets;
    for (const auto& tool : store.partitions())
        datasets.push_back(store.read_partition(tool));
    const auto sim = sim_path.empty() ? semantic::default_sim()
                                      : semantic::SemanticIntegrationModel::from_json(
                                            load_ordered_json(sim_path));
    const auto integrated = semantic::integrate_all(datasets, sim);
    const auto params = parse_params(params_kv);

    nlohmann::ordered_json out;
    if (metric == "dos" || metric == "dos_ddos") {
        const auto rates = metrics::window_rates(integrated, window_s);
        const auto findings = metrics::detect_dos_ddos(rates, threshold, ddos_source_min);
        nlohmann::ordered_json fs = nlohmann::ordered_json::array();
        for (const auto& f : findings)
            fs.push_back(finding_to_json(f));
        out["findings"] = std::move(fs);
    } else if (metric == "access_control") {
        Window window{0.0, 1.0};
        if (!integrated.empty()) {
            window.start_ts = std::floor(integrated.front().ts);
            window.end_ts = std::floor(integrated.back().ts) + 1.0;
            for (const auto& r : integrated) {
                window.start_ts = std::min(window.start_ts, std::floor(r.ts));
                window.end_ts = std::max(window.end_ts, std::floor(r.ts) + 1.0);
            }
        }
        if (auto it = params.find("window_start"); it != params.end())
            window.start_ts = std::stod(it->second);
        if (auto it = params.find("window_end"); it != params.end())
            window.end_ts = std::stod(it->second);
        const auto aggs = metrics::aggregate_login_attempts(integrated, window);
        nlohmann::ordered_json as = nlohmann::ordered_json::array();
        for (const auto& a : aggs)
            as.push_back(metrics::login_aggregate_to_json(a));
        out["aggregates"] = std::move(as);
    } else if (metric.rfind("ratio:", 0) == 0) {
        const auto num = params.find("numerator");
        const auto den = params.find("denominator");
        if (num == params.end() || den == params.end())
            throw ConfigError("ratio metrics need --param numerator=N denominator=D");
        std::pair<double, double> band{0.0, 1.0};
        if (auto it = params.find("band_lo"); it != params.end())
            band.first = std::stod(it->second);
        if (auto it = params.find("band_hi"); it != params.end())
            band.second = std::stod(it->second);
        const auto f = metrics::ratio_metric(std::stoll(num->second),
                                             std::stoll(den->second), metric, band);
        out["findings"] = nlohmann::ordered_json::array({finding_to_json(f)});
    } else if (metric == "availability") {
        const auto hs = params.find("horizon_start");
        const auto he = params.find("horizon_end");
        if (hs == params.end() || he == params.end())
            throw ConfigError(
                "availability needs --param horizon_start=S horizon_end=E");
        std::vector<Window> down;
        if (auto it = params.find("down"); it != params.end()) {
            // "start-end;start-end" pairs in epoch seconds
            std::size_t pos = 0;
            while (pos < it->second.size()) {
                const auto semi = it->second.find(';', pos);
                const std::string item = it->second.substr(
                    pos, semi == std::string::npos ? std::string::npos : semi - pos);
                const auto dash = item.find('-');
                if (dash == std::string::npos)
                    throw ConfigError("bad down interval: " + item);
                down.push_back({std::stod(item.substr(0, dash)),
                                std::stod(item.substr(dash + 1))});
                if (semi == std::string::npos)
                    break;
                pos = semi + 1;
            }
        }
        const auto f = metrics::availability_uptime(
            down, {std::stod(hs->second), std::stod(he->second)});
        out["findings"] = nlohmann::ordered_json::array({finding_to_json(f)});
    } else {
        throw ConfigError("unknown or descriptor-only metric: " + metric);
    }
    write_output(out_path, out.dump(2) + "\n");
    return kExitOk;
}

int cmd_report(const std::string& findings_path, const std::string& aggregates_path,
               const std::string& ingest_path, const std::string& format,
               const std::string& out_path, const std::string& fixed_now) {
    Report rep;
    rep.format = reporting::report_format_from_string(format);
    if (!fixed_now.empty()) {
        auto ts = parse_iso8601_utc(fixed_now);
        if (!ts)
            throw ConfigError("bad --fixed-now timestamp: " + fixed_now);
        rep.generated_at = *ts;
    } else {
        rep.generated_at = static_cast<double>(std::time(nullptr));
    }
    if (!ingest_path.empty()) {
        ReportSection s;
        s.title = reporting::kIngestSectionTitle;
        for (const auto& row : load_ordered_json(ingest_path))
            s.rows.push_back(row);
        rep.sections.push_back(std::move(s));
    }
    std::vector<Finding> findings;
    if (!findings_path.empty()) {
        const auto j = load_json(findings_path);
        for (const auto& fj : j.at("findings"))
            findings.push_back(finding_from_json(fj));
        // one section per metric id, first-seen order
        std::vector<std::string> order;
        std::map<std::string, std::vector<Finding>> by_metric;
        for (const auto& f : findings) {
            if (!by_metric.count(f.metric_id))
                order.push_back(f.metric_id);
            by_metric[f.metric_id].push_back(f);
        }
        for (const auto& id : order)
            rep.sections.push_back(reporting::findings_section(id, by_metric[id]));
    }
    std::vector<metrics::LoginAggregate> aggs;
    if (!aggregates_path.empty()) {
        const auto j = load_json(aggregates_path);
        for (const auto& aj : j.at("aggregates"))
            aggs.push_back(metrics::login_aggregate_from_json(aj));
        rep.sections.push_back(reporting::login_aggregates_section(aggs));
    }
    if (!findings_path.empty()) {
        rep.sections.push_back(
            reporting::target_summary_section(reporting::build_target_summary(findings)));
    }
    if (!findings_path.empty() && !aggregates_path.empty()) {
        rep.sections.push_back(reporting::invalid_access_section(
            reporting::build_invalid_access_summary_from_findings(aggs, findings)));
    }
    if (!findings_path.empty() || !aggregates_path.empty()) {
        rep.sections.push_back(reporting::source_summary_section(
            reporting::build_source_summary(findings, aggs)));
    }
    if (rep.format == ReportFormat::csv && out_path != "-" && !out_path.empty()) {
        // one file per section under the output directory
        std::filesystem::create_directories(out_path);
        for (const auto& file : reporting::render_csv_sections(rep)) {
            std::ofstream out(std::filesystem::path(out_path) / file.name);
            if (!out)
                throw Error("cannot write " + file.name);
            out << file.content;
        }
        return kExitOk;
    }
    write_output(out_path, reporting::render_report(rep, rep.format));
    return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& fixed_now) {
    auto cfg = orchestration::PipelineConfig::load_file(config_path);
    if (!fixed_now.empty()) {
        auto ts = parse_iso8601_utc(fixed_now);
        if (!ts)
            throw ConfigError("bad --fixed-now timestamp: " + fixed_now);
        cfg.fixed_now = *ts;
    }
    const auto outcome = orchestration::run_pipeline(cfg);
    std::cerr << "report written to " << cfg.report_out.string() << "\n";
    return kExitOk;
}

int cmd_simulate(std::uint64_t seed, double duration, double baseline_rate,
                 const std::string& scenario_path, const std::string& emit,
                 const std::string& out_path) {
    const auto scenario = simgen::ScenarioSpec::from_json(load_json(scenario_path));
    const auto format = simgen::emit_format_from_string(emit);
    const auto records = simgen::generate_trace(seed, duration, baseline_rate,
                                                scenario, format);
    write_output(out_path, simgen::emit_trace(records, format));
    return kExitOk;
}

int dispatch_error(const std::exception& e) {
    if (const auto* stage = dynamic_cast<const StageError*>(&e)) {
        std::cerr << "error " << stage->what() << "\n";
        if (stage->stage() == "compose")
            return kExitComposition;
        if (stage->stage() == "ingest" || stage->stage() == "integrate")
            return kExitIngest;
        if (stage->stage() == "analyze")
            return kExitAnalysis;
        return kExitError;
    }
    if (dynamic_cast<const CompositionInvalid*>(&e)) {
        std::cerr << "error [compose] " << e.what() << "\n";
        return kExitComposition;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SecDOAR pipeline: ingest, integrate, analyze and report "
                 "security telemetry"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse a tool log into the store");
    std::string in_tool, in_format, in_input, in_mapping, in_store, in_stats;
    int in_year = 1970;
    ingest_cmd->add_option("--tool", in_tool)->required();
    ingest_cmd->add_option("--format", in_format)->required()
        ->check(CLI::IsMember({"zeek", "snort", "jsonl"}));
    ingest_cmd->add_option("--input", in_input)->required();
    ingest_cmd->add_option("--mapping", in_mapping);
    ingest_cmd->add_option("--store", in_store)->required();
    ingest_cmd->add_option("--year", in_year);
    ingest_cmd->add_option("--stats-out", in_stats);

    // compose
    auto* compose_cmd = app.add_subcommand("compose", "Verify or derive tool compositions");
    compose_cmd->require_subcommand(1);
    auto* check_cmd = compose_cmd->add_subcommand("check", "Check one assignment");
    std::string ch_registry, ch_assignment, ch_require, ch_roles = "orchestration";
    check_cmd->add_option("--registry", ch_registry)->required();
    check_cmd->add_option("--assignment", ch_assignment)->required();
    check_cmd->add_option("--require", ch_require)->required();
    check_cmd->add_option("--roles", ch_roles);
    auto* derive_cmd = compose_cmd->add_subcommand("derive", "Enumerate minimal assignments");
    std::string de_registry, de_require, de_roles = "orchestration";
    derive_cmd->add_option("--registry", de_registry)->required();
    derive_cmd->add_option("--require", de_require)->required();
    derive_cmd->add_option("--roles", de_roles);

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Apply a metric to the store");
    std::string an_store, an_sim, an_metric, an_out = "-";
    double an_threshold = 20.0, an_window = 1.0;
    int an_source_min = 3;
    std::vector<std::string> an_params;
    analyze_cmd->add_option("--store", an_store)->required();
    analyze_cmd->add_option("--sim", an_sim);
    analyze_cmd->add_option("--metric", an_metric)->required();
    analyze_cmd->add_option("--threshold", an_threshold);
    analyze_cmd->add_option("--window-s", an_window);
    analyze_cmd->add_option("--ddos-source-min", an_source_min);
    analyze_cmd->add_option("--param", an_params);
    analyze_cmd->add_option("--out", an_out);

    // report
    auto* report_cmd = app.add_subcommand("report", "Render findings/aggregates");
    std::string rp_findings, rp_aggregates, rp_ingest, rp_format = "json",
                rp_out = "-", rp_now;
    report_cmd->add_option("--findings", rp_findings);
    report_cmd->add_option("--aggregates", rp_aggregates);
    report_cmd->add_option("--ingest", rp_ingest);
    report_cmd->add_option("--format", rp_format);
    report_cmd->add_option("--out", rp_out);
    report_cmd->add_option("--fixed-now", rp_now);

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the whole pipeline from a config");
    std::string rn_config, rn_now;
    run_cmd->add_option("--config", rn_config)->required();
    run_cmd->add_option("--fixed-now", rn_now);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic trace");
    std::uint64_t sm_seed = 42;
    double sm_duration = 60.0, sm_rate = 5.0;
    std::string sm_scenario, sm_emit = "jsonl", sm_out = "-";
    sim_cmd->add_option("--seed", sm_seed);
    sim_cmd->add_option("--duration", sm_duration);
    sim_cmd->add_option("--baseline-rate", sm_rate);
    sim_cmd->add_option("--scenario", sm_scenario)->required();
    sim_cmd->add_option("--emit", sm_emit)
        ->check(CLI::IsMember({"zeek", "snort", "jsonl"}));
    sim_cmd->add_option("--out", sm_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed())
            return cmd_ingest(in_tool, in_format, in_input, in_mapping, in_store,
                              in_year, in_stats);
        if (check_cmd->parsed())
            return cmd_compose_check(ch_registry, ch_assignment, ch_require, ch_roles);
        if (derive_cmd->parsed())
            return cmd_compose_derive(de_registry, de_require, de_roles);
        if (analyze_cmd->parsed())
            return cmd_analyze(an_store, an_sim, an_metric, an_threshold, an_window,
                               an_source_min, an_params, an_out);
        if (report_cmd->parsed())
            return cmd_report(rp_findings, rp_aggregates, rp_ingest, rp_format,
                              rp_out, rp_now);
        if (run_cmd->parsed())
            return cmd_run(rn_config, rn_now);
        if (sim_cmd->parsed())
            return cmd_simulate(sm_seed, sm_duration, sm_rate, sm_scenario, sm_emit,
                                sm_out);
    } catch (const std::exception& e) {
        return dispatch_error(e);
    }
    return kExitError;
}
