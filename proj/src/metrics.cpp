#include "secdoar/metrics.hpp"

#include "secdoar/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace secdoar::metrics {

RateTable window_rates(std::span<const TrafficRecord> rs, double width) {
    if (width <= 0)
        throw Error("window width must be positive");
    RateTable table;
    table.width = width;
    for (const TrafficRecord& r : rs) {
        CellKey key{r.dst_host, r.dst_port,
                    static_cast<std::int64_t>(std::floor(r.ts / width))};
        CellStats& cell = table.cells[key];
        ++cell.count;
        cell.sources.insert(r.src_ip);
        cell.refs.push_back({r.ts, r.src_ip, r.tool_id});
    }
    return table;
}

std::vector<Finding> detect_dos_ddos(const RateTable& rates, double threshold,
                                     int ddos_source_min) {
    if (threshold <= 0)
        throw Error("threshold must be positive");
    if (ddos_source_min < 2)
        throw Error("ddos_source_min must be at least 2");
    std::vector<Finding> out;
    for (const auto& [key, cell] : rates.cells) {
        if (static_cast<double>(cell.count) <= threshold)
            continue; // strict: "more than N requests per second"
        Finding f;
        f.metric_id = "dos_ddos";
        f.window.start_ts = static_cast<double>(key.window_index) * rates.width;
        f.window.end_ts = f.window.start_ts + rates.width;
        f.subject = key.dst_host + ":" + std::to_string(key.dst_port);
        f.kind = cell.distinct_sources() >= static_cast<std::size_t>(ddos_source_min)
                     ? FindingKind::ddos
                     : FindingKind::dos;
        f.value = static_cast<double>(cell.count) / rates.width;
        f.evidence = cell.refs;
        f.severity = Severity::critical;
        out.push_back(std::move(f));
    }
    return out;
}

std::string dash_host_id(const std::string& host) {
    const bool dotted_numeric =
        !host.empty() && std::all_of(host.begin(), host.end(), [](unsigned char c) {
            return std::isdigit(c) || c == '.';
        }) && host.find('.') != std::string::npos;
    if (!dotted_numeric)
        return host;
    std::string out = host;
    std::replace(out.begin(), out.end(), '.', '-');
    return out;
}

std::vector<LoginAggregate>
aggregate_login_attempts(std::span<const TrafficRecord> rs, const Window& window,
                         const HostIdFormatter& host_id) {
    if (!(window.end_ts > window.start_ts))
        throw Error("aggregate window must be non-empty");
    struct Group {
        LoginAggregate agg;
        std::vector<int> seen_ports;
        double min_ts = 0;
        double max_ts = 0;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;
    for (const TrafficRecord& r : rs) {
        if (!window.contains(r.ts))
            continue;
        auto key = std::make_pair(r.src_ip, r.dst_host);
        auto [it, fresh] = groups.try_emplace(key);
        Group& g = it->second;
        if (fresh) {
            g.agg.source_ip = r.src_ip;
            g.agg.dest_ip = host_id(r.dst_host);
            g.min_ts = g.max_ts = r.ts;
        }
        g.min_ts = std::min(g.min_ts, r.ts);
        g.max_ts = std::max(g.max_ts, r.ts);
        ++g.agg.attempt_num;
        if (r.auth && r.auth->outcome == AuthInfo::Outcome::failure)
            ++g.agg.failed_login_count;
        if (std::find(g.seen_ports.begin(), g.seen_ports.end(), r.dst_port) ==
            g.seen_ports.end())
            g.seen_ports.push_back(r.dst_port);
    }
    std::vector<LoginAggregate> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        std::string ports;
        for (int p : g.seen_ports) {
            if (!ports.empty())
                ports += ';';
            ports += std::to_string(p);
        }
        g.agg.port_list = std::move(ports);
        g.agg.start_time = format_iso8601_utc(g.min_ts);
        g.agg.end_time = format_iso8601_utc(g.max_ts);
        out.push_back(std::move(g.agg));
    }
    // map key order already gives (sourceIp, destHost) ascending
    return out;
}

nlohmann::ordered_json login_aggregate_to_json(const LoginAggregate& a) {
    nlohmann::ordered_json j;
    j["failedLoginCount"] = a.failed_login_count;
    j["portList"] = a.port_list;
    j["startTime"] = a.start_time;
    j["endTime"] = a.end_time;
    j["sourceIp"] = a.source_ip;
    j["destIP"] = a.dest_ip;
    j["attemptNum"] = a.attempt_num;
    return j;
}

LoginAggregate login_aggregate_from_json(const nlohmann::json& j) {
    LoginAggregate a;
    a.failed_login_count = j.at("failedLoginCount").get<std::int64_t>();
    a.port_list = j.at("portList").get<std::string>();
    a.start_time = j.at("startTime").get<std::string>();
    a.end_time = j.at("endTime").get<std::string>();
    a.source_ip = j.at("sourceIp").get<std::string>();
    a.dest_ip = j.at("destIP").get<std::string>();
    a.attempt_num = j.at("attemptNum").get<std::int64_t>();
    return a;
}

Finding ratio_metric(std::int64_t numerator, std::int64_t denominator,
                     const std::string& metric_id, std::pair<double, double> band) {
    if (numerator < 0 || denominator < 0)
        throw Error("ratio counts must be non-negative");
    Finding f;
    f.metric_id = metric_id;
    f.window = {0.0, 1.0};
    f.subject = metric_id;
    f.kind = FindingKind::ratio_report;
    if (denominator == 0) {
        if (numerator > 0)
            throw ZeroDenominator("ratio " + metric_id + ": denominator is zero");
        f.value = 0.0; // 0/0 reports as zero by convention
    } else {
        f.value = static_cast<double>(numerator) / static_cast<double>(denominator);
    }
    f.evidence = {{0.0, "", "numerator=" + std::to_string(numerator)},
                  {0.0, "", "denominator=" + std::to_string(denominator)}};
    f.severity = (f.value < band.first || f.value > band.second) ? Severity::warn
                                                                 : Severity::info;
    return f;
}

Finding availability_uptime(const std::vector<Window>& down_intervals,
                            const Window& horizon) {
    if (!(horizon.end_ts > horizon.start_ts))
        throw Error("horizon must be non-empty");
    for (const Window& w : down_intervals) {
        if (w.start_ts < horizon.start_ts || w.end_ts > horizon.end_ts ||
            w.end_ts < w.start_ts)
            throw IntervalOutOfHorizon("down interval outside horizon");
    }
    std::vector<Window> sorted = down_intervals;
    std::sort(sorted.begin(), sorted.end(), [](const Window& a, const Window& b) {
        return a.start_ts < b.start_ts || (a.start_ts == b.start_ts && a.end_ts < b.end_ts);
    });
    std::vector<Window> merged;
    for (const Window& w : sorted) {
        if (w.end_ts <= w.start_ts)
            continue;
        if (!merged.empty() && w.start_ts <= merged.back().end_ts)
            merged.back().end_ts = std::max(merged.back().end_ts, w.end_ts);
        else
            merged.push_back(w);
    }
    double down = 0.0;
    for (const Window& w : merged)
        down += w.width();
    Finding f;
    f.metric_id = "availability";
    f.window = horizon;
    f.subject = "availability";
    f.value = 1.0 - down / horizon.width();
    if (down > 0.0) {
        f.kind = FindingKind::availability_gap;
        f.severity = Severity::warn;
        for (const Window& w : merged) {
            f.evidence.push_back({w.start_ts, "",
                                  "down[" + format_iso8601_utc(w.start_ts) + "," +
                                      format_iso8601_utc(w.end_ts) + ")"});
        }
    } else {
        f.kind = FindingKind::none;
        f.severity = Severity::info;
    }
    return f;
}

std::vector<MetricSpec> metric_catalog() {
    std::vector<MetricSpec> out;
    auto add = [&](std::string id, std::string focus, std::vector<std::string> elements,
                   std::string evaluator, std::vector<std::string> schemes,
                   std::vector<std::string> responses) {
        MetricSpec m;
        m.id = std::move(id);
        m.focus = std::move(focus);
        m.elements = std::move(elements);
        m.measurement_scheme = std::move(evaluator);
        m.schemes = std::move(schemes);
        m.responses = std::move(responses);
        out.push_back(std::move(m));
    };
    add("dos_ddos", "Denial of service and distributed denial of service attacks",
        {"Attack count"}, "dos_ddos",
        {"How many times a system has been attacked?", "What are sources of attacks?",
         "What ports and hosted systems are under attack?"},
        {"Reporting frequency of attacks", "Report statistics of network traffic"});
    add("access_control", "Access control breaches",
        {"Authentication", "Non-repudiation", "Authorisation", "Intrusion Detection",
         "Multi-tenancy or compartmentalisation"},
        "access_control",
        {"User authentication scheme", "User identification scheme",
         "Password implementation or strategy",
         "Successful or unsuccessful password attempts", "Monitoring system use",
         "Count of unauthorised access attempts", "Login attempts count"},
        {"Block unauthorised access",
         "Logging details of targeted systems IPs, components and APIs",
         "Log credentials used for attack"});
    add("confidentiality_privacy", "Confidentiality and privacy",
        {"Required behaviour", "Side channel vulnerability factor",
         "Information leakage measurement",
         "Correlation between attack execution and attack observation"},
        "descriptor-only", {"Maintain system logs"},
        {"Tag data that has been targeted in privacy attack",
         "Log details of compromised data and corresponding data owners",
         "Prepare notifications and strategies for reporting privacy breaches"});
    add("integrity", "Integrity", {"Data integrity importance", "Integrity Impact"},
        "ratio:integrity",
        {"Calculate violation checks per input or data access request",
         "Measuring impact of vulnerability on a system integrity",
         "Measuring ratio of risky classes or functions with respect to total access "
         "classes"},
        {"Log integrity violations",
         "Report types and magnitude of integrity violation",
         "Periodic design-time and run-time integrity checks"});
    add("audit", "Audit", {"Audit trail comprehensiveness"}, "descriptor-only",
        {"Track access to data"},
        {"Log critical events associated with features and data access as well as "
         "data updates"});
    add("availability", "Availability", {"System services availability"},
        "availability", {"Denial of service mitigation plan"},
        {"Log and report system downtime"});
    add("source_code", "Source code",
        {"Classified attributes inheritance", "Critical class extensibility",
         "Variable vulnerability"},
        "descriptor-only",
        {"Tracking use of classified attributes", "Making critical classes "
         "non-extendable",
         "Evaluating security relevancy of variables"},
        {"Periodic source code security checks on source code and reporting"});
    add("version_control", "Version control", {"Source code or data changes count"},
        "descriptor-only", {"Tracking how often a source code or data is changed"},
        {"Logging and reporting of changes according to the defined rules"});
    add("data_flow", "Data-flow", {"Dependency graph"}, "descriptor-only",
        {"Tracking how data flows between different elements of the system"},
        {"Tagging security and privacy sensitive data, tracking the sensitive data "
         "movements and reporting the data movements according to the defined rules"});
    add("time", "Time",
        {"Meantime to fix bugs", "Meantime to repair", "Attack execution time"},
        "descriptor-only",
        {"Meantime between discovery and fixing software bugs",
         "Length of time for which an attack has been executed"},
        {"Reporting system downtime and losses in terms of data, business and "
         "monetary elements"});
    add("attackability", "Attackability",
        {"Attack count", "Attack prone", "Vulnerability Index"}, "ratio:attackability",
        {"Probability of a system to be attacked",
         "Probability of being exploited as a result of an attack",
         "Ratio of fixed vulnerability as compared to discovered vulnerabilities"},
        {"Reporting attack surface metrics"});
    add("attack_surface", "Software attack surface",
        {"Sensitivity sink", "Attack graph probability", "Exploitability Risk"},
        "descriptor-only",
        {"Probability that software or a program can be exploited for security breach",
         "Probability of an attack to succeed",
         "Access to vulnerable code through system interfaces",
         "Probability of sensitive data being exposed as a result of an attack"},
        {"Executing and reporting periodic software vulnerability check reports"});
    add("feature_coverage", "Security feature/requirement incorporated or not",
        {"Incorporated versus total security features/requirements"},
        "ratio:feature_coverage",
        {"Ratio of implemented versus total required security requirements or "
         "features"},
        {"Logging and reporting system security completion status"});
    return out;
}

} // namespace secdoar::metrics
