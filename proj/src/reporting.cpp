#include "secdoar/reporting.hpp"

#include "secdoar/errors.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace secdoar::reporting {

namespace {

// Subjects are "host:port"; the port follows the last colon so IPv6 hosts
// survive the split.
std::pair<std::string, int> split_subject(const std::string& subject) {
    const auto pos = subject.rfind(':');
    if (pos == std::string::npos)
        return {subject, 0};
    int port = 0;
    try {
        port = std::stoi(subject.substr(pos + 1));
    } catch (...) {
        return {subject, 0};
    }
    return {subject.substr(0, pos), port};
}

bool is_attack(const Finding& f) {
    return f.kind == FindingKind::dos || f.kind == FindingKind::ddos;
}

std::string csv_escape(const std::string& field) {
    const bool needs_quotes =
        field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += "\"\"";
        else
            out += c;
    }
    out += '"';
    return out;
}

std::string csv_value(const nlohmann::ordered_json& v) {
    if (v.is_string())
        return csv_escape(v.get<std::string>());
    if (v.is_null())
        return "";
    return v.dump();
}

std::string slug(const std::string& title) {
    std::string out;
    for (unsigned char c : title) {
        if (std::isalnum(c))
            out += static_cast<char>(std::tolower(c));
        else if (!out.empty() && out.back() != '_')
            out += '_';
    }
    while (!out.empty() && out.back() == '_')
        out.pop_back();
    return out.empty() ? "section" : out;
}

std::string section_csv(const ReportSection& section) {
    std::string out;
    if (section.rows.empty())
        return out;
    const auto& first = section.rows.front();
    bool head = true;
    for (const auto& [key, value] : first.items()) {
        if (!head)
            out += ',';
        out += csv_escape(key);
        head = false;
    }
    out += "\r\n";
    for (const auto& row : section.rows) {
        head = true;
        for (const auto& [key, value] : row.items()) {
            if (!head)
                out += ',';
            out += csv_value(value);
            head = false;
        }
        out += "\r\n";
    }
    return out;
}

std::set<std::string> distinct_sources(const Finding& f) {
    std::set<std::string> out;
    for (const auto& ref : f.evidence) {
        if (!ref.src_ip.empty())
            out.insert(ref.src_ip);
    }
    return out;
}

std::vector<InvalidAccessRow>
invalid_access_rows(std::span<const metrics::LoginAggregate> aggs,
                    const std::set<std::string>& flagged_dests) {
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> totals; // failed, attempts
    for (const auto& a : aggs) {
        if (!flagged_dests.count(a.dest_ip))
            continue;
        auto& [failed, attempts] = totals[a.dest_ip];
        failed += a.failed_login_count;
        attempts += a.attempt_num;
    }
    std::vector<InvalidAccessRow> out;
    for (const auto& [dest, counts] : totals) {
        if (counts.second == 0)
            continue; // flagged but no attempts recorded: no denominator
        out.push_back({dest, 100.0 * static_cast<double>(counts.first) /
                                 static_cast<double>(counts.second)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.invalid_percent != b.invalid_percent)
            return a.invalid_percent > b.invalid_percent;
        return a.dest_ip < b.dest_ip;
    });
    return out;
}

} // namespace

std::vector<TargetSummaryRow> build_target_summary(std::span<const Finding> findings) {
    struct Acc {
        std::int64_t windows = 0;
        double peak = 0.0;
    };
    std::map<std::pair<std::string, int>, Acc> by_target;
    for (const Finding& f : findings) {
        if (!is_attack(f))
            continue;
        auto key = split_subject(f.subject);
        Acc& acc = by_target[key];
        ++acc.windows;
        acc.peak = std::max(acc.peak, f.value);
    }
    std::vector<TargetSummaryRow> out;
    for (const auto& [key, acc] : by_target)
        out.push_back({key.first, key.second, acc.windows, acc.peak});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.attack_windows != b.attack_windows)
            return a.attack_windows > b.attack_windows;
        if (a.dst_host != b.dst_host)
            return a.dst_host < b.dst_host;
        return a.dst_port < b.dst_port;
    });
    return out;
}

std::vector<InvalidAccessRow>
build_invalid_access_summary(std::span<const metrics::LoginAggregate> aggs,
                             const metrics::RateTable& rates, double threshold,
                             const metrics::HostIdFormatter& host_id) {
    if (threshold <= 0)
        throw Error("threshold must be positive");
    std::set<std::string> flagged;
    for (const auto& [key, cell] : rates.cells) {
        if (static_cast<double>(cell.count) > threshold)
            flagged.insert(host_id(key.dst_host));
    }
    return invalid_access_rows(aggs, flagged);
}

std::vector<InvalidAccessRow>
build_invalid_access_summary_from_findings(std::span<const metrics::LoginAggregate> aggs,
                                           std::span<const Finding> findings,
                                           const metrics::HostIdFormatter& host_id) {
    std::set<std::string> flagged;
    for (const Finding& f : findings) {
        if (is_attack(f))
            flagged.insert(host_id(split_subject(f.subject).first));
    }
    return invalid_access_rows(aggs, flagged);
}

std::vector<SourceSummaryRow>
build_source_summary(std::span<const Finding> findings,
                     std::span<const metrics::LoginAggregate> aggs) {
    std::map<std::string, std::int64_t> counts;
    for (const Finding& f : findings) {
        if (!is_attack(f))
            continue;
        for (const auto& src : distinct_sources(f))
            ++counts[src];
    }
    for (const auto& a : aggs) {
        if (a.failed_login_count > 0)
            ++counts[a.source_ip];
    }
    std::vector<SourceSummaryRow> out;
    for (const auto& [src, n] : counts)
        out.push_back({src, n});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.attack_count != b.attack_count)
            return a.attack_count > b.attack_count;
        return a.source_ip < b.source_ip;
    });
    return out;
}

ReportSection target_summary_section(const std::vector<TargetSummaryRow>& rows) {
    ReportSection s;
    s.title = kTargetSummaryTitle;
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["destHost"] = r.dst_host;
        row["destPort"] = r.dst_port;
        row["attackWindows"] = r.attack_windows;
        row["peakRate"] = json_number(r.peak_rate);
        s.rows.push_back(std::move(row));
    }
    return s;
}

ReportSection invalid_access_section(const std::vector<InvalidAccessRow>& rows) {
    ReportSection s;
    s.title = kInvalidAccessTitle;
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["destIP"] = r.dest_ip;
        row["invalidPercent"] = json_number(r.invalid_percent);
        s.rows.push_back(std::move(row));
    }
    return s;
}

ReportSection source_summary_section(const std::vector<SourceSummaryRow>& rows) {
    ReportSection s;
    s.title = kSourceSummaryTitle;
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["sourceIp"] = r.source_ip;
        row["attackCount"] = r.attack_count;
        s.rows.push_back(std::move(row));
    }
    return s;
}

ReportSection findings_section(const std::string& metric_id,
                               std::span<const Finding> findings) {
    ReportSection s;
    s.title = "Findings: " + metric_id;
    for (const Finding& f : findings) {
        nlohmann::ordered_json row;
        row["metricId"] = f.metric_id;
        row["windowStart"] = format_iso8601_utc(f.window.start_ts);
        row["windowEnd"] = format_iso8601_utc(f.window.end_ts);
        row["subject"] = f.subject;
        row["kind"] = finding_kind_to_string(f.kind);
        row["value"] = json_number(f.value);
        row["severity"] = severity_to_string(f.severity);
        row["sources"] = static_cast<std::int64_t>(distinct_sources(f).size());
        if (f.tag)
            row["tag"] = tag_level_to_string(*f.tag);
        s.rows.push_back(std::move(row));
    }
    return s;
}

ReportSection login_aggregates_section(std::span<const metrics::LoginAggregate> aggs) {
    ReportSection s;
    s.title = kLoginAggregatesTitle;
    for (const auto& a : aggs)
        s.rows.push_back(metrics::login_aggregate_to_json(a));
    return s;
}

std::string render_report(const Report& rep, ReportFormat format) {
    if (format == ReportFormat::json) {
        nlohmann::ordered_json j;
        j["schema"] = "secdoar-report/1";
        j["generated_at"] = format_iso8601_utc(rep.generated_at);
        j["stages"] = rep.stage_labels;
        nlohmann::ordered_json sections = nlohmann::ordered_json::array();
        for (const auto& s : rep.sections) {
            nlohmann::ordered_json sj;
            sj["title"] = s.title;
            sj["rows"] = s.rows;
            sections.push_back(std::move(sj));
        }
        j["sections"] = std::move(sections);
        return j.dump(2) + "\n";
    }
    // CSV: one table per section, prefixed with a title record.
    std::string out;
    for (const auto& s : rep.sections) {
        out += "section," + csv_escape(s.title) + "\r\n";
        out += section_csv(s);
        out += "\r\n";
    }
    return out;
}

ReportFormat report_format_from_string(std::string_view name) {
    if (name == "json")
        return ReportFormat::json;
    if (name == "csv")
        return ReportFormat::csv;
    throw UnsupportedFormat("unsupported report format: " + std::string(name));
}

std::string render_report(const Report& rep, std::string_view format_name) {
    return render_report(rep, report_format_from_string(format_name));
}

Report parse_report(const std::string& json_text) {
    const auto j = nlohmann::ordered_json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error("report is not valid JSON");
    if (!j.contains("schema") || j.at("schema").get<std::string>() != "secdoar-report/1")
        throw Error("unknown report schema");
    Report rep;
    const auto ts = parse_iso8601_utc(j.at("generated_at").get<std::string>());
    if (!ts)
        throw Error("bad generated_at timestamp");
    rep.generated_at = *ts;
    const auto stages = j.at("stages");
    if (stages.size() != rep.stage_labels.size())
        throw Error("report must carry exactly three stage labels");
    for (std::size_t i = 0; i < rep.stage_labels.size(); ++i)
        rep.stage_labels[i] = stages.at(i).get<std::string>();
    for (const auto& sj : j.at("sections")) {
        ReportSection s;
        s.title = sj.at("title").get<std::string>();
        for (const auto& row : sj.at("rows"))
            s.rows.push_back(row);
        rep.sections.push_back(std::move(s));
    }
    return rep;
}

std::vector<CsvFile> render_csv_sections(const Report& rep) {
    std::vector<CsvFile> out;
    for (const auto& s : rep.sections)
        out.push_back({slug(s.title) + ".csv", section_csv(s)});
    return out;
}

} // namespace secdoar::reporting
