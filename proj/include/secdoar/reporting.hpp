#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "secdoar/core.hpp"
#include "secdoar/metrics.hpp"

namespace secdoar::reporting {

// Destinations under attack, ordered by window count then host.
struct TargetSummaryRow {
    std::string dst_host;
    int dst_port = 0;
    std::int64_t attack_windows = 0;
    double peak_rate = 0.0;
};

std::vector<TargetSummaryRow> build_target_summary(std::span<const Finding> findings);

// Percentage of failed attempts for destinations that exceeded the
// rate threshold in at least one window.
struct InvalidAccessRow {
    std::string dest_ip; // host-id form matching the aggregates
    double invalid_percent = 0.0;
};

std::vector<InvalidAccessRow>
build_invalid_access_summary(std::span<const metrics::LoginAggregate> aggs,
                             const metrics::RateTable& rates, double threshold,
                             const metrics::HostIdFormatter& host_id = metrics::dash_host_id);

// Same summary driven by already-detected findings (a destination has a
// finding exactly when it exceeded the threshold in some window).
std::vector<InvalidAccessRow>
build_invalid_access_summary_from_findings(std::span<const metrics::LoginAggregate> aggs,
                                           std::span<const Finding> findings,
                                           const metrics::HostIdFormatter& host_id =
                                               metrics::dash_host_id);

// Sources implicated by findings or by failed logins.
struct SourceSummaryRow {
    std::string source_ip;
    std::int64_t attack_count = 0;
};

std::vector<SourceSummaryRow>
build_source_summary(std::span<const Finding> findings,
                     std::span<const metrics::LoginAggregate> aggs);

// Section titles used by the pipeline and the CLI.
inline constexpr const char* kIngestSectionTitle = "Ingest Statistics";
inline constexpr const char* kLoginAggregatesTitle = "Login Attempt Aggregates";
inline constexpr const char* kTargetSummaryTitle = "Attack Target Summary";
inline constexpr const char* kInvalidAccessTitle = "Invalid Access Summary";
inline constexpr const char* kSourceSummaryTitle = "Attack Source Summary";

ReportSection target_summary_section(const std::vector<TargetSummaryRow>& rows);
ReportSection invalid_access_section(const std::vector<InvalidAccessRow>& rows);
ReportSection source_summary_section(const std::vector<SourceSummaryRow>& rows);
ReportSection findings_section(const std::string& metric_id,
                               std::span<const Finding> findings);
ReportSection login_aggregates_section(std::span<const metrics::LoginAggregate> aggs);

// JSON renders with schema "secdoar-report/1"; CSV renders one table per
// section. Both are canonical: fixed key order, numbers with at most three
// fractional digits.
std::string render_report(const Report& rep, ReportFormat format);

// String-keyed variant for callers fed by config/CLI values; anything other
// than "json"/"csv" raises UnsupportedFormat.
ReportFormat report_format_from_string(std::string_view name);
std::string render_report(const Report& rep, std::string_view format_name);

Report parse_report(const std::string& json_text);

struct CsvFile {
    std::string name; // slug derived from the section title
    std::string content;
};

std::vector<CsvFile> render_csv_sections(const Report& rep);

} // namespace secdoar::reporting
