#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace secdoar {

// --------------------------------------------------------------------------
// Time and address helpers
// --------------------------------------------------------------------------

// Parses "YYYY-MM-DDTHH:MM:SS[.ffffff][Z]" as UTC; returns epoch seconds.
std::optional<double> parse_iso8601_utc(std::string_view s);

// Formats epoch seconds as "YYYY-MM-DDTHH:MM:SS" (UTC, no offset). A nonzero
// fractional part is appended as ".ffffff" with trailing zeros trimmed so the
// round-trip through parse_iso8601_utc is lossless at microsecond grain.
std::string format_iso8601_utc(double epoch_s);

// Lowercases and strips leading zeros: "010.001.0.1" -> "10.1.0.1",
// "2001:0DB8::0001" -> "2001:db8::1". Non-address host ids are lowercased.
std::string canonical_ip(std::string_view ip);

// --------------------------------------------------------------------------
// Traffic records
// --------------------------------------------------------------------------

struct Protocol {
    enum class Kind { tcp, udp, icmp, other };
    Kind kind = Kind::tcp;
    std::string label; // set only when kind == other

    static Protocol from_string(std::string_view s);
    std::string to_string() const;

    bool operator==(const Protocol&) const = default;
    auto operator<=>(const Protocol&) const = default;
};

struct AuthInfo {
    enum class Outcome { success, failure };
    std::string credential_id;
    Outcome outcome = Outcome::success;

    bool operator==(const AuthInfo&) const = default;
};

// Canonical normalized observation of one request/connection. `priority` and
// `bytes` stay unset when the originating tool did not supply them; merge
// resolution depends on the distinction between "absent" and "zero".
struct TrafficRecord {
    double ts = 0.0;
    std::string src_ip;
    int src_port = 0;
    std::string dst_host;
    int dst_port = 0;
    Protocol protocol;
    std::optional<int> priority;
    std::optional<std::int64_t> bytes;
    std::optional<AuthInfo> auth;
    std::string tool_id;

    bool operator==(const TrafficRecord&) const = default;
};

// Returns every invariant violation; empty list means the record is valid.
std::vector<std::string> validate_record(const TrafficRecord& r);

// --------------------------------------------------------------------------
// Registry vocabulary
// --------------------------------------------------------------------------

struct DataKind {
    std::string id;
    std::vector<std::string> parents; // direct subsumers
};

struct InterfaceDescriptor {
    std::string id;
    std::set<std::string> consumes;
    std::set<std::string> produces;
};

struct ComponentDescriptor {
    std::string id;
    std::vector<ComponentDescriptor> subcomponents;
    std::vector<std::string> interfaces;
};

enum class Role { orchestration, analysis, reporting };

std::string role_to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

struct ToolDescriptor {
    std::string id;
    std::set<std::string> features;
    std::vector<ComponentDescriptor> components;
    std::set<Role> functions;
    std::vector<InterfaceDescriptor> interfaces;

    std::set<std::string> produced_kinds() const;
    std::set<std::string> consumed_kinds() const;
};

// --------------------------------------------------------------------------
// Security events
// --------------------------------------------------------------------------

struct SecurityEvent {
    enum class Status { active, expired };
    enum class IntegrityCheck { memory, control_flow, entry_point };

    std::string name;
    std::string event_type;
    std::string origin;
    std::string mode_of_operation; // free string; no enumeration exists
    std::string producer;
    std::vector<std::string> consumers;
    std::vector<std::string> resources;
    std::set<IntegrityCheck> integrity_checks;

    Status status() const { return status_; }
    // The only legal transition is active -> expired; there is no way back.
    void expire() { status_ = Status::expired; }

    std::vector<std::string> violations() const;

private:
    Status status_ = Status::active;
};

// --------------------------------------------------------------------------
// Trust tags
// --------------------------------------------------------------------------

enum class TagLevel { trusted, semi_trusted, public_ };

std::string tag_level_to_string(TagLevel t);
std::optional<TagLevel> tag_level_from_string(std::string_view s);

struct SecurityTag {
    TagLevel level = TagLevel::public_;
    bool operator==(const SecurityTag&) const = default;
};

// --------------------------------------------------------------------------
// Metrics and findings
// --------------------------------------------------------------------------

struct Window {
    double start_ts = 0.0;
    double end_ts = 0.0;
    double width() const { return end_ts - start_ts; }
    bool contains(double ts) const { return ts >= start_ts && ts < end_ts; }
    bool operator==(const Window&) const = default;
};

struct MetricSpec {
    std::string id;
    std::string focus;                            // catalog row name
    std::vector<std::string> elements;            // purpose
    std::string measurement_scheme;               // evaluator id or "descriptor-only"
    std::vector<std::string> schemes;             // measurement strings as catalogued
    std::vector<std::string> responses;
    std::map<std::string, std::string> params;

    bool descriptor_only() const { return measurement_scheme == "descriptor-only"; }
};

// Reference to a record that contributed to a finding.
struct RecordRef {
    double ts = 0.0;
    std::string src_ip;
    std::string detail; // tool id or free-form note

    bool operator==(const RecordRef&) const = default;
};

enum class FindingKind {
    dos,
    ddos,
    access_breach,
    integrity_violation,
    availability_gap,
    ratio_report,
    none,
};

enum class Severity { info, warn, critical };

std::string finding_kind_to_string(FindingKind k);
std::optional<FindingKind> finding_kind_from_string(std::string_view s);
std::string severity_to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view s);

// One analysis result produced by applying a metric to integrated data.
struct Finding {
    std::string metric_id;
    Window window;
    std::string subject; // e.g. "host:port" or a source ip
    FindingKind kind = FindingKind::none;
    double value = 0.0;
    std::vector<RecordRef> evidence;
    Severity severity = Severity::info;
    std::optional<TagLevel> tag;

    bool operator==(const Finding&) const = default;
};

nlohmann::ordered_json finding_to_json(const Finding& f);
Finding finding_from_json(const nlohmann::json& j);

// --------------------------------------------------------------------------
// Reports
// --------------------------------------------------------------------------

enum class ReportFormat { json, csv };

struct ReportSection {
    std::string title;
    std::vector<nlohmann::ordered_json> rows;

    bool operator==(const ReportSection&) const = default;
};

struct Report {
    double generated_at = 0.0;
    std::array<std::string, 3> stage_labels = {"understanding", "comprehension",
                                               "perception"};
    std::vector<ReportSection> sections;
    ReportFormat format = ReportFormat::json;

    bool operator==(const Report&) const = default;
};

// Emits a JSON number with at most three fractional digits; integral values
// come out as integers.
nlohmann::ordered_json json_number(double v);

} // namespace secdoar
