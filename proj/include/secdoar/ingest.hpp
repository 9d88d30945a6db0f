#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "secdoar/core.hpp"

namespace secdoar::ingest {

// Pre-integration form of a parsed log line, keyed by tool-native field names.
struct RawRecord {
    std::string tool_id;
    int line_no = 0;
    std::vector<std::pair<std::string, std::string>> fields; // insertion order
    double ts = 0.0;

    const std::string* find(std::string_view key) const;
};

enum class TsFormat { epoch_float, iso8601 };

// Binds tool-native field names to canonical TrafficRecord fields. Canonical
// names: ts, src_ip, src_port, dst_host, dst_port, protocol, priority, bytes,
// tool_id, auth_credential_id, auth_outcome.
struct FieldMapping {
    std::string tool_id;
    std::vector<std::pair<std::string, std::string>> entries; // native -> canonical
    TsFormat ts_format = TsFormat::epoch_float;
    std::map<std::string, std::string> defaults; // canonical -> constant

    // Required scalar fields that must be reachable through an entry or a
    // default; priority/bytes/auth may legitimately stay unset.
    static const std::vector<std::string>& required_fields();
    std::vector<std::string> coverage_violations() const;

    nlohmann::ordered_json to_json() const;
    static FieldMapping from_json(const nlohmann::json& j);
};

// Built-in mappings for the supported formats ("zeek", "snort", "jsonl").
FieldMapping default_mapping(std::string_view format, std::string_view tool_id);

enum class LineStatus { record, skip, error };

struct LineResult {
    LineStatus status = LineStatus::error;
    RawRecord record;
    std::string error;
};

struct MappedResult {
    LineStatus status = LineStatus::error;
    TrafficRecord record;
    std::string error;
};

// Zeek conn.log TSV reader. Column binding comes from the most recent
// `#fields` header line; other `#` lines are skipped.
class ZeekConnParser {
public:
    explicit ZeekConnParser(std::string tool_id = "zeek");
    LineResult parse_line(std::string_view line);
    const std::vector<std::string>& columns() const { return columns_; }

private:
    std::string tool_id_;
    std::vector<std::string> columns_;
    int ts_index_ = -1;
    int line_no_ = 0;
};

// Snort fast-alert reader. Fast alerts carry no year, so one is supplied at
// construction to make timestamps deterministic.
class SnortFastParser {
public:
    explicit SnortFastParser(int year, std::string tool_id = "snort");
    LineResult parse_line(std::string_view line);

private:
    int year_;
    std::string tool_id_;
    int line_no_ = 0;
};

// Parses one generic JSONL line and applies the mapping in a single step.
MappedResult parse_jsonl_mapped(std::string_view line, const FieldMapping& m);

// Maps a RawRecord to a canonical TrafficRecord. Throws MappingMismatch when
// tool ids differ and NormalizationFailed when the result fails validation.
TrafficRecord normalize(const RawRecord& raw, const FieldMapping& m);

// Canonical JSONL form: fixed key order
// (ts, src_ip, src_port, dst_host, dst_port, protocol, priority, bytes, auth,
// tool_id); unset optional fields serialize as null.
std::string record_to_jsonl(const TrafficRecord& r);
TrafficRecord record_from_jsonl(std::string_view line);

// Append-only per-tool partitions, one `<dir>/<tool_id>.jsonl` per tool.
class IntermediateStore {
public:
    explicit IntermediateStore(std::filesystem::path dir);

    // Appends each record to its tool's partition; returns per-partition
    // insert counts.
    std::map<std::string, std::size_t> append(const std::vector<TrafficRecord>& records);

    std::vector<TrafficRecord> read_partition(const std::string& tool_id) const;
    std::vector<std::string> partitions() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex registry_mutex_;
    mutable std::map<std::string, std::unique_ptr<std::mutex>> partition_mutexes_;

    std::mutex& partition_mutex(const std::string& tool_id) const;
};

// Runs a whole input file through the right parser + mapping. Lines that fail
// to parse are reported in `errors`; `year` is only used for snort input.
struct IngestResult {
    std::vector<TrafficRecord> records;
    std::vector<std::string> errors;
    std::size_t skipped = 0;
};

IngestResult ingest_file(const std::filesystem::path& path, std::string_view format,
                         const FieldMapping& mapping, int year = 1970);

} // namespace secdoar::ingest
