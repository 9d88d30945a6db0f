#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "secdoar/core.hpp"

namespace secdoar::simgen {

struct InjectionSpec {
    double start = 0.0;    // seconds from trace start
    double duration = 0.0; // seconds
    double rate = 0.0;     // requests per second
    int n_sources = 1;     // distinct attacking sources
    std::string target_host;
    int target_port = 0;
    double failure_fraction = 0.0; // fraction emitted as failed logins
};

struct ScenarioSpec {
    std::vector<std::pair<std::string, int>> targets; // baseline destinations
    std::vector<InjectionSpec> injections;

    nlohmann::ordered_json to_json() const;
    static ScenarioSpec from_json(const nlohmann::json& j);
};

enum class EmitFormat { zeek, snort, jsonl };

EmitFormat emit_format_from_string(std::string_view s);
std::string emit_format_to_string(EmitFormat f);

// Tool id implied by each output shape (zeek/snort/limacharlie).
std::string tool_id_for(EmitFormat f);

// Deterministic synthetic trace: Poisson baseline to the scenario targets
// plus injected bursts. Records are shaped for the requested format (zeek
// carries no auth/priority, snort no bytes) so emit + re-ingest reproduces
// them exactly. Timestamps are rounded to microseconds and sorted.
std::vector<TrafficRecord> generate_trace(std::uint64_t seed, double duration_s,
                                          double baseline_rate,
                                          const ScenarioSpec& scenario,
                                          EmitFormat shape);

// Serializes a trace in the given on-disk format.
std::string emit_trace(const std::vector<TrafficRecord>& records, EmitFormat format);

} // namespace secdoar::simgen
