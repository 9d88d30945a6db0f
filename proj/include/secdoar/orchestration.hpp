#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "secdoar/composition.hpp"
#include "secdoar/core.hpp"
#include "secdoar/ingest.hpp"
#include "secdoar/metrics.hpp"
#include "secdoar/semantic.hpp"

namespace secdoar::orchestration {

struct TaggedRecord {
    TrafficRecord record;
    TagLevel tag = TagLevel::public_;
};

// Bounded FIFO buffer between pipeline stages. Deactivating rejects pushes
// but still allows draining what is buffered.
class DataChannel {
public:
    DataChannel(std::string id, std::size_t capacity);

    const std::string& id() const { return id_; }
    std::size_t capacity() const { return capacity_; }

    void push(TaggedRecord r); // throws ChannelInactive / ChannelFull
    std::vector<TaggedRecord> drain();
    void deactivate();
    bool active() const;
    std::size_t size() const;

private:
    std::string id_;
    std::size_t capacity_;
    bool active_ = true;
    std::deque<TaggedRecord> buffer_;
    mutable std::mutex mutex_;
};

DataChannel open_channel(std::string id, std::size_t capacity);

// First-match-wins trust tagging; rules match on tool id and/or a dst_host
// prefix. The default level makes the policy total.
struct TagRule {
    std::optional<std::string> tool_id;
    std::optional<std::string> dst_host_prefix;
    TagLevel level = TagLevel::public_;
};

struct TagPolicy {
    std::vector<TagRule> rules;
    TagLevel default_level = TagLevel::public_;

    nlohmann::ordered_json to_json() const;
    static TagPolicy from_json(const nlohmann::json& j);
};

SecurityTag tag_data(const TrafficRecord& r, const TagPolicy& policy);

// One configured data source.
struct InputSpec {
    std::string tool_id;
    std::string format; // zeek | snort | jsonl
    std::filesystem::path path;
    std::optional<std::filesystem::path> mapping_path; // default mapping if unset
    int year = 1970; // snort fast alerts carry no year
};

struct MetricConfig {
    std::string metric_id;
    std::map<std::string, std::string> params;
};

struct PipelineConfig {
    std::vector<InputSpec> inputs;
    std::filesystem::path sim_path;      // empty -> built-in default SIM
    std::filesystem::path registry_path;
    composition::CompositionRequest composition;
    std::optional<composition::Assignment> assignment; // derived when unset
    std::vector<MetricConfig> metrics;
    ReportFormat report_format = ReportFormat::json;
    std::filesystem::path report_out;
    std::size_t channel_capacity = 65536;
    std::optional<TagPolicy> tagging; // findings are tagged only when present
    std::optional<double> fixed_now;  // epoch seconds for reproducible output

    static PipelineConfig load_file(const std::filesystem::path& path);
    static PipelineConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
};

struct PipelineOutcome {
    Report report;
    std::string rendered;
    std::vector<Finding> findings;
    std::vector<metrics::LoginAggregate> aggregates;
    std::map<std::string, std::size_t> ingest_counts;
    composition::CompositionResult composition;
};

// Res = F_R(R, F_A(M, F_O(D_x, D_y, SIM))). Stages run in order
// ingest -> integrate -> analyze -> report; the composition check gates the
// run before any input file is opened.
PipelineOutcome run_pipeline(const PipelineConfig& cfg);

} // namespace secdoar::orchestration
