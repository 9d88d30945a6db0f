#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "secdoar/core.hpp"

namespace secdoar::metrics {

// One tumbling-window cell keyed by destination and epoch-aligned window.
struct CellKey {
    std::string dst_host;
    int dst_port = 0;
    std::int64_t window_index = 0; // floor(ts / width)

    auto operator<=>(const CellKey&) const = default;
};

struct CellStats {
    std::size_t count = 0;
    std::set<std::string> sources;
    std::vector<RecordRef> refs;

    std::size_t distinct_sources() const { return sources.size(); }
};

struct RateTable {
    double width = 1.0;
    std::map<CellKey, CellStats> cells;
};

// Counts requests per (dst_host, dst_port, window); every record lands in
// exactly one epoch-aligned tumbling window of the given width.
RateTable window_rates(std::span<const TrafficRecord> rs, double width);

// Flags cells with count strictly above the threshold. A flagged cell is a
// DDoS when its distinct source count reaches ddos_source_min, DoS otherwise.
std::vector<Finding> detect_dos_ddos(const RateTable& rates, double threshold,
                                     int ddos_source_min);

// Aggregate of login/access attempts per (source, destination) pair.
struct LoginAggregate {
    std::int64_t failed_login_count = 0;
    std::string port_list; // distinct dst ports, first-seen order, ';'-joined
    std::string start_time; // ISO-8601
    std::string end_time;
    std::string source_ip;
    std::string dest_ip; // host-id form, e.g. "172-31-27-153"
    std::int64_t attempt_num = 0;

    bool operator==(const LoginAggregate&) const = default;
};

using HostIdFormatter = std::function<std::string(const std::string&)>;

// Default host-id form used in login aggregates: dots become dashes for
// dotted-IPv4 destinations, other hosts pass through unchanged.
std::string dash_host_id(const std::string& host);

std::vector<LoginAggregate>
aggregate_login_attempts(std::span<const TrafficRecord> rs, const Window& window,
                         const HostIdFormatter& host_id = dash_host_id);

nlohmann::ordered_json login_aggregate_to_json(const LoginAggregate& a);
LoginAggregate login_aggregate_from_json(const nlohmann::json& j);

// Ratio evaluator shared by the integrity / attackability / feature-coverage
// rows. Zero over zero is 0 by convention; outside the band -> warn.
Finding ratio_metric(std::int64_t numerator, std::int64_t denominator,
                     const std::string& metric_id,
                     std::pair<double, double> band = {0.0, 1.0});

// Uptime fraction over the horizon after unioning overlapping down intervals.
Finding availability_uptime(const std::vector<Window>& down_intervals,
                            const Window& horizon);

// The full metric catalog: six evaluator-backed rows and seven
// descriptor-only rows.
std::vector<MetricSpec> metric_catalog();

} // namespace secdoar::metrics
