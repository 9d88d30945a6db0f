#include "secdoar/orchestration.hpp"

#include "secdoar/errors.hpp"
#include "secdoar/metrics.hpp"
#include "secdoar/reporting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace secdoar::orchestration {

namespace {

nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

nlohmann::ordered_json load_ordered_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open file: " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute() || base.empty())
        return p;
    return base / p;
}

double param_number(const MetricConfig& m, const std::string& key, double fallback) {
    auto it = m.params.find(key);
    if (it == m.params.end())
        return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw ConfigError("metric " + m.metric_id + ": bad numeric param " + key);
    }
}

std::optional<double> param_number_opt(const MetricConfig& m, const std::string& key) {
    auto it = m.params.find(key);
    if (it == m.params.end())
        return std::nullopt;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw ConfigError("metric " + m.metric_id + ": bad numeric param " + key);
    }
}

std::vector<Window> parse_intervals(const std::string& text) {
    // "start-end;start-end" pairs in epoch seconds
    std::vector<Window> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto semi = text.find(';', pos);
        const std::string item =
            text.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
        const auto dash = item.find('-');
        if (dash == std::string::npos)
            throw ConfigError("bad interval: " + item);
        out.push_back({std::stod(item.substr(0, dash)), std::stod(item.substr(dash + 1))});
        if (semi == std::string::npos)
            break;
        pos = semi + 1;
    }
    return out;
}

bool is_dos_metric(const std::string& id) { return id == "dos_ddos" || id == "dos"; }

} // namespace

DataChannel::DataChannel(std::string id, std::size_t capacity)
    : id_(std::move(id)), capacity_(capacity) {
    if (capacity_ == 0)
        throw Error("channel capacity must be positive");
}

void DataChannel::push(TaggedRecord r) {
    std::lock_guard lock(mutex_);
    if (!active_)
        throw ChannelInactive("channel " + id_ + " is inactive");
    if (buffer_.size() >= capacity_)
        throw ChannelFull("channel " + id_ + " is full");
    buffer_.push_back(std::move(r));
}

std::vector<TaggedRecord> DataChannel::drain() {
    std::lock_guard lock(mutex_);
    std::vector<TaggedRecord> out(buffer_.begin(), buffer_.end());
    buffer_.clear();
    return out;
}

void DataChannel::deactivate() {
    std::lock_guard lock(mutex_);
    active_ = false;
}

bool DataChannel::active() const {
    std::lock_guard lock(mutex_);
    return active_;
}

std::size_t DataChannel::size() const {
    std::lock_guard lock(mutex_);
    return buffer_.size();
}

DataChannel open_channel(std::string id, std::size_t capacity) {
    return DataChannel(std::move(id), capacity);
}

SecurityTag tag_data(const TrafficRecord& r, const TagPolicy& policy) {
    for (const TagRule& rule : policy.rules) {
        if (rule.tool_id && *rule.tool_id != r.tool_id)
            continue;
        if (rule.dst_host_prefix &&
            r.dst_host.rfind(*rule.dst_host_prefix, 0) != 0)
            continue;
        return SecurityTag{rule.level};
    }
    return SecurityTag{policy.default_level};
}

nlohmann::ordered_json TagPolicy::to_json() const {
    nlohmann::ordered_json j;
    j["default"] = tag_level_to_string(default_level);
    nlohmann::ordered_json rs = nlohmann::ordered_json::array();
    for (const auto& r : rules) {
        nlohmann::ordered_json rj;
        if (r.tool_id)
            rj["tool_id"] = *r.tool_id;
        if (r.dst_host_prefix)
            rj["dst_host_prefix"] = *r.dst_host_prefix;
        rj["level"] = tag_level_to_string(r.level);
        rs.push_back(std::move(rj));
    }
    j["rules"] = std::move(rs);
    return j;
}

TagPolicy TagPolicy::from_json(const nlohmann::json& j) {
    TagPolicy p;
    if (j.contains("default")) {
        auto level = tag_level_from_string(j.at("default").get<std::string>());
        if (!level)
            throw ConfigError("unknown tag level");
        p.default_level = *level;
    }
    if (j.contains("rules")) {
        for (const auto& rj : j.at("rules")) {
            TagRule r;
            if (rj.contains("tool_id"))
                r.tool_id = rj.at("tool_id").get<std::string>();
            if (rj.contains("dst_host_prefix"))
                r.dst_host_prefix = rj.at("dst_host_prefix").get<std::string>();
            auto level = tag_level_from_string(rj.at("level").get<std::string>());
            if (!level)
                throw ConfigError("unknown tag level");
            r.level = *level;
            p.rules.push_back(std::move(r));
        }
    }
    return p;
}

PipelineConfig PipelineConfig::load_file(const std::filesystem::path& path) {
    return from_json(load_json_file(path), path.parent_path());
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    for (const auto& ij : j.at("inputs")) {
        InputSpec in;
        in.tool_id = ij.at("tool_id").get<std::string>();
        in.format = ij.at("format").get<std::string>();
        in.path = resolve(base_dir, ij.at("path").get<std::string>());
        if (ij.contains("mapping"))
            in.mapping_path = resolve(base_dir, ij.at("mapping").get<std::string>());
        if (ij.contains("year"))
            in.year = ij.at("year").get<int>();
        cfg.inputs.push_back(std::move(in));
    }
    if (j.contains("sim_path"))
        cfg.sim_path = resolve(base_dir, j.at("sim_path").get<std::string>());
    cfg.registry_path = resolve(base_dir, j.at("registry_path").get<std::string>());
    const auto& cj = j.at("composition");
    for (const auto& f : cj.at("require"))
        cfg.composition.required_features.insert(f.get<std::string>());
    if (cj.contains("roles")) {
        for (const auto& r : cj.at("roles")) {
            auto role = role_from_string(r.get<std::string>());
            if (!role)
                throw ConfigError("unknown role: " + r.get<std::string>());
            cfg.composition.roles_required.insert(*role);
        }
    }
    if (cj.contains("assignment"))
        cfg.assignment = composition::assignment_from_json(cj.at("assignment"));
    if (j.contains("metrics")) {
        for (const auto& mj : j.at("metrics")) {
            MetricConfig m;
            m.metric_id = mj.at("id").get<std::string>();
            if (mj.contains("params")) {
                for (const auto& [k, v] : mj.at("params").items())
                    m.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
            cfg.metrics.push_back(std::move(m));
        }
    }
    const auto& rj = j.at("report");
    cfg.report_format =
        reporting::report_format_from_string(rj.at("format").get<std::string>());
    cfg.report_out = resolve(base_dir, rj.at("out").get<std::string>());
    if (j.contains("channel_capacity"))
        cfg.channel_capacity = j.at("channel_capacity").get<std::size_t>();
    if (j.contains("tagging"))
        cfg.tagging = TagPolicy::from_json(j.at("tagging"));
    return cfg;
}

namespace {

struct AnalysisOutput {
    std::vector<Finding> findings;
    std::vector<metrics::LoginAggregate> aggregates;
    std::optional<metrics::RateTable> rates;
    bool dos_ran = false;
    bool access_ran = false;
    std::vector<ReportSection> metric_sections;
};

Window data_horizon(const std::vector<TrafficRecord>& rs) {
    if (rs.empty())
        return {0.0, 1.0};
    double lo = rs.front().ts;
    double hi = rs.front().ts;
    for (const auto& r : rs) {
        lo = std::min(lo, r.ts);
        hi = std::max(hi, r.ts);
    }
    return {std::floor(lo), std::floor(hi) + 1.0};
}

AnalysisOutput analyze(const PipelineConfig& cfg,
                       const std::vector<TrafficRecord>& integrated,
                       const std::map<std::pair<double, std::string>, TagLevel>& tags) {
    const auto catalog = metrics::metric_catalog();
    auto catalog_entry = [&](const std::string& id) -> const MetricSpec* {
        for (const auto& m : catalog) {
            if (m.id == id || m.measurement_scheme == id)
                return &m;
        }
        return nullptr;
    };
    auto tag_finding = [&](Finding& f) {
        if (!cfg.tagging.has_value() || f.evidence.empty())
            return;
        // A finding is only as trustworthy as its least trusted evidence.
        TagLevel weakest = TagLevel::trusted;
        for (const auto& ref : f.evidence) {
            auto it = tags.find({ref.ts, ref.src_ip});
            const TagLevel level =
                it == tags.end() ? cfg.tagging->default_level : it->second;
            if (static_cast<int>(level) > static_cast<int>(weakest))
                weakest = level;
        }
        f.tag = weakest;
    };

    AnalysisOutput out;
    for (const MetricConfig& m : cfg.metrics) {
        const std::string id = is_dos_metric(m.metric_id) ? "dos_ddos" : m.metric_id;
        const MetricSpec* spec = catalog_entry(id);
        if (!spec)
            throw Error("unknown metric id: " + m.metric_id);
        if (spec->descriptor_only())
            throw Error("metric " + m.metric_id + " is descriptor-only");
        if (id == "dos_ddos") {
            const double width = param_number(m, "window_s", 1.0);
            const double threshold = param_number(m, "threshold", 20.0);
            const int source_min =
                static_cast<int>(param_number(m, "ddos_source_min", 3.0));
            auto rates = metrics::window_rates(integrated, width);
            auto findings = metrics::detect_dos_ddos(rates, threshold, source_min);
            for (auto& f : findings)
                tag_finding(f);
            out.metric_sections.push_back(
                reporting::findings_section("dos_ddos", findings));
            out.findings.insert(out.findings.end(), findings.begin(), findings.end());
            out.rates = std::move(rates);
            out.dos_ran = true;
        } else if (id == "access_control") {
            Window window = data_horizon(integrated);
            if (auto s = param_number_opt(m, "window_start"))
                window.start_ts = *s;
            if (auto e = param_number_opt(m, "window_end"))
                window.end_ts = *e;
            auto aggs = metrics::aggregate_login_attempts(integrated, window);
            out.metric_sections.push_back(reporting::login_aggregates_section(aggs));
            out.aggregates.insert(out.aggregates.end(), aggs.begin(), aggs.end());
            out.access_ran = true;
        } else if (id.rfind("ratio:", 0) == 0) {
            auto num = param_number_opt(m, "numerator");
            auto den = param_number_opt(m, "denominator");
            if (!num || !den)
                throw Error("metric " + id + " needs numerator and denominator params");
            const std::pair<double, double> band = {param_number(m, "band_lo", 0.0),
                                                    param_number(m, "band_hi", 1.0)};
            auto f = metrics::ratio_metric(static_cast<std::int64_t>(*num),
                                           static_cast<std::int64_t>(*den), id, band);
            out.metric_sections.push_back(
                reporting::findings_section(id, std::vector<Finding>{f}));
            out.findings.push_back(std::move(f));
        } else if (id == "availability") {
            auto hs = param_number_opt(m, "horizon_start");
            auto he = param_number_opt(m, "horizon_end");
            Window horizon = (hs && he) ? Window{*hs, *he} : data_horizon(integrated);
            std::vector<Window> down;
            if (auto it = m.params.find("down"); it != m.params.end())
                down = parse_intervals(it->second);
            auto f = metrics::availability_uptime(down, horizon);
            out.metric_sections.push_back(
                reporting::findings_section(id, std::vector<Finding>{f}));
            out.findings.push_back(std::move(f));
        } else {
            throw Error("metric " + id + " has no evaluator");
        }
    }
    return out;
}

} // namespace

PipelineOutcome run_pipeline(const PipelineConfig& cfg) {
    PipelineOutcome outcome;

    // Composition gate: nothing is ingested unless the configured tool
    // composition is valid for the request.
    composition::ToolRegistry registry;
    try {
        registry = composition::ToolRegistry::load_file(cfg.registry_path);
    } catch (const Error& e) {
        throw StageError("compose", e.what());
    }
    composition::Assignment assignment;
    if (cfg.assignment) {
        assignment = *cfg.assignment;
    } else {
        auto derived = composition::derive_compositions(registry, cfg.composition);
        if (derived.empty())
            throw CompositionInvalid("no valid composition for the request");
        assignment = derived.front().assignment;
    }
    outcome.composition = composition::check_composition(registry, assignment,
                                                         cfg.composition);
    if (!outcome.composition.valid) {
        std::string why;
        for (const auto& r : outcome.composition.reasons)
            why += (why.empty() ? "" : "; ") + r;
        throw CompositionInvalid("composition invalid: " + why);
    }

    semantic::SemanticIntegrationModel sim;
    try {
        sim = cfg.sim_path.empty()
                  ? semantic::default_sim()
                  : semantic::SemanticIntegrationModel::from_json(
                        load_ordered_json_file(cfg.sim_path));
    } catch (const Error& e) {
        throw StageError("compose", e.what());
    }

    // Stage 1 (understanding): parse, normalize, tag and buffer per tool.
    std::map<std::string, std::vector<TrafficRecord>> per_tool;
    std::map<std::pair<double, std::string>, TagLevel> tags;
    const TagPolicy policy = cfg.tagging.value_or(TagPolicy{});
    try {
        for (const InputSpec& in : cfg.inputs) {
            ingest::FieldMapping mapping =
                in.mapping_path
                    ? ingest::FieldMapping::from_json(load_json_file(*in.mapping_path))
                    : ingest::default_mapping(in.format, in.tool_id);
            if (mapping.tool_id != in.tool_id)
                throw MappingMismatch("mapping tool '" + mapping.tool_id +
                                      "' does not match input tool '" + in.tool_id +
                                      "'");
            const auto coverage = mapping.coverage_violations();
            if (!coverage.empty())
                throw ConfigError("mapping for " + in.tool_id + ": " + coverage.front());
            auto ingested = ingest::ingest_file(in.path, in.format, mapping, in.year);
            if (!ingested.errors.empty())
                throw Error(in.path.string() + ": " + ingested.errors.front());
            DataChannel channel("ingest:" + in.tool_id, cfg.channel_capacity);
            auto& dest = per_tool[in.tool_id];
            std::size_t i = 0;
            while (i < ingested.records.size()) {
                // respect the buffer bound by pushing in capacity-sized batches
                const std::size_t end =
                    std::min(i + cfg.channel_capacity, ingested.records.size());
                for (; i < end; ++i) {
                    TaggedRecord tr;
                    tr.tag = tag_data(ingested.records[i], policy).level;
                    tr.record = std::move(ingested.records[i]);
                    channel.push(std::move(tr));
                }
                for (auto& tr : channel.drain()) {
                    const auto key = std::make_pair(tr.record.ts,
                                                    canonical_ip(tr.record.src_ip));
                    auto it = tags.find(key);
                    if (it == tags.end())
                        tags.emplace(key, tr.tag);
                    else if (static_cast<int>(tr.tag) > static_cast<int>(it->second))
                        it->second = tr.tag; // keep the least trusted sighting
                    dest.push_back(std::move(tr.record));
                }
            }
            outcome.ingest_counts[in.tool_id] = dest.size();
        }
    } catch (const Error& e) {
        throw StageError("ingest", e.what());
    }

    // Stage 2 (comprehension): F_O over all per-tool datasets.
    std::vector<TrafficRecord> integrated;
    try {
        std::vector<std::vector<TrafficRecord>> datasets;
        datasets.reserve(per_tool.size());
        for (auto& [tool, rs] : per_tool)
            datasets.push_back(std::move(rs));
        integrated = semantic::integrate_all(datasets, sim);
    } catch (const Error& e) {
        throw StageError("integrate", e.what());
    }

    // Stage 3 (perception): F_A per configured metric.
    AnalysisOutput analysis;
    try {
        analysis = analyze(cfg, integrated, tags);
    } catch (const Error& e) {
        throw StageError("analyze", e.what());
    }
    outcome.findings = analysis.findings;
    outcome.aggregates = analysis.aggregates;

    // Stage 4 (common operating picture): F_R.
    Report rep;
    rep.format = cfg.report_format;
    rep.generated_at =
        cfg.fixed_now.value_or(static_cast<double>(std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch()).count()));
    ReportSection ingest_stats;
    ingest_stats.title = reporting::kIngestSectionTitle;
    for (const auto& [tool, count] : outcome.ingest_counts) {
        nlohmann::ordered_json row;
        row["toolId"] = tool;
        row["records"] = static_cast<std::int64_t>(count);
        ingest_stats.rows.push_back(std::move(row));
    }
    rep.sections.push_back(std::move(ingest_stats));
    for (auto& s : analysis.metric_sections)
        rep.sections.push_back(std::move(s));
    if (analysis.dos_ran) {
        rep.sections.push_back(reporting::target_summary_section(
            reporting::build_target_summary(outcome.findings)));
    }
    if (analysis.dos_ran && analysis.access_ran) {
        double dos_threshold = 20.0;
        for (const auto& m : cfg.metrics) {
            if (is_dos_metric(m.metric_id)) {
                dos_threshold = param_number(m, "threshold", 20.0);
                break;
            }
        }
        rep.sections.push_back(
            reporting::invalid_access_section(reporting::build_invalid_access_summary(
                outcome.aggregates, *analysis.rates, dos_threshold)));
    }
    if (analysis.dos_ran || analysis.access_ran) {
        rep.sections.push_back(reporting::source_summary_section(
            reporting::build_source_summary(outcome.findings, outcome.aggregates)));
    }
    outcome.rendered = reporting::render_report(rep, cfg.report_format);
    outcome.report = std::move(rep);
    if (!cfg.report_out.empty()) {
        std::ofstream out(cfg.report_out);
        if (!out)
            throw StageError("report", "cannot write " + cfg.report_out.string());
        out << outcome.rendered;
    }
    return outcome;
}

} // namespace secdoar::orchestration
