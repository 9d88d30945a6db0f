#include "secdoar/ingest.hpp"

#include "secdoar/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <regex>

namespace secdoar::ingest {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool icontains(std::string_view haystack, std::string_view needle) {
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

bool is_unset(std::string_view v) { return v == "-" || v == "(empty)"; }

std::optional<double> parse_double(std::string_view s) {
    if (s.empty())
        return std::nullopt;
    std::string buf(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    if (s.empty())
        return std::nullopt;
    std::int64_t v = 0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || p != end)
        return std::nullopt;
    return v;
}

// Number-ish JSON values are flattened with dump() so doubles keep their
// shortest round-trip representation.
std::string json_value_to_string(const nlohmann::json& v) {
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

struct BuildOutcome {
    TrafficRecord record;
    std::vector<std::string> problems;
};

// Assembles a canonical record from a native-field lookup plus the mapping.
// Problems are reported as "MissingField: ..." / "BadTimestamp: ..." strings.
BuildOutcome build_canonical(
    const std::function<const std::string*(const std::string&)>& lookup,
    const FieldMapping& m) {
    BuildOutcome out;
    auto resolve = [&](const std::string& canonical) -> std::optional<std::string> {
        for (const auto& [native, mapped] : m.entries) {
            if (mapped != canonical)
                continue;
            if (const std::string* v = lookup(native); v && !is_unset(*v))
                return *v;
        }
        if (auto it = m.defaults.find(canonical); it != m.defaults.end())
            return it->second;
        return std::nullopt;
    };
    auto require = [&](const std::string& canonical) -> std::optional<std::string> {
        auto v = resolve(canonical);
        if (!v)
            out.problems.push_back("MissingField: " + canonical);
        return v;
    };

    if (auto ts = require("ts")) {
        std::optional<double> parsed;
        if (m.ts_format == TsFormat::iso8601)
            parsed = parse_iso8601_utc(*ts);
        else
            parsed = parse_double(*ts);
        if (!parsed)
            out.problems.push_back("BadTimestamp: " + *ts);
        else
            out.record.ts = *parsed;
    }
    if (auto v = require("src_ip"))
        out.record.src_ip = *v;
    if (auto v = require("dst_host"))
        out.record.dst_host = *v;
    if (auto v = require("tool_id"))
        out.record.tool_id = *v;
    if (auto v = require("protocol"))
        out.record.protocol = Protocol::from_string(*v);
    auto int_field = [&](const std::string& canonical, bool required)
        -> std::optional<std::int64_t> {
        auto v = required ? require(canonical) : resolve(canonical);
        if (!v)
            return std::nullopt;
        auto n = parse_int(*v);
        if (!n) {
            // accept floats that are whole numbers (zeek counts, json ports)
            if (auto d = parse_double(*v); d && *d == std::floor(*d))
                return static_cast<std::int64_t>(*d);
            out.problems.push_back("bad integer for " + canonical + ": " + *v);
            return std::nullopt;
        }
        return n;
    };
    if (auto v = int_field("src_port", true))
        out.record.src_port = static_cast<int>(*v);
    if (auto v = int_field("dst_port", true))
        out.record.dst_port = static_cast<int>(*v);
    if (auto v = int_field("priority", false))
        out.record.priority = static_cast<int>(*v);
    if (auto v = int_field("bytes", false))
        out.record.bytes = *v;

    if (auto cred = resolve("auth_credential_id")) {
        AuthInfo auth;
        auth.credential_id = *cred;
        auto outcome = resolve("auth_outcome");
        auth.outcome = (outcome && *outcome == "failure") ? AuthInfo::Outcome::failure
                                                          : AuthInfo::Outcome::success;
        out.record.auth = auth;
    } else if (const std::string* cls = lookup("classification");
               cls && icontains(*cls, "failed login")) {
        // Alert-style sources mark failed logins via the classification text.
        out.record.auth = AuthInfo{"unknown", AuthInfo::Outcome::failure};
    }
    return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    return line;
}

std::string dump_double(double v) {
    return nlohmann::json(v).dump();
}

} // namespace

const std::string* RawRecord::find(std::string_view key) const {
    for (const auto& [k, v] : fields) {
        if (k == key)
            return &v;
    }
    return nullptr;
}

const std::vector<std::string>& FieldMapping::required_fields() {
    static const std::vector<std::string> fields = {
        "ts", "src_ip", "src_port", "dst_host", "dst_port", "protocol", "tool_id"};
    return fields;
}

std::vector<std::string> FieldMapping::coverage_violations() const {
    std::vector<std::string> out;
    for (const auto& canonical : required_fields()) {
        const bool by_entry =
            std::any_of(entries.begin(), entries.end(),
                        [&](const auto& e) { return e.second == canonical; });
        if (!by_entry && !defaults.count(canonical))
            out.push_back("uncovered canonical field: " + canonical);
    }
    return out;
}

nlohmann::ordered_json FieldMapping::to_json() const {
    nlohmann::ordered_json j;
    j["tool_id"] = tool_id;
    j["ts_format"] = ts_format == TsFormat::iso8601 ? "iso8601" : "epoch_float";
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    for (const auto& [native, canonical] : entries)
        e[native] = canonical;
    j["entries"] = std::move(e);
    j["defaults"] = defaults;
    return j;
}

FieldMapping FieldMapping::from_json(const nlohmann::json& j) {
    FieldMapping m;
    m.tool_id = j.at("tool_id").get<std::string>();
    if (j.contains("ts_format")) {
        const auto f = j.at("ts_format").get<std::string>();
        if (f == "iso8601")
            m.ts_format = TsFormat::iso8601;
        else if (f == "epoch_float")
            m.ts_format = TsFormat::epoch_float;
        else
            throw ConfigError("unknown ts_format: " + f);
    }
    if (j.contains("entries")) {
        for (const auto& [native, canonical] : j.at("entries").items())
            m.entries.emplace_back(native, canonical.get<std::string>());
    }
    if (j.contains("defaults")) {
        for (const auto& [k, v] : j.at("defaults").items())
            m.defaults[k] = json_value_to_string(v);
    }
    return m;
}

FieldMapping default_mapping(std::string_view format, std::string_view tool_id) {
    FieldMapping m;
    m.tool_id = std::string(tool_id);
    m.defaults["tool_id"] = std::string(tool_id);
    if (format == "zeek") {
        m.entries = {{"ts", "ts"},
                     {"id.orig_h", "src_ip"},
                     {"id.orig_p", "src_port"},
                     {"id.resp_h", "dst_host"},
                     {"id.resp_p", "dst_port"},
                     {"proto", "protocol"},
                     {"orig_bytes", "bytes"}};
    } else if (format == "snort") {
        m.entries = {{"ts", "ts"},
                     {"src_ip", "src_ip"},
                     {"src_port", "src_port"},
                     {"dst_ip", "dst_host"},
                     {"dst_port", "dst_port"},
                     {"proto", "protocol"},
                     {"priority", "priority"},
                     {"credential_id", "auth_credential_id"}};
    } else if (format == "jsonl") {
        m.entries = {{"ts", "ts"},
                     {"src_ip", "src_ip"},
                     {"src_port", "src_port"},
                     {"dst_host", "dst_host"},
                     {"dst_port", "dst_port"},
                     {"protocol", "protocol"},
                     {"priority", "priority"},
                     {"bytes", "bytes"},
                     {"auth_credential_id", "auth_credential_id"},
                     {"auth_outcome", "auth_outcome"},
                     {"tool_id", "tool_id"}};
    } else {
        throw ConfigError("unknown ingest format: " + std::string(format));
    }
    return m;
}

ZeekConnParser::ZeekConnParser(std::string tool_id) : tool_id_(std::move(tool_id)) {}

LineResult ZeekConnParser::parse_line(std::string_view line) {
    ++line_no_;
    line = strip_cr(line);
    LineResult res;
    if (line.empty() || line.front() == '#') {
        if (line.rfind("#fields", 0) == 0) {
            columns_ = split_whitespace(line.substr(7));
            ts_index_ = -1;
            for (std::size_t i = 0; i < columns_.size(); ++i) {
                if (columns_[i] == "ts")
                    ts_index_ = static_cast<int>(i);
            }
        }
        res.status = LineStatus::skip;
        return res;
    }
    if (columns_.empty()) {
        res.error = "NoHeader: data line before #fields header";
        return res;
    }
    const auto tokens = split_tabs(line);
    if (tokens.size() != columns_.size()) {
        res.error = "ColumnCountMismatch: got " + std::to_string(tokens.size()) +
                    ", expected " + std::to_string(columns_.size());
        return res;
    }
    RawRecord raw;
    raw.tool_id = tool_id_;
    raw.line_no = line_no_;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        raw.fields.emplace_back(columns_[i], tokens[i]);
    if (ts_index_ < 0) {
        res.error = "BadTimestamp: header has no ts column";
        return res;
    }
    const auto ts = parse_double(tokens[static_cast<std::size_t>(ts_index_)]);
    if (!ts) {
        res.error = "BadTimestamp: " + tokens[static_cast<std::size_t>(ts_index_)];
        return res;
    }
    raw.ts = *ts;
    res.status = LineStatus::record;
    res.record = std::move(raw);
    return res;
}

SnortFastParser::SnortFastParser(int year, std::string tool_id)
    : year_(year), tool_id_(std::move(tool_id)) {}

LineResult SnortFastParser::parse_line(std::string_view line) {
    ++line_no_;
    line = strip_cr(line);
    LineResult res;
    // MM/DD-HH:MM:SS.ffffff  [**] [g:s:r] msg [**] [Classification: c]
    // [Priority: p] {PROTO} ip:port -> ip:port
    static const std::regex grammar(
        R"(^(\d{2})/(\d{2})-(\d{2}):(\d{2}):(\d{2})\.(\d{6})\s+\[\*\*\]\s+)"
        R"(\[(\d+):(\d+):(\d+)\]\s+(.*?)\s+\[\*\*\]\s+)"
        R"(\[Classification:\s*([^\]]*)\]\s+\[Priority:\s*(\d+)\]\s+)"
        R"(\{(\S+)\}\s+(\S+):(\d+)\s+->\s+(\S+):(\d+)\s*$)");
    std::cmatch m;
    if (!std::regex_match(line.data(), line.data() + line.size(), m, grammar)) {
        res.error = "Unparseable: line does not match the fast-alert grammar";
        return res;
    }
    char iso[40];
    std::snprintf(iso, sizeof(iso), "%04d-%s-%sT%s:%s:%s.%s", year_,
                  m[1].str().c_str(), m[2].str().c_str(), m[3].str().c_str(),
                  m[4].str().c_str(), m[5].str().c_str(), m[6].str().c_str());
    const auto ts = parse_iso8601_utc(iso);
    if (!ts) {
        res.error = std::string("BadTimestamp: ") + iso;
        return res;
    }
    RawRecord raw;
    raw.tool_id = tool_id_;
    raw.line_no = line_no_;
    raw.ts = *ts;
    raw.fields.emplace_back("ts", dump_double(*ts));
    raw.fields.emplace_back("gid", m[7].str());
    raw.fields.emplace_back("sid", m[8].str());
    raw.fields.emplace_back("rev", m[9].str());
    raw.fields.emplace_back("msg", m[10].str());
    raw.fields.emplace_back("classification", m[11].str());
    raw.fields.emplace_back("priority", m[12].str());
    raw.fields.emplace_back("proto", m[13].str());
    raw.fields.emplace_back("src_ip", m[14].str());
    raw.fields.emplace_back("src_port", m[15].str());
    raw.fields.emplace_back("dst_ip", m[16].str());
    raw.fields.emplace_back("dst_port", m[17].str());
    res.status = LineStatus::record;
    res.record = std::move(raw);
    return res;
}

MappedResult parse_jsonl_mapped(std::string_view line, const FieldMapping& m) {
    MappedResult res;
    const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        res.error = "Unparseable: not a JSON object";
        return res;
    }
    std::vector<std::pair<std::string, std::string>> flat;
    for (const auto& [k, v] : j.items()) {
        if (v.is_null())
            continue;
        if (k == "auth" && v.is_object()) {
            if (v.contains("credential_id"))
                flat.emplace_back("auth_credential_id",
                                  json_value_to_string(v.at("credential_id")));
            if (v.contains("outcome"))
                flat.emplace_back("auth_outcome", json_value_to_string(v.at("outcome")));
            continue;
        }
        flat.emplace_back(k, json_value_to_string(v));
    }
    auto lookup = [&](const std::string& key) -> const std::string* {
        for (const auto& [k, v] : flat) {
            if (k == key)
                return &v;
        }
        return nullptr;
    };
    auto built = build_canonical(lookup, m);
    if (!built.problems.empty()) {
        res.error = built.problems.front();
        return res;
    }
    const auto violations = validate_record(built.record);
    if (!violations.empty()) {
        std::string msg = "NormalizationFailed:";
        for (const auto& v : violations)
            msg += " " + v + ";";
        res.error = msg;
        return res;
    }
    res.status = LineStatus::record;
    res.record = std::move(built.record);
    return res;
}

TrafficRecord normalize(const RawRecord& raw, const FieldMapping& m) {
    if (raw.tool_id != m.tool_id)
        throw MappingMismatch("record tool '" + raw.tool_id +
                              "' does not match mapping tool '" + m.tool_id + "'");
    auto lookup = [&](const std::string& key) { return raw.find(key); };
    auto built = build_canonical(lookup, m);
    std::vector<std::string> violations = std::move(built.problems);
    for (auto& v : validate_record(built.record))
        violations.push_back(std::move(v));
    if (!violations.empty()) {
        std::string msg = "normalization failed:";
        for (const auto& v : violations)
            msg += " " + v + ";";
        throw NormalizationFailed(msg, violations);
    }
    return built.record;
}

std::string record_to_jsonl(const TrafficRecord& r) {
    nlohmann::ordered_json j;
    j["ts"] = r.ts;
    j["src_ip"] = r.src_ip;
    j["src_port"] = r.src_port;
    j["dst_host"] = r.dst_host;
    j["dst_port"] = r.dst_port;
    j["protocol"] = r.protocol.to_string();
    if (r.priority)
        j["priority"] = *r.priority;
    else
        j["priority"] = nullptr;
    if (r.bytes)
        j["bytes"] = *r.bytes;
    else
        j["bytes"] = nullptr;
    if (r.auth) {
        nlohmann::ordered_json a;
        a["credential_id"] = r.auth->credential_id;
        a["outcome"] =
            r.auth->outcome == AuthInfo::Outcome::failure ? "failure" : "success";
        j["auth"] = std::move(a);
    } else {
        j["auth"] = nullptr;
    }
    j["tool_id"] = r.tool_id;
    return j.dump();
}

TrafficRecord record_from_jsonl(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error("invalid canonical record line");
    TrafficRecord r;
    r.ts = j.at("ts").get<double>();
    r.src_ip = j.at("src_ip").get<std::string>();
    r.src_port = j.at("src_port").get<int>();
    r.dst_host = j.at("dst_host").get<std::string>();
    r.dst_port = j.at("dst_port").get<int>();
    r.protocol = Protocol::from_string(j.at("protocol").get<std::string>());
    if (j.contains("priority") && !j.at("priority").is_null())
        r.priority = j.at("priority").get<int>();
    if (j.contains("bytes") && !j.at("bytes").is_null())
        r.bytes = j.at("bytes").get<std::int64_t>();
    if (j.contains("auth") && !j.at("auth").is_null()) {
        AuthInfo a;
        a.credential_id = j.at("auth").at("credential_id").get<std::string>();
        a.outcome = j.at("auth").at("outcome").get<std::string>() == "failure"
                        ? AuthInfo::Outcome::failure
                        : AuthInfo::Outcome::success;
        r.auth = a;
    }
    r.tool_id = j.at("tool_id").get<std::string>();
    return r;
}

IntermediateStore::IntermediateStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
        throw StoreUnavailable("cannot open store directory: " + dir_.string());
}

std::mutex& IntermediateStore::partition_mutex(const std::string& tool_id) const {
    std::lock_guard lock(registry_mutex_);
    auto& slot = partition_mutexes_[tool_id];
    if (!slot)
        slot = std::make_unique<std::mutex>();
    return *slot;
}

std::map<std::string, std::size_t>
IntermediateStore::append(const std::vector<TrafficRecord>& records) {
    std::map<std::string, std::vector<const TrafficRecord*>> by_tool;
    for (const auto& r : records)
        by_tool[r.tool_id].push_back(&r);
    std::map<std::string, std::size_t> counts;
    for (const auto& [tool, rs] : by_tool) {
        std::lock_guard lock(partition_mutex(tool));
        std::ofstream out(dir_ / (tool + ".jsonl"), std::ios::app);
        if (!out)
            throw StoreUnavailable("cannot append to partition: " + tool);
        for (const TrafficRecord* r : rs)
            out << record_to_jsonl(*r) << '\n';
        out.flush();
        if (!out)
            throw StoreUnavailable("write failed for partition: " + tool);
        counts[tool] = rs.size();
    }
    return counts;
}

std::vector<TrafficRecord>
IntermediateStore::read_partition(const std::string& tool_id) const {
    std::vector<TrafficRecord> out;
    std::ifstream in(dir_ / (tool_id + ".jsonl"));
    if (!in)
        return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        out.push_back(record_from_jsonl(line));
    }
    return out;
}

std::vector<std::string> IntermediateStore::partitions() const {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() == ".jsonl")
            out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

IngestResult ingest_file(const std::filesystem::path& path, std::string_view format,
                         const FieldMapping& mapping, int year) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open input file: " + path.string());
    IngestResult result;
    std::string line;
    int line_no = 0;
    ZeekConnParser zeek(mapping.tool_id);
    SnortFastParser snort(year, mapping.tool_id);
    while (std::getline(in, line)) {
        ++line_no;
        auto report = [&](const std::string& err) {
            result.errors.push_back("line " + std::to_string(line_no) + ": " + err);
        };
        if (format == "jsonl") {
            if (line.empty()) {
                ++result.skipped;
                continue;
            }
            auto res = parse_jsonl_mapped(line, mapping);
            if (res.status == LineStatus::record)
                result.records.push_back(std::move(res.record));
            else if (res.status == LineStatus::skip)
                ++result.skipped;
            else
                report(res.error);
            continue;
        }
        LineResult res;
        if (format == "zeek")
            res = zeek.parse_line(line);
        else if (format == "snort")
            res = snort.parse_line(line);
        else
            throw ConfigError("unknown ingest format: " + std::string(format));
        if (res.status == LineStatus::skip) {
            ++result.skipped;
            continue;
        }
        if (res.status == LineStatus::error) {
            report(res.error);
            continue;
        }
        try {
            result.records.push_back(normalize(res.record, mapping));
        } catch (const Error& e) {
            report(e.what());
        }
    }
    return result;
}

} // namespace secdoar::ingest
