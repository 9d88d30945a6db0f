#include "secdoar/semantic.hpp"

#include "secdoar/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <tuple>

namespace secdoar::semantic {

namespace {

constexpr const char* kTypePredicate = "rdf:type";
constexpr const char* kTrafficDataClass = "sec:TrafficData";

std::string dump_double(double v) { return nlohmann::json(v).dump(); }

std::string datatype_name(TripleObject::Kind k) {
    switch (k) {
    case TripleObject::Kind::iri: return "iri";
    case TripleObject::Kind::string_t: return "string";
    case TripleObject::Kind::integer_t: return "integer";
    case TripleObject::Kind::decimal_t: return "decimal";
    case TripleObject::Kind::timestamp_t: return "timestamp";
    }
    return "string";
}

TripleObject::Kind datatype_from_name(const std::string& s) {
    if (s == "iri")
        return TripleObject::Kind::iri;
    if (s == "integer")
        return TripleObject::Kind::integer_t;
    if (s == "decimal")
        return TripleObject::Kind::decimal_t;
    if (s == "timestamp")
        return TripleObject::Kind::timestamp_t;
    if (s == "string")
        return TripleObject::Kind::string_t;
    throw Error("unknown triple datatype: " + s);
}

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        default: out += c;
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            ++i;
            if (s[i] == 't')
                out += '\t';
            else if (s[i] == 'n')
                out += '\n';
            else
                out += s[i];
        } else {
            out += s[i];
        }
    }
    return out;
}

bool is_variable(const std::string& term) {
    return !term.empty() && term.front() == '?';
}

std::string observation_subject(const TrafficRecord& r) {
    char ts[40];
    std::snprintf(ts, sizeof(ts), "%.6f", r.ts);
    return std::string("sec:record/") + ts + "/" + canonical_ip(r.src_ip) + ":" +
           std::to_string(r.src_port) + "/" + canonical_ip(r.dst_host) + ":" +
           std::to_string(r.dst_port) + "/" + r.protocol.to_string();
}

} // namespace

const std::string*
SemanticIntegrationModel::predicate_for(std::string_view canonical_field) const {
    for (const auto& [field, iri] : predicates) {
        if (field == canonical_field)
            return &iri;
    }
    return nullptr;
}

bool SemanticIntegrationModel::covers_tool(std::string_view tool_id) const {
    return std::any_of(equivalence.begin(), equivalence.end(),
                       [&](const EquivalenceRule& r) { return r.tool_id == tool_id; });
}

std::set<std::string> SemanticIntegrationModel::vocabulary() const {
    std::set<std::string> out;
    for (const auto& [field, iri] : predicates)
        out.insert(iri);
    out.insert(kTypePredicate);
    return out;
}

nlohmann::ordered_json SemanticIntegrationModel::to_json() const {
    nlohmann::ordered_json j;
    j["classes"] = classes;
    nlohmann::ordered_json preds = nlohmann::ordered_json::object();
    for (const auto& [field, iri] : predicates)
        preds[field] = iri;
    j["predicates"] = std::move(preds);
    nlohmann::ordered_json eq = nlohmann::ordered_json::array();
    for (const auto& rule : equivalence) {
        eq.push_back({{"tool_id", rule.tool_id},
                      {"native", rule.native_field},
                      {"canonical", rule.canonical_field}});
    }
    j["equivalence"] = std::move(eq);
    return j;
}

SemanticIntegrationModel SemanticIntegrationModel::from_json(const nlohmann::ordered_json& j) {
    SemanticIntegrationModel sim;
    if (j.contains("classes"))
        sim.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& [field, iri] : j.at("predicates").items())
        sim.predicates.emplace_back(field, iri.get<std::string>());
    if (j.contains("equivalence")) {
        for (const auto& rule : j.at("equivalence")) {
            EquivalenceRule r;
            r.tool_id = rule.at("tool_id").get<std::string>();
            r.native_field = rule.at("native").get<std::string>();
            r.canonical_field = rule.at("canonical").get<std::string>();
            if (!sim.predicate_for(r.canonical_field))
                throw ConfigError("equivalence rule targets unknown canonical field: " +
                                  r.canonical_field);
            sim.equivalence.push_back(std::move(r));
        }
    }
    return sim;
}

SemanticIntegrationModel default_sim() {
    SemanticIntegrationModel sim;
    sim.classes = {"sec:TrafficData", "sec:TrafficMetric", "sec:TrafficVisualiser"};
    sim.predicates = {{"ts", "sec:timestamp"},
                      {"src_ip", "sec:sourceIp"},
                      {"src_port", "sec:sourcePort"},
                      {"dst_host", "sec:destHost"},
                      {"dst_port", "sec:destPort"},
                      {"protocol", "sec:protocol"},
                      {"priority", "sec:priority"},
                      {"bytes", "sec:bytes"},
                      {"tool_id", "sec:toolId"},
                      {"auth_credential_id", "sec:authCredentialId"},
                      {"auth_outcome", "sec:authOutcome"}};
    auto identity = [&](const std::string& tool) {
        for (const auto& [field, iri] : sim.predicates)
            sim.equivalence.push_back({tool, field, field});
    };
    for (const auto& [native, canonical] :
         std::vector<std::pair<std::string, std::string>>{
             {"ts", "ts"},
             {"id.orig_h", "src_ip"},
             {"id.orig_p", "src_port"},
             {"id.resp_h", "dst_host"},
             {"id.resp_p", "dst_port"},
             {"proto", "protocol"},
             {"orig_bytes", "bytes"}})
        sim.equivalence.push_back({"zeek", native, canonical});
    for (const auto& [native, canonical] :
         std::vector<std::pair<std::string, std::string>>{
             {"ts", "ts"},
             {"src_ip", "src_ip"},
             {"src_port", "src_port"},
             {"dst_ip", "dst_host"},
             {"dst_port", "dst_port"},
             {"proto", "protocol"},
             {"priority", "priority"},
             {"credential_id", "auth_credential_id"}})
        sim.equivalence.push_back({"snort", native, canonical});
    for (const auto& [native, canonical] :
         std::vector<std::pair<std::string, std::string>>{{"t", "ts"},
                                                          {"src", "src_ip"},
                                                          {"sport", "src_port"},
                                                          {"dst", "dst_host"},
                                                          {"dport", "dst_port"}})
        sim.equivalence.push_back({"limacharlie", native, canonical});
    identity("limacharlie");
    identity("splunk");
    return sim;
}

std::vector<Triple> record_to_triples(const TrafficRecord& r,
                                      const SemanticIntegrationModel& sim) {
    if (!sim.covers_tool(r.tool_id))
        throw UncoveredTool("tool not covered by integration model: " + r.tool_id);
    const std::string subject = observation_subject(r);
    std::vector<Triple> out;
    auto emit = [&](const char* field, std::string value, TripleObject::Kind kind) {
        const std::string* pred = sim.predicate_for(field);
        if (!pred)
            throw UnboundPredicate(std::string("no predicate for field: ") + field);
        out.push_back({subject, *pred, {std::move(value), kind}});
    };
    out.push_back({subject, kTypePredicate,
                   {kTrafficDataClass, TripleObject::Kind::iri}});
    emit("ts", dump_double(r.ts), TripleObject::Kind::timestamp_t);
    emit("src_ip", canonical_ip(r.src_ip), TripleObject::Kind::string_t);
    emit("src_port", std::to_string(r.src_port), TripleObject::Kind::integer_t);
    emit("dst_host", canonical_ip(r.dst_host), TripleObject::Kind::string_t);
    emit("dst_port", std::to_string(r.dst_port), TripleObject::Kind::integer_t);
    emit("protocol", r.protocol.to_string(), TripleObject::Kind::string_t);
    if (r.priority)
        emit("priority", std::to_string(*r.priority), TripleObject::Kind::integer_t);
    if (r.bytes)
        emit("bytes", std::to_string(*r.bytes), TripleObject::Kind::integer_t);
    if (r.auth) {
        emit("auth_credential_id", r.auth->credential_id, TripleObject::Kind::string_t);
        emit("auth_outcome",
             r.auth->outcome == AuthInfo::Outcome::failure ? "failure" : "success",
             TripleObject::Kind::string_t);
    }
    emit("tool_id", r.tool_id, TripleObject::Kind::string_t);
    return out;
}

KnowledgeBase::KnowledgeBase(std::set<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)) {}

KnowledgeBase::KnowledgeBase(const SemanticIntegrationModel& sim)
    : vocabulary_(sim.vocabulary()) {}

std::size_t KnowledgeBase::assert_triples(std::span<const Triple> ts) {
    std::unique_lock lock(mutex_);
    std::size_t inserted = 0;
    for (const Triple& t : ts) {
        if (triples_.insert(t).second)
            ++inserted;
    }
    return inserted;
}

std::vector<Binding>
KnowledgeBase::query(const std::vector<TriplePattern>& patterns) const {
    if (patterns.empty())
        throw Error("query pattern must be non-empty");
    for (const auto& p : patterns) {
        if (!is_variable(p.predicate) && !vocabulary_.count(p.predicate))
            throw UnboundPredicate("predicate not in vocabulary: " + p.predicate);
    }
    std::shared_lock lock(mutex_);
    std::vector<Binding> bindings = {Binding{}};
    for (const auto& pattern : patterns) {
        std::vector<Binding> next;
        for (const auto& binding : bindings) {
            auto match_term = [&](const std::string& term, const std::string& value,
                                  Binding& candidate) {
                if (is_variable(term)) {
                    auto it = candidate.find(term);
                    if (it == candidate.end()) {
                        candidate[term] = value;
                        return true;
                    }
                    return it->second == value;
                }
                return term == value;
            };
            for (const Triple& t : triples_) {
                Binding candidate = binding;
                if (!match_term(pattern.subject, t.subject, candidate))
                    continue;
                if (!match_term(pattern.predicate, t.predicate, candidate))
                    continue;
                if (!match_term(pattern.object, t.object.value, candidate))
                    continue;
                next.push_back(std::move(candidate));
            }
        }
        bindings = std::move(next);
    }
    std::set<Binding> unique(bindings.begin(), bindings.end());
    return {unique.begin(), unique.end()};
}

std::size_t KnowledgeBase::size() const {
    std::shared_lock lock(mutex_);
    return triples_.size();
}

std::vector<Triple> KnowledgeBase::all_triples() const {
    std::shared_lock lock(mutex_);
    return {triples_.begin(), triples_.end()};
}

void KnowledgeBase::save_snapshot(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write snapshot: " + path.string());
    for (const Triple& t : triples_) {
        out << escape_field(t.subject) << '\t' << escape_field(t.predicate) << '\t'
            << escape_field(t.object.value) << '\t' << datatype_name(t.object.kind)
            << '\n';
    }
}

KnowledgeBase KnowledgeBase::load_snapshot(const std::filesystem::path& path,
                                           std::set<std::string> vocabulary) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read snapshot: " + path.string());
    KnowledgeBase kb(std::move(vocabulary));
    std::string line;
    std::vector<Triple> triples;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> parts;
        std::size_t start = 0;
        // fields are escaped, so raw tabs are separators
        while (parts.size() < 3) {
            const auto pos = line.find('\t', start);
            if (pos == std::string::npos)
                throw Error("malformed snapshot line: " + line);
            parts.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        parts.push_back(line.substr(start));
        Triple t;
        t.subject = unescape_field(parts[0]);
        t.predicate = unescape_field(parts[1]);
        t.object.value = unescape_field(parts[2]);
        t.object.kind = datatype_from_name(parts[3]);
        triples.push_back(std::move(t));
    }
    kb.assert_triples(triples);
    return kb;
}

namespace {

using ObservationKey =
    std::tuple<double, std::string, int, std::string, int, std::string>;

ObservationKey key_of(const TrafficRecord& r) {
    return {r.ts, r.src_ip, r.src_port, r.dst_host, r.dst_port,
            r.protocol.to_string()};
}

int effective_priority(const TrafficRecord& r) {
    // Records without a tool-supplied priority lose ties to any record that
    // has one (lower value = higher precedence).
    return r.priority ? *r.priority : std::numeric_limits<int>::max();
}

TrafficRecord merge_records(const TrafficRecord& a, const TrafficRecord& b) {
    const int pa = effective_priority(a);
    const int pb = effective_priority(b);
    const TrafficRecord* winner = nullptr;
    if (pa < pb)
        winner = &a;
    else if (pb < pa)
        winner = &b;
    auto conflict = [&](const char* field) -> const TrafficRecord& {
        if (!winner)
            throw ConflictUnresolvable(
                std::string("conflicting values for '") + field +
                "' with equal priority at ts " + dump_double(a.ts));
        return *winner;
    };
    TrafficRecord out = a; // key fields are identical by construction
    if (a.priority && b.priority)
        out.priority = std::min(*a.priority, *b.priority);
    else
        out.priority = a.priority ? a.priority : b.priority;
    if (a.bytes && b.bytes && *a.bytes != *b.bytes)
        out.bytes = conflict("bytes").bytes;
    else
        out.bytes = a.bytes ? a.bytes : b.bytes;
    if (a.auth && b.auth && !(*a.auth == *b.auth))
        out.auth = conflict("auth").auth;
    else
        out.auth = a.auth ? a.auth : b.auth;
    if (a.tool_id != b.tool_id)
        out.tool_id = conflict("tool_id").tool_id;
    return out;
}

void fold_in(std::map<ObservationKey, TrafficRecord>& acc, const TrafficRecord& raw,
             const SemanticIntegrationModel& sim) {
    if (!sim.covers_tool(raw.tool_id))
        throw UncoveredTool("tool not covered by integration model: " + raw.tool_id);
    const auto violations = validate_record(raw);
    if (!violations.empty())
        throw Error("invalid record in integrate: " + violations.front());
    TrafficRecord r = raw;
    r.src_ip = canonical_ip(r.src_ip);
    r.dst_host = canonical_ip(r.dst_host);
    const auto key = key_of(r);
    auto it = acc.find(key);
    if (it == acc.end())
        acc.emplace(key, std::move(r));
    else
        it->second = merge_records(it->second, r);
}

} // namespace

std::vector<TrafficRecord> integrate(const std::vector<TrafficRecord>& dx,
                                     const std::vector<TrafficRecord>& dy,
                                     const SemanticIntegrationModel& sim) {
    std::map<ObservationKey, TrafficRecord> merged;
    for (const auto& r : dx)
        fold_in(merged, r, sim);
    for (const auto& r : dy)
        fold_in(merged, r, sim);
    std::vector<TrafficRecord> out;
    out.reserve(merged.size());
    for (auto& [key, record] : merged)
        out.push_back(std::move(record));
    return out; // map order == sorted by (ts, src, sport, dst, dport, proto)
}

std::vector<TrafficRecord>
integrate_all(const std::vector<std::vector<TrafficRecord>>& datasets,
              const SemanticIntegrationModel& sim) {
    std::vector<TrafficRecord> acc;
    for (const auto& d : datasets)
        acc = integrate(acc, d, sim);
    return acc;
}

} // namespace secdoar::semantic
