#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "secdoar/core.hpp"

namespace secdoar::semantic {

struct TripleObject {
    enum class Kind { iri, string_t, integer_t, decimal_t, timestamp_t };
    std::string value;
    Kind kind = Kind::string_t;

    bool is_iri() const { return kind == Kind::iri; }
    auto operator<=>(const TripleObject&) const = default;
};

struct Triple {
    std::string subject;
    std::string predicate;
    TripleObject object;

    auto operator<=>(const Triple&) const = default;
};

// Conjunctive pattern term; tokens starting with '?' are variables.
struct TriplePattern {
    std::string subject;
    std::string predicate;
    std::string object;
};

using Binding = std::map<std::string, std::string>;

// Class and predicate vocabulary for traffic data plus per-tool field
// equivalences.
struct SemanticIntegrationModel {
    struct EquivalenceRule {
        std::string tool_id;
        std::string native_field;
        std::string canonical_field;
    };

    std::vector<std::string> classes; // sec:TrafficData etc.
    std::vector<std::pair<std::string, std::string>> predicates; // canonical -> IRI
    std::vector<EquivalenceRule> equivalence;

    const std::string* predicate_for(std::string_view canonical_field) const;
    bool covers_tool(std::string_view tool_id) const;
    std::set<std::string> vocabulary() const; // predicate IRIs + rdf:type

    nlohmann::ordered_json to_json() const;
    static SemanticIntegrationModel from_json(const nlohmann::ordered_json& j);
};

// Vocabulary and rules for the built-in tool set (zeek, snort, splunk,
// limacharlie).
SemanticIntegrationModel default_sim();

// One triple per populated canonical field plus an rdf:type triple; the
// subject IRI is derived from the observation identity so sightings of the
// same observation share a node.
std::vector<Triple> record_to_triples(const TrafficRecord& r,
                                      const SemanticIntegrationModel& sim);

// In-memory triple store with set semantics. Single writer, shared readers.
class KnowledgeBase {
public:
    explicit KnowledgeBase(std::set<std::string> vocabulary);
    explicit KnowledgeBase(const SemanticIntegrationModel& sim);

    KnowledgeBase(KnowledgeBase&& other) noexcept
        : vocabulary_(std::move(other.vocabulary_)),
          triples_(std::move(other.triples_)) {}
    KnowledgeBase(const KnowledgeBase&) = delete;
    KnowledgeBase& operator=(const KnowledgeBase&) = delete;

    // Returns the number of newly inserted triples (re-asserts are no-ops).
    std::size_t assert_triples(std::span<const Triple> ts);

    // Conjunctive pattern query; bindings come back sorted and deduplicated.
    std::vector<Binding> query(const std::vector<TriplePattern>& patterns) const;

    std::size_t size() const;
    std::vector<Triple> all_triples() const;

    void save_snapshot(const std::filesystem::path& path) const;
    static KnowledgeBase load_snapshot(const std::filesystem::path& path,
                                       std::set<std::string> vocabulary);

private:
    std::set<std::string> vocabulary_;
    std::set<Triple> triples_;
    mutable std::shared_mutex mutex_;
};

// F_O: merges two datasets into one. Records are the same observation iff
// (ts, src_ip, src_port, dst_host, dst_port, protocol) match; merged fields
// follow non-null-wins with conflicts resolved by lower priority value.
std::vector<TrafficRecord> integrate(const std::vector<TrafficRecord>& dx,
                                     const std::vector<TrafficRecord>& dy,
                                     const SemanticIntegrationModel& sim);

// Folds integrate over any number of per-tool datasets.
std::vector<TrafficRecord>
integrate_all(const std::vector<std::vector<TrafficRecord>>& datasets,
              const SemanticIntegrationModel& sim);

} // namespace secdoar::semantic
