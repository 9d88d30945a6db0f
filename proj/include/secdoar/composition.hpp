#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "secdoar/core.hpp"

namespace secdoar::composition {

// Registry of tools, the data-kind taxonomy and the known feature ids.
// Immutable once loaded; all queries are pure.
class ToolRegistry {
public:
    // Throws CyclicTaxonomy / UnknownKind when the kind graph is malformed.
    void add_kind(const DataKind& kind);
    void add_feature(const std::string& feature);

    // Throws DuplicateTool / UnknownKind / UnknownFeature.
    void register_tool(const ToolDescriptor& tool);

    // True iff a == b or b is reachable from a via parent edges.
    bool subsumes(const std::string& a, const std::string& b) const;

    bool has_kind(const std::string& id) const { return kinds_.count(id) != 0; }
    bool has_feature(const std::string& id) const { return features_.count(id) != 0; }
    const ToolDescriptor* find_tool(const std::string& id) const;
    const std::map<std::string, ToolDescriptor>& tools() const { return tools_; }
    const std::set<std::string>& features() const { return features_; }
    std::vector<std::string> kind_ids() const;
    const std::vector<std::string>& parents_of(const std::string& id) const;

    nlohmann::ordered_json to_json() const;
    static ToolRegistry from_json(const nlohmann::json& j);
    static ToolRegistry load_file(const std::filesystem::path& path);

private:
    std::map<std::string, std::vector<std::string>> kinds_; // id -> direct parents
    std::set<std::string> features_;
    std::map<std::string, ToolDescriptor> tools_;
};

struct CompositionRequest {
    std::set<std::string> required_features;
    std::set<Role> roles_required;
};

using Assignment = std::map<Role, std::set<std::string>>;

struct CompositionResult {
    Assignment assignment;
    // Witness kinds (d_i, d_j, d_k) for orchestration -> analysis -> reporting.
    std::array<std::string, 3> data_chain;
    bool valid = false;
    std::vector<std::string> reasons; // populated when invalid

    std::size_t tool_count() const;
};

// Validates one role assignment against the request: role support, feature
// coverage and the existence of a subsumption-compatible data chain. Roles
// absent from roles_required are served by the platform itself.
CompositionResult check_composition(const ToolRegistry& reg,
                                    const Assignment& assignment,
                                    const CompositionRequest& req);

// Enumerates all minimal valid assignments, ordered by total tool count then
// lexicographic tool-id tuple. An unsatisfiable request yields an empty list.
std::vector<CompositionResult> derive_compositions(const ToolRegistry& reg,
                                                   const CompositionRequest& req);

nlohmann::ordered_json assignment_to_json(const Assignment& a);
Assignment assignment_from_json(const nlohmann::json& j);
nlohmann::ordered_json composition_result_to_json(const CompositionResult& r);

} // namespace secdoar::composition
