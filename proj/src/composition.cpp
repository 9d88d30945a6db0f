#include "secdoar/composition.hpp"

#include "secdoar/errors.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

namespace secdoar::composition {

namespace {

void check_component_tree(const ComponentDescriptor& c) {
    std::set<std::string> seen;
    for (const auto& sub : c.subcomponents) {
        if (!seen.insert(sub.id).second)
            throw Error("duplicate subcomponent id: " + sub.id);
        check_component_tree(sub);
    }
}

nlohmann::ordered_json component_to_json(const ComponentDescriptor& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    nlohmann::ordered_json subs = nlohmann::ordered_json::array();
    for (const auto& s : c.subcomponents)
        subs.push_back(component_to_json(s));
    j["subcomponents"] = std::move(subs);
    j["interfaces"] = c.interfaces;
    return j;
}

ComponentDescriptor component_from_json(const nlohmann::json& j) {
    ComponentDescriptor c;
    c.id = j.at("id").get<std::string>();
    if (j.contains("subcomponents")) {
        for (const auto& s : j.at("subcomponents"))
            c.subcomponents.push_back(component_from_json(s));
    }
    if (j.contains("interfaces"))
        c.interfaces = j.at("interfaces").get<std::vector<std::string>>();
    return c;
}

const std::array<Role, 3> kRoleOrder = {Role::orchestration, Role::analysis,
                                        Role::reporting};

} // namespace

void ToolRegistry::add_kind(const DataKind& kind) {
    if (kinds_.count(kind.id))
        throw Error("duplicate data kind: " + kind.id);
    kinds_[kind.id] = kind.parents;
    // A new cycle must pass through the inserted node; walk upward from it.
    std::set<std::string> visited;
    std::function<bool(const std::string&)> reaches_self = [&](const std::string& id) {
        auto it = kinds_.find(id);
        if (it == kinds_.end())
            return false;
        for (const auto& parent : it->second) {
            if (parent == kind.id)
                return true;
            if (visited.insert(parent).second && reaches_self(parent))
                return true;
        }
        return false;
    };
    if (reaches_self(kind.id)) {
        kinds_.erase(kind.id);
        throw CyclicTaxonomy("taxonomy cycle through kind: " + kind.id);
    }
}

void ToolRegistry::add_feature(const std::string& feature) {
    features_.insert(feature);
}

void ToolRegistry::register_tool(const ToolDescriptor& tool) {
    if (tools_.count(tool.id))
        throw DuplicateTool("tool already registered: " + tool.id);
    for (const auto& f : tool.features) {
        if (!features_.count(f))
            throw UnknownFeature("tool " + tool.id + " references unknown feature: " + f);
    }
    for (const auto& iface : tool.interfaces) {
        if (iface.consumes.empty() && iface.produces.empty())
            throw Error("tool " + tool.id + " interface " + iface.id +
                        " neither consumes nor produces data");
        for (const auto& k : iface.consumes) {
            if (!kinds_.count(k))
                throw UnknownKind("tool " + tool.id + " consumes unknown kind: " + k);
        }
        for (const auto& k : iface.produces) {
            if (!kinds_.count(k))
                throw UnknownKind("tool " + tool.id + " produces unknown kind: " + k);
        }
    }
    std::set<std::string> top_level;
    for (const auto& c : tool.components) {
        if (!top_level.insert(c.id).second)
            throw Error("duplicate component id: " + c.id);
        check_component_tree(c);
    }
    tools_[tool.id] = tool;
}

bool ToolRegistry::subsumes(const std::string& a, const std::string& b) const {
    if (!kinds_.count(a))
        throw UnknownKind("unknown data kind: " + a);
    if (!kinds_.count(b))
        throw UnknownKind("unknown data kind: " + b);
    if (a == b)
        return true;
    std::vector<std::string> frontier = {a};
    std::set<std::string> visited = {a};
    while (!frontier.empty()) {
        const std::string cur = frontier.back();
        frontier.pop_back();
        auto it = kinds_.find(cur);
        if (it == kinds_.end())
            continue;
        for (const auto& parent : it->second) {
            if (parent == b)
                return true;
            if (visited.insert(parent).second)
                frontier.push_back(parent);
        }
    }
    return false;
}

const ToolDescriptor* ToolRegistry::find_tool(const std::string& id) const {
    auto it = tools_.find(id);
    return it == tools_.end() ? nullptr : &it->second;
}

std::vector<std::string> ToolRegistry::kind_ids() const {
    std::vector<std::string> out;
    out.reserve(kinds_.size());
    for (const auto& [id, parents] : kinds_)
        out.push_back(id);
    return out;
}

const std::vector<std::string>& ToolRegistry::parents_of(const std::string& id) const {
    auto it = kinds_.find(id);
    if (it == kinds_.end())
        throw UnknownKind("unknown data kind: " + id);
    return it->second;
}

nlohmann::ordered_json ToolRegistry::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json kinds = nlohmann::ordered_json::array();
    for (const auto& [id, parents] : kinds_)
        kinds.push_back({{"id", id}, {"parents", parents}});
    j["kinds"] = std::move(kinds);
    j["features"] = features_;
    nlohmann::ordered_json tools = nlohmann::ordered_json::array();
    for (const auto& [id, t] : tools_) {
        nlohmann::ordered_json tj;
        tj["id"] = t.id;
        tj["features"] = t.features;
        nlohmann::ordered_json funcs = nlohmann::ordered_json::array();
        for (Role r : kRoleOrder) {
            if (t.functions.count(r))
                funcs.push_back(role_to_string(r));
        }
        tj["functions"] = std::move(funcs);
        nlohmann::ordered_json comps = nlohmann::ordered_json::array();
        for (const auto& c : t.components)
            comps.push_back(component_to_json(c));
        tj["components"] = std::move(comps);
        nlohmann::ordered_json ifaces = nlohmann::ordered_json::array();
        for (const auto& i : t.interfaces) {
            ifaces.push_back({{"id", i.id},
                              {"consumes", i.consumes},
                              {"produces", i.produces}});
        }
        tj["interfaces"] = std::move(ifaces);
        tools.push_back(std::move(tj));
    }
    j["tools"] = std::move(tools);
    return j;
}

ToolRegistry ToolRegistry::from_json(const nlohmann::json& j) {
    ToolRegistry reg;
    // Kinds may reference parents declared later in the file; insert with a
    // fixpoint loop so declaration order does not matter.
    std::vector<DataKind> pending;
    if (j.contains("kinds")) {
        for (const auto& k : j.at("kinds")) {
            DataKind kind;
            kind.id = k.at("id").get<std::string>();
            if (k.contains("parents"))
                kind.parents = k.at("parents").get<std::vector<std::string>>();
            pending.push_back(std::move(kind));
        }
    }
    while (!pending.empty()) {
        std::vector<DataKind> deferred;
        for (auto& kind : pending) {
            const bool parents_known =
                std::all_of(kind.parents.begin(), kind.parents.end(),
                            [&](const std::string& p) { return reg.kinds_.count(p); });
            if (parents_known)
                reg.add_kind(kind);
            else
                deferred.push_back(std::move(kind));
        }
        if (deferred.size() == pending.size()) {
            // Nothing resolved this pass: either a cycle or a dangling parent.
            std::set<std::string> unresolved;
            for (const auto& k : deferred)
                unresolved.insert(k.id);
            for (const auto& k : deferred) {
                for (const auto& p : k.parents) {
                    if (!unresolved.count(p) && !reg.kinds_.count(p))
                        throw UnknownKind("kind " + k.id + " has unknown parent: " + p);
                }
            }
            throw CyclicTaxonomy("taxonomy cycle among kinds: " +
                                 *unresolved.begin() + "...");
        }
        pending = std::move(deferred);
    }
    if (j.contains("features")) {
        for (const auto& f : j.at("features"))
            reg.add_feature(f.get<std::string>());
    }
    if (j.contains("tools")) {
        for (const auto& tj : j.at("tools")) {
            ToolDescriptor t;
            t.id = tj.at("id").get<std::string>();
            if (tj.contains("features")) {
                for (const auto& f : tj.at("features"))
                    t.features.insert(f.get<std::string>());
            }
            if (tj.contains("functions")) {
                for (const auto& f : tj.at("functions")) {
                    auto role = role_from_string(f.get<std::string>());
                    if (!role)
                        throw ConfigError("unknown role: " + f.get<std::string>());
                    t.functions.insert(*role);
                }
            }
            if (tj.contains("components")) {
                for (const auto& c : tj.at("components"))
                    t.components.push_back(component_from_json(c));
            }
            if (tj.contains("interfaces")) {
                for (const auto& ij : tj.at("interfaces")) {
                    InterfaceDescriptor i;
                    i.id = ij.at("id").get<std::string>();
                    if (ij.contains("consumes")) {
                        for (const auto& k : ij.at("consumes"))
                            i.consumes.insert(k.get<std::string>());
                    }
                    if (ij.contains("produces")) {
                        for (const auto& k : ij.at("produces"))
                            i.produces.insert(k.get<std::string>());
                    }
                    t.interfaces.push_back(std::move(i));
                }
            }
            reg.register_tool(t);
        }
    }
    return reg;
}

ToolRegistry ToolRegistry::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open registry file: " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

std::size_t CompositionResult::tool_count() const {
    std::set<std::string> distinct;
    for (const auto& [role, tools] : assignment)
        distinct.insert(tools.begin(), tools.end());
    return distinct.size();
}

CompositionResult check_composition(const ToolRegistry& reg,
                                    const Assignment& assignment,
                                    const CompositionRequest& req) {
    CompositionResult res;
    res.assignment = assignment;
    for (const auto& [role, tools] : assignment) {
        for (const auto& id : tools) {
            if (!reg.find_tool(id))
                throw UnknownTool("tool not registered: " + id);
        }
    }

    // (a) every assigned tool must support its role.
    for (const auto& [role, tools] : assignment) {
        for (const auto& id : tools) {
            if (!reg.find_tool(id)->functions.count(role))
                res.reasons.push_back("tool " + id + " does not support role " +
                                      role_to_string(role));
        }
    }
    for (Role role : req.roles_required) {
        auto it = assignment.find(role);
        if (it == assignment.end() || it->second.empty())
            res.reasons.push_back("no tool assigned to required role " +
                                  role_to_string(role));
    }

    // (b) the assigned tools together must cover the required features.
    std::set<std::string> covered;
    for (const auto& [role, tools] : assignment) {
        for (const auto& id : tools) {
            const auto& fs = reg.find_tool(id)->features;
            covered.insert(fs.begin(), fs.end());
        }
    }
    for (const auto& f : req.required_features) {
        if (!covered.count(f))
            res.reasons.push_back("required feature not covered: " + f);
    }

    // (c) witness data chain d_i <= d_j <= d_k across the three stages. Roles
    // the platform serves itself impose no tool constraint; the witness is
    // passed through unchanged.
    if (!res.reasons.empty()) {
        res.valid = false;
        return res;
    }
    if (req.roles_required.empty()) {
        res.valid = true;
        return res;
    }
    auto assigned = [&](Role r) -> std::vector<const ToolDescriptor*> {
        std::vector<const ToolDescriptor*> out;
        auto it = assignment.find(r);
        if (it != assignment.end()) {
            for (const auto& id : it->second)
                out.push_back(reg.find_tool(id));
        }
        return out;
    };
    auto consumed_by_all = [&](Role r) {
        std::vector<std::string> out;
        const auto tools = assigned(r);
        for (const auto& kind : reg.kind_ids()) {
            const bool all = std::all_of(tools.begin(), tools.end(),
                                         [&](const ToolDescriptor* t) {
                                             return t->consumed_kinds().count(kind);
                                         });
            if (all && !tools.empty())
                out.push_back(kind);
        }
        return out;
    };

    std::vector<std::string> cand_i;
    if (req.roles_required.count(Role::orchestration)) {
        std::set<std::string> produced;
        for (const ToolDescriptor* t : assigned(Role::orchestration)) {
            const auto p = t->produced_kinds();
            produced.insert(p.begin(), p.end());
        }
        cand_i.assign(produced.begin(), produced.end());
    } else {
        cand_i = reg.kind_ids();
    }

    const bool analysis_req = req.roles_required.count(Role::analysis) != 0;
    const bool reporting_req = req.roles_required.count(Role::reporting) != 0;
    const auto analysis_kinds = analysis_req ? consumed_by_all(Role::analysis)
                                             : std::vector<std::string>{};
    const auto reporting_kinds = reporting_req ? consumed_by_all(Role::reporting)
                                               : std::vector<std::string>{};

    for (const auto& di : cand_i) {
        const auto cand_j = analysis_req ? analysis_kinds : std::vector<std::string>{di};
        for (const auto& dj : cand_j) {
            if (!reg.subsumes(di, dj))
                continue;
            const auto cand_k =
                reporting_req ? reporting_kinds : std::vector<std::string>{dj};
            for (const auto& dk : cand_k) {
                if (!reg.subsumes(dj, dk))
                    continue;
                res.data_chain = {di, dj, dk};
                res.valid = true;
                return res;
            }
        }
    }
    res.reasons.push_back("no data chain");
    res.valid = false;
    return res;
}

std::vector<CompositionResult> derive_compositions(const ToolRegistry& reg,
                                                   const CompositionRequest& req) {
    if (reg.tools().empty())
        throw NoComposition("registry has no tools");

    std::vector<Role> roles(req.roles_required.begin(), req.roles_required.end());
    std::vector<std::vector<std::string>> candidates;
    for (Role r : roles) {
        std::vector<std::string> c;
        for (const auto& [id, t] : reg.tools()) {
            if (t.functions.count(r))
                c.push_back(id);
        }
        candidates.push_back(std::move(c));
    }

    std::vector<CompositionResult> valid;
    std::vector<std::set<std::string>> chosen(roles.size());
    std::function<void(std::size_t)> enumerate = [&](std::size_t idx) {
        if (idx == roles.size()) {
            Assignment a;
            for (std::size_t i = 0; i < roles.size(); ++i)
                a[roles[i]] = chosen[i];
            auto res = check_composition(reg, a, req);
            if (res.valid)
                valid.push_back(std::move(res));
            return;
        }
        const auto& cand = candidates[idx];
        const std::size_t n = cand.size();
        for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
            chosen[idx].clear();
            for (std::size_t b = 0; b < n; ++b) {
                if (mask & (std::size_t{1} << b))
                    chosen[idx].insert(cand[b]);
            }
            enumerate(idx + 1);
        }
    };
    if (roles.empty()) {
        auto res = check_composition(reg, {}, req);
        if (res.valid)
            valid.push_back(std::move(res));
    } else {
        enumerate(0);
    }

    auto subset_of = [](const Assignment& a, const Assignment& b) {
        bool strict = false;
        for (const auto& [role, tools_b] : b) {
            auto it = a.find(role);
            const std::set<std::string> tools_a =
                it == a.end() ? std::set<std::string>{} : it->second;
            if (!std::includes(tools_b.begin(), tools_b.end(), tools_a.begin(),
                               tools_a.end()))
                return false;
            if (tools_a.size() < tools_b.size())
                strict = true;
        }
        for (const auto& [role, tools_a] : a) {
            if (!b.count(role) && !tools_a.empty())
                return false;
        }
        return strict;
    };

    std::vector<CompositionResult> minimal;
    for (const auto& r : valid) {
        const bool dominated =
            std::any_of(valid.begin(), valid.end(), [&](const CompositionResult& o) {
                return subset_of(o.assignment, r.assignment);
            });
        if (!dominated)
            minimal.push_back(r);
    }

    auto tuple_of = [](const CompositionResult& r) {
        std::vector<std::string> t;
        for (Role role : kRoleOrder) {
            auto it = r.assignment.find(role);
            if (it != r.assignment.end())
                t.insert(t.end(), it->second.begin(), it->second.end());
        }
        return t;
    };
    std::sort(minimal.begin(), minimal.end(),
              [&](const CompositionResult& a, const CompositionResult& b) {
                  const auto ca = a.tool_count();
                  const auto cb = b.tool_count();
                  if (ca != cb)
                      return ca < cb;
                  return tuple_of(a) < tuple_of(b);
              });
    return minimal;
}

nlohmann::ordered_json assignment_to_json(const Assignment& a) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (Role r : kRoleOrder) {
        auto it = a.find(r);
        if (it != a.end())
            j[role_to_string(r)] = it->second;
    }
    return j;
}

Assignment assignment_from_json(const nlohmann::json& j) {
    Assignment a;
    for (const auto& [key, tools] : j.items()) {
        auto role = role_from_string(key);
        if (!role)
            throw ConfigError("unknown role in assignment: " + key);
        for (const auto& t : tools)
            a[*role].insert(t.get<std::string>());
    }
    return a;
}

nlohmann::ordered_json composition_result_to_json(const CompositionResult& r) {
    nlohmann::ordered_json j;
    j["valid"] = r.valid;
    j["assignment"] = assignment_to_json(r.assignment);
    if (r.valid)
        j["data_chain"] = r.data_chain;
    if (!r.reasons.empty())
        j["reasons"] = r.reasons;
    return j;
}

} // namespace secdoar::composition
