#include "argus/identity_graph.hpp"

#include <algorithm>
#include <deque>

namespace argus {

namespace {

ScopeKind scope_kind_of(const Node& n) {
    switch (n.kind) {
    case NodeKind::ns: return ScopeKind::ns;
    case NodeKind::project: return ScopeKind::project;
    case NodeKind::domain:
        return n.attrs.value("cluster", false) ? ScopeKind::cluster : ScopeKind::domain;
    default: fail(Errc::out_of_range, "node is not a scope: " + n.id);
    }
}

std::string require_str(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
        fail(Errc::malformed_record, std::string("record missing field: ") + key);
    return j.at(key).get<std::string>();
}

} // namespace

std::string to_string(NodeKind k) {
    switch (k) {
    case NodeKind::subject: return "subject";
    case NodeKind::role: return "role";
    case NodeKind::resource: return "resource";
    case NodeKind::ns: return "namespace";
    case NodeKind::project: return "project";
    case NodeKind::domain: return "domain";
    }
    fail(Errc::out_of_range, "node kind out of range");
}

std::string to_string(EdgeKind k) {
    switch (k) {
    case EdgeKind::grants: return "grants";
    case EdgeKind::ownership: return "ownership";
    case EdgeKind::scope: return "scope";
    case EdgeKind::recent_activity: return "recent_activity";
    }
    fail(Errc::out_of_range, "edge kind out of range");
}

IdentityGraph::IdentityGraph() = default;

bool IdentityGraph::has_node(const std::string& id) const { return nodes_.count(id) > 0; }

const Node* IdentityGraph::find_node(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<Node> IdentityGraph::nodes() const {
    std::vector<Node> out;
    out.reserve(nodes_.size());
    for (const auto& [_, n] : nodes_) out.push_back(n);
    return out;
}

std::vector<Edge> IdentityGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(out_.size());
    for (const auto& [_, e] : out_) out.push_back(e);
    return out;
}

void IdentityGraph::add_node(Node n) {
    if (n.id.empty()) fail(Errc::malformed_record, "node id must not be empty");
    nodes_[n.id] = std::move(n);
}

void IdentityGraph::add_edge(Edge e) {
    if (!has_node(e.from)) fail(Errc::unknown_resource, "edge endpoint missing: " + e.from);
    if (!has_node(e.to)) fail(Errc::unknown_resource, "edge endpoint missing: " + e.to);
    // One edge per (from, to, kind); re-adding refreshes attrs.
    auto [lo, hi] = out_.equal_range(e.from);
    for (auto it = lo; it != hi;) {
        if (it->second.to == e.to && it->second.kind == e.kind)
            it = out_.erase(it);
        else
            ++it;
    }
    auto [ilo, ihi] = in_.equal_range(e.to);
    for (auto it = ilo; it != ihi;) {
        if (it->second.from == e.from && it->second.kind == e.kind)
            it = in_.erase(it);
        else
            ++it;
    }
    in_.emplace(e.to, e);
    out_.emplace(e.from, std::move(e));
}

std::set<GrantTuple> IdentityGraph::grants() const {
    std::set<GrantTuple> out;
    for (const auto& [id, node] : nodes_) {
        if (node.kind != NodeKind::role || !node.attrs.value("bound", false)) continue;
        std::vector<std::string> verbs = node.attrs.value("verbs", std::vector<std::string>{});
        std::string role_name = node.attrs.value("name", id);
        std::string pattern = node.attrs.value("resource_pattern", "*");
        std::vector<ScopeId> scopes;
        auto [slo, shi] = out_.equal_range(id);
        for (auto it = slo; it != shi; ++it) {
            if (it->second.kind != EdgeKind::scope) continue;
            const Node* s = find_node(it->second.to);
            scopes.push_back(ScopeId{scope_kind_of(*s), s->id});
        }
        auto [glo, ghi] = in_.equal_range(id);
        for (auto it = glo; it != ghi; ++it) {
            if (it->second.kind != EdgeKind::grants) continue;
            for (const auto& sc : scopes)
                for (const auto& v : verbs)
                    out.insert(GrantTuple{it->second.from, role_name, sc, pattern, v});
        }
    }
    return out;
}

std::set<std::string> IdentityGraph::ownership_closure(const ResourceId& resource) const {
    std::set<std::string> seen;
    std::deque<std::string> q{resource};
    while (!q.empty()) {
        std::string cur = q.front();
        q.pop_front();
        if (!seen.insert(cur).second) continue;
        auto [lo, hi] = out_.equal_range(cur);
        for (auto it = lo; it != hi; ++it)
            if (it->second.kind == EdgeKind::ownership) q.push_back(it->second.to);
    }
    return seen;
}

std::vector<SubjectId> IdentityGraph::who_can(const std::string& action,
                                              const ResourceId& resource) const {
    const Node* r = find_node(resource);
    if (!r || r->kind != NodeKind::resource)
        fail(Errc::unknown_resource, "who_can: unknown resource: " + resource);
    std::set<std::string> closure = ownership_closure(resource);
    std::set<SubjectId> subjects;
    for (const auto& [id, node] : nodes_) {
        if (node.kind != NodeKind::role || !node.attrs.value("bound", false)) continue;
        std::vector<std::string> verbs = node.attrs.value("verbs", std::vector<std::string>{});
        bool verb_ok = std::any_of(verbs.begin(), verbs.end(), [&](const std::string& v) {
            return v == "*" || v == action;
        });
        if (!verb_ok) continue;
        std::string pattern = node.attrs.value("resource_pattern", "*");
        if (pattern != "*" && pattern != resource) continue;
        bool scoped = false;
        auto [slo, shi] = out_.equal_range(id);
        for (auto it = slo; it != shi && !scoped; ++it)
            scoped = it->second.kind == EdgeKind::scope && closure.count(it->second.to) > 0;
        if (!scoped) continue;
        auto [glo, ghi] = in_.equal_range(id);
        for (auto it = glo; it != ghi; ++it)
            if (it->second.kind == EdgeKind::grants) subjects.insert(it->second.from);
    }
    return {subjects.begin(), subjects.end()};
}

Context IdentityGraph::neighbors(const std::optional<SubjectId>& subject,
                                 const ResourceId& resource, int64_t now_ms,
                                 int64_t freshness_ms,
                                 const OpenFindingsFn& open_findings) const {
    Context ctx;
    std::set<std::string> frontier;
    if (has_node(resource)) frontier.insert(resource);
    if (subject && has_node(*subject)) frontier.insert(*subject);

    std::set<std::string> seen = frontier;
    std::set<std::pair<std::string, std::string>> edge_seen;
    for (int depth = 0; depth < 2 && !frontier.empty(); ++depth) {
        std::set<std::string> next;
        for (const auto& id : frontier) {
            auto visit = [&](const Edge& e, const std::string& other) {
                auto key = std::make_pair(e.from + "\x1f" + e.to, to_string(e.kind));
                if (edge_seen.insert(key).second) ctx.edges.push_back(e);
                if (!seen.count(other)) {
                    seen.insert(other);
                    next.insert(other);
                }
            };
            auto [olo, ohi] = out_.equal_range(id);
            for (auto it = olo; it != ohi; ++it) visit(it->second, it->second.to);
            auto [ilo, ihi] = in_.equal_range(id);
            for (auto it = ilo; it != ihi; ++it) visit(it->second, it->second.from);
        }
        frontier = std::move(next);
    }
    for (const auto& id : seen)
        if (const Node* n = find_node(id)) ctx.nodes.push_back(*n);

    if (subject) {
        const Node* s = find_node(*subject);
        if (s && s->attrs.value("approved_operator", false)) {
            auto [lo, hi] = out_.equal_range(*subject);
            for (auto it = lo; it != hi; ++it) {
                if (it->second.kind != EdgeKind::recent_activity) continue;
                if (it->second.to != resource) continue;
                int64_t ts = it->second.attrs.value("ts_ms", int64_t{-1});
                if (ts >= 0 && now_ms - ts <= freshness_ms && ts <= now_ms)
                    ctx.approved_operator = true;
            }
        }
    }
    if (open_findings) ctx.open_findings = open_findings(resource);
    return ctx;
}

const std::map<std::string, std::vector<std::string>>& k8s_builtin_roles() {
    static const std::map<std::string, std::vector<std::string>> table{
        {"cluster-admin", {"*"}},
        {"admin", {"create", "read", "update", "delete", "patch", "list"}},
        {"edit", {"create", "read", "update", "patch", "list"}},
        {"view", {"read", "list"}},
    };
    return table;
}

const std::map<std::string, std::vector<std::string>>& openstack_builtin_roles() {
    static const std::map<std::string, std::vector<std::string>> table{
        {"admin", {"*"}},
        {"member", {"create", "read", "update", "delete"}},
        {"reader", {"read", "list"}},
    };
    return table;
}

namespace {

struct Ingestor {
    IdentityGraph& g;

    void ensure_cluster() {
        if (!g.has_node("k8s/cluster"))
            g.add_node(Node{"k8s/cluster", NodeKind::domain, json{{"cluster", true}}});
    }

    void bind(const std::string& platform, const std::string& subject,
              const std::string& role_name, const std::vector<std::string>& verbs,
              const std::string& scope_id, const std::string& resource_pattern) {
        if (!g.has_node(subject))
            fail(Errc::unknown_resource, "binding references unknown subject: " + subject);
        if (!g.has_node(scope_id))
            fail(Errc::unknown_resource, "binding references unknown scope: " + scope_id);
        const Node* s = g.find_node(scope_id);
        std::string inst_id =
            "role:" + platform + ":" + role_name + "@" + to_string(scope_kind_of(*s)) + "/" +
            scope_id;
        json attrs{{"bound", true},
                   {"name", role_name},
                   {"platform", platform},
                   {"verbs", verbs},
                   {"resource_pattern", resource_pattern}};
        g.add_node(Node{inst_id, NodeKind::role, attrs});
        g.add_edge(Edge{subject, inst_id, EdgeKind::grants, json::object()});
        g.add_edge(Edge{inst_id, scope_id, EdgeKind::scope, json::object()});
    }

    std::vector<std::string> k8s_role_verbs(const std::string& role_kind,
                                            const std::string& role, const std::string& ns) {
        std::string def_id = role_kind == "cluster_role" ? "k8s/clusterroledef/" + role
                                                         : "k8s/roledef/" + ns + "/" + role;
        if (const Node* def = g.find_node(def_id))
            return def->attrs.value("verbs", std::vector<std::string>{});
        auto it = k8s_builtin_roles().find(role);
        if (it == k8s_builtin_roles().end())
            fail(Errc::unknown_resource, "binding references unknown role: " + role);
        return it->second;
    }

    void k8s(const json& rec) {
        std::string kind = require_str(rec, "kind");
        if (kind == "namespace") {
            ensure_cluster();
            std::string name = require_str(rec, "name");
            std::string id = "k8s/ns/" + name;
            json attrs = json::object();
            if (rec.contains("labels")) attrs["labels"] = rec.at("labels");
            if (rec.contains("project")) attrs["project"] = rec.at("project");
            g.add_node(Node{id, NodeKind::ns, attrs});
            g.add_edge(Edge{id, "k8s/cluster", EdgeKind::ownership, json::object()});
            if (rec.contains("project")) {
                std::string proj = "os/project/" + rec.at("project").get<std::string>();
                if (!g.has_node(proj))
                    g.add_node(Node{proj, NodeKind::project, json::object()});
                g.add_edge(Edge{id, proj, EdgeKind::ownership, json::object()});
            }
        } else if (kind == "service_account") {
            std::string ns = require_str(rec, "namespace");
            std::string id = "k8s/sa/" + ns + "/" + require_str(rec, "name");
            json attrs = json::object();
            if (rec.contains("approved_operator"))
                attrs["approved_operator"] = rec.at("approved_operator");
            g.add_node(Node{id, NodeKind::subject, attrs});
        } else if (kind == "role") {
            std::string ns = require_str(rec, "namespace");
            std::string name = require_str(rec, "name");
            json attrs{{"verbs", rec.value("verbs", std::vector<std::string>{})}};
            if (rec.contains("resource_pattern"))
                attrs["resource_pattern"] = rec.at("resource_pattern");
            g.add_node(Node{"k8s/roledef/" + ns + "/" + name, NodeKind::role, attrs});
        } else if (kind == "cluster_role") {
            std::string name = require_str(rec, "name");
            json attrs{{"verbs", rec.value("verbs", std::vector<std::string>{})}};
            g.add_node(Node{"k8s/clusterroledef/" + name, NodeKind::role, attrs});
        } else if (kind == "role_binding") {
            std::string ns = require_str(rec, "namespace");
            std::string role = require_str(rec, "role");
            std::string role_kind = rec.value("role_kind", "role");
            bind("k8s", require_str(rec, "subject"), role,
                 k8s_role_verbs(role_kind, role, ns), "k8s/ns/" + ns,
                 rec.value("resource_pattern", "*"));
        } else if (kind == "cluster_role_binding") {
            ensure_cluster();
            std::string role = require_str(rec, "role");
            bind("k8s", require_str(rec, "subject"), role,
                 k8s_role_verbs("cluster_role", role, ""), "k8s/cluster",
                 rec.value("resource_pattern", "*"));
        } else if (kind == "resource") {
            std::string ns = require_str(rec, "namespace");
            std::string id = require_str(rec, "id");
            json attrs{{"family", rec.value("family", "")}, {"doc", rec.value("doc", json::object())}};
            g.add_node(Node{id, NodeKind::resource, attrs});
            if (!g.has_node("k8s/ns/" + ns))
                fail(Errc::unknown_resource, "resource references unknown namespace: " + ns);
            g.add_edge(Edge{id, "k8s/ns/" + ns, EdgeKind::ownership, json::object()});
        } else if (kind == "activity") {
            activity(rec);
        } else {
            fail(Errc::malformed_record, "unknown k8s record kind: " + kind);
        }
    }

    void openstack(const json& rec) {
        std::string kind = require_str(rec, "kind");
        if (kind == "domain") {
            g.add_node(Node{"os/domain/" + require_str(rec, "name"), NodeKind::domain,
                            json::object()});
        } else if (kind == "project") {
            std::string id = "os/project/" + require_str(rec, "name");
            json attrs{{"production", rec.value("production", false)}};
            g.add_node(Node{id, NodeKind::project, attrs});
            if (rec.contains("domain")) {
                std::string dom = "os/domain/" + rec.at("domain").get<std::string>();
                if (!g.has_node(dom)) g.add_node(Node{dom, NodeKind::domain, json::object()});
                g.add_edge(Edge{id, dom, EdgeKind::ownership, json::object()});
            }
        } else if (kind == "user") {
            json attrs = json::object();
            if (rec.contains("approved_operator"))
                attrs["approved_operator"] = rec.at("approved_operator");
            g.add_node(Node{"os/user/" + require_str(rec, "name"), NodeKind::subject, attrs});
        } else if (kind == "role_assignment") {
            std::string role = require_str(rec, "role");
            auto it = openstack_builtin_roles().find(role);
            if (it == openstack_builtin_roles().end())
                fail(Errc::unknown_resource, "assignment references unknown role: " + role);
            std::string scope = rec.contains("project")
                                    ? "os/project/" + rec.at("project").get<std::string>()
                                    : "os/domain/" + require_str(rec, "domain");
            bind("os", require_str(rec, "user"), role, it->second, scope, "*");
        } else if (kind == "application_credential") {
            std::string id = "os/appcred/" + require_str(rec, "name");
            std::string project = require_str(rec, "project");
            json attrs{{"user", rec.value("user", "")},
                       {"unrestricted", rec.value("unrestricted", false)}};
            g.add_node(Node{id, NodeKind::subject, attrs});
            bind("os", id, "member", openstack_builtin_roles().at("member"),
                 "os/project/" + project, "*");
        } else if (kind == "resource") {
            std::string project = require_str(rec, "project");
            std::string id = require_str(rec, "id");
            json attrs{{"family", rec.value("family", "")}, {"doc", rec.value("doc", json::object())}};
            g.add_node(Node{id, NodeKind::resource, attrs});
            if (!g.has_node("os/project/" + project))
                fail(Errc::unknown_resource, "resource references unknown project: " + project);
            g.add_edge(Edge{id, "os/project/" + project, EdgeKind::ownership, json::object()});
        } else if (kind == "activity") {
            activity(rec);
        } else {
            fail(Errc::malformed_record, "unknown openstack record kind: " + kind);
        }
    }

    void activity(const json& rec) {
        std::string subject = require_str(rec, "subject");
        std::string resource = require_str(rec, "resource");
        if (!rec.contains("ts_ms") || !rec.at("ts_ms").is_number())
            fail(Errc::malformed_record, "activity record missing ts_ms");
        g.add_edge(Edge{subject, resource, EdgeKind::recent_activity,
                        json{{"ts_ms", rec.at("ts_ms").get<int64_t>()}}});
    }
};

} // namespace

IngestResult ingest_snapshot(const IdentityGraph& base, const std::string& platform,
                             const std::vector<json>& records) {
    IngestResult result{base, {}};
    result.graph.bump_generation();
    std::set<GrantTuple> before = base.grants();
    Ingestor ing{result.graph};
    for (const auto& rec : records) {
        if (!rec.is_object()) fail(Errc::malformed_record, "snapshot record must be an object");
        if (platform == "k8s")
            ing.k8s(rec);
        else if (platform == "openstack")
            ing.openstack(rec);
        else
            fail(Errc::unknown_platform, "unknown platform: " + platform);
    }
    std::set<GrantTuple> after = result.graph.grants();
    std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                        std::back_inserter(result.added));
    return result;
}

} // namespace argus
