#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "argus/types.hpp"

namespace argus {

enum class NodeKind { subject, role, resource, ns, project, domain };
enum class EdgeKind { grants, ownership, scope, recent_activity };

std::string to_string(NodeKind k);
std::string to_string(EdgeKind k);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::resource;
    json attrs = json::object();

    bool operator==(const Node&) const = default;
};

struct Edge {
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::ownership;
    json attrs = json::object();

    bool operator==(const Edge&) const = default;
};

/// Evidence bundle handed to the scoring stage. Holds everything the
/// decision needs so scoring never re-queries shared state.
struct Context {
    std::vector<Node> nodes;                   // radius-2 neighborhood
    std::vector<Edge> edges;
    bool approved_operator = false;            // subject flagged AND recently active on resource
    std::vector<Finding> open_findings;        // open findings on the resource, any source
};

/// Immutable typed graph over subjects, roles, resources and scopes.
/// Mutation happens by building a new value; generation() increases with
/// every ingested snapshot so readers can pin a consistent view.
class IdentityGraph {
public:
    IdentityGraph();

    uint64_t generation() const { return generation_; }

    bool has_node(const std::string& id) const;
    const Node* find_node(const std::string& id) const;
    std::vector<Node> nodes() const;
    std::vector<Edge> edges() const;
    size_t node_count() const { return nodes_.size(); }

    /// Upserts a node; replaces attrs when the id exists.
    void add_node(Node n);
    /// Both endpoints must exist.
    void add_edge(Edge e);

    /// Grant set flattened from role-instance nodes (deduplicated).
    std::set<GrantTuple> grants() const;

    /// Every subject that can perform `action` on `resource` through some
    /// grant whose scope contains the resource. Sorted, deduplicated.
    /// Unknown resource -> unknown-resource error.
    std::vector<SubjectId> who_can(const std::string& action, const ResourceId& resource) const;

    /// Scopes that own `resource`, walking ownership edges upward
    /// (namespace, project, domain, cluster). Includes the resource itself.
    std::set<std::string> ownership_closure(const ResourceId& resource) const;

    using OpenFindingsFn = std::function<std::vector<Finding>(const ResourceId&)>;

    /// Radius-2 evidence bundle around (subject, resource) at time `now_ms`.
    Context neighbors(const std::optional<SubjectId>& subject, const ResourceId& resource,
                      int64_t now_ms, int64_t freshness_ms,
                      const OpenFindingsFn& open_findings) const;

    /// Marks the value as one snapshot newer than its predecessor.
    void bump_generation() { ++generation_; }

private:
    std::map<std::string, Node> nodes_;
    std::multimap<std::string, Edge> out_;   // keyed by from
    std::multimap<std::string, Edge> in_;    // keyed by to
    uint64_t generation_ = 0;
};

struct IngestResult {
    IdentityGraph graph;
    std::vector<GrantTuple> added; // grants new in this snapshot, sorted
};

/// Applies one platform snapshot (a list of typed records) on top of `base`
/// and returns the successor graph. `base` is untouched. Records:
///   k8s:       service_account, role, cluster_role, role_binding,
///              cluster_role_binding, namespace, resource, activity
///   openstack: domain, project, user, role_assignment,
///              application_credential, resource, activity
/// Malformed records -> malformed-record error; bindings to unknown
/// subjects -> unknown-resource error.
IngestResult ingest_snapshot(const IdentityGraph& base, const std::string& platform,
                             const std::vector<json>& records);

/// Verb sets for the simulated platforms' built-in roles.
const std::map<std::string, std::vector<std::string>>& k8s_builtin_roles();
const std::map<std::string, std::vector<std::string>>& openstack_builtin_roles();

} // namespace argus
