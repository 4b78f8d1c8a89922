#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "argus/types.hpp"

namespace argus {

enum class PredicateOp { eq, ne, exists, in_set, cidr_eq };

struct PolicyTest {
    std::string path;       // dot path into the resource document
    PredicateOp op = PredicateOp::exists;
    json value;             // comparand (array for in_set)
};

/// One declarative check from a scan profile.
struct Policy {
    ControlId control_id;
    Severity severity = Severity::medium;
    std::string applies_to;            // component family, e.g. "k8s.pod"
    std::vector<PolicyTest> predicate; // conjunction; all tests must hold
    std::string fix_hint;
    double confidence = 0.9;
};

/// A scannable resource document.
struct ResourceDoc {
    ResourceId id;
    std::string family; // dotted family tag matching Policy::applies_to
    json doc = json::object();
};

/// Parses a scan profile (YAML text). Rejects duplicate control ids,
/// unknown operators, bad severities -> invalid-profile error.
std::vector<Policy> parse_profile(const std::string& yaml_text);

/// True when the policy's predicate holds on the document (i.e. the
/// resource violates the control). Unknown paths read as absent.
bool policy_matches(const Policy& p, const json& doc);

/// Runs every applicable policy over every resource. Deterministic
/// output order: (resource_id, control_id). Findings from iac.* families
/// carry source=iac_scan, all others live_scan.
std::vector<Finding> evaluate_profile(const std::vector<Policy>& profile,
                                      const std::vector<ResourceDoc>& resources);

/// Adapter-shaped raw rows mapped into Findings via fixture tables.
/// Unknown check name or missing resource -> unmappable-row error.
Finding normalize_admission_row(const json& row);
Finding normalize_os_check_row(const json& row);
Finding normalize_iac_row(const json& row);

/// Collapses repeats of (resource_id, control_id) within tumbling windows
/// of `window_ms` (keyed by floor(first_seen/window)). The earliest event
/// in each window survives with duplicate_count = window population.
struct DedupedEvent {
    NormalizedEvent event;
    int duplicate_count = 1;
};
std::vector<DedupedEvent> dedup_events(const std::vector<NormalizedEvent>& events,
                                       int64_t window_ms);

using EventIdAlloc = std::function<std::string()>;

/// Lifts findings at or above `min_severity` into normalized events at
/// time `ts_ms`. Ids come from the allocator so replays stay deterministic.
std::vector<NormalizedEvent> severity_gate(const std::vector<Finding>& findings,
                                           Severity min_severity, int64_t ts_ms,
                                           const EventIdAlloc& next_id);

} // namespace argus
