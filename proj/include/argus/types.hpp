#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "argus/errors.hpp"

namespace argus {

using json = nlohmann::json;

// Identifiers are opaque strings compared byte-wise.
using SubjectId  = std::string;
using ResourceId = std::string;
using ControlId  = std::string;

enum class ScopeKind { ns, project, domain, cluster };

struct ScopeId {
    ScopeKind kind;
    std::string id;

    auto operator<=>(const ScopeId&) const = default;
};

/// Ordered: info < low < medium < high < critical.
enum class Severity { info = 0, low, medium, high, critical };

/// Runtime-sensor levels, ordered: informational < notice < warning < error < critical.
enum class Priority { informational = 0, notice, warning, error, critical };

enum class ActionKind { log, patch, plan, ticket };

enum class Source { admission, iac_scan, live_scan, runtime, identity };

enum class PostCheck { passed, failed, not_applicable };

/// Platform-independent grant unit; deduplicated set member.
struct GrantTuple {
    SubjectId subject;
    std::string role;
    ScopeId scope;
    ResourceId resource; // resource pattern; "*" matches everything
    std::string action;  // verb; "*" matches everything

    auto operator<=>(const GrantTuple&) const = default;
};

struct Finding {
    ControlId control_id;
    ResourceId resource_id;
    json evidence = json::object();
    Severity severity = Severity::info;
    double confidence = 0.0;
    std::optional<std::string> fix_hint;
    Source source = Source::live_scan;

    bool operator==(const Finding&) const = default;
};

struct NormalizedEvent {
    std::string event_id;
    int64_t timestamp = 0; // ms since replay epoch
    ResourceId resource_id;
    std::optional<SubjectId> subject_id; // absent for pure-config findings
    ControlId control_id;
    json evidence = json::object();
    Priority priority = Priority::informational;
    Severity severity = Severity::info;
    Source source = Source::live_scan;

    bool operator==(const NormalizedEvent&) const = default;
};

/// Append-only audit row. resource_id/control_id are carried so every
/// reported metric can be recomputed from the log plus the label file.
struct EvidenceRecord {
    std::string event_id;
    ResourceId resource_id;
    ControlId control_id;
    ActionKind action = ActionKind::log;
    double conf = 0.0;
    int64_t latency_ms = 0;
    PostCheck post_check = PostCheck::not_applicable;
    std::optional<std::string> rollback_token; // present iff action=patch and the patch executed
    int duplicate_count = 1;
    int64_t wrote_at = 0;
    Source source = Source::live_scan;

    bool operator==(const EvidenceRecord&) const = default;
};

/// Risk-model weights; components must sum to 1 within 1e-9.
struct WeightVector {
    double w_c = 0.0, w_t = 0.0, w_i = 0.0, w_m = 0.0;

    static WeightVector make(double c, double t, double i, double m);
    /// The calibrated default setting (0.35, 0.30, 0.25, 0.10).
    static WeightVector calibrated_default() { return make(0.35, 0.30, 0.25, 0.10); }

    bool operator==(const WeightVector&) const = default;
};

struct Thresholds {
    double tau_low = 0.3;
    double tau_high = 0.7;

    static Thresholds make(double low, double high);
};

// ---- ordering ----

/// -1 / 0 / +1, consistent with the declared severity order.
int compare_severity(Severity a, Severity b);
int compare_priority(Priority a, Priority b);

// ---- enum <-> string ----

std::string to_string(Severity s);
std::string to_string(Priority p);
std::string to_string(ActionKind a);
std::string to_string(Source s);
std::string to_string(PostCheck p);
std::string to_string(ScopeKind k);

Severity severity_from_string(const std::string& s);
Priority priority_from_string(const std::string& s);
ActionKind action_from_string(const std::string& s);
Source source_from_string(const std::string& s);
PostCheck post_check_from_string(const std::string& s);
ScopeKind scope_kind_from_string(const std::string& s);

/// Default mapping for config-sourced events:
/// info->informational, low->notice, medium->warning, high->error, critical->critical.
Priority severity_to_priority(Severity s);
/// Inverse mapping used when only a sensor priority is known.
Severity priority_to_severity(Priority p);

// ---- validation ----

/// Schema check; returns every violation (empty = valid). Pure.
std::vector<std::string> validate_finding(const Finding& f);

bool valid_control_id(const std::string& s);

// ---- canonical document encoding ----
// One self-describing UTF-8 key/value document per record: a single-line
// JSON object with lexicographically sorted keys.

void to_json(json& j, const ScopeId& s);
void from_json(const json& j, ScopeId& s);
void to_json(json& j, const GrantTuple& g);
void from_json(const json& j, GrantTuple& g);
void to_json(json& j, const Finding& f);
void from_json(const json& j, Finding& f);
void to_json(json& j, const NormalizedEvent& e);
void from_json(const json& j, NormalizedEvent& e);
void to_json(json& j, const EvidenceRecord& r);
void from_json(const json& j, EvidenceRecord& r);
void to_json(json& j, const WeightVector& w);
void from_json(const json& j, WeightVector& w);
void to_json(json& j, const Thresholds& t);
void from_json(const json& j, Thresholds& t);

/// Canonical single-line form of any document.
std::string canonical_line(const json& j);

} // namespace argus
