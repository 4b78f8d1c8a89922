#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "argus/identity_graph.hpp"
#include "argus/remediation.hpp"
#include "argus/types.hpp"

namespace argus {

/// Full engine configuration. Every field is required when loading from
/// JSON; unknown keys are rejected.
struct EngineConfig {
    double tau_low = 0.3;
    double tau_high = 0.7;
    int64_t dedup_window_ms = 300000;
    int64_t freshness_s = 3600;
    std::map<std::string, double> base_priority_map = default_base_priority();
    double downgrade_factor = 0.5;  // multiplier for approved-operator context
    double escalation_factor = 1.25; // multiplier for correlated config findings

    static std::map<std::string, double> default_base_priority();
    static EngineConfig defaults() { return EngineConfig{}; }
    /// Strict loader: all keys required, unknown keys -> bad-config.
    static EngineConfig from_json(const json& j);
    json to_json() const;
};

/// Context evidence distilled to what the score multiplier needs.
struct ScoreSignals {
    bool approved_operator = false;
    bool correlated_config = false;
};

enum class DecisionReason { below_tau_low, auto_patch, plan_required, ticket_fallback };

std::string to_string(DecisionReason r);

struct Decision {
    ActionKind action = ActionKind::log;
    double conf = 0.0;
    DecisionReason reason = DecisionReason::below_tau_low;
    std::string playbook_id; // empty when no playbook matched
};

/// Base weight for the event priority, from the configured map.
double base_priority(const EngineConfig& cfg, Priority p);

/// conf = clamp(base(priority) * evidence_confidence * m, 0, 1) where
/// m = downgrade if approved operator, else escalation if a correlated
/// config finding exists, else 1.
double score_event(const EngineConfig& cfg, const NormalizedEvent& e,
                   const ScoreSignals& signals);

/// Maps the score onto an action:
///   conf <  tau_low                 -> log
///   conf >= tau_high, severity >= high, matched book is non-destructive
///     and has no terraform step     -> patch
///   matched book has terraform step -> plan
///   otherwise                       -> ticket
Decision decide(const EngineConfig& cfg, const NormalizedEvent& e, double conf,
                const std::vector<Playbook>& books);

/// Raw adapter payloads -> NormalizedEvent. Routes on payload["source"]:
/// falco, keystone, admission, os_check, checkov, override. Unknown
/// source -> unroutable-event; rows without a resource -> missing-resource.
NormalizedEvent normalize_raw(const json& payload);

/// One pass of the pipeline: normalize -> context -> score -> decide ->
/// execute -> evidence record.
class CorrelationEngine {
public:
    CorrelationEngine(EngineConfig cfg, const IdentityGraph* graph, Orchestrator* orchestrator,
                      std::vector<Playbook> books);

    /// Findings currently open per resource; used for the correlation
    /// multiplier (the event's own control never self-correlates).
    void set_open_findings(std::map<ResourceId, std::vector<Finding>> open);

    /// Runs an already-normalized event through score/decide/execute.
    EvidenceRecord process(const NormalizedEvent& e, int duplicate_count = 1);

    /// Convenience: normalize_raw + process.
    EvidenceRecord process_raw(const json& payload, int duplicate_count = 1);

    ScoreSignals signals_for(const NormalizedEvent& e) const;

    const EngineConfig& config() const { return cfg_; }

private:
    EngineConfig cfg_;
    const IdentityGraph* graph_;  // may be null (identity correlation off)
    Orchestrator* orchestrator_;  // may be null (remediation off)
    std::vector<Playbook> books_;
    std::map<ResourceId, std::vector<Finding>> open_findings_;
};

/// Virtual latency budget per action, in milliseconds. Pipeline overhead
/// is 3 ms (normalize, context, decide at 1 ms each); execution adds
/// patch 22, plan 12, ticket 5, log 0.
int64_t action_latency_ms(ActionKind a);

} // namespace argus
