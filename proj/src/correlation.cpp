#include "argus/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "argus/findings.hpp"

namespace argus {

namespace {

struct RuleMapping {
    ControlId control;
    Priority default_priority;
};

const std::map<std::string, RuleMapping>& falco_rules() {
    static const std::map<std::string, RuleMapping> m{
        {"TerminalShellInContainer", {"RT.SHELL.CONTAINER", Priority::error}},
        {"ExcessiveSATokenUse", {"RT.ID.SA-TOKEN-OVERUSE", Priority::warning}},
        {"CryptoMinerDetected", {"RT.PROC.MINER", Priority::error}},
        {"OutboundConnectionBurst", {"RT.NET.OUTBOUND-BURST", Priority::notice}},
        {"ProcessSpawnChurn", {"RT.PROC.SPAWN-CHURN", Priority::notice}},
        {"PrivilegedExecSession", {"RT.EXEC.PRIVILEGED", Priority::warning}},
        {"AnomalousHostMount", {"RT.FS.MOUNT-ANOM", Priority::error}},
    };
    return m;
}

const std::map<std::string, RuleMapping>& keystone_events() {
    static const std::map<std::string, RuleMapping> m{
        {"role-escalation", {"OS.ID.ROLE-ESCALATION", Priority::critical}},
        {"weak-app-credential", {"OS.ID.APPCRED.WEAK", Priority::warning}},
        {"cluster-admin-binding", {"K8S.RBAC.CLUSTER-ADMIN-BINDING", Priority::critical}},
    };
    return m;
}

std::string need_str(const json& j, const char* key, Errc errc) {
    if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty())
        fail(errc, std::string("payload missing ") + key);
    return j.at(key).get<std::string>();
}

NormalizedEvent base_event(const json& p) {
    NormalizedEvent e;
    e.event_id = need_str(p, "event_id", Errc::malformed_record);
    if (!p.contains("ts_ms") || !p.at("ts_ms").is_number())
        fail(Errc::malformed_record, "payload missing ts_ms");
    e.timestamp = p.at("ts_ms").get<int64_t>();
    e.resource_id = need_str(p, "resource", Errc::missing_resource);
    if (p.contains("subject") && p.at("subject").is_string())
        e.subject_id = p.at("subject").get<std::string>();
    return e;
}

} // namespace

std::map<std::string, double> EngineConfig::default_base_priority() {
    return {{"informational", 0.2}, {"notice", 0.4}, {"warning", 0.6},
            {"error", 0.8},         {"critical", 1.0}};
}

EngineConfig EngineConfig::from_json(const json& j) {
    if (!j.is_object()) fail(Errc::bad_config, "engine config must be an object");
    static const std::set<std::string> keys{"tau_low",        "tau_high",
                                            "dedup_window_ms", "freshness_s",
                                            "base_priority_map", "downgrade_factor",
                                            "escalation_factor"};
    for (const auto& [k, _] : j.items())
        if (!keys.count(k)) fail(Errc::bad_config, "unknown config key: " + k);
    for (const auto& k : keys)
        if (!j.contains(k)) fail(Errc::bad_config, "missing config key: " + k);

    EngineConfig cfg;
    Thresholds t = Thresholds::make(j.at("tau_low").get<double>(),
                                    j.at("tau_high").get<double>());
    cfg.tau_low = t.tau_low;
    cfg.tau_high = t.tau_high;
    cfg.dedup_window_ms = j.at("dedup_window_ms").get<int64_t>();
    if (cfg.dedup_window_ms <= 0) fail(Errc::bad_config, "dedup_window_ms must be positive");
    cfg.freshness_s = j.at("freshness_s").get<int64_t>();
    if (cfg.freshness_s < 0) fail(Errc::bad_config, "freshness_s must not be negative");

    const json& bm = j.at("base_priority_map");
    if (!bm.is_object()) fail(Errc::bad_config, "base_priority_map must be an object");
    cfg.base_priority_map.clear();
    for (const auto& [k, v] : bm.items()) {
        priority_from_string(k); // rejects unknown priorities
        double d = v.get<double>();
        if (!(d >= 0.0 && d <= 1.0)) fail(Errc::bad_config, "base weight outside [0,1]: " + k);
        cfg.base_priority_map[k] = d;
    }
    if (cfg.base_priority_map.size() != 5)
        fail(Errc::bad_config, "base_priority_map must cover all five priorities");

    cfg.downgrade_factor = j.at("downgrade_factor").get<double>();
    cfg.escalation_factor = j.at("escalation_factor").get<double>();
    if (!(cfg.downgrade_factor > 0.0 && cfg.downgrade_factor <= 1.0))
        fail(Errc::bad_config, "downgrade_factor must lie in (0,1]");
    if (!(cfg.escalation_factor >= 1.0))
        fail(Errc::bad_config, "escalation_factor must be at least 1");
    return cfg;
}

json EngineConfig::to_json() const {
    return json{{"tau_low", tau_low},
                {"tau_high", tau_high},
                {"dedup_window_ms", dedup_window_ms},
                {"freshness_s", freshness_s},
                {"base_priority_map", base_priority_map},
                {"downgrade_factor", downgrade_factor},
                {"escalation_factor", escalation_factor}};
}

std::string to_string(DecisionReason r) {
    switch (r) {
    case DecisionReason::below_tau_low: return "below_tau_low";
    case DecisionReason::auto_patch: return "auto_patch";
    case DecisionReason::plan_required: return "plan_required";
    case DecisionReason::ticket_fallback: return "ticket_fallback";
    }
    fail(Errc::out_of_range, "decision reason out of range");
}

double base_priority(const EngineConfig& cfg, Priority p) {
    auto it = cfg.base_priority_map.find(to_string(p));
    if (it == cfg.base_priority_map.end())
        fail(Errc::bad_config, "no base weight for priority " + to_string(p));
    return it->second;
}

double score_event(const EngineConfig& cfg, const NormalizedEvent& e,
                   const ScoreSignals& signals) {
    double m = signals.approved_operator    ? cfg.downgrade_factor
               : signals.correlated_config ? cfg.escalation_factor
                                           : 1.0;
    double evidence_confidence =
        e.evidence.is_object() ? e.evidence.value("confidence", 1.0) : 1.0;
    double v = base_priority(cfg, e.priority) * evidence_confidence * m;
    return std::clamp(v, 0.0, 1.0);
}

Decision decide(const EngineConfig& cfg, const NormalizedEvent& e, double conf,
                const std::vector<Playbook>& books) {
    Decision d;
    d.conf = conf;
    if (conf < cfg.tau_low) {
        d.action = ActionKind::log;
        d.reason = DecisionReason::below_tau_low;
        return d;
    }
    const Playbook* book = match_playbook(e, books);
    if (book) d.playbook_id = book->id;
    if (book && conf >= cfg.tau_high && compare_severity(e.severity, Severity::high) >= 0 &&
        !book->destructive && !book->targets_iac) {
        d.action = ActionKind::patch;
        d.reason = DecisionReason::auto_patch;
    } else if (book && book->targets_iac) {
        d.action = ActionKind::plan;
        d.reason = DecisionReason::plan_required;
    } else {
        d.action = ActionKind::ticket;
        d.reason = DecisionReason::ticket_fallback;
    }
    return d;
}

NormalizedEvent normalize_raw(const json& payload) {
    if (!payload.is_object()) fail(Errc::malformed_record, "payload must be an object");
    std::string source = need_str(payload, "source", Errc::unroutable_event);

    if (source == "falco") {
        NormalizedEvent e = base_event(payload);
        std::string rule = need_str(payload, "rule", Errc::unroutable_event);
        auto it = falco_rules().find(rule);
        if (it == falco_rules().end()) fail(Errc::unroutable_event, "unknown rule: " + rule);
        e.control_id = it->second.control;
        e.priority = payload.contains("priority")
                         ? priority_from_string(payload.at("priority").get<std::string>())
                         : it->second.default_priority;
        e.severity = priority_to_severity(e.priority);
        e.source = Source::runtime;
        e.evidence = json{{"rule", rule},
                          {"confidence", payload.value("confidence", 1.0)},
                          {"fields", payload.value("fields", json::object())}};
        if (payload.contains("project_id")) e.evidence["project_id"] = payload.at("project_id");
        return e;
    }
    if (source == "keystone" || source == "identity_watch") {
        NormalizedEvent e = base_event(payload);
        std::string event = need_str(payload, "event", Errc::unroutable_event);
        auto it = keystone_events().find(event);
        if (it == keystone_events().end())
            fail(Errc::unroutable_event, "unknown identity event: " + event);
        e.control_id = it->second.control;
        e.priority = it->second.default_priority;
        e.severity = priority_to_severity(e.priority);
        e.source = Source::identity;
        e.evidence = json{{"event", event},
                          {"confidence", payload.value("confidence", 1.0)},
                          {"details", payload.value("details", json::object())}};
        if (payload.contains("project_id")) e.evidence["project_id"] = payload.at("project_id");
        return e;
    }
    if (source == "admission" || source == "os_check" || source == "checkov") {
        Finding f = source == "admission"   ? normalize_admission_row(payload)
                    : source == "os_check" ? normalize_os_check_row(payload)
                                            : normalize_iac_row(payload);
        NormalizedEvent e = base_event(payload);
        e.control_id = f.control_id;
        e.severity = f.severity;
        e.priority = severity_to_priority(f.severity);
        e.source = f.source;
        e.evidence = f.evidence;
        e.evidence["confidence"] = payload.value("confidence", f.confidence);
        if (payload.contains("project_id")) e.evidence["project_id"] = payload.at("project_id");
        return e;
    }
    if (source == "override") {
        NormalizedEvent e = base_event(payload);
        e.control_id = "OPS.OVERRIDE.UNRESOLVED";
        e.priority = Priority::informational;
        e.severity = Severity::info;
        e.source = Source::identity;
        e.evidence = json{{"confidence", payload.value("confidence", 1.0)},
                          {"note", payload.value("note", "")}};
        return e;
    }
    fail(Errc::unroutable_event, "unknown event source: " + source);
}

int64_t action_latency_ms(ActionKind a) {
    switch (a) {
    case ActionKind::log: return 0;
    case ActionKind::ticket: return 5;
    case ActionKind::plan: return 12;
    case ActionKind::patch: return 22;
    }
    fail(Errc::out_of_range, "action out of range");
}

CorrelationEngine::CorrelationEngine(EngineConfig cfg, const IdentityGraph* graph,
                                     Orchestrator* orchestrator, std::vector<Playbook> books)
    : cfg_(std::move(cfg)), graph_(graph), orchestrator_(orchestrator),
      books_(std::move(books)) {
    // Without an orchestrator nothing can execute, so nothing may match.
    if (!orchestrator_) books_.clear();
}

void CorrelationEngine::set_open_findings(std::map<ResourceId, std::vector<Finding>> open) {
    open_findings_ = std::move(open);
}

ScoreSignals CorrelationEngine::signals_for(const NormalizedEvent& e) const {
    ScoreSignals sig;
    if (graph_) {
        Context ctx = graph_->neighbors(e.subject_id, e.resource_id, e.timestamp,
                                        cfg_.freshness_s * 1000, nullptr);
        sig.approved_operator = ctx.approved_operator;
    }
    auto it = open_findings_.find(e.resource_id);
    if (it != open_findings_.end()) {
        for (const auto& f : it->second) {
            if (f.control_id == e.control_id) continue; // a finding never corroborates itself
            if (compare_severity(f.severity, Severity::medium) >= 0) {
                sig.correlated_config = true;
                break;
            }
        }
    }
    return sig;
}

EvidenceRecord CorrelationEngine::process(const NormalizedEvent& e, int duplicate_count) {
    ScoreSignals sig = signals_for(e);
    double conf = score_event(cfg_, e, sig);
    Decision d = decide(cfg_, e, conf, books_);

    EvidenceRecord r;
    r.event_id = e.event_id;
    r.resource_id = e.resource_id;
    r.control_id = e.control_id;
    r.action = d.action;
    r.conf = conf;
    r.duplicate_count = duplicate_count;
    r.source = e.source;
    r.post_check = PostCheck::not_applicable;

    if (orchestrator_ && !d.playbook_id.empty() &&
        (d.action == ActionKind::patch || d.action == ActionKind::plan)) {
        const Playbook* book = nullptr;
        for (const auto& b : books_)
            if (b.id == d.playbook_id) book = &b;
        try {
            if (d.action == ActionKind::patch) {
                ExecResult res = orchestrator_->execute(*book, e, ExecMode::apply, false);
                r.post_check = res.post_check;
                r.rollback_token = res.rollback_token;
            } else {
                orchestrator_->execute(*book, e, ExecMode::dry_run, false);
            }
        } catch (const Error&) {
            // Execution failures are recorded, never propagated; the
            // replay loop must survive any single event.
            r.post_check = PostCheck::failed;
        }
    }

    r.latency_ms = 3 + action_latency_ms(d.action);
    r.wrote_at = e.timestamp + r.latency_ms;
    return r;
}

EvidenceRecord CorrelationEngine::process_raw(const json& payload, int duplicate_count) {
    return process(normalize_raw(payload), duplicate_count);
}

} // namespace argus
