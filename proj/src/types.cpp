#include "argus/types.hpp"

#include <array>
#include <cmath>
#include <regex>

namespace argus {

namespace {

template <typename E, size_t N>
std::string enum_to_string(E v, const std::array<const char*, N>& names) {
    auto i = static_cast<size_t>(v);
    if (i >= N) fail(Errc::out_of_range, "enum value out of range");
    return names[i];
}

template <typename E, size_t N>
E enum_from_string(const std::string& s, const std::array<const char*, N>& names,
                   const char* what) {
    for (size_t i = 0; i < N; ++i)
        if (s == names[i]) return static_cast<E>(i);
    fail(Errc::parse_error, std::string("unknown ") + what + ": " + s);
}

constexpr std::array<const char*, 5> kSeverity{"info", "low", "medium", "high", "critical"};
constexpr std::array<const char*, 5> kPriority{"informational", "notice", "warning", "error",
                                               "critical"};
constexpr std::array<const char*, 4> kAction{"log", "patch", "plan", "ticket"};
constexpr std::array<const char*, 5> kSource{"admission", "iac_scan", "live_scan", "runtime",
                                             "identity"};
constexpr std::array<const char*, 3> kPostCheck{"passed", "failed", "not_applicable"};
constexpr std::array<const char*, 4> kScopeKind{"namespace", "project", "domain", "cluster"};

} // namespace

WeightVector WeightVector::make(double c, double t, double i, double m) {
    for (double v : {c, t, i, m})
        if (!(v >= 0.0 && v <= 1.0)) fail(Errc::bad_config, "weight outside [0,1]");
    if (std::fabs((c + t + i + m) - 1.0) > 1e-9)
        fail(Errc::bad_config, "weights must sum to 1");
    return WeightVector{c, t, i, m};
}

Thresholds Thresholds::make(double low, double high) {
    if (!(low >= 0.0 && low < high && high <= 1.0))
        fail(Errc::bad_config, "thresholds must satisfy 0 <= low < high <= 1");
    return Thresholds{low, high};
}

int compare_severity(Severity a, Severity b) {
    return (static_cast<int>(a) > static_cast<int>(b)) -
           (static_cast<int>(a) < static_cast<int>(b));
}

int compare_priority(Priority a, Priority b) {
    return (static_cast<int>(a) > static_cast<int>(b)) -
           (static_cast<int>(a) < static_cast<int>(b));
}

std::string to_string(Severity s) { return enum_to_string(s, kSeverity); }
std::string to_string(Priority p) { return enum_to_string(p, kPriority); }
std::string to_string(ActionKind a) { return enum_to_string(a, kAction); }
std::string to_string(Source s) { return enum_to_string(s, kSource); }
std::string to_string(PostCheck p) { return enum_to_string(p, kPostCheck); }
std::string to_string(ScopeKind k) { return enum_to_string(k, kScopeKind); }

Severity severity_from_string(const std::string& s) {
    return enum_from_string<Severity>(s, kSeverity, "severity");
}
Priority priority_from_string(const std::string& s) {
    return enum_from_string<Priority>(s, kPriority, "priority");
}
ActionKind action_from_string(const std::string& s) {
    return enum_from_string<ActionKind>(s, kAction, "action");
}
Source source_from_string(const std::string& s) {
    return enum_from_string<Source>(s, kSource, "source");
}
PostCheck post_check_from_string(const std::string& s) {
    return enum_from_string<PostCheck>(s, kPostCheck, "post_check");
}
ScopeKind scope_kind_from_string(const std::string& s) {
    return enum_from_string<ScopeKind>(s, kScopeKind, "scope kind");
}

Priority severity_to_priority(Severity s) {
    switch (s) {
    case Severity::info: return Priority::informational;
    case Severity::low: return Priority::notice;
    case Severity::medium: return Priority::warning;
    case Severity::high: return Priority::error;
    case Severity::critical: return Priority::critical;
    }
    fail(Errc::out_of_range, "severity out of range");
}

Severity priority_to_severity(Priority p) {
    switch (p) {
    case Priority::informational: return Severity::info;
    case Priority::notice: return Severity::low;
    case Priority::warning: return Severity::medium;
    case Priority::error: return Severity::high;
    case Priority::critical: return Severity::critical;
    }
    fail(Errc::out_of_range, "priority out of range");
}

bool valid_control_id(const std::string& s) {
    // Dotted uppercase segments, at least two: PLATFORM.AREA[.MORE...]
    static const std::regex re(R"([A-Z0-9]+(\.[A-Z0-9-]+)+)");
    return std::regex_match(s, re);
}

std::vector<std::string> validate_finding(const Finding& f) {
    std::vector<std::string> out;
    if (f.control_id.empty())
        out.push_back("control_id: must not be empty");
    else if (!valid_control_id(f.control_id))
        out.push_back("control_id: must be dotted uppercase segments: " + f.control_id);
    if (f.resource_id.empty()) out.push_back("resource_id: must not be empty");
    if (!(f.confidence >= 0.0 && f.confidence <= 1.0))
        out.push_back("confidence: must lie in [0,1]");
    if (!f.evidence.is_object()) out.push_back("evidence: must be a JSON object");
    if (f.fix_hint && f.fix_hint->empty())
        out.push_back("fix_hint: present but empty");
    return out;
}

void to_json(json& j, const ScopeId& s) {
    j = json{{"kind", to_string(s.kind)}, {"id", s.id}};
}
void from_json(const json& j, ScopeId& s) {
    s.kind = scope_kind_from_string(j.at("kind").get<std::string>());
    s.id = j.at("id").get<std::string>();
}

void to_json(json& j, const GrantTuple& g) {
    j = json{{"subject", g.subject}, {"role", g.role},     {"scope", g.scope},
             {"resource", g.resource}, {"action", g.action}};
}
void from_json(const json& j, GrantTuple& g) {
    j.at("subject").get_to(g.subject);
    j.at("role").get_to(g.role);
    j.at("scope").get_to(g.scope);
    j.at("resource").get_to(g.resource);
    j.at("action").get_to(g.action);
}

void to_json(json& j, const Finding& f) {
    j = json{{"control_id", f.control_id}, {"resource_id", f.resource_id},
             {"evidence", f.evidence},     {"severity", to_string(f.severity)},
             {"confidence", f.confidence}, {"source", to_string(f.source)}};
    if (f.fix_hint) j["fix_hint"] = *f.fix_hint;
}
void from_json(const json& j, Finding& f) {
    j.at("control_id").get_to(f.control_id);
    j.at("resource_id").get_to(f.resource_id);
    f.evidence = j.at("evidence");
    f.severity = severity_from_string(j.at("severity").get<std::string>());
    j.at("confidence").get_to(f.confidence);
    f.source = source_from_string(j.at("source").get<std::string>());
    if (j.contains("fix_hint"))
        f.fix_hint = j.at("fix_hint").get<std::string>();
    else
        f.fix_hint.reset();
}

void to_json(json& j, const NormalizedEvent& e) {
    j = json{{"event_id", e.event_id},
             {"timestamp", e.timestamp},
             {"resource_id", e.resource_id},
             {"control_id", e.control_id},
             {"evidence", e.evidence},
             {"priority", to_string(e.priority)},
             {"severity", to_string(e.severity)},
             {"source", to_string(e.source)}};
    if (e.subject_id) j["subject_id"] = *e.subject_id;
}
void from_json(const json& j, NormalizedEvent& e) {
    j.at("event_id").get_to(e.event_id);
    j.at("timestamp").get_to(e.timestamp);
    j.at("resource_id").get_to(e.resource_id);
    j.at("control_id").get_to(e.control_id);
    e.evidence = j.at("evidence");
    e.priority = priority_from_string(j.at("priority").get<std::string>());
    e.severity = severity_from_string(j.at("severity").get<std::string>());
    e.source = source_from_string(j.at("source").get<std::string>());
    if (j.contains("subject_id"))
        e.subject_id = j.at("subject_id").get<std::string>();
    else
        e.subject_id.reset();
}

void to_json(json& j, const EvidenceRecord& r) {
    j = json{{"event_id", r.event_id},
             {"resource_id", r.resource_id},
             {"control_id", r.control_id},
             {"action", to_string(r.action)},
             {"conf", r.conf},
             {"latency_ms", r.latency_ms},
             {"post_check", to_string(r.post_check)},
             {"duplicate_count", r.duplicate_count},
             {"wrote_at", r.wrote_at},
             {"source", to_string(r.source)}};
    if (r.rollback_token) j["rollback_token"] = *r.rollback_token;
}
void from_json(const json& j, EvidenceRecord& r) {
    j.at("event_id").get_to(r.event_id);
    j.at("resource_id").get_to(r.resource_id);
    j.at("control_id").get_to(r.control_id);
    r.action = action_from_string(j.at("action").get<std::string>());
    j.at("conf").get_to(r.conf);
    j.at("latency_ms").get_to(r.latency_ms);
    r.post_check = post_check_from_string(j.at("post_check").get<std::string>());
    j.at("duplicate_count").get_to(r.duplicate_count);
    j.at("wrote_at").get_to(r.wrote_at);
    r.source = source_from_string(j.at("source").get<std::string>());
    if (j.contains("rollback_token"))
        r.rollback_token = j.at("rollback_token").get<std::string>();
    else
        r.rollback_token.reset();
}

void to_json(json& j, const WeightVector& w) {
    j = json{{"w_c", w.w_c}, {"w_t", w.w_t}, {"w_i", w.w_i}, {"w_m", w.w_m}};
}
void from_json(const json& j, WeightVector& w) {
    w = WeightVector::make(j.at("w_c").get<double>(), j.at("w_t").get<double>(),
                           j.at("w_i").get<double>(), j.at("w_m").get<double>());
}

void to_json(json& j, const Thresholds& t) {
    j = json{{"tau_low", t.tau_low}, {"tau_high", t.tau_high}};
}
void from_json(const json& j, Thresholds& t) {
    t = Thresholds::make(j.at("tau_low").get<double>(), j.at("tau_high").get<double>());
}

std::string canonical_line(const json& j) {
    // nlohmann objects iterate in key order, so dump() is already canonical.
    return j.dump();
}

} // namespace argus
