#include "argus/findings.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <yaml-cpp/yaml.h>

namespace argus {

namespace {

json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
    case YAML::NodeType::Null: return nullptr;
    case YAML::NodeType::Scalar: {
        const std::string& s = n.Scalar();
        if (n.Tag() == "!") return s; // quoted scalar stays a string
        if (s == "true") return true;
        if (s == "false") return false;
        if (s == "null" || s == "~") return nullptr;
        char* end = nullptr;
        long long iv = std::strtoll(s.c_str(), &end, 10);
        if (end && *end == '\0' && !s.empty()) return iv;
        double dv = std::strtod(s.c_str(), &end);
        if (end && *end == '\0' && !s.empty()) return dv;
        return s;
    }
    case YAML::NodeType::Sequence: {
        json a = json::array();
        for (const auto& item : n) a.push_back(yaml_to_json(item));
        return a;
    }
    case YAML::NodeType::Map: {
        json o = json::object();
        for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        return o;
    }
    default: return nullptr;
    }
}

PredicateOp op_from_string(const std::string& s) {
    if (s == "eq") return PredicateOp::eq;
    if (s == "ne") return PredicateOp::ne;
    if (s == "exists") return PredicateOp::exists;
    if (s == "in" || s == "in_set") return PredicateOp::in_set;
    if (s == "cidr_eq") return PredicateOp::cidr_eq;
    fail(Errc::invalid_profile, "unknown predicate op: " + s);
}

/// nullptr when the path does not resolve.
const json* walk_path(const json& doc, const std::string& path) {
    const json* cur = &doc;
    size_t start = 0;
    while (start <= path.size()) {
        size_t dot = path.find('.', start);
        std::string seg = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (cur->is_object()) {
            auto it = cur->find(seg);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        } else if (cur->is_array()) {
            char* end = nullptr;
            long idx = std::strtol(seg.c_str(), &end, 10);
            if (!end || *end != '\0' || idx < 0 || static_cast<size_t>(idx) >= cur->size())
                return nullptr;
            cur = &(*cur)[static_cast<size_t>(idx)];
        } else {
            return nullptr;
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

/// Canonical "a.b.c.d/m" with host bits masked off; empty when unparsable.
std::string normalize_cidr(const std::string& s) {
    unsigned a, b, c, d, m;
    char tail;
    int n = std::sscanf(s.c_str(), "%u.%u.%u.%u/%u%c", &a, &b, &c, &d, &m, &tail);
    if (n != 5 || a > 255 || b > 255 || c > 255 || d > 255 || m > 32) return "";
    uint32_t addr = (a << 24) | (b << 16) | (c << 8) | d;
    uint32_t mask = m == 0 ? 0 : ~uint32_t{0} << (32 - m);
    addr &= mask;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u/%u", addr >> 24, (addr >> 16) & 255,
                  (addr >> 8) & 255, addr & 255, m);
    return buf;
}

const std::map<std::string, Severity>& severity_names() {
    static const std::map<std::string, Severity> m{{"info", Severity::info},
                                                   {"low", Severity::low},
                                                   {"medium", Severity::medium},
                                                   {"high", Severity::high},
                                                   {"critical", Severity::critical}};
    return m;
}

struct CheckMapping {
    ControlId control;
    Severity severity;
    std::string fix_hint;
};

const std::map<std::string, CheckMapping>& admission_checks() {
    static const std::map<std::string, CheckMapping> m{
        {"privileged-pods",
         {"K8S.PRIV.POD.PRIVILEGED", Severity::high,
          "set spec.securityContext.privileged to false"}},
        {"host-network",
         {"K8S.NET.POD.HOSTNETWORK", Severity::high, "set spec.hostNetwork to false"}},
        {"hostpath",
         {"K8S.FS.POD.HOSTPATH", Severity::medium, "replace hostPath volume with a PVC"}},
        {"ingress-no-tls",
         {"K8S.NET.INGRESS.NO-TLS", Severity::medium, "enable TLS on the ingress listener"}},
    };
    return m;
}

const std::map<std::string, CheckMapping>& os_checks() {
    static const std::map<std::string, CheckMapping> m{
        {"default-secgroup",
         {"OS.NET.DEFAULT-SG", Severity::high, "apply module network/harden-default-sg"}},
        {"public-lb",
         {"OS.NET.PUBLIC-NONSTD", Severity::high, "apply module network/restrictive"}},
        {"fip-nonprod",
         {"OS.NET.FIP.PUBLIC-NONPROD", Severity::medium, "apply module network/detach-fip"}},
        {"unencrypted-volume",
         {"OS.STOR.VOL.UNENCRYPTED", Severity::medium, "recreate volume with encryption"}},
    };
    return m;
}

Finding normalize_row(const json& row, const std::map<std::string, CheckMapping>& table,
                      const char* check_key, Source source) {
    if (!row.is_object() || !row.contains(check_key) || !row.at(check_key).is_string())
        fail(Errc::unmappable_row, std::string("row has no ") + check_key + " field");
    std::string check = row.at(check_key).get<std::string>();
    auto it = table.find(check);
    if (it == table.end()) fail(Errc::unmappable_row, "unknown check: " + check);
    std::string resource = row.value("resource", "");
    if (resource.empty()) fail(Errc::unmappable_row, "row has no resource: " + check);
    Finding f;
    f.control_id = it->second.control;
    f.resource_id = resource;
    f.severity = it->second.severity;
    f.confidence = 0.9;
    f.fix_hint = it->second.fix_hint;
    f.source = source;
    f.evidence = json{{"check", check}, {"details", row.value("details", json::object())}};
    return f;
}

} // namespace

std::vector<Policy> parse_profile(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        fail(Errc::invalid_profile, std::string("profile is not valid YAML: ") + e.what());
    }
    if (!root.IsMap() || !root["policies"] || !root["policies"].IsSequence())
        fail(Errc::invalid_profile, "profile must be a map with a policies sequence");

    static const std::set<std::string> allowed{"control_id", "severity", "applies_to",
                                              "predicate", "fix_hint"};
    std::vector<Policy> out;
    std::set<std::string> seen;
    for (const auto& pn : root["policies"]) {
        if (!pn.IsMap()) fail(Errc::invalid_profile, "policy entry must be a map");
        for (const auto& kv : pn) {
            std::string key = kv.first.as<std::string>();
            if (!allowed.count(key))
                fail(Errc::invalid_profile, "unknown policy field: " + key);
        }
        for (const auto& req : {"control_id", "severity", "applies_to", "predicate", "fix_hint"})
            if (!pn[req]) fail(Errc::invalid_profile, std::string("policy missing ") + req);

        Policy p;
        p.control_id = pn["control_id"].as<std::string>();
        if (!valid_control_id(p.control_id))
            fail(Errc::invalid_profile, "bad control id: " + p.control_id);
        if (!seen.insert(p.control_id).second)
            fail(Errc::invalid_profile, "duplicate control id: " + p.control_id);
        auto sev = severity_names().find(pn["severity"].as<std::string>());
        if (sev == severity_names().end())
            fail(Errc::invalid_profile, "unknown severity in " + p.control_id);
        p.severity = sev->second;
        p.applies_to = pn["applies_to"].as<std::string>();
        p.fix_hint = pn["fix_hint"].as<std::string>();
        if (!pn["predicate"].IsSequence() || pn["predicate"].size() == 0)
            fail(Errc::invalid_profile, "empty predicate in " + p.control_id);
        for (const auto& tn : pn["predicate"]) {
            PolicyTest t;
            if (!tn["path"]) fail(Errc::invalid_profile, "predicate test missing path");
            t.path = tn["path"].as<std::string>();
            t.op = op_from_string(tn["op"] ? tn["op"].as<std::string>() : "exists");
            if (tn["value"]) t.value = yaml_to_json(tn["value"]);
            if (t.op != PredicateOp::exists && t.value.is_null())
                fail(Errc::invalid_profile, "predicate op needs a value in " + p.control_id);
            p.predicate.push_back(std::move(t));
        }
        out.push_back(std::move(p));
    }
    return out;
}

bool policy_matches(const Policy& p, const json& doc) {
    for (const auto& t : p.predicate) {
        const json* v = walk_path(doc, t.path);
        bool ok = false;
        switch (t.op) {
        case PredicateOp::eq: ok = v && *v == t.value; break;
        case PredicateOp::ne: ok = !v || *v != t.value; break;
        case PredicateOp::exists: ok = v != nullptr; break;
        case PredicateOp::in_set:
            ok = v && t.value.is_array() &&
                 std::any_of(t.value.begin(), t.value.end(),
                             [&](const json& x) { return x == *v; });
            break;
        case PredicateOp::cidr_eq: {
            if (!v || !v->is_string() || !t.value.is_string()) break;
            std::string a = normalize_cidr(v->get<std::string>());
            std::string b = normalize_cidr(t.value.get<std::string>());
            ok = !a.empty() ? a == b : v->get<std::string>() == t.value.get<std::string>();
            break;
        }
        }
        if (!ok) return false;
    }
    return true;
}

std::vector<Finding> evaluate_profile(const std::vector<Policy>& profile,
                                      const std::vector<ResourceDoc>& resources) {
    std::vector<Finding> out;
    for (const auto& r : resources) {
        for (const auto& p : profile) {
            if (p.applies_to != r.family) continue;
            if (!policy_matches(p, r.doc)) continue;
            Finding f;
            f.control_id = p.control_id;
            f.resource_id = r.id;
            f.severity = p.severity;
            f.confidence = p.confidence;
            f.fix_hint = p.fix_hint;
            f.source = r.family.rfind("iac.", 0) == 0 ? Source::iac_scan : Source::live_scan;
            json observed = json::object();
            for (const auto& t : p.predicate) {
                const json* v = walk_path(r.doc, t.path);
                observed[t.path] = v ? *v : json(nullptr);
            }
            f.evidence = json{{"family", r.family}, {"observed", observed}};
            if (r.doc.contains("project_id")) f.evidence["project_id"] = r.doc["project_id"];
            out.push_back(std::move(f));
        }
    }
    std::sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
        return std::tie(a.resource_id, a.control_id) < std::tie(b.resource_id, b.control_id);
    });
    return out;
}

Finding normalize_admission_row(const json& row) {
    return normalize_row(row, admission_checks(), "check", Source::admission);
}

Finding normalize_os_check_row(const json& row) {
    return normalize_row(row, os_checks(), "check", Source::live_scan);
}

Finding normalize_iac_row(const json& row) {
    static const std::map<std::string, CheckMapping> table{
        {"open-cidr",
         {"IAC.NET.OPEN-CIDR", Severity::high, "apply module network/close-cidr"}},
    };
    return normalize_row(row, table, "rule", Source::iac_scan);
}

std::vector<DedupedEvent> dedup_events(const std::vector<NormalizedEvent>& events,
                                       int64_t window_ms) {
    if (window_ms <= 0) fail(Errc::bad_config, "dedup window must be positive");
    // Window key is absolute: floor(ts / window). Earliest (ts, event_id) survives.
    std::map<std::tuple<ResourceId, ControlId, int64_t>, DedupedEvent> buckets;
    for (const auto& e : events) {
        int64_t w = e.timestamp >= 0 ? e.timestamp / window_ms
                                     : (e.timestamp - window_ms + 1) / window_ms;
        auto key = std::make_tuple(e.resource_id, e.control_id, w);
        auto it = buckets.find(key);
        if (it == buckets.end()) {
            buckets.emplace(key, DedupedEvent{e, 1});
        } else {
            ++it->second.duplicate_count;
            if (std::tie(e.timestamp, e.event_id) <
                std::tie(it->second.event.timestamp, it->second.event.event_id))
                it->second.event = e;
        }
    }
    std::vector<DedupedEvent> out;
    out.reserve(buckets.size());
    for (auto& [_, v] : buckets) out.push_back(std::move(v));
    std::sort(out.begin(), out.end(), [](const DedupedEvent& a, const DedupedEvent& b) {
        return std::tie(a.event.timestamp, a.event.event_id) <
               std::tie(b.event.timestamp, b.event.event_id);
    });
    return out;
}

std::vector<NormalizedEvent> severity_gate(const std::vector<Finding>& findings,
                                           Severity min_severity, int64_t ts_ms,
                                           const EventIdAlloc& next_id) {
    std::vector<NormalizedEvent> out;
    for (const auto& f : findings) {
        if (compare_severity(f.severity, min_severity) < 0) continue;
        NormalizedEvent e;
        e.event_id = next_id();
        e.timestamp = ts_ms;
        e.resource_id = f.resource_id;
        e.control_id = f.control_id;
        e.evidence = f.evidence;
        e.evidence["confidence"] = f.confidence;
        e.severity = f.severity;
        e.priority = severity_to_priority(f.severity);
        e.source = f.source;
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace argus
