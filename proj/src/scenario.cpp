#include "argus/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>

#include "argus/findings.hpp"
#include "argus/rng.hpp"

namespace argus {

namespace {

constexpr uint64_t kWorldSalt = 0x5eed0001;
constexpr uint64_t kInjectSalt = 0x5eed0002;
constexpr uint64_t kCalibSalt = 0x5eed0003;

constexpr int kNamespaces = 16;
constexpr int kApprovedOps = 4;

std::string pad2(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

std::string pad4(int v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", v);
    return buf;
}

std::string event_id(uint64_t n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "ev-%06llu", static_cast<unsigned long long>(n));
    return buf;
}

void sort_stream(std::vector<json>& stream) {
    std::stable_sort(stream.begin(), stream.end(), [](const json& a, const json& b) {
        return std::make_pair(a.at("ts_ms").get<int64_t>(), a.value("event_id", "")) <
               std::make_pair(b.at("ts_ms").get<int64_t>(), b.value("event_id", ""));
    });
}

} // namespace

ScaleSpec scale_from_string(const std::string& s) {
    ScaleSpec spec;
    if (s == "desk") {
        spec = ScaleSpec{"desk", 50, 32, 25, 18, 96, 280, 100};
    } else if (s == "50") {
        spec = ScaleSpec{"50", 50, 32, 25, 18, 96, 280, 1};
    } else if (s == "100") {
        spec = ScaleSpec{"100", 100, 32, 25, 18, 96, 280, 1};
    } else if (s == "200") {
        spec = ScaleSpec{"200", 200, 32, 25, 18, 96, 280, 1};
    } else {
        fail(Errc::bad_config, "unknown scale: " + s + " (use 50, 100, 200 or desk)");
    }
    return spec;
}

BaselineConfig BaselineConfig::baseline_a() {
    BaselineConfig c;
    c.name = "baseline_a";
    c.runtime_detection = true;
    return c;
}

BaselineConfig BaselineConfig::baseline_b() {
    BaselineConfig c;
    c.name = "baseline_b";
    c.config_scanning_k8s = true;
    c.config_scanning_iac = true;
    return c;
}

BaselineConfig BaselineConfig::proposed() {
    BaselineConfig c;
    c.name = "proposed";
    c.runtime_detection = true;
    c.config_scanning_k8s = true;
    c.config_scanning_iac = true;
    c.config_scanning_openstack = true;
    c.identity_correlation = true;
    c.remediation = true;
    return c;
}

BaselineConfig BaselineConfig::by_name(const std::string& name) {
    if (name == "baseline_a") return baseline_a();
    if (name == "baseline_b") return baseline_b();
    if (name == "proposed") return proposed();
    fail(Errc::bad_config, "unknown configuration: " + name);
}

void to_json(json& j, const InjectionLabel& l) {
    j = json{{"event_id", l.event_id},
             {"class", l.klass},
             {"resource_id", l.resource_id},
             {"injected_at", l.injected_at}};
}

void from_json(const json& j, InjectionLabel& l) {
    j.at("event_id").get_to(l.event_id);
    j.at("class").get_to(l.klass);
    j.at("resource_id").get_to(l.resource_id);
    j.at("injected_at").get_to(l.injected_at);
}

const std::vector<std::string>& injection_classes() {
    static const std::vector<std::string> classes{
        "privileged_pod",        "host_network_pod",
        "hostpath_mount",        "sa_token_overuse",
        "cluster_admin_binding", "public_load_balancer",
        "open_ingress_no_tls",   "default_os_secgroup",
        "public_floating_ip_nonprod", "keystone_role_escalation",
        "weak_app_credential",   "iac_open_cidr",
        "unencrypted_volume",    "suspicious_shell_or_miner",
    };
    return classes;
}

ControlId control_for_class(const std::string& klass) {
    static const std::map<std::string, ControlId> table{
        {"privileged_pod", "K8S.PRIV.POD.PRIVILEGED"},
        {"host_network_pod", "K8S.NET.POD.HOSTNETWORK"},
        {"hostpath_mount", "K8S.FS.POD.HOSTPATH"},
        {"sa_token_overuse", "RT.ID.SA-TOKEN-OVERUSE"},
        {"cluster_admin_binding", "K8S.RBAC.CLUSTER-ADMIN-BINDING"},
        {"public_load_balancer", "OS.NET.PUBLIC-NONSTD"},
        {"open_ingress_no_tls", "K8S.NET.INGRESS.NO-TLS"},
        {"default_os_secgroup", "OS.NET.DEFAULT-SG"},
        {"public_floating_ip_nonprod", "OS.NET.FIP.PUBLIC-NONPROD"},
        {"keystone_role_escalation", "OS.ID.ROLE-ESCALATION"},
        {"weak_app_credential", "OS.ID.APPCRED.WEAK"},
        {"iac_open_cidr", "IAC.NET.OPEN-CIDR"},
        {"unencrypted_volume", "OS.STOR.VOL.UNENCRYPTED"},
        {"suspicious_shell_or_miner", "RT.SHELL.CONTAINER"},
    };
    auto it = table.find(klass);
    if (it == table.end()) fail(Errc::bad_config, "unknown injection class: " + klass);
    return it->second;
}

const std::set<std::string>& config_only_classes() {
    static const std::set<std::string> classes{
        "privileged_pod", "host_network_pod", "hostpath_mount", "open_ingress_no_tls",
        "iac_open_cidr"};
    return classes;
}

const std::set<std::string>& openstack_only_classes() {
    static const std::set<std::string> classes{
        "public_load_balancer",       "default_os_secgroup", "public_floating_ip_nonprod",
        "keystone_role_escalation",   "weak_app_credential", "unencrypted_volume"};
    return classes;
}

SignalCaps default_signal_caps() { return SignalCaps{}; }

namespace {

struct Builder {
    Scenario& s;
    Rng rng;
    uint64_t event_counter = 0;

    std::string next_event_id() { return event_id(++event_counter); }

    void add_live(const ResourceId& id, const std::string& fam, const std::string& project,
                  json doc) {
        if (!project.empty()) doc["project_id"] = project;
        s.live.put(id, std::move(doc));
        s.family[id] = fam;
        if (!project.empty()) s.project_of[id] = project;
    }

    void add_declared(const ResourceId& id, const std::string& fam, const std::string& project,
                      json doc) {
        if (!project.empty()) doc["project_id"] = project;
        s.declared.put(id, std::move(doc));
        s.family[id] = fam;
        if (!project.empty()) s.project_of[id] = project;
    }

    void build_inventory() {
        const ScaleSpec& sc = s.scale;
        std::vector<json> os_records;
        os_records.push_back(json{{"kind", "domain"}, {"name", "default"}});
        for (int k = 0; k < sc.projects; ++k)
            os_records.push_back(json{{"kind", "project"},
                                      {"name", "p-" + pad2(k)},
                                      {"domain", "default"},
                                      {"production", k % 4 == 0}});
        for (int k = 0; k < 8; ++k) {
            os_records.push_back(json{{"kind", "user"},
                                      {"name", "op-" + std::to_string(k)},
                                      {"approved_operator", k < kApprovedOps}});
            os_records.push_back(json{{"kind", "user"}, {"name", "svc-" + std::to_string(k)}});
        }
        // Role assignments: two thirds operator grants (member), one third
        // service grants (reader), spread over distinct projects.
        int ops_share = sc.user_role_assignments * 2 / 3;
        int per_op = ops_share / 8;
        int per_svc = (sc.user_role_assignments - per_op * 8) / 8;
        for (int k = 0; k < 8; ++k)
            for (int j = 0; j < per_op; ++j)
                os_records.push_back(json{{"kind", "role_assignment"},
                                          {"user", "os/user/op-" + std::to_string(k)},
                                          {"role", "member"},
                                          {"project", "p-" + pad2((k * per_op + j) % sc.projects)}});
        for (int k = 0; k < 8; ++k)
            for (int j = 0; j < per_svc; ++j)
                os_records.push_back(
                    json{{"kind", "role_assignment"},
                         {"user", "os/user/svc-" + std::to_string(k)},
                         {"role", "reader"},
                         {"project", "p-" + pad2((k * per_svc + j) % sc.projects)}});
        for (int k = 0; k < 24; ++k)
            os_records.push_back(json{{"kind", "application_credential"},
                                      {"name", "ac-" + pad2(k)},
                                      {"user", "os/user/svc-" + std::to_string(k % 8)},
                                      {"project", "p-" + pad2(k % sc.projects)},
                                      {"unrestricted", false}});
        IngestResult r1 = ingest_snapshot(IdentityGraph{}, "openstack", os_records);
        s.graph = std::move(r1.graph);

        std::vector<json> k8s_records;
        for (int k = 0; k < kNamespaces; ++k)
            k8s_records.push_back(json{{"kind", "namespace"},
                                       {"name", "ns-" + pad2(k)},
                                       {"project", "p-" + pad2(k)}});
        for (int k = 0; k < kNamespaces; ++k) {
            k8s_records.push_back(
                json{{"kind", "service_account"}, {"name", "app"}, {"namespace", "ns-" + pad2(k)}});
            k8s_records.push_back(
                json{{"kind", "service_account"}, {"name", "ops"}, {"namespace", "ns-" + pad2(k)}});
            k8s_records.push_back(json{{"kind", "role_binding"},
                                       {"namespace", "ns-" + pad2(k)},
                                       {"role", "edit"},
                                       {"subject", "k8s/sa/ns-" + pad2(k) + "/ops"}});
        }
        // Cross-platform operators: cloud users with namespace-scoped access.
        for (int k = 0; k < 8; ++k)
            for (int j = 0; j < 2; ++j)
                k8s_records.push_back(json{{"kind", "role_binding"},
                                           {"namespace", "ns-" + pad2((2 * k + j) % kNamespaces)},
                                           {"role", "edit"},
                                           {"subject", "os/user/op-" + std::to_string(k)}});
        k8s_records.push_back(json{{"kind", "cluster_role_binding"},
                                   {"role", "view"},
                                   {"subject", "os/user/op-0"}});
        IngestResult r2 = ingest_snapshot(s.graph, "k8s", k8s_records);
        s.graph = std::move(r2.graph);

        // Resource documents plus their graph nodes.
        std::vector<json> resource_records;
        int pods = sc.node_count * sc.pods_per_node;
        for (int p = 0; p < pods; ++p) {
            std::string ns = "ns-" + pad2(p % kNamespaces);
            std::string id = "k8s/pod/" + ns + "/pod-" + pad4(p);
            json doc{{"spec",
                      json{{"securityContext", json{{"privileged", false}}},
                           {"hostNetwork", false},
                           {"volumes", json::array()}}}};
            add_live(id, "k8s.pod", "p-" + pad2(p % kNamespaces), std::move(doc));
            resource_records.push_back(
                json{{"kind", "resource"}, {"id", id}, {"namespace", ns}, {"family", "k8s.pod"}});
        }
        for (int k = 0; k < 32; ++k) {
            std::string ns = "ns-" + pad2(k % kNamespaces);
            std::string id = "k8s/ingress/" + ns + "/ing-" + pad2(k);
            add_live(id, "k8s.ingress", "p-" + pad2(k % kNamespaces),
                     json{{"tls_enabled", true}, {"host", "svc-" + pad2(k) + ".example.test"}});
            resource_records.push_back(json{
                {"kind", "resource"}, {"id", id}, {"namespace", ns}, {"family", "k8s.ingress"}});
        }
        for (int k = 0; k < 48; ++k) {
            std::string ns = "ns-" + pad2(k % kNamespaces);
            std::string id = "k8s/service/" + ns + "/svc-" + pad2(k);
            add_live(id, "k8s.service", "p-" + pad2(k % kNamespaces),
                     json{{"type", "ClusterIP"}, {"node_port", 0}});
            resource_records.push_back(json{
                {"kind", "resource"}, {"id", id}, {"namespace", ns}, {"family", "k8s.service"}});
        }
        for (int k = 0; k < kNamespaces; ++k) {
            std::string ns = "ns-" + pad2(k);
            for (const char* who : {"app", "ops"}) {
                std::string id = "k8s/satoken/" + ns + "/" + who;
                add_live(id, "k8s.satoken", "p-" + pad2(k),
                         json{{"token_age_days", 12}, {"overused", false}});
                resource_records.push_back(json{{"kind", "resource"},
                                                {"id", id},
                                                {"namespace", ns},
                                                {"family", "k8s.satoken"}});
            }
        }
        IngestResult r3 = ingest_snapshot(s.graph, "k8s", resource_records);
        s.graph = std::move(r3.graph);

        std::vector<json> os_resources;
        auto os_doc = [&](const std::string& id, const std::string& fam, int k, json doc) {
            std::string project = "p-" + pad2(k);
            add_live(id, fam, project, std::move(doc));
            os_resources.push_back(
                json{{"kind", "resource"}, {"id", id}, {"project", project}, {"family", fam}});
        };
        for (int k = 0; k < sc.projects; ++k) {
            os_doc("os/secgroup/p-" + pad2(k) + "/default", "os.secgroup", k,
                   json{{"default_open", false}, {"ingress_all", false}});
            os_doc("os/lb/p-" + pad2(k) + "/lb-0", "os.loadbalancer", k,
                   json{{"public", false}, {"listener_port", 443}});
            os_doc("os/volume/p-" + pad2(k) + "/vol-0", "os.volume", k,
                   json{{"encrypted", true}, {"size_gb", 100}});
            if (k < 16)
                os_doc("os/volume/p-" + pad2(k) + "/vol-1", "os.volume", k,
                       json{{"encrypted", true}, {"size_gb", 50}});
            os_doc("os/fip/p-" + pad2(k) + "/fip-0", "os.floating_ip", k,
                   json{{"public", false},
                        {"attached", true},
                        {"env", k % 4 == 0 ? "prod" : "staging"}});
            os_doc("os/identity/p-" + pad2(k), "os.identity", k,
                   json{{"rotation_days", 30}, {"mfa_enforced", true}});
        }
        for (int k = 0; k < 24; ++k)
            os_doc("os/credential/ac-" + pad2(k), "os.appcred", k % sc.projects,
                   json{{"unrestricted", false}, {"age_days", 20}});
        IngestResult r4 = ingest_snapshot(s.graph, "openstack", os_resources);
        s.graph = std::move(r4.graph);

        // IaC documents live in the declared store.
        std::vector<json> iac_resources;
        for (int r = 0; r < sc.iac_repos; ++r) {
            std::string project = "p-" + pad2(r % sc.projects);
            for (int d = 0; d < 2; ++d) {
                std::string id = "iac/net/repo-" + pad2(r) + "/doc-" + std::to_string(d);
                add_declared(id, "iac.network", project,
                             json{{"cidr", "10.0.0.0/8"}, {"module", "network/base"}});
                iac_resources.push_back(json{{"kind", "resource"},
                                             {"id", id},
                                             {"project", project},
                                             {"family", "iac.network"}});
            }
            std::string mid = "iac/module/repo-" + pad2(r);
            add_declared(mid, "iac.module", project, json{{"version_pinned", true}});
            iac_resources.push_back(json{
                {"kind", "resource"}, {"id", mid}, {"project", project}, {"family", "iac.module"}});
        }
        IngestResult r5 = ingest_snapshot(s.graph, "openstack", iac_resources);
        s.graph = std::move(r5.graph);
    }

    std::string random_pod() {
        int pods = s.scale.node_count * s.scale.pods_per_node;
        int p = int(rng.bounded(uint64_t(pods)));
        return "k8s/pod/ns-" + pad2(p % kNamespaces) + "/pod-" + pad4(p);
    }

    std::string random_sa() {
        int k = int(rng.bounded(kNamespaces));
        return "k8s/sa/ns-" + pad2(k) + (rng.chance(0.5) ? "/app" : "/ops");
    }

    void push_activity(const std::string& subject, const std::string& resource, int64_t ts) {
        s.stream.push_back(json{{"source", "activity"},
                                {"event_id", next_event_id()},
                                {"ts_ms", ts},
                                {"subject", subject},
                                {"resource", resource}});
    }

    void build_benign_stream() {
        const int total = 3500 * 60 / s.scale.eps_divisor;
        const int ambiguous = total * 7 / 1000;
        const int approved_falco = total * 2 / 100;
        const int approved_admission = total * 14 / 1000;
        const int overrides = total * 5 / 100;
        const int routine = total - ambiguous - approved_falco - approved_admission - overrides;

        for (int i = 0; i < routine; ++i) {
            int64_t ts = int64_t(rng.bounded(kReplayWindowMs));
            s.stream.push_back(json{
                {"source", "falco"},
                {"event_id", next_event_id()},
                {"ts_ms", ts},
                {"rule", rng.chance(0.5) ? "OutboundConnectionBurst" : "ProcessSpawnChurn"},
                {"priority", "notice"},
                {"confidence", 0.7},
                {"resource", random_pod()},
                {"subject", random_sa()}});
        }
        for (int i = 0; i < ambiguous; ++i) {
            int64_t ts = int64_t(rng.bounded(kReplayWindowMs));
            s.stream.push_back(json{{"source", "falco"},
                                    {"event_id", next_event_id()},
                                    {"ts_ms", ts},
                                    {"rule", "AnomalousHostMount"},
                                    {"priority", "error"},
                                    {"confidence", 0.65},
                                    {"resource", random_pod()},
                                    {"subject", random_sa()}});
        }
        for (int i = 0; i < approved_falco; ++i) {
            int64_t ts = 3'600'000 + int64_t(rng.bounded(kReplayWindowMs - 3'600'000));
            std::string subject = "os/user/op-" + std::to_string(rng.bounded(kApprovedOps));
            std::string resource = random_pod();
            push_activity(subject, resource, ts - 60'000);
            s.stream.push_back(json{{"source", "falco"},
                                    {"event_id", next_event_id()},
                                    {"ts_ms", ts},
                                    {"rule", "PrivilegedExecSession"},
                                    {"priority", "warning"},
                                    {"confidence", 0.8},
                                    {"resource", resource},
                                    {"subject", subject}});
        }
        for (int i = 0; i < approved_admission; ++i) {
            // Sanctioned change-window edits: the webhook sees the apply,
            // the operator reverts before the next scan tick.
            int64_t ts = 3'600'000 + int64_t(rng.bounded(kReplayWindowMs - 3'600'000));
            std::string subject = "os/user/op-" + std::to_string(rng.bounded(kApprovedOps));
            std::string resource = random_pod();
            push_activity(subject, resource, ts - 60'000);
            s.stream.push_back(json{{"source", "admission"},
                                    {"event_id", next_event_id()},
                                    {"ts_ms", ts},
                                    {"check", rng.chance(0.5) ? "privileged-pods" : "host-network"},
                                    {"confidence", 0.7},
                                    {"resource", resource},
                                    {"subject", subject},
                                    {"details", json{{"change_window", true}}}});
        }
        for (int i = 0; i < overrides; ++i) {
            int64_t ts = int64_t(rng.bounded(kReplayWindowMs));
            s.stream.push_back(json{{"source", "override"},
                                    {"event_id", next_event_id()},
                                    {"ts_ms", ts},
                                    {"resource", random_pod()},
                                    {"note", "analyst override pending review"}});
        }
        s.manifest["stream"] = json{{"total", total},
                                    {"routine", routine},
                                    {"ambiguous", ambiguous},
                                    {"approved_falco", approved_falco},
                                    {"approved_admission", approved_admission},
                                    {"overrides", overrides}};
    }
};

} // namespace

Scenario generate_scenario(uint64_t seed, const ScaleSpec& scale) {
    Scenario s;
    s.seed = seed;
    s.scale = scale;
    Builder b{s, Rng(Rng::derive(seed, kWorldSalt))};
    b.build_inventory();
    b.build_benign_stream();
    sort_stream(s.stream);
    s.manifest["seed"] = seed;
    s.manifest["scale"] = scale.name;
    s.manifest["node_count"] = scale.node_count;
    s.manifest["projects"] = scale.projects;
    s.manifest["pods_per_node"] = scale.pods_per_node;
    s.manifest["iac_repos"] = scale.iac_repos;
    s.manifest["user_role_assignments"] = scale.user_role_assignments;
    s.manifest["resources"] = s.family.size();
    s.manifest["event_counter"] = b.event_counter;
    return s;
}

namespace {

struct Injector {
    Scenario& s;
    Rng rng;
    uint64_t event_counter;

    std::string next_event_id() { return event_id(++event_counter); }

    void label(const std::string& klass, const std::string& observed_event,
               const ResourceId& resource, int64_t ts) {
        InjectionLabel l;
        l.event_id = observed_event;
        l.klass = klass;
        l.resource_id = resource;
        l.injected_at = ts;
        s.labels.push_back(l);
    }

    int64_t injection_time() { return int64_t(rng.bounded(27 * kVirtualDayMs)); }

    /// Scan-visible classes mutate state at world build, so their
    /// observation event must precede the first scan epoch or the log
    /// would show detections before injected_at.
    int64_t config_injection_time() { return int64_t(rng.bounded(kScanEpochMs)); }

    /// Distinct draw order over [0, n); n < need -> class-target-exhausted.
    std::vector<int> draw_order(int n, int need, const char* klass) {
        if (n < need)
            fail(Errc::class_target_exhausted,
                 std::string(klass) + ": " + std::to_string(need) + " targets requested, " +
                     std::to_string(n) + " available");
        std::vector<int> order(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) order[size_t(i)] = i;
        rng.shuffle(order);
        return order;
    }

    /// One payload per scan epoch after ts, half an hour before the tick.
    void recur(json payload, int64_t ts) {
        for (int e = 1; e <= kScanEpochs; ++e) {
            int64_t when = e * kScanEpochMs - 1'800'000;
            if (when <= ts) continue;
            payload["event_id"] = next_event_id();
            payload["ts_ms"] = when;
            s.stream.push_back(payload);
        }
    }

    void mutate_live(const ResourceId& id, const std::function<void(json&)>& fn) {
        json doc = s.live.get(id);
        fn(doc);
        s.live.put(id, doc);
    }

    std::string random_sa() {
        int k = int(rng.bounded(kNamespaces));
        return "k8s/sa/ns-" + pad2(k) + (rng.chance(0.5) ? "/app" : "/ops");
    }

    void run(int per_class) {
        const int pods = s.scale.node_count * s.scale.pods_per_node;
        // Pod-backed classes share one shuffled pool so targets never collide.
        std::vector<int> pod_order = draw_order(pods, per_class * 4, "pod classes");
        size_t pod_cursor = 0;
        auto next_pod = [&] {
            int p = pod_order[pod_cursor++];
            return "k8s/pod/ns-" + pad2(p % kNamespaces) + "/pod-" + pad4(p);
        };

        for (int i = 0; i < per_class; ++i) { // privileged_pod
            std::string pod = next_pod();
            int64_t ts = config_injection_time();
            mutate_live(pod, [](json& d) { d["spec"]["securityContext"]["privileged"] = true; });
            std::string eid = next_event_id();
            label("privileged_pod", eid, pod, ts);
            s.stream.push_back(json{{"source", "admission"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "privileged-pods"},
                                    {"confidence", 0.9},
                                    {"resource", pod},
                                    {"details", json{{"requested_by", "unknown"}}}});
        }
        for (int i = 0; i < per_class; ++i) { // host_network_pod
            std::string pod = next_pod();
            int64_t ts = config_injection_time();
            mutate_live(pod, [](json& d) { d["spec"]["hostNetwork"] = true; });
            std::string eid = next_event_id();
            label("host_network_pod", eid, pod, ts);
            s.stream.push_back(json{{"source", "admission"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "host-network"},
                                    {"confidence", 0.9},
                                    {"resource", pod},
                                    {"details", json::object()}});
        }
        for (int i = 0; i < per_class; ++i) { // hostpath_mount
            std::string pod = next_pod();
            int64_t ts = config_injection_time();
            mutate_live(pod, [](json& d) {
                d["spec"]["volumes"] =
                    json::array({json{{"name", "data"}, {"hostPath", json{{"path", "/var"}}}}});
            });
            std::string eid = next_event_id();
            label("hostpath_mount", eid, pod, ts);
            s.stream.push_back(json{{"source", "admission"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "hostpath"},
                                    {"confidence", 0.9},
                                    {"resource", pod},
                                    {"details", json::object()}});
        }
        std::vector<int> token_order =
            draw_order(kNamespaces * 2, per_class, "sa_token_overuse");
        for (int i = 0; i < per_class; ++i) { // sa_token_overuse
            int idx = token_order[size_t(i)];
            std::string ns = "ns-" + pad2(idx % kNamespaces);
            const char* who = idx < kNamespaces ? "app" : "ops";
            std::string token = "k8s/satoken/" + ns + "/" + who;
            std::string subject = "k8s/sa/" + ns + "/" + who;
            int64_t ts = injection_time();
            mutate_live(token, [](json& d) { d["overused"] = true; });
            std::string eid = next_event_id();
            label("sa_token_overuse", eid, token, ts);
            json payload{{"source", "falco"},     {"event_id", eid},
                         {"ts_ms", ts},           {"rule", "ExcessiveSATokenUse"},
                         {"priority", "warning"}, {"confidence", 0.9},
                         {"resource", token},     {"subject", subject}};
            s.stream.push_back(payload);
            recur(payload, ts);
        }
        for (int i = 0; i < per_class; ++i) { // cluster_admin_binding
            int ns = int(rng.bounded(kNamespaces));
            std::string subject = "k8s/sa/ns-" + pad2(ns) + "/app";
            std::string id = "k8s/rbac/inj-bind-" + pad2(i);
            int64_t ts = injection_time();
            s.live.put(id, json{{"role", "cluster-admin"}, {"subject", subject}});
            s.family[id] = "k8s.rbac";
            IngestResult r = ingest_snapshot(
                s.graph, "k8s",
                {json{{"kind", "resource"},
                      {"id", id},
                      {"namespace", "ns-" + pad2(ns)},
                      {"family", "k8s.rbac"}},
                 json{{"kind", "cluster_role_binding"},
                      {"role", "cluster-admin"},
                      {"subject", subject}}});
            s.graph = std::move(r.graph);
            std::string eid = next_event_id();
            label("cluster_admin_binding", eid, id, ts);
            json payload{{"source", "identity_watch"},
                         {"event_id", eid},
                         {"ts_ms", ts},
                         {"event", "cluster-admin-binding"},
                         {"confidence", 0.95},
                         {"resource", id},
                         {"subject", subject}};
            s.stream.push_back(payload);
            recur(payload, ts);
        }
        std::vector<int> lb_order =
            draw_order(s.scale.projects, per_class, "public_load_balancer");
        for (int i = 0; i < per_class; ++i) { // public_load_balancer
            int k = lb_order[size_t(i)];
            std::string lb = "os/lb/p-" + pad2(k) + "/lb-0";
            int64_t ts = config_injection_time();
            mutate_live(lb, [](json& d) {
                d["public"] = true;
                d["listener_port"] = 8443;
            });
            std::string eid = next_event_id();
            label("public_load_balancer", eid, lb, ts);
            s.stream.push_back(json{{"source", "os_check"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "public-lb"},
                                    {"confidence", 0.9},
                                    {"resource", lb},
                                    {"project_id", "p-" + pad2(k)},
                                    {"details", json{{"listener_port", 8443}}}});
        }
        std::vector<int> ing_order = draw_order(32, per_class, "open_ingress_no_tls");
        for (int i = 0; i < per_class; ++i) { // open_ingress_no_tls
            int k = ing_order[size_t(i)];
            std::string ing = "k8s/ingress/ns-" + pad2(k % kNamespaces) + "/ing-" + pad2(k);
            int64_t ts = config_injection_time();
            mutate_live(ing, [](json& d) { d["tls_enabled"] = false; });
            std::string eid = next_event_id();
            label("open_ingress_no_tls", eid, ing, ts);
            s.stream.push_back(json{{"source", "admission"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "ingress-no-tls"},
                                    {"confidence", 0.9},
                                    {"resource", ing},
                                    {"details", json::object()}});
        }
        std::vector<int> sg_order = draw_order(s.scale.projects, per_class, "default_os_secgroup");
        for (int i = 0; i < per_class; ++i) { // default_os_secgroup
            int k = sg_order[size_t(i)];
            std::string sg = "os/secgroup/p-" + pad2(k) + "/default";
            int64_t ts = config_injection_time();
            mutate_live(sg, [](json& d) {
                d["default_open"] = true;
                d["ingress_all"] = true;
            });
            std::string eid = next_event_id();
            label("default_os_secgroup", eid, sg, ts);
            s.stream.push_back(json{{"source", "os_check"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "default-secgroup"},
                                    {"confidence", 0.9},
                                    {"resource", sg},
                                    {"project_id", "p-" + pad2(k)},
                                    {"details", json::object()}});
        }
        std::vector<int> nonprod;
        for (int k = 0; k < s.scale.projects; ++k)
            if (k % 4 != 0) nonprod.push_back(k);
        if (int(nonprod.size()) < per_class)
            fail(Errc::class_target_exhausted, "public_floating_ip_nonprod: " +
                                                   std::to_string(per_class) +
                                                   " targets requested, " +
                                                   std::to_string(nonprod.size()) + " available");
        rng.shuffle(nonprod);
        for (int i = 0; i < per_class; ++i) { // public_floating_ip_nonprod
            int k = nonprod[size_t(i)];
            std::string fip = "os/fip/p-" + pad2(k) + "/fip-0";
            int64_t ts = config_injection_time();
            mutate_live(fip, [](json& d) { d["public"] = true; });
            std::string eid = next_event_id();
            label("public_floating_ip_nonprod", eid, fip, ts);
            s.stream.push_back(json{{"source", "os_check"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "fip-nonprod"},
                                    {"confidence", 0.9},
                                    {"resource", fip},
                                    {"project_id", "p-" + pad2(k)},
                                    {"details", json{{"env", "staging"}}}});
        }
        std::vector<int> ident_order =
            draw_order(s.scale.projects, per_class, "keystone_role_escalation");
        for (int i = 0; i < per_class; ++i) { // keystone_role_escalation
            int k = ident_order[size_t(i)];
            std::string id = "os/identity/p-" + pad2(k);
            std::string subject = "os/user/svc-" + std::to_string(int(rng.bounded(8)));
            int64_t ts = injection_time();
            std::string eid = next_event_id();
            label("keystone_role_escalation", eid, id, ts);
            json payload{{"source", "keystone"},
                         {"event_id", eid},
                         {"ts_ms", ts},
                         {"event", "role-escalation"},
                         {"confidence", 0.95},
                         {"resource", id},
                         {"subject", subject},
                         {"project_id", "p-" + pad2(k)},
                         {"details", json{{"granted_role", "admin"}}}};
            s.stream.push_back(payload);
            recur(payload, ts);
        }
        std::vector<int> cred_order = draw_order(24, per_class, "weak_app_credential");
        for (int i = 0; i < per_class; ++i) { // weak_app_credential
            int k = cred_order[size_t(i)];
            std::string cred = "os/credential/ac-" + pad2(k);
            int64_t ts = injection_time();
            mutate_live(cred, [](json& d) { d["unrestricted"] = true; });
            std::string eid = next_event_id();
            label("weak_app_credential", eid, cred, ts);
            json payload{{"source", "keystone"},
                         {"event_id", eid},
                         {"ts_ms", ts},
                         {"event", "weak-app-credential"},
                         {"confidence", 0.85},
                         {"resource", cred},
                         {"project_id", "p-" + pad2(k % s.scale.projects)},
                         {"details", json{{"unrestricted", true}}}};
            s.stream.push_back(payload);
            recur(payload, ts);
        }
        std::vector<int> iac_order = draw_order(s.scale.iac_repos * 2, per_class, "iac_open_cidr");
        for (int i = 0; i < per_class; ++i) { // iac_open_cidr
            int idx = iac_order[size_t(i)];
            std::string doc = "iac/net/repo-" + pad2(idx / 2) + "/doc-" + std::to_string(idx % 2);
            int64_t ts = config_injection_time();
            json iac = s.declared.get(doc);
            iac["cidr"] = "0.0.0.0/0";
            s.declared.put(doc, iac);
            std::string eid = next_event_id();
            label("iac_open_cidr", eid, doc, ts);
            s.stream.push_back(json{{"source", "checkov"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"rule", "open-cidr"},
                                    {"confidence", 0.9},
                                    {"resource", doc},
                                    {"details", json{{"cidr", "0.0.0.0/0"}}}});
        }
        std::vector<int> vol_order =
            draw_order(s.scale.projects + 16, per_class, "unencrypted_volume");
        for (int i = 0; i < per_class; ++i) { // unencrypted_volume
            int idx = vol_order[size_t(i)];
            int project = idx < s.scale.projects ? idx : idx - s.scale.projects;
            std::string vol =
                "os/volume/p-" + pad2(project) + (idx < s.scale.projects ? "/vol-0" : "/vol-1");
            int64_t ts = config_injection_time();
            mutate_live(vol, [](json& d) { d["encrypted"] = false; });
            std::string eid = next_event_id();
            label("unencrypted_volume", eid, vol, ts);
            s.stream.push_back(json{{"source", "os_check"},
                                    {"event_id", eid},
                                    {"ts_ms", ts},
                                    {"check", "unencrypted-volume"},
                                    {"confidence", 0.9},
                                    {"resource", vol},
                                    {"project_id", "p-" + pad2(project)},
                                    {"details", json::object()}});
        }
        for (int i = 0; i < per_class; ++i) { // suspicious_shell_or_miner
            std::string pod = next_pod();
            int64_t ts = injection_time();
            std::string eid = next_event_id();
            label("suspicious_shell_or_miner", eid, pod, ts);
            json payload{{"source", "falco"},
                         {"event_id", eid},
                         {"ts_ms", ts},
                         {"rule", "TerminalShellInContainer"},
                         {"priority", "error"},
                         {"confidence", 0.9},
                         {"resource", pod},
                         {"subject", random_sa()}};
            s.stream.push_back(payload);
            recur(payload, ts);
        }
    }
};

} // namespace

void inject_scenario(Scenario& s, int count_per_class) {
    if (!s.labels.empty()) fail(Errc::bad_config, "scenario already carries injections");
    if (count_per_class < 0) fail(Errc::bad_config, "count_per_class must be non-negative");
    if (count_per_class == 0) return;
    Injector inj{s, Rng(Rng::derive(s.seed, kInjectSalt)),
                 s.manifest.value("event_counter", uint64_t{0})};
    inj.run(count_per_class);
    sort_stream(s.stream);
    s.manifest["event_counter"] = inj.event_counter;
    // Some classes plant brand-new resources; keep the inventory count true.
    s.manifest["resources"] = s.family.size();
    s.manifest["injections"] =
        json{{"total", count_per_class * int(injection_classes().size())},
             {"per_class", count_per_class}};
}

std::vector<std::string> approve_runtime_subjects(Scenario& s) {
    std::set<ResourceId> runtime_resources;
    for (const auto& l : s.labels)
        if (l.klass == "sa_token_overuse" || l.klass == "suspicious_shell_or_miner")
            runtime_resources.insert(l.resource_id);

    uint64_t counter = s.manifest.value("event_counter", uint64_t{0});
    std::vector<std::string> affected;
    std::vector<json> activities;
    for (const auto& p : s.stream) {
        if (p.value("source", "") != "falco") continue;
        if (!runtime_resources.count(p.value("resource", ""))) continue;
        std::string subject = p.value("subject", "");
        if (subject.empty()) continue;
        const Node* n = s.graph.find_node(subject);
        if (n) {
            Node updated = *n;
            updated.attrs["approved_operator"] = true;
            s.graph.add_node(updated);
        }
        activities.push_back(json{{"source", "activity"},
                                  {"event_id", event_id(++counter)},
                                  {"ts_ms", p.at("ts_ms").get<int64_t>() - 60'000},
                                  {"subject", subject},
                                  {"resource", p.at("resource")}});
        affected.push_back(p.at("event_id").get<std::string>());
    }
    for (auto& a : activities) s.stream.push_back(std::move(a));
    sort_stream(s.stream);
    s.manifest["event_counter"] = counter;
    return affected;
}

// ---- persistence ----

json graph_to_json(const IdentityGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes())
        nodes.push_back(json{{"id", n.id}, {"kind", to_string(n.kind)}, {"attrs", n.attrs}});
    json edges = json::array();
    for (const auto& e : g.edges())
        edges.push_back(
            json{{"from", e.from}, {"to", e.to}, {"kind", to_string(e.kind)}, {"attrs", e.attrs}});
    return json{{"nodes", nodes}, {"edges", edges}, {"generation", g.generation()}};
}

namespace {

NodeKind node_kind_from_string(const std::string& s) {
    for (auto k : {NodeKind::subject, NodeKind::role, NodeKind::resource, NodeKind::ns,
                   NodeKind::project, NodeKind::domain})
        if (to_string(k) == s) return k;
    fail(Errc::parse_error, "unknown node kind: " + s);
}

EdgeKind edge_kind_from_string(const std::string& s) {
    for (auto k :
         {EdgeKind::grants, EdgeKind::ownership, EdgeKind::scope, EdgeKind::recent_activity})
        if (to_string(k) == s) return k;
    fail(Errc::parse_error, "unknown edge kind: " + s);
}

} // namespace

IdentityGraph graph_from_json(const json& j) {
    IdentityGraph g;
    for (const auto& n : j.at("nodes"))
        g.add_node(Node{n.at("id").get<std::string>(),
                        node_kind_from_string(n.at("kind").get<std::string>()),
                        n.value("attrs", json::object())});
    for (const auto& e : j.at("edges"))
        g.add_edge(Edge{e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                        edge_kind_from_string(e.at("kind").get<std::string>()),
                        e.value("attrs", json::object())});
    uint64_t gen = j.value("generation", uint64_t{0});
    for (uint64_t i = 0; i < gen; ++i) g.bump_generation();
    return g;
}

void save_scenario(const Scenario& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const json& j) {
        std::ofstream out(dir / name);
        if (!out) fail(Errc::storage_failure, std::string("cannot write ") + name);
        out << j.dump(2) << '\n';
    };
    json live = json::object();
    for (const auto& [id, doc] : s.live.all()) live[id] = doc;
    json declared = json::object();
    for (const auto& [id, doc] : s.declared.all()) declared[id] = doc;
    json stream = json::array();
    for (const auto& p : s.stream) stream.push_back(p);
    json labels = json::array();
    for (const auto& l : s.labels) labels.push_back(l);
    write("manifest.json",
          json{{"seed", s.seed}, {"scale", s.scale.name}, {"manifest", s.manifest}});
    write("live_state.json", live);
    write("declared_state.json", declared);
    write("family.json", json(s.family));
    write("projects.json", json(s.project_of));
    write("graph.json", graph_to_json(s.graph));
    write("stream.json", stream);
    write("labels.json", labels);
}

Scenario load_scenario(const std::filesystem::path& dir) {
    auto read = [&](const char* name) {
        std::ifstream in(dir / name);
        if (!in) fail(Errc::storage_failure, std::string("cannot read ") + name);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded())
            fail(Errc::parse_error, std::string("corrupt scenario file: ") + name);
        return j;
    };
    json manifest = read("manifest.json");
    Scenario s;
    s.seed = manifest.at("seed").get<uint64_t>();
    s.scale = scale_from_string(manifest.at("scale").get<std::string>());
    s.manifest = manifest.at("manifest");
    // Each file is materialized before items(): the proxy must not outlive
    // the json it iterates.
    const json live = read("live_state.json");
    for (const auto& [id, doc] : live.items()) s.live.put(id, doc);
    const json declared = read("declared_state.json");
    for (const auto& [id, doc] : declared.items()) s.declared.put(id, doc);
    const json family = read("family.json");
    for (const auto& [id, fam] : family.items()) s.family[id] = fam.get<std::string>();
    const json projects = read("projects.json");
    for (const auto& [id, p] : projects.items()) s.project_of[id] = p.get<std::string>();
    s.graph = graph_from_json(read("graph.json"));
    for (const auto& p : read("stream.json")) s.stream.push_back(p);
    for (const auto& l : read("labels.json")) s.labels.push_back(l.get<InjectionLabel>());
    return s;
}

std::vector<LabeledSample> make_calibration_dataset(uint64_t seed, int n) {
    if (n < 4) fail(Errc::bad_config, "calibration dataset needs at least 4 samples");
    Rng rng(Rng::derive(seed, kCalibSalt));
    std::vector<LabeledSample> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        LabeledSample sample;
        sample.risky = i % 2 == 0;
        if (sample.risky) {
            // Config and threat counts are reliable signals; identity sits
            // in the midrange and the mitigation count carries no
            // information either way.
            sample.counts.config_violations = int(6 + rng.bounded(5));
            sample.counts.threat_events = int(6 + rng.bounded(5));
            sample.counts.identity_anomalies = int(3 + rng.bounded(3));
            sample.counts.missing_mitigations = int(rng.bounded(6));
        } else {
            sample.counts.config_violations = int(rng.bounded(5));
            sample.counts.threat_events = int(rng.bounded(5));
            sample.counts.identity_anomalies = int(rng.bounded(2));
            sample.counts.missing_mitigations = int(rng.bounded(6));
        }
        out.push_back(sample);
    }
    return out;
}

const std::string& profile_yaml(const std::string& name) {
    static const std::string baseline = R"(policies:
  - control_id: K8S.PRIV.POD.PRIVILEGED
    severity: high
    applies_to: k8s.pod
    predicate:
      - path: spec.securityContext.privileged
        op: eq
        value: true
    fix_hint: set spec.securityContext.privileged to false
  - control_id: K8S.NET.POD.HOSTNETWORK
    severity: high
    applies_to: k8s.pod
    predicate:
      - path: spec.hostNetwork
        op: eq
        value: true
    fix_hint: set spec.hostNetwork to false
  - control_id: K8S.FS.POD.HOSTPATH
    severity: medium
    applies_to: k8s.pod
    predicate:
      - path: spec.volumes.0.hostPath
        op: exists
    fix_hint: replace hostPath volume with a PVC
  - control_id: K8S.NET.INGRESS.NO-TLS
    severity: medium
    applies_to: k8s.ingress
    predicate:
      - path: tls_enabled
        op: eq
        value: false
    fix_hint: enable TLS on the ingress listener
  - control_id: OS.NET.PUBLIC-NONSTD
    severity: high
    applies_to: os.loadbalancer
    predicate:
      - path: public
        op: eq
        value: true
      - path: listener_port
        op: ne
        value: 443
    fix_hint: apply module network/restrictive
  - control_id: OS.NET.DEFAULT-SG
    severity: high
    applies_to: os.secgroup
    predicate:
      - path: default_open
        op: eq
        value: true
    fix_hint: apply module network/harden-default-sg
  - control_id: OS.NET.FIP.PUBLIC-NONPROD
    severity: medium
    applies_to: os.floating_ip
    predicate:
      - path: public
        op: eq
        value: true
      - path: env
        op: ne
        value: prod
    fix_hint: apply module network/detach-fip
  - control_id: OS.STOR.VOL.UNENCRYPTED
    severity: medium
    applies_to: os.volume
    predicate:
      - path: encrypted
        op: eq
        value: false
    fix_hint: recreate volume with encryption
  - control_id: IAC.NET.OPEN-CIDR
    severity: high
    applies_to: iac.network
    predicate:
      - path: cidr
        op: cidr_eq
        value: 0.0.0.0/0
    fix_hint: apply module network/close-cidr
)";
    static const std::string hardened_extra = R"(  - control_id: K8S.SVC.NODEPORT
    severity: medium
    applies_to: k8s.service
    predicate:
      - path: type
        op: eq
        value: NodePort
    fix_hint: prefer ClusterIP with an ingress route
)";
    static const std::string regulated_extra = R"(  - control_id: IAC.STATE.UNPINNED
    severity: medium
    applies_to: iac.module
    predicate:
      - path: version_pinned
        op: eq
        value: false
    fix_hint: pin the module to a reviewed version
)";
    static const std::string hardened = [] {
        std::string t = baseline + hardened_extra;
        // The hardened posture treats host filesystem and storage
        // exposure as high severity.
        size_t p = t.find("severity: medium\n    applies_to: k8s.pod");
        t.replace(p, 16, "severity: high");
        p = t.find("severity: medium\n    applies_to: os.volume");
        t.replace(p, 16, "severity: high");
        return t;
    }();
    static const std::string regulated = hardened + regulated_extra;
    if (name == "baseline") return baseline;
    if (name == "hardened") return hardened;
    if (name == "regulated") return regulated;
    fail(Errc::invalid_profile, "unknown profile: " + name);
}

} // namespace argus
