#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "argus/identity_graph.hpp"
#include "argus/remediation.hpp"
#include "argus/risk.hpp"
#include "argus/types.hpp"

namespace argus {

/// The replay clock is virtual: 30 days compressed into one pass.
constexpr int64_t kVirtualDayMs = 86'400'000;
constexpr int64_t kReplayWindowMs = 30 * kVirtualDayMs;
constexpr int64_t kScanEpochMs = 3 * kVirtualDayMs; // 10 scan epochs per window
constexpr int kScanEpochs = 10;

struct ScaleSpec {
    std::string name = "desk";
    int node_count = 50;
    int projects = 32;
    int pods_per_node = 25;
    int iac_repos = 18;
    int user_role_assignments = 96;
    int injections = 280;
    int eps_divisor = 100; // desk scale compresses the benign stream
};

/// Accepts "50", "100", "200" or "desk".
ScaleSpec scale_from_string(const std::string& s);

/// Detection surface toggles for the three compared configurations.
struct BaselineConfig {
    std::string name;
    bool runtime_detection = false;
    bool config_scanning_k8s = false;
    bool config_scanning_iac = false;
    bool config_scanning_openstack = false;
    bool identity_correlation = false;
    bool remediation = false;

    static BaselineConfig baseline_a(); // runtime sensor only
    static BaselineConfig baseline_b(); // config scanning only (k8s + iac)
    static BaselineConfig proposed();   // everything on
    static BaselineConfig by_name(const std::string& name);
};

/// Ground-truth row: one per injection. event_id names the synthetic
/// observation payload the injection emitted; later recurrences and scan
/// findings join through (resource_id, control_for_class(class)).
struct InjectionLabel {
    std::string event_id;
    std::string klass; // one of the fourteen injection classes
    ResourceId resource_id;
    int64_t injected_at = 0;
};

void to_json(json& j, const InjectionLabel& l);
void from_json(const json& j, InjectionLabel& l);

/// A generated world: platform state, identity graph, event stream.
struct Scenario {
    uint64_t seed = 1;
    ScaleSpec scale;
    StateStore live;     // running resources (k8s + openstack)
    StateStore declared; // IaC documents
    std::map<ResourceId, std::string> family;     // resource -> family tag
    std::map<ResourceId, std::string> project_of; // resource -> project name
    IdentityGraph graph;
    std::vector<json> stream; // raw adapter payloads, ordered by (ts_ms, event_id)
    std::vector<InjectionLabel> labels;
    json manifest = json::object(); // inventory counts and stream composition
};

/// The fourteen injection class names, in canonical order.
const std::vector<std::string>& injection_classes();

/// The one control a class is detectable by. Unknown class -> bad-config.
ControlId control_for_class(const std::string& klass);

/// Classes detectable only through config scanning (never at runtime).
const std::set<std::string>& config_only_classes();

/// Classes whose detections exist only on the OpenStack side.
const std::set<std::string>& openstack_only_classes();

/// Deterministic world + benign stream for (seed, scale). No injections.
Scenario generate_scenario(uint64_t seed, const ScaleSpec& scale);

/// Adds the labeled injection set: state mutations plus one observation
/// payload per injection (runtime and identity classes also emit one
/// recurrence per later scan epoch). Stream order is restored afterwards.
/// count_per_class beyond a class's distinct-target pool ->
/// class-target-exhausted.
void inject_scenario(Scenario& s, int count_per_class);

/// Marks the subjects behind runtime-class injections as approved
/// operators with fresh activity on the affected resources, so their
/// events score through the downgrade path. Returns affected event ids.
std::vector<std::string> approve_runtime_subjects(Scenario& s);

// ---- persistence (used by the CLI between invocations) ----

void save_scenario(const Scenario& s, const std::filesystem::path& dir);
Scenario load_scenario(const std::filesystem::path& dir);

json graph_to_json(const IdentityGraph& g);
IdentityGraph graph_from_json(const json& j);

/// Deterministic labeled dataset for weight calibration: risky samples
/// carry correlated high counts, benign samples low counts, with the
/// classes separable at theta = 0.5.
std::vector<LabeledSample> make_calibration_dataset(uint64_t seed, int n);

/// Caps used by the calibration dataset and the posture report.
SignalCaps default_signal_caps();

// ---- scan profiles ----

/// Embedded profile YAML by name: baseline, hardened or regulated.
const std::string& profile_yaml(const std::string& name);

} // namespace argus
