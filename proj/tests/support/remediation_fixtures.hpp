#pragma once

// Randomized playbook/document generators for the gating and rollback
// properties, shared between the remediation unit tests and the
// acceptance run.

#include <string>
#include <vector>

#include "argus/remediation.hpp"
#include "argus/rng.hpp"

namespace argus::testsupport {

inline NormalizedEvent mk_target_event(const std::string& resource,
                                       const std::string& control = "T.E.ST") {
    NormalizedEvent e;
    e.event_id = "ev-1";
    e.timestamp = 1000;
    e.resource_id = resource;
    e.control_id = control;
    e.severity = Severity::high;
    e.priority = Priority::error;
    e.evidence = json{{"project_id", "p-0"}};
    return e;
}

inline Playbook random_book(Rng& rng) {
    Playbook b;
    b.id = "rand";
    b.when.controls = {"T.E.ST"};
    int n_steps = 1 + int(rng.bounded(3));
    const std::vector<std::string> modules(terraform_modules().begin(),
                                           terraform_modules().end());
    for (int i = 0; i < n_steps; ++i) {
        Step s;
        switch (rng.bounded(4)) {
        case 0:
            s.type = StepType::k8s_patch;
            s.payload = json{{"spec", {{"privileged", false}}}};
            s.destructive = false;
            break;
        case 1:
            s.type = StepType::k8s_patch;
            s.payload = json{{"spec", {{"replicas", 0}}}}; // non-boolean leaf
            s.destructive = true;
            break;
        case 2:
            s.type = StepType::terraform_apply;
            s.module = modules[rng.bounded(modules.size())];
            s.vars = json{{"target", "{{resource_id}}"}};
            s.destructive = true;
            b.targets_iac = true;
            break;
        default:
            s.type = StepType::elastic_log;
            s.message = "noted";
            break;
        }
        b.destructive = b.destructive || s.destructive;
        b.steps.push_back(std::move(s));
    }
    return b;
}

inline json random_doc(Rng& rng) {
    json doc{{"spec", json::object()}, {"meta", json::object()}};
    const std::vector<std::string> keys{"privileged", "hostNetwork", "readOnly", "frozen"};
    for (const auto& k : keys)
        if (rng.chance(0.7)) doc["spec"][k] = rng.chance(0.5);
    doc["meta"]["gen"] = int(rng.bounded(100));
    if (rng.chance(0.5)) doc["meta"]["zone"] = "z" + std::to_string(rng.bounded(4));
    return doc;
}

inline json random_bool_patch(Rng& rng) {
    json patch{{"spec", json::object()}};
    const std::vector<std::string> keys{"privileged", "hostNetwork", "readOnly", "frozen",
                                        "brandNew"};
    for (const auto& k : keys)
        if (rng.chance(0.4)) patch["spec"][k] = rng.chance(0.5);
    return patch;
}

} // namespace argus::testsupport
