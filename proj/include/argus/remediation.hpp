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

// ---- playbooks ----

struct WhenClause {
    std::vector<ControlId> controls;      // empty = any; otherwise match any listed
    std::optional<Severity> min_severity; // inclusive lower bound
    std::vector<Source> sources;          // empty = any
};

enum class StepType { k8s_patch, terraform_apply, elastic_log };

struct Step {
    StepType type = StepType::elastic_log;
    json payload;        // k8s.patch: RFC 7396 merge-patch body
    std::string module;  // terraform.apply
    json vars;           // terraform.apply: values may hold {{resource_id}}/{{project_id}}
    std::string message; // elastic.log
    bool destructive = false;
};

struct Playbook {
    std::string id;
    WhenClause when;
    std::vector<Step> steps;
    bool destructive = false; // any step destructive
    bool targets_iac = false; // any terraform.apply step
};

/// Parses one or more playbooks from YAML. Accepts both `control_id`
/// and `control id` key spellings and both `{{ project_id }}` and
/// `{{ project id }}` template spellings; everything is canonicalized
/// to the underscore form. Unknown step type -> unknown-step-type;
/// template variables other than resource_id/project_id ->
/// unknown-template-variable.
std::vector<Playbook> parse_playbooks(const std::string& yaml_text);

/// The built-in remediation set used by the simulated platforms.
const std::vector<Playbook>& builtin_playbooks();

/// First playbook (list order) whose when-clause matches. Source
/// aliases: cbe = {admission, iac_scan, live_scan}, rtm = {runtime},
/// ias = {identity}.
const Playbook* match_playbook(const NormalizedEvent& e, const std::vector<Playbook>& books);

// ---- state ----

/// Resource documents keyed by id. The write hook observes every
/// mutation, which is how tests prove the approval gate is atomic.
class StateStore {
public:
    using WriteHook =
        std::function<void(const ResourceId&, const json& before, const json& after)>;

    bool has(const ResourceId& id) const { return docs_.count(id) > 0; }
    const json& get(const ResourceId& id) const;
    void put(const ResourceId& id, json doc);
    const std::map<ResourceId, json>& all() const { return docs_; }
    /// Digest over the canonical form of the whole store.
    std::string digest() const;
    void set_write_hook(WriteHook hook) { hook_ = std::move(hook); }

private:
    std::map<ResourceId, json> docs_;
    WriteHook hook_;
};

// ---- execution ----

enum class ExecMode { dry_run, apply };
enum class PlanStatus { pending, approved, rejected };

std::string to_string(PlanStatus s);
PlanStatus plan_status_from_string(const std::string& s);

struct PlanArtifact {
    std::string plan_id;
    std::string book_id;
    ResourceId resource_id;
    std::string event_id;
    json vars = json::object();    // fully resolved template variables
    json changes = json::array();  // per-step would-be diffs
    PlanStatus status = PlanStatus::pending;
    bool applied = false;          // invariant: applied implies approved
    int64_t created_at = 0;
};

void to_json(json& j, const PlanArtifact& p);
void from_json(const json& j, PlanArtifact& p);

struct RollbackToken {
    std::string token;
    ResourceId resource_id;
    json pre_state;       // byte-exact document before the patch
    bool redeemed = false;
};

void to_json(json& j, const RollbackToken& t);
void from_json(const json& j, RollbackToken& t);

struct ExecResult {
    PostCheck post_check = PostCheck::not_applicable;
    std::optional<std::string> rollback_token; // set when a patch executed
    std::optional<std::string> plan_id;        // set when a plan artifact was created
    json detail = json::object();
};

/// True when the control's violation is gone from the document.
using ClearedCheckFn = std::function<bool(const ControlId&, const json& doc)>;

/// Executes playbooks against the simulated platform state.
/// The approval gate is atomic: a destructive or terraform-bearing book
/// without approval is rejected before any step runs or any state is
/// touched. terraform.apply additionally demands a prior dry-run of the
/// same (book, resource) pair.
class Orchestrator {
public:
    Orchestrator(StateStore& live, StateStore& declared);

    ExecResult execute(const Playbook& book, const NormalizedEvent& e, ExecMode mode,
                       bool approval);

    /// Restores the pre-patch document byte-exact. A token redeems once.
    json rollback(const std::string& token);

    /// Flips a pending plan to approved and applies it.
    ExecResult approve_plan(const std::string& plan_id);
    void reject_plan(const std::string& plan_id);

    const std::map<std::string, PlanArtifact>& plans() const { return plans_; }
    const std::map<std::string, RollbackToken>& tokens() const { return tokens_; }

    void set_cleared_check(ClearedCheckFn fn) { cleared_ = std::move(fn); }

    /// Restores persisted bookkeeping (used by the CLI between runs).
    void load_state(const json& j);
    json dump_state() const;

private:
    StateStore& live_;
    StateStore& declared_;
    std::map<std::string, PlanArtifact> plans_;
    std::map<std::string, RollbackToken> tokens_;
    std::map<std::string, NormalizedEvent> plan_events_; // plan_id -> triggering event
    std::set<std::string> dry_runs_; // book_id + "\x1f" + resource_id
    uint64_t token_counter_ = 0;
    uint64_t plan_counter_ = 0;
    ClearedCheckFn cleared_;

    json resolve_vars(const json& vars, const NormalizedEvent& e) const;
    json apply_module(const std::string& module, const json& doc, const json& vars) const;
    ExecResult run_steps(const Playbook& book, const NormalizedEvent& e, bool approval);
};

/// True when every leaf of the merge-patch body is a boolean; such
/// patches only toggle flags and are treated as reversible in place.
bool patch_is_boolean_only(const json& payload);

/// Module names terraform.apply accepts.
const std::set<std::string>& terraform_modules();

} // namespace argus
