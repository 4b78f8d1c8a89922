#include "argus/remediation.hpp"

#include <algorithm>
#include <regex>

#include <yaml-cpp/yaml.h>

#include "argus/evidence_log.hpp" // sha256_hex

namespace argus {

namespace {

/// Rewrites `{{ name with spaces }}` tokens to the canonical quoted
/// `"{{name_with_spaces}}"` form so the text parses as YAML. Tokens that
/// are already quoted just get their name canonicalized.
std::string preprocess_templates(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        size_t open = text.find("{{", i);
        if (open == std::string::npos) {
            out.append(text, i, std::string::npos);
            break;
        }
        size_t close = text.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(text, i, std::string::npos);
            break;
        }
        out.append(text, i, open - i);
        std::string inner = text.substr(open + 2, close - open - 2);
        size_t b = inner.find_first_not_of(" \t");
        size_t e = inner.find_last_not_of(" \t");
        std::string name = b == std::string::npos ? "" : inner.substr(b, e - b + 1);
        std::replace(name.begin(), name.end(), ' ', '_');
        bool quoted = open > 0 && close + 2 < text.size() &&
                      ((text[open - 1] == '"' && text[close + 2] == '"') ||
                       (text[open - 1] == '\'' && text[close + 2] == '\''));
        if (quoted)
            out += "{{" + name + "}}";
        else
            out += "\"{{" + name + "}}\"";
        i = close + 2;
    }
    return out;
}

std::string canonical_key(std::string k) {
    std::replace(k.begin(), k.end(), ' ', '_');
    return k;
}

json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
    case YAML::NodeType::Null: return nullptr;
    case YAML::NodeType::Scalar: {
        const std::string& s = n.Scalar();
        if (n.Tag() == "!") return s;
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

const std::set<std::string>& template_names() {
    static const std::set<std::string> names{"resource_id", "project_id"};
    return names;
}

/// Collects {{name}} tokens from every string leaf.
void collect_template_names(const json& j, std::set<std::string>& out) {
    if (j.is_string()) {
        static const std::regex re(R"(\{\{([A-Za-z_]+)\}\})");
        const std::string s = j.get<std::string>();
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re);
             it != std::sregex_iterator(); ++it)
            out.insert((*it)[1].str());
    } else if (j.is_object() || j.is_array()) {
        for (const auto& v : j) collect_template_names(v, out);
    }
}

Source source_alias(const std::string& s, std::vector<Source>& out) {
    if (s == "cbe") {
        out.insert(out.end(), {Source::admission, Source::iac_scan, Source::live_scan});
        return Source::admission;
    }
    if (s == "rtm") {
        out.push_back(Source::runtime);
        return Source::runtime;
    }
    if (s == "ias") {
        out.push_back(Source::identity);
        return Source::identity;
    }
    Source v = source_from_string(s);
    out.push_back(v);
    return v;
}

std::string dry_run_key(const std::string& book_id, const ResourceId& resource) {
    return book_id + "\x1f" + resource;
}

} // namespace

bool patch_is_boolean_only(const json& payload) {
    if (payload.is_boolean()) return true;
    if (payload.is_object()) {
        for (const auto& [_, v] : payload.items())
            if (!patch_is_boolean_only(v)) return false;
        return true;
    }
    return false;
}

const std::set<std::string>& terraform_modules() {
    static const std::set<std::string> mods{
        "network/restrictive",      "network/close-cidr", "network/harden-default-sg",
        "network/detach-fip",       "identity/rotate-sa-token",
    };
    return mods;
}

std::vector<Playbook> parse_playbooks(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(preprocess_templates(yaml_text));
    } catch (const YAML::Exception& e) {
        fail(Errc::parse_error, std::string("playbook is not valid YAML: ") + e.what());
    }
    if (!root.IsSequence()) fail(Errc::parse_error, "playbooks must be a sequence");

    std::vector<Playbook> out;
    std::set<std::string> ids;
    for (const auto& bn : root) {
        Playbook b;
        if (!bn["id"]) fail(Errc::parse_error, "playbook missing id");
        b.id = bn["id"].as<std::string>();
        if (!ids.insert(b.id).second) fail(Errc::parse_error, "duplicate playbook id: " + b.id);

        if (bn["when"]) {
            if (!bn["when"].IsMap()) fail(Errc::parse_error, "when must be a map: " + b.id);
            for (const auto& kv : bn["when"]) {
                std::string key = canonical_key(kv.first.as<std::string>());
                if (key == "control_id") {
                    if (kv.second.IsSequence())
                        for (const auto& c : kv.second)
                            b.when.controls.push_back(c.as<std::string>());
                    else
                        b.when.controls.push_back(kv.second.as<std::string>());
                } else if (key == "severity") {
                    b.when.min_severity = severity_from_string(kv.second.as<std::string>());
                } else if (key == "source") {
                    std::vector<Source> srcs;
                    if (kv.second.IsSequence())
                        for (const auto& s : kv.second) source_alias(s.as<std::string>(), srcs);
                    else
                        source_alias(kv.second.as<std::string>(), srcs);
                    b.when.sources = std::move(srcs);
                } else {
                    fail(Errc::parse_error, "unknown when field: " + key);
                }
            }
        }

        if (!bn["do"] || !bn["do"].IsSequence() || bn["do"].size() == 0)
            fail(Errc::parse_error, "playbook needs a do sequence: " + b.id);
        for (const auto& sn : bn["do"]) {
            if (!sn.IsMap() || sn.size() != 1)
                fail(Errc::unknown_step_type, "step must be a single-key map in " + b.id);
            std::string type = sn.begin()->first.as<std::string>();
            const YAML::Node& body = sn.begin()->second;
            Step step;
            if (type == "k8s.patch") {
                step.type = StepType::k8s_patch;
                if (!body["payload"])
                    fail(Errc::parse_error, "k8s.patch needs a payload in " + b.id);
                step.payload = yaml_to_json(body["payload"]);
                step.destructive = !patch_is_boolean_only(step.payload);
            } else if (type == "terraform.apply") {
                step.type = StepType::terraform_apply;
                if (!body["module"])
                    fail(Errc::parse_error, "terraform.apply needs a module in " + b.id);
                step.module = body["module"].as<std::string>();
                if (!terraform_modules().count(step.module))
                    fail(Errc::unknown_step_type, "unknown terraform module: " + step.module);
                if (body["vars"]) step.vars = yaml_to_json(body["vars"]);
                step.destructive = true;
                b.targets_iac = true;
            } else if (type == "elastic.log") {
                step.type = StepType::elastic_log;
                if (!body["message"])
                    fail(Errc::parse_error, "elastic.log needs a message in " + b.id);
                step.message = body["message"].as<std::string>();
            } else {
                fail(Errc::unknown_step_type, "unknown step type: " + type);
            }
            std::set<std::string> names;
            collect_template_names(step.vars, names);
            collect_template_names(step.payload, names);
            for (const auto& n : names)
                if (!template_names().count(n))
                    fail(Errc::unknown_template_variable, "unknown template variable: " + n);
            b.destructive = b.destructive || step.destructive;
            b.steps.push_back(std::move(step));
        }
        out.push_back(std::move(b));
    }
    return out;
}

const std::vector<Playbook>& builtin_playbooks() {
    static const std::vector<Playbook> books = parse_playbooks(R"(
- id: k8s-fix-privileged
  when: { control_id: K8S.PRIV.POD.PRIVILEGED }
  do:
    - k8s.patch:
        payload: { spec: { securityContext: { privileged: false } } }
    - elastic.log:
        message: "Privileged pod patched automatically"
- id: k8s-fix-hostnetwork
  when: { control_id: K8S.NET.POD.HOSTNETWORK }
  do:
    - k8s.patch:
        payload: { spec: { hostNetwork: false } }
    - elastic.log:
        message: "Host-network pod patched automatically"
- id: os-close-public-lb
  when: { control id: OS.NET.PUBLIC-NONSTD, severity: high }
  do:
    - terraform.apply:
        module: network/restrictive
        vars: { project: {{ project id }} }
- id: os-harden-default-sg
  when: { control id: OS.NET.DEFAULT-SG, severity: high }
  do:
    - terraform.apply:
        module: network/harden-default-sg
        vars: { project: {{ project id }} }
- id: os-detach-public-fip
  when: { control id: OS.NET.FIP.PUBLIC-NONPROD }
  do:
    - terraform.apply:
        module: network/detach-fip
        vars: { project: {{ project id }}, target: {{ resource_id }} }
- id: iac-close-open-cidr
  when: { control_id: IAC.NET.OPEN-CIDR }
  do:
    - terraform.apply:
        module: network/close-cidr
        vars: { target: {{ resource_id }} }
- id: id-rotate-sa-token
  when: { control_id: RT.ID.SA-TOKEN-OVERUSE }
  do:
    - terraform.apply:
        module: identity/rotate-sa-token
        vars: { target: {{ resource_id }} }
)");
    return books;
}

const Playbook* match_playbook(const NormalizedEvent& e, const std::vector<Playbook>& books) {
    for (const auto& b : books) {
        if (!b.when.controls.empty() &&
            std::find(b.when.controls.begin(), b.when.controls.end(), e.control_id) ==
                b.when.controls.end())
            continue;
        if (b.when.min_severity && compare_severity(e.severity, *b.when.min_severity) < 0)
            continue;
        if (!b.when.sources.empty() &&
            std::find(b.when.sources.begin(), b.when.sources.end(), e.source) ==
                b.when.sources.end())
            continue;
        return &b;
    }
    return nullptr;
}

// ---- StateStore ----

const json& StateStore::get(const ResourceId& id) const {
    auto it = docs_.find(id);
    if (it == docs_.end()) fail(Errc::target_not_found, "no such resource: " + id);
    return it->second;
}

void StateStore::put(const ResourceId& id, json doc) {
    json before = docs_.count(id) ? docs_[id] : json(nullptr);
    if (hook_) hook_(id, before, doc);
    docs_[id] = std::move(doc);
}

std::string StateStore::digest() const {
    json whole = json::object();
    for (const auto& [id, doc] : docs_) whole[id] = doc;
    return sha256_hex(canonical_line(whole));
}

// ---- plans / tokens ----

std::string to_string(PlanStatus s) {
    switch (s) {
    case PlanStatus::pending: return "pending";
    case PlanStatus::approved: return "approved";
    case PlanStatus::rejected: return "rejected";
    }
    fail(Errc::out_of_range, "plan status out of range");
}

PlanStatus plan_status_from_string(const std::string& s) {
    if (s == "pending") return PlanStatus::pending;
    if (s == "approved") return PlanStatus::approved;
    if (s == "rejected") return PlanStatus::rejected;
    fail(Errc::parse_error, "unknown plan status: " + s);
}

void to_json(json& j, const PlanArtifact& p) {
    j = json{{"plan_id", p.plan_id},   {"book_id", p.book_id},
             {"resource_id", p.resource_id}, {"event_id", p.event_id},
             {"vars", p.vars},         {"changes", p.changes},
             {"status", to_string(p.status)}, {"applied", p.applied},
             {"created_at", p.created_at}};
}

void from_json(const json& j, PlanArtifact& p) {
    j.at("plan_id").get_to(p.plan_id);
    j.at("book_id").get_to(p.book_id);
    j.at("resource_id").get_to(p.resource_id);
    j.at("event_id").get_to(p.event_id);
    p.vars = j.at("vars");
    p.changes = j.at("changes");
    p.status = plan_status_from_string(j.at("status").get<std::string>());
    j.at("applied").get_to(p.applied);
    j.at("created_at").get_to(p.created_at);
}

void to_json(json& j, const RollbackToken& t) {
    j = json{{"token", t.token},
             {"resource_id", t.resource_id},
             {"pre_state", t.pre_state},
             {"redeemed", t.redeemed}};
}

void from_json(const json& j, RollbackToken& t) {
    j.at("token").get_to(t.token);
    j.at("resource_id").get_to(t.resource_id);
    t.pre_state = j.at("pre_state");
    j.at("redeemed").get_to(t.redeemed);
}

// ---- Orchestrator ----

Orchestrator::Orchestrator(StateStore& live, StateStore& declared)
    : live_(live), declared_(declared) {}

json Orchestrator::resolve_vars(const json& vars, const NormalizedEvent& e) const {
    json resolved = vars.is_null() ? json::object() : vars;
    std::map<std::string, std::string> ctx{{"resource_id", e.resource_id}};
    std::string project;
    if (e.evidence.is_object()) {
        project = e.evidence.value("project_id", "");
        if (project.empty() && e.evidence.contains("details") &&
            e.evidence.at("details").is_object())
            project = e.evidence.at("details").value("project_id", "");
    }
    if (!project.empty()) ctx["project_id"] = project;

    std::function<void(json&)> walk = [&](json& node) {
        if (node.is_string()) {
            std::string s = node.get<std::string>();
            static const std::regex re(R"(\{\{([A-Za-z_]+)\}\})");
            std::smatch m;
            std::string result;
            std::string rest = s;
            while (std::regex_search(rest, m, re)) {
                std::string name = m[1].str();
                if (!template_names().count(name))
                    fail(Errc::unknown_template_variable, "unknown template variable: " + name);
                auto it = ctx.find(name);
                if (it == ctx.end())
                    fail(Errc::template_unresolved,
                         "no value for template variable: " + name);
                result += m.prefix().str() + it->second;
                rest = m.suffix().str();
            }
            result += rest;
            node = result;
        } else if (node.is_object() || node.is_array()) {
            for (auto& v : node) walk(v);
        }
    };
    walk(resolved);
    return resolved;
}

json Orchestrator::apply_module(const std::string& module, const json& doc,
                                const json& /*vars*/) const {
    json d = doc;
    if (module == "network/restrictive") {
        d["public"] = false;
        d["listener_port"] = 443;
    } else if (module == "network/close-cidr") {
        d["cidr"] = "10.0.0.0/8";
    } else if (module == "network/harden-default-sg") {
        d["default_open"] = false;
        d["ingress_all"] = false;
    } else if (module == "network/detach-fip") {
        d["public"] = false;
        d["attached"] = false;
    } else if (module == "identity/rotate-sa-token") {
        d["token_age_days"] = 0;
        d["overused"] = false;
    } else {
        fail(Errc::unknown_step_type, "unknown terraform module: " + module);
    }
    d["managed_by"] = "terraform";
    return d;
}

ExecResult Orchestrator::execute(const Playbook& book, const NormalizedEvent& e, ExecMode mode,
                                 bool approval) {
    if (mode == ExecMode::dry_run) {
        // Pure: computes diffs and mints the plan artifact, touches no state.
        json changes = json::array();
        json resolved_vars = json::object();
        for (const auto& step : book.steps) {
            switch (step.type) {
            case StepType::k8s_patch: {
                const json& before = live_.get(e.resource_id);
                json after = before;
                after.merge_patch(step.payload);
                changes.push_back(json{{"step", "k8s.patch"},
                                       {"target", e.resource_id},
                                       {"before", before},
                                       {"after", after}});
                break;
            }
            case StepType::terraform_apply: {
                json vars = resolve_vars(step.vars, e);
                for (const auto& [k, v] : vars.items()) resolved_vars[k] = v;
                json change{{"step", "terraform.apply"}, {"module", step.module}, {"vars", vars}};
                if (declared_.has(e.resource_id)) {
                    change["declared_before"] = declared_.get(e.resource_id);
                    change["declared_after"] =
                        apply_module(step.module, declared_.get(e.resource_id), vars);
                }
                if (live_.has(e.resource_id)) {
                    change["live_before"] = live_.get(e.resource_id);
                    change["live_after"] =
                        apply_module(step.module, live_.get(e.resource_id), vars);
                }
                if (!declared_.has(e.resource_id) && !live_.has(e.resource_id))
                    fail(Errc::target_not_found, "no such resource: " + e.resource_id);
                changes.push_back(std::move(change));
                break;
            }
            case StepType::elastic_log:
                changes.push_back(json{{"step", "elastic.log"}, {"message", step.message}});
                break;
            }
        }
        dry_runs_.insert(dry_run_key(book.id, e.resource_id));
        ExecResult res;
        res.detail = json{{"mode", "dry_run"}, {"changes", changes}};
        if (book.targets_iac) {
            PlanArtifact plan;
            plan.plan_id = "plan-" + std::to_string(++plan_counter_);
            plan.book_id = book.id;
            plan.resource_id = e.resource_id;
            plan.event_id = e.event_id;
            plan.vars = resolved_vars;
            plan.changes = changes;
            plan.created_at = e.timestamp;
            plans_[plan.plan_id] = plan;
            plan_events_[plan.plan_id] = e;
            res.plan_id = plan.plan_id;
        }
        return res;
    }

    // Apply mode. The gate is atomic: reject before any step runs.
    if ((book.destructive || book.targets_iac) && !approval)
        fail(Errc::approval_required, "destructive playbook needs approval: " + book.id);
    for (const auto& step : book.steps)
        if (step.type == StepType::terraform_apply &&
            !dry_runs_.count(dry_run_key(book.id, e.resource_id)))
            fail(Errc::no_prior_dry_run, "terraform.apply without prior dry run: " + book.id);

    ExecResult res;
    json detail_steps = json::array();
    for (const auto& step : book.steps) {
        switch (step.type) {
        case StepType::k8s_patch: {
            const json before = live_.get(e.resource_id);
            json after = before;
            after.merge_patch(step.payload);
            live_.put(e.resource_id, after);
            RollbackToken token;
            token.token = "rbt-" + std::to_string(++token_counter_);
            token.resource_id = e.resource_id;
            token.pre_state = before;
            tokens_[token.token] = token;
            res.rollback_token = token.token;
            detail_steps.push_back(
                json{{"step", "k8s.patch"}, {"target", e.resource_id}, {"token", token.token}});
            break;
        }
        case StepType::terraform_apply: {
            json vars = resolve_vars(step.vars, e);
            bool any = false;
            if (declared_.has(e.resource_id)) {
                declared_.put(e.resource_id,
                              apply_module(step.module, declared_.get(e.resource_id), vars));
                any = true;
            }
            if (live_.has(e.resource_id)) {
                live_.put(e.resource_id,
                          apply_module(step.module, live_.get(e.resource_id), vars));
                any = true;
            }
            if (!any) fail(Errc::target_not_found, "no such resource: " + e.resource_id);
            detail_steps.push_back(
                json{{"step", "terraform.apply"}, {"module", step.module}, {"vars", vars}});
            break;
        }
        case StepType::elastic_log:
            detail_steps.push_back(json{{"step", "elastic.log"}, {"message", step.message}});
            break;
        }
    }
    res.detail = json{{"mode", "apply"}, {"steps", detail_steps}};
    if (cleared_) {
        const json& doc = live_.has(e.resource_id) ? live_.get(e.resource_id)
                                                   : declared_.get(e.resource_id);
        res.post_check = cleared_(e.control_id, doc) ? PostCheck::passed : PostCheck::failed;
    }
    return res;
}

json Orchestrator::rollback(const std::string& token) {
    auto it = tokens_.find(token);
    if (it == tokens_.end()) fail(Errc::target_not_found, "unknown rollback token: " + token);
    if (it->second.redeemed)
        fail(Errc::already_redeemed, "rollback token already redeemed: " + token);
    if (!live_.has(it->second.resource_id))
        fail(Errc::resource_missing, "rollback target is gone: " + it->second.resource_id);
    live_.put(it->second.resource_id, it->second.pre_state);
    it->second.redeemed = true;
    return it->second.pre_state;
}

ExecResult Orchestrator::approve_plan(const std::string& plan_id) {
    auto it = plans_.find(plan_id);
    if (it == plans_.end()) fail(Errc::target_not_found, "unknown plan: " + plan_id);
    PlanArtifact& plan = it->second;
    if (plan.status == PlanStatus::rejected)
        fail(Errc::bad_config, "plan was rejected: " + plan_id);
    if (plan.applied) fail(Errc::bad_config, "plan already applied: " + plan_id);
    const Playbook* book = nullptr;
    for (const auto& b : builtin_playbooks())
        if (b.id == plan.book_id) book = &b;
    if (!book) fail(Errc::target_not_found, "plan references unknown playbook: " + plan.book_id);
    auto ev = plan_events_.find(plan_id);
    if (ev == plan_events_.end())
        fail(Errc::target_not_found, "plan has no stored event: " + plan_id);
    plan.status = PlanStatus::approved;
    ExecResult res = execute(*book, ev->second, ExecMode::apply, true);
    plan.applied = true;
    return res;
}

void Orchestrator::reject_plan(const std::string& plan_id) {
    auto it = plans_.find(plan_id);
    if (it == plans_.end()) fail(Errc::target_not_found, "unknown plan: " + plan_id);
    if (it->second.applied) fail(Errc::bad_config, "plan already applied: " + plan_id);
    it->second.status = PlanStatus::rejected;
}

void Orchestrator::load_state(const json& j) {
    plans_.clear();
    tokens_.clear();
    plan_events_.clear();
    dry_runs_.clear();
    for (const auto& p : j.value("plans", json::array()))
        plans_[p.at("plan_id").get<std::string>()] = p.get<PlanArtifact>();
    for (const auto& t : j.value("tokens", json::array()))
        tokens_[t.at("token").get<std::string>()] = t.get<RollbackToken>();
    // Materialized first: items() would dangle on the value() temporary.
    const json events = j.value("plan_events", json::object());
    for (const auto& [k, v] : events.items()) plan_events_[k] = v.get<NormalizedEvent>();
    for (const auto& d : j.value("dry_runs", json::array()))
        dry_runs_.insert(d.get<std::string>());
    token_counter_ = j.value("token_counter", uint64_t{0});
    plan_counter_ = j.value("plan_counter", uint64_t{0});
}

json Orchestrator::dump_state() const {
    json plans = json::array();
    for (const auto& [_, p] : plans_) plans.push_back(p);
    json tokens = json::array();
    for (const auto& [_, t] : tokens_) tokens.push_back(t);
    json events = json::object();
    for (const auto& [k, e] : plan_events_) events[k] = e;
    json dry = json::array();
    for (const auto& d : dry_runs_) dry.push_back(d);
    return json{{"plans", plans},
                {"tokens", tokens},
                {"plan_events", events},
                {"dry_runs", dry},
                {"token_counter", token_counter_},
                {"plan_counter", plan_counter_}};
}

} // namespace argus
