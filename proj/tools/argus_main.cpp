// argusctl: one binary for the whole workflow. A workspace directory
// (--out) accumulates the artifacts: gen writes world/, inject adds the
// labeled injections, run appends an evidence log and leaves the
// post-run remediation state in session/, and plan/approve/rollback
// operate on that session across invocations. compare and report manage
// multi-config comparison artifacts in the same directory.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "argus/correlation.hpp"
#include "argus/errors.hpp"
#include "argus/evidence_log.hpp"
#include "argus/remediation.hpp"
#include "argus/replay.hpp"
#include "argus/risk.hpp"
#include "argus/scenario.hpp"
#include "argus/types.hpp"

namespace fs = std::filesystem;
using argus::json;

namespace {

struct Globals {
    uint64_t seed = 1;
    std::string config_file;
    std::string out = "argus-out";
    std::string profile = "baseline";
    std::string scale = "desk";

    fs::path out_dir() const { return fs::path(out); }
};

argus::EngineConfig engine_config(const Globals& g) {
    if (g.config_file.empty()) return argus::EngineConfig::defaults();
    std::ifstream in(g.config_file);
    if (!in)
        argus::fail(argus::Errc::storage_failure, "cannot read config file: " + g.config_file);
    return argus::EngineConfig::from_json(json::parse(in));
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) argus::fail(argus::Errc::storage_failure, "cannot read " + p.string());
    return json::parse(in);
}

void write_json_file(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) argus::fail(argus::Errc::storage_failure, "cannot write " + p.string());
    out << j.dump(2) << '\n';
}

argus::Scenario load_world(const Globals& g) {
    fs::path dir = g.out_dir() / "world";
    if (!fs::exists(dir / "manifest.json"))
        argus::fail(argus::Errc::bad_config,
                    "no world under " + g.out + "; run `gen` (and `inject`) first");
    return argus::load_scenario(dir);
}

// The session holds the world as the last run left it plus the
// orchestrator bookkeeping, so plans and tokens survive between
// invocations. `run` replaces it wholesale.
struct Session {
    fs::path dir;
    argus::Scenario world;
    json orch_state;
};

Session load_session(const Globals& g) {
    Session s;
    s.dir = g.out_dir() / "session";
    if (!fs::exists(s.dir / "orchestrator.json"))
        argus::fail(argus::Errc::bad_config, "no recorded run under " + g.out + "; `run` first");
    s.world = argus::load_scenario(s.dir / "world");
    s.orch_state = read_json_file(s.dir / "orchestrator.json");
    return s;
}

void save_session(Session& s, const argus::Orchestrator& orch) {
    argus::save_scenario(s.world, s.dir / "world");
    write_json_file(s.dir / "orchestrator.json", orch.dump_state());
}

int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Operator actions get their own chained audit log, separate from the
// replay logs, which stay immutable once written.
void append_ops_record(const Globals& g, const std::string& event_id,
                       const argus::ResourceId& resource, const char* control,
                       argus::PostCheck post, std::optional<std::string> token) {
    argus::EvidenceLog log(g.out_dir() / "actions");
    argus::EvidenceRecord r;
    r.event_id = event_id;
    r.resource_id = resource;
    r.control_id = control;
    r.action = argus::ActionKind::log;
    r.post_check = post;
    r.rollback_token = std::move(token);
    r.wrote_at = wall_ms();
    log.append(r);
}

void cat_file(const fs::path& p) {
    std::ifstream in(p);
    std::cout << in.rdbuf();
    std::cout.clear(); // empty file leaves the stream failed; nothing was lost
}

void print_metrics_brief(const json& m) {
    for (const char* k : {"records", "alerts", "tp", "fp", "fpr_pct", "recall_before_triage",
                          "coverage_pct", "cost_reduction_pct", "eps_virtual", "actions"})
        std::cout << "  " << k << ": " << m.at(k).dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"identity-aware correlation and remediation engine, desk-scale workbench"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "Deterministic seed")->capture_default_str();
    app.add_option("--config", g.config_file, "Engine configuration JSON file");
    app.add_option("--out", g.out, "Workspace directory")->capture_default_str();
    app.add_option("--profile", g.profile, "Scan profile")
        ->check(CLI::IsMember({"baseline", "hardened", "regulated"}))
        ->capture_default_str();
    app.add_option("--scale", g.scale, "World scale")
        ->check(CLI::IsMember({"50", "100", "200", "desk"}))
        ->capture_default_str();

    auto* gen = app.add_subcommand(
        "gen", "Generate a deterministic world: platform state, identity graph, benign stream");
    gen->callback([&] {
        argus::Scenario s = argus::generate_scenario(g.seed, argus::scale_from_string(g.scale));
        fs::remove_all(g.out_dir() / "world");
        argus::save_scenario(s, g.out_dir() / "world");
        std::cout << "world written to " << (g.out_dir() / "world").string() << '\n'
                  << s.manifest.dump(2) << '\n';
    });

    int inject_count = 20;
    auto* inject =
        app.add_subcommand("inject", "Add the labeled misconfiguration and threat injections");
    inject->add_option("--count", inject_count, "Injections per class")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inject->callback([&] {
        argus::Scenario s = load_world(g);
        if (!s.labels.empty())
            argus::fail(argus::Errc::bad_config,
                        "world already carries injections; `gen` a fresh one first");
        argus::inject_scenario(s, inject_count);
        argus::save_scenario(s, g.out_dir() / "world");
        std::cout << s.labels.size() << " injections across "
                  << argus::injection_classes().size()
                  << " classes; labels stored with the world\n";
    });

    std::string detection = "proposed";
    auto* run = app.add_subcommand("run", "Replay the world under one detection configuration");
    run->add_option("--detection", detection, "Configuration name")
        ->check(CLI::IsMember({"baseline_a", "baseline_b", "proposed"}))
        ->capture_default_str();
    run->callback([&] {
        argus::Scenario s = load_world(g);
        argus::ReplayOptions ro;
        ro.config = argus::BaselineConfig::by_name(detection);
        ro.profile = g.profile;
        ro.engine = engine_config(g);
        ro.evidence_dir = g.out_dir() / ("run-" + detection);
        fs::remove_all(g.out_dir() / "session"); // the session reflects the latest run only
        ro.state_dir = g.out_dir() / "session";
        argus::ReplayResult res = argus::run_replay(std::move(s), ro);
        fs::path metrics_path = g.out_dir() / ("metrics-" + detection + ".json");
        write_json_file(metrics_path, res.metrics);
        write_json_file(g.out_dir() / "session" / "session.json",
                        json{{"detection", detection},
                             {"profile", g.profile},
                             {"evidence_dir", ro.evidence_dir.string()},
                             {"engine", ro.engine.to_json()}});
        std::cout << "evidence: " << ro.evidence_dir.string() << '\n'
                  << "metrics:  " << metrics_path.string() << '\n';
        print_metrics_brief(res.metrics);
    });

    std::vector<std::string> compare_configs{"baseline_a", "baseline_b", "proposed"};
    int reps = 5, count_per_class = 20;
    auto* cmp = app.add_subcommand(
        "compare", "Replay fresh worlds under several configurations and tabulate the metrics");
    cmp->add_option("--configs", compare_configs,
                    "Configuration names; the last one is the candidate")
        ->delimiter(',')
        ->capture_default_str();
    cmp->add_option("--reps", reps, "Repetitions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmp->add_option("--count", count_per_class, "Injections per class")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmp->callback([&] {
        argus::CompareOptions co;
        co.seed = g.seed;
        co.scale = argus::scale_from_string(g.scale);
        co.repetitions = reps;
        co.count_per_class = count_per_class;
        co.profile = g.profile;
        co.engine = engine_config(g);
        for (const auto& name : compare_configs)
            co.configs.push_back(argus::BaselineConfig::by_name(name));
        co.out_dir = g.out_dir();
        argus::CompareResult res = argus::compare_runs(co);
        std::cout << res.table2_csv.string() << ":\n";
        cat_file(res.table2_csv);
        std::cout << res.figure2_csv.string() << ":\n";
        cat_file(res.figure2_csv);
        std::cout << "also written: " << res.runs_csv.string() << ", "
                  << res.welch_csv.string() << ", summary.json, compare-meta.json\n";
    });

    int samples = 240;
    double theta = 0.5, fpr_cap = 0.05;
    auto* cal = app.add_subcommand(
        "calibrate", "Grid-search risk weights on a labeled synthetic dataset");
    cal->add_option("--samples", samples, "Dataset size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cal->add_option("--theta", theta, "Classification threshold")->capture_default_str();
    cal->add_option("--fpr-cap", fpr_cap, "False-positive-rate cap")->capture_default_str();
    cal->callback([&] {
        std::vector<argus::LabeledSample> ds = argus::make_calibration_dataset(g.seed, samples);
        argus::CalibrationResult r =
            argus::calibrate_weights(ds, argus::default_signal_caps(), theta, fpr_cap);
        json doc{{"weights", r.weights},   {"f1", r.f1},
                 {"fpr", r.fpr},           {"theta", r.theta},
                 {"feasible", r.feasible}, {"grid_size", r.grid_size},
                 {"dataset_digest", r.dataset_digest}};
        fs::create_directories(g.out_dir());
        write_json_file(g.out_dir() / "calibration.json", doc);
        std::cout << doc.dump(2) << '\n';
    });

    auto* rep = app.add_subcommand(
        "report", "Rebuild the comparison CSVs from the evidence logs and label files");
    rep->callback([&] {
        argus::ReportResult r = argus::rebuild_report(g.out_dir());
        std::cout << r.table2_csv.string() << ":\n";
        cat_file(r.table2_csv);
        std::cout << r.figure2_csv.string() << ":\n";
        cat_file(r.figure2_csv);
    });

    std::string who_action, who_resource;
    auto* who =
        app.add_subcommand("who-can", "List subjects whose grants reach (action, resource)");
    who->add_option("action", who_action, "Verb, e.g. delete")->required();
    who->add_option("resource", who_resource, "Resource id")->required();
    who->callback([&] {
        argus::Scenario s = load_world(g);
        for (const auto& subject : s.graph.who_can(who_action, who_resource))
            std::cout << subject << '\n';
    });

    auto* plan = app.add_subcommand("plan", "Inspect remediation plans from the last run");
    plan->require_subcommand(1);
    auto* plan_list = plan->add_subcommand("list", "One line per plan");
    plan_list->callback([&] {
        Session s = load_session(g);
        argus::Orchestrator orch(s.world.live, s.world.declared);
        orch.load_state(s.orch_state);
        if (orch.plans().empty()) {
            std::cout << "no plans\n";
            return;
        }
        for (const auto& [id, p] : orch.plans())
            std::cout << id << "  status=" << argus::to_string(p.status)
                      << (p.applied ? " applied" : "") << "  book=" << p.book_id
                      << "  resource=" << p.resource_id << '\n';
    });
    std::string show_id;
    auto* plan_show = plan->add_subcommand("show", "Full plan artifact as JSON");
    plan_show->add_option("plan_id", show_id, "Plan id")->required();
    plan_show->callback([&] {
        Session s = load_session(g);
        argus::Orchestrator orch(s.world.live, s.world.declared);
        orch.load_state(s.orch_state);
        auto it = orch.plans().find(show_id);
        if (it == orch.plans().end())
            argus::fail(argus::Errc::target_not_found, "unknown plan: " + show_id);
        std::cout << json(it->second).dump(2) << '\n';
    });

    std::string approve_id;
    auto* approve = app.add_subcommand("approve", "Approve a pending plan and apply it");
    approve->add_option("plan_id", approve_id, "Plan id")->required();
    approve->callback([&] {
        Session s = load_session(g);
        argus::Orchestrator orch(s.world.live, s.world.declared);
        orch.load_state(s.orch_state);
        argus::ExecResult res = orch.approve_plan(approve_id);
        save_session(s, orch);
        append_ops_record(g, "op-approve-" + approve_id,
                          orch.plans().at(approve_id).resource_id, "OPS.PLAN.APPROVED",
                          res.post_check, res.rollback_token);
        std::cout << approve_id
                  << " approved and applied; post_check=" << argus::to_string(res.post_check)
                  << '\n';
        if (res.rollback_token) std::cout << "rollback token: " << *res.rollback_token << '\n';
    });

    std::string rollback_token;
    auto* rollback =
        app.add_subcommand("rollback", "Redeem a rollback token; restores the pre-patch document");
    rollback->add_option("token", rollback_token, "Token from a patch record")->required();
    rollback->callback([&] {
        Session s = load_session(g);
        argus::Orchestrator orch(s.world.live, s.world.declared);
        orch.load_state(s.orch_state);
        auto it = orch.tokens().find(rollback_token);
        std::string resource = it != orch.tokens().end() ? it->second.resource_id : "unknown";
        orch.rollback(rollback_token);
        save_session(s, orch);
        append_ops_record(g, "op-rollback-" + rollback_token, resource,
                          "OPS.ROLLBACK.REDEEMED", argus::PostCheck::not_applicable,
                          rollback_token);
        std::cout << resource << " restored to its pre-patch document\n";
    });

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify-log", "Recompute an evidence log's digest chain");
    verify->add_option("dir", verify_dir, "Evidence log directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    verify->callback([&] {
        argus::VerifyResult r = argus::EvidenceLog(verify_dir).verify();
        if (!r.ok)
            argus::fail(argus::Errc::storage_failure,
                        "chain broken at sequence " + std::to_string(*r.first_bad_seq));
        std::cout << "ok: " << r.entries << " entries verified\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // --help exits clean; anything else is a usage error
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
