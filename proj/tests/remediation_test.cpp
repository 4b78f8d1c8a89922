#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "argus/remediation.hpp"
#include "argus/rng.hpp"
#include "support/remediation_fixtures.hpp"

namespace argus {
namespace {

using testsupport::random_book;
using testsupport::random_bool_patch;
using testsupport::random_doc;

NormalizedEvent mk_event(const std::string& resource, const std::string& control = "T.E.ST") {
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

TEST(PatchShape, BooleanOnlyDetection) {
    EXPECT_TRUE(patch_is_boolean_only(json{{"spec", {{"privileged", false}}}}));
    EXPECT_TRUE(patch_is_boolean_only(json{{"a", true}, {"b", {{"c", false}}}}));
    EXPECT_TRUE(patch_is_boolean_only(json::object()));
    EXPECT_FALSE(patch_is_boolean_only(json{{"replicas", 0}}));
    EXPECT_FALSE(patch_is_boolean_only(json{{"cmd", "rm"}}));
    EXPECT_FALSE(patch_is_boolean_only(json{{"list", json::array({true})}}));
}

TEST(ParsePlaybooks, AcceptsBothKeyAndTemplateSpellings) {
    auto books = parse_playbooks(R"(
- id: underscore-form
  when: { control_id: A.B.C, severity: high, source: rtm }
  do:
    - terraform.apply:
        module: network/close-cidr
        vars: { target: {{resource_id}} }
- id: space-form
  when: { control id: D.E.F }
  do:
    - terraform.apply:
        module: network/detach-fip
        vars: { project: {{ project id }} }
)");
    ASSERT_EQ(books.size(), 2u);
    EXPECT_EQ(books[0].when.controls, std::vector<ControlId>{"A.B.C"});
    EXPECT_EQ(*books[0].when.min_severity, Severity::high);
    EXPECT_EQ(books[0].when.sources, std::vector<Source>{Source::runtime});
    EXPECT_TRUE(books[0].targets_iac);
    EXPECT_TRUE(books[0].destructive);
    EXPECT_EQ(books[0].steps[0].vars.at("target"), "{{resource_id}}");
    // The spaced spellings canonicalize to the underscore form.
    EXPECT_EQ(books[1].when.controls, std::vector<ControlId>{"D.E.F"});
    EXPECT_EQ(books[1].steps[0].vars.at("project"), "{{project_id}}");
}

TEST(ParsePlaybooks, SourceAliasCbeExpands) {
    auto books = parse_playbooks(R"(
- id: b
  when: { control_id: A.B.C, source: cbe }
  do:
    - elastic.log: { message: hi }
)");
    EXPECT_EQ(books[0].when.sources,
              (std::vector<Source>{Source::admission, Source::iac_scan, Source::live_scan}));
}

void expect_parse_error(const std::string& yaml, Errc code) {
    try {
        parse_playbooks(yaml);
        FAIL() << "expected error for:\n" << yaml;
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code);
    }
}

TEST(ParsePlaybooks, RejectsMalformedBooks) {
    expect_parse_error("not a sequence: 1", Errc::parse_error);
    expect_parse_error(R"(
- id: a
  do: [ {elastic.log: {message: x}} ]
- id: a
  do: [ {elastic.log: {message: x}} ]
)",
                       Errc::parse_error);
    expect_parse_error(R"(
- id: b
  do: [ {ansible.run: {playbook: x}} ]
)",
                       Errc::unknown_step_type);
    expect_parse_error(R"(
- id: b
  do:
    - terraform.apply: { module: network/nuke-everything }
)",
                       Errc::unknown_step_type);
    expect_parse_error(R"(
- id: b
  do:
    - terraform.apply: { module: network/close-cidr, vars: { t: {{hostname}} } }
)",
                       Errc::unknown_template_variable);
    expect_parse_error(R"(
- id: b
  do: [ {k8s.patch: {}} ]
)",
                       Errc::parse_error);
    expect_parse_error("- id: b\n", Errc::parse_error);
}

TEST(BuiltinBooks, CoverTheAutoRemediableControls) {
    const auto& books = builtin_playbooks();
    ASSERT_EQ(books.size(), 7u);
    std::vector<std::string> ids;
    for (const auto& b : books) ids.push_back(b.id);
    EXPECT_EQ(ids, (std::vector<std::string>{
                       "k8s-fix-privileged", "k8s-fix-hostnetwork", "os-close-public-lb",
                       "os-harden-default-sg", "os-detach-public-fip", "iac-close-open-cidr",
                       "id-rotate-sa-token"}));
    // In-place k8s patches are boolean-only, hence non-destructive.
    EXPECT_FALSE(books[0].destructive);
    EXPECT_FALSE(books[0].targets_iac);
    EXPECT_FALSE(books[1].destructive);
    // Terraform-backed books are destructive by definition and need plans.
    for (size_t i = 2; i < books.size(); ++i) {
        EXPECT_TRUE(books[i].targets_iac) << books[i].id;
        EXPECT_TRUE(books[i].destructive) << books[i].id;
    }
    EXPECT_EQ(*books[2].when.min_severity, Severity::high);
}

TEST(MatchPlaybook, FirstMatchWinsWithAllFilters) {
    auto books = parse_playbooks(R"(
- id: first
  when: { control_id: A.B.C, severity: high }
  do: [ {elastic.log: {message: x}} ]
- id: second
  when: { control_id: [A.B.C, D.E.F] }
  do: [ {elastic.log: {message: x}} ]
- id: runtime-only
  when: { control_id: G.H.I, source: rtm }
  do: [ {elastic.log: {message: x}} ]
)");
    NormalizedEvent e = mk_event("r", "A.B.C");
    e.severity = Severity::high;
    EXPECT_EQ(match_playbook(e, books)->id, "first");
    e.severity = Severity::medium;
    EXPECT_EQ(match_playbook(e, books)->id, "second");
    e.control_id = "D.E.F";
    EXPECT_EQ(match_playbook(e, books)->id, "second");
    e.control_id = "G.H.I";
    e.source = Source::admission;
    EXPECT_EQ(match_playbook(e, books), nullptr);
    e.source = Source::runtime;
    EXPECT_EQ(match_playbook(e, books)->id, "runtime-only");
    e.control_id = "Z.Z.Z";
    EXPECT_EQ(match_playbook(e, books), nullptr);
}

// ---- approval gate property -------------------------------------------------

TEST(ApprovalGate, NeverMutatesWithoutApprovalAcross1000Combos) {
    Rng rng(0x9a7eULL);
    const std::string res = "k8s/pod/ns-0/target";
    int blocked = 0, executed = 0, tf_blocked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        StateStore live, declared;
        live.put(res, json{{"spec", {{"privileged", true}, {"replicas", 3}}}});
        declared.put(res, json{{"cidr", "0.0.0.0/0"}});
        Orchestrator orch(live, declared);

        Playbook book = random_book(rng);
        bool approval = rng.chance(0.5);
        bool did_dry_run = rng.chance(0.5);
        bool has_terraform = book.targets_iac;

        NormalizedEvent e = mk_event(res);
        if (did_dry_run) orch.execute(book, e, ExecMode::dry_run, false);

        int writes = 0;
        auto hook = [&](const ResourceId&, const json&, const json&) { ++writes; };
        live.set_write_hook(hook);
        declared.set_write_hook(hook);
        std::string live_digest = live.digest();
        std::string declared_digest = declared.digest();

        bool needs_approval = book.destructive || book.targets_iac;
        if (needs_approval && !approval) {
            try {
                orch.execute(book, e, ExecMode::apply, approval);
                FAIL() << "gate passed a destructive book without approval, trial " << trial;
            } catch (const Error& err) {
                EXPECT_EQ(err.code(), Errc::approval_required) << "trial " << trial;
            }
            // The gate is atomic: nothing may have been written.
            EXPECT_EQ(writes, 0) << "trial " << trial;
            EXPECT_EQ(live.digest(), live_digest) << "trial " << trial;
            EXPECT_EQ(declared.digest(), declared_digest) << "trial " << trial;
            ++blocked;
        } else if (has_terraform && !did_dry_run) {
            try {
                orch.execute(book, e, ExecMode::apply, approval);
                FAIL() << "terraform applied without a prior dry run, trial " << trial;
            } catch (const Error& err) {
                EXPECT_EQ(err.code(), Errc::no_prior_dry_run) << "trial " << trial;
            }
            EXPECT_EQ(writes, 0) << "trial " << trial;
            EXPECT_EQ(live.digest(), live_digest) << "trial " << trial;
            ++tf_blocked;
        } else {
            orch.execute(book, e, ExecMode::apply, approval);
            int mutating = 0;
            for (const auto& s : book.steps) {
                if (s.type == StepType::k8s_patch) mutating += 1;
                if (s.type == StepType::terraform_apply) mutating += 2; // live + declared
            }
            EXPECT_EQ(writes, mutating) << "trial " << trial;
            ++executed;
        }
    }
    // The draw must exercise all three regimes.
    EXPECT_GT(blocked, 100);
    EXPECT_GT(tf_blocked, 20);
    EXPECT_GT(executed, 100);
}

TEST(DryRun, IsPureAndMintsPlansOnlyForTerraformBooks) {
    Rng rng(0xd47ULL);
    const std::string res = "k8s/pod/ns-0/target";
    for (int trial = 0; trial < 200; ++trial) {
        StateStore live, declared;
        live.put(res, json{{"spec", {{"privileged", true}}}});
        declared.put(res, json{{"cidr", "0.0.0.0/0"}});
        Orchestrator orch(live, declared);
        int writes = 0;
        auto hook = [&](const ResourceId&, const json&, const json&) { ++writes; };
        live.set_write_hook(hook);
        declared.set_write_hook(hook);
        std::string digest = live.digest() + declared.digest();

        Playbook book = random_book(rng);
        auto resu = orch.execute(book, mk_event(res), ExecMode::dry_run, rng.chance(0.5));
        EXPECT_EQ(writes, 0) << "trial " << trial;
        EXPECT_EQ(live.digest() + declared.digest(), digest) << "trial " << trial;
        EXPECT_EQ(resu.plan_id.has_value(), book.targets_iac) << "trial " << trial;
        EXPECT_FALSE(resu.rollback_token.has_value());
    }
}

// ---- patch / rollback round trip ---------------------------------------------

TEST(Rollback, PatchRollbackRoundTripsByteExactAcross1000Patches) {
    Rng rng(0x70115ULL);
    const std::string res = "k8s/pod/ns-0/target";
    for (int trial = 0; trial < 1000; ++trial) {
        StateStore live, declared;
        json original = random_doc(rng);
        live.put(res, original);
        Orchestrator orch(live, declared);

        Playbook book;
        book.id = "flip";
        Step s;
        s.type = StepType::k8s_patch;
        s.payload = random_bool_patch(rng);
        book.steps.push_back(s);

        auto resu = orch.execute(book, mk_event(res), ExecMode::apply, false);
        ASSERT_TRUE(resu.rollback_token.has_value()) << "trial " << trial;

        // The patch must actually be the merge of the two documents.
        json expectation = original;
        expectation.merge_patch(book.steps[0].payload);
        EXPECT_EQ(canonical_line(live.get(res)), canonical_line(expectation))
            << "trial " << trial;

        json restored = orch.rollback(*resu.rollback_token);
        EXPECT_EQ(canonical_line(live.get(res)), canonical_line(original)) << "trial " << trial;
        EXPECT_EQ(canonical_line(restored), canonical_line(original)) << "trial " << trial;

        // A token redeems exactly once.
        try {
            orch.rollback(*resu.rollback_token);
            FAIL() << "token redeemed twice, trial " << trial;
        } catch (const Error& err) {
            EXPECT_EQ(err.code(), Errc::already_redeemed);
        }
    }
}

TEST(Rollback, UnknownTokenFails) {
    StateStore live, declared;
    Orchestrator orch(live, declared);
    try {
        orch.rollback("rbt-999");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::target_not_found);
    }
}

// ---- plan lifecycle ----------------------------------------------------------

class PlanFixture : public ::testing::Test {
protected:
    void SetUp() override {
        declared.put("iac/net/repo-1", json{{"cidr", "0.0.0.0/0"}, {"version_pinned", true}});
        orch = std::make_unique<Orchestrator>(live, declared);
        for (const auto& b : builtin_playbooks())
            if (b.id == "iac-close-open-cidr") book = &b;
        ASSERT_NE(book, nullptr);
    }

    StateStore live, declared;
    std::unique_ptr<Orchestrator> orch;
    const Playbook* book = nullptr;
};

TEST_F(PlanFixture, DryRunMintsPendingPlanWithResolvedVars) {
    NormalizedEvent e = mk_event("iac/net/repo-1", "IAC.NET.OPEN-CIDR");
    auto res = orch->execute(*book, e, ExecMode::dry_run, false);
    ASSERT_TRUE(res.plan_id.has_value());
    const auto& plan = orch->plans().at(*res.plan_id);
    EXPECT_EQ(plan.status, PlanStatus::pending);
    EXPECT_FALSE(plan.applied);
    EXPECT_EQ(plan.resource_id, "iac/net/repo-1");
    EXPECT_EQ(plan.vars.at("target"), "iac/net/repo-1");
    ASSERT_EQ(plan.changes.size(), 1u);
    EXPECT_EQ(plan.changes[0].at("declared_after").at("cidr"), "10.0.0.0/8");
    // Dry run touched nothing.
    EXPECT_EQ(declared.get("iac/net/repo-1").at("cidr"), "0.0.0.0/0");
}

TEST_F(PlanFixture, ApprovePlanAppliesAndSealsIt) {
    NormalizedEvent e = mk_event("iac/net/repo-1", "IAC.NET.OPEN-CIDR");
    auto dry = orch->execute(*book, e, ExecMode::dry_run, false);
    auto applied = orch->approve_plan(*dry.plan_id);
    EXPECT_EQ(declared.get("iac/net/repo-1").at("cidr"), "10.0.0.0/8");
    EXPECT_EQ(declared.get("iac/net/repo-1").at("managed_by"), "terraform");
    const auto& plan = orch->plans().at(*dry.plan_id);
    EXPECT_EQ(plan.status, PlanStatus::approved);
    EXPECT_TRUE(plan.applied);
    (void)applied;
    // Applied implies approved and a plan applies at most once.
    EXPECT_THROW(orch->approve_plan(*dry.plan_id), Error);
    EXPECT_THROW(orch->reject_plan(*dry.plan_id), Error);
}

TEST_F(PlanFixture, RejectedPlanNeverApplies) {
    NormalizedEvent e = mk_event("iac/net/repo-1", "IAC.NET.OPEN-CIDR");
    auto dry = orch->execute(*book, e, ExecMode::dry_run, false);
    orch->reject_plan(*dry.plan_id);
    EXPECT_EQ(orch->plans().at(*dry.plan_id).status, PlanStatus::rejected);
    EXPECT_THROW(orch->approve_plan(*dry.plan_id), Error);
    EXPECT_EQ(declared.get("iac/net/repo-1").at("cidr"), "0.0.0.0/0");
}

TEST_F(PlanFixture, StateRoundTripsThroughDump) {
    NormalizedEvent e = mk_event("iac/net/repo-1", "IAC.NET.OPEN-CIDR");
    auto dry = orch->execute(*book, e, ExecMode::dry_run, false);
    json snapshot = orch->dump_state();

    Orchestrator other(live, declared);
    other.load_state(snapshot);
    EXPECT_EQ(other.plans().size(), 1u);
    // The restored plan still applies: dry-run bookkeeping traveled along.
    other.approve_plan(*dry.plan_id);
    EXPECT_EQ(declared.get("iac/net/repo-1").at("cidr"), "10.0.0.0/8");
}

TEST(TemplateVars, MissingProjectFailsAtExecution) {
    StateStore live, declared;
    declared.put("os/lb/p-1/lb", json{{"public", true}, {"listener_port", 8080}});
    Orchestrator orch(live, declared);
    const Playbook* lb_book = nullptr;
    for (const auto& b : builtin_playbooks())
        if (b.id == "os-close-public-lb") lb_book = &b;
    ASSERT_NE(lb_book, nullptr);
    NormalizedEvent e = mk_event("os/lb/p-1/lb", "OS.NET.PUBLIC-NONSTD");
    e.evidence = json::object(); // no project_id anywhere
    try {
        orch.execute(*lb_book, e, ExecMode::dry_run, false);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::template_unresolved);
    }
    // project_id nested under details resolves too.
    e.evidence = json{{"details", {{"project_id", "p-1"}}}};
    auto res = orch.execute(*lb_book, e, ExecMode::dry_run, false);
    EXPECT_EQ(orch.plans().at(*res.plan_id).vars.at("project"), "p-1");
}

TEST(TerraformModules, ApplySemanticsAndPostCheck) {
    StateStore live, declared;
    declared.put("os/lb/p-0/lb", json{{"public", true}, {"listener_port", 8080}});
    live.put("os/lb/p-0/lb", json{{"public", true}, {"listener_port", 8080}});
    Orchestrator orch(live, declared);
    orch.set_cleared_check([](const ControlId& c, const json& doc) {
        return c == "OS.NET.PUBLIC-NONSTD" && doc.value("public", true) == false;
    });
    const Playbook* lb_book = nullptr;
    for (const auto& b : builtin_playbooks())
        if (b.id == "os-close-public-lb") lb_book = &b;
    NormalizedEvent e = mk_event("os/lb/p-0/lb", "OS.NET.PUBLIC-NONSTD");

    orch.execute(*lb_book, e, ExecMode::dry_run, false);
    auto res = orch.execute(*lb_book, e, ExecMode::apply, true);
    EXPECT_EQ(res.post_check, PostCheck::passed);
    for (const auto* store : {&live, &declared}) {
        const json& doc = store->get("os/lb/p-0/lb");
        EXPECT_EQ(doc.at("public"), false);
        EXPECT_EQ(doc.at("listener_port"), 443);
        EXPECT_EQ(doc.at("managed_by"), "terraform");
    }
}

TEST(TerraformModules, UnknownTargetFails) {
    StateStore live, declared;
    Orchestrator orch(live, declared);
    Playbook book;
    book.id = "tf";
    Step s;
    s.type = StepType::terraform_apply;
    s.module = "network/close-cidr";
    s.destructive = true;
    book.steps.push_back(s);
    book.destructive = true;
    book.targets_iac = true;
    NormalizedEvent e = mk_event("iac/net/ghost");
    try {
        orch.execute(book, e, ExecMode::dry_run, false);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::target_not_found);
    }
}

} // namespace
} // namespace argus
