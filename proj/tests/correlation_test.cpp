#include <gtest/gtest.h>

#include <chrono>
#include <string>
#include <vector>

#include "argus/correlation.hpp"
#include "support/decide_oracle.hpp"

namespace argus {
namespace {

using testsupport::BookClass;
using testsupport::books_for;
using testsupport::decide_oracle;
using testsupport::mk_book;
using testsupport::mk_event;

TEST(Decide, MatchesEnumerationOracleExactly) {
    auto start = std::chrono::steady_clock::now();

    const std::vector<std::pair<double, double>> threshold_sets{{0.3, 0.7}, {0.25, 0.8}};
    const std::vector<Severity> severities{Severity::info, Severity::low, Severity::medium,
                                           Severity::high, Severity::critical};
    const double eps = 1e-9;

    int cases = 0;
    for (const auto& [tau_low, tau_high] : threshold_sets) {
        EngineConfig cfg;
        cfg.tau_low = tau_low;
        cfg.tau_high = tau_high;
        const std::vector<double> confs{0.0,
                                        tau_low - eps,
                                        tau_low,
                                        (tau_low + tau_high) / 2,
                                        tau_high - eps,
                                        tau_high,
                                        1.0};
        for (BookClass bc : testsupport::book_classes()) {
            std::string control = "T.E.ST";
            std::vector<Playbook> books = books_for(bc, control);
            for (Severity sev : severities) {
                NormalizedEvent e = mk_event(control, sev);
                for (double conf : confs) {
                    ActionKind want = decide_oracle(conf, sev, bc, tau_low, tau_high);
                    Decision got = decide(cfg, e, conf, books);
                    ASSERT_EQ(got.action, want)
                        << "conf=" << conf << " sev=" << to_string(sev)
                        << " book=" << int(bc) << " tau=(" << tau_low << "," << tau_high << ")";
                    EXPECT_DOUBLE_EQ(got.conf, conf);
                    if (want == ActionKind::log) {
                        EXPECT_EQ(got.reason, DecisionReason::below_tau_low);
                        EXPECT_TRUE(got.playbook_id.empty());
                    } else if (want == ActionKind::patch) {
                        EXPECT_EQ(got.reason, DecisionReason::auto_patch);
                        EXPECT_EQ(got.playbook_id, "b");
                    } else if (want == ActionKind::plan) {
                        EXPECT_EQ(got.reason, DecisionReason::plan_required);
                        EXPECT_EQ(got.playbook_id, "b");
                    } else {
                        EXPECT_EQ(got.reason, DecisionReason::ticket_fallback);
                    }
                    ++cases;
                }
            }
        }
    }
    EXPECT_EQ(cases, 2 * 5 * 5 * 7);

    auto elapsed = std::chrono::steady_clock::now() - start;
    EXPECT_LT(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count(), 1000);
}

TEST(BasePriority, DefaultLadder) {
    EngineConfig cfg;
    EXPECT_DOUBLE_EQ(base_priority(cfg, Priority::informational), 0.2);
    EXPECT_DOUBLE_EQ(base_priority(cfg, Priority::notice), 0.4);
    EXPECT_DOUBLE_EQ(base_priority(cfg, Priority::warning), 0.6);
    EXPECT_DOUBLE_EQ(base_priority(cfg, Priority::error), 0.8);
    EXPECT_DOUBLE_EQ(base_priority(cfg, Priority::critical), 1.0);
    cfg.base_priority_map.erase("warning");
    EXPECT_THROW(base_priority(cfg, Priority::warning), Error);
}

TEST(ScoreEvent, MultiplierPrecedenceAndClamp) {
    EngineConfig cfg;
    NormalizedEvent e = mk_event("T.E.ST", Severity::medium);
    e.evidence["confidence"] = 0.9;
    // warning base 0.6 * 0.9 = 0.54.
    EXPECT_DOUBLE_EQ(score_event(cfg, e, {false, false}), 0.54);
    // Approved context halves; it wins over escalation when both hold.
    EXPECT_DOUBLE_EQ(score_event(cfg, e, {true, false}), 0.27);
    EXPECT_DOUBLE_EQ(score_event(cfg, e, {true, true}), 0.27);
    EXPECT_DOUBLE_EQ(score_event(cfg, e, {false, true}), 0.54 * 1.25);

    // Missing confidence defaults to 1; critical escalated clamps at 1.
    NormalizedEvent crit = mk_event("T.E.ST", Severity::critical);
    EXPECT_DOUBLE_EQ(score_event(cfg, crit, {false, false}), 1.0);
    EXPECT_DOUBLE_EQ(score_event(cfg, crit, {false, true}), 1.0);
}

TEST(EngineConfig, JsonRoundTripIsStrict) {
    EngineConfig cfg = EngineConfig::defaults();
    cfg.tau_low = 0.25;
    cfg.escalation_factor = 1.5;
    EngineConfig back = EngineConfig::from_json(cfg.to_json());
    EXPECT_DOUBLE_EQ(back.tau_low, 0.25);
    EXPECT_DOUBLE_EQ(back.escalation_factor, 1.5);
    EXPECT_EQ(back.base_priority_map, cfg.base_priority_map);

    json j = cfg.to_json();
    j["surprise"] = 1;
    EXPECT_THROW(EngineConfig::from_json(j), Error);

    json missing = cfg.to_json();
    missing.erase("freshness_s");
    EXPECT_THROW(EngineConfig::from_json(missing), Error);

    json bad_tau = cfg.to_json();
    bad_tau["tau_low"] = 0.9; // above tau_high
    EXPECT_THROW(EngineConfig::from_json(bad_tau), Error);

    json bad_map = cfg.to_json();
    bad_map["base_priority_map"].erase("notice");
    EXPECT_THROW(EngineConfig::from_json(bad_map), Error);

    json bad_factor = cfg.to_json();
    bad_factor["escalation_factor"] = 0.9;
    EXPECT_THROW(EngineConfig::from_json(bad_factor), Error);
}

TEST(NormalizeRaw, FalcoRouting) {
    json p{{"source", "falco"},        {"event_id", "ev-9"},
           {"ts_ms", 777},             {"resource", "k8s/pod/ns-1/web"},
           {"subject", "k8s/sa/ns-1/app"}, {"rule", "TerminalShellInContainer"},
           {"confidence", 0.8},        {"fields", json{{"shell", "bash"}}}};
    auto e = normalize_raw(p);
    EXPECT_EQ(e.control_id, "RT.SHELL.CONTAINER");
    EXPECT_EQ(e.priority, Priority::error);
    EXPECT_EQ(e.severity, Severity::high);
    EXPECT_EQ(e.source, Source::runtime);
    EXPECT_EQ(*e.subject_id, "k8s/sa/ns-1/app");
    EXPECT_DOUBLE_EQ(e.evidence.at("confidence").get<double>(), 0.8);

    // Explicit priority overrides the rule default.
    p["priority"] = "critical";
    EXPECT_EQ(normalize_raw(p).priority, Priority::critical);

    p["rule"] = "UnknownRule";
    EXPECT_THROW(normalize_raw(p), Error);
}

TEST(NormalizeRaw, IdentityWatchAliasesKeystone) {
    json p{{"source", "keystone"}, {"event_id", "ev-1"}, {"ts_ms", 1},
           {"resource", "os/identity/p-1"}, {"event", "role-escalation"}};
    auto a = normalize_raw(p);
    EXPECT_EQ(a.control_id, "OS.ID.ROLE-ESCALATION");
    EXPECT_EQ(a.priority, Priority::critical);
    EXPECT_EQ(a.source, Source::identity);

    p["source"] = "identity_watch";
    auto b = normalize_raw(p);
    EXPECT_EQ(b.control_id, a.control_id);

    p["event"] = "cluster-admin-binding";
    EXPECT_EQ(normalize_raw(p).control_id, "K8S.RBAC.CLUSTER-ADMIN-BINDING");
}

TEST(NormalizeRaw, ConfigScannerRoutes) {
    json adm{{"source", "admission"}, {"event_id", "ev-2"}, {"ts_ms", 5},
             {"resource", "k8s/pod/ns-0/x"}, {"check", "host-network"}};
    auto e = normalize_raw(adm);
    EXPECT_EQ(e.control_id, "K8S.NET.POD.HOSTNETWORK");
    EXPECT_EQ(e.source, Source::admission);
    EXPECT_EQ(e.severity, Severity::high);
    EXPECT_EQ(e.priority, Priority::error);
    EXPECT_DOUBLE_EQ(e.evidence.at("confidence").get<double>(), 0.9);

    json osr{{"source", "os_check"}, {"event_id", "ev-3"}, {"ts_ms", 5},
             {"resource", "os/sg/p-0/default"}, {"check", "default-secgroup"},
             {"confidence", 0.7}};
    auto f = normalize_raw(osr);
    EXPECT_EQ(f.control_id, "OS.NET.DEFAULT-SG");
    EXPECT_EQ(f.source, Source::live_scan);
    EXPECT_DOUBLE_EQ(f.evidence.at("confidence").get<double>(), 0.7);

    json iac{{"source", "checkov"}, {"event_id", "ev-4"}, {"ts_ms", 5},
             {"resource", "iac/net/repo-1"}, {"rule", "open-cidr"}};
    auto g = normalize_raw(iac);
    EXPECT_EQ(g.control_id, "IAC.NET.OPEN-CIDR");
    EXPECT_EQ(g.source, Source::iac_scan);
}

TEST(NormalizeRaw, OverrideAndErrors) {
    json ovr{{"source", "override"}, {"event_id", "ev-5"}, {"ts_ms", 9},
             {"resource", "os/identity/p-3"}, {"note", "ticket OPS-1"}};
    auto e = normalize_raw(ovr);
    EXPECT_EQ(e.control_id, "OPS.OVERRIDE.UNRESOLVED");
    EXPECT_EQ(e.priority, Priority::informational);
    EXPECT_EQ(e.source, Source::identity);

    try {
        normalize_raw(json{{"source", "zabbix"}, {"event_id", "e"}, {"ts_ms", 1},
                           {"resource", "r"}});
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::unroutable_event);
    }
    try {
        normalize_raw(json{{"source", "falco"}, {"event_id", "e"}, {"ts_ms", 1},
                           {"rule", "TerminalShellInContainer"}});
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::missing_resource);
    }
}

TEST(Latency, PipelinePlusActionBudget) {
    EXPECT_EQ(action_latency_ms(ActionKind::log), 0);
    EXPECT_EQ(action_latency_ms(ActionKind::ticket), 5);
    EXPECT_EQ(action_latency_ms(ActionKind::plan), 12);
    EXPECT_EQ(action_latency_ms(ActionKind::patch), 22);

    CorrelationEngine engine(EngineConfig::defaults(), nullptr, nullptr, {});
    NormalizedEvent e = mk_event("T.E.ST", Severity::high);
    e.evidence["confidence"] = 1.0;
    auto r = engine.process(e);
    // 3 ms pipeline overhead + 5 ms ticket execution, stamped after the event.
    EXPECT_EQ(r.action, ActionKind::ticket);
    EXPECT_EQ(r.latency_ms, 8);
    EXPECT_EQ(r.wrote_at, e.timestamp + 8);
}

TEST(Engine, WithoutOrchestratorNothingExecutes) {
    // Books require an executor; without one every playbook is dropped so the
    // decision can never be patch or plan.
    std::vector<Playbook> books{mk_book("b", "T.E.ST", false, false)};
    CorrelationEngine engine(EngineConfig::defaults(), nullptr, nullptr, books);
    NormalizedEvent e = mk_event("T.E.ST", Severity::critical);
    e.evidence["confidence"] = 1.0;
    auto r = engine.process(e);
    EXPECT_EQ(r.action, ActionKind::ticket);
    EXPECT_FALSE(r.rollback_token.has_value());
}

TEST(Engine, SignalsRequireGraphAndExcludeSelfCorrelation) {
    NormalizedEvent e = mk_event("T.E.ST", Severity::medium);

    CorrelationEngine no_graph(EngineConfig::defaults(), nullptr, nullptr, {});
    Finding own;
    own.control_id = "T.E.ST";
    own.resource_id = e.resource_id;
    own.severity = Severity::high;
    Finding other;
    other.control_id = "O.T.HER";
    other.resource_id = e.resource_id;
    other.severity = Severity::medium;
    Finding weak;
    weak.control_id = "W.E.AK";
    weak.resource_id = e.resource_id;
    weak.severity = Severity::low;

    // A finding for the same control never corroborates its own event.
    no_graph.set_open_findings({{e.resource_id, {own}}});
    EXPECT_FALSE(no_graph.signals_for(e).correlated_config);
    // Another control at medium or above does.
    no_graph.set_open_findings({{e.resource_id, {own, other}}});
    EXPECT_TRUE(no_graph.signals_for(e).correlated_config);
    // Below medium never corroborates.
    no_graph.set_open_findings({{e.resource_id, {weak}}});
    EXPECT_FALSE(no_graph.signals_for(e).correlated_config);

    // Approved-operator context needs a graph with a flagged, recently
    // active subject.
    std::vector<json> recs{
        json{{"kind", "namespace"}, {"name", "ns-0"}},
        json{{"kind", "service_account"}, {"namespace", "ns-0"}, {"name", "op"},
             {"approved_operator", true}},
        json{{"kind", "resource"}, {"namespace", "ns-0"}, {"id", e.resource_id},
             {"family", "k8s.pod"}},
        json{{"kind", "activity"}, {"subject", "k8s/sa/ns-0/op"}, {"resource", e.resource_id},
             {"ts_ms", 500}},
    };
    IdentityGraph graph = ingest_snapshot(IdentityGraph{}, "k8s", recs).graph;
    CorrelationEngine with_graph(EngineConfig::defaults(), &graph, nullptr, {});
    NormalizedEvent by_op = e;
    by_op.subject_id = "k8s/sa/ns-0/op";
    EXPECT_TRUE(with_graph.signals_for(by_op).approved_operator);
    EXPECT_FALSE(no_graph.signals_for(by_op).approved_operator);
    NormalizedEvent by_other = e;
    by_other.subject_id = "k8s/sa/ns-0/ghost";
    EXPECT_FALSE(with_graph.signals_for(by_other).approved_operator);
}

TEST(Engine, ProcessRecordCarriesRecomputationKeys) {
    CorrelationEngine engine(EngineConfig::defaults(), nullptr, nullptr, {});
    NormalizedEvent e = mk_event("T.E.ST", Severity::medium, Source::admission);
    e.evidence["confidence"] = 0.9;
    auto r = engine.process(e, 4);
    EXPECT_EQ(r.event_id, e.event_id);
    EXPECT_EQ(r.resource_id, e.resource_id);
    EXPECT_EQ(r.control_id, e.control_id);
    EXPECT_EQ(r.duplicate_count, 4);
    EXPECT_EQ(r.source, Source::admission);
    EXPECT_DOUBLE_EQ(r.conf, 0.54);
    EXPECT_EQ(r.action, ActionKind::ticket);
}

} // namespace
} // namespace argus
