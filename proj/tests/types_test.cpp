#include <gtest/gtest.h>

#include "argus/types.hpp"

namespace argus {
namespace {

TEST(SeverityOrder, StrictlyIncreasing) {
    EXPECT_LT(compare_severity(Severity::info, Severity::low), 0);
    EXPECT_LT(compare_severity(Severity::low, Severity::medium), 0);
    EXPECT_LT(compare_severity(Severity::medium, Severity::high), 0);
    EXPECT_LT(compare_severity(Severity::high, Severity::critical), 0);
    EXPECT_EQ(compare_severity(Severity::high, Severity::high), 0);
    EXPECT_GT(compare_severity(Severity::critical, Severity::info), 0);
}

TEST(PriorityOrder, StrictlyIncreasing) {
    EXPECT_LT(compare_priority(Priority::informational, Priority::notice), 0);
    EXPECT_LT(compare_priority(Priority::notice, Priority::warning), 0);
    EXPECT_LT(compare_priority(Priority::warning, Priority::error), 0);
    EXPECT_LT(compare_priority(Priority::error, Priority::critical), 0);
    EXPECT_EQ(compare_priority(Priority::notice, Priority::notice), 0);
}

TEST(EnumStrings, SeverityRoundTrip) {
    for (auto s : {Severity::info, Severity::low, Severity::medium, Severity::high,
                   Severity::critical}) {
        EXPECT_EQ(severity_from_string(to_string(s)), s);
    }
    EXPECT_THROW(severity_from_string("bogus"), Error);
}

TEST(EnumStrings, PriorityRoundTrip) {
    for (auto p : {Priority::informational, Priority::notice, Priority::warning,
                   Priority::error, Priority::critical}) {
        EXPECT_EQ(priority_from_string(to_string(p)), p);
    }
    EXPECT_THROW(priority_from_string(""), Error);
}

TEST(EnumStrings, ActionSourcePostCheckScopeRoundTrip) {
    for (auto a : {ActionKind::log, ActionKind::patch, ActionKind::plan, ActionKind::ticket}) {
        EXPECT_EQ(action_from_string(to_string(a)), a);
    }
    for (auto s : {Source::admission, Source::iac_scan, Source::live_scan, Source::runtime,
                   Source::identity}) {
        EXPECT_EQ(source_from_string(to_string(s)), s);
    }
    for (auto p : {PostCheck::passed, PostCheck::failed, PostCheck::not_applicable}) {
        EXPECT_EQ(post_check_from_string(to_string(p)), p);
    }
    for (auto k : {ScopeKind::ns, ScopeKind::project, ScopeKind::domain, ScopeKind::cluster}) {
        EXPECT_EQ(scope_kind_from_string(to_string(k)), k);
    }
}

TEST(SeverityPriorityMap, ForwardAndInverse) {
    EXPECT_EQ(severity_to_priority(Severity::info), Priority::informational);
    EXPECT_EQ(severity_to_priority(Severity::low), Priority::notice);
    EXPECT_EQ(severity_to_priority(Severity::medium), Priority::warning);
    EXPECT_EQ(severity_to_priority(Severity::high), Priority::error);
    EXPECT_EQ(severity_to_priority(Severity::critical), Priority::critical);
    for (auto s : {Severity::info, Severity::low, Severity::medium, Severity::high,
                   Severity::critical}) {
        EXPECT_EQ(priority_to_severity(severity_to_priority(s)), s);
    }
}

TEST(WeightVector, MakeValidatesSum) {
    auto w = WeightVector::make(0.35, 0.30, 0.25, 0.10);
    EXPECT_DOUBLE_EQ(w.w_c, 0.35);
    EXPECT_DOUBLE_EQ(w.w_m, 0.10);
    EXPECT_THROW(WeightVector::make(0.5, 0.5, 0.5, 0.5), Error);
    EXPECT_THROW(WeightVector::make(-0.1, 0.6, 0.3, 0.2), Error);
}

TEST(Thresholds, MakeValidatesOrder) {
    auto t = Thresholds::make(0.3, 0.7);
    EXPECT_DOUBLE_EQ(t.tau_low, 0.3);
    EXPECT_THROW(Thresholds::make(0.7, 0.3), Error);
    EXPECT_THROW(Thresholds::make(-0.1, 0.5), Error);
    EXPECT_THROW(Thresholds::make(0.2, 1.5), Error);
}

TEST(ControlId, Grammar) {
    EXPECT_TRUE(valid_control_id("K8S.PRIV.POD.PRIVILEGED"));
    EXPECT_TRUE(valid_control_id("OS.NET.FIP.PUBLIC-NONPROD"));
    EXPECT_TRUE(valid_control_id("RT.ID.SA-TOKEN-OVERUSE"));
    EXPECT_FALSE(valid_control_id(""));
    EXPECT_FALSE(valid_control_id("lowercase.path"));
    EXPECT_FALSE(valid_control_id("NO"));
    EXPECT_FALSE(valid_control_id(".LEADING.DOT"));
    EXPECT_FALSE(valid_control_id("TRAILING.DOT."));
}

TEST(ValidateFinding, ReportsEveryViolation) {
    Finding ok;
    ok.control_id = "K8S.PRIV.POD.PRIVILEGED";
    ok.resource_id = "k8s/pod/ns-0/p";
    ok.confidence = 0.9;
    EXPECT_TRUE(validate_finding(ok).empty());

    Finding bad;
    bad.control_id = "not a control";
    bad.resource_id = "";
    bad.confidence = 1.5;
    auto violations = validate_finding(bad);
    EXPECT_GE(violations.size(), 3u);
}

TEST(CanonicalLine, SortedKeysSingleLine) {
    json j{{"zeta", 1}, {"alpha", json{{"b", 2}, {"a", 1}}}};
    auto line = canonical_line(j);
    EXPECT_EQ(line, "{\"alpha\":{\"a\":1,\"b\":2},\"zeta\":1}");
    EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(JsonRoundTrip, EvidenceRecord) {
    EvidenceRecord r;
    r.event_id = "ev-000001";
    r.resource_id = "k8s/pod/ns-1/web-0";
    r.control_id = "K8S.PRIV.POD.PRIVILEGED";
    r.action = ActionKind::patch;
    r.conf = 0.81;
    r.latency_ms = 25;
    r.post_check = PostCheck::passed;
    r.rollback_token = "rbt-1";
    r.duplicate_count = 3;
    r.wrote_at = 123456;
    r.source = Source::runtime;
    json j = r;
    auto back = j.get<EvidenceRecord>();
    EXPECT_EQ(back, r);
}

TEST(JsonRoundTrip, NormalizedEventAndFinding) {
    NormalizedEvent e;
    e.event_id = "ev-42";
    e.timestamp = 99;
    e.resource_id = "os/lb/p-1/lb";
    e.subject_id = "user:alice";
    e.control_id = "OS.NET.PUBLIC-NONSTD";
    e.evidence = json{{"listener_port", 8080}};
    e.priority = Priority::error;
    e.severity = Severity::high;
    e.source = Source::live_scan;
    json je = e;
    EXPECT_EQ(je.get<NormalizedEvent>(), e);

    Finding f;
    f.control_id = "IAC.NET.OPEN-CIDR";
    f.resource_id = "iac/net/repo-3";
    f.evidence = json{{"cidr", "0.0.0.0/0"}};
    f.severity = Severity::high;
    f.confidence = 0.9;
    f.fix_hint = "close the cidr";
    f.source = Source::iac_scan;
    json jf = f;
    EXPECT_EQ(jf.get<Finding>(), f);
}

TEST(JsonRoundTrip, GrantTupleScopeWeightsThresholds) {
    GrantTuple g{"user:bob", "edit", {ScopeKind::ns, "ns-3"}, "*", "patch"};
    json jg = g;
    EXPECT_EQ(jg.get<GrantTuple>(), g);

    WeightVector w = WeightVector::calibrated_default();
    json jw = w;
    EXPECT_EQ(jw.get<WeightVector>(), w);

    Thresholds t = Thresholds::make(0.2, 0.9);
    json jt = t;
    auto tb = jt.get<Thresholds>();
    EXPECT_DOUBLE_EQ(tb.tau_low, 0.2);
    EXPECT_DOUBLE_EQ(tb.tau_high, 0.9);
}

} // namespace
} // namespace argus
