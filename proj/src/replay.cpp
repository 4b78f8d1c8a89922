#include "argus/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include "argus/findings.hpp"
#include "argus/metrics.hpp"
#include "argus/rng.hpp"

namespace argus {

namespace {

std::string seq_id(const char* prefix, uint64_t n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%s%06llu", prefix, static_cast<unsigned long long>(n));
    return buf;
}

bool source_enabled(const BaselineConfig& c, const std::string& source) {
    if (source == "falco") return c.runtime_detection;
    if (source == "admission") return c.config_scanning_k8s;
    if (source == "os_check") return c.config_scanning_openstack;
    if (source == "checkov") return c.config_scanning_iac;
    if (source == "keystone" || source == "identity_watch") return c.identity_correlation;
    if (source == "override") return true; // analyst-sourced, not a platform toggle
    return false;
}

bool family_in_scan_scope(const BaselineConfig& c, const std::string& fam) {
    if (fam.rfind("k8s.", 0) == 0) return c.config_scanning_k8s;
    if (fam.rfind("os.", 0) == 0) return c.config_scanning_openstack;
    if (fam.rfind("iac.", 0) == 0) return c.config_scanning_iac;
    return false;
}

EvidenceRecord marker_record(uint64_t n, const std::string& fam, const char* control) {
    EvidenceRecord r;
    r.event_id = seq_id("mk-", n);
    r.resource_id = "family/" + fam;
    r.control_id = control;
    r.action = ActionKind::log;
    r.conf = 0.0;
    r.latency_ms = 0;
    r.wrote_at = 0;
    r.source = fam.rfind("iac.", 0) == 0 ? Source::iac_scan : Source::live_scan;
    return r;
}

EvidenceRecord error_record(const std::string& event_id, const std::string& resource,
                            int64_t ts) {
    EvidenceRecord r;
    r.event_id = event_id;
    r.resource_id = resource.empty() ? "unknown/error" : resource;
    r.control_id = "OPS.ENGINE.ERROR";
    r.action = ActionKind::log;
    r.conf = 0.0;
    r.latency_ms = 3;
    r.wrote_at = ts + 3;
    r.source = Source::live_scan;
    return r;
}

/// Cost model: analyst minutes per action.
double action_minutes(ActionKind a) {
    switch (a) {
    case ActionKind::ticket: return 15.0;
    case ActionKind::plan: return 5.0;
    case ActionKind::patch: return 0.5;
    case ActionKind::log: return 0.0;
    }
    fail(Errc::out_of_range, "action out of range");
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

ReplayResult run_replay(Scenario s, const ReplayOptions& opt) {
    if (opt.evidence_dir.empty()) fail(Errc::bad_config, "replay needs an evidence directory");
    if (std::filesystem::exists(opt.evidence_dir) &&
        !std::filesystem::is_empty(opt.evidence_dir))
        fail(Errc::bad_config, "evidence directory is not empty: " + opt.evidence_dir.string());

    const std::vector<Policy> policies = parse_profile(profile_yaml(opt.profile));
    const std::vector<Playbook> books =
        opt.config.remediation ? builtin_playbooks() : std::vector<Playbook>{};

    Orchestrator orch(s.live, s.declared);
    orch.set_cleared_check([&policies](const ControlId& control, const json& doc) {
        for (const auto& p : policies)
            if (p.control_id == control) return !policy_matches(p, doc);
        return true;
    });

    CorrelationEngine engine(opt.engine, opt.config.identity_correlation ? &s.graph : nullptr,
                             opt.config.remediation ? &orch : nullptr, books);

    auto t0 = std::chrono::steady_clock::now();

    std::vector<EvidenceRecord> records;
    uint64_t marker_counter = 0, scan_counter = 0, error_counter = 0;
    uint64_t events_processed = 0;

    // Declared control families, and the subset this config actually
    // scans with at least one applicable policy. The markers make
    // coverage recomputable from the log alone.
    std::set<std::string> declared_fams;
    for (const auto& [_, fam] : s.family) declared_fams.insert(fam);
    std::set<std::string> checked_fams;
    for (const auto& fam : declared_fams) {
        if (!family_in_scan_scope(opt.config, fam)) continue;
        for (const auto& p : policies)
            if (p.applies_to == fam) {
                checked_fams.insert(fam);
                break;
            }
    }
    for (const auto& fam : declared_fams)
        records.push_back(marker_record(++marker_counter, fam, "SCAN.FAMILY.DECLARED"));
    for (const auto& fam : checked_fams)
        records.push_back(marker_record(++marker_counter, fam, "SCAN.FAMILY.CHECKED"));

    auto ingest_activity = [&](const json& rec) {
        IngestResult r = ingest_snapshot(s.graph, "k8s", {rec});
        s.graph = std::move(r.graph);
    };

    // Activity payloads ingest just before the first event at or past their
    // timestamp: each event is scored against the graph as of its own
    // virtual time. Ingesting the whole epoch up front would let a later
    // activity refresh the recent-activity edge past an earlier event's
    // clock and mask an approved operator.
    auto process_batch = [&](std::vector<NormalizedEvent> batch,
                             std::vector<std::pair<int64_t, json>> activities) {
        size_t ai = 0;
        for (const auto& d : dedup_events(batch, opt.engine.dedup_window_ms)) {
            while (ai < activities.size() && activities[ai].first <= d.event.timestamp)
                ingest_activity(activities[ai++].second);
            try {
                records.push_back(engine.process(d.event, d.duplicate_count));
            } catch (const Error&) {
                records.push_back(
                    error_record(d.event.event_id, d.event.resource_id, d.event.timestamp));
            }
        }
        while (ai < activities.size()) ingest_activity(activities[ai++].second);
    };

    size_t idx = 0;
    for (int epoch = 1; epoch <= kScanEpochs; ++epoch) {
        const int64_t t_end = epoch * kScanEpochMs;

        std::vector<NormalizedEvent> batch;
        std::vector<std::pair<int64_t, json>> activities;
        while (idx < s.stream.size() && s.stream[idx].at("ts_ms").get<int64_t>() < t_end) {
            const json& payload = s.stream[idx++];
            ++events_processed;
            std::string source = payload.value("source", "");
            if (source == "activity") {
                if (opt.config.identity_correlation)
                    activities.emplace_back(payload.at("ts_ms").get<int64_t>(),
                                            json{{"kind", "activity"},
                                                 {"subject", payload.at("subject")},
                                                 {"resource", payload.at("resource")},
                                                 {"ts_ms", payload.at("ts_ms")}});
                continue;
            }
            if (!source_enabled(opt.config, source)) continue;
            try {
                batch.push_back(normalize_raw(payload));
            } catch (const Error&) {
                records.push_back(error_record(
                    payload.value("event_id", seq_id("er-", ++error_counter)),
                    payload.value("resource", ""), payload.value("ts_ms", int64_t{0})));
            }
        }
        process_batch(std::move(batch), std::move(activities));

        // Scan tick: evaluate the profile against whatever state the
        // enabled surfaces can see at t_end.
        std::vector<ResourceDoc> docs;
        for (const auto& [id, fam] : s.family) {
            if (!family_in_scan_scope(opt.config, fam)) continue;
            bool is_iac = fam.rfind("iac.", 0) == 0;
            const StateStore& store = is_iac ? s.declared : s.live;
            if (!store.has(id)) continue;
            docs.push_back(ResourceDoc{id, fam, store.get(id)});
        }
        if (!docs.empty()) {
            std::vector<Finding> findings = evaluate_profile(policies, docs);
            std::vector<NormalizedEvent> scan_events = severity_gate(
                findings, Severity::medium, t_end,
                [&] { return seq_id("sc-", ++scan_counter); });
            events_processed += scan_events.size();
            process_batch(std::move(scan_events), {});

            if (opt.config.identity_correlation) {
                std::map<ResourceId, std::vector<Finding>> open;
                for (auto& f : findings) open[f.resource_id].push_back(std::move(f));
                engine.set_open_findings(std::move(open));
            }
        }
    }

    // The log is ordered by completion time, not processing order:
    // remediation latency may finish a later event first.
    std::stable_sort(records.begin(), records.end(),
                     [](const EvidenceRecord& a, const EvidenceRecord& b) {
                         return std::tie(a.wrote_at, a.event_id) <
                                std::tie(b.wrote_at, b.event_id);
                     });

    EvidenceLog log(opt.evidence_dir);
    for (const auto& r : records) log.append(r);

    auto t1 = std::chrono::steady_clock::now();

    if (!opt.state_dir.empty()) {
        save_scenario(s, opt.state_dir / "world");
        std::ofstream f(opt.state_dir / "orchestrator.json");
        if (!f) fail(Errc::storage_failure, "cannot write orchestrator state");
        f << orch.dump_state().dump(2) << '\n';
    }

    ReplayResult res;
    res.records = log.size();
    res.events_processed = events_processed;
    res.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    res.metrics = recompute_metrics(log, s.labels);
    return res;
}

json recompute_metrics(const EvidenceLog& log, const std::vector<InjectionLabel>& labels) {
    std::map<std::pair<ResourceId, ControlId>, std::vector<size_t>> label_keys;
    for (size_t i = 0; i < labels.size(); ++i)
        label_keys[{labels[i].resource_id, control_for_class(labels[i].klass)}].push_back(i);

    int64_t tp = 0, fp = 0, checked = 0, declared = 0;
    double analyst_minutes = 0.0;
    std::map<std::string, int64_t> action_counts;
    std::set<size_t> seen_any, seen_alert;
    std::map<std::pair<ResourceId, ControlId>, int64_t> match_counts;

    const std::vector<ChainedEntry> entries = log.read_all();
    for (const auto& entry : entries) {
        const EvidenceRecord& r = entry.record;
        if (r.control_id == "SCAN.FAMILY.DECLARED") ++declared;
        if (r.control_id == "SCAN.FAMILY.CHECKED") ++checked;
        ++action_counts[to_string(r.action)];
        analyst_minutes += action_minutes(r.action);

        auto it = label_keys.find({r.resource_id, r.control_id});
        bool alert = r.action != ActionKind::log;
        if (it != label_keys.end()) {
            for (size_t i : it->second) seen_any.insert(i);
            if (alert) {
                ++tp;
                ++match_counts[it->first];
                for (size_t i : it->second) seen_alert.insert(i);
            }
        } else if (alert) {
            ++fp;
        }
    }

    std::map<std::string, int64_t> detected_by_class, recurrences_by_class;
    for (const auto& l : labels) {
        detected_by_class[l.klass]; // zero-initialize every class
        recurrences_by_class[l.klass];
    }
    for (size_t i : seen_alert) ++detected_by_class[labels[i].klass];
    for (const auto& [key, n] : match_counts) {
        const auto& idxs = label_keys.at(key);
        recurrences_by_class[labels[idxs.front()].klass] += std::max<int64_t>(n - 1, 0);
    }

    int64_t alerts = tp + fp;
    int64_t incidents = tp;
    double reference_minutes = double(alerts) * 15.0;
    double virtual_seconds = double(kReplayWindowMs) / 1000.0;

    json m;
    m["records"] = entries.size();
    m["alerts"] = alerts;
    m["tp"] = tp;
    m["fp"] = fp;
    m["fpr_pct"] = alerts > 0 ? json(false_positive_rate_pct(tp, fp)) : json(nullptr);
    m["labels_total"] = labels.size();
    m["labels_seen"] = seen_any.size();
    m["recall_before_triage"] =
        labels.empty() ? json(nullptr) : json(double(seen_any.size()) / double(labels.size()));
    m["detected_by_class"] = detected_by_class;
    m["recurrences_by_class"] = recurrences_by_class;
    m["incidents"] = incidents;
    m["checked_families"] = checked;
    m["declared_families"] = declared;
    m["coverage_pct"] = declared > 0 ? json(coverage_pct(checked, declared)) : json(nullptr);
    m["eps_virtual"] = double(entries.size()) / virtual_seconds;
    m["analyst_minutes"] = analyst_minutes;
    m["reference_minutes"] = reference_minutes;
    m["cost_reduction_pct"] = reference_minutes > 0.0
                                  ? json(cost_reduction_pct(reference_minutes, analyst_minutes))
                                  : json(nullptr);
    m["actions"] = action_counts;
    return m;
}

namespace {

struct MetricSeries {
    std::map<std::string, std::map<std::string, std::vector<double>>> by_config;

    void add(const std::string& config, const std::string& metric, double v) {
        by_config[config][metric].push_back(v);
    }
};

const std::vector<std::string>& table_metrics() {
    static const std::vector<std::string> m{"fpr_pct",      "ir_pct",
                                            "recall_before_triage", "coverage_pct",
                                            "cost_reduction_pct",   "eps_virtual"};
    return m;
}

void write_table2_csv(const std::filesystem::path& path, const std::vector<std::string>& configs,
                      MetricSeries& series) {
    std::ofstream f(path);
    f << "metric";
    for (const auto& name : configs) f << ',' << name;
    f << '\n';
    for (const auto& metric : table_metrics()) {
        f << metric;
        for (const auto& name : configs) {
            const auto& vals = series.by_config[name][metric];
            if (vals.empty()) {
                f << ",na";
                continue;
            }
            SummaryStats st = summarize(vals);
            f << ',' << fmt_g(st.mean);
            if (st.sd) f << "+/-" << fmt_g(*st.sd);
        }
        f << '\n';
    }
}

void write_figure2_csv(const std::filesystem::path& path, int node_count,
                       const std::vector<std::pair<std::string, double>>& eps) {
    std::ofstream f(path);
    f << "node_count,config,events_per_second\n";
    for (const auto& [name, mean] : eps)
        f << node_count << ',' << name << ',' << fmt_g(mean) << '\n';
}

} // namespace

CompareResult compare_runs(const CompareOptions& opt) {
    if (opt.configs.size() < 2)
        fail(Errc::bad_config, "compare needs at least two configurations");
    if (opt.repetitions < 1) fail(Errc::bad_config, "compare needs at least one repetition");
    std::set<std::string> names;
    for (const auto& c : opt.configs)
        if (!names.insert(c.name).second)
            fail(Errc::bad_config, "duplicate configuration name: " + c.name);
    std::filesystem::create_directories(opt.out_dir);

    MetricSeries series;
    std::map<std::string, std::vector<double>> eps_real; // config -> events/s, wall clock

    for (int rep = 0; rep < opt.repetitions; ++rep) {
        uint64_t rep_seed = Rng::derive(opt.seed, 1000 + uint64_t(rep));
        Scenario scen = generate_scenario(rep_seed, opt.scale);
        inject_scenario(scen, opt.count_per_class);
        {
            json labels = json::array();
            for (const auto& l : scen.labels) labels.push_back(l);
            std::ofstream out(opt.out_dir / ("labels-r" + std::to_string(rep) + ".json"));
            out << labels.dump(2) << '\n';
        }

        for (const auto& cfg : opt.configs) {
            std::string run_id = cfg.name + "-r" + std::to_string(rep);
            ReplayOptions ro;
            ro.config = cfg;
            ro.profile = opt.profile;
            ro.engine = opt.engine;
            ro.evidence_dir = opt.out_dir / ("run-" + run_id);
            ReplayResult res = run_replay(scen, ro);

            double ir = 0.0;
            if (cfg.remediation) {
                BaselineConfig shadow = cfg;
                shadow.remediation = false;
                shadow.name += "_shadow";
                ReplayOptions so = ro;
                so.config = shadow;
                so.evidence_dir = opt.out_dir / ("run-" + run_id + "-shadow");
                ReplayResult sres = run_replay(scen, so);
                int64_t before = sres.metrics.at("incidents").get<int64_t>();
                int64_t after = res.metrics.at("incidents").get<int64_t>();
                ir = before > 0 ? incident_reduction_pct(before, after) : 0.0;
                res.metrics["incidents_unremediated"] = before;
            }
            res.metrics["ir_pct"] = ir;

            {
                std::ofstream out(opt.out_dir / ("metrics-" + run_id + ".json"));
                out << res.metrics.dump(2) << '\n';
            }
            for (const auto& metric : table_metrics()) {
                const json& v = res.metrics.at(metric);
                if (v.is_number()) series.add(cfg.name, metric, v.get<double>());
            }
            if (res.wall_ms > 0)
                eps_real[cfg.name].push_back(double(res.events_processed) /
                                             (double(res.wall_ms) / 1000.0));
            else
                eps_real[cfg.name].push_back(double(res.events_processed) * 1000.0);
        }
    }

    CompareResult out;
    out.runs_csv = opt.out_dir / "runs.csv";
    out.table2_csv = opt.out_dir / "table2.csv";
    out.figure2_csv = opt.out_dir / "figure2.csv";
    out.welch_csv = opt.out_dir / "welch.csv";

    {
        std::ofstream f(out.runs_csv);
        f << "run_id,config,metric,value\n";
        for (const auto& cfg : opt.configs)
            for (const auto& metric : table_metrics()) {
                const auto& vals = series.by_config[cfg.name][metric];
                for (size_t r = 0; r < vals.size(); ++r)
                    f << cfg.name << "-r" << r << ',' << cfg.name << ',' << metric << ','
                      << fmt_g(vals[r]) << '\n';
            }
    }
    std::vector<std::string> config_names;
    for (const auto& cfg : opt.configs) config_names.push_back(cfg.name);

    write_table2_csv(out.table2_csv, config_names, series);
    {
        std::vector<std::pair<std::string, double>> eps;
        for (const auto& name : config_names) {
            const auto& vals = eps_real[name];
            if (!vals.empty()) eps.emplace_back(name, summarize(vals).mean);
        }
        write_figure2_csv(out.figure2_csv, opt.scale.node_count, eps);
    }
    {
        std::ofstream f(out.welch_csv);
        f << "metric,config_a,config_b,t,df,p\n";
        const std::string& candidate = opt.configs.back().name;
        for (const std::string metric : {"fpr_pct", "ir_pct", "eps_virtual"}) {
            const auto& cand = series.by_config[candidate][metric];
            if (cand.size() < 2) continue;
            for (size_t i = 0; i + 1 < opt.configs.size(); ++i) {
                const auto& other = series.by_config[opt.configs[i].name][metric];
                if (other.size() < 2) continue;
                WelchResult w = welch_t_test(other, cand);
                f << metric << ',' << opt.configs[i].name << ',' << candidate << ','
                  << fmt_g(w.t) << ',' << fmt_g(w.df) << ',' << fmt_g(w.p) << '\n';
            }
        }
    }

    json summary = json::object();
    for (const auto& cfg : opt.configs) {
        json per = json::object();
        for (const auto& metric : table_metrics()) {
            const auto& vals = series.by_config[cfg.name][metric];
            if (vals.empty()) {
                per[metric] = nullptr;
                continue;
            }
            SummaryStats st = summarize(vals);
            json entry{{"mean", st.mean}, {"n", st.n}, {"values", vals}};
            entry["sd"] = st.sd ? json(*st.sd) : json(nullptr);
            per[metric] = entry;
        }
        const auto& er = eps_real[cfg.name];
        if (!er.empty()) per["events_per_second_wall"] = summarize(er).mean;
        summary[cfg.name] = per;
    }
    out.summary = summary;
    {
        std::ofstream f(opt.out_dir / "summary.json");
        f << summary.dump(2) << '\n';
    }
    {
        // Everything a report rebuild needs that the logs cannot carry.
        json meta{{"seed", opt.seed},
                  {"scale", opt.scale.name},
                  {"node_count", opt.scale.node_count},
                  {"repetitions", opt.repetitions},
                  {"count_per_class", opt.count_per_class},
                  {"profile", opt.profile},
                  {"virtual_window_ms", kReplayWindowMs},
                  {"configs", config_names}};
        std::ofstream f(opt.out_dir / "compare-meta.json");
        f << meta.dump(2) << '\n';
    }
    return out;
}

ReportResult rebuild_report(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "compare-meta.json");
    if (!mf)
        fail(Errc::bad_config,
             "not a comparison directory (compare-meta.json missing): " + dir.string());
    const json meta = json::parse(mf);
    const auto configs = meta.at("configs").get<std::vector<std::string>>();
    const int reps = meta.at("repetitions").get<int>();
    const int node_count = meta.at("node_count").get<int>();

    MetricSeries series;
    for (int rep = 0; rep < reps; ++rep) {
        std::ifstream lf(dir / ("labels-r" + std::to_string(rep) + ".json"));
        if (!lf)
            fail(Errc::storage_failure, "missing label file for repetition " + std::to_string(rep));
        const json rows = json::parse(lf);
        std::vector<InjectionLabel> labels;
        for (const auto& row : rows) labels.push_back(row.get<InjectionLabel>());

        for (const auto& name : configs) {
            const std::string run_id = name + "-r" + std::to_string(rep);
            EvidenceLog log(dir / ("run-" + run_id));
            json m = recompute_metrics(log, labels);
            double ir = 0.0;
            const auto shadow_dir = dir / ("run-" + run_id + "-shadow");
            if (std::filesystem::exists(shadow_dir)) {
                EvidenceLog shadow(shadow_dir);
                const json sm = recompute_metrics(shadow, labels);
                int64_t before = sm.at("incidents").get<int64_t>();
                int64_t after = m.at("incidents").get<int64_t>();
                ir = before > 0 ? incident_reduction_pct(before, after) : 0.0;
            }
            m["ir_pct"] = ir;
            for (const auto& metric : table_metrics()) {
                const json& v = m.at(metric);
                if (v.is_number()) series.add(name, metric, v.get<double>());
            }
        }
    }

    ReportResult out;
    out.table2_csv = dir / "table2.csv";
    out.figure2_csv = dir / "figure2.csv";
    write_table2_csv(out.table2_csv, configs, series);

    std::ifstream sf(dir / "summary.json");
    if (!sf) fail(Errc::storage_failure, "missing summary.json: " + dir.string());
    const json summary = json::parse(sf);
    std::vector<std::pair<std::string, double>> eps;
    for (const auto& name : configs) {
        const json& per = summary.at(name);
        if (per.contains("events_per_second_wall"))
            eps.emplace_back(name, per.at("events_per_second_wall").get<double>());
    }
    write_figure2_csv(out.figure2_csv, node_count, eps);
    return out;
}

} // namespace argus
