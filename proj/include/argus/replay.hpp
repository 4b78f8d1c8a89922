#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "argus/correlation.hpp"
#include "argus/evidence_log.hpp"
#include "argus/scenario.hpp"

namespace argus {

struct ReplayOptions {
    BaselineConfig config;
    std::string profile = "baseline";
    EngineConfig engine = EngineConfig::defaults();
    std::filesystem::path evidence_dir; // must be empty or absent
    // When set, the post-run world and the orchestrator bookkeeping are
    // persisted here (world/ plus orchestrator.json), so a later CLI
    // invocation can list, approve or roll back what this run produced.
    std::filesystem::path state_dir;
};

struct ReplayResult {
    json metrics;                 // recomputed from the written log + labels
    uint64_t records = 0;         // evidence entries written
    uint64_t events_processed = 0; // raw payloads examined + scan events emitted
    int64_t wall_ms = 0;          // real elapsed time; throughput proxy only
};

/// One deterministic pass over the scenario: 10 scan epochs, raw events
/// interleaved with operator activity in virtual-time order, per-batch
/// dedup, scan findings gated at medium severity. Every record is
/// buffered and appended in (wrote_at, event_id) order, so the log reads
/// as a timeline even though remediation latency reorders completion.
/// The scenario is taken by value: remediation mutates platform state.
ReplayResult run_replay(Scenario s, const ReplayOptions& opt);

/// Rebuilds every reported metric from the evidence log and the label
/// file alone. Alerts are records with action in {patch, plan, ticket};
/// a label is matched through (resource_id, control_for_class(class)).
json recompute_metrics(const EvidenceLog& log, const std::vector<InjectionLabel>& labels);

struct CompareOptions {
    uint64_t seed = 1;
    ScaleSpec scale = scale_from_string("desk");
    int repetitions = 5;
    int count_per_class = 20;
    std::string profile = "baseline";
    EngineConfig engine = EngineConfig::defaults();
    std::vector<BaselineConfig> configs; // >= 2; the last one is the candidate
    std::filesystem::path out_dir;
};

struct CompareResult {
    json summary; // per config: per metric {mean, sd, n, values}
    std::filesystem::path runs_csv;    // run_id,config,metric,value
    std::filesystem::path table2_csv;  // metric,<config columns>; cells mean+/-sd
    std::filesystem::path figure2_csv; // node_count,config,events_per_second
    std::filesystem::path welch_csv;   // metric,config_a,config_b,t,df,p
};

/// Replays `repetitions` freshly generated worlds under every config.
/// Remediation-enabled configs additionally get a remediation-off shadow
/// run on the same world, which supplies the incident-reduction
/// numerator. Fewer than two configs -> bad-config.
/// Alongside the CSVs the directory gets compare-meta.json (seed, scale,
/// node count, virtual window, config names), which report rebuilds read.
CompareResult compare_runs(const CompareOptions& opt);

struct ReportResult {
    std::filesystem::path table2_csv;
    std::filesystem::path figure2_csv;
};

/// Regenerates table2.csv and figure2.csv in a comparison directory from
/// what is on disk: every table metric is recomputed from the evidence
/// logs and label files alone. Wall-clock throughput for the figure is
/// the one quantity a log cannot carry, so it comes from the recorded
/// summary.json. Unchanged logs regenerate the CSVs byte-identical.
ReportResult rebuild_report(const std::filesystem::path& dir);

} // namespace argus
