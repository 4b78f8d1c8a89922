#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "argus/types.hpp"

namespace argus {

/// SHA-256 hex digest of a byte string.
std::string sha256_hex(const std::string& bytes);

struct ChainedEntry {
    uint64_t seq = 0;
    std::string prev;   // digest of the previous entry; 64 zeros at genesis
    std::string digest; // sha256(prev + "|" + seq + "|" + canonical(record))
    EvidenceRecord record;
};

struct VerifyResult {
    bool ok = true;
    std::optional<uint64_t> first_bad_seq; // set when ok is false
    uint64_t entries = 0;
};

struct QueryFilter {
    std::optional<ActionKind> action;
    std::optional<ControlId> control_id;
    std::optional<int64_t> from_ms, to_ms; // inclusive bounds on wrote_at
};

/// Append-only NDJSON evidence log with a per-entry hash chain.
/// Segments roll over every `records_per_segment` entries; files are
/// named segment-%06u.ndjson under `dir`.
class EvidenceLog {
public:
    explicit EvidenceLog(std::filesystem::path dir, uint64_t records_per_segment = 4096);

    /// Rejects a second record with an already-appended event_id
    /// (duplicate-event error). Returns the entry's sequence number.
    uint64_t append(const EvidenceRecord& record);

    uint64_t size() const { return next_seq_; }
    const std::filesystem::path& dir() const { return dir_; }

    /// Streams every entry in order. Corrupt files -> parse-error.
    std::vector<ChainedEntry> read_all() const;

    std::vector<EvidenceRecord> query(const QueryFilter& filter) const;

    /// Recomputes the chain from genesis. Any mismatch, gap or
    /// unparsable line reports the first offending sequence.
    VerifyResult verify() const;

private:
    std::filesystem::path dir_;
    uint64_t records_per_segment_;
    uint64_t next_seq_ = 0;
    std::string last_digest_;
    std::set<std::string> event_ids_;

    std::filesystem::path segment_path(uint64_t segment_index) const;
    void recover();
};

} // namespace argus
