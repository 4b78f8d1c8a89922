#include "argus/evidence_log.hpp"

#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

namespace argus {

namespace {

const std::string kGenesis(64, '0');

std::string chain_input(const std::string& prev, uint64_t seq, const std::string& canon) {
    return prev + "|" + std::to_string(seq) + "|" + canon;
}

} // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        fail(Errc::storage_failure, "sha256 failed");
    static const char hex[] = "0123456789abcdef";
    std::string out(len * 2, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[md[i] >> 4];
        out[2 * i + 1] = hex[md[i] & 0xf];
    }
    return out;
}

EvidenceLog::EvidenceLog(std::filesystem::path dir, uint64_t records_per_segment)
    : dir_(std::move(dir)), records_per_segment_(records_per_segment) {
    if (records_per_segment_ == 0) fail(Errc::bad_config, "segment size must be positive");
    std::filesystem::create_directories(dir_);
    last_digest_ = kGenesis;
    recover();
}

std::filesystem::path EvidenceLog::segment_path(uint64_t segment_index) const {
    char name[32];
    std::snprintf(name, sizeof name, "segment-%06llu.ndjson",
                  static_cast<unsigned long long>(segment_index));
    return dir_ / name;
}

void EvidenceLog::recover() {
    // Rebuild append state from existing segments; content errors are
    // deferred to verify() so a damaged log can still be inspected.
    for (uint64_t seg = 0;; ++seg) {
        std::ifstream in(segment_path(seg));
        if (!in) break;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                ++next_seq_;
                continue;
            }
            if (j.contains("digest") && j.at("digest").is_string())
                last_digest_ = j.at("digest").get<std::string>();
            if (j.contains("record") && j.at("record").is_object() &&
                j.at("record").contains("event_id") && j.at("record").at("event_id").is_string())
                event_ids_.insert(j.at("record").at("event_id").get<std::string>());
            ++next_seq_;
        }
    }
}

uint64_t EvidenceLog::append(const EvidenceRecord& record) {
    if (!event_ids_.insert(record.event_id).second)
        fail(Errc::duplicate_event, "event already in log: " + record.event_id);
    uint64_t seq = next_seq_;
    json rec_json = record;
    std::string canon = canonical_line(rec_json);
    std::string digest = sha256_hex(chain_input(last_digest_, seq, canon));
    json envelope{{"digest", digest}, {"prev", last_digest_}, {"record", rec_json}, {"seq", seq}};

    std::ofstream out(segment_path(seq / records_per_segment_), std::ios::app);
    if (!out) fail(Errc::storage_failure, "cannot open evidence segment for append");
    out << canonical_line(envelope) << '\n';
    out.flush();
    if (!out) fail(Errc::storage_failure, "evidence segment write failed");

    last_digest_ = digest;
    ++next_seq_;
    return seq;
}

std::vector<ChainedEntry> EvidenceLog::read_all() const {
    std::vector<ChainedEntry> out;
    for (uint64_t seg = 0;; ++seg) {
        std::ifstream in(segment_path(seg));
        if (!in) break;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                fail(Errc::parse_error, "evidence log line is not valid JSON");
            ChainedEntry e;
            e.seq = j.at("seq").get<uint64_t>();
            e.prev = j.at("prev").get<std::string>();
            e.digest = j.at("digest").get<std::string>();
            e.record = j.at("record").get<EvidenceRecord>();
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<EvidenceRecord> EvidenceLog::query(const QueryFilter& filter) const {
    std::vector<EvidenceRecord> out;
    for (const auto& e : read_all()) {
        const EvidenceRecord& r = e.record;
        if (filter.action && r.action != *filter.action) continue;
        if (filter.control_id && r.control_id != *filter.control_id) continue;
        if (filter.from_ms && r.wrote_at < *filter.from_ms) continue;
        if (filter.to_ms && r.wrote_at > *filter.to_ms) continue;
        out.push_back(r);
    }
    return out;
}

VerifyResult EvidenceLog::verify() const {
    VerifyResult res;
    std::string prev = kGenesis;
    uint64_t expect_seq = 0;
    std::set<std::string> seen_ids;
    for (uint64_t seg = 0;; ++seg) {
        std::ifstream in(segment_path(seg));
        if (!in) break;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto bad = [&](uint64_t seq) {
                res.ok = false;
                res.first_bad_seq = seq;
                return res;
            };
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) return bad(expect_seq);
            if (!j.contains("seq") || !j.at("seq").is_number_unsigned() ||
                j.at("seq").get<uint64_t>() != expect_seq)
                return bad(expect_seq);
            if (!j.contains("prev") || j.at("prev") != prev) return bad(expect_seq);
            if (!j.contains("record") || !j.at("record").is_object()) return bad(expect_seq);
            std::string canon = canonical_line(j.at("record"));
            std::string want = sha256_hex(chain_input(prev, expect_seq, canon));
            if (!j.contains("digest") || j.at("digest") != want) return bad(expect_seq);
            std::string event_id = j.at("record").value("event_id", "");
            if (event_id.empty() || !seen_ids.insert(event_id).second) return bad(expect_seq);
            prev = want;
            ++expect_seq;
            ++res.entries;
        }
    }
    return res;
}

} // namespace argus
