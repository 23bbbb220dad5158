#pragma once

// Append-only event log with deterministic replay support.
//
// Format: JSON-lines, one record per line. Records are never mutated or
// deleted; sequence numbers start at 1 and increase by exactly 1. A log
// truncated at any record boundary folds into a valid, smaller snapshot;
// a torn or malformed line is an integrity error, never silently accepted.
//
// Record kinds:
//   EidoIngested    payload = the canonical document JSON
//   IncidentCreated payload = {"incidentId": ...}
//   EidoLinked      payload = {"eidoId":..., "incidentId":..., "breakdown":...|null}

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/correlator.hpp"
#include "eidolink/eido.hpp"
#include "eidolink/timeutil.hpp"

namespace eidolink {

struct StoreError : std::runtime_error {
    explicit StoreError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class EventKind { EidoIngested, IncidentCreated, EidoLinked };

inline std::string_view event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::EidoIngested: return "EidoIngested";
        case EventKind::IncidentCreated: return "IncidentCreated";
        case EventKind::EidoLinked: return "EidoLinked";
    }
    return "?";
}

inline EventKind event_kind_from_name(std::string_view name) {
    if (name == "EidoIngested") return EventKind::EidoIngested;
    if (name == "IncidentCreated") return EventKind::IncidentCreated;
    if (name == "EidoLinked") return EventKind::EidoLinked;
    throw StoreError("unknown event kind '" + std::string(name) + "'");
}

struct EventLogRecord {
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::EidoIngested;
    Json payload;
    Instant recorded_at;

    Json to_json() const {
        return Json{{"sequence", sequence},
                    {"kind", std::string(event_kind_name(kind))},
                    {"payload", payload},
                    {"recordedAt", recorded_at.to_string()}};
    }

    static EventLogRecord from_json(const Json& j) {
        EventLogRecord r;
        r.sequence = j.at("sequence").get<std::uint64_t>();
        r.kind = event_kind_from_name(j.at("kind").get<std::string>());
        r.payload = j.at("payload");
        r.recorded_at = parse_instant(j.at("recordedAt").get<std::string>());
        return r;
    }
};

// Single-writer append-only JSON-lines log.
class EventLog {
  public:
    explicit EventLog(std::string path, bool fsync_each_append = false)
        : path_(std::move(path)), fsync_(fsync_each_append) {
        next_sequence_ = scan_max_sequence() + 1;
    }

    const std::string& path() const { return path_; }
    std::uint64_t next_sequence() const { return next_sequence_; }

    std::uint64_t append(EventKind kind, Json payload, const Instant& recorded_at) {
        EventLogRecord rec;
        rec.sequence = next_sequence_;
        rec.kind = kind;
        rec.payload = std::move(payload);
        rec.recorded_at = recorded_at;

        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw StoreError("cannot open event log for append: " + path_);
        out << rec.to_json().dump() << '\n';
        out.flush();
        if (!out) throw StoreError("event log write failed: " + path_);
        if (fsync_) {
            // ofstream has no portable fsync; reopen via stdio for the sync.
            out.close();
            if (FILE* f = std::fopen(path_.c_str(), "ab")) {
                std::fflush(f);
                std::fclose(f);
            }
        }
        return next_sequence_++;
    }

    // Reads and validates the whole log: every line parses, kinds are known,
    // and sequence numbers run 1..N without gaps.
    std::vector<EventLogRecord> read_all() const { return read_file(path_); }

    static std::vector<EventLogRecord> read_file(const std::string& path) {
        std::vector<EventLogRecord> records;
        std::ifstream in(path, std::ios::binary);
        if (!in) return records;  // absent log == empty log
        std::string line;
        std::uint64_t expected = 1;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            Json j;
            try {
                j = Json::parse(line);
            } catch (const Json::parse_error& e) {
                throw StoreError("event log " + path + ", line " + std::to_string(lineno) +
                                 ": malformed record: " + e.what());
            }
            EventLogRecord rec;
            try {
                rec = EventLogRecord::from_json(j);
            } catch (const std::exception& e) {
                throw StoreError("event log " + path + ", line " + std::to_string(lineno) +
                                 ": " + e.what());
            }
            if (rec.sequence != expected)
                throw StoreError("event log " + path + ": sequence gap at line " +
                                 std::to_string(lineno) + ": expected " +
                                 std::to_string(expected) + ", found " +
                                 std::to_string(rec.sequence));
            ++expected;
            records.push_back(std::move(rec));
        }
        return records;
    }

  private:
    std::uint64_t scan_max_sequence() const {
        auto records = read_all();
        return records.empty() ? 0 : records.back().sequence;
    }

    std::string path_;
    bool fsync_;
    std::uint64_t next_sequence_ = 1;
};

// ---------------------------------------------------------------------------
// Snapshot: a consistent point-in-time fold over the log.
// ---------------------------------------------------------------------------

struct StoreSnapshot {
    std::vector<IncidentContext> incidents;  // only incidents with >= 1 link
    std::map<std::string, EidoDocument> documents;
    std::vector<std::string> ingest_order;  // eidoIds in ingestion order, with re-ingests
    std::uint64_t incident_counter = 0;     // highest INC- ordinal seen

    const EidoDocument* find_document(const std::string& eido_id) const {
        auto it = documents.find(eido_id);
        return it == documents.end() ? nullptr : &it->second;
    }

    IncidentContext* find_incident(const std::string& incident_id) {
        for (auto& inc : incidents)
            if (inc.incident_id == incident_id) return &inc;
        return nullptr;
    }
    const IncidentContext* find_incident(const std::string& incident_id) const {
        for (const auto& inc : incidents)
            if (inc.incident_id == incident_id) return &inc;
        return nullptr;
    }
};

inline std::uint64_t incident_ordinal(const std::string& incident_id) {
    if (incident_id.rfind("INC-", 0) != 0) return 0;
    try {
        return std::stoull(incident_id.substr(4));
    } catch (...) {
        return 0;
    }
}

inline std::string make_incident_id(std::uint64_t ordinal) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "INC-%06llu", static_cast<unsigned long long>(ordinal));
    return buf;
}

inline StoreSnapshot snapshot(const std::vector<EventLogRecord>& records,
                              const TextVectorizer& vectorizer) {
    StoreSnapshot snap;
    // Incidents created but not yet linked; they surface once linked.
    std::map<std::string, Instant> pending_created;

    for (const auto& rec : records) {
        switch (rec.kind) {
            case EventKind::EidoIngested: {
                EidoDocument doc = parse_document(rec.payload.dump());
                snap.ingest_order.push_back(doc.eido_id);
                snap.documents[doc.eido_id] = std::move(doc);
                break;
            }
            case EventKind::IncidentCreated: {
                std::string id = rec.payload.at("incidentId").get<std::string>();
                pending_created[id] = rec.recorded_at;
                snap.incident_counter = std::max(snap.incident_counter, incident_ordinal(id));
                break;
            }
            case EventKind::EidoLinked: {
                std::string eido_id = rec.payload.at("eidoId").get<std::string>();
                std::string incident_id = rec.payload.at("incidentId").get<std::string>();
                auto doc_it = snap.documents.find(eido_id);
                if (doc_it == snap.documents.end())
                    throw StoreError("link record " + std::to_string(rec.sequence) +
                                     " references unknown document '" + eido_id + "'");
                IncidentContext* inc = snap.find_incident(incident_id);
                if (!inc) {
                    auto created = pending_created.find(incident_id);
                    if (created == pending_created.end())
                        throw StoreError("link record " + std::to_string(rec.sequence) +
                                         " references unknown incident '" + incident_id + "'");
                    IncidentContext fresh;
                    fresh.incident_id = incident_id;
                    fresh.created_at = created->second;
                    snap.incidents.push_back(std::move(fresh));
                    inc = &snap.incidents.back();
                }
                inc->absorb(doc_it->second, vectorizer);
                break;
            }
        }
    }
    return snap;
}

// ---------------------------------------------------------------------------
// Integrity check used by the check-log command.
// ---------------------------------------------------------------------------

struct IntegrityReport {
    bool intact = false;
    std::string error;
    std::uint64_t record_count = 0;
};

inline IntegrityReport check_log_integrity(const std::string& path,
                                           const TextVectorizer& vectorizer) {
    IntegrityReport report;
    try {
        auto records = EventLog::read_file(path);
        report.record_count = records.size();
        snapshot(records, vectorizer);  // payloads must fold cleanly
        report.intact = true;
    } catch (const std::exception& e) {
        report.error = e.what();
    }
    return report;
}

}  // namespace eidolink
