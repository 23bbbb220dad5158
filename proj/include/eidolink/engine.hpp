#pragma once

// Correlation engine: commits one decision at a time against the event log
// and keeps the in-memory incident state in sync with what was written.
//
// Determinism contract: recordedAt of every record emitted while processing
// a document equals that document's issuedTimestamp, so the log is a pure
// function of (inputs, config) — byte-identical across runs. Wall-clock
// stamps would break replay verification.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/composite.hpp"
#include "eidolink/correlator.hpp"
#include "eidolink/eido.hpp"
#include "eidolink/store.hpp"
#include "eidolink/textvec.hpp"

namespace eidolink {

struct DecisionRecord {
    std::string eido_id;
    DecisionKind kind = DecisionKind::NewIncident;
    std::string incident_id;
    std::vector<SimilarityBreakdown> ranked;

    Json to_json() const {
        Json j = Json::object();
        j["eidoId"] = eido_id;
        j["decision"] = kind == DecisionKind::LinkTo ? "link" : "new-incident";
        j["incidentId"] = incident_id;
        Json cands = Json::array();
        for (const auto& b : ranked) cands.push_back(breakdown_to_json(b));
        j["candidates"] = std::move(cands);
        return j;
    }
};

class CorrelationEngine {
  public:
    CorrelationEngine(EventLog* log, CorrelationConfig config,
                      std::shared_ptr<const TextVectorizer> vectorizer)
        : log_(log),
          config_(config.normalized()),
          vectorizer_(std::move(vectorizer)) {}

    // Rebuilds in-memory state from an existing log.
    void restore(const std::vector<EventLogRecord>& records) {
        state_ = snapshot(records, *vectorizer_);
    }

    const StoreSnapshot& state() const { return state_; }
    const CorrelationConfig& config() const { return config_; }

    // Correlates without committing (the score command).
    CorrelationDecision preview(const EidoDocument& doc) const {
        return correlate(doc, state_.incidents, config_, *vectorizer_);
    }

    // Correlates and commits: appends EidoIngested, then IncidentCreated when
    // a new context starts, then EidoLinked. Exactly one decision at a time.
    DecisionRecord process(const EidoDocument& doc) {
        CorrelationDecision decision = preview(doc);

        DecisionRecord out;
        out.eido_id = doc.eido_id;
        out.kind = decision.kind;
        out.ranked = decision.ranked;

        const Instant& stamp = doc.issued_timestamp;
        if (log_) log_->append(EventKind::EidoIngested, document_to_json(doc), stamp);
        state_.documents[doc.eido_id] = doc;
        state_.ingest_order.push_back(doc.eido_id);

        const SimilarityBreakdown* winner = nullptr;
        if (decision.kind == DecisionKind::LinkTo) {
            out.incident_id = decision.incident_id;
            for (const auto& b : decision.ranked) {
                if (b.incident_id == decision.incident_id) {
                    winner = &b;
                    break;
                }
            }
        } else {
            out.incident_id = make_incident_id(++state_.incident_counter);
            if (log_)
                log_->append(EventKind::IncidentCreated, Json{{"incidentId", out.incident_id}},
                             stamp);
            IncidentContext fresh;
            fresh.incident_id = out.incident_id;
            fresh.created_at = stamp;
            state_.incidents.push_back(std::move(fresh));
        }

        Json link = Json::object();
        link["eidoId"] = doc.eido_id;
        link["incidentId"] = out.incident_id;
        link["breakdown"] = winner ? breakdown_to_json(*winner) : Json(nullptr);
        if (log_) log_->append(EventKind::EidoLinked, link, stamp);

        IncidentContext* inc = state_.find_incident(out.incident_id);
        inc->absorb(doc, *vectorizer_);
        return out;
    }

  private:
    EventLog* log_;  // null: in-memory only (used by replay)
    CorrelationConfig config_;
    std::shared_ptr<const TextVectorizer> vectorizer_;
    StoreSnapshot state_;
};

// ---------------------------------------------------------------------------
// Replay verification: re-run correlation over the ingested documents in
// sequence order and compare the decisions against the recorded ones.
// ---------------------------------------------------------------------------

struct ReplayReport {
    bool matches = false;
    std::optional<std::uint64_t> first_divergence_sequence;
    std::string detail;
    std::vector<DecisionRecord> decisions;  // the recomputed decision log
};

inline ReplayReport replay(const std::vector<EventLogRecord>& records,
                           const CorrelationConfig& config,
                           std::shared_ptr<const TextVectorizer> vectorizer) {
    ReplayReport report;

    CorrelationEngine engine(nullptr, config, vectorizer);

    // Recorded decision stream: (sequence, kind, payload) of the
    // IncidentCreated / EidoLinked records, in order.
    struct Recorded {
        std::uint64_t sequence;
        EventKind kind;
        Json payload;
    };
    std::vector<Recorded> recorded;
    std::vector<std::pair<std::uint64_t, EidoDocument>> ingested;
    for (const auto& rec : records) {
        if (rec.kind == EventKind::EidoIngested)
            ingested.emplace_back(rec.sequence, parse_document(rec.payload.dump()));
        else
            recorded.push_back({rec.sequence, rec.kind, rec.payload});
    }

    size_t cursor = 0;
    auto diverge = [&](std::optional<std::uint64_t> seq, std::string why) {
        report.matches = false;
        report.first_divergence_sequence = seq;
        report.detail = std::move(why);
    };

    for (auto& [seq, doc] : ingested) {
        DecisionRecord decision = engine.process(doc);
        report.decisions.push_back(decision);

        std::vector<Recorded> expected;
        if (decision.kind == DecisionKind::NewIncident)
            expected.push_back({0, EventKind::IncidentCreated,
                                Json{{"incidentId", decision.incident_id}}});
        const SimilarityBreakdown* winner = nullptr;
        for (const auto& b : decision.ranked)
            if (b.incident_id == decision.incident_id) {
                winner = &b;
                break;
            }
        Json link = Json::object();
        link["eidoId"] = decision.eido_id;
        link["incidentId"] = decision.incident_id;
        link["breakdown"] = winner ? breakdown_to_json(*winner) : Json(nullptr);
        expected.push_back({0, EventKind::EidoLinked, link});

        for (const auto& exp : expected) {
            if (cursor >= recorded.size()) {
                diverge(std::nullopt, "log ends before expected " +
                                          std::string(event_kind_name(exp.kind)) +
                                          " for document '" + decision.eido_id + "'");
                return report;
            }
            const Recorded& got = recorded[cursor++];
            if (got.kind != exp.kind) {
                diverge(got.sequence, "expected " + std::string(event_kind_name(exp.kind)) +
                                          ", log has " +
                                          std::string(event_kind_name(got.kind)));
                return report;
            }
            if (exp.kind == EventKind::IncidentCreated) {
                auto want = exp.payload.at("incidentId").get<std::string>();
                auto have = got.payload.value("incidentId", std::string());
                if (want != have) {
                    diverge(got.sequence,
                            "incidentId mismatch: replay derives '" + want + "', log has '" +
                                have + "'");
                    return report;
                }
            } else {
                auto want_eido = exp.payload.at("eidoId").get<std::string>();
                auto want_inc = exp.payload.at("incidentId").get<std::string>();
                auto have_eido = got.payload.value("eidoId", std::string());
                auto have_inc = got.payload.value("incidentId", std::string());
                if (want_eido != have_eido || want_inc != have_inc) {
                    diverge(got.sequence, "link mismatch: replay derives " + want_eido + "->" +
                                              want_inc + ", log has " + have_eido + "->" +
                                              have_inc);
                    return report;
                }
                // Breakdown sigma is compared numerically to catch tampering.
                const Json& want_b = exp.payload.at("breakdown");
                const Json& have_b =
                    got.payload.contains("breakdown") ? got.payload.at("breakdown") : Json();
                bool want_null = want_b.is_null();
                bool have_null = have_b.is_null();
                if (want_null != have_null) {
                    diverge(got.sequence, "breakdown presence mismatch");
                    return report;
                }
                if (!want_null) {
                    double ws = want_b.at("sigma").get<double>();
                    double hs = have_b.value("sigma", -1.0);
                    if (std::abs(ws - hs) > 1e-9) {
                        diverge(got.sequence, "sigma mismatch: replay derives " +
                                                  std::to_string(ws) + ", log has " +
                                                  std::to_string(hs));
                        return report;
                    }
                }
            }
        }
    }

    if (cursor != recorded.size()) {
        diverge(recorded[cursor].sequence, "log has extra decision records beyond replay");
        return report;
    }
    report.matches = true;
    return report;
}

}  // namespace eidolink
