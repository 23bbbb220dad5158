#include <doctest.h>

#include <fstream>
#include <sstream>

#include "eidolink/engine.hpp"
#include "eidolink/store.hpp"
#include "../support/generators.hpp"
#include "../support/tempdir.hpp"

using namespace eidolink;

namespace {

auto g_vec = std::make_shared<HashedVectorizer>();

EidoDocument tiny_doc(const std::string& id, const std::string& issued,
                      const std::string& note = "some note text") {
    EidoDocument d;
    d.eido_id = id;
    d.issued_timestamp = parse_instant(issued);
    NotesComponent nc;
    nc.note_id = "N1";
    nc.comments = note;
    nc.timestamp = d.issued_timestamp;
    d.notes.push_back(std::move(nc));
    return d;
}

}  // namespace

TEST_CASE("append assigns 1-based consecutive sequence numbers") {
    testutil::TempDir tmp("log");
    EventLog log(tmp.str("events.jsonl"));
    Instant t = parse_instant("2026-01-01T00:00:00Z");
    CHECK(log.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000001"}}, t) == 1);
    CHECK(log.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000002"}}, t) == 2);
}

TEST_CASE("append after reopen continues from the persisted maximum") {
    testutil::TempDir tmp("log");
    std::string path = tmp.str("events.jsonl");
    Instant t = parse_instant("2026-01-01T00:00:00Z");
    {
        EventLog log(path);
        log.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000001"}}, t);
        log.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000002"}}, t);
    }
    std::string before;
    {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        before = ss.str();
    }
    EventLog reopened(path);
    // derived by writing, reopening, and checking the persisted max + 1
    CHECK(reopened.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000003"}}, t) ==
          3);
    auto records = reopened.read_all();
    REQUIRE(records.size() == 3);
    CHECK(records[2].sequence == 3);
    // append-only: the existing prefix is byte-identical after the append
    std::string after;
    {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        after = ss.str();
    }
    CHECK(after.substr(0, before.size()) == before);
    CHECK(after.size() > before.size());
}

TEST_CASE("empty log folds to an empty snapshot") {
    testutil::TempDir tmp("log");
    EventLog log(tmp.str("events.jsonl"));
    auto snap = snapshot(log.read_all(), *g_vec);
    CHECK(snap.incidents.empty());
    CHECK(snap.documents.empty());
}

TEST_CASE("ingest/create/link folds to one incident with one link") {
    testutil::TempDir tmp("log");
    EventLog log(tmp.str("events.jsonl"));
    EidoDocument d = tiny_doc("E1", "2026-01-01T00:00:00Z");
    Instant t = d.issued_timestamp;
    log.append(EventKind::EidoIngested, document_to_json(d), t);
    log.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000001"}}, t);
    log.append(EventKind::EidoLinked,
               Json{{"eidoId", "E1"}, {"incidentId", "INC-000001"}, {"breakdown", nullptr}}, t);

    auto snap = snapshot(log.read_all(), *g_vec);
    REQUIRE(snap.incidents.size() == 1);
    CHECK(snap.incidents[0].incident_id == "INC-000001");
    CHECK(snap.incidents[0].linked_eido_ids == std::vector<std::string>{"E1"});
    CHECK(snap.find_document("E1") != nullptr);
    CHECK(snap.incident_counter == 1);
}

TEST_CASE("random engine logs fold to the same state as a brute-force fold") {
    gen::Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        testutil::TempDir tmp("log");
        EventLog log(tmp.str("events.jsonl"));
        CorrelationEngine engine(&log, CorrelationConfig{}, g_vec);
        int n = rng.range(1, 8);
        for (int i = 0; i < n; ++i)
            engine.process(gen::random_document(rng, "E" + std::to_string(i)));

        auto records = log.read_all();
        auto snap = snapshot(records, *g_vec);

        // Brute-force fold: replay create/link records by hand.
        std::map<std::string, std::vector<std::string>> links;
        std::vector<std::string> incident_order;
        std::map<std::string, EidoDocument> docs;
        for (const auto& rec : records) {
            if (rec.kind == EventKind::EidoIngested) {
                EidoDocument d = parse_document(rec.payload.dump());
                docs[d.eido_id] = d;
            } else if (rec.kind == EventKind::IncidentCreated) {
                incident_order.push_back(rec.payload.at("incidentId").get<std::string>());
            } else {
                auto inc = rec.payload.at("incidentId").get<std::string>();
                auto eido = rec.payload.at("eidoId").get<std::string>();
                auto& v = links[inc];
                if (std::find(v.begin(), v.end(), eido) == v.end()) v.push_back(eido);
            }
        }
        REQUIRE(snap.incidents.size() == incident_order.size());
        for (const auto& inc : snap.incidents) {
            CHECK(inc.linked_eido_ids == links[inc.incident_id]);
            // latest activity is the max issued timestamp among linked docs
            std::int64_t latest = 0;
            for (const auto& id : inc.linked_eido_ids)
                latest = std::max(latest, docs[id].issued_timestamp.epoch_micros);
            CHECK(inc.latest_activity.epoch_micros == latest);
        }
        CHECK(snap.documents.size() == docs.size());
    }
}

TEST_CASE("truncation at a record boundary yields a valid smaller snapshot") {
    testutil::TempDir tmp("log");
    std::string path = tmp.str("events.jsonl");
    {
        EventLog log(path);
        CorrelationEngine engine(&log, CorrelationConfig{}, g_vec);
        engine.process(tiny_doc("E1", "2026-01-01T00:00:00Z"));
        engine.process(tiny_doc("E2", "2026-01-05T00:00:00Z", "different words entirely"));
    }
    auto full = EventLog::read_file(path);
    REQUIRE(full.size() == 6);

    // Rewrite the file truncated after each prefix of whole records.
    std::vector<std::string> lines;
    {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) lines.push_back(line);
    }
    for (size_t keep = 0; keep <= lines.size(); ++keep) {
        std::string trunc_path = tmp.str("trunc.jsonl");
        std::ofstream out(trunc_path, std::ios::trunc);
        for (size_t i = 0; i < keep; ++i) out << lines[i] << "\n";
        out.close();
        auto records = EventLog::read_file(trunc_path);
        CHECK(records.size() == keep);
        CHECK_NOTHROW(snapshot(records, *g_vec));
    }
}

TEST_CASE("torn trailing record is an integrity error, not silently accepted") {
    testutil::TempDir tmp("log");
    std::string path = tmp.str("events.jsonl");
    {
        EventLog log(path);
        log.append(EventKind::IncidentCreated, Json{{"incidentId", "INC-000001"}},
                   parse_instant("2026-01-01T00:00:00Z"));
    }
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"sequence":2,"kind":"EidoLinked","payl)";  // torn write
    }
    CHECK_THROWS_AS(EventLog::read_file(path), StoreError);
    auto report = check_log_integrity(path, *g_vec);
    CHECK_FALSE(report.intact);
}

TEST_CASE("sequence gaps are reported with the expected position") {
    testutil::TempDir tmp("log");
    std::string path = tmp.str("events.jsonl");
    {
        std::ofstream out(path);
        Instant t = parse_instant("2026-01-01T00:00:00Z");
        EventLogRecord r1{1, EventKind::IncidentCreated, Json{{"incidentId", "I1"}}, t};
        EventLogRecord r3{3, EventKind::IncidentCreated, Json{{"incidentId", "I2"}}, t};
        out << r1.to_json().dump() << "\n" << r3.to_json().dump() << "\n";
    }
    try {
        EventLog::read_file(path);
        FAIL("expected a sequence-gap error");
    } catch (const StoreError& e) {
        CHECK(std::string(e.what()).find("expected 2") != std::string::npos);
    }
}

TEST_CASE("engine commit order is ingest, create, link") {
    testutil::TempDir tmp("log");
    EventLog log(tmp.str("events.jsonl"));
    CorrelationEngine engine(&log, CorrelationConfig{}, g_vec);
    engine.process(tiny_doc("E1", "2026-01-01T00:00:00Z"));
    auto records = log.read_all();
    REQUIRE(records.size() == 3);
    CHECK(records[0].kind == EventKind::EidoIngested);
    CHECK(records[1].kind == EventKind::IncidentCreated);
    CHECK(records[2].kind == EventKind::EidoLinked);
    // recordedAt is derived from the document, never the wall clock
    for (const auto& r : records)
        CHECK(r.recorded_at == parse_instant("2026-01-01T00:00:00Z"));
}

TEST_CASE("re-ingesting the same document re-links without duplicating") {
    testutil::TempDir tmp("log");
    EventLog log(tmp.str("events.jsonl"));
    CorrelationConfig cfg;
    cfg.tau = 0.2;
    CorrelationEngine engine(&log, cfg, g_vec);
    EidoDocument d = tiny_doc("E1", "2026-01-01T00:00:00Z");
    auto first = engine.process(d);
    CHECK(first.kind == DecisionKind::NewIncident);
    auto second = engine.process(d);
    CHECK(second.kind == DecisionKind::LinkTo);
    CHECK(second.incident_id == first.incident_id);
    REQUIRE(second.ranked.size() == 1);
    CHECK(second.ranked[0].sigma == doctest::Approx(1.0).epsilon(1e-9));

    auto snap = snapshot(log.read_all(), *g_vec);
    REQUIRE(snap.incidents.size() == 1);
    CHECK(snap.incidents[0].linked_eido_ids == std::vector<std::string>{"E1"});
}

TEST_CASE("replay reproduces a recorded run and reports divergences") {
    testutil::TempDir tmp("log");
    std::string path = tmp.str("events.jsonl");
    CorrelationConfig cfg;
    {
        EventLog log(path);
        CorrelationEngine engine(&log, cfg, g_vec);
        engine.process(tiny_doc("E1", "2026-01-01T00:00:00Z", "flood at the river crossing"));
        engine.process(tiny_doc("E2", "2026-01-01T01:00:00Z", "flood at the river crossing"));
        engine.process(tiny_doc("E3", "2026-02-15T00:00:00Z", "completely unrelated event"));
    }
    auto records = EventLog::read_file(path);

    auto report = replay(records, cfg, g_vec);
    CHECK(report.matches);
    CHECK(report.decisions.size() == 3);

    // replay twice: identical outputs
    auto report2 = replay(records, cfg, g_vec);
    REQUIRE(report.decisions.size() == report2.decisions.size());
    for (size_t i = 0; i < report.decisions.size(); ++i)
        CHECK(report.decisions[i].to_json().dump() == report2.decisions[i].to_json().dump());

    // altered config diverges
    CorrelationConfig other = cfg;
    other.tau = 0.999;
    auto diverged = replay(records, other, g_vec);
    CHECK_FALSE(diverged.matches);
    CHECK(diverged.first_divergence_sequence.has_value());

    // hand-corrupted link record: divergence names its sequence
    auto corrupted = records;
    for (auto& rec : corrupted) {
        if (rec.kind == EventKind::EidoLinked && rec.sequence == 5) {
            rec.payload["incidentId"] = "INC-999999";
        }
    }
    REQUIRE(corrupted[4].kind == EventKind::EidoLinked);
    auto bad = replay(corrupted, cfg, g_vec);
    CHECK_FALSE(bad.matches);
    REQUIRE(bad.first_divergence_sequence.has_value());
    CHECK(*bad.first_divergence_sequence == 5);

    // empty log replays to empty output
    auto empty = replay({}, cfg, g_vec);
    CHECK(empty.matches);
    CHECK(empty.decisions.empty());
}
