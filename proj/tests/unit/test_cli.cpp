#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "../support/tempdir.hpp"

#ifndef EIDOLINK_CLI_PATH
#define EIDOLINK_CLI_PATH "eidolink"
#endif
#ifndef EIDOLINK_DATA_DIR
#define EIDOLINK_DATA_DIR "data"
#endif

namespace {

using nlohmann::json;

struct Cli {
    testutil::TempDir tmp{"cli"};
    std::string config_path;

    Cli() {
        config_path = tmp.str("config.json");
        std::string data = EIDOLINK_DATA_DIR;
        json cfg = {
            {"log", "events.jsonl"},
            {"registry",
             {{"vocabulary", data + "/registry/incident_types.tsv"},
              {"codeMappings", data + "/registry/code_mappings.tsv"}}},
            {"templates", data + "/templates/default_templates.json"},
            {"gazetteer", data + "/gazetteer/san_diego.jsonl"},
            {"geocoderFixtures", data + "/geocoder/fixture_responses.json"},
            {"geocoderCache", "cache.json"},
            {"correlation",
             {{"weights", {{"temporal", 1.0}, {"spatial", 1.0}, {"semantic", 1.0}}},
              {"tau", 0.55},
              {"temporalHalfLifeMinutes", 120},
              {"spatialHalfLifeMeters", 1000.0},
              {"candidateWindowMinutes", 1440},
              {"spatialGateMeters", 50000.0}}},
            {"geocoder",
             {{"matchWeight", 0.7},
              {"contextWeight", 0.3},
              {"fallbackThreshold", 0.6},
              {"defaultJurisdiction", "San Diego County"}}},
            {"fieldBindings",
             {{"Incident Type", "incidentTypeCode"},
              {"Priority Level", "priorityCode"},
              {"Response Year", "year"},
              {"Response Month", "month"},
              {"Response Day", "day"},
              {"Response Hour", "hour"},
              {"Response Minute", "minute"},
              {"Sector / Beat", "sectorBeat"},
              {"Call Disposition", "dispositionCode"},
              {"First Unit Arrived", "firstUnitArrived"},
              {"Unit ID", "unitIdentifier"},
              {"Unit Time on Scene", "unitTimeOnScene"},
              {"Initial Problem Description", "problemDescription"}}},
            {"transform", {{"defaultYear", 2026}, {"utcOffset", "-08:00"}}},
        };
        std::ofstream out(config_path);
        out << cfg.dump(2);
    }

    // Returns the exit code; stdout is captured into `captured`.
    int run(const std::string& args, std::string* captured = nullptr) {
        std::string out_file = tmp.str("out.txt");
        std::string cmd = std::string(EIDOLINK_CLI_PATH) + " --config " + config_path + " " +
                          args + " > " + out_file + " 2>" + tmp.str("err.txt");
        int rc = std::system(cmd.c_str());
        if (captured) {
            std::ifstream in(out_file);
            std::stringstream ss;
            ss << in.rdbuf();
            *captured = ss.str();
        }
        return WEXITSTATUS(rc);
    }

    std::string fixture(const std::string& name) {
        return std::string(EIDOLINK_DATA_DIR) + "/fixtures/" + name;
    }
};

std::vector<json> json_lines(const std::string& text) {
    std::vector<json> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

}  // namespace

TEST_CASE("ingest: case-study order yields NewIncident then LinkTo") {
    Cli cli;
    std::string stdout_text;
    int rc = cli.run("ingest " + cli.fixture("nws_flood_warning.json") + " " +
                         cli.fixture("news_report.json"),
                     &stdout_text);
    CHECK(rc == 0);
    auto decisions = json_lines(stdout_text);
    REQUIRE(decisions.size() == 2);
    CHECK(decisions[0]["decision"] == "new-incident");
    CHECK(decisions[0]["incidentId"] == "INC-000001");
    CHECK(decisions[1]["decision"] == "link");
    CHECK(decisions[1]["incidentId"] == "INC-000001");
}

TEST_CASE("ingest: zero files and empty files both yield empty output, exit 0") {
    Cli cli;
    std::string out;
    CHECK(cli.run("ingest", &out) == 0);
    CHECK(json_lines(out).empty());

    std::string empty = cli.tmp.str("empty.jsonl");
    std::ofstream(empty).close();
    int rc = cli.run("--format eido-jsonl ingest " + empty, &out);
    CHECK(rc == 0);
    CHECK(json_lines(out).empty());
}

TEST_CASE("end-to-end determinism: identical runs produce identical bytes") {
    Cli a, b;
    std::string out_a, out_b;
    std::string inputs = " ingest " + a.fixture("nws_flood_warning.json") + " " +
                         a.fixture("news_report.json") + " " + a.fixture("cad_sample.csv");
    CHECK(a.run(inputs, &out_a) == 0);
    CHECK(b.run(inputs, &out_b) == 0);
    CHECK(out_a == out_b);

    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string log_a = slurp(a.tmp.str("events.jsonl"));
    std::string log_b = slurp(b.tmp.str("events.jsonl"));
    CHECK(!log_a.empty());
    CHECK(log_a == log_b);
}

TEST_CASE("ingest: per-record failures are reported, run continues with exit 0") {
    Cli cli;
    std::string bad = cli.tmp.str("bad.jsonl");
    {
        std::ofstream out(bad);
        out << R"({"eidoId":"OK-1","issuedTimestamp":"2026-01-01T00:00:00Z"})" << "\n";
        out << R"({"eidoId":"","issuedTimestamp":"2026-01-01T00:00:00Z"})" << "\n";
        out << R"({"eidoId":"OK-2","issuedTimestamp":"2026-03-01T00:00:00Z"})" << "\n";
    }
    std::string stdout_text;
    int rc = cli.run("--format eido-jsonl ingest " + bad, &stdout_text);
    CHECK(rc == 0);
    auto lines = json_lines(stdout_text);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0]["decision"] == "new-incident");
    CHECK(lines[1].contains("error"));
    CHECK(lines[2]["decision"] == "new-incident");
}

TEST_CASE("ingest twice: duplicates re-link with oracle-consistent scores") {
    Cli cli;
    std::string first, second;
    cli.run("ingest " + cli.fixture("nws_flood_warning.json") + " " +
                cli.fixture("news_report.json"),
            &first);
    int rc = cli.run("ingest " + cli.fixture("nws_flood_warning.json") + " " +
                         cli.fixture("news_report.json"),
                     &second);
    CHECK(rc == 0);
    auto lines = json_lines(second);
    REQUIRE(lines.size() == 2);
    // both duplicates link back to the original incident
    CHECK(lines[0]["decision"] == "link");
    CHECK(lines[0]["incidentId"] == "INC-000001");
    CHECK(lines[1]["decision"] == "link");
    CHECK(lines[1]["incidentId"] == "INC-000001");
    // the news duplicate re-scores at sigma == 1 (identical text, geometry,
    // and a zero time gap against the incident's latest activity)
    double sigma = -1.0;
    for (const auto& cand : lines[1]["candidates"])
        if (cand["incidentId"] == "INC-000001") sigma = cand["sigma"].get<double>();
    CHECK(sigma == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("composite: unknown incident exits 3") {
    Cli cli;
    cli.run("ingest " + cli.fixture("nws_flood_warning.json"));
    std::string out;
    CHECK(cli.run("composite INC-000001", &out) == 0);
    CHECK(json::parse(out).at("currentType") == "Weather.Flood");
    CHECK(cli.run("composite INC-404404") == 3);
}

TEST_CASE("CAD csv ingest produces mapped documents") {
    Cli cli;
    std::string out;
    int rc = cli.run("ingest " + cli.fixture("cad_sample.csv"), &out);
    CHECK(rc == 0);
    auto lines = json_lines(out);
    CHECK(lines.size() == 3);
}

TEST_CASE("score previews without writing the store") {
    Cli cli;
    std::string out;
    int rc = cli.run("score " + cli.fixture("nws_flood_warning.json"), &out);
    CHECK(rc == 0);
    CHECK_FALSE(std::filesystem::exists(cli.tmp.str("events.jsonl")));
    auto lines = json_lines(out);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0]["decision"] == "new-incident");
}

TEST_CASE("flatten and compose round trip through the filesystem") {
    Cli cli;
    std::string rows_dir = cli.tmp.str("rows");
    CHECK(cli.run("flatten " + cli.fixture("nws_flood_warning.json") + " --out " + rows_dir) ==
          0);
    CHECK(std::filesystem::exists(rows_dir + "/manifest.json"));

    std::string out;
    CHECK(cli.run("compose " + rows_dir, &out) == 0);
    auto docs = json_lines(out);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0]["eidoId"] == "EIDO-NWS-2026-0001");
    CHECK(docs[0]["incidentComponent"]["incidentTypeCommonRegistryText"] == "Weather.Flood");
}

TEST_CASE("flatten from the store by document id") {
    Cli cli;
    cli.run("ingest " + cli.fixture("news_report.json"));
    std::string rows_dir = cli.tmp.str("rows");
    CHECK(cli.run("flatten --eido EIDO-SDUT-2026-0001 --out " + rows_dir) == 0);
    CHECK(std::filesystem::exists(rows_dir + "/note.csv"));
    CHECK(cli.run("flatten --eido NO-SUCH-DOC --out " + cli.tmp.str("rows2")) != 0);
}

TEST_CASE("compose writes one file per document with --out") {
    Cli cli;
    std::string rows_dir = cli.tmp.str("rows");
    cli.run("flatten " + cli.fixture("news_report.json") + " --out " + rows_dir);
    std::string out_dir = cli.tmp.str("composed");
    CHECK(cli.run("compose " + rows_dir + " --out " + out_dir) == 0);
    CHECK(std::filesystem::exists(out_dir + "/EIDO-SDUT-2026-0001.json"));
}

TEST_CASE("--strict turns vocabulary misses into per-record errors") {
    Cli cli;
    std::string doc = cli.tmp.str("unknown_type.json");
    {
        std::ofstream out(doc);
        out << R"({"eidoId":"E1","issuedTimestamp":"2026-01-01T00:00:00Z",
                  "incidentComponent":{"incidentTypeCommonRegistryText":"Made.Up"}})";
    }
    std::string lenient;
    CHECK(cli.run("ingest " + doc, &lenient) == 0);
    auto ok_lines = json_lines(lenient);
    REQUIRE(ok_lines.size() == 1);
    CHECK(ok_lines[0].contains("decision"));

    Cli strict_cli;
    std::string strict_out;
    CHECK(strict_cli.run("--strict ingest " + doc, &strict_out) == 0);
    auto err_lines = json_lines(strict_out);
    REQUIRE(err_lines.size() == 1);
    CHECK(err_lines[0].contains("error"));
}

TEST_CASE("compose with a dangling link exits 4 naming the column") {
    Cli cli;
    std::string rows = cli.tmp.str("rows.jsonl");
    {
        std::ofstream out(rows);
        out << R"({"featureKind":"incident","eidoId":"E1","componentId":"incident-1",)"
            << R"("attributes":{"issuedTimestamp":"2026-01-01T00:00:00Z"},"links":{}})" << "\n";
        out << R"({"featureKind":"resourceStatus","eidoId":"E1","componentId":"S1",)"
            << R"("attributes":{"statusText":"Arrived","statusTime":"2026-01-01T00:00:00Z"},)"
            << R"("links":{"referencedResourceId":"R404"}})" << "\n";
    }
    std::string out;
    int rc = cli.run("compose " + rows, &out);
    CHECK(rc == 4);
}

TEST_CASE("replay contract: exit 0 on a fresh log, 5 after tau shifts decisions") {
    Cli cli;
    cli.run("ingest " + cli.fixture("nws_flood_warning.json") + " " +
            cli.fixture("news_report.json"));
    CHECK(cli.run("replay") == 0);
    CHECK(cli.run("--tau 0.75 replay") == 5);   // the link decision flips
    CHECK(cli.run("--tau 0.35 replay") == 0);   // decisions unchanged
}

TEST_CASE("--weights accepts raw weights and normalizes them") {
    Cli cli;
    cli.run("ingest " + cli.fixture("nws_flood_warning.json") + " " +
            cli.fixture("news_report.json"));
    // scaled weights normalize to the same thirds, so replay still matches
    CHECK(cli.run("--weights 5,5,5 replay") == 0);
    // degenerate weights change the decision stream
    CHECK(cli.run("--weights 0,0,1 replay") == 5);
    // malformed weights are a usage error
    CHECK(cli.run("--weights 1,2 replay") == 1);
}

TEST_CASE("check-log: exit 0 intact, 2 corrupt") {
    Cli cli;
    cli.run("ingest " + cli.fixture("nws_flood_warning.json"));
    CHECK(cli.run("check-log") == 0);
    {
        std::ofstream out(cli.tmp.str("events.jsonl"), std::ios::app);
        out << "{torn";
    }
    CHECK(cli.run("check-log") == 2);
}

TEST_CASE("config errors exit 1 before any store write") {
    Cli cli;
    std::string bad_cfg = cli.tmp.str("bad_config.json");
    {
        std::ofstream out(bad_cfg);
        out << R"({"log":"events.jsonl","gazetteer":"/no/such/file.jsonl"})";
    }
    std::string out_file = cli.tmp.str("out.txt");
    std::string cmd = std::string(EIDOLINK_CLI_PATH) + " --config " + bad_cfg + " ingest " +
                      cli.fixture("nws_flood_warning.json") + " > " + out_file + " 2>&1";
    int rc = WEXITSTATUS(std::system(cmd.c_str()));
    CHECK(rc == 1);
    CHECK_FALSE(std::filesystem::exists(cli.tmp.str("events.jsonl")));
}
