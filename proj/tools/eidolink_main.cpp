// eidolink command-line pipeline.
//
// Subcommands:
//   ingest     transform/parse inputs, geocode, correlate, append to the log;
//              prints one decision JSON-line per input document
//   composite  print the derived composite view of an incident
//   flatten    flatten a document (file or from the store) to CSV + manifest
//   compose    build documents from feature rows (directory or JSON-lines)
//   replay     verify the log replays to the recorded decisions
//   check-log  verify log integrity
//   score      print similarity breakdowns for inputs without committing
//
// Exit codes: 0 success, 1 config/usage error, 2 corrupt log,
// 3 unknown incident, 4 tabular error, 5 replay divergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eidolink/composite.hpp"
#include "eidolink/config.hpp"
#include "eidolink/engine.hpp"
#include "eidolink/geocoder.hpp"
#include "eidolink/store.hpp"
#include "eidolink/tabular.hpp"
#include "eidolink/transform.hpp"

namespace {

namespace el = eidolink;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCorruptLog = 2;
constexpr int kExitUnknownIncident = 3;
constexpr int kExitTabular = 4;
constexpr int kExitReplayDivergence = 5;

struct GlobalFlags {
    std::string config_path;
    std::string log_override;
    std::optional<double> tau;
    std::string weights;  // "t,g,s"
    bool strict = false;
    std::string format;  // cad-csv | cad-jsonl | eido-json | eido-jsonl
};

struct Pipeline {
    el::PipelineConfig cfg;
    el::RegistryVocabulary vocabulary;
    el::MappingRegistry mappings;
    std::vector<el::EidoTemplate> templates;
    el::SpatialIndex gazetteer{0.01};
    std::shared_ptr<el::ExternalGeocoderClient> client;
    std::shared_ptr<el::TextVectorizer> vectorizer;
    el::RuleBasedExtractor extractor;

    el::TransformContext transform_context() const {
        el::TransformContext ctx;
        ctx.registry = &mappings;
        ctx.templates = &templates;
        ctx.extractor = &extractor;
        ctx.bindings = &cfg.bindings;
        ctx.vocabulary = &vocabulary;
        ctx.strict = cfg.strict;
        ctx.default_year = cfg.default_year;
        ctx.default_utc_offset = cfg.default_utc_offset;
        ctx.eido_id_prefix = cfg.eido_id_prefix;
        ctx.source_descriptor = cfg.source_descriptor;
        return ctx;
    }
};

Pipeline load_pipeline(const GlobalFlags& flags) {
    Pipeline p;
    p.cfg = el::PipelineConfig::load(flags.config_path);

    if (!flags.log_override.empty()) p.cfg.log_path = flags.log_override;
    if (flags.tau) p.cfg.correlation.tau = *flags.tau;
    if (!flags.weights.empty()) {
        auto parts = el::split(flags.weights, ',');
        if (parts.size() != 3) throw el::ConfigError("--weights expects t,g,s");
        p.cfg.correlation.w_t = std::stod(parts[0]);
        p.cfg.correlation.w_g = std::stod(parts[1]);
        p.cfg.correlation.w_s = std::stod(parts[2]);
    }
    p.cfg.correlation = p.cfg.correlation.normalized();
    if (flags.strict) p.cfg.strict = true;
    if (p.cfg.log_path.empty()) throw el::ConfigError("no log path configured (config or --log)");

    if (!p.cfg.vocabulary_path.empty())
        p.vocabulary = el::RegistryVocabulary::load(p.cfg.vocabulary_path);
    if (!p.cfg.code_mappings_path.empty()) {
        p.mappings = el::MappingRegistry::load(p.cfg.code_mappings_path);
        p.mappings.validate_against(p.vocabulary);
    }
    if (!p.cfg.templates_path.empty()) p.templates = el::EidoTemplate::load(p.cfg.templates_path);
    if (!p.cfg.gazetteer_path.empty())
        p.gazetteer = el::SpatialIndex::load(p.cfg.gazetteer_path);

    std::vector<std::string> known_places;
    for (const auto& e : p.gazetteer.entries()) {
        known_places.push_back(e.name);
        for (const auto& a : e.aliases) known_places.push_back(a);
    }
    p.extractor = el::RuleBasedExtractor(std::move(known_places));

    if (!p.cfg.geocoder_fixtures_path.empty()) {
        auto fixture = std::make_shared<el::FixtureGeocoderClient>(
            el::FixtureGeocoderClient::load(p.cfg.geocoder_fixtures_path));
        if (!p.cfg.geocoder_cache_path.empty())
            p.client = std::make_shared<el::CachingGeocoderClient>(fixture,
                                                                   p.cfg.geocoder_cache_path);
        else p.client = fixture;
    }

    p.vectorizer = std::make_shared<el::HashedVectorizer>();
    return p;
}

std::string detect_format(const std::string& path, const std::string& override_format) {
    if (!override_format.empty()) return override_format;
    std::string lower = el::to_lower(path);
    if (lower.ends_with(".csv")) return "cad-csv";
    if (lower.ends_with(".json")) return "eido-json";
    if (lower.ends_with(".jsonl") || lower.ends_with(".ndjson")) {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = el::trim(line);
            if (t.empty()) continue;
            try {
                auto j = el::Json::parse(t);
                return j.is_object() && j.contains("eidoId") ? "eido-jsonl" : "cad-jsonl";
            } catch (...) {
                break;
            }
        }
        return "cad-jsonl";
    }
    throw el::ConfigError("cannot detect input format of '" + path +
                          "'; pass --format cad-csv|cad-jsonl|eido-json|eido-jsonl");
}

struct LoadedInput {
    std::optional<el::EidoDocument> document;
    std::string error;
    std::vector<std::string> warnings;
};

// Every input file becomes an ordered list of documents (or error entries).
std::vector<LoadedInput> load_inputs(const Pipeline& p, const std::string& path,
                                     const std::string& format) {
    std::vector<LoadedInput> out;
    el::ParseOptions popts{&p.vocabulary, p.cfg.strict};

    auto parse_one = [&](const std::string& text) {
        LoadedInput li;
        try {
            std::vector<std::string> warnings;
            li.document = el::parse_document(text, popts, &warnings);
            li.warnings = std::move(warnings);
        } catch (const std::exception& e) {
            li.error = e.what();
        }
        out.push_back(std::move(li));
    };

    if (format == "eido-json") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw el::ConfigError("cannot open input file: " + path);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        parse_one(text);
        return out;
    }
    if (format == "eido-jsonl") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw el::ConfigError("cannot open input file: " + path);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = el::trim(line);
            if (!t.empty()) parse_one(t);
        }
        return out;
    }

    std::vector<el::CadRecord> records;
    if (format == "cad-csv") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw el::ConfigError("cannot open input file: " + path);
        records = el::cad_records_from_csv(in);
    } else if (format == "cad-jsonl") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw el::ConfigError("cannot open input file: " + path);
        records = el::cad_records_from_jsonl(in);
    } else {
        throw el::ConfigError("unknown input format '" + format + "'");
    }

    auto ctx = p.transform_context();
    for (const auto& entry : el::transform_stream(records, ctx)) {
        LoadedInput li;
        if (entry.result) {
            li.document = entry.result->document;
            for (const auto& w : entry.result->warnings)
                li.warnings.push_back(w.field_path.empty() ? w.message
                                                           : w.field_path + ": " + w.message);
        } else {
            li.error = entry.error;
        }
        out.push_back(std::move(li));
    }
    return out;
}

int cmd_ingest(const GlobalFlags& flags, const std::vector<std::string>& inputs,
               bool commit = true) {
    Pipeline p;
    try {
        p = load_pipeline(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::unique_ptr<el::EventLog> log;
    el::CorrelationEngine engine(nullptr, p.cfg.correlation, p.vectorizer);
    try {
        if (commit) {
            log = std::make_unique<el::EventLog>(p.cfg.log_path, p.cfg.log_fsync);
            engine = el::CorrelationEngine(log.get(), p.cfg.correlation, p.vectorizer);
            engine.restore(log->read_all());
        } else {
            auto records = el::EventLog::read_file(p.cfg.log_path);
            engine.restore(records);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruptLog;
    }

    size_t error_count = 0;
    for (const auto& path : inputs) {
        std::string format;
        std::vector<LoadedInput> loaded;
        try {
            format = detect_format(path, flags.format);
            loaded = load_inputs(p, path, format);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitConfig;
        }

        for (auto& li : loaded) {
            if (!li.document) {
                ++error_count;
                el::Json err = {{"error", li.error}, {"input", path}};
                std::cout << err.dump() << "\n";
                continue;
            }
            for (const auto& w : li.warnings) std::cerr << "warning: " << w << "\n";

            el::EidoDocument doc = *li.document;
            try {
                std::vector<el::EnrichmentNote> notes;
                doc = el::enrich_document(doc, p.gazetteer, p.client.get(), p.cfg.geocoder,
                                          &notes);
                for (const auto& n : notes) {
                    if (!n.resolved)
                        std::cerr << "warning: no resolution for location '" << n.query
                                  << "' (" << n.location_id << ")\n";
                }
            } catch (const std::exception& e) {
                std::cerr << "warning: geocoding failed: " << e.what() << "\n";
            }

            if (commit) {
                el::DecisionRecord decision = engine.process(doc);
                std::cout << decision.to_json().dump() << "\n";
            } else {
                el::CorrelationDecision preview = engine.preview(doc);
                el::Json j = el::Json::object();
                j["eidoId"] = doc.eido_id;
                j["decision"] =
                    preview.kind == el::DecisionKind::LinkTo ? "link" : "new-incident";
                if (preview.kind == el::DecisionKind::LinkTo)
                    j["incidentId"] = preview.incident_id;
                el::Json cands = el::Json::array();
                for (const auto& b : preview.ranked) cands.push_back(el::breakdown_to_json(b));
                j["candidates"] = std::move(cands);
                std::cout << j.dump() << "\n";
            }
        }
    }
    if (error_count > 0)
        std::cerr << error_count << " input record(s) failed; see error lines above\n";
    return kExitOk;
}

int cmd_composite(const GlobalFlags& flags, const std::string& incident_id) {
    Pipeline p;
    try {
        p = load_pipeline(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        auto records = el::EventLog::read_file(p.cfg.log_path);
        el::StoreSnapshot snap = el::snapshot(records, *p.vectorizer);
        const el::IncidentContext* inc = snap.find_incident(incident_id);
        if (!inc) {
            std::cerr << "error: unknown incident '" << incident_id << "'\n";
            return kExitUnknownIncident;
        }
        el::CompositeView view = el::derive_composite(
            *inc, [&](const std::string& id) { return snap.find_document(id); });
        std::cout << el::composite_to_json(view).dump() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruptLog;
    }
}

int cmd_flatten(const GlobalFlags& flags, const std::string& input, const std::string& eido_id,
                const std::string& out_dir) {
    Pipeline p;
    try {
        p = load_pipeline(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        std::vector<el::EidoDocument> docs;
        if (!input.empty()) {
            std::ifstream in(input, std::ios::binary);
            if (!in) throw el::ConfigError("cannot open input file: " + input);
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            docs.push_back(el::parse_document(text));
        } else if (!eido_id.empty()) {
            auto records = el::EventLog::read_file(p.cfg.log_path);
            el::StoreSnapshot snap = el::snapshot(records, *p.vectorizer);
            const el::EidoDocument* doc = snap.find_document(eido_id);
            if (!doc) {
                std::cerr << "error: unknown document '" << eido_id << "'\n";
                return kExitUnknownIncident;
            }
            docs.push_back(*doc);
        } else {
            std::cerr << "error: flatten needs an input file or --eido <id>\n";
            return kExitConfig;
        }

        std::vector<el::FeatureRow> rows;
        for (const auto& d : docs) {
            auto r = el::flatten(d);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        el::export_rows(rows, out_dir);
        std::cout << "wrote " << rows.size() << " feature rows to " << out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTabular;
    }
}

int cmd_compose(const std::string& input, const std::string& out_dir) {
    try {
        std::vector<el::FeatureRow> rows;
        if (fs::is_directory(input)) {
            rows = el::import_rows_from_dir(input);
        } else {
            std::ifstream in(input, std::ios::binary);
            if (!in) throw el::TabularError("cannot open rows input: " + input);
            rows = el::import_rows_from_jsonl(in);
        }
        auto docs = el::compose(rows);
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            for (const auto& d : docs) {
                std::ofstream out(fs::path(out_dir) / (d.eido_id + ".json"), std::ios::binary);
                out << el::serialize_document(d) << "\n";
            }
            std::cout << "composed " << docs.size() << " document(s) into " << out_dir << "\n";
        } else {
            for (const auto& d : docs) std::cout << el::serialize_document(d) << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTabular;
    }
}

int cmd_replay(const GlobalFlags& flags) {
    Pipeline p;
    try {
        p = load_pipeline(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        auto records = el::EventLog::read_file(p.cfg.log_path);
        el::ReplayReport report = el::replay(records, p.cfg.correlation, p.vectorizer);
        if (report.matches) {
            std::cout << "replay ok: " << report.decisions.size()
                      << " decision(s) reproduced\n";
            return kExitOk;
        }
        std::cout << "replay divergence";
        if (report.first_divergence_sequence)
            std::cout << " at sequence " << *report.first_divergence_sequence;
        std::cout << ": " << report.detail << "\n";
        return kExitReplayDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruptLog;
    }
}

int cmd_check_log(const GlobalFlags& flags) {
    Pipeline p;
    try {
        p = load_pipeline(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    el::IntegrityReport report = el::check_log_integrity(p.cfg.log_path, *p.vectorizer);
    if (report.intact) {
        std::cout << "log intact: " << report.record_count << " record(s)\n";
        return kExitOk;
    }
    std::cout << "log corrupt: " << report.error << "\n";
    return kExitCorruptLog;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eidolink: EIDO incident data integration pipeline"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "pipeline config file")->required();
    app.add_option("--log", flags.log_override, "override the event log path");
    app.add_option("--tau", flags.tau, "override the link threshold");
    app.add_option("--weights", flags.weights, "override correlation weights as t,g,s");
    app.add_flag("--strict", flags.strict, "strict mode: vocabulary misses become errors");
    app.add_option("--format", flags.format,
                   "input format: cad-csv, cad-jsonl, eido-json, eido-jsonl");

    std::vector<std::string> ingest_inputs;
    auto* ingest = app.add_subcommand("ingest", "ingest CAD/EIDO inputs and correlate");
    ingest->add_option("inputs", ingest_inputs, "input files");

    std::string composite_id;
    auto* composite = app.add_subcommand("composite", "print the composite view of an incident");
    composite->add_option("incident", composite_id, "incident id")->required();

    std::string flatten_input, flatten_eido, flatten_out;
    auto* flatten = app.add_subcommand("flatten", "flatten a document to feature CSV files");
    flatten->add_option("input", flatten_input, "EIDO-JSON file");
    flatten->add_option("--eido", flatten_eido, "flatten this document from the store");
    flatten->add_option("--out", flatten_out, "output directory")->required();

    std::string compose_input, compose_out;
    auto* compose = app.add_subcommand("compose", "compose documents from feature rows");
    compose->add_option("input", compose_input, "rows directory or JSON-lines file")->required();
    compose->add_option("--out", compose_out, "output directory (default: stdout)");

    auto* replay = app.add_subcommand("replay", "verify the log replays identically");
    auto* check = app.add_subcommand("check-log", "verify event log integrity");

    std::vector<std::string> score_inputs;
    auto* score = app.add_subcommand("score", "print similarity breakdowns without committing");
    score->add_option("inputs", score_inputs, "input files");

    CLI11_PARSE(app, argc, argv);

    if (ingest->parsed()) return cmd_ingest(flags, ingest_inputs, true);
    if (composite->parsed()) return cmd_composite(flags, composite_id);
    if (flatten->parsed()) return cmd_flatten(flags, flatten_input, flatten_eido, flatten_out);
    if (compose->parsed()) return cmd_compose(compose_input, compose_out);
    if (replay->parsed()) return cmd_replay(flags);
    if (check->parsed()) return cmd_check_log(flags);
    if (score->parsed()) return cmd_ingest(flags, score_inputs, false);
    return kExitConfig;
}
