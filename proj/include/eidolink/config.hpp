#pragma once

// Pipeline configuration: one JSON file wiring together data files, the
// correlation parameters, geocoder weights, field bindings, and strictness
// flags. Relative paths resolve against the config file's directory. CLI
// flags override loaded values.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "eidolink/correlator.hpp"
#include "eidolink/geocoder.hpp"
#include "eidolink/transform.hpp"

namespace eidolink {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PipelineConfig {
    std::string log_path;
    bool log_fsync = false;
    std::string vocabulary_path;
    std::string code_mappings_path;
    std::string templates_path;
    std::string gazetteer_path;
    std::string geocoder_fixtures_path;  // optional
    std::string geocoder_cache_path;     // optional

    CorrelationConfig correlation;
    GeocoderConfig geocoder;
    bool strict = false;

    FieldBindings bindings;
    int default_year = 0;
    std::string default_utc_offset;
    std::string eido_id_prefix = "CAD";
    std::string source_descriptor = "legacy CAD import";

    static PipelineConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        Json root;
        try {
            root = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw ConfigError("config file " + path + ": " + e.what());
        }

        namespace fs = std::filesystem;
        fs::path base = fs::path(path).parent_path();
        auto resolve = [&](const std::string& p) {
            if (p.empty()) return p;
            fs::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).lexically_normal().string();
        };

        PipelineConfig cfg;
        cfg.log_path = resolve(root.value("log", std::string()));
        cfg.log_fsync = root.value("logFsync", false);
        if (root.contains("registry")) {
            const Json& reg = root.at("registry");
            cfg.vocabulary_path = resolve(reg.value("vocabulary", std::string()));
            cfg.code_mappings_path = resolve(reg.value("codeMappings", std::string()));
        }
        cfg.templates_path = resolve(root.value("templates", std::string()));
        cfg.gazetteer_path = resolve(root.value("gazetteer", std::string()));
        cfg.geocoder_fixtures_path = resolve(root.value("geocoderFixtures", std::string()));
        cfg.geocoder_cache_path = resolve(root.value("geocoderCache", std::string()));
        cfg.strict = root.value("strict", false);

        if (root.contains("correlation")) {
            const Json& c = root.at("correlation");
            if (c.contains("weights")) {
                const Json& w = c.at("weights");
                cfg.correlation.w_t = w.value("temporal", cfg.correlation.w_t);
                cfg.correlation.w_g = w.value("spatial", cfg.correlation.w_g);
                cfg.correlation.w_s = w.value("semantic", cfg.correlation.w_s);
            }
            cfg.correlation.tau = c.value("tau", cfg.correlation.tau);
            if (c.contains("temporalHalfLifeMinutes"))
                cfg.correlation.temporal_half_life =
                    std::chrono::seconds(c.at("temporalHalfLifeMinutes").get<std::int64_t>() * 60);
            cfg.correlation.spatial_half_life_m =
                c.value("spatialHalfLifeMeters", cfg.correlation.spatial_half_life_m);
            if (c.contains("candidateWindowMinutes"))
                cfg.correlation.candidate_window =
                    std::chrono::seconds(c.at("candidateWindowMinutes").get<std::int64_t>() * 60);
            cfg.correlation.spatial_gate_m =
                c.value("spatialGateMeters", cfg.correlation.spatial_gate_m);
            cfg.correlation.strict_missing_evidence =
                c.value("strictMissingEvidence", cfg.correlation.strict_missing_evidence);
        }
        cfg.correlation = cfg.correlation.normalized();

        if (root.contains("geocoder")) {
            const Json& g = root.at("geocoder");
            cfg.geocoder.match_weight = g.value("matchWeight", cfg.geocoder.match_weight);
            cfg.geocoder.context_weight = g.value("contextWeight", cfg.geocoder.context_weight);
            cfg.geocoder.fallback_threshold =
                g.value("fallbackThreshold", cfg.geocoder.fallback_threshold);
            cfg.geocoder.min_confidence = g.value("minConfidence", cfg.geocoder.min_confidence);
            cfg.geocoder.proximity_half_life_m =
                g.value("proximityHalfLifeMeters", cfg.geocoder.proximity_half_life_m);
            cfg.geocoder.default_jurisdiction =
                g.value("defaultJurisdiction", cfg.geocoder.default_jurisdiction);
            if (g.contains("categoryHints")) {
                for (auto it = g.at("categoryHints").begin(); it != g.at("categoryHints").end();
                     ++it) {
                    std::set<std::string> cats;
                    for (const auto& c : it.value()) cats.insert(to_lower(c.get<std::string>()));
                    cfg.geocoder.category_hints[it.key()] = std::move(cats);
                }
            }
        }

        if (root.contains("fieldBindings"))
            cfg.bindings = FieldBindings::from_json(root.at("fieldBindings"));

        if (root.contains("transform")) {
            const Json& t = root.at("transform");
            cfg.default_year = t.value("defaultYear", 0);
            cfg.default_utc_offset = t.value("utcOffset", std::string());
            cfg.eido_id_prefix = t.value("eidoIdPrefix", cfg.eido_id_prefix);
            cfg.source_descriptor = t.value("sourceDescriptor", cfg.source_descriptor);
        }

        // Referenced data files must exist at load time.
        auto must_exist = [&](const std::string& p, const char* what) {
            if (p.empty()) return;
            if (!fs::exists(p))
                throw ConfigError(std::string(what) + " file does not exist: " + p);
        };
        must_exist(cfg.vocabulary_path, "vocabulary");
        must_exist(cfg.code_mappings_path, "code mappings");
        must_exist(cfg.templates_path, "templates");
        must_exist(cfg.gazetteer_path, "gazetteer");
        must_exist(cfg.geocoder_fixtures_path, "geocoder fixtures");
        // The log and cache are created on demand.

        return cfg;
    }
};

}  // namespace eidolink
