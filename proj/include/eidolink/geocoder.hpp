#pragma once

// Informal place-name resolution: gazetteer lookup first, an external
// geocoding client as fallback, incident context for disambiguation.
//
//   matchScore   1.0 for exact name/alias hits, token-set Jaccard otherwise;
//                external results score by rank: 1/(1+rank)
//   contextScore mean of the available signals: category-matches-incident-
//                type (1/0), jurisdiction equality (1/0), and proximity
//                (half-life decay of distance to the nearest context geometry)
//   confidence   match_weight * matchScore + context_weight * contextScore
//
// External services are represented by a deterministic offline fixture
// client so everything runs without a network; a cache layer wraps any
// client with a single-JSON-file, atomic-replace cache.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/eido.hpp"
#include "eidolink/gazetteer.hpp"
#include "eidolink/geo.hpp"
#include "eidolink/strutil.hpp"

namespace eidolink {

struct GeocoderError : std::runtime_error {
    explicit GeocoderError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ExternalResult {
    std::string name;
    Geometry geometry;
    std::optional<std::string> civic_address;
};

class ExternalGeocoderClient {
  public:
    virtual ~ExternalGeocoderClient() = default;
    // bias is a hint near which results should be preferred; may be ignored.
    virtual std::vector<ExternalResult> query(std::string_view text,
                                              const std::optional<GeoPoint>& bias) const = 0;
};

// Offline client reading canned responses keyed by the folded query string.
// File format: {"queries":{"harbor view plaza":[{"name":...,"latitude":...,
// "longitude":...,"civicAddressText":...}, ...]}}
class FixtureGeocoderClient final : public ExternalGeocoderClient {
  public:
    FixtureGeocoderClient() = default;

    static FixtureGeocoderClient load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw GeocoderError("cannot open geocoder fixture file: " + path);
        Json root;
        try {
            root = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw GeocoderError("geocoder fixture file " + path + ": " + e.what());
        }
        FixtureGeocoderClient c;
        const Json& queries = root.contains("queries") ? root.at("queries") : root;
        for (auto it = queries.begin(); it != queries.end(); ++it) {
            std::vector<ExternalResult> results;
            for (const auto& r : it.value()) {
                ExternalResult er;
                er.name = r.at("name").get<std::string>();
                if (r.contains("ring")) er.geometry = geometry_from_json(r, "fixture");
                else
                    er.geometry = GeoPoint{r.at("latitude").get<double>(),
                                           r.at("longitude").get<double>()};
                if (r.contains("civicAddressText"))
                    er.civic_address = r.at("civicAddressText").get<std::string>();
                results.push_back(std::move(er));
            }
            c.responses_[fold_name(it.key())] = std::move(results);
        }
        return c;
    }

    std::vector<ExternalResult> query(std::string_view text,
                                      const std::optional<GeoPoint>&) const override {
        auto it = responses_.find(fold_name(text));
        if (it == responses_.end()) return {};
        return it->second;
    }

  private:
    std::map<std::string, std::vector<ExternalResult>> responses_;
};

// Wraps a client with a single-file JSON cache. Writes go to a temp file
// first and are renamed into place; concurrent readers never see torn state.
class CachingGeocoderClient final : public ExternalGeocoderClient {
  public:
    CachingGeocoderClient(std::shared_ptr<const ExternalGeocoderClient> inner,
                          std::string cache_path)
        : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
        load_cache();
    }

    std::vector<ExternalResult> query(std::string_view text,
                                      const std::optional<GeoPoint>& bias) const override {
        std::string key = fold_name(text);
        {
            std::lock_guard lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        auto results = inner_->query(text, bias);
        {
            std::lock_guard lock(mutex_);
            cache_[key] = results;
            persist_locked();
        }
        return results;
    }

  private:
    void load_cache() {
        std::ifstream in(cache_path_);
        if (!in) return;
        Json root;
        try {
            root = Json::parse(in);
        } catch (const Json::parse_error&) {
            return;  // unreadable cache is treated as empty
        }
        for (auto it = root.begin(); it != root.end(); ++it) {
            std::vector<ExternalResult> results;
            for (const auto& r : it.value()) {
                ExternalResult er;
                er.name = r.at("name").get<std::string>();
                er.geometry = geometry_from_json(r.at("geometry"), "cache");
                if (r.contains("civicAddressText"))
                    er.civic_address = r.at("civicAddressText").get<std::string>();
                results.push_back(std::move(er));
            }
            cache_[it.key()] = std::move(results);
        }
    }

    void persist_locked() const {
        Json root = Json::object();
        for (const auto& [key, results] : cache_) {
            Json arr = Json::array();
            for (const auto& r : results) {
                Json o = Json::object();
                o["name"] = r.name;
                o["geometry"] = geometry_to_json(r.geometry);
                if (r.civic_address) o["civicAddressText"] = *r.civic_address;
                arr.push_back(std::move(o));
            }
            root[key] = std::move(arr);
        }
        std::string tmp = cache_path_ + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) return;  // cache persistence failures are non-fatal
            out << root.dump();
        }
        std::error_code ec;
        std::filesystem::rename(tmp, cache_path_, ec);
    }

    std::shared_ptr<const ExternalGeocoderClient> inner_;
    std::string cache_path_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::vector<ExternalResult>> cache_;
};

// ---------------------------------------------------------------------------
// Candidates and resolution
// ---------------------------------------------------------------------------

enum class CandidateSource { Gazetteer, External };

struct GeocodeCandidate {
    CandidateSource source = CandidateSource::Gazetteer;
    std::string name;
    Geometry geometry;
    std::string category;      // empty for external results
    std::string jurisdiction;  // empty for external results
    std::optional<std::string> civic_address;
    double match_score = 0.0;
    double context_score = 0.0;
    double confidence = 0.0;
};

struct GeocoderConfig {
    double match_weight = 0.7;
    double context_weight = 0.3;
    double fallback_threshold = 0.6;  // query external client below this matchScore
    double min_confidence = 0.5;      // enrichment floor; weaker matches are NoResolution
    double proximity_half_life_m = 1000.0;
    std::string default_jurisdiction;
    // Categories counted as matching a given incident type.
    std::map<std::string, std::set<std::string>> category_hints = default_category_hints();

    static std::map<std::string, std::set<std::string>> default_category_hints() {
        return {
            {"Weather.Flood", {"river", "creek", "region", "coast"}},
            {"Weather.Storm", {"region", "coast"}},
            {"Fire.Structure", {"school", "market", "mall", "building"}},
            {"ROBBERY-ARMED", {"market", "bank", "store", "mall"}},
            {"ROBBERY-STRONGARM", {"market", "bank", "store", "mall"}},
            {"Traffic.Collision", {"road", "bridge", "highway"}},
        };
    }

    bool category_matches(const std::string& incident_type, const std::string& category) const {
        auto it = category_hints.find(incident_type);
        if (it == category_hints.end()) return false;
        return it->second.count(to_lower(category)) > 0;
    }
};

struct GeocodeContext {
    std::optional<std::string> incident_type;
    std::optional<std::string> jurisdiction;
    std::vector<Geometry> nearby_geometries;
};

// Gazetteer lookup: exact name/alias hits score 1.0; otherwise token-set
// Jaccard against name and aliases (best of). Sorted descending, name as the
// deterministic tie-break.
inline std::vector<GeocodeCandidate> lookup(std::string_view text, const SpatialIndex& index) {
    std::vector<GeocodeCandidate> out;
    std::string folded = fold_name(text);
    if (folded.empty()) return out;

    auto exact_ids = index.find_exact(text);
    std::set<std::uint32_t> exact(exact_ids.begin(), exact_ids.end());

    std::vector<std::string> query_tokens = tokenize(folded);
    std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());

    for (std::uint32_t id = 0; id < index.size(); ++id) {
        const GazetteerEntry& e = index.entry(id);
        double score = 0.0;
        if (exact.count(id)) {
            score = 1.0;
        } else {
            auto jaccard = [&](const std::string& name) {
                auto toks = tokenize(fold_name(name));
                std::set<std::string> s(toks.begin(), toks.end());
                if (s.empty() || query_set.empty()) return 0.0;
                size_t inter = 0;
                for (const auto& t : s)
                    if (query_set.count(t)) ++inter;
                size_t uni = s.size() + query_set.size() - inter;
                return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
            };
            score = jaccard(e.name);
            for (const auto& a : e.aliases) score = std::max(score, jaccard(a));
        }
        if (score <= 0.0) continue;
        GeocodeCandidate c;
        c.source = CandidateSource::Gazetteer;
        c.name = e.name;
        c.geometry = e.geometry;
        c.category = e.category;
        c.jurisdiction = e.jurisdiction;
        c.match_score = score;
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const GeocodeCandidate& a, const GeocodeCandidate& b) {
        if (a.match_score != b.match_score) return a.match_score > b.match_score;
        return a.name < b.name;
    });
    return out;
}

inline double context_score(const GeocodeCandidate& cand, const GeocodeContext& ctx,
                            const GeocoderConfig& cfg) {
    double sum = 0.0;
    int signals = 0;
    if (ctx.incident_type && !cand.category.empty()) {
        sum += cfg.category_matches(*ctx.incident_type, cand.category) ? 1.0 : 0.0;
        ++signals;
    }
    if (ctx.jurisdiction && !cand.jurisdiction.empty()) {
        sum += to_lower(*ctx.jurisdiction) == to_lower(cand.jurisdiction) ? 1.0 : 0.0;
        ++signals;
    }
    if (!ctx.nearby_geometries.empty()) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& g : ctx.nearby_geometries)
            best = std::min(best, geometry_distance_m(cand.geometry, g));
        sum += half_life_decay(best, cfg.proximity_half_life_m);
        ++signals;
    }
    return signals == 0 ? 0.0 : sum / signals;
}

struct ResolveOutcome {
    std::optional<GeocodeCandidate> best;  // empty == NoResolution
    std::vector<GeocodeCandidate> considered;
    std::vector<std::string> warnings;
};

inline ResolveOutcome resolve(std::string_view text, const GeocodeContext& ctx,
                              const SpatialIndex& index, const ExternalGeocoderClient* client,
                              const GeocoderConfig& cfg = {}) {
    ResolveOutcome outcome;
    auto candidates = lookup(text, index);

    bool need_external =
        candidates.empty() || candidates.front().match_score < cfg.fallback_threshold;
    if (need_external && client) {
        std::optional<GeoPoint> bias;
        for (const auto& g : ctx.nearby_geometries) {
            if (const auto* p = std::get_if<GeoPoint>(&g)) {
                bias = *p;
                break;
            }
        }
        try {
            auto results = client->query(text, bias);
            for (size_t rank = 0; rank < results.size(); ++rank) {
                GeocodeCandidate c;
                c.source = CandidateSource::External;
                c.name = results[rank].name;
                c.geometry = results[rank].geometry;
                c.civic_address = results[rank].civic_address;
                c.match_score = 1.0 / (1.0 + static_cast<double>(rank));
                candidates.push_back(std::move(c));
            }
        } catch (const std::exception& e) {
            outcome.warnings.push_back(std::string("external geocoder failed: ") + e.what() +
                                       "; continuing with gazetteer results only");
        }
    }

    for (auto& c : candidates) {
        c.context_score = context_score(c, ctx, cfg);
        c.confidence = cfg.match_weight * c.match_score + cfg.context_weight * c.context_score;
    }

    const GeocodeCandidate* best = nullptr;
    for (const auto& c : candidates) {
        if (!best) {
            best = &c;
            continue;
        }
        if (c.confidence > best->confidence + 1e-12) {
            best = &c;
        } else if (std::abs(c.confidence - best->confidence) <= 1e-12) {
            // Ties: gazetteer over external, then lexicographic name.
            bool c_gaz = c.source == CandidateSource::Gazetteer;
            bool b_gaz = best->source == CandidateSource::Gazetteer;
            if (c_gaz != b_gaz) {
                if (c_gaz) best = &c;
            } else if (c.name < best->name) {
                best = &c;
            }
        }
    }
    if (best) outcome.best = *best;
    outcome.considered = std::move(candidates);
    return outcome;
}

// ---------------------------------------------------------------------------
// Document enrichment
// ---------------------------------------------------------------------------

struct EnrichmentNote {
    std::string location_id;
    std::string query;
    bool resolved = false;
    double confidence = 0.0;
    std::string resolved_name;
};

// For every location that has description text but no geometry, attempt
// resolution. On success the geometry and confidence are written and a civic
// address is added when the candidate supplies one; the original description
// text is always preserved verbatim. Failures leave the component untouched.
inline EidoDocument enrich_document(const EidoDocument& doc, const SpatialIndex& index,
                                    const ExternalGeocoderClient* client,
                                    const GeocoderConfig& cfg = {},
                                    std::vector<EnrichmentNote>* log = nullptr) {
    EidoDocument out = doc;

    GeocodeContext ctx;
    ctx.incident_type = doc.incident.incident_type;
    if (!cfg.default_jurisdiction.empty()) ctx.jurisdiction = cfg.default_jurisdiction;
    ctx.nearby_geometries = document_geometries(doc);

    for (auto& lc : out.locations) {
        if (lc.geometry) continue;
        std::string query;
        if (lc.description_text) query = *lc.description_text;
        else if (lc.civic_address_text) query = *lc.civic_address_text;
        if (query.empty()) continue;

        ResolveOutcome res = resolve(query, ctx, index, client, cfg);
        if (res.best && res.best->confidence < cfg.min_confidence) res.best.reset();
        EnrichmentNote note;
        note.location_id = lc.location_id;
        note.query = query;
        if (res.best) {
            lc.geometry = res.best->geometry;
            lc.confidence = res.best->confidence;
            if (!lc.civic_address_text && res.best->civic_address)
                lc.civic_address_text = res.best->civic_address;
            note.resolved = true;
            note.confidence = res.best->confidence;
            note.resolved_name = res.best->name;
        }
        if (log) log->push_back(std::move(note));
    }
    return out;
}

}  // namespace eidolink
