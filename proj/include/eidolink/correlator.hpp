#pragma once

// Incident correlation: decides whether a new document joins an existing
// incident context or starts a new one.
//
// The similarity of a document E against an incident I is
//
//     sigma = w_t * phi_t(dt) + w_g * phi_g(dg) + w_s * phi_s(text)
//
// phi_t and phi_g are exponential half-life decays of the time gap to the
// incident's latest activity and of the minimum great-circle distance between
// geometries; phi_s is the best clamped cosine between the document's hashed
// text vector and the incident's cached vectors. When a modality has no
// evidence on one side (no geometry, empty text), its term is dropped and the
// remaining weights are renormalized, unless strict_missing_evidence is set,
// in which case the missing term scores 0 at full weight.
//
// Candidate selection is a cascade: a temporal window gate, a spatial
// distance gate (only when both sides carry geometry), then full scoring.
// The best-scoring incident wins when sigma >= tau; ties within 1e-9 break
// toward the earliest createdAt, then the smallest incidentId.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/eido.hpp"
#include "eidolink/geo.hpp"
#include "eidolink/textvec.hpp"
#include "eidolink/timeutil.hpp"

namespace eidolink {

inline constexpr double kSigmaTieEpsilon = 1e-9;

struct CorrelationConfig {
    double w_t = 1.0 / 3.0;
    double w_g = 1.0 / 3.0;
    double w_s = 1.0 / 3.0;
    double tau = 0.55;
    std::chrono::seconds temporal_half_life{2 * 3600};
    double spatial_half_life_m = 1000.0;
    std::chrono::seconds candidate_window{24 * 3600};  // gate W
    double spatial_gate_m = 50000.0;                   // gate G_max
    bool strict_missing_evidence = false;

    // Weights are normalized at load; any uniform positive scale of the raw
    // weights yields the same config.
    CorrelationConfig normalized() const {
        CorrelationConfig c = *this;
        if (c.w_t < 0.0 || c.w_g < 0.0 || c.w_s < 0.0)
            throw std::invalid_argument("correlation weights must be non-negative");
        double sum = c.w_t + c.w_g + c.w_s;
        if (sum <= 0.0) throw std::invalid_argument("correlation weights must not all be zero");
        c.w_t /= sum;
        c.w_g /= sum;
        c.w_s /= sum;
        if (c.tau < 0.0 || c.tau > 1.0) throw std::invalid_argument("tau must be in [0,1]");
        if (c.temporal_half_life.count() <= 0 || c.spatial_half_life_m <= 0.0)
            throw std::invalid_argument("half-lives must be positive");
        return c;
    }
};

struct IncidentContext {
    std::string incident_id;
    std::vector<std::string> linked_eido_ids;  // arrival order, no duplicates
    Instant created_at;
    Instant latest_activity;  // max issuedTimestamp among linked documents
    std::vector<Geometry> cached_geometries;
    std::vector<TextVector> cached_vectors;

    bool contains(const std::string& eido_id) const {
        return std::find(linked_eido_ids.begin(), linked_eido_ids.end(), eido_id) !=
               linked_eido_ids.end();
    }

    // Links a document (or refreshes an already linked one) and updates the
    // derived caches.
    void absorb(const EidoDocument& doc, const TextVectorizer& vectorizer) {
        if (!contains(doc.eido_id)) linked_eido_ids.push_back(doc.eido_id);
        if (linked_eido_ids.size() == 1 ||
            instant_before(latest_activity, doc.issued_timestamp))
            latest_activity = doc.issued_timestamp;
        for (const auto& g : document_geometries(doc)) {
            if (std::find(cached_geometries.begin(), cached_geometries.end(), g) ==
                cached_geometries.end())
                cached_geometries.push_back(g);
        }
        TextVector v = vectorizer.vectorize(descriptive_text(doc));
        if (!v.zero() &&
            std::find(cached_vectors.begin(), cached_vectors.end(), v) == cached_vectors.end())
            cached_vectors.push_back(v);
    }
};

struct EffectiveWeights {
    double temporal = 0.0;
    double spatial = 0.0;
    double semantic = 0.0;
};

struct SimilarityBreakdown {
    std::string incident_id;
    std::chrono::microseconds delta_t{0};
    std::optional<double> delta_g_m;
    double phi_t = 0.0;
    std::optional<double> phi_g;
    std::optional<double> phi_s;
    EffectiveWeights effective_weights;
    double sigma = 0.0;
    bool passed_temporal_gate = true;
    bool passed_spatial_gate = true;
};

// phi_t(0) = 1, phi_t(h) = 0.5, strictly decreasing.
inline double phi_t(std::chrono::microseconds delta_t, std::chrono::seconds half_life) {
    return half_life_decay(std::chrono::duration<double>(delta_t).count(),
                           static_cast<double>(half_life.count()));
}

inline double phi_g(double delta_g_m, double half_life_m) {
    return half_life_decay(delta_g_m, half_life_m);
}

// Best-match semantics: the maximum clamped cosine against any cached vector.
inline double phi_s(const TextVector& v_new, const IncidentContext& incident) {
    double best = 0.0;
    for (const auto& v : incident.cached_vectors) best = std::max(best, cosine01(v_new, v));
    return best;
}

inline std::optional<double> min_distance_m(const std::vector<Geometry>& lhs,
                                            const std::vector<Geometry>& rhs) {
    if (lhs.empty() || rhs.empty()) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : lhs)
        for (const auto& b : rhs) best = std::min(best, geometry_distance_m(a, b));
    return best;
}

inline SimilarityBreakdown score(const EidoDocument& e_new, const IncidentContext& incident,
                                 const CorrelationConfig& raw_cfg,
                                 const TextVectorizer& vectorizer) {
    CorrelationConfig cfg = raw_cfg.normalized();
    SimilarityBreakdown b;
    b.incident_id = incident.incident_id;

    std::int64_t dt_us =
        e_new.issued_timestamp.epoch_micros - incident.latest_activity.epoch_micros;
    if (dt_us < 0) dt_us = -dt_us;
    b.delta_t = std::chrono::microseconds(dt_us);
    b.phi_t = phi_t(b.delta_t, cfg.temporal_half_life);

    b.delta_g_m = min_distance_m(document_geometries(e_new), incident.cached_geometries);
    if (b.delta_g_m) b.phi_g = phi_g(*b.delta_g_m, cfg.spatial_half_life_m);

    TextVector v_new = vectorizer.vectorize(descriptive_text(e_new));
    bool semantic_available = !v_new.zero() && !incident.cached_vectors.empty();
    if (semantic_available) b.phi_s = phi_s(v_new, incident);

    bool has_t = true;
    bool has_g = b.phi_g.has_value();
    bool has_s = b.phi_s.has_value();

    if (cfg.strict_missing_evidence) {
        // Missing evidence scores zero at full weight.
        b.effective_weights = {cfg.w_t, cfg.w_g, cfg.w_s};
        b.sigma = cfg.w_t * b.phi_t + cfg.w_g * b.phi_g.value_or(0.0) +
                  cfg.w_s * b.phi_s.value_or(0.0);
        return b;
    }

    double wsum = (has_t ? cfg.w_t : 0.0) + (has_g ? cfg.w_g : 0.0) + (has_s ? cfg.w_s : 0.0);
    if (wsum <= 0.0) {
        b.effective_weights = {0.0, 0.0, 0.0};
        b.sigma = 0.0;
        return b;
    }
    b.effective_weights.temporal = has_t ? cfg.w_t / wsum : 0.0;
    b.effective_weights.spatial = has_g ? cfg.w_g / wsum : 0.0;
    b.effective_weights.semantic = has_s ? cfg.w_s / wsum : 0.0;
    b.sigma = b.effective_weights.temporal * b.phi_t +
              b.effective_weights.spatial * b.phi_g.value_or(0.0) +
              b.effective_weights.semantic * b.phi_s.value_or(0.0);
    return b;
}

enum class DecisionKind { NewIncident, LinkTo };

struct CorrelationDecision {
    DecisionKind kind = DecisionKind::NewIncident;
    std::string incident_id;                    // set when kind == LinkTo
    std::vector<SimilarityBreakdown> ranked;    // every gated-in candidate, best first
};

inline CorrelationDecision correlate(const EidoDocument& e_new,
                                     const std::vector<IncidentContext>& incidents,
                                     const CorrelationConfig& raw_cfg,
                                     const TextVectorizer& vectorizer) {
    CorrelationConfig cfg = raw_cfg.normalized();
    CorrelationDecision decision;

    auto created_key = [&](const IncidentContext& inc) {
        return std::pair<std::int64_t, const std::string&>(inc.created_at.epoch_micros,
                                                           inc.incident_id);
    };

    std::vector<const IncidentContext*> order;
    order.reserve(incidents.size());
    for (const auto& inc : incidents) order.push_back(&inc);
    std::sort(order.begin(), order.end(),
              [&](const IncidentContext* a, const IncidentContext* b) {
                  return created_key(*a) < created_key(*b);
              });

    auto doc_geoms = document_geometries(e_new);
    std::vector<SimilarityBreakdown> survivors;
    for (const IncidentContext* inc : order) {
        // Stage 1: temporal window.
        std::int64_t dt_us =
            e_new.issued_timestamp.epoch_micros - inc->latest_activity.epoch_micros;
        if (dt_us < 0) dt_us = -dt_us;
        if (static_cast<double>(dt_us) >
            static_cast<double>(cfg.candidate_window.count()) * 1e6)
            continue;

        // Stage 2: spatial gate, applied only when both sides carry geometry.
        auto dist = min_distance_m(doc_geoms, inc->cached_geometries);
        if (dist && *dist > cfg.spatial_gate_m) continue;

        // Stage 3: full score.
        survivors.push_back(score(e_new, *inc, cfg, vectorizer));
    }

    // Ranked best-first; exact-sigma ties fall back to creation order.
    // (survivors are already in creation order, so the sort is stable on it.)
    std::stable_sort(survivors.begin(), survivors.end(),
                     [](const SimilarityBreakdown& a, const SimilarityBreakdown& b) {
                         return a.sigma > b.sigma;
                     });
    decision.ranked = survivors;
    if (survivors.empty()) return decision;

    double max_sigma = survivors.front().sigma;
    if (max_sigma < cfg.tau) return decision;

    // Near-ties within epsilon of the max break toward earliest createdAt,
    // then smallest incidentId. `order` already encodes that priority.
    const SimilarityBreakdown* winner = nullptr;
    for (const IncidentContext* inc : order) {
        for (const auto& s : survivors) {
            if (s.incident_id == inc->incident_id && s.sigma >= max_sigma - kSigmaTieEpsilon) {
                winner = &s;
                break;
            }
        }
        if (winner) break;
    }

    decision.kind = DecisionKind::LinkTo;
    decision.incident_id = winner->incident_id;
    return decision;
}

// ---------------------------------------------------------------------------
// JSON projections (decision log records)
// ---------------------------------------------------------------------------

inline Json breakdown_to_json(const SimilarityBreakdown& b) {
    Json j = Json::object();
    j["incidentId"] = b.incident_id;
    j["deltaTSeconds"] = std::chrono::duration<double>(b.delta_t).count();
    j["deltaGMeters"] = b.delta_g_m ? Json(*b.delta_g_m) : Json(nullptr);
    j["phiT"] = b.phi_t;
    j["phiG"] = b.phi_g ? Json(*b.phi_g) : Json(nullptr);
    j["phiS"] = b.phi_s ? Json(*b.phi_s) : Json(nullptr);
    j["effectiveWeights"] = Json{{"temporal", b.effective_weights.temporal},
                                 {"spatial", b.effective_weights.spatial},
                                 {"semantic", b.effective_weights.semantic}};
    j["sigma"] = b.sigma;
    j["passedGates"] = Json{{"temporal", b.passed_temporal_gate},
                            {"spatial", b.passed_spatial_gate}};
    return j;
}

inline SimilarityBreakdown breakdown_from_json(const Json& j) {
    SimilarityBreakdown b;
    b.incident_id = j.at("incidentId").get<std::string>();
    b.delta_t = std::chrono::microseconds(
        static_cast<std::int64_t>(j.at("deltaTSeconds").get<double>() * 1e6 + 0.5));
    if (!j.at("deltaGMeters").is_null()) b.delta_g_m = j.at("deltaGMeters").get<double>();
    b.phi_t = j.at("phiT").get<double>();
    if (!j.at("phiG").is_null()) b.phi_g = j.at("phiG").get<double>();
    if (!j.at("phiS").is_null()) b.phi_s = j.at("phiS").get<double>();
    const Json& w = j.at("effectiveWeights");
    b.effective_weights = {w.at("temporal").get<double>(), w.at("spatial").get<double>(),
                           w.at("semantic").get<double>()};
    b.sigma = j.at("sigma").get<double>();
    return b;
}

}  // namespace eidolink
