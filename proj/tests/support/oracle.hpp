#pragma once

// Independent reference implementations used as test oracles. Everything in
// this file recomputes results from raw document fields using its own code
// paths (different formulas, different data layouts) so that agreement with
// the engine is meaningful. Nothing here may call the engine's scoring,
// distance, vectorization, or composite code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eidolink/correlator.hpp"
#include "eidolink/eido.hpp"

namespace oracle {

using eidolink::EidoDocument;
using eidolink::Geometry;
using eidolink::GeoPoint;
using eidolink::PolygonRing;

// ---------------------------------------------------------------------------
// Geometry (atan2-form haversine; classic pnpoly crossing test)
// ---------------------------------------------------------------------------

inline double haversine(double lat1, double lon1, double lat2, double lon2) {
    const double R = 6371008.8;
    const double rad = M_PI / 180.0;
    double p1 = lat1 * rad, p2 = lat2 * rad;
    double dp = (lat2 - lat1) * rad, dl = (lon2 - lon1) * rad;
    double a = std::sin(dp / 2) * std::sin(dp / 2) +
               std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
    return 2.0 * R * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

inline bool inside(const GeoPoint& p, const std::vector<GeoPoint>& ring) {
    // ring is closed (first == last); iterate the distinct vertices.
    size_t n = ring.size() - 1;
    bool c = false;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        if (((ring[i].latitude > p.latitude) != (ring[j].latitude > p.latitude)) &&
            (p.longitude < (ring[j].longitude - ring[i].longitude) *
                                   (p.latitude - ring[i].latitude) /
                                   (ring[j].latitude - ring[i].latitude) +
                               ring[i].longitude))
            c = !c;
    }
    return c;
}

inline std::vector<GeoPoint> boundary_samples(const std::vector<GeoPoint>& ring) {
    const int kSamples = 64;  // pinned sampling density
    std::vector<GeoPoint> out;
    for (size_t i = 0; i + 1 < ring.size(); ++i) {
        for (int k = 0; k < kSamples; ++k) {
            double t = double(k) / kSamples;
            out.push_back({ring[i].latitude + t * (ring[i + 1].latitude - ring[i].latitude),
                           ring[i].longitude + t * (ring[i + 1].longitude - ring[i].longitude)});
        }
    }
    return out;
}

inline double geom_distance(const Geometry& a, const Geometry& b) {
    const auto* pa = std::get_if<GeoPoint>(&a);
    const auto* pb = std::get_if<GeoPoint>(&b);
    auto pt_pt = [](const GeoPoint& x, const GeoPoint& y) {
        return haversine(x.latitude, x.longitude, y.latitude, y.longitude);
    };
    auto pt_ring = [&](const GeoPoint& p, const PolygonRing& r) {
        if (inside(p, r.vertices)) return 0.0;
        double best = 1e300;
        for (const auto& s : boundary_samples(r.vertices)) best = std::min(best, pt_pt(p, s));
        return best;
    };
    if (pa && pb) return pt_pt(*pa, *pb);
    if (pa) return pt_ring(*pa, std::get<PolygonRing>(b));
    if (pb) return pt_ring(*pb, std::get<PolygonRing>(a));
    const auto& ra = std::get<PolygonRing>(a);
    const auto& rb = std::get<PolygonRing>(b);
    auto sa = boundary_samples(ra.vertices);
    auto sb = boundary_samples(rb.vertices);
    double best = 1e300;
    for (const auto& p : sa) {
        if (inside(p, rb.vertices)) return 0.0;
        for (const auto& q : sb) best = std::min(best, pt_pt(p, q));
    }
    for (const auto& q : sb)
        if (inside(q, ra.vertices)) return 0.0;
    return best;
}

// ---------------------------------------------------------------------------
// Text (dense 4096-bucket vectors)
// ---------------------------------------------------------------------------

inline std::vector<double> text_vector(const std::string& text) {
    std::vector<double> v(4096, 0.0);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    bool in_token = false;
    auto flush = [&] {
        if (in_token) {
            v[h % 4096] += 1.0;
            h = 0xcbf29ce484222325ULL;
            in_token = false;
        }
    };
    for (char raw : text) {
        char c = raw;
        if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
        bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (alnum) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
            in_token = true;
        } else {
            flush();
        }
    }
    flush();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::max(0.0, std::min(1.0, dot));
}

// The document text fed to the semantic term, re-derived from raw fields:
// incident type, disposition, notes ascending by timestamp, civic/description
// texts in document order.
inline std::string document_text(const EidoDocument& d) {
    std::vector<std::string> parts;
    if (d.incident.incident_type) parts.push_back(*d.incident.incident_type);
    if (d.incident.disposition_text) parts.push_back(*d.incident.disposition_text);
    std::vector<std::pair<std::int64_t, size_t>> keyed;
    for (size_t i = 0; i < d.notes.size(); ++i)
        keyed.push_back({d.notes[i].timestamp.epoch_micros, i});
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [ts, i] : keyed) parts.push_back(d.notes[i].comments);
    for (const auto& l : d.locations) {
        if (l.civic_address_text) parts.push_back(*l.civic_address_text);
        if (l.description_text) parts.push_back(*l.description_text);
    }
    std::string out;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out += " ";
        out += p;
    }
    return out;
}

// ---------------------------------------------------------------------------
// The weighted similarity recomputed from raw documents. An incident here is
// just its member documents.
// ---------------------------------------------------------------------------

struct IncidentDocs {
    std::string incident_id;
    std::int64_t created_at_us = 0;
    std::vector<EidoDocument> docs;
};

struct SigmaResult {
    double sigma = 0.0;
    bool has_spatial = false;
    bool has_semantic = false;
};

inline SigmaResult sigma(const EidoDocument& e_new, const IncidentDocs& incident, double w_t,
                         double w_g, double w_s, double half_life_t_seconds,
                         double half_life_g_meters) {
    // Temporal: gap to the max issued timestamp among member documents.
    std::int64_t latest = incident.docs.front().issued_timestamp.epoch_micros;
    for (const auto& d : incident.docs)
        latest = std::max(latest, d.issued_timestamp.epoch_micros);
    double dt_seconds = std::abs(double(e_new.issued_timestamp.epoch_micros - latest)) / 1e6;
    double phi_time = std::pow(0.5, dt_seconds / half_life_t_seconds);

    // Spatial: min distance between any new-document geometry and any member
    // geometry.
    std::vector<Geometry> new_geoms, inc_geoms;
    for (const auto& l : e_new.locations)
        if (l.geometry) new_geoms.push_back(*l.geometry);
    for (const auto& d : incident.docs)
        for (const auto& l : d.locations)
            if (l.geometry) inc_geoms.push_back(*l.geometry);
    SigmaResult r;
    double phi_geo = 0.0;
    if (!new_geoms.empty() && !inc_geoms.empty()) {
        double dist = 1e300;
        for (const auto& a : new_geoms)
            for (const auto& b : inc_geoms) dist = std::min(dist, geom_distance(a, b));
        phi_geo = std::pow(0.5, dist / half_life_g_meters);
        r.has_spatial = true;
    }

    // Semantic: best cosine against any member text.
    auto v_new = text_vector(document_text(e_new));
    bool new_zero = std::all_of(v_new.begin(), v_new.end(), [](double x) { return x == 0.0; });
    double phi_sem = 0.0;
    if (!new_zero) {
        for (const auto& d : incident.docs) {
            auto v = text_vector(document_text(d));
            bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
            if (zero) continue;
            r.has_semantic = true;
            phi_sem = std::max(phi_sem, cosine(v_new, v));
        }
    }

    double sum = w_t + w_g + w_s;
    double wt = w_t / sum, wg = w_g / sum, ws = w_s / sum;
    double avail = wt + (r.has_spatial ? wg : 0.0) + (r.has_semantic ? ws : 0.0);
    if (avail <= 0.0) {
        r.sigma = 0.0;
        return r;
    }
    r.sigma = (wt * phi_time + (r.has_spatial ? wg * phi_geo : 0.0) +
               (r.has_semantic ? ws * phi_sem : 0.0)) /
              avail;
    return r;
}

// Exhaustive argmax over all incidents (no gates), with the tie rule:
// within 1e-9 of the max, earliest created_at then smallest id wins; link
// only when the max sigma reaches tau.
struct ArgmaxResult {
    bool link = false;
    std::string incident_id;
    double best_sigma = 0.0;
};

inline ArgmaxResult exhaustive_argmax(const EidoDocument& e_new,
                                      const std::vector<IncidentDocs>& incidents, double w_t,
                                      double w_g, double w_s, double half_life_t_seconds,
                                      double half_life_g_meters, double tau) {
    ArgmaxResult out;
    if (incidents.empty()) return out;
    std::vector<double> sigmas;
    double best = -1.0;
    for (const auto& inc : incidents) {
        double s =
            sigma(e_new, inc, w_t, w_g, w_s, half_life_t_seconds, half_life_g_meters).sigma;
        sigmas.push_back(s);
        best = std::max(best, s);
    }
    out.best_sigma = best;
    if (best < tau) return out;
    const IncidentDocs* winner = nullptr;
    for (size_t i = 0; i < incidents.size(); ++i) {
        if (sigmas[i] < best - 1e-9) continue;
        if (!winner) {
            winner = &incidents[i];
            continue;
        }
        if (incidents[i].created_at_us < winner->created_at_us ||
            (incidents[i].created_at_us == winner->created_at_us &&
             incidents[i].incident_id < winner->incident_id))
            winner = &incidents[i];
    }
    out.link = true;
    out.incident_id = winner->incident_id;
    return out;
}

// ---------------------------------------------------------------------------
// Composite brute force
// ---------------------------------------------------------------------------

inline std::vector<std::string> union_of_units(const std::vector<EidoDocument>& docs) {
    std::set<std::string> u;
    for (const auto& d : docs)
        for (const auto& r : d.resources) u.insert(r.unit_identifier);
    return {u.begin(), u.end()};
}

struct NarrativeKey {
    std::int64_t ts;
    size_t arrival;
    std::string note_id;
    std::string text;
    std::string eido_id;
};

inline std::vector<NarrativeKey> narrative_order(const std::vector<EidoDocument>& docs) {
    std::vector<NarrativeKey> keys;
    for (size_t a = 0; a < docs.size(); ++a)
        for (const auto& n : docs[a].notes)
            keys.push_back({n.timestamp.epoch_micros, a, n.note_id, n.comments,
                            docs[a].eido_id});
    std::sort(keys.begin(), keys.end(), [](const NarrativeKey& x, const NarrativeKey& y) {
        if (x.ts != y.ts) return x.ts < y.ts;
        if (x.arrival != y.arrival) return x.arrival < y.arrival;
        return x.note_id < y.note_id;
    });
    return keys;
}

// ---------------------------------------------------------------------------
// Deep document comparison modulo generated component ids.
// ---------------------------------------------------------------------------

inline bool same_opt(const std::optional<std::string>& a, const std::optional<std::string>& b) {
    return a == b;
}

inline bool documents_isomorphic(const EidoDocument& a, const EidoDocument& b,
                                 std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (a.eido_id != b.eido_id) return fail("eidoId differs");
    if (!(a.issued_timestamp == b.issued_timestamp)) return fail("issuedTimestamp differs");
    if (!same_opt(a.source_descriptor, b.source_descriptor))
        return fail("sourceDescriptor differs");
    if (!(a.incident == b.incident)) return fail("incidentComponent differs");
    if (a.extras != b.extras) return fail("document extras differ");

    if (a.locations.size() != b.locations.size()) return fail("location count differs");
    for (size_t i = 0; i < a.locations.size(); ++i) {
        const auto& x = a.locations[i];
        const auto& y = b.locations[i];
        if (x.location_id != y.location_id || x.geometry != y.geometry ||
            !same_opt(x.civic_address_text, y.civic_address_text) ||
            !same_opt(x.description_text, y.description_text) ||
            x.confidence != y.confidence || x.extras != y.extras)
            return fail("location " + std::to_string(i) + " differs");
    }

    if (a.calls.size() != b.calls.size()) return fail("call count differs");
    for (size_t i = 0; i < a.calls.size(); ++i) {
        const auto& x = a.calls[i];
        const auto& y = b.calls[i];
        if (x.call_id != y.call_id || !(x.start_timestamp == y.start_timestamp) ||
            !same_opt(x.source_text, y.source_text) || x.extras != y.extras)
            return fail("call " + std::to_string(i) + " differs");
    }

    if (a.notes.size() != b.notes.size()) return fail("note count differs");
    for (size_t i = 0; i < a.notes.size(); ++i) {
        const auto& x = a.notes[i];
        const auto& y = b.notes[i];
        if (x.note_id != y.note_id || x.comments != y.comments ||
            !(x.timestamp == y.timestamp) ||
            !same_opt(x.location_reference_id, y.location_reference_id) ||
            x.extras != y.extras)
            return fail("note " + std::to_string(i) + " differs");
    }

    if (a.persons.size() != b.persons.size()) return fail("person count differs");
    for (size_t i = 0; i < a.persons.size(); ++i) {
        const auto& x = a.persons[i];
        const auto& y = b.persons[i];
        if (x.person_id != y.person_id || !same_opt(x.role_text, y.role_text) ||
            !same_opt(x.name_text, y.name_text) || x.extras != y.extras)
            return fail("person " + std::to_string(i) + " differs");
    }

    if (a.resources.size() != b.resources.size()) return fail("resource count differs");
    for (size_t i = 0; i < a.resources.size(); ++i) {
        const auto& x = a.resources[i];
        const auto& y = b.resources[i];
        if (x.resource_id != y.resource_id || x.unit_identifier != y.unit_identifier ||
            x.extras != y.extras)
            return fail("resource " + std::to_string(i) + " differs");
    }

    if (a.resource_statuses.size() != b.resource_statuses.size())
        return fail("status count differs");
    for (size_t i = 0; i < a.resource_statuses.size(); ++i) {
        const auto& x = a.resource_statuses[i];
        const auto& y = b.resource_statuses[i];
        // status ids may be generated on one side when absent on the other
        if (x.status_id && y.status_id && *x.status_id != *y.status_id)
            return fail("status id " + std::to_string(i) + " differs");
        if (x.status_text != y.status_text || !(x.status_time == y.status_time) ||
            x.referenced_resource_id != y.referenced_resource_id || x.extras != y.extras)
            return fail("status " + std::to_string(i) + " differs");
    }
    return true;
}

}  // namespace oracle
