#pragma once

// EIDO-JSON document model: the validated subset this system exchanges.
//
// Wire layout (canonical on output: keys sorted, no insignificant whitespace,
// timestamps kept at their original UTC offset):
//
//   {
//     "eidoId": "...",
//     "issuedTimestamp": "2026-01-01T12:20:00-08:00",
//     "sourceDescriptor": "...",
//     "incidentComponent": { ... },
//     "locationComponent": [ ... ],
//     "callComponent": [ ... ],
//     "resourceComponent": [ ... ],
//     "resourceStatusComponent": [ ... ],
//     "notesComponent": [ ... ],
//     "personComponent": [ ... ]
//   }
//
// Unknown keys at document level and inside every component are preserved in
// an extras map and re-emitted on serialization, so a round trip never loses
// vendor fields. Optional text fields are normalized: empty string == absent.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eidolink/geo.hpp"
#include "eidolink/registry.hpp"
#include "eidolink/strutil.hpp"
#include "eidolink/timeutil.hpp"

namespace eidolink {

using Json = nlohmann::json;

struct EidoError : std::runtime_error {
    std::string path;  // JSON path of the offending element, e.g. "notesComponent[0]"
    EidoError(std::string path_, const std::string& msg)
        : std::runtime_error(path_.empty() ? msg : path_ + ": " + msg),
          path(std::move(path_)) {}
};

struct IncidentComponent {
    std::optional<std::string> incident_type;  // incidentTypeCommonRegistryText
    std::optional<int> priority;               // incidentCommonPriorityNumber, 1..5
    std::optional<std::string> status;         // open | active | closed | unknown
    std::optional<std::string> disposition_text;
    std::optional<std::string> tracking_id;
    Json extras = Json::object();

    bool operator==(const IncidentComponent&) const = default;
};

struct LocationComponent {
    std::string location_id;
    std::optional<Geometry> geometry;
    std::optional<std::string> civic_address_text;
    std::optional<std::string> description_text;  // locationDescriptionText
    std::optional<double> confidence;             // [0,1]
    Json extras = Json::object();

    bool operator==(const LocationComponent&) const = default;
};

struct NotesComponent {
    std::string note_id;
    std::string comments;  // notesActionComments, non-empty
    Instant timestamp;     // noteTimestamp
    std::optional<std::string> location_reference_id;
    Json extras = Json::object();

    bool operator==(const NotesComponent&) const = default;
};

struct ResourceComponent {
    std::string resource_id;
    std::string unit_identifier;
    Json extras = Json::object();

    bool operator==(const ResourceComponent&) const = default;
};

struct ResourceStatusComponent {
    std::optional<std::string> status_id;  // resourceStatusId; generated ids are fine
    std::string status_text;
    Instant status_time;
    std::string referenced_resource_id;
    Json extras = Json::object();

    bool operator==(const ResourceStatusComponent&) const = default;
};

struct CallComponent {
    std::string call_id;
    Instant start_timestamp;  // callStartTimestamp
    std::optional<std::string> source_text;
    Json extras = Json::object();

    bool operator==(const CallComponent&) const = default;
};

struct PersonComponent {
    std::string person_id;
    std::optional<std::string> role_text;
    std::optional<std::string> name_text;
    Json extras = Json::object();

    bool operator==(const PersonComponent&) const = default;
};

struct EidoDocument {
    std::string eido_id;
    Instant issued_timestamp;
    std::optional<std::string> source_descriptor;
    IncidentComponent incident;
    std::vector<LocationComponent> locations;
    std::vector<CallComponent> calls;
    std::vector<ResourceComponent> resources;
    std::vector<ResourceStatusComponent> resource_statuses;
    std::vector<NotesComponent> notes;
    std::vector<PersonComponent> persons;
    Json extras = Json::object();

    bool operator==(const EidoDocument&) const = default;
};

inline const std::vector<std::string>& incident_status_values() {
    static const std::vector<std::string> kValues = {"open", "active", "closed", "unknown"};
    return kValues;
}

struct ParseOptions {
    const RegistryVocabulary* vocabulary = nullptr;
    bool strict = false;  // vocabulary misses become errors instead of warnings
};

// ---------------------------------------------------------------------------
// Geometry <-> JSON
// ---------------------------------------------------------------------------

inline Json geometry_to_json(const Geometry& g) {
    if (const auto* p = std::get_if<GeoPoint>(&g)) {
        return Json{{"latitude", p->latitude}, {"longitude", p->longitude}};
    }
    const auto& ring = std::get<PolygonRing>(g);
    Json arr = Json::array();
    for (const auto& v : ring.vertices) arr.push_back(Json::array({v.latitude, v.longitude}));
    return Json{{"ring", arr}};
}

inline Geometry geometry_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) throw EidoError(path, "geometry must be an object");
    if (j.contains("ring")) {
        const Json& arr = j.at("ring");
        if (!arr.is_array()) throw EidoError(path, "ring must be an array of [lat,lon] pairs");
        PolygonRing ring;
        for (const auto& v : arr) {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                throw EidoError(path, "ring vertices must be [lat,lon] number pairs");
            ring.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
        }
        if (!polygon_ring_valid(ring))
            throw EidoError(path,
                            "polygon ring must be closed (first == last), have >= 4 vertices, "
                            "and stay within lat/lon bounds");
        return ring;
    }
    if (j.contains("latitude") && j.contains("longitude")) {
        if (!j.at("latitude").is_number() || !j.at("longitude").is_number())
            throw EidoError(path, "latitude/longitude must be numbers");
        GeoPoint p{j.at("latitude").get<double>(), j.at("longitude").get<double>()};
        if (!lat_lon_in_range(p)) throw EidoError(path, "latitude/longitude out of range");
        return p;
    }
    throw EidoError(path, "geometry needs either ring or latitude+longitude");
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string idx(std::string_view base, size_t i) {
    return std::string(base) + "[" + std::to_string(i) + "]";
}

inline std::optional<std::string> take_opt_string(Json& obj, const char* key,
                                                  const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_string()) throw EidoError(path + "." + key, "expected a string");
    std::string v = it->get<std::string>();
    obj.erase(it);
    if (v.empty()) return std::nullopt;  // empty optional text == absent
    return v;
}

inline std::string take_req_string(Json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw EidoError(path, std::string("missing required field '") + key + "'");
    if (!it->is_string()) throw EidoError(path + "." + key, "expected a string");
    std::string v = it->get<std::string>();
    obj.erase(it);
    if (v.empty()) throw EidoError(path + "." + key, "must be non-empty");
    return v;
}

inline Instant take_instant(Json& obj, const char* key, const std::string& path) {
    std::string raw = take_req_string(obj, key, path);
    try {
        return parse_instant(raw);
    } catch (const TimeParseError& e) {
        throw EidoError(path + "." + key, e.what());
    }
}

}  // namespace detail

inline EidoDocument parse_document(std::string_view text, const ParseOptions& opts = {},
                                   std::vector<std::string>* warnings = nullptr) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw EidoError("", std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw EidoError("", "document must be a JSON object");

    using detail::idx;
    using detail::take_instant;
    using detail::take_opt_string;
    using detail::take_req_string;

    EidoDocument doc;
    doc.eido_id = take_req_string(root, "eidoId", "");
    doc.issued_timestamp = take_instant(root, "issuedTimestamp", "");
    doc.source_descriptor = take_opt_string(root, "sourceDescriptor", "");

    // incidentComponent
    if (auto it = root.find("incidentComponent"); it != root.end()) {
        if (!it->is_object()) throw EidoError("incidentComponent", "expected an object");
        Json obj = *it;
        root.erase(it);
        const std::string path = "incidentComponent";
        doc.incident.incident_type = take_opt_string(obj, "incidentTypeCommonRegistryText", path);
        if (auto p = obj.find("incidentCommonPriorityNumber"); p != obj.end()) {
            if (!p->is_number_integer())
                throw EidoError(path + ".incidentCommonPriorityNumber", "expected an integer");
            int v = p->get<int>();
            if (v < 1 || v > 5)
                throw EidoError(path + ".incidentCommonPriorityNumber", "must be in 1..5");
            doc.incident.priority = v;
            obj.erase(p);
        }
        doc.incident.status = take_opt_string(obj, "incidentStatus", path);
        if (doc.incident.status) {
            const auto& vals = incident_status_values();
            if (std::find(vals.begin(), vals.end(), *doc.incident.status) == vals.end())
                throw EidoError(path + ".incidentStatus",
                                "must be one of open|active|closed|unknown");
        }
        doc.incident.disposition_text = take_opt_string(obj, "incidentDispositionText", path);
        doc.incident.tracking_id = take_opt_string(obj, "incidentTrackingId", path);
        doc.incident.extras = std::move(obj);
    }

    auto take_array = [&](const char* key) -> Json {
        auto it = root.find(key);
        if (it == root.end()) return Json::array();
        if (!it->is_array()) throw EidoError(key, "expected an array");
        Json arr = *it;
        root.erase(it);
        return arr;
    };

    // locationComponent
    {
        Json arr = take_array("locationComponent");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string path = idx("locationComponent", i);
            Json obj = arr[i];
            if (!obj.is_object()) throw EidoError(path, "expected an object");
            LocationComponent lc;
            lc.location_id = take_req_string(obj, "locationId", path);
            if (auto g = obj.find("geometry"); g != obj.end()) {
                lc.geometry = geometry_from_json(*g, path + ".geometry");
                obj.erase(g);
            }
            lc.civic_address_text = take_opt_string(obj, "civicAddressText", path);
            lc.description_text = take_opt_string(obj, "locationDescriptionText", path);
            if (auto c = obj.find("confidence"); c != obj.end()) {
                if (!c->is_number()) throw EidoError(path + ".confidence", "expected a number");
                double v = c->get<double>();
                if (v < 0.0 || v > 1.0)
                    throw EidoError(path + ".confidence", "must be in [0,1]");
                lc.confidence = v;
                obj.erase(c);
            }
            if (!lc.geometry && !lc.civic_address_text && !lc.description_text)
                throw EidoError(path,
                                "needs at least one of geometry, civicAddressText, "
                                "locationDescriptionText");
            lc.extras = std::move(obj);
            doc.locations.push_back(std::move(lc));
        }
    }

    // callComponent
    {
        Json arr = take_array("callComponent");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string path = idx("callComponent", i);
            Json obj = arr[i];
            if (!obj.is_object()) throw EidoError(path, "expected an object");
            CallComponent cc;
            cc.call_id = take_req_string(obj, "callId", path);
            cc.start_timestamp = take_instant(obj, "callStartTimestamp", path);
            cc.source_text = take_opt_string(obj, "callSourceText", path);
            cc.extras = std::move(obj);
            doc.calls.push_back(std::move(cc));
        }
    }

    // resourceComponent
    {
        Json arr = take_array("resourceComponent");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string path = idx("resourceComponent", i);
            Json obj = arr[i];
            if (!obj.is_object()) throw EidoError(path, "expected an object");
            ResourceComponent rc;
            rc.resource_id = take_req_string(obj, "resourceId", path);
            rc.unit_identifier = take_req_string(obj, "unitIdentifier", path);
            rc.extras = std::move(obj);
            doc.resources.push_back(std::move(rc));
        }
    }

    // resourceStatusComponent
    {
        Json arr = take_array("resourceStatusComponent");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string path = idx("resourceStatusComponent", i);
            Json obj = arr[i];
            if (!obj.is_object()) throw EidoError(path, "expected an object");
            ResourceStatusComponent rs;
            rs.status_id = take_opt_string(obj, "resourceStatusId", path);
            rs.status_text = take_req_string(obj, "statusText", path);
            rs.status_time = take_instant(obj, "statusTime", path);
            rs.referenced_resource_id = take_req_string(obj, "referencedResourceId", path);
            rs.extras = std::move(obj);
            doc.resource_statuses.push_back(std::move(rs));
        }
    }

    // notesComponent
    {
        Json arr = take_array("notesComponent");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string path = idx("notesComponent", i);
            Json obj = arr[i];
            if (!obj.is_object()) throw EidoError(path, "expected an object");
            NotesComponent nc;
            nc.note_id = take_req_string(obj, "noteId", path);
            nc.comments = take_req_string(obj, "notesActionComments", path);
            nc.timestamp = take_instant(obj, "noteTimestamp", path);
            nc.location_reference_id = take_opt_string(obj, "locationReferenceId", path);
            nc.extras = std::move(obj);
            doc.notes.push_back(std::move(nc));
        }
    }

    // personComponent
    {
        Json arr = take_array("personComponent");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string path = idx("personComponent", i);
            Json obj = arr[i];
            if (!obj.is_object()) throw EidoError(path, "expected an object");
            PersonComponent pc;
            pc.person_id = take_req_string(obj, "personId", path);
            pc.role_text = take_opt_string(obj, "roleText", path);
            pc.name_text = take_opt_string(obj, "nameText", path);
            pc.extras = std::move(obj);
            doc.persons.push_back(std::move(pc));
        }
    }

    doc.extras = std::move(root);

    // Cross-component references must resolve within the document.
    for (size_t i = 0; i < doc.notes.size(); ++i) {
        const auto& ref = doc.notes[i].location_reference_id;
        if (!ref) continue;
        bool found = std::any_of(doc.locations.begin(), doc.locations.end(),
                                 [&](const LocationComponent& l) { return l.location_id == *ref; });
        if (!found)
            throw EidoError(idx("notesComponent", i),
                            "locationReferenceId '" + *ref + "' does not resolve to any "
                            "locationComponent in this document");
    }
    for (size_t i = 0; i < doc.resource_statuses.size(); ++i) {
        const auto& ref = doc.resource_statuses[i].referenced_resource_id;
        bool found = std::any_of(doc.resources.begin(), doc.resources.end(),
                                 [&](const ResourceComponent& r) { return r.resource_id == ref; });
        if (!found)
            throw EidoError(idx("resourceStatusComponent", i),
                            "referencedResourceId '" + ref + "' does not resolve to any "
                            "resourceComponent in this document");
    }

    // Registry vocabulary check: warning by default, error in strict mode.
    if (opts.vocabulary && doc.incident.incident_type &&
        !opts.vocabulary->contains(*doc.incident.incident_type)) {
        std::string msg = "incidentTypeCommonRegistryText '" + *doc.incident.incident_type +
                          "' is not in the registry vocabulary";
        if (opts.strict)
            throw EidoError("incidentComponent.incidentTypeCommonRegistryText", msg);
        if (warnings) warnings->push_back(msg);
    }

    return doc;
}

// ---------------------------------------------------------------------------
// Serialization (canonical: sorted keys, compact separators)
// ---------------------------------------------------------------------------

namespace detail {

inline void merge_extras(Json& obj, const Json& extras) {
    for (auto it = extras.begin(); it != extras.end(); ++it) obj[it.key()] = it.value();
}

}  // namespace detail

inline Json document_to_json(const EidoDocument& doc) {
    Json root = Json::object();
    root["eidoId"] = doc.eido_id;
    root["issuedTimestamp"] = doc.issued_timestamp.to_string();
    if (doc.source_descriptor) root["sourceDescriptor"] = *doc.source_descriptor;

    {
        Json inc = Json::object();
        if (doc.incident.incident_type)
            inc["incidentTypeCommonRegistryText"] = *doc.incident.incident_type;
        if (doc.incident.priority) inc["incidentCommonPriorityNumber"] = *doc.incident.priority;
        if (doc.incident.status) inc["incidentStatus"] = *doc.incident.status;
        if (doc.incident.disposition_text)
            inc["incidentDispositionText"] = *doc.incident.disposition_text;
        if (doc.incident.tracking_id) inc["incidentTrackingId"] = *doc.incident.tracking_id;
        detail::merge_extras(inc, doc.incident.extras);
        if (!inc.empty()) root["incidentComponent"] = std::move(inc);
    }

    if (!doc.locations.empty()) {
        Json arr = Json::array();
        for (const auto& lc : doc.locations) {
            Json o = Json::object();
            o["locationId"] = lc.location_id;
            if (lc.geometry) o["geometry"] = geometry_to_json(*lc.geometry);
            if (lc.civic_address_text) o["civicAddressText"] = *lc.civic_address_text;
            if (lc.description_text) o["locationDescriptionText"] = *lc.description_text;
            if (lc.confidence) o["confidence"] = *lc.confidence;
            detail::merge_extras(o, lc.extras);
            arr.push_back(std::move(o));
        }
        root["locationComponent"] = std::move(arr);
    }

    if (!doc.calls.empty()) {
        Json arr = Json::array();
        for (const auto& cc : doc.calls) {
            Json o = Json::object();
            o["callId"] = cc.call_id;
            o["callStartTimestamp"] = cc.start_timestamp.to_string();
            if (cc.source_text) o["callSourceText"] = *cc.source_text;
            detail::merge_extras(o, cc.extras);
            arr.push_back(std::move(o));
        }
        root["callComponent"] = std::move(arr);
    }

    if (!doc.resources.empty()) {
        Json arr = Json::array();
        for (const auto& rc : doc.resources) {
            Json o = Json::object();
            o["resourceId"] = rc.resource_id;
            o["unitIdentifier"] = rc.unit_identifier;
            detail::merge_extras(o, rc.extras);
            arr.push_back(std::move(o));
        }
        root["resourceComponent"] = std::move(arr);
    }

    if (!doc.resource_statuses.empty()) {
        Json arr = Json::array();
        for (const auto& rs : doc.resource_statuses) {
            Json o = Json::object();
            if (rs.status_id) o["resourceStatusId"] = *rs.status_id;
            o["statusText"] = rs.status_text;
            o["statusTime"] = rs.status_time.to_string();
            o["referencedResourceId"] = rs.referenced_resource_id;
            detail::merge_extras(o, rs.extras);
            arr.push_back(std::move(o));
        }
        root["resourceStatusComponent"] = std::move(arr);
    }

    if (!doc.notes.empty()) {
        Json arr = Json::array();
        for (const auto& nc : doc.notes) {
            Json o = Json::object();
            o["noteId"] = nc.note_id;
            o["notesActionComments"] = nc.comments;
            o["noteTimestamp"] = nc.timestamp.to_string();
            if (nc.location_reference_id) o["locationReferenceId"] = *nc.location_reference_id;
            detail::merge_extras(o, nc.extras);
            arr.push_back(std::move(o));
        }
        root["notesComponent"] = std::move(arr);
    }

    if (!doc.persons.empty()) {
        Json arr = Json::array();
        for (const auto& pc : doc.persons) {
            Json o = Json::object();
            o["personId"] = pc.person_id;
            if (pc.role_text) o["roleText"] = *pc.role_text;
            if (pc.name_text) o["nameText"] = *pc.name_text;
            detail::merge_extras(o, pc.extras);
            arr.push_back(std::move(o));
        }
        root["personComponent"] = std::move(arr);
    }

    detail::merge_extras(root, doc.extras);
    return root;
}

inline std::string serialize_document(const EidoDocument& doc) {
    return document_to_json(doc).dump();
}

// ---------------------------------------------------------------------------
// Descriptive text: the document's textual identity fed to the vectorizer.
// Order: incident type, disposition, notes ascending by timestamp, then
// civic/description texts in document order. Single-space separated.
// ---------------------------------------------------------------------------

inline std::string descriptive_text(const EidoDocument& doc) {
    std::vector<std::string> parts;
    if (doc.incident.incident_type) parts.push_back(*doc.incident.incident_type);
    if (doc.incident.disposition_text) parts.push_back(*doc.incident.disposition_text);

    std::vector<size_t> order(doc.notes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return doc.notes[a].timestamp.epoch_micros < doc.notes[b].timestamp.epoch_micros;
    });
    for (size_t i : order) parts.push_back(doc.notes[i].comments);

    for (const auto& lc : doc.locations) {
        if (lc.civic_address_text) parts.push_back(*lc.civic_address_text);
        if (lc.description_text) parts.push_back(*lc.description_text);
    }

    std::string out;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out += p;
    }
    return out;
}

// Unit references of one document: the distinct unitIdentifiers it mentions.
inline std::vector<std::string> unit_references(const EidoDocument& doc) {
    std::vector<std::string> out;
    for (const auto& r : doc.resources) {
        if (std::find(out.begin(), out.end(), r.unit_identifier) == out.end())
            out.push_back(r.unit_identifier);
    }
    return out;
}

inline std::vector<Geometry> document_geometries(const EidoDocument& doc) {
    std::vector<Geometry> out;
    for (const auto& lc : doc.locations) {
        if (lc.geometry) out.push_back(*lc.geometry);
    }
    return out;
}

}  // namespace eidolink
