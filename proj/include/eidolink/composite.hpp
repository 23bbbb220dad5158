#pragma once

// Composite incident view: derived on demand from an incident's linked
// documents, never stored as authoritative state.
//
//   units      union of unit references across linked documents
//   narrative  all notes, ascending by timestamp; ties keep EIDO arrival
//              order, then noteId
//   status/type  value from the linked document with the greatest
//              issuedTimestamp that carries the field (ties -> latest arrival)
//   locations  deduplicated by exact geometry + text equality

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/correlator.hpp"
#include "eidolink/eido.hpp"

namespace eidolink {

struct NarrativeEntry {
    Instant timestamp;
    std::string source_eido_id;
    std::string note_id;
    std::string text;

    bool operator==(const NarrativeEntry&) const = default;
};

struct CompositeView {
    std::string incident_id;
    std::vector<std::string> units;  // sorted, unique
    std::vector<NarrativeEntry> narrative;
    std::optional<std::string> current_status;
    std::optional<std::string> current_type;
    std::vector<LocationComponent> locations;
    std::vector<std::string> contributing_eido_ids;  // == incident.linkedEidoIds
};

using DocumentResolver = std::function<const EidoDocument*(const std::string&)>;

inline CompositeView derive_composite(const IncidentContext& incident,
                                      const DocumentResolver& resolve) {
    CompositeView view;
    view.incident_id = incident.incident_id;
    view.contributing_eido_ids = incident.linked_eido_ids;

    std::set<std::string> units;
    struct Pick {
        std::int64_t issued = 0;
        size_t arrival = 0;
        std::string value;
        bool set = false;
    };
    Pick status_pick, type_pick;

    struct NoteRef {
        Instant ts;
        size_t arrival;
        std::string note_id;
        std::string eido_id;
        std::string text;
    };
    std::vector<NoteRef> notes;

    auto loc_key = [](const LocationComponent& lc) {
        Json k = Json::object();
        if (lc.geometry) k["g"] = geometry_to_json(*lc.geometry);
        k["c"] = lc.civic_address_text.value_or("");
        k["d"] = lc.description_text.value_or("");
        return k.dump();
    };
    std::set<std::string> seen_locations;

    for (size_t arrival = 0; arrival < incident.linked_eido_ids.size(); ++arrival) {
        const std::string& id = incident.linked_eido_ids[arrival];
        const EidoDocument* doc = resolve(id);
        if (!doc)
            throw std::runtime_error("incident " + incident.incident_id +
                                     " links unknown document '" + id + "'");

        for (const auto& u : unit_references(*doc)) units.insert(u);

        for (const auto& n : doc->notes)
            notes.push_back({n.timestamp, arrival, n.note_id, id, n.comments});

        auto consider = [&](Pick& pick, const std::optional<std::string>& value) {
            if (!value) return;
            std::int64_t issued = doc->issued_timestamp.epoch_micros;
            if (!pick.set || issued > pick.issued ||
                (issued == pick.issued && arrival >= pick.arrival)) {
                pick = {issued, arrival, *value, true};
            }
        };
        consider(status_pick, doc->incident.status);
        consider(type_pick, doc->incident.incident_type);

        for (const auto& lc : doc->locations) {
            if (seen_locations.insert(loc_key(lc)).second) view.locations.push_back(lc);
        }
    }

    view.units.assign(units.begin(), units.end());
    if (status_pick.set) view.current_status = status_pick.value;
    if (type_pick.set) view.current_type = type_pick.value;

    std::stable_sort(notes.begin(), notes.end(), [](const NoteRef& a, const NoteRef& b) {
        if (a.ts.epoch_micros != b.ts.epoch_micros) return a.ts.epoch_micros < b.ts.epoch_micros;
        if (a.arrival != b.arrival) return a.arrival < b.arrival;
        return a.note_id < b.note_id;
    });
    for (auto& n : notes)
        view.narrative.push_back({n.ts, std::move(n.eido_id), std::move(n.note_id),
                                  std::move(n.text)});
    return view;
}

inline Json composite_to_json(const CompositeView& view) {
    Json j = Json::object();
    j["incidentId"] = view.incident_id;
    j["contributingEidoIds"] = view.contributing_eido_ids;
    j["units"] = view.units;
    if (view.current_status) j["currentStatus"] = *view.current_status;
    if (view.current_type) j["currentType"] = *view.current_type;
    Json narrative = Json::array();
    for (const auto& n : view.narrative) {
        narrative.push_back(Json{{"timestamp", n.timestamp.to_string()},
                                 {"sourceEidoId", n.source_eido_id},
                                 {"noteId", n.note_id},
                                 {"text", n.text}});
    }
    j["narrative"] = std::move(narrative);
    Json locations = Json::array();
    for (const auto& lc : view.locations) {
        Json o = Json::object();
        o["locationId"] = lc.location_id;
        if (lc.geometry) o["geometry"] = geometry_to_json(*lc.geometry);
        if (lc.civic_address_text) o["civicAddressText"] = *lc.civic_address_text;
        if (lc.description_text) o["locationDescriptionText"] = *lc.description_text;
        if (lc.confidence) o["confidence"] = *lc.confidence;
        locations.push_back(std::move(o));
    }
    j["locations"] = std::move(locations);
    return j;
}

}  // namespace eidolink
