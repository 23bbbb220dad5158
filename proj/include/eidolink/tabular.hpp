#pragma once

// Tabular exchange: flatten documents into typed feature rows and compose
// valid documents back from rows.
//
// One row per component plus one incident row per document. Values are
// copied, not transformed; links between components ride in dedicated link
// columns. Geometry flattens to scalar cells (point -> latitude/longitude,
// polygon -> the ring as a compact JSON string); unknown-field extras ride
// in an extrasJson column so nothing is lost on a round trip.
//
// Export layout: a directory of <kind>.csv files plus manifest.json with the
// file list and row counts. Import accepts that directory or a single
// JSON-lines stream with an explicit featureKind per row.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/csv.hpp"
#include "eidolink/eido.hpp"

namespace eidolink {

struct TabularError : std::runtime_error {
    explicit TabularError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class FeatureKind { Incident, Location, Person, Resource, ResourceStatus, Call, Note };

inline const std::vector<FeatureKind>& all_feature_kinds() {
    static const std::vector<FeatureKind> kKinds = {
        FeatureKind::Incident, FeatureKind::Location, FeatureKind::Call,
        FeatureKind::Note,     FeatureKind::Person,   FeatureKind::Resource,
        FeatureKind::ResourceStatus};
    return kKinds;
}

inline std::string_view feature_kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::Incident: return "incident";
        case FeatureKind::Location: return "location";
        case FeatureKind::Person: return "person";
        case FeatureKind::Resource: return "resource";
        case FeatureKind::ResourceStatus: return "resourceStatus";
        case FeatureKind::Call: return "call";
        case FeatureKind::Note: return "note";
    }
    return "?";
}

inline FeatureKind feature_kind_from_name(std::string_view name) {
    for (FeatureKind k : all_feature_kinds())
        if (feature_kind_name(k) == name) return k;
    throw TabularError("unknown feature kind '" + std::string(name) + "'");
}

struct FeatureRow {
    FeatureKind kind = FeatureKind::Incident;
    std::string eido_id;
    std::string component_id;
    std::map<std::string, std::string> attributes;
    std::map<std::string, std::string> links;  // column -> referenced componentId

    bool operator==(const FeatureRow&) const = default;
};

// Attribute columns per kind, in export order. Link columns are listed
// separately so importers can distinguish them.
inline const std::vector<std::string>& attribute_columns(FeatureKind k) {
    static const std::map<FeatureKind, std::vector<std::string>> kCols = {
        {FeatureKind::Incident,
         {"issuedTimestamp", "sourceDescriptor", "incidentTypeCommonRegistryText",
          "incidentCommonPriorityNumber", "incidentStatus", "incidentDispositionText",
          "incidentTrackingId", "documentExtrasJson", "extrasJson"}},
        {FeatureKind::Location,
         {"geometryType", "latitude", "longitude", "ringJson", "civicAddressText",
          "locationDescriptionText", "confidence", "extrasJson"}},
        {FeatureKind::Call, {"callStartTimestamp", "callSourceText", "extrasJson"}},
        {FeatureKind::Note, {"noteTimestamp", "notesActionComments", "extrasJson"}},
        {FeatureKind::Person, {"roleText", "nameText", "extrasJson"}},
        {FeatureKind::Resource, {"unitIdentifier", "extrasJson"}},
        {FeatureKind::ResourceStatus, {"statusText", "statusTime", "extrasJson"}},
    };
    return kCols.at(k);
}

inline const std::vector<std::string>& link_columns(FeatureKind k) {
    static const std::vector<std::string> kNone;
    static const std::vector<std::string> kNoteLinks = {"locationReferenceId"};
    static const std::vector<std::string> kStatusLinks = {"referencedResourceId"};
    if (k == FeatureKind::Note) return kNoteLinks;
    if (k == FeatureKind::ResourceStatus) return kStatusLinks;
    return kNone;
}

inline FeatureKind link_target_kind(const std::string& column) {
    if (column == "locationReferenceId") return FeatureKind::Location;
    if (column == "referencedResourceId") return FeatureKind::Resource;
    throw TabularError("unknown link column '" + column + "'");
}

// ---------------------------------------------------------------------------
// Flatten
// ---------------------------------------------------------------------------

namespace tabular_detail {

inline std::string number_to_cell(double v) {
    return Json(v).dump();  // shortest round-trip representation
}

inline void put_extras(FeatureRow& row, const Json& extras, const char* column = "extrasJson") {
    if (!extras.empty()) row.attributes[column] = extras.dump();
}

inline std::string generated_id(FeatureKind kind, size_t ordinal) {
    return std::string(feature_kind_name(kind)) + "-" + std::to_string(ordinal);
}

}  // namespace tabular_detail

inline std::vector<FeatureRow> flatten(const EidoDocument& doc) {
    using tabular_detail::generated_id;
    using tabular_detail::number_to_cell;
    using tabular_detail::put_extras;

    std::vector<FeatureRow> rows;

    {
        FeatureRow row;
        row.kind = FeatureKind::Incident;
        row.eido_id = doc.eido_id;
        row.component_id = generated_id(FeatureKind::Incident, 1);
        row.attributes["issuedTimestamp"] = doc.issued_timestamp.to_string();
        if (doc.source_descriptor) row.attributes["sourceDescriptor"] = *doc.source_descriptor;
        if (doc.incident.incident_type)
            row.attributes["incidentTypeCommonRegistryText"] = *doc.incident.incident_type;
        if (doc.incident.priority)
            row.attributes["incidentCommonPriorityNumber"] = std::to_string(*doc.incident.priority);
        if (doc.incident.status) row.attributes["incidentStatus"] = *doc.incident.status;
        if (doc.incident.disposition_text)
            row.attributes["incidentDispositionText"] = *doc.incident.disposition_text;
        if (doc.incident.tracking_id)
            row.attributes["incidentTrackingId"] = *doc.incident.tracking_id;
        put_extras(row, doc.extras, "documentExtrasJson");
        put_extras(row, doc.incident.extras);
        rows.push_back(std::move(row));
    }

    for (const auto& lc : doc.locations) {
        FeatureRow row;
        row.kind = FeatureKind::Location;
        row.eido_id = doc.eido_id;
        row.component_id = lc.location_id;
        if (lc.geometry) {
            if (const auto* p = std::get_if<GeoPoint>(&*lc.geometry)) {
                row.attributes["geometryType"] = "point";
                row.attributes["latitude"] = number_to_cell(p->latitude);
                row.attributes["longitude"] = number_to_cell(p->longitude);
            } else {
                row.attributes["geometryType"] = "polygon";
                row.attributes["ringJson"] = geometry_to_json(*lc.geometry).at("ring").dump();
            }
        }
        if (lc.civic_address_text) row.attributes["civicAddressText"] = *lc.civic_address_text;
        if (lc.description_text)
            row.attributes["locationDescriptionText"] = *lc.description_text;
        if (lc.confidence) row.attributes["confidence"] = number_to_cell(*lc.confidence);
        put_extras(row, lc.extras);
        rows.push_back(std::move(row));
    }

    for (const auto& cc : doc.calls) {
        FeatureRow row;
        row.kind = FeatureKind::Call;
        row.eido_id = doc.eido_id;
        row.component_id = cc.call_id;
        row.attributes["callStartTimestamp"] = cc.start_timestamp.to_string();
        if (cc.source_text) row.attributes["callSourceText"] = *cc.source_text;
        put_extras(row, cc.extras);
        rows.push_back(std::move(row));
    }

    for (const auto& nc : doc.notes) {
        FeatureRow row;
        row.kind = FeatureKind::Note;
        row.eido_id = doc.eido_id;
        row.component_id = nc.note_id;
        row.attributes["noteTimestamp"] = nc.timestamp.to_string();
        row.attributes["notesActionComments"] = nc.comments;
        if (nc.location_reference_id) row.links["locationReferenceId"] = *nc.location_reference_id;
        put_extras(row, nc.extras);
        rows.push_back(std::move(row));
    }

    for (const auto& pc : doc.persons) {
        FeatureRow row;
        row.kind = FeatureKind::Person;
        row.eido_id = doc.eido_id;
        row.component_id = pc.person_id;
        if (pc.role_text) row.attributes["roleText"] = *pc.role_text;
        if (pc.name_text) row.attributes["nameText"] = *pc.name_text;
        put_extras(row, pc.extras);
        rows.push_back(std::move(row));
    }

    for (const auto& rc : doc.resources) {
        FeatureRow row;
        row.kind = FeatureKind::Resource;
        row.eido_id = doc.eido_id;
        row.component_id = rc.resource_id;
        row.attributes["unitIdentifier"] = rc.unit_identifier;
        put_extras(row, rc.extras);
        rows.push_back(std::move(row));
    }

    for (size_t i = 0; i < doc.resource_statuses.size(); ++i) {
        const auto& rs = doc.resource_statuses[i];
        FeatureRow row;
        row.kind = FeatureKind::ResourceStatus;
        row.eido_id = doc.eido_id;
        row.component_id =
            rs.status_id ? *rs.status_id : generated_id(FeatureKind::ResourceStatus, i + 1);
        row.attributes["statusText"] = rs.status_text;
        row.attributes["statusTime"] = rs.status_time.to_string();
        row.links["referencedResourceId"] = rs.referenced_resource_id;
        put_extras(row, rs.extras);
        rows.push_back(std::move(row));
    }

    return rows;
}

// ---------------------------------------------------------------------------
// Compose
// ---------------------------------------------------------------------------

namespace tabular_detail {

struct MergedRow {
    FeatureKind kind;
    std::string eido_id;
    std::string component_id;
    std::map<std::string, std::string> attributes;
    std::map<std::string, std::string> links;
    size_t first_seen = 0;
};

inline double cell_to_number(const std::string& cell, const std::string& what) {
    try {
        return Json::parse(cell).get<double>();
    } catch (...) {
        throw TabularError("cannot parse number from " + what + ": '" + cell + "'");
    }
}

inline Json cell_to_extras(const std::string& cell, const std::string& what) {
    try {
        Json j = Json::parse(cell);
        if (!j.is_object()) throw TabularError(what + " must hold a JSON object");
        return j;
    } catch (const Json::parse_error&) {
        throw TabularError("cannot parse JSON from " + what + ": '" + cell + "'");
    }
}

inline Instant cell_to_instant(const std::string& cell, const std::string& what) {
    try {
        return parse_instant(cell);
    } catch (const TimeParseError& e) {
        throw TabularError(what + ": " + e.what());
    }
}

}  // namespace tabular_detail

// Rows with the same eidoId merge into one document; rows with the same
// (eidoId, kind, componentId) merge into one component cell-by-cell, and
// conflicting values for the same column are an error naming both values.
// Missing componentIds are generated deterministically as <kind>-<ordinal>.
inline std::vector<EidoDocument> compose(const std::vector<FeatureRow>& rows) {
    using tabular_detail::MergedRow;

    // Assign generated ids per (eidoId, kind) in input order.
    std::map<std::pair<std::string, FeatureKind>, size_t> ordinals;
    std::vector<FeatureRow> prepared = rows;
    for (auto& row : prepared) {
        if (row.eido_id.empty()) throw TabularError("feature row without eidoId");
        if (row.component_id.empty()) {
            size_t n = ++ordinals[{row.eido_id, row.kind}];
            row.component_id = tabular_detail::generated_id(row.kind, n);
        }
    }

    // Merge.
    std::map<std::string, size_t> doc_order;
    std::vector<std::string> doc_ids;
    std::map<std::tuple<std::string, FeatureKind, std::string>, MergedRow> merged;
    std::vector<std::tuple<std::string, FeatureKind, std::string>> merge_order;

    for (size_t i = 0; i < prepared.size(); ++i) {
        const FeatureRow& row = prepared[i];
        if (!doc_order.count(row.eido_id)) {
            doc_order[row.eido_id] = doc_ids.size();
            doc_ids.push_back(row.eido_id);
        }
        auto key = std::make_tuple(row.eido_id, row.kind, row.component_id);
        auto it = merged.find(key);
        if (it == merged.end()) {
            MergedRow m;
            m.kind = row.kind;
            m.eido_id = row.eido_id;
            m.component_id = row.component_id;
            m.attributes = row.attributes;
            m.links = row.links;
            m.first_seen = i;
            merged.emplace(key, std::move(m));
            merge_order.push_back(key);
        } else {
            auto merge_map = [&](std::map<std::string, std::string>& dst,
                                 const std::map<std::string, std::string>& src) {
                for (const auto& [col, val] : src) {
                    auto existing = dst.find(col);
                    if (existing == dst.end()) {
                        dst[col] = val;
                    } else if (existing->second != val) {
                        throw TabularError(
                            "conflicting values for (" + row.eido_id + ", " +
                            std::string(feature_kind_name(row.kind)) + " " + row.component_id +
                            ", " + col + "): '" + existing->second + "' vs '" + val + "'");
                    }
                }
            };
            merge_map(it->second.attributes, row.attributes);
            merge_map(it->second.links, row.links);
        }
    }

    std::stable_sort(merge_order.begin(), merge_order.end(),
                     [&](const auto& a, const auto& b) {
                         return merged.at(a).first_seen < merged.at(b).first_seen;
                     });

    // Link columns must resolve within the same document after merging.
    for (const auto& key : merge_order) {
        const MergedRow& m = merged.at(key);
        for (const auto& [col, target] : m.links) {
            FeatureKind target_kind = link_target_kind(col);
            if (!merged.count({m.eido_id, target_kind, target}))
                throw TabularError("link column " + col + " on (" + m.eido_id + ", " +
                                   std::string(feature_kind_name(m.kind)) + " " + m.component_id +
                                   ") references missing " +
                                   std::string(feature_kind_name(target_kind)) + " '" + target +
                                   "'");
        }
    }

    // Build documents.
    using tabular_detail::cell_to_extras;
    using tabular_detail::cell_to_instant;
    using tabular_detail::cell_to_number;

    std::map<std::string, EidoDocument> docs;
    std::set<std::string> has_incident_row;
    for (const auto& key : merge_order) {
        if (std::get<1>(key) == FeatureKind::Incident)
            has_incident_row.insert(std::get<0>(key));
    }
    for (const auto& id : doc_ids) {
        if (!has_incident_row.count(id))
            throw TabularError("document '" + id + "' has no incident row");
        EidoDocument d;
        d.eido_id = id;
        docs[id] = std::move(d);
    }

    for (const auto& key : merge_order) {
        const MergedRow& m = merged.at(key);
        EidoDocument& doc = docs.at(m.eido_id);
        auto attr = [&](const char* col) -> std::optional<std::string> {
            auto it = m.attributes.find(col);
            if (it == m.attributes.end() || it->second.empty()) return std::nullopt;
            return it->second;
        };
        std::string where = m.eido_id + "/" + std::string(feature_kind_name(m.kind)) + "/" +
                            m.component_id;

        switch (m.kind) {
            case FeatureKind::Incident: {
                auto ts = attr("issuedTimestamp");
                if (!ts) throw TabularError("incident row " + where + " lacks issuedTimestamp");
                doc.issued_timestamp = cell_to_instant(*ts, where);
                doc.source_descriptor = attr("sourceDescriptor");
                doc.incident.incident_type = attr("incidentTypeCommonRegistryText");
                if (auto p = attr("incidentCommonPriorityNumber")) {
                    int v = static_cast<int>(cell_to_number(*p, where));
                    if (v < 1 || v > 5)
                        throw TabularError(where + ": incidentCommonPriorityNumber out of 1..5");
                    doc.incident.priority = v;
                }
                doc.incident.status = attr("incidentStatus");
                doc.incident.disposition_text = attr("incidentDispositionText");
                doc.incident.tracking_id = attr("incidentTrackingId");
                if (auto e = attr("documentExtrasJson")) doc.extras = cell_to_extras(*e, where);
                if (auto e = attr("extrasJson")) doc.incident.extras = cell_to_extras(*e, where);
                break;
            }
            case FeatureKind::Location: {
                LocationComponent lc;
                lc.location_id = m.component_id;
                if (auto gt = attr("geometryType")) {
                    if (*gt == "point") {
                        auto lat = attr("latitude");
                        auto lon = attr("longitude");
                        if (!lat || !lon)
                            throw TabularError(where + ": point geometry needs latitude and "
                                                       "longitude");
                        lc.geometry = GeoPoint{cell_to_number(*lat, where),
                                               cell_to_number(*lon, where)};
                    } else if (*gt == "polygon") {
                        auto ring = attr("ringJson");
                        if (!ring) throw TabularError(where + ": polygon geometry needs ringJson");
                        Json g = Json::object();
                        try {
                            g["ring"] = Json::parse(*ring);
                        } catch (const Json::parse_error&) {
                            throw TabularError(where + ": malformed ringJson");
                        }
                        lc.geometry = geometry_from_json(g, where);
                    } else {
                        throw TabularError(where + ": unknown geometryType '" + *gt + "'");
                    }
                }
                lc.civic_address_text = attr("civicAddressText");
                lc.description_text = attr("locationDescriptionText");
                if (auto c = attr("confidence")) lc.confidence = cell_to_number(*c, where);
                if (auto e = attr("extrasJson")) lc.extras = cell_to_extras(*e, where);
                doc.locations.push_back(std::move(lc));
                break;
            }
            case FeatureKind::Call: {
                CallComponent cc;
                cc.call_id = m.component_id;
                auto ts = attr("callStartTimestamp");
                if (!ts) throw TabularError(where + " lacks callStartTimestamp");
                cc.start_timestamp = cell_to_instant(*ts, where);
                cc.source_text = attr("callSourceText");
                if (auto e = attr("extrasJson")) cc.extras = cell_to_extras(*e, where);
                doc.calls.push_back(std::move(cc));
                break;
            }
            case FeatureKind::Note: {
                NotesComponent nc;
                nc.note_id = m.component_id;
                auto ts = attr("noteTimestamp");
                auto text = attr("notesActionComments");
                if (!ts || !text)
                    throw TabularError(where + " needs noteTimestamp and notesActionComments");
                nc.timestamp = cell_to_instant(*ts, where);
                nc.comments = *text;
                if (auto l = m.links.find("locationReferenceId"); l != m.links.end())
                    nc.location_reference_id = l->second;
                if (auto e = attr("extrasJson")) nc.extras = cell_to_extras(*e, where);
                doc.notes.push_back(std::move(nc));
                break;
            }
            case FeatureKind::Person: {
                PersonComponent pc;
                pc.person_id = m.component_id;
                pc.role_text = attr("roleText");
                pc.name_text = attr("nameText");
                if (auto e = attr("extrasJson")) pc.extras = cell_to_extras(*e, where);
                doc.persons.push_back(std::move(pc));
                break;
            }
            case FeatureKind::Resource: {
                ResourceComponent rc;
                rc.resource_id = m.component_id;
                auto unit = attr("unitIdentifier");
                if (!unit) throw TabularError(where + " lacks unitIdentifier");
                rc.unit_identifier = *unit;
                if (auto e = attr("extrasJson")) rc.extras = cell_to_extras(*e, where);
                doc.resources.push_back(std::move(rc));
                break;
            }
            case FeatureKind::ResourceStatus: {
                ResourceStatusComponent rs;
                rs.status_id = m.component_id;
                auto text = attr("statusText");
                auto ts = attr("statusTime");
                if (!text || !ts) throw TabularError(where + " needs statusText and statusTime");
                rs.status_text = *text;
                rs.status_time = cell_to_instant(*ts, where);
                rs.referenced_resource_id = m.links.at("referencedResourceId");
                if (auto e = attr("extrasJson")) rs.extras = cell_to_extras(*e, where);
                doc.resource_statuses.push_back(std::move(rs));
                break;
            }
        }
    }

    // Validation through the canonical path: composed documents must parse.
    std::vector<EidoDocument> out;
    for (const auto& id : doc_ids) {
        const EidoDocument& d = docs.at(id);
        out.push_back(parse_document(serialize_document(d)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Row <-> JSON-lines
// ---------------------------------------------------------------------------

inline Json row_to_json(const FeatureRow& row) {
    Json j = Json::object();
    j["featureKind"] = std::string(feature_kind_name(row.kind));
    j["eidoId"] = row.eido_id;
    j["componentId"] = row.component_id;
    j["attributes"] = row.attributes;
    j["links"] = row.links;
    return j;
}

inline FeatureRow row_from_json(const Json& j) {
    FeatureRow row;
    row.kind = feature_kind_from_name(j.at("featureKind").get<std::string>());
    row.eido_id = j.at("eidoId").get<std::string>();
    row.component_id = j.value("componentId", std::string());
    if (j.contains("attributes"))
        for (auto it = j.at("attributes").begin(); it != j.at("attributes").end(); ++it)
            row.attributes[it.key()] = it.value().get<std::string>();
    if (j.contains("links"))
        for (auto it = j.at("links").begin(); it != j.at("links").end(); ++it)
            row.links[it.key()] = it.value().get<std::string>();
    return row;
}

// ---------------------------------------------------------------------------
// Directory export / import
// ---------------------------------------------------------------------------

inline void export_rows(const std::vector<FeatureRow>& rows, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    Json manifest_files = Json::array();
    for (FeatureKind kind : all_feature_kinds()) {
        std::vector<const FeatureRow*> of_kind;
        for (const auto& r : rows)
            if (r.kind == kind) of_kind.push_back(&r);
        if (of_kind.empty()) continue;

        std::string filename = std::string(feature_kind_name(kind)) + ".csv";
        std::ofstream out(fs::path(dir) / filename, std::ios::binary);
        if (!out) throw TabularError("cannot write " + filename + " in " + dir);

        std::vector<std::string> header = {"eidoId", "componentId"};
        for (const auto& c : attribute_columns(kind)) header.push_back(c);
        for (const auto& c : link_columns(kind)) header.push_back(c);
        write_csv_row(out, header);

        for (const FeatureRow* r : of_kind) {
            std::vector<std::string> cells = {r->eido_id, r->component_id};
            for (const auto& c : attribute_columns(kind)) {
                auto it = r->attributes.find(c);
                cells.push_back(it == r->attributes.end() ? "" : it->second);
            }
            for (const auto& c : link_columns(kind)) {
                auto it = r->links.find(c);
                cells.push_back(it == r->links.end() ? "" : it->second);
            }
            write_csv_row(out, cells);
        }

        manifest_files.push_back(Json{{"kind", std::string(feature_kind_name(kind))},
                                      {"path", filename},
                                      {"rows", of_kind.size()}});
    }

    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw TabularError("cannot write manifest.json in " + dir);
    mf << Json{{"files", manifest_files}}.dump() << '\n';
}

inline std::vector<FeatureRow> import_rows_from_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<FeatureRow> rows;
    for (FeatureKind kind : all_feature_kinds()) {
        fs::path file = fs::path(dir) / (std::string(feature_kind_name(kind)) + ".csv");
        if (!fs::exists(file)) continue;
        auto table = read_csv_file(file.string());
        if (table.empty()) continue;
        const auto& header = table.front();
        std::set<std::string> links(link_columns(kind).begin(), link_columns(kind).end());
        for (size_t r = 1; r < table.size(); ++r) {
            FeatureRow row;
            row.kind = kind;
            for (size_t c = 0; c < header.size() && c < table[r].size(); ++c) {
                const std::string& col = header[c];
                const std::string& cell = table[r][c];
                if (cell.empty()) continue;
                if (col == "eidoId") row.eido_id = cell;
                else if (col == "componentId") row.component_id = cell;
                else if (links.count(col)) row.links[col] = cell;
                else row.attributes[col] = cell;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::vector<FeatureRow> import_rows_from_jsonl(std::istream& is) {
    std::vector<FeatureRow> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        try {
            rows.push_back(row_from_json(Json::parse(t)));
        } catch (const Json::parse_error& e) {
            throw TabularError("row stream line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace eidolink
