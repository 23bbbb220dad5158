#pragma once

// Legacy CAD record -> EIDO document conversion: registry code mapping,
// timestamp synthesis from split date/time columns, jurisdictional beat
// context, unit arrival/on-scene status synthesis, and template-driven
// completeness warnings.
//
// Field bindings map CAD column names onto transformation roles, so any
// agency's column headers can drive the same pipeline without code changes.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eidolink/csv.hpp"
#include "eidolink/eido.hpp"
#include "eidolink/extractor.hpp"
#include "eidolink/registry.hpp"
#include "eidolink/strutil.hpp"
#include "eidolink/timeutil.hpp"

namespace eidolink {

struct TransformError : std::runtime_error {
    explicit TransformError(const std::string& msg) : std::runtime_error(msg) {}
};

// One legacy CAD row: ordered column -> value. Values may be empty.
struct CadRecord {
    std::vector<std::pair<std::string, std::string>> columns;

    void set(std::string name, std::string value) {
        for (auto& [k, v] : columns) {
            if (k == name) {
                v = std::move(value);
                return;
            }
        }
        columns.emplace_back(std::move(name), std::move(value));
    }

    std::optional<std::string> get(std::string_view name) const {
        for (const auto& [k, v] : columns) {
            if (k == name) return v;
        }
        return std::nullopt;
    }
};

// Transformation roles a CAD column can be bound to.
enum class FieldRole {
    IncidentTypeCode,
    PriorityCode,
    DispositionCode,
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
    UtcOffset,
    SectorBeat,
    FirstUnitArrived,
    UnitIdentifier,
    UnitTimeOnScene,
    ProblemDescription,
    CallSource,
    EidoId,
    TrackingId,
};

inline std::optional<FieldRole> field_role_from_name(std::string_view name) {
    static const std::map<std::string, FieldRole, std::less<>> kRoles = {
        {"incidentTypeCode", FieldRole::IncidentTypeCode},
        {"priorityCode", FieldRole::PriorityCode},
        {"dispositionCode", FieldRole::DispositionCode},
        {"year", FieldRole::Year},
        {"month", FieldRole::Month},
        {"day", FieldRole::Day},
        {"hour", FieldRole::Hour},
        {"minute", FieldRole::Minute},
        {"second", FieldRole::Second},
        {"utcOffset", FieldRole::UtcOffset},
        {"sectorBeat", FieldRole::SectorBeat},
        {"firstUnitArrived", FieldRole::FirstUnitArrived},
        {"unitIdentifier", FieldRole::UnitIdentifier},
        {"unitTimeOnScene", FieldRole::UnitTimeOnScene},
        {"problemDescription", FieldRole::ProblemDescription},
        {"callSource", FieldRole::CallSource},
        {"eidoId", FieldRole::EidoId},
        {"trackingId", FieldRole::TrackingId},
    };
    auto it = kRoles.find(name);
    if (it == kRoles.end()) return std::nullopt;
    return it->second;
}

struct FieldBindings {
    std::map<std::string, FieldRole> by_column;

    static FieldBindings from_json(const nlohmann::json& obj) {
        if (!obj.is_object()) throw TransformError("fieldBindings must be an object");
        FieldBindings fb;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!it.value().is_string())
                throw TransformError("fieldBindings values must be role names");
            auto role = field_role_from_name(it.value().get<std::string>());
            if (!role)
                throw TransformError("unknown field binding role '" +
                                     it.value().get<std::string>() + "'");
            fb.by_column[it.key()] = *role;
        }
        return fb;
    }

    std::optional<std::string> value_for(const CadRecord& rec, FieldRole role) const {
        for (const auto& [col, r] : by_column) {
            if (r != role) continue;
            auto v = rec.get(col);
            if (v && !trim(*v).empty()) return trim(*v);
        }
        return std::nullopt;
    }
};

// EIDO field paths a template may require. Paths use wire component names.
inline const std::set<std::string>& known_template_paths() {
    static const std::set<std::string> kPaths = {
        "eidoId",
        "issuedTimestamp",
        "sourceDescriptor",
        "incidentComponent.incidentTypeCommonRegistryText",
        "incidentComponent.incidentCommonPriorityNumber",
        "incidentComponent.incidentStatus",
        "incidentComponent.incidentDispositionText",
        "incidentComponent.incidentTrackingId",
        "locationComponent.geometry",
        "locationComponent.civicAddressText",
        "locationComponent.locationDescriptionText",
        "callComponent.callStartTimestamp",
        "callComponent.callSourceText",
        "notesComponent.notesActionComments",
        "resourceComponent.unitIdentifier",
        "resourceStatusComponent.statusTime",
        "personComponent.nameText",
    };
    return kPaths;
}

struct EidoTemplate {
    std::string template_id;
    std::set<std::string> applies_to_types;  // registry terms; "*" matches anything
    std::vector<std::string> required_fields;
    std::vector<std::string> optional_fields;

    bool matches(const std::optional<std::string>& incident_type) const {
        if (applies_to_types.count("*")) return true;
        if (!incident_type) return false;
        for (const auto& t : applies_to_types) {
            if (to_lower(t) == to_lower(*incident_type)) return true;
        }
        return false;
    }

    static std::vector<EidoTemplate> load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw TransformError("cannot open template file: " + path);
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransformError("template file " + path + ": " + e.what());
        }
        if (!root.is_array()) throw TransformError("template file must be a JSON array");
        std::vector<EidoTemplate> out;
        for (const auto& t : root) {
            EidoTemplate tpl;
            tpl.template_id = t.at("templateId").get<std::string>();
            for (const auto& ty : t.at("appliesToTypes"))
                tpl.applies_to_types.insert(ty.get<std::string>());
            auto read_paths = [&](const char* key, std::vector<std::string>& dst) {
                if (!t.contains(key)) return;
                for (const auto& p : t.at(key)) {
                    std::string path_str = p.get<std::string>();
                    if (!known_template_paths().count(path_str))
                        throw TransformError("template '" + tpl.template_id +
                                             "' names unknown field path '" + path_str + "'");
                    dst.push_back(path_str);
                }
            };
            read_paths("requiredFields", tpl.required_fields);
            read_paths("optionalFields", tpl.optional_fields);
            out.push_back(std::move(tpl));
        }
        return out;
    }
};

struct TransformWarning {
    std::string field_path;  // empty when the warning is not template related
    std::string message;
};

// ---------------------------------------------------------------------------
// Timestamp synthesis
// ---------------------------------------------------------------------------

struct TimestampParts {
    std::optional<int> year, month, day, hour, minute, second;
    std::optional<std::string> utc_offset;
};

// Mandatory: year, month, day, utcOffset. Hour/minute/second default to 0.
inline Instant synthesize_timestamp(const TimestampParts& parts) {
    if (!parts.year) throw TransformError("timestamp synthesis: missing year");
    if (!parts.month) throw TransformError("timestamp synthesis: missing month");
    if (!parts.day) throw TransformError("timestamp synthesis: missing day");
    if (!parts.utc_offset) throw TransformError("timestamp synthesis: missing utcOffset");

    std::int32_t offset_minutes = 0;
    {
        const std::string& o = *parts.utc_offset;
        if (o == "Z" || o == "z") {
            offset_minutes = 0;
        } else {
            if (o.size() < 3 || (o[0] != '+' && o[0] != '-'))
                throw TransformError("timestamp synthesis: bad utcOffset '" + o + "'");
            try {
                auto hhmm = split(o.substr(1), ':');
                int oh = std::stoi(hhmm.at(0));
                int om = hhmm.size() > 1 ? std::stoi(hhmm.at(1)) : 0;
                if (oh > 18 || om > 59)
                    throw TransformError("timestamp synthesis: utcOffset out of range");
                offset_minutes = (o[0] == '-' ? -1 : 1) * (oh * 60 + om);
            } catch (const std::invalid_argument&) {
                throw TransformError("timestamp synthesis: bad utcOffset '" + o + "'");
            }
        }
    }

    int hour = parts.hour.value_or(0);
    int minute = parts.minute.value_or(0);
    int second = parts.second.value_or(0);
    if (hour < 0 || minute < 0 || second < 0)
        throw TransformError("timestamp synthesis: negative time component");
    try {
        Instant out = Instant::from_civil(*parts.year, static_cast<unsigned>(*parts.month),
                                          static_cast<unsigned>(*parts.day),
                                          static_cast<unsigned>(hour),
                                          static_cast<unsigned>(minute),
                                          static_cast<unsigned>(second), offset_minutes);
        out.zulu = parts.utc_offset == "Z" || parts.utc_offset == "z";
        return out;
    } catch (const TimeParseError& e) {
        throw TransformError(std::string("timestamp synthesis: ") + e.what());
    }
}

inline MappedCode map_code(MapKind kind, std::string_view code, const MappingRegistry& registry) {
    return registry.map(kind, code);
}

// ---------------------------------------------------------------------------
// Record transformation
// ---------------------------------------------------------------------------

struct TransformContext {
    const MappingRegistry* registry = nullptr;
    const std::vector<EidoTemplate>* templates = nullptr;
    const Extractor* extractor = nullptr;
    const FieldBindings* bindings = nullptr;
    const RegistryVocabulary* vocabulary = nullptr;  // for post-validation
    bool strict = false;
    int default_year = 0;               // used when no Year column is bound
    std::string default_utc_offset;     // used when no UtcOffset column is bound
    std::string eido_id_prefix = "CAD"; // deterministic id prefix
    std::string source_descriptor = "legacy CAD import";
};

struct TransformResult {
    EidoDocument document;
    std::vector<TransformWarning> warnings;
};

inline bool field_path_present(const EidoDocument& doc, std::string_view path);

namespace detail {

inline int parse_int_field(const std::string& value, const char* what) {
    try {
        size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        throw TransformError(std::string("cannot parse ") + what + " from '" + value + "'");
    }
}

// "First Unit Arrived" accepts either a full ISO timestamp or HH:MM[:SS]
// combined with the record's date parts.
inline Instant parse_arrival(const std::string& value, const TimestampParts& date_parts) {
    if (value.find('T') != std::string::npos) {
        try {
            return parse_instant(value);
        } catch (const TimeParseError& e) {
            throw TransformError(std::string("cannot parse arrival timestamp: ") + e.what());
        }
    }
    auto hms = split(value, ':');
    if (hms.size() < 2 || hms.size() > 3)
        throw TransformError("arrival time must be ISO 8601 or HH:MM[:SS]: '" + value + "'");
    TimestampParts p = date_parts;
    p.hour = parse_int_field(trim(hms[0]), "arrival hour");
    p.minute = parse_int_field(trim(hms[1]), "arrival minute");
    p.second = hms.size() == 3 ? parse_int_field(trim(hms[2]), "arrival second") : 0;
    return synthesize_timestamp(p);
}

inline std::string deterministic_eido_id(const CadRecord& rec, const std::string& prefix) {
    std::string blob;
    for (const auto& [k, v] : rec.columns) {
        blob += k;
        blob += '\x1f';
        blob += v;
        blob += '\x1e';
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob)));
    return prefix + "-" + buf;
}

}  // namespace detail

inline TransformResult transform_record(const CadRecord& rec, const TransformContext& ctx) {
    if (!ctx.registry || !ctx.bindings || !ctx.extractor)
        throw TransformError("transform context is incomplete");

    const FieldBindings& bind = *ctx.bindings;
    TransformResult result;
    EidoDocument& doc = result.document;
    auto warn = [&](std::string path, std::string msg) {
        result.warnings.push_back({std::move(path), std::move(msg)});
    };

    // Date/time parts for the record.
    TimestampParts parts;
    auto int_part = [&](FieldRole role) -> std::optional<int> {
        auto v = bind.value_for(rec, role);
        if (!v) return std::nullopt;
        return detail::parse_int_field(*v, "time component");
    };
    parts.year = int_part(FieldRole::Year);
    parts.month = int_part(FieldRole::Month);
    parts.day = int_part(FieldRole::Day);
    parts.hour = int_part(FieldRole::Hour);
    parts.minute = int_part(FieldRole::Minute);
    parts.second = int_part(FieldRole::Second);
    parts.utc_offset = bind.value_for(rec, FieldRole::UtcOffset);
    if (!parts.year && ctx.default_year > 0) parts.year = ctx.default_year;
    if (!parts.utc_offset && !ctx.default_utc_offset.empty())
        parts.utc_offset = ctx.default_utc_offset;

    Instant record_time = synthesize_timestamp(parts);
    doc.issued_timestamp = record_time;

    // Identity.
    if (auto id = bind.value_for(rec, FieldRole::EidoId)) doc.eido_id = *id;
    else doc.eido_id = detail::deterministic_eido_id(rec, ctx.eido_id_prefix);
    doc.source_descriptor = ctx.source_descriptor;
    if (auto tid = bind.value_for(rec, FieldRole::TrackingId)) doc.incident.tracking_id = *tid;

    // Code mappings. Unknown codes degrade to unmapped markers.
    if (auto code = bind.value_for(rec, FieldRole::IncidentTypeCode)) {
        MappedCode m = map_code(MapKind::IncidentType, *code, *ctx.registry);
        if (m.mapped) {
            doc.incident.incident_type = m.value;
        } else {
            doc.incident.incident_type = m.marker();
            warn("incidentComponent.incidentTypeCommonRegistryText",
                 "unmapped incident type code '" + m.original + "'");
        }
    }
    if (auto code = bind.value_for(rec, FieldRole::PriorityCode)) {
        MappedCode m = map_code(MapKind::Priority, *code, *ctx.registry);
        if (m.mapped) {
            doc.incident.priority = m.priority;
        } else {
            warn("incidentComponent.incidentCommonPriorityNumber",
                 "unmapped priority code '" + m.original + "'");
        }
    }
    if (auto code = bind.value_for(rec, FieldRole::DispositionCode)) {
        MappedCode m = map_code(MapKind::Disposition, *code, *ctx.registry);
        if (m.mapped) {
            doc.incident.disposition_text = m.value;
        } else {
            doc.incident.disposition_text = m.marker();
            warn("incidentComponent.incidentDispositionText",
                 "unmapped disposition code '" + m.original + "'");
        }
    }
    doc.incident.status = doc.incident.disposition_text ? "closed" : "open";

    // Call component from the synthesized record timestamp.
    {
        CallComponent call;
        call.call_id = "call-1";
        call.start_timestamp = record_time;
        if (auto src = bind.value_for(rec, FieldRole::CallSource)) call.source_text = *src;
        doc.calls.push_back(std::move(call));
    }

    // Problem description: copied verbatim into a note, and run through the
    // extractor for people/locations.
    std::vector<std::string> extracted_locations;
    if (auto desc = bind.value_for(rec, FieldRole::ProblemDescription)) {
        NotesComponent note;
        note.note_id = "note-1";
        note.comments = *desc;
        note.timestamp = record_time;
        doc.notes.push_back(std::move(note));

        int person_ordinal = 0;
        for (const auto& ent : ctx.extractor->extract(*desc)) {
            switch (ent.kind) {
                case EntityKind::Person: {
                    PersonComponent pc;
                    pc.person_id = "person-" + std::to_string(++person_ordinal);
                    pc.role_text = "mentioned";
                    pc.name_text = ent.value;
                    doc.persons.push_back(std::move(pc));
                    break;
                }
                case EntityKind::Location:
                    extracted_locations.push_back(ent.value);
                    break;
                case EntityKind::Organization:
                    break;  // no structural home in this subset
            }
        }
    }

    // Location description: extracted places, with the beat appended as
    // jurisdictional context.
    {
        std::string desc;
        for (const auto& loc : extracted_locations) {
            if (!desc.empty()) desc += ", ";
            desc += loc;
        }
        auto beat = bind.value_for(rec, FieldRole::SectorBeat);
        if (beat) {
            if (desc.empty()) desc = *beat;
            else desc += " (" + *beat + ")";
        }
        if (!desc.empty()) {
            LocationComponent lc;
            lc.location_id = "loc-1";
            lc.description_text = desc;
            doc.locations.push_back(std::move(lc));
        }
    }

    // Unit arrival and time-on-scene statuses.
    std::optional<Instant> arrival;
    if (auto arr = bind.value_for(rec, FieldRole::FirstUnitArrived)) {
        arrival = detail::parse_arrival(*arr, parts);
        std::string unit = bind.value_for(rec, FieldRole::UnitIdentifier).value_or("UNKNOWN-UNIT");
        ResourceComponent rc;
        rc.resource_id = "resource-1";
        rc.unit_identifier = unit;
        doc.resources.push_back(std::move(rc));

        ResourceStatusComponent rs;
        rs.status_id = "status-1";
        rs.status_text = "Arrived";
        rs.status_time = *arrival;
        rs.referenced_resource_id = "resource-1";
        doc.resource_statuses.push_back(std::move(rs));
    }
    if (auto onscene = bind.value_for(rec, FieldRole::UnitTimeOnScene)) {
        std::chrono::seconds dur;
        try {
            dur = parse_duration(*onscene);
        } catch (const TimeParseError& e) {
            throw TransformError(std::string("unit time on scene: ") + e.what());
        }
        Instant start = arrival.value_or(record_time);
        if (!arrival) {
            // No arrival column: synthesize the start of the on-scene window.
            if (doc.resources.empty()) {
                ResourceComponent rc;
                rc.resource_id = "resource-1";
                rc.unit_identifier =
                    bind.value_for(rec, FieldRole::UnitIdentifier).value_or("UNKNOWN-UNIT");
                doc.resources.push_back(std::move(rc));
            }
            ResourceStatusComponent rs;
            rs.status_id = "status-1";
            rs.status_text = "On Scene";
            rs.status_time = start;
            rs.referenced_resource_id = "resource-1";
            doc.resource_statuses.push_back(std::move(rs));
        }
        Instant end = start;
        end.epoch_micros += static_cast<std::int64_t>(dur.count()) * 1000000;
        ResourceStatusComponent rs;
        rs.status_id = "status-" + std::to_string(doc.resource_statuses.size() + 1);
        rs.status_text = "Cleared";
        rs.status_time = end;
        rs.referenced_resource_id = "resource-1";
        doc.resource_statuses.push_back(std::move(rs));
    }

    // Template completeness: first matching template decides which field
    // paths are expected; each missing required field yields one warning.
    if (ctx.templates) {
        const EidoTemplate* chosen = nullptr;
        for (const auto& tpl : *ctx.templates) {
            if (tpl.matches(doc.incident.incident_type)) {
                chosen = &tpl;
                break;
            }
        }
        if (chosen) {
            for (const auto& path : chosen->required_fields) {
                if (!field_path_present(doc, path))
                    warn(path, "required by template '" + chosen->template_id + "' but missing");
            }
        }
    }

    // Vocabulary check mirrors parse-time behavior.
    if (ctx.vocabulary && doc.incident.incident_type &&
        !ctx.vocabulary->contains(*doc.incident.incident_type)) {
        std::string msg = "incidentTypeCommonRegistryText '" + *doc.incident.incident_type +
                          "' is not in the registry vocabulary";
        if (ctx.strict) throw TransformError(msg);
        warn("incidentComponent.incidentTypeCommonRegistryText", msg);
    }

    return result;
}

inline bool field_path_present(const EidoDocument& doc, std::string_view path) {
    if (path == "eidoId") return !doc.eido_id.empty();
    if (path == "issuedTimestamp") return true;
    if (path == "sourceDescriptor") return doc.source_descriptor.has_value();
    if (path == "incidentComponent.incidentTypeCommonRegistryText")
        return doc.incident.incident_type.has_value();
    if (path == "incidentComponent.incidentCommonPriorityNumber")
        return doc.incident.priority.has_value();
    if (path == "incidentComponent.incidentStatus") return doc.incident.status.has_value();
    if (path == "incidentComponent.incidentDispositionText")
        return doc.incident.disposition_text.has_value();
    if (path == "incidentComponent.incidentTrackingId")
        return doc.incident.tracking_id.has_value();
    if (path == "locationComponent.geometry") {
        for (const auto& l : doc.locations)
            if (l.geometry) return true;
        return false;
    }
    if (path == "locationComponent.civicAddressText") {
        for (const auto& l : doc.locations)
            if (l.civic_address_text) return true;
        return false;
    }
    if (path == "locationComponent.locationDescriptionText") {
        for (const auto& l : doc.locations)
            if (l.description_text) return true;
        return false;
    }
    if (path == "callComponent.callStartTimestamp") return !doc.calls.empty();
    if (path == "callComponent.callSourceText") {
        for (const auto& c : doc.calls)
            if (c.source_text) return true;
        return false;
    }
    if (path == "notesComponent.notesActionComments") return !doc.notes.empty();
    if (path == "resourceComponent.unitIdentifier") return !doc.resources.empty();
    if (path == "resourceStatusComponent.statusTime") return !doc.resource_statuses.empty();
    if (path == "personComponent.nameText") {
        for (const auto& p : doc.persons)
            if (p.name_text) return true;
        return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Stream driver: order-preserving; per-record failures become error entries
// instead of aborting the batch.
// ---------------------------------------------------------------------------

struct StreamEntry {
    size_t index = 0;
    std::optional<TransformResult> result;  // empty on failure
    std::string error;
};

inline std::vector<StreamEntry> transform_stream(const std::vector<CadRecord>& records,
                                                 const TransformContext& ctx) {
    std::vector<StreamEntry> out;
    out.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        StreamEntry entry;
        entry.index = i;
        try {
            entry.result = transform_record(records[i], ctx);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CAD input loaders: CSV with a header row, or JSON-lines of flat objects.
// ---------------------------------------------------------------------------

inline std::vector<CadRecord> cad_records_from_csv(std::istream& is) {
    auto rows = read_csv(is);
    std::vector<CadRecord> out;
    if (rows.empty()) return out;
    const auto& header = rows.front();
    for (size_t r = 1; r < rows.size(); ++r) {
        CadRecord rec;
        for (size_t c = 0; c < header.size() && c < rows[r].size(); ++c)
            rec.columns.emplace_back(header[c], rows[r][c]);
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<CadRecord> cad_records_from_jsonl(std::istream& is) {
    std::vector<CadRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(t);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransformError("CAD JSON-lines, line " + std::to_string(lineno) + ": " +
                                 e.what());
        }
        if (!obj.is_object())
            throw TransformError("CAD JSON-lines, line " + std::to_string(lineno) +
                                 ": expected a flat object");
        CadRecord rec;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            std::string v;
            if (it.value().is_string()) v = it.value().get<std::string>();
            else if (!it.value().is_null()) v = it.value().dump();
            rec.columns.emplace_back(it.key(), std::move(v));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace eidolink
