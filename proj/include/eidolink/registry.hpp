#pragma once

// Controlled vocabularies and code-mapping registries. Both live in external
// data files so subject-matter experts can edit them without touching code.
//
// Vocabulary file: one term per line, "TERM<TAB>description", '#' comments.
// Mapping file:    "KIND<TAB>CODE<TAB>TARGET" lines, same comment rule.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "eidolink/strutil.hpp"

namespace eidolink {

struct RegistryError : std::runtime_error {
    explicit RegistryError(const std::string& msg) : std::runtime_error(msg) {}
};

class RegistryVocabulary {
  public:
    RegistryVocabulary() = default;

    void add(std::string term, std::string description = {}) {
        std::string key = to_lower(term);
        terms_[std::move(key)] = std::move(description);
        originals_.insert(std::move(term));
    }

    bool contains(std::string_view term) const {
        return terms_.count(to_lower(term)) > 0;
    }

    size_t size() const { return terms_.size(); }
    const std::set<std::string>& terms() const { return originals_; }

    static RegistryVocabulary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RegistryError("cannot open vocabulary file: " + path);
        RegistryVocabulary v;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            size_t tab = line.find('\t');
            std::string term = trim(tab == std::string::npos ? line : line.substr(0, tab));
            std::string desc = tab == std::string::npos ? "" : trim(line.substr(tab + 1));
            if (term.empty())
                throw RegistryError(path + ":" + std::to_string(lineno) + ": empty term");
            v.add(std::move(term), std::move(desc));
        }
        return v;
    }

  private:
    std::map<std::string, std::string> terms_;  // folded term -> description
    std::set<std::string> originals_;
};

enum class MapKind { IncidentType, Priority, Disposition };

inline std::string_view map_kind_name(MapKind k) {
    switch (k) {
        case MapKind::IncidentType: return "incidentType";
        case MapKind::Priority: return "priority";
        case MapKind::Disposition: return "disposition";
    }
    return "?";
}

// Result of mapping one proprietary code. Unknown codes are never dropped:
// they come back as an unmapped marker carrying the original, so downstream
// stages can surface them.
struct MappedCode {
    bool mapped = false;
    std::string value;     // registry term / descriptive text when mapped
    int priority = 0;      // 1..5, Priority kind only
    std::string original;  // trimmed input code

    std::string marker() const { return "unmapped:" + original; }
};

class MappingRegistry {
  public:
    void add(MapKind kind, std::string_view code, std::string_view target) {
        std::string key = to_lower(trim(code));
        switch (kind) {
            case MapKind::IncidentType:
                incident_type_[key] = std::string(target);
                break;
            case MapKind::Priority: {
                int p = 0;
                try {
                    p = std::stoi(std::string(target));
                } catch (...) {
                    throw RegistryError("priority target is not an integer: " +
                                        std::string(target));
                }
                if (p < 1 || p > 5)
                    throw RegistryError("priority target out of 1..5: " + std::string(target));
                priority_[key] = p;
                break;
            }
            case MapKind::Disposition:
                disposition_[key] = std::string(target);
                break;
        }
    }

    MappedCode map(MapKind kind, std::string_view code) const {
        MappedCode out;
        out.original = trim(code);
        std::string key = to_lower(out.original);
        if (key.empty()) return out;
        switch (kind) {
            case MapKind::IncidentType: {
                auto it = incident_type_.find(key);
                if (it != incident_type_.end()) {
                    out.mapped = true;
                    out.value = it->second;
                }
                break;
            }
            case MapKind::Priority: {
                auto it = priority_.find(key);
                if (it != priority_.end()) {
                    out.mapped = true;
                    out.priority = it->second;
                    out.value = std::to_string(it->second);
                }
                break;
            }
            case MapKind::Disposition: {
                auto it = disposition_.find(key);
                if (it != disposition_.end()) {
                    out.mapped = true;
                    out.value = it->second;
                }
                break;
            }
        }
        return out;
    }

    // Checks that every incident-type target exists in the vocabulary.
    void validate_against(const RegistryVocabulary& vocab) const {
        for (const auto& [code, target] : incident_type_) {
            if (!vocab.contains(target))
                throw RegistryError("mapping target '" + target +
                                    "' is not in the registry vocabulary");
        }
    }

    static MappingRegistry load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RegistryError("cannot open mapping file: " + path);
        MappingRegistry r;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            auto fields = split(line, '\t');
            if (fields.size() != 3)
                throw RegistryError(path + ":" + std::to_string(lineno) +
                                    ": expected KIND<TAB>CODE<TAB>TARGET");
            std::string kind = to_lower(trim(fields[0]));
            MapKind k;
            if (kind == "incidenttype") k = MapKind::IncidentType;
            else if (kind == "priority") k = MapKind::Priority;
            else if (kind == "disposition") k = MapKind::Disposition;
            else
                throw RegistryError(path + ":" + std::to_string(lineno) +
                                    ": unknown mapping kind '" + fields[0] + "'");
            r.add(k, trim(fields[1]), trim(fields[2]));
        }
        return r;
    }

  private:
    std::map<std::string, std::string> incident_type_;
    std::map<std::string, int> priority_;
    std::map<std::string, std::string> disposition_;
};

}  // namespace eidolink
