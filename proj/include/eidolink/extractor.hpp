#pragma once

// Entity extraction from free text behind a pluggable interface.
//
// The bundled extractor is deterministic and rule based: title + capitalized
// name patterns for people, suffix/keyword rules for organizations, and
// preposition-introduced capitalized runs (plus optional known place names)
// for locations. A model-backed implementation can replace it behind the
// same interface.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "eidolink/strutil.hpp"

namespace eidolink {

enum class EntityKind { Person, Location, Organization };

inline std::string_view entity_kind_name(EntityKind k) {
    switch (k) {
        case EntityKind::Person: return "person";
        case EntityKind::Location: return "location";
        case EntityKind::Organization: return "organization";
    }
    return "?";
}

struct ExtractedEntity {
    EntityKind kind;
    std::string value;
    std::size_t begin = 0;  // character span within the input text
    std::size_t end = 0;

    bool operator==(const ExtractedEntity&) const = default;
};

class Extractor {
  public:
    virtual ~Extractor() = default;
    virtual std::vector<ExtractedEntity> extract(std::string_view text) const = 0;
};

class RuleBasedExtractor final : public Extractor {
  public:
    RuleBasedExtractor() = default;

    // Known place names (typically gazetteer entries) are matched verbatim,
    // case-insensitively, as location entities.
    explicit RuleBasedExtractor(std::vector<std::string> known_places)
        : known_places_(std::move(known_places)) {}

    std::vector<ExtractedEntity> extract(std::string_view text) const override {
        std::vector<ExtractedEntity> out;
        auto words = split_words(text);

        // Known place names first; longest match wins per starting word.
        std::vector<bool> consumed(words.size(), false);
        for (size_t i = 0; i < words.size(); ++i) {
            size_t best_len = 0;
            std::string_view best_name;
            for (const auto& place : known_places_) {
                size_t n = match_phrase(text, words, i, place);
                if (n > best_len) {
                    best_len = n;
                    best_name = place;
                }
            }
            if (best_len > 0) {
                size_t b = words[i].begin;
                size_t e = words[i + best_len - 1].end;
                out.push_back({EntityKind::Location, std::string(text.substr(b, e - b)), b, e});
                for (size_t k = i; k < i + best_len; ++k) consumed[k] = true;
                i += best_len - 1;
            }
        }

        for (size_t i = 0; i < words.size(); ++i) {
            if (consumed[i]) continue;
            std::string lower = to_lower(words[i].word);

            // Person: title followed by capitalized names.
            if (is_person_title(lower)) {
                size_t j = i + 1;
                while (j < words.size() && !consumed[j] && is_capitalized(words[j].word) &&
                       j - i <= 3)
                    ++j;
                if (j > i + 1) {
                    size_t b = words[i + 1].begin;
                    size_t e = words[j - 1].end;
                    out.push_back(
                        {EntityKind::Person, std::string(text.substr(b, e - b)), b, e});
                    for (size_t k = i; k < j; ++k) consumed[k] = true;
                    i = j - 1;
                    continue;
                }
            }

            // Location: "at|near|on|along [the] Capitalized Run".
            if (is_location_preposition(lower)) {
                size_t j = i + 1;
                if (j < words.size() && to_lower(words[j].word) == "the") ++j;
                size_t start = j;
                while (j < words.size() && !consumed[j] && is_capitalized(words[j].word) &&
                       j - start < 5)
                    ++j;
                if (j > start) {
                    size_t b = words[start].begin;
                    size_t e = words[j - 1].end;
                    out.push_back(
                        {EntityKind::Location, std::string(text.substr(b, e - b)), b, e});
                    for (size_t k = start; k < j; ++k) consumed[k] = true;
                    i = j - 1;
                    continue;
                }
            }
        }

        // Organization: capitalized run ending in an org suffix.
        for (size_t i = 0; i < words.size(); ++i) {
            if (consumed[i]) continue;
            if (!is_org_suffix(to_lower(words[i].word))) continue;
            size_t start = i;
            while (start > 0 && !consumed[start - 1] && is_capitalized(words[start - 1].word) &&
                   i - start < 5)
                --start;
            if (start < i && is_capitalized(words[start].word)) {
                size_t b = words[start].begin;
                size_t e = words[i].end;
                out.push_back(
                    {EntityKind::Organization, std::string(text.substr(b, e - b)), b, e});
                for (size_t k = start; k <= i; ++k) consumed[k] = true;
            }
        }

        std::sort(out.begin(), out.end(), [](const ExtractedEntity& a, const ExtractedEntity& b) {
            if (a.begin != b.begin) return a.begin < b.begin;
            return a.kind < b.kind;
        });
        return out;
    }

  private:
    struct Word {
        std::string word;
        size_t begin;
        size_t end;
    };

    static std::vector<Word> split_words(std::string_view text) {
        std::vector<Word> out;
        size_t i = 0;
        while (i < text.size()) {
            if (!is_word_char(text[i])) {
                ++i;
                continue;
            }
            size_t b = i;
            while (i < text.size() && is_word_char(text[i])) ++i;
            out.push_back({std::string(text.substr(b, i - b)), b, i});
        }
        return out;
    }

    static bool is_word_char(char c) {
        return is_ascii_alnum(c) || c == '\'' || c == '&';
    }

    static bool is_capitalized(const std::string& w) {
        return !w.empty() && w[0] >= 'A' && w[0] <= 'Z';
    }

    static bool is_person_title(const std::string& lower) {
        static const char* kTitles[] = {"mr",       "mrs",      "ms",      "dr",
                                        "officer",  "deputy",   "sgt",     "sergeant",
                                        "captain",  "chief",    "detective", "lt",
                                        "lieutenant"};
        for (const char* t : kTitles)
            if (lower == t) return true;
        return false;
    }

    static bool is_location_preposition(const std::string& lower) {
        return lower == "at" || lower == "near" || lower == "on" || lower == "along";
    }

    static bool is_org_suffix(const std::string& lower) {
        static const char* kSuffixes[] = {"inc",        "llc",    "corp",    "company",
                                          "department", "dept",   "authority", "district",
                                          "agency",     "service", "services", "bureau"};
        for (const char* s : kSuffixes)
            if (lower == s) return true;
        return false;
    }

    std::vector<std::string> known_places_;

    // Number of words consumed when `phrase` matches at word index `i`.
    static size_t match_phrase(std::string_view text, const std::vector<Word>& words, size_t i,
                               std::string_view phrase) {
        auto parts = tokenize(phrase);
        if (parts.empty() || i + parts.size() > words.size()) return 0;
        for (size_t k = 0; k < parts.size(); ++k) {
            if (fold_name(words[i + k].word) != parts[k]) return 0;
        }
        (void)text;
        return parts.size();
    }
};

}  // namespace eidolink
