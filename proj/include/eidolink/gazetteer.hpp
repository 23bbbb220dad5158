#pragma once

// Curated local place knowledge: gazetteer entries with geometry, a folded
// name/alias index for exact matching, and a uniform lat/lon grid for radius
// queries. Entries load from a JSON-lines file, one entry per line:
//
//   {"name":"San Diego River","aliases":["SD River"],
//    "geometry":{"latitude":32.76,"longitude":-117.17},
//    "category":"river","jurisdiction":"San Diego County"}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidolink/eido.hpp"
#include "eidolink/geo.hpp"
#include "eidolink/strutil.hpp"

namespace eidolink {

struct GazetteerError : std::runtime_error {
    explicit GazetteerError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GazetteerEntry {
    std::string name;
    std::vector<std::string> aliases;
    Geometry geometry;
    std::string category;
    std::string jurisdiction;
};

inline GazetteerEntry gazetteer_entry_from_json(const Json& j) {
    GazetteerEntry e;
    e.name = j.at("name").get<std::string>();
    if (e.name.empty()) throw GazetteerError("gazetteer entry with empty name");
    if (j.contains("aliases"))
        for (const auto& a : j.at("aliases")) e.aliases.push_back(a.get<std::string>());
    e.geometry = geometry_from_json(j.at("geometry"), "geometry");
    if (!geometry_valid(e.geometry))
        throw GazetteerError("gazetteer entry '" + e.name + "' has invalid geometry");
    if (j.contains("category")) e.category = j.at("category").get<std::string>();
    if (j.contains("jurisdiction")) e.jurisdiction = j.at("jurisdiction").get<std::string>();
    return e;
}

inline Json gazetteer_entry_to_json(const GazetteerEntry& e) {
    Json j = Json::object();
    j["name"] = e.name;
    if (!e.aliases.empty()) j["aliases"] = e.aliases;
    j["geometry"] = geometry_to_json(e.geometry);
    if (!e.category.empty()) j["category"] = e.category;
    if (!e.jurisdiction.empty()) j["jurisdiction"] = e.jurisdiction;
    return j;
}

class SpatialIndex {
  public:
    explicit SpatialIndex(double cell_degrees = 0.01) : cell_degrees_(cell_degrees) {
        if (cell_degrees_ <= 0.0) throw GazetteerError("grid cell size must be positive");
    }

    void add(GazetteerEntry entry) {
        std::uint32_t id = static_cast<std::uint32_t>(entries_.size());
        // Name index covers the primary name and every alias.
        name_index_[fold_name(entry.name)].push_back(id);
        for (const auto& a : entry.aliases) name_index_[fold_name(a)].push_back(id);
        // Grid cells: every cell the geometry's bounding box touches.
        auto [lat_lo, lat_hi, lon_lo, lon_hi] = bounds(entry.geometry);
        for (std::int64_t r = row(lat_lo); r <= row(lat_hi); ++r)
            for (std::int64_t c = col(lon_lo); c <= col(lon_hi); ++c)
                grid_[{r, c}].push_back(id);
        entries_.push_back(std::move(entry));
    }

    size_t size() const { return entries_.size(); }
    const std::vector<GazetteerEntry>& entries() const { return entries_; }
    const GazetteerEntry& entry(std::uint32_t id) const { return entries_.at(id); }

    std::vector<std::uint32_t> find_exact(std::string_view name) const {
        auto it = name_index_.find(fold_name(name));
        if (it == name_index_.end()) return {};
        return it->second;
    }

    // All entries whose geometry lies within radius_m of the center point.
    // Candidates come from the grid; every candidate is verified by the real
    // distance rule, so the result equals a brute-force scan.
    std::vector<std::uint32_t> radius_query(const GeoPoint& center, double radius_m) const {
        double lat_pad = radius_m / kMetersPerDegreeLat;
        double lat_lo = center.latitude - lat_pad;
        double lat_hi = center.latitude + lat_pad;
        // Longitude degrees shrink with latitude; size the pad for the
        // latitude in the band closest to the pole, clamped away from 0.
        double worst_lat = std::max(std::abs(lat_lo), std::abs(lat_hi));
        double cos_lat = std::max(0.01, std::cos(deg2rad(std::min(89.0, worst_lat))));
        double lon_pad = radius_m / (kMetersPerDegreeLat * cos_lat);
        double lon_lo = center.longitude - lon_pad;
        double lon_hi = center.longitude + lon_pad;

        std::set<std::uint32_t> candidates;
        for (std::int64_t r = row(lat_lo); r <= row(lat_hi); ++r)
            for (std::int64_t c = col(lon_lo); c <= col(lon_hi); ++c) {
                auto it = grid_.find({r, c});
                if (it == grid_.end()) continue;
                candidates.insert(it->second.begin(), it->second.end());
            }

        std::vector<std::uint32_t> out;
        for (std::uint32_t id : candidates) {
            if (geometry_distance_m(Geometry{center}, entries_[id].geometry) <= radius_m)
                out.push_back(id);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    static SpatialIndex load(const std::string& path, double cell_degrees = 0.01) {
        std::ifstream in(path);
        if (!in) throw GazetteerError("cannot open gazetteer file: " + path);
        SpatialIndex index(cell_degrees);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            Json j;
            try {
                j = Json::parse(t);
            } catch (const Json::parse_error& e) {
                throw GazetteerError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
            try {
                index.add(gazetteer_entry_from_json(j));
            } catch (const std::exception& e) {
                throw GazetteerError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        return index;
    }

  private:
    static constexpr double kMetersPerDegreeLat = 111320.0;

    std::int64_t row(double lat) const {
        return static_cast<std::int64_t>(std::floor(lat / cell_degrees_));
    }
    std::int64_t col(double lon) const {
        return static_cast<std::int64_t>(std::floor(lon / cell_degrees_));
    }

    static std::tuple<double, double, double, double> bounds(const Geometry& g) {
        if (const auto* p = std::get_if<GeoPoint>(&g))
            return {p->latitude, p->latitude, p->longitude, p->longitude};
        const auto& ring = std::get<PolygonRing>(g);
        double lat_lo = 90.0, lat_hi = -90.0, lon_lo = 180.0, lon_hi = -180.0;
        for (const auto& v : ring.vertices) {
            lat_lo = std::min(lat_lo, v.latitude);
            lat_hi = std::max(lat_hi, v.latitude);
            lon_lo = std::min(lon_lo, v.longitude);
            lon_hi = std::max(lon_hi, v.longitude);
        }
        return {lat_lo, lat_hi, lon_lo, lon_hi};
    }

    double cell_degrees_;
    std::vector<GazetteerEntry> entries_;
    std::map<std::string, std::vector<std::uint32_t>> name_index_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint32_t>> grid_;
};

}  // namespace eidolink
