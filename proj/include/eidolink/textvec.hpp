#pragma once

// Deterministic hashed term-frequency text vectors.
//
// Tokens are lowercase alphanumeric runs; each token is FNV-1a-64 hashed into
// one of `dimension` buckets; bucket counts are L2-normalized. The vectorizer
// is an interface so an embedding provider can be swapped in behind the same
// contract: unit-norm vectors for non-empty text, the zero vector otherwise.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "eidolink/strutil.hpp"

namespace eidolink {

inline constexpr std::size_t kDefaultVectorDimension = 4096;

// Sparse representation; the dimension only bounds bucket indices.
struct TextVector {
    std::map<std::uint32_t, double> weights;

    bool zero() const { return weights.empty(); }

    double dot(const TextVector& other) const {
        double acc = 0.0;
        const auto* small = &weights;
        const auto* large = &other.weights;
        if (small->size() > large->size()) std::swap(small, large);
        for (const auto& [bucket, w] : *small) {
            auto it = large->find(bucket);
            if (it != large->end()) acc += w * it->second;
        }
        return acc;
    }

    bool operator==(const TextVector&) const = default;
};

// Both vectors are unit-norm by construction, so the dot product is the
// cosine. Clamped into [0,1]; a zero vector on either side yields 0.
inline double cosine01(const TextVector& a, const TextVector& b) {
    if (a.zero() || b.zero()) return 0.0;
    double c = a.dot(b);
    if (c < 0.0) return 0.0;
    if (c > 1.0) return 1.0;
    return c;
}

class TextVectorizer {
  public:
    virtual ~TextVectorizer() = default;
    virtual TextVector vectorize(std::string_view text) const = 0;
};

class HashedVectorizer final : public TextVectorizer {
  public:
    explicit HashedVectorizer(std::size_t dimension = kDefaultVectorDimension)
        : dimension_(dimension) {}

    TextVector vectorize(std::string_view text) const override {
        TextVector v;
        for (const auto& tok : tokenize(text)) {
            std::uint32_t bucket = static_cast<std::uint32_t>(fnv1a64(tok) % dimension_);
            v.weights[bucket] += 1.0;
        }
        double norm_sq = 0.0;
        for (const auto& [bucket, w] : v.weights) norm_sq += w * w;
        if (norm_sq > 0.0) {
            double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& [bucket, w] : v.weights) w *= inv;
        }
        return v;
    }

    std::size_t dimension() const { return dimension_; }

  private:
    std::size_t dimension_;
};

}  // namespace eidolink
