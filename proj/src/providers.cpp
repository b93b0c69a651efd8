#include "pairs/providers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <utility>

#include "pairs/errors.hpp"

namespace pairs {

namespace {

// splitmix64; portable and plenty for mock embeddings.
struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1].
    double next_positive_unit() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }
};

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Standard normal draws via Box-Muller on splitmix output; avoids the
// implementation-defined streams of std::normal_distribution.
void fill_gaussian(SplitMix64& rng, std::span<double> out) {
    constexpr double kTwoPi = 6.28318530717958647692;
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const double u1 = rng.next_positive_unit();
        const double u2 = rng.next_positive_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = r * std::cos(kTwoPi * u2);
        if (i + 1 < out.size()) {
            out[i + 1] = r * std::sin(kTwoPi * u2);
        }
    }
}

std::vector<double> gaussian_direction(std::uint64_t key, std::size_t dimension) {
    std::vector<double> values(dimension);
    // Resampling on an exactly-zero draw keeps normalize() total; it has
    // never been observed to trigger.
    for (std::uint64_t attempt = 0;; ++attempt) {
        SplitMix64 rng{key + attempt};
        fill_gaussian(rng, values);
        for (const double v : values) {
            if (v != 0.0) {
                return values;
            }
        }
    }
}

std::vector<std::string> tokenize_lower(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

class HashEmbedder final : public Embedder {
public:
    HashEmbedder(std::size_t dimension, std::uint64_t seed)
        : dimension_(dimension),
          seed_(seed),
          id_("mock-hash-d" + std::to_string(dimension) + "-s" + std::to_string(seed)) {}

    const std::string& id() const override { return id_; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const std::string& text : texts) {
            const auto direction = gaussian_direction(fnv1a(text, seed_), dimension_);
            out.push_back(normalize(std::span<const double>(direction)));
        }
        return out;
    }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    std::string id_;
};

class TokenHashEmbedder final : public Embedder {
public:
    TokenHashEmbedder(std::size_t dimension, std::uint64_t seed)
        : dimension_(dimension),
          seed_(seed),
          id_("mock-token-d" + std::to_string(dimension) + "-s" + std::to_string(seed)) {}

    const std::string& id() const override { return id_; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const std::string& text : texts) {
            out.push_back(embed_text(text));
        }
        return out;
    }

private:
    EmbeddingVector embed_text(const std::string& text) const {
        const auto tokens = tokenize_lower(text);
        std::vector<double> sum(dimension_, 0.0);
        for (const std::string& token : tokens) {
            const auto direction = gaussian_direction(fnv1a(token, seed_), dimension_);
            for (std::size_t i = 0; i < dimension_; ++i) {
                sum[i] += direction[i];
            }
        }
        const bool all_zero =
            std::all_of(sum.begin(), sum.end(), [](double v) { return v == 0.0; });
        if (tokens.empty() || all_zero) {
            // No usable tokens (or exact cancellation): fall back to a
            // whole-text direction so every input still embeds.
            sum = gaussian_direction(fnv1a(text, seed_ ^ 0xA5A5A5A5A5A5A5A5ULL), dimension_);
        }
        return normalize(std::span<const double>(sum));
    }

    std::size_t dimension_;
    std::uint64_t seed_;
    std::string id_;
};

class TableGenerator final : public Generator {
public:
    TableGenerator(std::vector<GeneratorRule> rules, std::string fallback)
        : rules_(std::move(rules)), fallback_(std::move(fallback)), id_("mock-table") {}

    const std::string& id() const override { return id_; }

    std::string complete(const std::string& prompt) const override {
        for (const GeneratorRule& rule : rules_) {
            if (prompt.find(rule.match) != std::string::npos) {
                return rule.completion;
            }
        }
        return fallback_;
    }

private:
    std::vector<GeneratorRule> rules_;
    std::string fallback_;
    std::string id_;
};

class TokenOverlapReranker final : public Reranker {
public:
    TokenOverlapReranker() : id_("mock-token-overlap") {}

    const std::string& id() const override { return id_; }

    double score(const std::string& query, const std::string& document) const override {
        const auto a = tokenize_lower(query);
        const auto b = tokenize_lower(document);
        if (a.empty() && b.empty()) {
            return 0.0;
        }
        std::map<std::string, std::size_t> counts;
        for (const std::string& token : a) {
            ++counts[token];
        }
        std::size_t overlap = 0;
        for (const std::string& token : b) {
            auto it = counts.find(token);
            if (it != counts.end() && it->second > 0) {
                --it->second;
                ++overlap;
            }
        }
        return 2.0 * static_cast<double>(overlap) / static_cast<double>(a.size() + b.size());
    }

private:
    std::string id_;
};

}  // namespace

EmbeddingVector Embedder::embed_one(const std::string& text) const {
    const std::string texts[] = {text};
    auto vectors = embed(texts);
    if (vectors.size() != 1) {
        throw ProtocolError("embedder '" + id() + "' returned " +
                            std::to_string(vectors.size()) + " vectors for 1 text");
    }
    return std::move(vectors.front());
}

std::vector<double> Reranker::score_batch(const std::string& query,
                                          std::span<const std::string> documents) const {
    std::vector<double> scores;
    scores.reserve(documents.size());
    for (const std::string& document : documents) {
        scores.push_back(score(query, document));
    }
    return scores;
}

std::shared_ptr<Embedder> hash_embedder(std::size_t dimension, std::uint64_t seed) {
    if (dimension < 2) {
        throw InvalidInputError("hash embedder dimension must be >= 2");
    }
    return std::make_shared<HashEmbedder>(dimension, seed);
}

std::shared_ptr<Embedder> token_hash_embedder(std::size_t dimension, std::uint64_t seed) {
    if (dimension < 2) {
        throw InvalidInputError("token hash embedder dimension must be >= 2");
    }
    return std::make_shared<TokenHashEmbedder>(dimension, seed);
}

std::shared_ptr<Generator> table_generator(std::vector<GeneratorRule> rules,
                                           std::string fallback) {
    return std::make_shared<TableGenerator>(std::move(rules), std::move(fallback));
}

std::shared_ptr<Reranker> token_overlap_reranker() {
    return std::make_shared<TokenOverlapReranker>();
}

}  // namespace pairs
