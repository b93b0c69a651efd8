#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pairs/geometry.hpp"

namespace pairs {

/// Maps texts to unit-norm embedding vectors. Implementations must be
/// deterministic per text and safe to call concurrently.
class Embedder {
public:
    virtual ~Embedder() = default;

    virtual const std::string& id() const = 0;
    virtual std::size_t dimension() const = 0;

    /// One vector per input text, in input order. The EmbeddingVector
    /// return type guarantees unit norm regardless of backend.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;

    EmbeddingVector embed_one(const std::string& text) const;
};

/// Completes a prompt. Mock generators are fixed mappings; remote ones are
/// pinned to temperature 0.0 so a given prompt always yields one completion.
class Generator {
public:
    virtual ~Generator() = default;

    virtual const std::string& id() const = 0;
    virtual std::string complete(const std::string& prompt) const = 0;
};

/// Scores the semantic relevance of a (query, document) pair. Higher is
/// more relevant; the scale is backend-defined.
class Reranker {
public:
    virtual ~Reranker() = default;

    virtual const std::string& id() const = 0;
    virtual double score(const std::string& query, const std::string& document) const = 0;

    /// Scores one query against many documents. The default loops over
    /// score(); remote backends override it with a single batched call.
    virtual std::vector<double> score_batch(const std::string& query,
                                            std::span<const std::string> documents) const;
};

/// Deterministic mock: each text maps to a pseudo-random unit vector drawn
/// from a stable hash of (seed, text). Identical text gives an identical
/// vector across processes and platforms. dimension must be >= 2.
std::shared_ptr<Embedder> hash_embedder(std::size_t dimension, std::uint64_t seed);

/// Deterministic mock with controllable semantics: the vector is the
/// normalized sum of per-token hash vectors, so texts sharing tokens are
/// similar. Tokens are lowercased alphanumeric runs.
std::shared_ptr<Embedder> token_hash_embedder(std::size_t dimension, std::uint64_t seed);

/// One substring-match rule of a table generator.
struct GeneratorRule {
    std::string match;
    std::string completion;
};

/// Scripted generator: returns the completion of the first rule whose
/// `match` occurs in the prompt, else `fallback`. Rules are checked in
/// declaration order.
std::shared_ptr<Generator> table_generator(std::vector<GeneratorRule> rules,
                                           std::string fallback);

/// Deterministic mock reranker: Dice overlap of lowercased token multisets,
/// in [0, 1].
std::shared_ptr<Reranker> token_overlap_reranker();

}  // namespace pairs
