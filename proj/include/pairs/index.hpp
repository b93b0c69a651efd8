#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairs/geometry.hpp"
#include "pairs/providers.hpp"

namespace pairs {

/// A corpus passage. id must be non-empty and unique within an index;
/// text must be non-empty.
struct Chunk {
    std::string id;
    std::string text;
    std::optional<std::string> title;

    bool operator==(const Chunk&) const = default;
};

/// One search result: similarity is the inner product of the stored
/// embedding with the probe, clamped to [-1, 1].
struct ScoredHit {
    std::string chunk_id;
    double similarity = 0.0;

    bool operator==(const ScoredHit&) const = default;
};

enum class Metric { inner_product };

/// How ingest turns corpus records into index entries. passthrough keeps
/// one entry per record; fixed_window splits each record into word windows
/// with ids suffixed -0, -1, ...
struct ChunkingPolicy {
    enum class Kind { passthrough, fixed_window };

    Kind kind = Kind::passthrough;
    std::size_t window_words = 100;
    std::size_t overlap_words = 0;
};

/// Flat inner-product index over unit-norm float32 embeddings. Immutable
/// after ingest; concurrent top_n calls are safe. Every top_n call bumps a
/// relaxed probe counter so callers can account retriever activity.
class VectorIndex {
public:
    VectorIndex(VectorIndex&&) noexcept = default;
    VectorIndex& operator=(VectorIndex&&) noexcept = default;
    VectorIndex(const VectorIndex&) = delete;
    VectorIndex& operator=(const VectorIndex&) = delete;

    /// Embeds a (possibly re-chunked) corpus and builds the index.
    /// Throws InvalidInputError on an empty corpus, IngestError on bad
    /// records (naming the offending id), and propagates provider errors.
    static VectorIndex ingest(std::span<const Chunk> corpus, const Embedder& embedder,
                              const ChunkingPolicy& chunking = {});

    /// Builds an index from precomputed embeddings (programmatic use).
    static VectorIndex build(std::size_t dimension, std::string embedder_id,
                             std::vector<Chunk> chunks,
                             std::span<const EmbeddingVector> embeddings);

    /// The n entries with the largest inner product against the probe
    /// (fewer if the index is smaller), sorted descending with ties broken
    /// by ascending chunk id.
    std::vector<ScoredHit> top_n(const EmbeddingVector& probe, std::size_t n) const;

    /// Directory layout: manifest.json, embeddings.bin (row-major
    /// little-endian float32), chunks.jsonl in entry order. load(save(x))
    /// reproduces x bit-exactly.
    void save(const std::filesystem::path& dir) const;
    static VectorIndex load(const std::filesystem::path& dir);

    std::size_t size() const noexcept { return chunks_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    Metric metric() const noexcept { return Metric::inner_product; }
    const std::string& embedder_id() const noexcept { return embedder_id_; }

    const Chunk& chunk_at(std::size_t position) const { return chunks_.at(position); }
    std::span<const float> embedding_row(std::size_t position) const;

    /// Entry position for a chunk id, or nullopt when absent.
    std::optional<std::size_t> position_of(std::string_view chunk_id) const;

    std::uint64_t probe_count() const noexcept;
    void reset_probe_count() noexcept;

private:
    VectorIndex(std::size_t dimension, std::string embedder_id, std::vector<Chunk> chunks,
                std::vector<float> embeddings);

    std::size_t dimension_ = 0;
    std::string embedder_id_;
    std::vector<Chunk> chunks_;
    std::vector<float> embeddings_;  // row-major, size() * dimension()
    std::unordered_map<std::string, std::size_t> position_by_id_;
    std::unique_ptr<std::atomic<std::uint64_t>> probe_count_;
};

/// Applies a chunking policy to corpus records without embedding them.
std::vector<Chunk> apply_chunking(std::span<const Chunk> corpus,
                                  const ChunkingPolicy& policy);

/// Reads a JSON-lines corpus: one {"id", "text", "title"?} object per line,
/// UTF-8. Throws FormatError naming the first malformed line.
std::vector<Chunk> read_corpus_jsonl(const std::filesystem::path& path);

}  // namespace pairs
