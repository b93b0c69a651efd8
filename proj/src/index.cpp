#include "pairs/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "pairs/errors.hpp"

namespace pairs {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kEmbeddingsName = "embeddings.bin";
constexpr const char* kChunksName = "chunks.jsonl";

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream stream(text);
    std::string word;
    while (stream >> word) {
        words.push_back(word);
    }
    return words;
}

std::string join_words(std::span<const std::string> words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out += words[i];
    }
    return out;
}

void validate_chunks(std::span<const Chunk> chunks) {
    std::unordered_set<std::string_view> seen;
    for (const Chunk& chunk : chunks) {
        if (chunk.id.empty()) {
            throw IngestError("chunk with empty id");
        }
        if (chunk.text.empty()) {
            throw IngestError("chunk '" + chunk.id + "' has empty text");
        }
        if (!seen.insert(chunk.id).second) {
            throw IngestError("duplicate chunk id '" + chunk.id + "'");
        }
    }
}

float to_little_endian(float value) {
    if constexpr (std::endian::native == std::endian::big) {
        return std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(value)));
    }
    return value;
}

nlohmann::json chunk_to_json(const Chunk& chunk) {
    nlohmann::json j{{"id", chunk.id}, {"text", chunk.text}};
    if (chunk.title) {
        j["title"] = *chunk.title;
    }
    return j;
}

Chunk chunk_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string()) {
        throw FormatError("chunk object must have string fields 'id' and 'text'");
    }
    Chunk chunk{j["id"].get<std::string>(), j["text"].get<std::string>(), std::nullopt};
    if (j.contains("title")) {
        if (!j["title"].is_string()) {
            throw FormatError("chunk 'title' must be a string");
        }
        chunk.title = j["title"].get<std::string>();
    }
    return chunk;
}

}  // namespace

VectorIndex::VectorIndex(std::size_t dimension, std::string embedder_id,
                         std::vector<Chunk> chunks, std::vector<float> embeddings)
    : dimension_(dimension),
      embedder_id_(std::move(embedder_id)),
      chunks_(std::move(chunks)),
      embeddings_(std::move(embeddings)),
      probe_count_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
    position_by_id_.reserve(chunks_.size());
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        position_by_id_.emplace(chunks_[i].id, i);
    }
}

VectorIndex VectorIndex::ingest(std::span<const Chunk> corpus, const Embedder& embedder,
                                const ChunkingPolicy& chunking) {
    if (corpus.empty()) {
        throw InvalidInputError("cannot ingest an empty corpus");
    }
    std::vector<Chunk> chunks = apply_chunking(corpus, chunking);
    validate_chunks(chunks);

    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const Chunk& chunk : chunks) {
        texts.push_back(chunk.text);
    }
    const auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size()) {
        throw ProtocolError("embedder '" + embedder.id() + "' returned " +
                            std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    return build(embedder.dimension(), embedder.id(), std::move(chunks), vectors);
}

VectorIndex VectorIndex::build(std::size_t dimension, std::string embedder_id,
                               std::vector<Chunk> chunks,
                               std::span<const EmbeddingVector> embeddings) {
    if (dimension == 0) {
        throw InvalidInputError("index dimension must be positive");
    }
    if (chunks.size() != embeddings.size()) {
        throw InvalidInputError("chunk and embedding counts differ");
    }
    validate_chunks(chunks);
    std::vector<float> storage;
    storage.reserve(chunks.size() * dimension);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].dimension() != dimension) {
            throw InvalidInputError("embedding for chunk '" + chunks[i].id +
                                    "' has dimension " +
                                    std::to_string(embeddings[i].dimension()) + ", expected " +
                                    std::to_string(dimension));
        }
        const auto values = embeddings[i].values();
        storage.insert(storage.end(), values.begin(), values.end());
    }
    return VectorIndex(dimension, std::move(embedder_id), std::move(chunks),
                       std::move(storage));
}

std::span<const float> VectorIndex::embedding_row(std::size_t position) const {
    if (position >= chunks_.size()) {
        throw InvalidInputError("entry position out of range");
    }
    return std::span<const float>(embeddings_).subspan(position * dimension_, dimension_);
}

std::optional<std::size_t> VectorIndex::position_of(std::string_view chunk_id) const {
    auto it = position_by_id_.find(std::string(chunk_id));
    if (it == position_by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<ScoredHit> VectorIndex::top_n(const EmbeddingVector& probe, std::size_t n) const {
    if (probe.dimension() != dimension_) {
        throw InvalidInputError("probe dimension " + std::to_string(probe.dimension()) +
                                " does not match index dimension " +
                                std::to_string(dimension_));
    }
    probe_count_->fetch_add(1, std::memory_order_relaxed);

    const std::size_t count = std::min(n, chunks_.size());
    if (count == 0) {
        return {};
    }
    std::vector<double> similarities(chunks_.size());
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        similarities[i] = inner_product(embedding_row(i), probe.values());
    }
    std::vector<std::size_t> order(chunks_.size());
    std::iota(order.begin(), order.end(), 0);
    const auto better = [&](std::size_t a, std::size_t b) {
        if (similarities[a] != similarities[b]) {
            return similarities[a] > similarities[b];
        }
        return chunks_[a].id < chunks_[b].id;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count),
                      order.end(), better);

    std::vector<ScoredHit> hits;
    hits.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        hits.push_back(ScoredHit{chunks_[order[i]].id, similarities[order[i]]});
    }
    return hits;
}

std::uint64_t VectorIndex::probe_count() const noexcept {
    return probe_count_->load(std::memory_order_relaxed);
}

void VectorIndex::reset_probe_count() noexcept {
    probe_count_->store(0, std::memory_order_relaxed);
}

void VectorIndex::save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw FormatError("cannot create index directory '" + dir.string() +
                          "': " + ec.message());
    }

    nlohmann::json manifest{{"dimension", dimension_},
                            {"metric", "inner_product"},
                            {"embedder_id", embedder_id_},
                            {"count", chunks_.size()},
                            {"format_version", kFormatVersion}};
    {
        std::ofstream out(dir / kManifestName, std::ios::binary);
        if (!out) {
            throw FormatError("cannot write manifest to '" + dir.string() + "'");
        }
        out << manifest.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / kEmbeddingsName, std::ios::binary);
        if (!out) {
            throw FormatError("cannot write embeddings to '" + dir.string() + "'");
        }
        for (const float value : embeddings_) {
            const float le = to_little_endian(value);
            out.write(reinterpret_cast<const char*>(&le), sizeof(le));
        }
    }
    {
        std::ofstream out(dir / kChunksName, std::ios::binary);
        if (!out) {
            throw FormatError("cannot write chunk metadata to '" + dir.string() + "'");
        }
        for (const Chunk& chunk : chunks_) {
            out << chunk_to_json(chunk).dump() << '\n';
        }
    }
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kManifestName;
    std::ifstream manifest_in(manifest_path, std::ios::binary);
    if (!manifest_in) {
        throw FormatError("missing manifest at '" + manifest_path.string() + "'");
    }
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("corrupt manifest at '" + manifest_path.string() + "': " + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("dimension") ||
        !manifest["dimension"].is_number_unsigned() || !manifest.contains("count") ||
        !manifest["count"].is_number_unsigned() || !manifest.contains("embedder_id") ||
        !manifest["embedder_id"].is_string() || !manifest.contains("metric") ||
        !manifest["metric"].is_string() || !manifest.contains("format_version")) {
        throw FormatError("manifest at '" + manifest_path.string() + "' is missing fields");
    }
    if (manifest["format_version"].get<int>() != kFormatVersion) {
        throw FormatError("unsupported index format_version " +
                          manifest["format_version"].dump());
    }
    if (manifest["metric"].get<std::string>() != "inner_product") {
        throw FormatError("unsupported metric '" + manifest["metric"].get<std::string>() + "'");
    }
    const auto dimension = manifest["dimension"].get<std::size_t>();
    const auto count = manifest["count"].get<std::size_t>();
    if (dimension == 0) {
        throw FormatError("manifest declares zero dimension");
    }

    std::vector<Chunk> chunks;
    chunks.reserve(count);
    {
        std::ifstream in(dir / kChunksName, std::ios::binary);
        if (!in) {
            throw FormatError("missing chunk metadata in '" + dir.string() + "'");
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            try {
                chunks.push_back(chunk_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError("chunks.jsonl line " + std::to_string(line_no) + ": " +
                                  e.what());
            }
        }
    }
    if (chunks.size() != count) {
        throw FormatError("manifest declares " + std::to_string(count) + " entries but " +
                          std::to_string(chunks.size()) + " chunk records were found");
    }
    try {
        validate_chunks(chunks);
    } catch (const IngestError& e) {
        throw FormatError(std::string("invalid chunk metadata: ") + e.what());
    }

    std::vector<float> embeddings(count * dimension);
    {
        std::ifstream in(dir / kEmbeddingsName, std::ios::binary | std::ios::ate);
        if (!in) {
            throw FormatError("missing embeddings payload in '" + dir.string() + "'");
        }
        const auto actual = static_cast<std::size_t>(in.tellg());
        const std::size_t expected = count * dimension * sizeof(float);
        if (actual != expected) {
            throw FormatError("embeddings payload is " + std::to_string(actual) +
                              " bytes, manifest implies " + std::to_string(expected));
        }
        in.seekg(0);
        in.read(reinterpret_cast<char*>(embeddings.data()),
                static_cast<std::streamsize>(expected));
        if (!in) {
            throw FormatError("failed to read embeddings payload");
        }
    }
    for (float& value : embeddings) {
        value = to_little_endian(value);  // involutive; converts back on big-endian hosts
    }
    for (std::size_t row = 0; row < count; ++row) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < dimension; ++j) {
            const double v = embeddings[row * dimension + j];
            norm_sq += v * v;
        }
        if (std::abs(std::sqrt(norm_sq) - 1.0) > kUnitNormTolerance) {
            throw FormatError("embedding row " + std::to_string(row) +
                              " is not unit norm; payload is corrupt");
        }
    }
    return VectorIndex(dimension, manifest["embedder_id"].get<std::string>(),
                       std::move(chunks), std::move(embeddings));
}

std::vector<Chunk> apply_chunking(std::span<const Chunk> corpus,
                                  const ChunkingPolicy& policy) {
    if (policy.kind == ChunkingPolicy::Kind::passthrough) {
        return std::vector<Chunk>(corpus.begin(), corpus.end());
    }
    if (policy.window_words == 0) {
        throw ConfigError("chunking window must be positive");
    }
    if (policy.overlap_words >= policy.window_words) {
        throw ConfigError("chunking overlap must be smaller than the window");
    }
    const std::size_t step = policy.window_words - policy.overlap_words;
    std::vector<Chunk> out;
    for (const Chunk& record : corpus) {
        const auto words = split_words(record.text);
        if (words.empty()) {
            throw IngestError("chunk '" + record.id + "' has empty text");
        }
        std::size_t window_index = 0;
        for (std::size_t start = 0; start < words.size(); start += step) {
            const std::size_t end = std::min(start + policy.window_words, words.size());
            out.push_back(Chunk{record.id + "-" + std::to_string(window_index),
                                join_words(std::span<const std::string>(words).subspan(
                                    start, end - start)),
                                record.title});
            ++window_index;
            if (end == words.size()) {
                break;
            }
        }
    }
    return out;
}

std::vector<Chunk> read_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open corpus file '" + path.string() + "'");
    }
    std::vector<Chunk> chunks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            chunks.push_back(chunk_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " +
                              e.what());
        } catch (const FormatError& e) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " +
                              e.what());
        }
    }
    return chunks;
}

}  // namespace pairs
