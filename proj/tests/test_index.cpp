#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pairs/errors.hpp"
#include "pairs/index.hpp"
#include "pairs/providers.hpp"
#include "support/oracles.hpp"

using namespace pairs;
namespace fs = std::filesystem;

namespace {

std::vector<Chunk> toy_corpus() {
    return {
        {"alpha", "the eiffel tower is in paris", std::nullopt},
        {"beta", "mount everest is the tallest mountain", std::string("peaks")},
        {"gamma", "the nile is a long river", std::nullopt},
        {"delta", "honey never spoils in storage", std::nullopt},
    };
}

// Scratch directory unique to this test binary run.
fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("pairs_index_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void dump(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    REQUIRE(out.good());
}

// Index with hand-picked 2-D embeddings for exact similarity arithmetic.
VectorIndex toy_planar_index() {
    std::vector<Chunk> chunks{
        {"a", "east", std::nullopt},
        {"b", "north", std::nullopt},
        {"c", "northeastish", std::nullopt},
    };
    std::vector<EmbeddingVector> embs{
        EmbeddingVector::from_unit({1.0f, 0.0f}),
        EmbeddingVector::from_unit({0.0f, 1.0f}),
        EmbeddingVector::from_unit({0.6f, 0.8f}),
    };
    return VectorIndex::build(2, "unit-test", std::move(chunks), embs);
}

}  // namespace

TEST_CASE("ingest embeds every corpus record") {
    auto embedder = hash_embedder(16, 3);
    VectorIndex index = VectorIndex::ingest(toy_corpus(), *embedder);
    CHECK(index.size() == 4);
    CHECK(index.dimension() == 16);
    CHECK(index.embedder_id() == embedder->id());
    CHECK(index.metric() == Metric::inner_product);
    REQUIRE(index.position_of("beta").has_value());
    CHECK(index.chunk_at(*index.position_of("beta")).title == std::string("peaks"));
    CHECK_FALSE(index.position_of("missing").has_value());

    // Rows equal the embedder output for the chunk text, bit for bit.
    EmbeddingVector direct = embedder->embed_one("the nile is a long river");
    auto row = index.embedding_row(*index.position_of("gamma"));
    REQUIRE(row.size() == direct.dimension());
    for (std::size_t i = 0; i < row.size(); ++i) {
        CHECK(row[i] == direct.values()[i]);
    }
}

TEST_CASE("ingest rejects bad corpora") {
    auto embedder = hash_embedder(8, 1);
    std::vector<Chunk> empty;
    CHECK_THROWS_AS(VectorIndex::ingest(empty, *embedder), InvalidInputError);

    std::vector<Chunk> dup{{"x", "one", std::nullopt}, {"x", "two", std::nullopt}};
    CHECK_THROWS_WITH_AS(VectorIndex::ingest(dup, *embedder),
                         doctest::Contains("x"), IngestError);

    std::vector<Chunk> blank_text{{"x", "", std::nullopt}};
    CHECK_THROWS_AS(VectorIndex::ingest(blank_text, *embedder), IngestError);

    std::vector<Chunk> blank_id{{"", "text", std::nullopt}};
    CHECK_THROWS_AS(VectorIndex::ingest(blank_id, *embedder), IngestError);
}

TEST_CASE("fixed window chunking splits long records") {
    std::string words;
    for (int i = 0; i < 250; ++i) {
        words += "w" + std::to_string(i) + " ";
    }
    std::vector<Chunk> corpus{{"doc", words, std::string("t")}};
    ChunkingPolicy policy{ChunkingPolicy::Kind::fixed_window, 100, 0};
    std::vector<Chunk> out = apply_chunking(corpus, policy);
    REQUIRE(out.size() == 3);
    CHECK(out[0].id == "doc-0");
    CHECK(out[1].id == "doc-1");
    CHECK(out[2].id == "doc-2");
    CHECK(out[0].title == std::string("t"));
    CHECK(out[0].text.starts_with("w0 "));
    CHECK(out[1].text.starts_with("w100 "));
    CHECK(out[2].text == [&] {
        std::string tail;
        for (int i = 200; i < 250; ++i) {
            tail += (i > 200 ? " " : "") + ("w" + std::to_string(i));
        }
        return tail;
    }());
}

TEST_CASE("fixed window chunking respects overlap") {
    std::vector<Chunk> corpus{{"d", "a b c d e f g h i j", std::nullopt}};
    ChunkingPolicy policy{ChunkingPolicy::Kind::fixed_window, 4, 2};
    std::vector<Chunk> out = apply_chunking(corpus, policy);
    REQUIRE(out.size() == 4);
    CHECK(out[0].text == "a b c d");
    CHECK(out[1].text == "c d e f");
    CHECK(out[2].text == "e f g h");
    CHECK(out[3].text == "g h i j");
}

TEST_CASE("fixed window chunking validates its knobs") {
    std::vector<Chunk> corpus{{"d", "a b", std::nullopt}};
    ChunkingPolicy zero{ChunkingPolicy::Kind::fixed_window, 0, 0};
    CHECK_THROWS_AS(apply_chunking(corpus, zero), ConfigError);
    ChunkingPolicy swallow{ChunkingPolicy::Kind::fixed_window, 4, 4};
    CHECK_THROWS_AS(apply_chunking(corpus, swallow), ConfigError);
}

TEST_CASE("passthrough chunking is the identity") {
    std::vector<Chunk> corpus = toy_corpus();
    std::vector<Chunk> out = apply_chunking(corpus, ChunkingPolicy{});
    CHECK(out == corpus);
}

TEST_CASE("top_n on hand-placed vectors") {
    VectorIndex index = toy_planar_index();
    EmbeddingVector probe = EmbeddingVector::from_unit({0.8f, 0.6f});
    auto hits = index.top_n(probe, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].chunk_id == "c");
    CHECK(hits[0].similarity == doctest::Approx(0.96).epsilon(1e-6));
    CHECK(hits[1].chunk_id == "a");
    CHECK(hits[1].similarity == doctest::Approx(0.8).epsilon(1e-6));

    // n larger than the index returns everything, still sorted.
    auto all = index.top_n(probe, 10);
    REQUIRE(all.size() == 3);
    CHECK(all[2].chunk_id == "b");
}

TEST_CASE("top_n ties break toward the smaller id") {
    std::vector<Chunk> chunks{
        {"zz", "copy one", std::nullopt},
        {"aa", "copy two", std::nullopt},
        {"mm", "copy three", std::nullopt},
    };
    std::vector<EmbeddingVector> embs(3, EmbeddingVector::from_unit({0.0f, 1.0f}));
    VectorIndex index = VectorIndex::build(2, "unit-test", std::move(chunks), embs);
    auto hits = index.top_n(EmbeddingVector::from_unit({0.0f, 1.0f}), 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].chunk_id == "aa");
    CHECK(hits[1].chunk_id == "mm");
    CHECK(hits[2].chunk_id == "zz");
}

TEST_CASE("top_n rejects a probe of the wrong dimension") {
    VectorIndex index = toy_planar_index();
    CHECK_THROWS_AS(index.top_n(EmbeddingVector::from_unit({1.0f, 0.0f, 0.0f}), 1),
                    InvalidInputError);
}

TEST_CASE("top_n matches a full-scan reference on random data") {
    std::mt19937_64 rng(2024);
    auto embedder = hash_embedder(12, 5);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t count = 20 + rng() % 200;
        std::vector<Chunk> chunks;
        std::vector<EmbeddingVector> embs;
        for (std::size_t i = 0; i < count; ++i) {
            chunks.push_back({"c" + std::to_string(1000 + i), "txt", std::nullopt});
            embs.push_back(oracles::random_unit(rng, 12));
        }
        // Clone a few rows under other ids to force exact ties.
        for (int d = 0; d < 4; ++d) {
            chunks.push_back({"dup" + std::to_string(d), "txt", std::nullopt});
            embs.push_back(embs[d]);
        }
        VectorIndex index = VectorIndex::build(12, embedder->id(), std::move(chunks), embs);
        for (int probe_trial = 0; probe_trial < 10; ++probe_trial) {
            EmbeddingVector probe = oracles::random_unit(rng, 12);
            std::size_t n = 1 + rng() % 12;
            auto got = index.top_n(probe, n);
            auto want = oracles::top_n_scan(index, probe, n);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].chunk_id == want[i].chunk_id);
                CHECK(got[i].similarity == doctest::Approx(want[i].similarity).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("top_n result lists are prefixes of deeper searches") {
    std::mt19937_64 rng(77);
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> embs;
    for (int i = 0; i < 64; ++i) {
        chunks.push_back({"c" + std::to_string(100 + i), "txt", std::nullopt});
        embs.push_back(oracles::random_unit(rng, 6));
    }
    VectorIndex index = VectorIndex::build(6, "unit-test", std::move(chunks), embs);
    EmbeddingVector probe = oracles::random_unit(rng, 6);
    auto deep = index.top_n(probe, 20);
    for (std::size_t n = 1; n < 20; ++n) {
        auto shallow = index.top_n(probe, n);
        REQUIRE(shallow.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(shallow[i] == deep[i]);
        }
    }
}

TEST_CASE("probe counter tracks top_n calls") {
    VectorIndex index = toy_planar_index();
    CHECK(index.probe_count() == 0);
    EmbeddingVector probe = EmbeddingVector::from_unit({1.0f, 0.0f});
    index.top_n(probe, 1);
    index.top_n(probe, 2);
    CHECK(index.probe_count() == 2);
    index.reset_probe_count();
    CHECK(index.probe_count() == 0);
}

TEST_CASE("build validates shapes") {
    std::vector<Chunk> one{{"a", "t", std::nullopt}};
    std::vector<EmbeddingVector> embs{EmbeddingVector::from_unit({1.0f, 0.0f})};
    CHECK_THROWS_AS(VectorIndex::build(0, "e", one, embs), InvalidInputError);
    CHECK_THROWS_AS(VectorIndex::build(3, "e", one, embs), InvalidInputError);
    std::vector<Chunk> two{{"a", "t", std::nullopt}, {"b", "t", std::nullopt}};
    CHECK_THROWS_AS(VectorIndex::build(2, "e", two, embs), InvalidInputError);
}

TEST_CASE("save then load reproduces the index") {
    fs::path dir = fresh_dir("roundtrip");
    auto embedder = token_hash_embedder(24, 9);
    VectorIndex index = VectorIndex::ingest(toy_corpus(), *embedder);
    index.save(dir);

    VectorIndex back = VectorIndex::load(dir);
    REQUIRE(back.size() == index.size());
    CHECK(back.dimension() == index.dimension());
    CHECK(back.embedder_id() == index.embedder_id());
    for (std::size_t i = 0; i < index.size(); ++i) {
        CHECK(back.chunk_at(i) == index.chunk_at(i));
        auto a = index.embedding_row(i);
        auto b = back.embedding_row(i);
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            CHECK(a[j] == b[j]);
        }
    }

    // Searches behave identically after the round trip.
    EmbeddingVector probe = embedder->embed_one("tallest mountain on earth");
    CHECK(index.top_n(probe, 3) == back.top_n(probe, 3));
    fs::remove_all(dir);
}

TEST_CASE("save load save produces identical bytes") {
    fs::path first = fresh_dir("bytes_a");
    fs::path second = fresh_dir("bytes_b");
    auto embedder = hash_embedder(10, 4);
    VectorIndex index = VectorIndex::ingest(toy_corpus(), *embedder);
    index.save(first);
    VectorIndex::load(first).save(second);
    for (const char* name : {"manifest.json", "embeddings.bin", "chunks.jsonl"}) {
        CHECK(slurp(first / name) == slurp(second / name));
    }
    fs::remove_all(first);
    fs::remove_all(second);
}

TEST_CASE("load rejects damaged directories") {
    fs::path dir = fresh_dir("damage");
    auto embedder = hash_embedder(8, 2);
    VectorIndex index = VectorIndex::ingest(toy_corpus(), *embedder);
    index.save(dir);

    SUBCASE("missing directory") {
        CHECK_THROWS_AS(VectorIndex::load(dir / "nope"), FormatError);
    }
    SUBCASE("manifest is not json") {
        dump(dir / "manifest.json", "not json at all");
        CHECK_THROWS_AS(VectorIndex::load(dir), FormatError);
    }
    SUBCASE("manifest count disagrees with chunks") {
        std::string manifest = slurp(dir / "manifest.json");
        auto pos = manifest.find("\"count\": 4");
        REQUIRE(pos != std::string::npos);
        manifest.replace(pos, 10, "\"count\": 9");
        dump(dir / "manifest.json", manifest);
        CHECK_THROWS_AS(VectorIndex::load(dir), FormatError);
    }
    SUBCASE("unsupported format version") {
        std::string manifest = slurp(dir / "manifest.json");
        auto pos = manifest.find("\"format_version\": 1");
        REQUIRE(pos != std::string::npos);
        manifest.replace(pos, 19, "\"format_version\": 7");
        dump(dir / "manifest.json", manifest);
        CHECK_THROWS_AS(VectorIndex::load(dir), FormatError);
    }
    SUBCASE("truncated embedding payload") {
        std::string bytes = slurp(dir / "embeddings.bin");
        bytes.resize(bytes.size() - 4);
        dump(dir / "embeddings.bin", bytes);
        CHECK_THROWS_AS(VectorIndex::load(dir), FormatError);
    }
    SUBCASE("non unit row") {
        std::string bytes = slurp(dir / "embeddings.bin");
        // Stomp the first row with zeros; its norm is then far from 1.
        for (std::size_t i = 0; i < 8 * sizeof(float); ++i) {
            bytes[i] = '\0';
        }
        dump(dir / "embeddings.bin", bytes);
        CHECK_THROWS_AS(VectorIndex::load(dir), FormatError);
    }
    SUBCASE("malformed chunk line") {
        std::string chunks = slurp(dir / "chunks.jsonl");
        dump(dir / "chunks.jsonl", chunks + "{broken\n");
        CHECK_THROWS_AS(VectorIndex::load(dir), FormatError);
    }
    fs::remove_all(dir);
}

TEST_CASE("read_corpus_jsonl parses records and reports bad lines") {
    fs::path dir = fresh_dir("jsonl");
    fs::path good = dir / "corpus.jsonl";
    dump(good,
         "{\"id\": \"a\", \"text\": \"first\"}\n"
         "\n"
         "{\"id\": \"b\", \"text\": \"second\", \"title\": \"T\"}\n");
    std::vector<Chunk> corpus = read_corpus_jsonl(good);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].id == "a");
    CHECK(corpus[1].title == std::string("T"));

    fs::path bad = dir / "bad.jsonl";
    dump(bad, "{\"id\": \"a\", \"text\": \"ok\"}\n{oops}\n");
    CHECK_THROWS_WITH_AS(read_corpus_jsonl(bad), doctest::Contains("line 2"), FormatError);

    fs::path wrong_type = dir / "types.jsonl";
    dump(wrong_type, "{\"id\": 5, \"text\": \"ok\"}\n");
    CHECK_THROWS_AS(read_corpus_jsonl(wrong_type), FormatError);

    CHECK_THROWS_AS(read_corpus_jsonl(dir / "absent.jsonl"), FormatError);
    fs::remove_all(dir);
}
