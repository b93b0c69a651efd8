#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pairs/errors.hpp"
#include "pairs/retrieval.hpp"
#include "support/oracles.hpp"

using namespace pairs;

namespace {

VectorIndex planar_index() {
    std::vector<Chunk> chunks{
        {"a", "east", std::nullopt},
        {"b", "north", std::nullopt},
        {"c", "mostly north", std::nullopt},
        {"e", "mostly east", std::nullopt},
    };
    std::vector<EmbeddingVector> embs{
        EmbeddingVector::from_unit({1.0f, 0.0f}),
        EmbeddingVector::from_unit({0.0f, 1.0f}),
        EmbeddingVector::from_unit({0.6f, 0.8f}),
        EmbeddingVector::from_unit({0.8f, 0.6f}),
    };
    return VectorIndex::build(2, "unit-test", std::move(chunks), embs);
}

VectorIndex random_index(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> embs;
    for (std::size_t i = 0; i < count; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "c%04zu", i);
        chunks.push_back({id, "txt", std::nullopt});
        embs.push_back(oracles::random_unit(rng, dim));
    }
    return VectorIndex::build(dim, "unit-test", std::move(chunks), embs);
}

Candidate cand(std::string id, double s1, double s2) {
    return Candidate{std::move(id), "", s1, s2, 0.0};
}

std::vector<std::string> ids_of(const std::vector<Candidate>& cs) {
    std::vector<std::string> out;
    for (const Candidate& c : cs) {
        out.push_back(c.chunk_id);
    }
    return out;
}

// Reranker whose score is parsed out of the document text: "<q-score>|<p-score>".
// Which half it returns depends on the query string, so K(d, q) and K(d, p)
// can be dialed independently per candidate.
class SplitReranker final : public Reranker {
public:
    const std::string& id() const override {
        static const std::string kId = "test-split";
        return kId;
    }

    double score(const std::string& query, const std::string& document) const override {
        auto bar = document.find('|');
        REQUIRE(bar != std::string::npos);
        std::string half = query == "Q" ? document.substr(0, bar) : document.substr(bar + 1);
        return std::stod(half);
    }
};

}  // namespace

TEST_CASE("scorer names round trip") {
    CHECK(scorer_from_name("ais") == Scorer::ais);
    CHECK(scorer_from_name("additive") == Scorer::additive);
    CHECK(scorer_from_name("dynamic") == Scorer::dynamic);
    CHECK(scorer_from_name("rerank") == Scorer::rerank);
    for (Scorer s : {Scorer::ais, Scorer::additive, Scorer::dynamic, Scorer::rerank}) {
        CHECK(scorer_from_name(scorer_name(s)) == s);
    }
    CHECK_THROWS_AS(scorer_from_name("cosine"), ConfigError);
}

TEST_CASE("selection config bounds") {
    CHECK_NOTHROW(validate(SelectionConfig{5, 1, Scorer::ais, {}}));
    CHECK_NOTHROW(validate(SelectionConfig{5, 10, Scorer::ais, {}}));
    CHECK_THROWS_AS(validate(SelectionConfig{5, 0, Scorer::ais, {}}), ConfigError);
    CHECK_THROWS_AS(validate(SelectionConfig{5, 11, Scorer::ais, {}}), ConfigError);
    CHECK_THROWS_AS(validate(SelectionConfig{0, 1, Scorer::ais, {}}), ConfigError);
}

TEST_CASE("dual path union on hand-placed vectors") {
    VectorIndex index = planar_index();
    EmbeddingVector q = EmbeddingVector::from_unit({1.0f, 0.0f});
    EmbeddingVector p = EmbeddingVector::from_unit({0.0f, 1.0f});
    auto candidates = dual_path_retrieve(index, q, p, 1);
    REQUIRE(candidates.size() == 2);
    CHECK(candidates[0].chunk_id == "a");
    CHECK(candidates[0].s1 == doctest::Approx(1.0));
    CHECK(candidates[0].s2 == doctest::Approx(0.0));
    CHECK(candidates[0].text == "east");
    CHECK(candidates[1].chunk_id == "b");
    CHECK(candidates[1].s1 == doctest::Approx(0.0));
    CHECK(candidates[1].s2 == doctest::Approx(1.0));
}

TEST_CASE("dual path with identical probes collapses to one path") {
    VectorIndex index = planar_index();
    EmbeddingVector q = EmbeddingVector::from_unit({0.6f, 0.8f});
    auto candidates = dual_path_retrieve(index, q, q, 2);
    auto single = index.top_n(q, 2);
    REQUIRE(candidates.size() == 2);
    std::set<std::string> got;
    for (const Candidate& c : candidates) {
        CHECK(c.s1 == c.s2);
        got.insert(c.chunk_id);
    }
    for (const ScoredHit& hit : single) {
        CHECK(got.count(hit.chunk_id) == 1);
    }
}

TEST_CASE("dual path fills in the off-path similarity") {
    std::mt19937_64 rng(11);
    VectorIndex index = random_index(rng, 300, 10);
    for (int trial = 0; trial < 30; ++trial) {
        EmbeddingVector q = oracles::random_unit(rng, 10);
        EmbeddingVector p = oracles::random_unit(rng, 10);
        std::size_t n = 1 + rng() % 8;
        auto candidates = dual_path_retrieve(index, q, p, n);
        CHECK(candidates.size() <= 2 * n);
        CHECK(candidates.size() >= n);

        // Union of the two per-path oracles, no duplicates, sorted by id.
        std::set<std::string> expected;
        for (const auto& h : oracles::top_n_scan(index, q, n)) {
            expected.insert(h.chunk_id);
        }
        for (const auto& h : oracles::top_n_scan(index, p, n)) {
            expected.insert(h.chunk_id);
        }
        REQUIRE(candidates.size() == expected.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const Candidate& c = candidates[i];
            if (i > 0) {
                CHECK(candidates[i - 1].chunk_id < c.chunk_id);
            }
            CHECK(expected.count(c.chunk_id) == 1);
            auto pos = index.position_of(c.chunk_id);
            REQUIRE(pos.has_value());
            CHECK(c.s1 == doctest::Approx(oracles::dot(index.embedding_row(*pos), q.values()))
                              .epsilon(1e-9));
            CHECK(c.s2 == doctest::Approx(oracles::dot(index.embedding_row(*pos), p.values()))
                              .epsilon(1e-9));
        }
    }
}

TEST_CASE("dual path rejects bad arguments") {
    VectorIndex index = planar_index();
    EmbeddingVector q = EmbeddingVector::from_unit({1.0f, 0.0f});
    CHECK_THROWS_AS(dual_path_retrieve(index, q, q, 0), InvalidInputError);
    EmbeddingVector wide = EmbeddingVector::from_unit({1.0f, 0.0f, 0.0f});
    CHECK_THROWS_AS(dual_path_retrieve(index, wide, q, 1), InvalidInputError);
    CHECK_THROWS_AS(dual_path_retrieve(index, q, wide, 1), InvalidInputError);
}

TEST_CASE("select keeps the jointly relevant candidate") {
    // x is close to one probe only, y is reasonably close to both.
    std::vector<Candidate> in{cand("x", 0.8, 0.6), cand("y", 0.9, 0.9)};
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    SelectionConfig config{5, 1, Scorer::ais, {}};
    auto out = select(in, config, e, e);
    REQUIRE(out.size() == 1);
    CHECK(out[0].chunk_id == "y");
    CHECK(out[0].score == doctest::Approx(ais_score(0.9, 0.9)).epsilon(1e-12));
}

TEST_CASE("select orders best first and breaks ties by id") {
    std::vector<Candidate> in{
        cand("d", 0.5, 0.5), cand("b", 0.9, 0.1), cand("a", 0.5, 0.5), cand("c", 0.99, 0.98)};
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    SelectionConfig config{5, 4, Scorer::ais, {}};
    auto out = select(in, config, e, e);
    REQUIRE(out.size() == 4);
    // Angle sums: c 0.34 rad, b 1.92 rad, a and d 2.09 rad exactly tied.
    CHECK(out[0].chunk_id == "c");
    CHECK(out[1].chunk_id == "b");
    CHECK(out[2].chunk_id == "a");
    CHECK(out[3].chunk_id == "d");
    CHECK(out[2].score == out[3].score);
}

TEST_CASE("select truncates to k and accepts empty input") {
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    SelectionConfig config{5, 2, Scorer::ais, {}};
    std::vector<Candidate> in{cand("a", 0.1, 0.1), cand("b", 0.2, 0.2), cand("c", 0.3, 0.3)};
    auto out = select(in, config, e, e);
    REQUIRE(out.size() == 2);
    CHECK(out[0].chunk_id == "c");
    CHECK(out[1].chunk_id == "b");
    CHECK(select({}, config, e, e).empty());
}

TEST_CASE("select additive scorer ranks by plain sum") {
    std::vector<Candidate> in{cand("a", 0.9, 0.1), cand("b", 0.45, 0.5), cand("c", -0.2, 0.9)};
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    SelectionConfig config{5, 3, Scorer::additive, {}};
    auto out = select(in, config, e, e);
    CHECK(ids_of(out) == std::vector<std::string>{"a", "b", "c"});
    CHECK(out[0].score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("select matches the angle-sum reference on random inputs") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t count = 1 + rng() % 12;
        std::vector<Candidate> in;
        for (std::size_t i = 0; i < count; ++i) {
            in.push_back(cand("c" + std::to_string(100 + i), u(rng), u(rng)));
        }
        // Duplicate similarity pairs under later ids exercise tie handling.
        if (count >= 2) {
            in.push_back(cand("c" + std::to_string(100 + count), in[0].s1, in[0].s2));
        }
        std::size_t k = 1 + rng() % in.size();
        SelectionConfig config{std::max<std::size_t>(3, in.size()), k, Scorer::ais, {}};
        auto got = ids_of(select(in, config, e, e));
        auto want = oracles::ais_select_reference(in, k);
        CHECK(got == want);
    }
}

TEST_CASE("dynamic scorer ranks by the blended angle, ascending") {
    // Orthogonal probes so theta0 = pi/2 and alpha is fixed by the model.
    EmbeddingVector q = EmbeddingVector::from_unit({1.0f, 0.0f});
    EmbeddingVector p = EmbeddingVector::from_unit({0.0f, 1.0f});
    AlphaModel model = default_alpha_model();
    const double alpha = predict_alpha(std::acos(0.0), model);

    std::vector<Candidate> in{
        cand("a", std::cos(0.3), std::cos(0.7)),
        cand("b", std::cos(0.6), std::cos(0.2)),
        cand("c", std::cos(0.1), std::cos(1.4)),
    };
    SelectionConfig config{5, 3, Scorer::dynamic, model};
    auto out = select(in, config, q, p);
    REQUIRE(out.size() == 3);
    for (const Candidate& c : out) {
        double t1 = std::acos(std::clamp(c.s1, -1.0, 1.0));
        double t2 = std::acos(std::clamp(c.s2, -1.0, 1.0));
        CHECK(c.score == doctest::Approx(alpha * t1 + (1 - alpha) * t2).epsilon(1e-9));
    }
    CHECK(out[0].score <= out[1].score);
    CHECK(out[1].score <= out[2].score);
}

TEST_CASE("dynamic scorer with alpha one ranks by theta1 alone") {
    EmbeddingVector q = EmbeddingVector::from_unit({1.0f, 0.0f});
    // Slope 0, intercept 1: alpha pinned to 1 regardless of theta0.
    AlphaModel pinned{0.0, 1.0};
    std::vector<Candidate> in{
        cand("far", std::cos(1.2), std::cos(0.1)),
        cand("near", std::cos(0.2), std::cos(1.5)),
    };
    SelectionConfig config{5, 2, Scorer::dynamic, pinned};
    auto out = select(in, config, q, q);
    CHECK(ids_of(out) == std::vector<std::string>{"near", "far"});
}

TEST_CASE("dynamic scorer requires a model") {
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    SelectionConfig config{5, 1, Scorer::dynamic, {}};
    CHECK_THROWS_AS(select({cand("a", 0.5, 0.5)}, config, e, e), ConfigError);
}

TEST_CASE("select refuses the rerank scorer") {
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    SelectionConfig config{5, 1, Scorer::rerank, {}};
    CHECK_THROWS_AS(select({cand("a", 0.5, 0.5)}, config, e, e), ConfigError);
}

TEST_CASE("rerank_select sums both passes") {
    SplitReranker reranker;
    std::vector<Candidate> in{
        {"a", "0.9|0.4", 0, 0, 0},  // 1.3
        {"b", "0.2|0.2", 0, 0, 0},  // 0.4
        {"c", "0.5|0.6", 0, 0, 0},  // 1.1
    };
    auto out = rerank_select("Q", "P", in, reranker, 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0].chunk_id == "a");
    CHECK(out[0].score == doctest::Approx(1.3).epsilon(1e-9));
    CHECK(out[1].chunk_id == "c");
}

TEST_CASE("rerank fusion equals the additive scorer when K mirrors similarities") {
    // Encode each candidate's (s1, s2) into its text; the reranker then
    // returns exactly those values, so the fused ranking must match the
    // additive ranking of the same candidates.
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SplitReranker reranker;
    EmbeddingVector e = EmbeddingVector::from_unit({1.0f, 0.0f});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Candidate> in;
        std::size_t count = 2 + rng() % 8;
        for (std::size_t i = 0; i < count; ++i) {
            double s1 = u(rng);
            double s2 = u(rng);
            char text[64];
            std::snprintf(text, sizeof(text), "%.17g|%.17g", s1, s2);
            in.push_back({"c" + std::to_string(10 + i), text, s1, s2, 0.0});
        }
        std::size_t k = 1 + rng() % count;
        SelectionConfig additive{count, k, Scorer::additive, {}};
        CHECK(ids_of(rerank_select("Q", "P", in, reranker, k)) ==
              ids_of(select(in, additive, e, e)));
    }
}

TEST_CASE("rerank_select ties fall back to ascending id") {
    class Flat final : public Reranker {
    public:
        const std::string& id() const override {
            static const std::string kId = "test-flat";
            return kId;
        }
        double score(const std::string&, const std::string&) const override { return 0.25; }
    };
    Flat flat;
    std::vector<Candidate> in{cand("z", 0, 0), cand("a", 0, 0), cand("m", 0, 0)};
    auto out = rerank_select("Q", "P", in, flat, 3);
    CHECK(ids_of(out) == std::vector<std::string>{"a", "m", "z"});
}

TEST_CASE("rerank_select argument checks") {
    SplitReranker reranker;
    CHECK_THROWS_AS(rerank_select("Q", "P", {cand("a", 0, 0)}, reranker, 0), ConfigError);
    CHECK(rerank_select("Q", "P", {}, reranker, 3).empty());
}

TEST_CASE("rerank_select rejects a reranker that loses documents") {
    class Lossy final : public Reranker {
    public:
        const std::string& id() const override {
            static const std::string kId = "test-lossy";
            return kId;
        }
        double score(const std::string&, const std::string&) const override { return 0.0; }
        std::vector<double> score_batch(const std::string&,
                                        std::span<const std::string> docs) const override {
            return std::vector<double>(docs.size() / 2, 0.0);
        }
    };
    Lossy lossy;
    std::vector<Candidate> in{cand("a", 0, 0), cand("b", 0, 0)};
    CHECK_THROWS_AS(rerank_select("Q", "P", in, lossy, 1), ProtocolError);
}
