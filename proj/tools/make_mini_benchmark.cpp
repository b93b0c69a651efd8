// Generates data/mini: a 200-chunk corpus and 50 QA pairs wired to scripted
// providers, shaped so that 30 questions share a key token with their gt
// chunk (query path finds it) while 20 questions have a gt chunk with no
// token overlap at all, buried behind five key-bearing distractors (only the
// pseudo-context path finds it). The tool verifies those reachability
// properties against the real index before writing anything, so a drift in
// the embedder or the texts fails the build step instead of silently
// weakening the benchmark.
//
// Usage: make_mini_benchmark <output-dir>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pairs/index.hpp"
#include "pairs/pipeline.hpp"
#include "pairs/providers.hpp"
#include "pairs/retrieval.hpp"

using nlohmann::json;

namespace {

constexpr std::size_t kDimension = 256;
constexpr std::uint64_t kSeed = 7;
constexpr std::size_t kEasy = 30;
constexpr std::size_t kHard = 20;
constexpr std::size_t kDistractorsPerHard = 5;
constexpr std::size_t kFillers = 50;
constexpr std::size_t kDepth = 5;  // per-path n the benchmark is tuned for

struct Query {
    std::string id;
    std::string question;
    std::string answer;
    std::string gt_chunk_id;
    std::string gt_text;
    bool hard = false;
};

std::string key_token(std::size_t i) { return "qk" + std::to_string(i) + "z"; }
std::string gt_marker(std::size_t i) { return "gtm" + std::to_string(i) + "x"; }

int fail(const std::string& message) {
    std::cerr << "mini benchmark construction broken: " << message << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_mini_benchmark <output-dir>\n";
        return 2;
    }
    const std::filesystem::path out_dir = argv[1];

    std::vector<Query> queries;
    std::vector<pairs::Chunk> corpus;

    for (std::size_t i = 0; i < kEasy + kHard; ++i) {
        Query q;
        q.id = "mq" + std::to_string(100 + i);
        q.question = "what does " + key_token(i) + " mean";
        q.answer = "ans" + std::to_string(i) + "w";
        q.hard = i >= kEasy;
        if (!q.hard) {
            // Key token repeated so the query-path similarity clears the
            // noise floor of 200 random directions with a wide margin.
            q.gt_chunk_id = "mini-e" + std::to_string(i);
            q.gt_text = key_token(i) + " " + key_token(i) + " " + key_token(i) + " " +
                        gt_marker(i);
        } else {
            // No token shared with the question.
            std::string lonely = "lk" + std::to_string(i) + "m";
            q.gt_chunk_id = "mini-h" + std::to_string(i);
            q.gt_text = lonely + " " + lonely + " " + gt_marker(i);
        }
        corpus.push_back({q.gt_chunk_id, q.gt_text, std::nullopt});
        queries.push_back(std::move(q));
    }
    for (std::size_t i = kEasy; i < kEasy + kHard; ++i) {
        for (std::size_t d = 0; d < kDistractorsPerHard; ++d) {
            // Same repeated key token as the question, so each distractor
            // outranks the gt chunk on the query path.
            std::string text = key_token(i) + " " + key_token(i) + " " + key_token(i) +
                               " dst" + std::to_string(i) + "q" + std::to_string(d) + "y";
            corpus.push_back({"mini-h" + std::to_string(i) + "-d" + std::to_string(d),
                              text, std::nullopt});
        }
    }
    for (std::size_t i = 0; i < kFillers; ++i) {
        corpus.push_back({"mini-f" + std::to_string(i),
                          "flr" + std::to_string(i) + "p filler entry", std::nullopt});
    }

    auto embedder = pairs::token_hash_embedder(kDimension, kSeed);
    pairs::VectorIndex index = pairs::VectorIndex::ingest(corpus, *embedder);
    if (index.size() != 200) {
        return fail("expected 200 chunks, got " + std::to_string(index.size()));
    }

    // Scripted completions: the pseudo-context for each question is its gt
    // text verbatim, and any context containing a gt marker answers that
    // query. Everything else falls through to a wrong answer.
    std::vector<pairs::GeneratorRule> rules;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        rules.push_back({gt_marker(i), queries[i].answer});
    }
    for (const Query& q : queries) {
        rules.push_back({"Question: " + q.question + "\nPassage:", q.gt_text});
    }
    auto generator = pairs::table_generator(rules, "idk");

    // Reachability check, straight against the index the benchmark ships.
    for (const Query& q : queries) {
        pairs::EmbeddingVector q_emb = embedder->embed_one(q.question);
        pairs::EmbeddingVector p_emb = embedder->embed_one(q.gt_text);
        bool in_q_path = false;
        for (const pairs::ScoredHit& hit : index.top_n(q_emb, kDepth)) {
            in_q_path |= hit.chunk_id == q.gt_chunk_id;
        }
        bool in_p_path = false;
        for (const pairs::ScoredHit& hit : index.top_n(p_emb, kDepth)) {
            in_p_path |= hit.chunk_id == q.gt_chunk_id;
        }
        if (!in_p_path) {
            return fail(q.id + ": gt chunk must be reachable via the pseudo path");
        }
        if (q.hard && in_q_path) {
            return fail(q.id + ": gt chunk must NOT be query-path reachable");
        }
        if (!q.hard && !in_q_path) {
            return fail(q.id + ": gt chunk must be query-path reachable");
        }
    }

    // End-to-end check of the property the benchmark exists to demonstrate.
    pairs::Providers providers{embedder, generator, nullptr};
    pairs::PipelineConfig config;
    // k = 1 keeps the rendered context to a single document, so the scripted
    // marker rules can only ever see the one chunk each mode actually chose.
    config.selection.n = kDepth;
    config.selection.k = 1;
    std::size_t standard_hits = 0;
    std::size_t dpr_hits = 0;
    for (const Query& q : queries) {
        config.mode = pairs::Mode::standard;
        standard_hits += pairs::run_query(q.question, index, providers, config).answer ==
                         q.answer;
        config.mode = pairs::Mode::dpr_ais;
        dpr_hits += pairs::run_query(q.question, index, providers, config).answer == q.answer;
    }
    if (standard_hits != kEasy) {
        return fail("standard mode should answer exactly the easy queries, got " +
                    std::to_string(standard_hits));
    }
    if (dpr_hits != kEasy + kHard) {
        return fail("dpr-ais mode should answer every query, got " +
                    std::to_string(dpr_hits));
    }

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "corpus.jsonl", std::ios::binary | std::ios::trunc);
        for (const pairs::Chunk& chunk : corpus) {
            out << json{{"id", chunk.id}, {"text", chunk.text}}.dump() << "\n";
        }
    }
    {
        std::ofstream out(out_dir / "qa.jsonl", std::ios::binary | std::ios::trunc);
        for (const Query& q : queries) {
            out << json{{"id", q.id},
                        {"question", q.question},
                        {"answers", json::array({q.answer})},
                        {"gt_chunk_ids", json::array({q.gt_chunk_id})}}
                       .dump()
                << "\n";
        }
    }
    {
        json rule_doc = json::array();
        for (const pairs::GeneratorRule& rule : rules) {
            rule_doc.push_back({{"match", rule.match}, {"completion", rule.completion}});
        }
        std::ofstream out(out_dir / "generator_rules.json",
                          std::ios::binary | std::ios::trunc);
        out << rule_doc.dump(2) << "\n";
    }
    {
        json config_doc{
            {"n", kDepth},
            {"k", 1},
            {"providers",
             {{"embedder",
               {{"kind", "token-hash"}, {"dimension", kDimension}, {"seed", kSeed}}},
              {"generator",
               {{"kind", "table"},
                {"rules_path", "generator_rules.json"},
                {"fallback", "idk"}}}}},
        };
        std::ofstream out(out_dir / "config.json", std::ios::binary | std::ios::trunc);
        out << config_doc.dump(2) << "\n";
    }

    std::cout << "wrote " << corpus.size() << " chunks and " << queries.size()
              << " queries to " << out_dir << " (standard EM "
              << static_cast<double>(standard_hits) / queries.size() << ", dpr-ais EM "
              << static_cast<double>(dpr_hits) / queries.size() << ")\n";
    return 0;
}
