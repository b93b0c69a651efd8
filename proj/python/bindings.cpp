// Python surface for the pairs engine. The provider interfaces are exposed
// as abstract bases so python code can implement an embedder, generator, or
// reranker and hand it straight to run_query/run_batch. Those two release
// the GIL for the duration of the call; the trampolines below re-acquire it
// whenever the pipeline calls back into a python-implemented provider, which
// also keeps run_batch safe when its workers share one python provider.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairs/config.hpp"
#include "pairs/errors.hpp"
#include "pairs/eval.hpp"
#include "pairs/geometry.hpp"
#include "pairs/http_providers.hpp"
#include "pairs/index.hpp"
#include "pairs/pipeline.hpp"
#include "pairs/prompts.hpp"
#include "pairs/providers.hpp"
#include "pairs/retrieval.hpp"

namespace py = pybind11;

namespace {

class PyEmbedder : public pairs::Embedder {
public:
    const std::string& id() const override {
        py::gil_scoped_acquire gil;
        py::function fn = py::get_override(this, "id");
        if (!fn) {
            throw pairs::ConfigError("python Embedder must implement id()");
        }
        id_cache_ = fn().cast<std::string>();
        return id_cache_;
    }

    std::size_t dimension() const override {
        PYBIND11_OVERRIDE_PURE(std::size_t, pairs::Embedder, dimension, );
    }

    std::vector<pairs::EmbeddingVector> embed(
        std::span<const std::string> texts) const override {
        py::gil_scoped_acquire gil;
        py::function fn = py::get_override(this, "embed");
        if (!fn) {
            throw pairs::ConfigError("python Embedder must implement embed()");
        }
        const std::vector<std::string> batch(texts.begin(), texts.end());
        return fn(batch).cast<std::vector<pairs::EmbeddingVector>>();
    }

private:
    mutable std::string id_cache_;
};

class PyGenerator : public pairs::Generator {
public:
    const std::string& id() const override {
        py::gil_scoped_acquire gil;
        py::function fn = py::get_override(this, "id");
        if (!fn) {
            throw pairs::ConfigError("python Generator must implement id()");
        }
        id_cache_ = fn().cast<std::string>();
        return id_cache_;
    }

    std::string complete(const std::string& prompt) const override {
        PYBIND11_OVERRIDE_PURE(std::string, pairs::Generator, complete, prompt);
    }

private:
    mutable std::string id_cache_;
};

class PyReranker : public pairs::Reranker {
public:
    const std::string& id() const override {
        py::gil_scoped_acquire gil;
        py::function fn = py::get_override(this, "id");
        if (!fn) {
            throw pairs::ConfigError("python Reranker must implement id()");
        }
        id_cache_ = fn().cast<std::string>();
        return id_cache_;
    }

    double score(const std::string& query, const std::string& document) const override {
        PYBIND11_OVERRIDE_PURE(double, pairs::Reranker, score, query, document);
    }

    std::vector<double> score_batch(const std::string& query,
                                    std::span<const std::string> documents) const override {
        py::gil_scoped_acquire gil;
        py::function fn = py::get_override(this, "score_batch");
        if (fn) {
            const std::vector<std::string> docs(documents.begin(), documents.end());
            return fn(query, docs).cast<std::vector<double>>();
        }
        return pairs::Reranker::score_batch(query, documents);
    }

private:
    mutable std::string id_cache_;
};

std::vector<float> values_copy(const pairs::EmbeddingVector& v) {
    return {v.values().begin(), v.values().end()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "retrieval pipeline engine with a parametric-verification gate";

    // base first: pybind tries translators newest-first, so derived classes
    // registered later win over their bases
    auto exc_error = py::register_exception<pairs::Error>(m, "Error");
    auto exc_invalid =
        py::register_exception<pairs::InvalidInputError>(m, "InvalidInputError", exc_error);
    py::register_exception<pairs::DegenerateInputError>(m, "DegenerateInputError", exc_invalid);
    py::register_exception<pairs::ConfigError>(m, "ConfigError", exc_error);
    py::register_exception<pairs::IngestError>(m, "IngestError", exc_error);
    py::register_exception<pairs::FormatError>(m, "FormatError", exc_error);
    auto exc_provider =
        py::register_exception<pairs::ProviderError>(m, "ProviderError", exc_error);
    py::register_exception<pairs::ProtocolError>(m, "ProtocolError", exc_provider);

    // ---- geometry ----------------------------------------------------

    py::class_<pairs::EmbeddingVector>(m, "EmbeddingVector")
        .def_property_readonly("dimension", &pairs::EmbeddingVector::dimension)
        .def("values", &values_copy)
        .def("__len__", &pairs::EmbeddingVector::dimension)
        .def("__repr__", [](const pairs::EmbeddingVector& v) {
            return "EmbeddingVector(dimension=" + std::to_string(v.dimension()) + ")";
        });

    m.def(
        "normalize",
        [](const std::vector<double>& values) {
            return pairs::normalize(std::span<const double>(values));
        },
        py::arg("values"), "Unit-normalize a raw vector (float32 storage).");
    m.def(
        "from_unit",
        [](std::vector<float> values) {
            return pairs::EmbeddingVector::from_unit(std::move(values));
        },
        py::arg("values"), "Wrap an already unit-norm vector; validates the norm.");
    m.def("inner_product",
          py::overload_cast<const pairs::EmbeddingVector&, const pairs::EmbeddingVector&>(
              &pairs::inner_product),
          py::arg("a"), py::arg("b"));
    m.def("angle", &pairs::angle, py::arg("a"), py::arg("b"));
    m.def("ais_score", &pairs::ais_score, py::arg("s1"), py::arg("s2"),
          "cos(theta1 + theta2) computed from the two cosines directly.");
    m.def("alpha_from_angles", &pairs::alpha_from_angles, py::arg("theta1"), py::arg("theta2"));
    m.def("dynamic_angle", &pairs::dynamic_angle, py::arg("alpha"), py::arg("theta1"),
          py::arg("theta2"));

    py::class_<pairs::AlphaModel>(m, "AlphaModel")
        .def(py::init([](double slope, double intercept) {
                 return pairs::AlphaModel{slope, intercept};
             }),
             py::arg("slope") = 0.0, py::arg("intercept") = 0.0)
        .def_readwrite("slope", &pairs::AlphaModel::slope)
        .def_readwrite("intercept", &pairs::AlphaModel::intercept)
        .def("__repr__", [](const pairs::AlphaModel& a) {
            return "AlphaModel(slope=" + std::to_string(a.slope) +
                   ", intercept=" + std::to_string(a.intercept) + ")";
        });

    py::class_<pairs::AngleSample>(m, "AngleSample")
        .def(py::init([](double theta0, double theta1, double theta2, double alpha) {
                 return pairs::AngleSample{theta0, theta1, theta2, alpha};
             }),
             py::arg("theta0") = 0.0, py::arg("theta1") = 0.0, py::arg("theta2") = 0.0,
             py::arg("alpha") = 0.0)
        .def_readwrite("theta0", &pairs::AngleSample::theta0)
        .def_readwrite("theta1", &pairs::AngleSample::theta1)
        .def_readwrite("theta2", &pairs::AngleSample::theta2)
        .def_readwrite("alpha", &pairs::AngleSample::alpha);

    m.def("default_alpha_model", &pairs::default_alpha_model);
    m.def("predict_alpha", &pairs::predict_alpha, py::arg("theta0"), py::arg("model"));
    m.def(
        "fit_alpha_model",
        [](const std::vector<pairs::AngleSample>& samples) {
            return pairs::fit_alpha_model(samples);
        },
        py::arg("samples"));
    m.def(
        "r_squared",
        [](const std::vector<pairs::AngleSample>& samples, const pairs::AlphaModel& model) {
            return pairs::r_squared(samples, model);
        },
        py::arg("samples"), py::arg("model"));

    // ---- providers ---------------------------------------------------

    py::class_<pairs::Embedder, PyEmbedder, std::shared_ptr<pairs::Embedder>>(m, "Embedder")
        .def(py::init<>())
        .def("id", [](const pairs::Embedder& e) { return e.id(); })
        .def("dimension", &pairs::Embedder::dimension)
        .def(
            "embed",
            [](const pairs::Embedder& e, const std::vector<std::string>& texts) {
                return e.embed(texts);
            },
            py::arg("texts"))
        .def("embed_one", &pairs::Embedder::embed_one, py::arg("text"));

    py::class_<pairs::Generator, PyGenerator, std::shared_ptr<pairs::Generator>>(m, "Generator")
        .def(py::init<>())
        .def("id", [](const pairs::Generator& g) { return g.id(); })
        .def("complete", &pairs::Generator::complete, py::arg("prompt"));

    py::class_<pairs::Reranker, PyReranker, std::shared_ptr<pairs::Reranker>>(m, "Reranker")
        .def(py::init<>())
        .def("id", [](const pairs::Reranker& r) { return r.id(); })
        .def("score", &pairs::Reranker::score, py::arg("query"), py::arg("document"))
        .def(
            "score_batch",
            [](const pairs::Reranker& r, const std::string& query,
               const std::vector<std::string>& documents) {
                return r.score_batch(query, documents);
            },
            py::arg("query"), py::arg("documents"));

    py::class_<pairs::GeneratorRule>(m, "GeneratorRule")
        .def(py::init([](std::string match, std::string completion) {
                 return pairs::GeneratorRule{std::move(match), std::move(completion)};
             }),
             py::arg("match"), py::arg("completion"))
        .def_readwrite("match", &pairs::GeneratorRule::match)
        .def_readwrite("completion", &pairs::GeneratorRule::completion);

    m.def("hash_embedder", &pairs::hash_embedder, py::arg("dimension"), py::arg("seed"));
    m.def("token_hash_embedder", &pairs::token_hash_embedder, py::arg("dimension"),
          py::arg("seed"));
    m.def("table_generator", &pairs::table_generator, py::arg("rules"), py::arg("fallback"));
    m.def("token_overlap_reranker", &pairs::token_overlap_reranker);

    py::class_<pairs::HttpProviderConfig>(m, "HttpProviderConfig")
        .def(py::init<>())
        .def_readwrite("base_url", &pairs::HttpProviderConfig::base_url)
        .def_readwrite("model", &pairs::HttpProviderConfig::model)
        .def_readwrite("api_key_env", &pairs::HttpProviderConfig::api_key_env)
        .def_readwrite("dimension", &pairs::HttpProviderConfig::dimension)
        .def_readwrite("batch_size", &pairs::HttpProviderConfig::batch_size)
        .def_readwrite("max_attempts", &pairs::HttpProviderConfig::max_attempts)
        .def_readwrite("connect_timeout_seconds",
                       &pairs::HttpProviderConfig::connect_timeout_seconds)
        .def_readwrite("read_timeout_seconds", &pairs::HttpProviderConfig::read_timeout_seconds)
        .def_readwrite("max_in_flight", &pairs::HttpProviderConfig::max_in_flight);

    m.def("http_embedder", &pairs::http_embedder, py::arg("config"));
    m.def("http_generator", &pairs::http_generator, py::arg("config"));
    m.def("http_reranker", &pairs::http_reranker, py::arg("config"));

    // ---- index -------------------------------------------------------

    py::class_<pairs::Chunk>(m, "Chunk")
        .def(py::init([](std::string id, std::string text, std::optional<std::string> title) {
                 return pairs::Chunk{std::move(id), std::move(text), std::move(title)};
             }),
             py::arg("id"), py::arg("text"), py::arg("title") = std::nullopt)
        .def_readwrite("id", &pairs::Chunk::id)
        .def_readwrite("text", &pairs::Chunk::text)
        .def_readwrite("title", &pairs::Chunk::title);

    py::class_<pairs::ScoredHit>(m, "ScoredHit")
        .def_readonly("chunk_id", &pairs::ScoredHit::chunk_id)
        .def_readonly("similarity", &pairs::ScoredHit::similarity)
        .def("__repr__", [](const pairs::ScoredHit& h) {
            return "ScoredHit(" + h.chunk_id + ", " + std::to_string(h.similarity) + ")";
        });

    py::enum_<pairs::ChunkingPolicy::Kind>(m, "ChunkingKind")
        .value("passthrough", pairs::ChunkingPolicy::Kind::passthrough)
        .value("fixed_window", pairs::ChunkingPolicy::Kind::fixed_window);

    py::class_<pairs::ChunkingPolicy>(m, "ChunkingPolicy")
        .def(py::init<>())
        .def_readwrite("kind", &pairs::ChunkingPolicy::kind)
        .def_readwrite("window_words", &pairs::ChunkingPolicy::window_words)
        .def_readwrite("overlap_words", &pairs::ChunkingPolicy::overlap_words);

    py::class_<pairs::VectorIndex>(m, "VectorIndex")
        .def_static(
            "ingest",
            [](const std::vector<pairs::Chunk>& corpus, const pairs::Embedder& embedder,
               std::optional<pairs::ChunkingPolicy> chunking) {
                return pairs::VectorIndex::ingest(corpus, embedder,
                                                  chunking.value_or(pairs::ChunkingPolicy{}));
            },
            py::arg("corpus"), py::arg("embedder"), py::arg("chunking") = std::nullopt,
            py::call_guard<py::gil_scoped_release>())
        .def_static(
            "build",
            [](std::size_t dimension, std::string embedder_id, std::vector<pairs::Chunk> chunks,
               const std::vector<pairs::EmbeddingVector>& embeddings) {
                return pairs::VectorIndex::build(dimension, std::move(embedder_id),
                                                 std::move(chunks), embeddings);
            },
            py::arg("dimension"), py::arg("embedder_id"), py::arg("chunks"),
            py::arg("embeddings"))
        .def_static("load", &pairs::VectorIndex::load, py::arg("dir"))
        .def("save", &pairs::VectorIndex::save, py::arg("dir"))
        .def("top_n", &pairs::VectorIndex::top_n, py::arg("probe"), py::arg("n"),
             py::call_guard<py::gil_scoped_release>())
        .def("__len__", &pairs::VectorIndex::size)
        .def_property_readonly("size", &pairs::VectorIndex::size)
        .def_property_readonly("dimension", &pairs::VectorIndex::dimension)
        .def_property_readonly("embedder_id", &pairs::VectorIndex::embedder_id)
        .def("chunk_at", &pairs::VectorIndex::chunk_at, py::arg("position"))
        .def(
            "embedding_row",
            [](const pairs::VectorIndex& index, std::size_t position) {
                const auto row = index.embedding_row(position);
                return std::vector<float>(row.begin(), row.end());
            },
            py::arg("position"))
        .def("position_of", &pairs::VectorIndex::position_of, py::arg("chunk_id"))
        .def("probe_count", &pairs::VectorIndex::probe_count)
        .def("reset_probe_count", &pairs::VectorIndex::reset_probe_count);

    m.def(
        "apply_chunking",
        [](const std::vector<pairs::Chunk>& corpus, const pairs::ChunkingPolicy& policy) {
            return pairs::apply_chunking(corpus, policy);
        },
        py::arg("corpus"), py::arg("policy"));
    m.def("read_corpus_jsonl", &pairs::read_corpus_jsonl, py::arg("path"));

    // ---- retrieval and selection --------------------------------------

    py::class_<pairs::Candidate>(m, "Candidate")
        .def(py::init([](std::string chunk_id, std::string text, double s1, double s2) {
                 pairs::Candidate c;
                 c.chunk_id = std::move(chunk_id);
                 c.text = std::move(text);
                 c.s1 = s1;
                 c.s2 = s2;
                 return c;
             }),
             py::arg("chunk_id"), py::arg("text") = "", py::arg("s1") = 0.0,
             py::arg("s2") = 0.0)
        .def_readwrite("chunk_id", &pairs::Candidate::chunk_id)
        .def_readwrite("text", &pairs::Candidate::text)
        .def_readwrite("s1", &pairs::Candidate::s1)
        .def_readwrite("s2", &pairs::Candidate::s2)
        .def_readwrite("score", &pairs::Candidate::score)
        .def("__repr__", [](const pairs::Candidate& c) {
            return "Candidate(" + c.chunk_id + ", s1=" + std::to_string(c.s1) +
                   ", s2=" + std::to_string(c.s2) + ")";
        });

    py::enum_<pairs::Scorer>(m, "Scorer")
        .value("ais", pairs::Scorer::ais)
        .value("additive", pairs::Scorer::additive)
        .value("dynamic", pairs::Scorer::dynamic)
        .value("rerank", pairs::Scorer::rerank);

    py::class_<pairs::SelectionConfig>(m, "SelectionConfig")
        .def(py::init<>())
        .def_readwrite("n", &pairs::SelectionConfig::n)
        .def_readwrite("k", &pairs::SelectionConfig::k)
        .def_readwrite("scorer", &pairs::SelectionConfig::scorer)
        .def_readwrite("alpha_model", &pairs::SelectionConfig::alpha_model);

    m.def(
        "validate_selection",
        [](const pairs::SelectionConfig& config) { pairs::validate(config); },
        py::arg("config"));
    m.def("dual_path_retrieve", &pairs::dual_path_retrieve, py::arg("index"), py::arg("q_emb"),
          py::arg("p_emb"), py::arg("n"), py::call_guard<py::gil_scoped_release>());
    m.def("select", &pairs::select, py::arg("candidates"), py::arg("config"), py::arg("q_emb"),
          py::arg("p_emb"));
    m.def("rerank_select", &pairs::rerank_select, py::arg("q_text"), py::arg("p_text"),
          py::arg("candidates"), py::arg("reranker"), py::arg("k"));

    // ---- prompts -------------------------------------------------------

    py::class_<pairs::PromptTemplates>(m, "PromptTemplates")
        .def(py::init<>())
        .def_readwrite("pseudo_context", &pairs::PromptTemplates::pseudo_context)
        .def_readwrite("direct_answer", &pairs::PromptTemplates::direct_answer)
        .def_readwrite("context_answer", &pairs::PromptTemplates::context_answer);

    m.def("default_templates", &pairs::default_templates);
    m.def("load_templates", &pairs::load_templates, py::arg("dir"));
    m.def("render_question_prompt", &pairs::render_question_prompt, py::arg("template"),
          py::arg("question"));
    m.def("render_context_prompt", &pairs::render_context_prompt, py::arg("template"),
          py::arg("question"), py::arg("context"));

    // ---- pipeline ------------------------------------------------------

    py::enum_<pairs::Mode>(m, "Mode")
        .value("no_retrieval", pairs::Mode::no_retrieval)
        .value("standard", pairs::Mode::standard)
        .value("pairs", pairs::Mode::pairs)
        .value("dpr_ais", pairs::Mode::dpr_ais)
        .value("dpr_ais_dynamic", pairs::Mode::dpr_ais_dynamic)
        .value("dpr_ais_rerank", pairs::Mode::dpr_ais_rerank);

    py::enum_<pairs::AgreementMode>(m, "AgreementMode")
        .value("normalized_exact", pairs::AgreementMode::normalized_exact)
        .value("token_f1_threshold", pairs::AgreementMode::token_f1_threshold);

    py::class_<pairs::AgreementPolicy>(m, "AgreementPolicy")
        .def(py::init<>())
        .def_readwrite("mode", &pairs::AgreementPolicy::mode)
        .def_readwrite("threshold", &pairs::AgreementPolicy::threshold);

    m.def("answers_agree", &pairs::answers_agree, py::arg("a1"), py::arg("a2"),
          py::arg("policy"));
    m.def("numeric_guard", &pairs::numeric_guard, py::arg("answer"),
          "True iff the answer contains an ASCII decimal digit.");

    py::class_<pairs::GateOutcome>(m, "GateOutcome")
        .def_readonly("direct_answer", &pairs::GateOutcome::direct_answer)
        .def_readonly("pseudo_context", &pairs::GateOutcome::pseudo_context)
        .def_readonly("context_answer", &pairs::GateOutcome::context_answer)
        .def_readonly("agreed", &pairs::GateOutcome::agreed)
        .def_readonly("numeric_guard_tripped", &pairs::GateOutcome::numeric_guard_tripped);

    py::class_<pairs::Providers>(m, "Providers")
        // keep_alive pins the python-side provider objects to this Providers
        // instance; without it a python-subclassed provider passed as a
        // temporary loses its overrides once the GC runs
        .def(py::init([](std::shared_ptr<pairs::Embedder> embedder,
                         std::shared_ptr<pairs::Generator> generator,
                         std::shared_ptr<pairs::Reranker> reranker) {
                 return pairs::Providers{std::move(embedder), std::move(generator),
                                         std::move(reranker)};
             }),
             py::arg("embedder") = nullptr, py::arg("generator") = nullptr,
             py::arg("reranker") = nullptr, py::keep_alive<1, 2>(), py::keep_alive<1, 3>(),
             py::keep_alive<1, 4>())
        .def_readwrite("embedder", &pairs::Providers::embedder)
        .def_readwrite("generator", &pairs::Providers::generator)
        .def_readwrite("reranker", &pairs::Providers::reranker);

    py::class_<pairs::PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("mode", &pairs::PipelineConfig::mode)
        .def_readwrite("selection", &pairs::PipelineConfig::selection)
        .def_readwrite("agreement", &pairs::PipelineConfig::agreement)
        .def_readwrite("exclude_num", &pairs::PipelineConfig::exclude_num)
        .def_readwrite("templates", &pairs::PipelineConfig::templates)
        .def_readwrite("parallelism", &pairs::PipelineConfig::parallelism);

    py::class_<pairs::QueryResult>(m, "QueryResult")
        .def_readonly("question", &pairs::QueryResult::question)
        .def_readonly("answer", &pairs::QueryResult::answer)
        .def_readonly("retrieval_activated", &pairs::QueryResult::retrieval_activated)
        .def_readonly("selected", &pairs::QueryResult::selected)
        .def_readonly("gate", &pairs::QueryResult::gate)
        .def_readonly("mode", &pairs::QueryResult::mode)
        .def("selected_chunk_ids", &pairs::QueryResult::selected_chunk_ids)
        .def(
            "to_json",
            [](const pairs::QueryResult& r, int indent) { return to_json_string(r, indent); },
            py::arg("indent") = -1);

    m.def("generate_pseudo_context", &pairs::generate_pseudo_context, py::arg("question"),
          py::arg("generator"), py::arg("templates"),
          py::call_guard<py::gil_scoped_release>());
    m.def("answer_direct", &pairs::answer_direct, py::arg("question"), py::arg("generator"),
          py::arg("templates"), py::call_guard<py::gil_scoped_release>());
    m.def("answer_with_context", &pairs::answer_with_context, py::arg("question"),
          py::arg("context"), py::arg("generator"), py::arg("templates"),
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "join_context",
        [](const std::vector<pairs::Candidate>& selected) {
            return pairs::join_context(selected);
        },
        py::arg("selected"));
    m.def("run_query", &pairs::run_query, py::arg("question"), py::arg("index"),
          py::arg("providers"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "run_batch",
        [](const std::vector<std::string>& questions, const pairs::VectorIndex& index,
           const pairs::Providers& providers, const pairs::PipelineConfig& config) {
            return pairs::run_batch(questions, index, providers, config);
        },
        py::arg("questions"), py::arg("index"), py::arg("providers"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

    // ---- evaluation ------------------------------------------------------

    py::class_<pairs::QARecord>(m, "QARecord")
        .def(py::init([](std::string id, std::string question, std::vector<std::string> answers,
                         std::vector<std::string> gt_chunk_ids) {
                 return pairs::QARecord{std::move(id), std::move(question), std::move(answers),
                                        std::move(gt_chunk_ids)};
             }),
             py::arg("id"), py::arg("question"), py::arg("answers"),
             py::arg("gt_chunk_ids") = std::vector<std::string>{})
        .def_readwrite("id", &pairs::QARecord::id)
        .def_readwrite("question", &pairs::QARecord::question)
        .def_readwrite("answers", &pairs::QARecord::answers)
        .def_readwrite("gt_chunk_ids", &pairs::QARecord::gt_chunk_ids);

    m.def("normalize_answer", &pairs::normalize_answer, py::arg("s"));
    m.def("token_f1", &pairs::token_f1, py::arg("a"), py::arg("b"));
    m.def(
        "exact_match",
        [](const std::string& pred, const std::vector<std::string>& golds) {
            return pairs::exact_match(pred, golds);
        },
        py::arg("pred"), py::arg("golds"));
    m.def(
        "f1_score",
        [](const std::string& pred, const std::vector<std::string>& golds) {
            return pairs::f1_score(pred, golds);
        },
        py::arg("pred"), py::arg("golds"));

    py::class_<pairs::PerQueryRow>(m, "PerQueryRow")
        .def_readonly("id", &pairs::PerQueryRow::id)
        .def_readonly("em", &pairs::PerQueryRow::em)
        .def_readonly("f1", &pairs::PerQueryRow::f1)
        .def_readonly("retrieval_activated", &pairs::PerQueryRow::retrieval_activated);

    py::class_<pairs::RunAggregate>(m, "RunAggregate")
        .def_readonly("em_mean", &pairs::RunAggregate::em_mean)
        .def_readonly("f1_mean", &pairs::RunAggregate::f1_mean)
        .def_readonly("ra_ratio", &pairs::RunAggregate::ra_ratio);

    py::class_<pairs::RunReport>(m, "RunReport")
        .def_readonly("per_query", &pairs::RunReport::per_query)
        .def_readonly("aggregate", &pairs::RunReport::aggregate);

    m.def(
        "evaluate_run",
        [](const std::vector<pairs::QARecord>& dataset,
           const std::vector<pairs::QueryResult>& results) {
            return pairs::evaluate_run(dataset, results);
        },
        py::arg("dataset"), py::arg("results"));
    m.def("summary_line", &pairs::summary_line, py::arg("aggregate"));
    m.def("read_qa_dataset", &pairs::read_qa_dataset, py::arg("path"));
    m.def(
        "write_run_report",
        [](const pairs::RunReport& report, const std::filesystem::path& out_dir,
           bool deterministic) { pairs::write_run_report(report, out_dir, deterministic); },
        py::arg("report"), py::arg("out_dir"), py::arg("deterministic") = false);

    py::class_<pairs::AngleIssue>(m, "AngleIssue")
        .def_readonly("query_id", &pairs::AngleIssue::query_id)
        .def_readonly("chunk_id", &pairs::AngleIssue::chunk_id)
        .def_readonly("reason", &pairs::AngleIssue::reason);

    py::class_<pairs::AngleAnalysis>(m, "AngleAnalysis")
        .def_readonly("samples", &pairs::AngleAnalysis::samples)
        .def_readonly("issues", &pairs::AngleAnalysis::issues);

    m.def(
        "analyze_angles",
        [](const std::vector<pairs::QARecord>& dataset, const pairs::VectorIndex& index,
           const pairs::Generator& generator, const pairs::Embedder& embedder,
           const pairs::PromptTemplates& templates) {
            return pairs::analyze_angles(dataset, index, generator, embedder, templates);
        },
        py::arg("dataset"), py::arg("index"), py::arg("generator"), py::arg("embedder"),
        py::arg("templates"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "write_angle_csv",
        [](const std::vector<pairs::AngleSample>& samples, const std::filesystem::path& path) {
            pairs::write_angle_csv(samples, path);
        },
        py::arg("samples"), py::arg("path"));
    m.def("read_angle_csv", &pairs::read_angle_csv, py::arg("path"));

    // ---- configuration ---------------------------------------------------

    py::class_<pairs::ConfigOverrides>(m, "ConfigOverrides")
        .def(py::init<>())
        .def_readwrite("mode", &pairs::ConfigOverrides::mode)
        .def_readwrite("n", &pairs::ConfigOverrides::n)
        .def_readwrite("k", &pairs::ConfigOverrides::k)
        .def_readwrite("scorer", &pairs::ConfigOverrides::scorer)
        .def_readwrite("agreement_mode", &pairs::ConfigOverrides::agreement_mode)
        .def_readwrite("agreement_threshold", &pairs::ConfigOverrides::agreement_threshold)
        .def_readwrite("exclude_num", &pairs::ConfigOverrides::exclude_num)
        .def_readwrite("parallelism", &pairs::ConfigOverrides::parallelism)
        .def_readwrite("alpha_slope", &pairs::ConfigOverrides::alpha_slope)
        .def_readwrite("alpha_intercept", &pairs::ConfigOverrides::alpha_intercept)
        .def_readwrite("templates_dir", &pairs::ConfigOverrides::templates_dir)
        .def_readwrite("embedder_spec", &pairs::ConfigOverrides::embedder_spec);

    py::class_<pairs::EngineSetup>(m, "EngineSetup")
        .def_readwrite("pipeline", &pairs::EngineSetup::pipeline)
        .def_readwrite("providers", &pairs::EngineSetup::providers);

    m.def(
        "load_engine_setup",
        [](const std::optional<std::filesystem::path>& config_path,
           std::optional<pairs::ConfigOverrides> overrides) {
            return pairs::load_engine_setup(config_path,
                                            overrides.value_or(pairs::ConfigOverrides{}));
        },
        py::arg("config_path") = std::nullopt, py::arg("overrides") = std::nullopt);
    m.def("embedder_from_spec", &pairs::embedder_from_spec, py::arg("spec"));
}
