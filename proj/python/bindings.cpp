#include <memory>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "suggestkit/corpus.hpp"
#include "suggestkit/embedding.hpp"
#include "suggestkit/engine.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/evalkit.hpp"
#include "suggestkit/hashing.hpp"
#include "suggestkit/index.hpp"
#include "suggestkit/llm.hpp"

namespace py = pybind11;
using namespace suggestkit;

namespace {

// Corpus, local embedder and scripted provider bundled behind one handle.
class PyEngine {
public:
    PyEngine(Corpus corpus, std::map<std::string, std::string> script, bool strict)
        : chat_(std::move(script), strict) {
        kb_ = build_knowledge_base(std::move(corpus), embedder_);
    }

    EngineConfig config(const std::string& strategy, const std::string& order, std::size_t k_examples,
                        std::size_t k_contexts) const {
        EngineConfig c;
        switch (parse_strategy(strategy)) {
            case StrategyKind::ZeroShot: c.strategy = Strategy::zero_shot(); break;
            case StrategyKind::StaticFewShot: c.strategy = Strategy::static_few_shot({}); break;
            case StrategyKind::DynamicFewShot: c.strategy = Strategy::dynamic_few_shot(k_examples); break;
            case StrategyKind::DynamicContexts:
                c.strategy = Strategy::dynamic_contexts(k_examples, k_contexts);
                break;
        }
        c.order = parse_order(order);
        c.validate();
        return c;
    }

    py::dict prepare(const std::string& query, const std::string& strategy, const std::string& order,
                     std::size_t k_examples, std::size_t k_contexts) const {
        const auto p = prepare_prompt(config(strategy, order, k_examples, k_contexts), *kb_, embedder_, query);
        py::dict d;
        d["prompt"] = p.prompt.text;
        d["prompt_hash"] = to_hex(p.prompt.prompt_hash);
        d["trace_key"] = p.trace_key;
        d["examples"] = hits(p.example_hits);
        d["contexts"] = hits(p.context_hits);
        return d;
    }

    py::dict suggest(const std::string& query, const std::string& strategy, const std::string& order,
                     std::size_t k_examples, std::size_t k_contexts) const {
        const auto r = ::suggestkit::suggest(config(strategy, order, k_examples, k_contexts), *kb_,
                                             Providers{embedder_, chat_}, query);
        py::dict d;
        d["questions"] = r.suggestions.questions();
        d["prompt"] = r.prompt.text;
        d["prompt_hash"] = to_hex(r.prompt.prompt_hash);
        d["trace_key"] = r.trace_key;
        d["examples"] = hits(r.example_hits);
        d["contexts"] = hits(r.context_hits);
        return d;
    }

    py::dict answer(const std::string& query) const {
        const auto a = ::suggestkit::answer(*kb_, embedder_, query);
        py::dict d;
        d["id"] = a.document->id;
        d["headline"] = a.document->headline;
        d["body"] = a.document->body;
        d["score"] = a.score;
        return d;
    }

    const Corpus& corpus() const { return kb_->corpus(); }

private:
    static py::list hits(const std::vector<RetrievalHit>& hs) {
        py::list out;
        for (const auto& h : hs) out.append(py::make_tuple(h.item_id, h.score));
        return out;
    }

    LocalEmbedder embedder_;
    ScriptedProvider chat_;
    std::shared_ptr<const KnowledgeBase> kb_;
};

}  // namespace

PYBIND11_MODULE(_suggestkit, m) {
    m.doc() = "Retrieval-augmented suggested-question generation";

    py::exception<Error>(m, "SuggestkitError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object type = py::module_::import("suggestkit._suggestkit").attr("SuggestkitError");
            py::object exc = type(e.what());
            exc.attr("code") = std::string(error_code_name(e.code()));
            exc.attr("stage") = e.stage();
            PyErr_SetObject(type.ptr(), exc.ptr());
        }
    });

    py::class_<Document>(m, "Document")
        .def(py::init<>())
        .def_readwrite("id", &Document::id)
        .def_readwrite("headline", &Document::headline)
        .def_readwrite("body", &Document::body)
        .def_readwrite("tags", &Document::tags)
        .def("__repr__", [](const Document& d) { return "<Document " + d.id + ">"; });

    py::class_<QASExample>(m, "QASExample")
        .def(py::init<>())
        .def_readwrite("id", &QASExample::id)
        .def_readwrite("query", &QASExample::query)
        .def_readwrite("answer", &QASExample::answer)
        .def_readwrite("suggestions", &QASExample::suggestions)
        .def("__repr__", [](const QASExample& e) { return "<QASExample " + e.id + ">"; });

    py::class_<Corpus>(m, "Corpus")
        .def(py::init<>())
        .def_readwrite("documents", &Corpus::documents)
        .def_readwrite("examples", &Corpus::examples)
        .def("stats", [](const Corpus& c) {
            const auto s = corpus_stats(c);
            py::dict d;
            d["documents"] = s.documents;
            d["examples"] = s.examples;
            d["suggestions"] = s.suggestions;
            d["mean_body_length"] = s.mean_body_length;
            d["mean_headline_length"] = s.mean_headline_length;
            return d;
        });

    m.def("synth_corpus", &synth_corpus, py::arg("seed"), py::arg("n_docs"), py::arg("n_examples"));
    m.def("load_corpus", [](const std::string& docs, const std::string& examples) {
        return load_corpus(docs, examples);
    }, py::arg("documents_path"), py::arg("examples_path"));
    m.def("write_corpus", [](const Corpus& c, const std::string& dir) { write_corpus(c, dir); },
          py::arg("corpus"), py::arg("directory"));

    m.def("fnv1a64", [](py::bytes data) { return fnv1a64(std::string(data)); }, py::arg("data"));
    m.def("tokenize", &tokenize, py::arg("text"));
    m.def("embed_local", [](std::string_view text) { return embed_local(text).values; }, py::arg("text"));
    m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine(std::span<const double>(a), std::span<const double>(b));
    }, py::arg("a"), py::arg("b"));

    m.def("parse_suggestions", [](std::string_view raw) { return parse_suggestions(raw).questions(); },
          py::arg("raw"));
    m.def("check_age_consistency", [](std::string_view query, std::string_view question) {
        const auto c = eval::check_age_consistency(query, question);
        py::dict d;
        d["status"] = std::string(eval::age_status_name(c.status));
        d["details"] = c.details();
        return d;
    }, py::arg("query"), py::arg("question"));
    m.def("round_half_up_percent", &eval::round_half_up_percent, py::arg("count"), py::arg("total"));

    py::class_<PyEngine>(m, "Engine")
        .def(py::init<Corpus, std::map<std::string, std::string>, bool>(), py::arg("corpus"),
             py::arg("script") = std::map<std::string, std::string>{}, py::arg("strict") = true)
        .def_property_readonly("corpus", &PyEngine::corpus, py::return_value_policy::reference_internal)
        .def("prepare", &PyEngine::prepare, py::arg("query"), py::arg("strategy") = "dynamic-contexts",
             py::arg("order") = "query-first", py::arg("k_examples") = kDefaultExamples,
             py::arg("k_contexts") = kDefaultContexts)
        .def("suggest", &PyEngine::suggest, py::arg("query"), py::arg("strategy") = "dynamic-contexts",
             py::arg("order") = "query-first", py::arg("k_examples") = kDefaultExamples,
             py::arg("k_contexts") = kDefaultContexts)
        .def("answer", &PyEngine::answer, py::arg("query"));
}
