#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dataemb/cli.hpp"
#include "dataemb/conllu.hpp"
#include "dataemb/error.hpp"
#include "dataemb/harness.hpp"
#include "dataemb/metrics.hpp"
#include "dataemb/synth.hpp"

namespace py = pybind11;
using namespace dataemb;

namespace {

std::vector<SynthCorpus> synth_corpora(const std::string& kind, std::uint64_t seed, std::size_t train,
                                       std::size_t dev) {
  if (kind == "ambiguity") {
    AmbiguityConfig cfg;
    cfg.seed = seed;
    cfg.train_sentences = train;
    cfg.dev_sentences = cfg.test_sentences = dev;
    return {make_ambiguity_corpus(cfg)};
  }
  if (kind == "mixture") {
    MixtureConfig cfg;
    cfg.seed = seed;
    cfg.train_sentences = train;
    cfg.dev_sentences = cfg.test_sentences = dev;
    return {make_mixture_corpus(cfg)};
  }
  throw UsageError("unknown corpus kind: " + kind);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto error = py::register_exception<Error>(m, "Error");
  // Subclasses are registered after the base so the most derived type wins.
  py::register_exception<UsageError>(m, "UsageError", error.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", data.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());

  py::class_<Token>(m, "Token")
      .def(py::init<>())
      .def_readwrite("id", &Token::id)
      .def_readwrite("form", &Token::form)
      .def_readwrite("lemma", &Token::lemma)
      .def_readwrite("upos", &Token::upos)
      .def_readwrite("xpos", &Token::xpos)
      .def_readwrite("feats", &Token::morph)
      .def_readwrite("head", &Token::head)
      .def_readwrite("deprel", &Token::deprel)
      .def_readwrite("deps", &Token::deps)
      .def_readwrite("misc", &Token::misc)
      .def("__eq__", [](const Token& a, const Token& b) { return a == b; })
      .def("__repr__", [](const Token& t) { return "<Token " + std::to_string(t.id) + " " + t.form + ">"; });

  py::class_<Sentence>(m, "Sentence")
      .def(py::init<>())
      .def_readwrite("tokens", &Sentence::tokens)
      .def_readwrite("comments", &Sentence::comments)
      .def_readwrite("source_id", &Sentence::source_id)
      .def_readwrite("predicted_source_id", &Sentence::predicted_source_id)
      .def_property_readonly("text", &Sentence::text)
      .def("__len__", &Sentence::size);

  py::class_<Treebank>(m, "Treebank")
      .def(py::init<>())
      .def_readwrite("source_id", &Treebank::source_id)
      .def_readwrite("sentences", &Treebank::sentences)
      .def_readonly("word_count", &Treebank::word_count)
      .def_property(
          "split", [](const Treebank& tb) { return to_string(tb.split); },
          [](Treebank& tb, const std::string& s) { tb.split = split_from_string(s); })
      .def("recount", &Treebank::recount)
      .def("__len__", [](const Treebank& tb) { return tb.sentences.size(); });

  py::class_<EvalResult>(m, "EvalResult")
      .def_readonly("metric", &EvalResult::metric)
      .def_readonly("value", &EvalResult::value)
      .def_readonly("correct", &EvalResult::correct)
      .def_readonly("total", &EvalResult::total)
      .def("__repr__", [](const EvalResult& r) {
        return "<EvalResult " + r.metric + "=" + std::to_string(r.value) + ">";
      });

  m.def(
      "parse_conllu",
      [](const std::string& text, const std::string& source_id, const std::string& split) {
        return parse_conllu(text, source_id, split_from_string(split));
      },
      py::arg("text"), py::arg("source_id") = "", py::arg("split") = "train");
  m.def(
      "read_conllu",
      [](const std::string& path, const std::string& source_id, const std::string& split) {
        return read_conllu_file(path, source_id, split_from_string(split));
      },
      py::arg("path"), py::arg("source_id") = "", py::arg("split") = "train");
  m.def("write_conllu", &write_conllu, py::arg("treebank"), py::arg("embed_source") = false);

  m.def(
      "evaluate",
      [](const std::string& metric, const Treebank& gold, const Treebank& pred) {
        return evaluate(metric, gold, pred);
      },
      py::arg("metric"), py::arg("gold"), py::arg("pred"));

  m.def(
      "pca_project",
      [](const std::vector<std::string>& names, const std::vector<std::vector<double>>& rows) {
        const PcaResult r = pca_project(names, rows);
        py::dict out;
        out["names"] = r.names;
        out["coords"] = r.coords;
        out["eigenvalues"] = r.eigenvalues;
        out["components"] = r.components;
        return out;
      },
      py::arg("names"), py::arg("rows"));

  m.def(
      "write_synthetic",
      [](const std::string& kind, const std::string& dir, std::uint64_t seed, std::size_t train, std::size_t dev) {
        write_corpora(synth_corpora(kind, seed, train, dev), dir);
      },
      py::arg("kind"), py::arg("dir"), py::arg("seed") = 7, py::arg("train_sentences") = 200,
      py::arg("dev_sentences") = 80);

  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& out_dir) {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        if (cfg.registry_path.empty()) throw UsageError("experiment config has no registry");
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(Registry::load(cfg.registry_path), cfg, out_dir);
        }
        return results_tsv(with_seed_means(result.rows));
      },
      py::arg("config"), py::arg("out_dir"),
      "Runs an experiment config and returns results.tsv with seed means.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI command; returns (exit code, stdout, stderr).");
}
