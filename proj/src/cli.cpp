#include "dataemb/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dataemb/classifier.hpp"
#include "dataemb/error.hpp"
#include "dataemb/harness.hpp"
#include "dataemb/metrics.hpp"
#include "dataemb/registry.hpp"
#include "dataemb/synth.hpp"
#include "dataemb/text.hpp"

namespace dataemb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
};

void add_common(CLI::App* app, Common& c, const std::string& config_help, const std::string& out_help) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--config", c.config, config_help);
  app->add_option("--out", c.out, out_help);
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

const std::vector<std::string>& members_of(const Registry& reg, const std::string& group) {
  require(group, "--group");
  return reg.group(group).members;
}

struct ClassifierFlags {
  int word_max = 2;
  int char_max = 5;
  std::size_t feature_bits = 20;
  double C = 1.0;
  int epochs = 20;

  void add(CLI::App* app) {
    app->add_option("--word-max", word_max, "Largest word n-gram");
    app->add_option("--char-max", char_max, "Largest character n-gram");
    app->add_option("--feature-bits", feature_bits, "log2 of the hashed feature space");
    app->add_option("--C", C, "Regularisation constant");
    app->add_option("--epochs", epochs, "Training epochs");
  }
  ClassifierSettings settings(std::uint64_t seed) const {
    ClassifierSettings s;
    if (feature_bits == 0 || feature_bits > 30) throw UsageError("--feature-bits must lie in [1, 30]");
    s.ngrams.word_max = word_max;
    s.ngrams.char_max = char_max;
    s.ngrams.feature_space_size = std::size_t{1} << feature_bits;
    s.ngrams.validate();
    s.hyper.C = C;
    s.hyper.epochs = epochs;
    s.hyper.seed = seed;
    return s;
  }
};

std::vector<LabeledText> texts_of(const Registry& reg, const std::vector<std::string>& members, bool eval) {
  std::vector<LabeledText> out;
  for (const std::string& m : members) {
    auto tb = eval ? reg.source(m).eval_split() : reg.source(m).train;
    if (!tb) throw DataError("source '" + m + "' lacks the needed split");
    for (const Sentence& s : tb->sentences) out.push_back({classifier_text(s), m});
  }
  return out;
}

std::vector<std::vector<double>> parse_table(const std::string& text, std::vector<std::string>& names) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream fields(line);
    std::string name, cell;
    std::getline(fields, name, '\t');
    std::vector<double> row;
    while (std::getline(fields, cell, '\t')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("embedding table: bad number '" + cell + "'");
      }
    }
    names.push_back(name);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset-embedding experiments: CoNLL-U tools, source classifier, parser and tagger training."};
  app.name("dataemb");
  app.require_subcommand(1);

  Common common;
  std::function<void()> action;

  // convert
  std::string in_path, source, split = "train";
  bool stamp = false;
  auto* convert = app.add_subcommand("convert", "Parse and rewrite a CoNLL-U file (optionally stamping the source id)");
  add_common(convert, common, "unused", "Output CoNLL-U file");
  convert->add_option("--in", in_path, "Input CoNLL-U file")->required();
  convert->add_option("--source", source, "Source id (default: from MISC dataset=)");
  convert->add_option("--split", split, "train, dev or test");
  convert->add_flag("--stamp", stamp, "Write the source id into MISC");
  convert->callback([&] {
    action = [&] {
      require(common.out, "--out");
      Treebank tb = read_conllu_file(in_path, source, split_from_string(split));
      if (stamp && tb.source_id.empty()) throw UsageError("--stamp needs a source id");
      write_conllu_file(common.out, tb, stamp);
      out << "sentences\t" << tb.sentences.size() << "\ttokens\t" << tb.word_count << '\n';
    };
  });

  // group
  std::string target, group_id;
  auto* group = app.add_subcommand("group", "Pair sources by word overlap and report dataset filters");
  add_common(group, common, "Registry JSON", "Output directory");
  group->add_option("--target", target, "Only pair this source");
  group->add_option("--group", group_id, "Also write filter flags for this group");
  ClassifierFlags group_clf;
  group_clf.add(group);
  group->callback([&] {
    action = [&] {
      require(common.config, "--config");
      require(common.out, "--out");
      const Registry reg = Registry::load(common.config);
      std::ostringstream overlap;
      overlap << "source\tother\toverlap\n";
      for (const DataSource& a : reg.sources()) {
        for (const DataSource& b : reg.sources()) {
          if (a.source_id == b.source_id || !a.train || !b.train) continue;
          overlap << a.source_id << '\t' << b.source_id << '\t' << format_double(compute_word_overlap(a, b)) << '\n';
        }
      }
      json pairs = json::array();
      for (const DataSource& s : reg.sources()) {
        if (!target.empty() && s.source_id != target) continue;
        const DatasetGroup g = pair_by_overlap(reg, s.source_id);
        pairs.push_back({{"id", g.group_id}, {"members", g.members}, {"strategy", to_string(g.strategy)}});
      }
      if (!target.empty() && pairs.empty()) throw DataError("unknown source '" + target + "'");
      const fs::path dir(common.out);
      write_file(dir / "overlap.tsv", overlap.str());
      write_file(dir / "pairs.json", json{{"groups", pairs}}.dump(2) + "\n");
      if (!group_id.empty()) {
        const auto& members = members_of(reg, group_id);
        const SourceLabels labels =
            predict_source_labels(reg, members, members, group_clf.settings(common.seed));
        write_file(dir / "filter_flags.tsv", filter_flags_tsv(compute_filters(reg, reg.group(group_id), labels.eval_f1)));
      }
      out << "pairs\t" << pairs.size() << '\n';
    };
  });

  // classify
  auto* classify = app.add_subcommand("classify", "Source classifier: train, predict, gridsearch, jackknife");
  classify->require_subcommand(1);
  ClassifierFlags clf;
  std::string model_path;
  auto* c_train = classify->add_subcommand("train", "Fit on the train splits of a group");
  add_common(c_train, common, "Registry JSON", "Output directory");
  c_train->add_option("--group", group_id, "Group id")->required();
  clf.add(c_train);
  c_train->callback([&] {
    action = [&] {
      require(common.config, "--config");
      require(common.out, "--out");
      const Registry reg = Registry::load(common.config);
      const ClassifierSettings s = clf.settings(common.seed);
      const SourceClassifier model =
          SourceClassifier::train(texts_of(reg, members_of(reg, group_id), false), s.ngrams, s.hyper);
      fs::create_directories(common.out);
      model.save((fs::path(common.out) / "classifier.json").string());
      out << "classes\t" << model.model().classes.size() << '\n';
    };
  });
  auto* c_predict = classify->add_subcommand("predict", "Label each sentence of a CoNLL-U file");
  add_common(c_predict, common, "unused", "Output TSV file");
  c_predict->add_option("--model", model_path, "classifier.json")->required();
  c_predict->add_option("--in", in_path, "Input CoNLL-U file")->required();
  c_predict->callback([&] {
    action = [&] {
      require(common.out, "--out");
      const SourceClassifier model = SourceClassifier::load(model_path);
      const Treebank tb = read_conllu_file(in_path, "");
      std::ostringstream tsv;
      tsv << "sentence\tpredicted\n";
      for (std::size_t i = 0; i < tb.sentences.size(); ++i) {
        tsv << i + 1 << '\t' << model.predict(tb.sentences[i]).label << '\n';
      }
      write_file(common.out, tsv.str());
      out << "sentences\t" << tb.sentences.size() << '\n';
    };
  });
  auto* c_grid = classify->add_subcommand("gridsearch", "Pick n-gram ranges by dev macro F1");
  add_common(c_grid, common, "Registry JSON", "Output directory");
  c_grid->add_option("--group", group_id, "Group id")->required();
  clf.add(c_grid);
  c_grid->callback([&] {
    action = [&] {
      require(common.config, "--config");
      require(common.out, "--out");
      const Registry reg = Registry::load(common.config);
      const auto& members = members_of(reg, group_id);
      const ClassifierSettings s = clf.settings(common.seed);
      const GridSearchResult r = grid_search(texts_of(reg, members, false), texts_of(reg, members, true),
                                             default_grid(s.ngrams.feature_space_size), s.hyper);
      std::ostringstream tsv;
      tsv << "config\tmacro_f1\n";
      for (const auto& [cfg, f1] : r.evaluated) tsv << cfg.label() << '\t' << format_double(f1) << '\n';
      write_file(fs::path(common.out) / "gridsearch.tsv", tsv.str());
      out << "best\t" << r.best.label() << '\t' << format_fixed(r.best_macro_f1, 4) << '\n';
    };
  });
  auto* c_jack = classify->add_subcommand("jackknife", "Jack-knifed source labels for the train splits");
  add_common(c_jack, common, "Registry JSON", "Output directory");
  c_jack->add_option("--group", group_id, "Group id")->required();
  clf.add(c_jack);
  c_jack->callback([&] {
    action = [&] {
      require(common.config, "--config");
      require(common.out, "--out");
      const Registry reg = Registry::load(common.config);
      std::vector<const Treebank*> tbs;
      for (const std::string& m : members_of(reg, group_id)) {
        if (!reg.source(m).train) throw DataError("source '" + m + "' has no train split");
        tbs.push_back(reg.source(m).train.get());
      }
      const ClassifierSettings s = clf.settings(common.seed);
      const JackknifeResult r = jackknife_labels(tbs, s.ngrams, s.hyper);
      std::ostringstream tsv;
      tsv << "index\tgold\tpredicted\tfold\n";
      for (std::size_t i = 0; i < r.gold.size(); ++i) {
        tsv << i << '\t' << r.gold[i] << '\t' << r.predicted[i] << '\t' << r.fold_of[i] << '\n';
      }
      write_file(fs::path(common.out) / "jackknife.tsv", tsv.str());
      out << "folds\t" << r.folds << "\tmacro_f1\t" << format_fixed(macro_f1(r.gold, r.predicted), 4) << '\n';
    };
  });

  // train
  std::string task = "parse", setting = "concat", params_path;
  auto* train = app.add_subcommand("train", "Train and evaluate one (group, setting, seed) cell");
  add_common(train, common, "Registry JSON", "Output directory");
  train->add_option("--group", group_id, "Group id")->required();
  train->add_option("--task", task, "parse or tag_lemma");
  train->add_option("--setting", setting, "base, concat, gold or pred");
  train->add_option("--params", params_path, "JSON with parser/morph/classifier sections");
  train->callback([&] {
    action = [&] {
      require(common.config, "--config");
      require(common.out, "--out");
      const Registry reg = Registry::load(common.config);
      json doc = params_path.empty() ? json::object() : read_json(params_path);
      doc["group"] = group_id;
      doc["task"] = task;
      doc["settings"] = json::array({setting});
      doc["seeds"] = json::array({common.seed});
      const ExperimentConfig cfg = experiment_config_from_json(doc);
      CellSpec spec{cfg.task, group_id, cfg.settings.front(), common.seed, cfg.parser, cfg.morph};
      std::optional<SourceLabels> labels;
      if (spec.setting == Setting::Pred) {
        const auto& members = members_of(reg, group_id);
        labels = predict_source_labels(reg, members, members, cfg.classifier);
      }
      const CellOutput cell = run_setting(reg, spec, labels ? &*labels : nullptr);
      write_cell(common.out, cell);
      for (const ResultRow& r : cell.rows) out << r.source_id << '\t' << r.metric << '\t' << format_fixed(r.value, 2) << '\n';
    };
  });

  // eval
  std::string gold_path, pred_path, metric = "las";
  auto* eval = app.add_subcommand("eval", "Score a predicted CoNLL-U file against gold");
  add_common(eval, common, "unused", "Optional TSV output file");
  eval->add_option("--gold", gold_path, "Gold CoNLL-U")->required();
  eval->add_option("--pred", pred_path, "Predicted CoNLL-U")->required();
  eval->add_option("--metric", metric, "las, morph_f1, lemma_acc, tag_acc or all");
  eval->callback([&] {
    action = [&] {
      const Treebank gold = read_conllu_file(gold_path, "");
      const Treebank pred = read_conllu_file(pred_path, "");
      const std::vector<std::string> metrics =
          metric == "all" ? std::vector<std::string>{"las", "morph_f1", "lemma_acc", "tag_acc"}
                          : std::vector<std::string>{metric};
      std::ostringstream tsv;
      tsv << "metric\tvalue\tcorrect\ttotal\n";
      for (const std::string& m : metrics) {
        const EvalResult r = evaluate(m, gold, pred);
        out << r.metric << '\t' << format_fixed(r.value, 2) << '\n';
        tsv << r.metric << '\t' << format_double(r.value) << '\t' << r.correct << '\t' << r.total << '\n';
      }
      if (!common.out.empty()) write_file(common.out, tsv.str());
    };
  });

  // experiment
  std::string registry_override;
  auto* experiment = app.add_subcommand("experiment", "Run the settings grid of an experiment config");
  add_common(experiment, common, "Experiment config JSON", "Output directory");
  experiment->add_option("--registry", registry_override, "Registry JSON (overrides the config)");
  experiment->callback([&] {
    action = [&] {
      require(common.config, "--config");
      require(common.out, "--out");
      ExperimentConfig cfg = load_experiment_config(common.config);
      if (experiment->count("--seed")) cfg.seeds = {common.seed};
      if (!registry_override.empty()) cfg.registry_path = registry_override;
      if (cfg.registry_path.empty()) throw UsageError("experiment config has no registry");
      const Registry reg = Registry::load(cfg.registry_path);
      const ExperimentResult r = run_experiment(reg, cfg, common.out);
      for (const ResultRow& row : with_seed_means(r.rows)) {
        if (row.seed != "mean") continue;
        out << row.source_id << '\t' << row.setting << '\t' << row.mode << '\t' << row.metric << '\t'
            << format_fixed(row.value, 2) << '\n';
      }
    };
  });

  // pca
  auto* pca = app.add_subcommand("pca", "Project a dataset-embedding table onto two principal components");
  add_common(pca, common, "unused", "Output TSV file");
  pca->add_option("--in", in_path, "Embedding table TSV (source_id, e0, e1, ...)");
  pca->add_option("--model", model_path, "Parser or tagger checkpoint");
  pca->callback([&] {
    action = [&] {
      require(common.out, "--out");
      if (in_path.empty() == model_path.empty()) throw UsageError("give exactly one of --in and --model");
      std::vector<std::string> names;
      std::vector<std::vector<double>> rows;
      if (!in_path.empty()) {
        rows = parse_table(read_file(in_path), names);
      } else {
        const json doc = read_json(model_path);
        const std::string format = doc.value("format", std::string());
        if (format == "dataemb-parser") {
          const ParserModel m = ParserModel::from_json(doc);
          names = m.encoder().sources();
          rows = embedding_rows(m.encoder());
        } else if (format == "dataemb-morph") {
          const MorphModel m = MorphModel::from_json(doc);
          names = m.encoder().sources();
          rows = embedding_rows(m.encoder());
        } else {
          throw DataError(model_path + " is not a parser or tagger checkpoint");
        }
      }
      const PcaResult r = pca_project(names, rows);
      write_file(common.out, pca_tsv(r));
      out << "rows\t" << names.size() << '\n';
    };
  });

  // synth
  std::string kind = "all";
  std::size_t train_n = 200, dev_n = 80;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic ambiguity and mixture corpora");
  add_common(synth, common, "unused", "Output directory");
  synth->add_option("--kind", kind, "ambiguity, mixture or all");
  synth->add_option("--train-sentences", train_n, "Train sentences per source");
  synth->add_option("--dev-sentences", dev_n, "Dev and test sentences per source");
  synth->callback([&] {
    action = [&] {
      require(common.out, "--out");
      std::vector<SynthCorpus> corpora;
      if (kind == "ambiguity" || kind == "all") {
        AmbiguityConfig c;
        c.seed = common.seed;
        c.train_sentences = train_n;
        c.dev_sentences = c.test_sentences = dev_n;
        corpora.push_back(make_ambiguity_corpus(c));
      }
      if (kind == "mixture" || kind == "all") {
        MixtureConfig c;
        c.seed = common.seed;
        c.train_sentences = train_n;
        c.dev_sentences = c.test_sentences = dev_n;
        corpora.push_back(make_mixture_corpus(c));
      }
      if (corpora.empty()) throw UsageError("unknown --kind '" + kind + "' (ambiguity, mixture, all)");
      write_corpora(corpora, common.out);
      out << "groups\t" << corpora.size() << '\n';
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const std::vector<CLI::App*> subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.back()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error\tusage\t" << e.what() << '\n';
    const std::vector<CLI::App*> subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.back()->help());
    return kUsage;
  }

  try {
    if (!action) throw UsageError("no command given");
    action();
    return kOk;
  } catch (const UsageError& e) {
    err << "error\tusage\t" << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "error\tnumeric\t" << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error\tdata\t" << e.what() << '\n';
    return kData;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace dataemb::cli
