#include "dataemb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"
#include "dataemb/text.hpp"

namespace dataemb {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Task t) { return t == Task::Parse ? "parse" : "tag_lemma"; }

std::string to_string(Setting s) {
  switch (s) {
    case Setting::Base: return "base";
    case Setting::Concat: return "concat";
    case Setting::Gold: return "gold";
    case Setting::Pred: return "pred";
  }
  return "base";
}

std::string to_string(RunMode m) { return m == RunMode::InDataset ? "in_dataset" : "zero_shot"; }

Task task_from_string(const std::string& name) {
  if (name == "parse") return Task::Parse;
  if (name == "tag_lemma") return Task::TagLemma;
  throw UsageError("unknown task '" + name + "' (parse, tag_lemma)");
}

Setting setting_from_string(const std::string& name) {
  for (Setting s : {Setting::Base, Setting::Concat, Setting::Gold, Setting::Pred}) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown setting '" + name + "' (base, concat, gold, pred)");
}

RunMode run_mode_from_string(const std::string& name) {
  if (name == "in_dataset") return RunMode::InDataset;
  if (name == "zero_shot") return RunMode::ZeroShot;
  throw UsageError("unknown mode '" + name + "' (in_dataset, zero_shot)");
}

void ExperimentConfig::validate() const {
  if (group_id.empty()) throw UsageError("experiment needs a group");
  if (settings.empty()) throw UsageError("experiment needs at least one setting");
  if (seeds.empty()) throw UsageError("experiment needs at least one seed");
  if (mode == RunMode::ZeroShot) {
    for (Setting s : settings) {
      if (s != Setting::Concat && s != Setting::Pred) {
        throw UsageError("zero-shot runs only support the concat and pred settings");
      }
    }
  } else if (!held_out.empty()) {
    throw UsageError("held_out is only valid in zero_shot mode");
  }
  classifier.ngrams.validate();
}

ExperimentConfig experiment_config_from_json(const json& doc, const std::string& base_dir) {
  static const std::set<std::string> known{"registry", "task", "group", "settings", "setting", "mode",
                                           "held_out", "seeds",  "parser", "morph",    "classifier"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw UsageError("unknown experiment config key '" + key + "'");
  }
  ExperimentConfig cfg;
  try {
    if (doc.contains("registry")) {
      const fs::path p = doc.at("registry").get<std::string>();
      cfg.registry_path = (p.is_absolute() ? p : fs::path(base_dir) / p).string();
    }
    if (doc.contains("task")) cfg.task = task_from_string(doc.at("task"));
    cfg.group_id = doc.value("group", std::string());
    if (doc.contains("setting")) cfg.settings = {setting_from_string(doc.at("setting"))};
    if (doc.contains("settings")) {
      cfg.settings.clear();
      for (const auto& s : doc.at("settings")) cfg.settings.push_back(setting_from_string(s));
    }
    if (doc.contains("mode")) cfg.mode = run_mode_from_string(doc.at("mode"));
    if (doc.contains("held_out")) {
      cfg.held_out = doc.at("held_out").is_string() ? std::vector<std::string>{doc.at("held_out").get<std::string>()}
                                                     : doc.at("held_out").get<std::vector<std::string>>();
    }
    if (doc.contains("seeds")) {
      cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    } else if (cfg.task == Task::TagLemma) {
      cfg.seeds = {1};
    }
    if (doc.contains("parser")) cfg.parser = parser_config_from_json(doc.at("parser"));
    if (doc.contains("morph")) cfg.morph = morph_config_from_json(doc.at("morph"));
    if (doc.contains("classifier")) {
      const json& c = doc.at("classifier");
      NGramConfig& ng = cfg.classifier.ngrams;
      ng.word_min = c.value("word_min", ng.word_min);
      ng.word_max = c.value("word_max", ng.word_max);
      ng.char_min = c.value("char_min", ng.char_min);
      ng.char_max = c.value("char_max", ng.char_max);
      ng.feature_space_size = c.value("feature_space_size", ng.feature_space_size);
      cfg.classifier.hyper.C = c.value("C", cfg.classifier.hyper.C);
      cfg.classifier.hyper.epochs = c.value("epochs", cfg.classifier.hyper.epochs);
      cfg.classifier.hyper.seed = c.value("seed", cfg.classifier.hyper.seed);
      cfg.classifier.grid_search = c.value("grid_search", cfg.classifier.grid_search);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open experiment config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("experiment config '" + path + "': " + e.what());
  }
  return experiment_config_from_json(doc, fs::path(path).parent_path().string());
}

void DataAccessLog::record(const std::string& source_id, Split split, const std::string& purpose) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_.push_back({source_id, split, purpose});
}

std::vector<DataAccessLog::Entry> DataAccessLog::entries() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_;
}

bool DataAccessLog::read_for_other_than(const std::string& source_id, const std::string& allowed) const {
  std::lock_guard<std::mutex> lock(mutex_);
  for (const Entry& e : entries_) {
    if (e.source_id == source_id && e.purpose != allowed) return true;
  }
  return false;
}

namespace {

std::shared_ptr<const Treebank> read_split(const Registry& reg, const std::string& source, Split split,
                                           const std::string& purpose, DataAccessLog* log) {
  auto tb = reg.source(source).split(split);
  if (!tb) throw DataError("source '" + source + "' has no " + to_string(split) + " split");
  if (log) log->record(source, split, purpose);
  return tb;
}

std::shared_ptr<const Treebank> read_eval(const Registry& reg, const std::string& source, const std::string& purpose,
                                          DataAccessLog* log) {
  auto tb = reg.source(source).eval_split();
  if (!tb) throw DataError("source '" + source + "' has neither a dev nor a test split");
  if (log) log->record(source, tb->split, purpose);
  return tb;
}

std::vector<LabeledText> labeled_texts(const Treebank& tb, const std::string& label) {
  std::vector<LabeledText> out;
  for (const Sentence& s : tb.sentences) out.push_back({classifier_text(s), label});
  return out;
}

// Copy of a split with gold source ids on every sentence.
Treebank stamped(const Treebank& tb, const std::string& source) {
  Treebank out = tb;
  out.source_id = source;
  for (Sentence& s : out.sentences) {
    s.source_id = source;
    s.predicted_source_id.reset();
  }
  return out;
}

void assign_predicted(Treebank& tb, const std::vector<std::string>& ids) {
  if (ids.size() != tb.sentences.size()) throw DataError("predicted source ids do not cover " + tb.source_id);
  for (std::size_t i = 0; i < ids.size(); ++i) tb.sentences[i].predicted_source_id = ids[i];
}

const std::vector<std::string>& labels_for(const std::map<std::string, std::vector<std::string>>& m,
                                           const std::string& source) {
  auto it = m.find(source);
  if (it == m.end()) throw UsageError("no predicted source ids for '" + source + "'");
  return it->second;
}

SourceMode source_mode(Setting s) {
  switch (s) {
    case Setting::Gold: return SourceMode::Gold;
    case Setting::Pred: return SourceMode::Pred;
    default: return SourceMode::None;
  }
}

TaskModel train_task(const CellSpec& spec, const std::vector<Treebank>& data, const std::vector<std::string>& sources,
                     SourceMode mode) {
  std::vector<const Sentence*> sentences;
  for (const Treebank& tb : data) {
    for (const Sentence& s : tb.sentences) sentences.push_back(&s);
  }
  if (spec.task == Task::Parse) {
    ParserConfig cfg = spec.parser;
    cfg.trainer.seed = spec.seed;
    return train_parser(sentences, sources, mode, cfg);
  }
  MorphConfig cfg = spec.morph;
  cfg.trainer.seed = spec.seed;
  return train_joint(sentences, sources, mode, cfg);
}

Treebank predict_with(const TaskModel& model, const Treebank& tb, SourceMode mode) {
  return std::visit([&](const auto& m) {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ParserModel>) {
      return m.parse_treebank(tb, mode);
    } else {
      return m.predict_treebank(tb, mode);
    }
  }, model);
}

void evaluate_into(CellOutput& out, const CellSpec& spec, const std::string& mode, const std::string& held_out,
                   const Treebank& gold, Treebank pred) {
  for (const std::string& metric : task_metrics(to_string(spec.task))) {
    const EvalResult r = evaluate(metric, gold, pred);
    out.rows.push_back({spec.group_id, gold.source_id, to_string(spec.setting), mode, held_out,
                        std::to_string(spec.seed), metric, r.value, r.correct, r.total});
  }
  out.predictions[gold.source_id] = std::move(pred);
}

}  // namespace

SourceLabels predict_source_labels(const Registry& registry, const std::vector<std::string>& train_sources,
                                   const std::vector<std::string>& eval_sources, const ClassifierSettings& cfg,
                                   DataAccessLog* log) {
  if (train_sources.empty()) throw UsageError("classifier needs at least one training source");
  std::vector<std::shared_ptr<const Treebank>> owned;
  std::vector<const Treebank*> tbs;
  std::vector<LabeledText> all;
  for (const std::string& s : train_sources) {
    auto tb = std::make_shared<const Treebank>(stamped(*read_split(registry, s, Split::Train, "classifier", log), s));
    owned.push_back(tb);
    tbs.push_back(tb.get());
    for (LabeledText& t : labeled_texts(*tb, s)) all.push_back(std::move(t));
  }

  SourceLabels out;
  out.ngrams = cfg.ngrams;
  if (cfg.grid_search) {
    std::vector<LabeledText> dev;
    for (const std::string& s : train_sources) {
      for (LabeledText& t : labeled_texts(*read_eval(registry, s, "classifier", log), s)) dev.push_back(std::move(t));
    }
    out.ngrams = grid_search(all, dev, default_grid(cfg.ngrams.feature_space_size), cfg.hyper).best;
  }

  const JackknifeResult jk = jackknife_labels(tbs, out.ngrams, cfg.hyper);
  out.jackknife_macro_f1 = macro_f1(jk.gold, jk.predicted);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tbs.size(); ++i) {
    const std::size_t n = tbs[i]->sentences.size();
    out.train[train_sources[i]].assign(jk.predicted.begin() + static_cast<std::ptrdiff_t>(offset),
                                       jk.predicted.begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
  }

  const SourceClassifier clf = SourceClassifier::train(all, out.ngrams, cfg.hyper);
  std::vector<std::string> gold, pred;
  for (const std::string& s : eval_sources) {
    auto tb = read_eval(registry, s, "eval", log);
    std::vector<std::string>& ids = out.eval[s];
    for (const Sentence& sent : tb->sentences) {
      ids.push_back(clf.predict(sent).label);
      gold.push_back(s);
      pred.push_back(ids.back());
    }
  }
  if (!gold.empty()) out.eval_f1 = per_class_f1(gold, pred);
  return out;
}

CellOutput run_setting(const Registry& registry, const CellSpec& spec, const SourceLabels* labels,
                       DataAccessLog* log) {
  const DatasetGroup& group = registry.group(spec.group_id);
  if (spec.setting == Setting::Pred && !labels) throw UsageError("the pred setting needs classifier labels");
  const SourceMode mode = source_mode(spec.setting);
  CellOutput out;

  auto eval_copy = [&](const std::string& m) {
    Treebank tb = stamped(*read_eval(registry, m, "eval", log), m);
    if (spec.setting == Setting::Pred) assign_predicted(tb, labels_for(labels->eval, m));
    return tb;
  };

  if (spec.setting == Setting::Base) {
    for (const std::string& m : group.members) {
      std::vector<Treebank> data{stamped(*read_split(registry, m, Split::Train, "train", log), m)};
      TaskModel model = train_task(spec, data, {m}, SourceMode::None);
      const Treebank gold = eval_copy(m);
      evaluate_into(out, spec, "in_dataset", "", gold, predict_with(model, gold, SourceMode::None));
      out.models.emplace_back("base_" + m, std::move(model));
    }
    return out;
  }

  std::vector<Treebank> data;
  for (const std::string& m : group.members) {
    data.push_back(stamped(*read_split(registry, m, Split::Train, "train", log), m));
    if (spec.setting == Setting::Pred) assign_predicted(data.back(), labels_for(labels->train, m));
  }
  TaskModel model = train_task(spec, data, group.members, mode);
  for (const std::string& m : group.members) {
    const Treebank gold = eval_copy(m);
    evaluate_into(out, spec, "in_dataset", "", gold, predict_with(model, gold, mode));
  }
  out.models.emplace_back(to_string(spec.setting), std::move(model));
  return out;
}

CellOutput run_zero_shot(const Registry& registry, const CellSpec& spec, const std::string& held_out,
                         const SourceLabels* labels, DataAccessLog* log) {
  const DatasetGroup& group = registry.group(spec.group_id);
  if (group.members.size() < 3) throw UsageError("zero-shot needs a group of at least 3 sources");
  if (std::find(group.members.begin(), group.members.end(), held_out) == group.members.end()) {
    throw UsageError("'" + held_out + "' is not a member of group '" + group.group_id + "'");
  }
  if (spec.setting != Setting::Concat && spec.setting != Setting::Pred) {
    throw UsageError("zero-shot runs only support the concat and pred settings");
  }
  if (spec.setting == Setting::Pred && !labels) throw UsageError("the pred setting needs classifier labels");
  const SourceMode mode = source_mode(spec.setting);

  std::vector<std::string> remaining;
  for (const std::string& m : group.members) {
    if (m != held_out) remaining.push_back(m);
  }
  std::vector<Treebank> data;
  for (const std::string& m : remaining) {
    data.push_back(stamped(*read_split(registry, m, Split::Train, "train", log), m));
    if (spec.setting == Setting::Pred) assign_predicted(data.back(), labels_for(labels->train, m));
  }
  TaskModel model = train_task(spec, data, remaining, mode);

  CellOutput out;
  for (const std::string& m : group.members) {
    Treebank gold = stamped(*read_eval(registry, m, "eval", log), m);
    if (labels) {
      const std::vector<std::string>& ids = labels_for(labels->eval, m);
      assign_predicted(gold, ids);
      if (m == held_out) out.routed_in_order = ids;
    }
    evaluate_into(out, spec, "zero_shot", held_out, gold, predict_with(model, gold, mode));
  }
  out.models.emplace_back(to_string(spec.setting), std::move(model));
  return out;
}

PcaResult pca_project(const std::vector<std::string>& names, const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw DataError("PCA needs at least 2 rows");
  if (names.size() != rows.size()) throw DataError("PCA row names do not match the rows");
  const std::size_t d = rows.front().size();
  if (d < 2) throw UsageError("PCA needs at least 2 dimensions");
  const std::size_t n = rows.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != d) throw DataError("PCA rows differ in width");
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");

  PcaResult out;
  out.names = names;
  // Eigen sorts ascending.
  for (Eigen::Index k = static_cast<Eigen::Index>(d) - 1; k >= 0; --k) {
    Eigen::VectorXd v = solver.eigenvectors().col(k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.eigenvalues.push_back(std::max(0.0, solver.eigenvalues()(k)));
    out.components.emplace_back(v.data(), v.data() + v.size());
  }
  for (std::size_t i = 0; i < n; ++i) {
    double c[2] = {0.0, 0.0};
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t j = 0; j < d; ++j) c[k] += x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * out.components[k][j];
    }
    out.coords.emplace_back(c[0], c[1]);
  }
  return out;
}

std::vector<std::vector<double>> embedding_rows(const Encoder& encoder) {
  const nn::Parameter* table = encoder.dataset_table();
  if (!table) throw UsageError("model has no dataset embeddings");
  std::vector<std::vector<double>> rows;
  const std::size_t d = table->cols();
  for (std::size_t r = 0; r < table->rows(); ++r) {
    rows.emplace_back(table->value().values.begin() + static_cast<std::ptrdiff_t>(r * d),
                      table->value().values.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  }
  return rows;
}

std::string results_tsv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "group_id\tsource_id\tsetting\tmetric\tvalue\tcorrect\ttotal\n";
  for (const ResultRow& r : rows) {
    out << r.group_id << '\t' << r.source_id << '\t' << r.setting << '\t' << r.metric << '\t'
        << format_double(r.value) << '\t' << r.correct << '\t' << r.total << '\n';
  }
  return out.str();
}

std::vector<ResultRow> with_seed_means(const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> out;
  std::vector<std::tuple<std::string, std::string, std::string, std::string, std::string, std::string>> keys;
  std::map<decltype(keys)::value_type, std::vector<const ResultRow*>> groups;
  for (const ResultRow& r : rows) {
    if (r.seed == "mean") continue;
    out.push_back(r);
    auto key = std::make_tuple(r.group_id, r.source_id, r.setting, r.mode, r.held_out, r.metric);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  for (const auto& key : keys) {
    const auto& members = groups[key];
    ResultRow m = *members.front();
    m.seed = "mean";
    m.value = 0.0;
    m.correct = 0;
    m.total = 0;
    for (const ResultRow* r : members) {
      m.value += r->value;
      m.correct += r->correct;
      m.total += r->total;
    }
    m.value /= static_cast<double>(members.size());
    out.push_back(m);
  }
  return out;
}

std::vector<AggregateReport> aggregate_reports(const std::vector<ResultRow>& rows,
                                               const std::vector<FilterReport>& filters) {
  const std::vector<ResultRow> all = with_seed_means(rows);
  // (mode, metric, scope) -> source -> setting -> values
  std::map<std::tuple<std::string, std::string, std::string>, std::map<std::string, std::map<std::string, std::vector<double>>>>
      cells;
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  auto add = [&](const std::string& mode, const std::string& metric, const std::string& scope, const ResultRow& r) {
    auto key = std::make_tuple(mode, metric, scope);
    if (!cells.count(key)) order.push_back(key);
    cells[key][r.source_id][r.setting].push_back(r.value);
  };
  for (const ResultRow& r : all) {
    if (r.seed != "mean") continue;
    if (r.mode == "zero_shot") {
      add(r.mode, r.metric, "all", r);
      add(r.mode, r.metric, r.source_id == r.held_out ? "held_out" : "without_held_out", r);
    } else {
      add(r.mode, r.metric, "all", r);
    }
  }
  std::vector<AggregateReport> out;
  for (const auto& key : order) {
    std::map<std::string, std::map<std::string, double>> values;
    for (const auto& [source, per_setting] : cells[key]) {
      for (const auto& [setting, vs] : per_setting) {
        double sum = 0.0;
        for (double v : vs) sum += v;
        values[source][setting] = sum / static_cast<double>(vs.size());
      }
    }
    out.push_back({std::get<1>(key), std::get<0>(key), std::get<2>(key), aggregate(values, filters)});
  }
  return out;
}

std::string aggregates_tsv(const std::vector<AggregateReport>& reports) {
  std::ostringstream out;
  out << "metric\tmode\tscope\tbucket\tsetting\tvalue\tmembers\n";
  for (const AggregateReport& rep : reports) {
    for (const AggregateRow& r : rep.rows) {
      out << rep.metric << '\t' << rep.mode << '\t' << rep.scope << '\t' << r.bucket << '\t' << r.setting << '\t'
          << format_double(r.value) << '\t' << r.members << '\n';
    }
  }
  return out.str();
}

std::string filter_flags_tsv(const std::vector<FilterReport>& filters) {
  std::ostringstream out;
  out << "source_id\tword_count\tclassifier_f1\tmax_overlap\tsmall\tmulti_lang\tsame_lang\tpred_above_95\thigh_overlap\n";
  for (const FilterReport& f : filters) {
    out << f.source_id << '\t' << f.word_count << '\t' << format_double(f.classifier_f1) << '\t'
        << format_double(f.max_overlap) << '\t' << f.is_small << '\t' << f.is_multilang_group << '\t'
        << f.exists_same_lang << '\t' << f.svm_above_95 << '\t' << f.high_word_overlap << '\n';
  }
  return out.str();
}

std::string pca_tsv(const PcaResult& pca) {
  std::ostringstream out;
  out << "source_id\tpc1\tpc2\n";
  for (std::size_t i = 0; i < pca.names.size(); ++i) {
    out << pca.names[i] << '\t' << format_double(pca.coords[i].first) << '\t' << format_double(pca.coords[i].second)
        << '\n';
  }
  return out.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string summary_tsv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "group_id\tsource_id\tsetting\tmode\theld_out\tseed\tmetric\tvalue\tcorrect\ttotal\n";
  for (const ResultRow& r : rows) {
    out << r.group_id << '\t' << r.source_id << '\t' << r.setting << '\t' << r.mode << '\t'
        << (r.held_out.empty() ? "_" : r.held_out) << '\t' << r.seed << '\t' << r.metric << '\t'
        << format_double(r.value) << '\t' << r.correct << '\t' << r.total << '\n';
  }
  return out.str();
}

const Encoder& encoder_of(const TaskModel& model) {
  return std::visit([](const auto& m) -> const Encoder& { return m.encoder(); }, model);
}

}  // namespace

void write_cell(const std::string& dir_name, const CellOutput& cell) {
  const fs::path dir(dir_name);
  for (const auto& [name, model] : cell.models) {
    const std::string text = std::visit([](const auto& m) { return m.to_json().dump(); }, model);
    write_text(dir / "checkpoint" / (name + ".json"), text + "\n");
    const Encoder& enc = encoder_of(model);
    if (enc.dataset_table()) write_text(dir / "checkpoint" / (name + ".embeddings.tsv"), enc.export_table_tsv());
  }
  std::string predictions;
  for (const auto& [source, tb] : cell.predictions) predictions += write_conllu(tb, true);
  write_text(dir / "predictions.conllu", predictions);
  write_text(dir / "results.tsv", results_tsv(cell.rows));
}

void emit_reports(const std::string& out_dir, const std::vector<ResultRow>& rows,
                  const std::vector<FilterReport>& filters, const std::map<std::string, PcaResult>& pca) {
  const fs::path base(out_dir);
  write_text(base / "summary.tsv", summary_tsv(with_seed_means(rows)));
  write_text(base / "filters.tsv", aggregates_tsv(aggregate_reports(rows, filters)));
  write_text(base / "filter_flags.tsv", filter_flags_tsv(filters));
  for (const auto& [group, result] : pca) write_text(base / "pca" / (group + ".tsv"), pca_tsv(result));
}

ExperimentResult run_experiment(const Registry& registry, const ExperimentConfig& cfg, const std::string& out_dir,
                                DataAccessLog* log) {
  cfg.validate();
  const DatasetGroup& group = registry.group(cfg.group_id);
  const fs::path runs = fs::path(out_dir) / "runs" / group.group_id;
  ExperimentResult result;
  std::map<std::string, std::vector<double>> f1s;

  auto cell_spec = [&](Setting setting, std::uint64_t seed) {
    CellSpec spec;
    spec.task = cfg.task;
    spec.group_id = group.group_id;
    spec.setting = setting;
    spec.seed = seed;
    spec.parser = cfg.parser;
    spec.morph = cfg.morph;
    return spec;
  };
  auto maybe_pca = [&](const CellOutput& cell, Setting setting) {
    if (result.pca.count(group.group_id) || (setting != Setting::Gold && setting != Setting::Pred)) return;
    const Encoder& enc = encoder_of(cell.models.front().second);
    if (!enc.dataset_table() || enc.sources().size() < 2 || enc.config().dataset_dim < 2) return;
    result.pca[group.group_id] = pca_project(enc.sources(), embedding_rows(enc));
  };

  if (cfg.mode == RunMode::InDataset) {
    const SourceLabels labels = predict_source_labels(registry, group.members, group.members, cfg.classifier, log);
    for (const auto& [source, f1] : labels.eval_f1) f1s[source].push_back(f1);
    // Gold first so the PCA export prefers gold embeddings.
    std::vector<Setting> settings = cfg.settings;
    std::stable_sort(settings.begin(), settings.end(),
                     [](Setting a, Setting b) { return (a == Setting::Gold) > (b == Setting::Gold); });
    for (Setting setting : settings) {
      for (std::uint64_t seed : cfg.seeds) {
        const CellOutput cell = run_setting(registry, cell_spec(setting, seed), &labels, log);
        write_cell((runs / to_string(setting) / std::to_string(seed)).string(), cell);
        result.rows.insert(result.rows.end(), cell.rows.begin(), cell.rows.end());
        maybe_pca(cell, setting);
      }
    }
  } else {
    const std::vector<std::string> held = cfg.held_out.empty() ? group.members : cfg.held_out;
    for (const std::string& h : held) {
      std::vector<std::string> remaining;
      for (const std::string& m : group.members) {
        if (m != h) remaining.push_back(m);
      }
      const SourceLabels labels = predict_source_labels(registry, remaining, group.members, cfg.classifier, log);
      for (const std::string& m : remaining) {
        auto it = labels.eval_f1.find(m);
        if (it != labels.eval_f1.end()) f1s[m].push_back(it->second);
      }
      for (Setting setting : cfg.settings) {
        for (std::uint64_t seed : cfg.seeds) {
          const CellOutput cell = run_zero_shot(registry, cell_spec(setting, seed), h, &labels, log);
          write_cell((runs / "zero_shot" / h / to_string(setting) / std::to_string(seed)).string(), cell);
          result.rows.insert(result.rows.end(), cell.rows.begin(), cell.rows.end());
        }
      }
    }
  }

  std::map<std::string, double> mean_f1;
  for (const auto& [source, vs] : f1s) {
    double sum = 0.0;
    for (double v : vs) sum += v;
    mean_f1[source] = sum / static_cast<double>(vs.size());
  }
  result.filters = compute_filters(registry, group, mean_f1);
  emit_reports(out_dir, result.rows, result.filters, result.pca);
  return result;
}

}  // namespace dataemb
