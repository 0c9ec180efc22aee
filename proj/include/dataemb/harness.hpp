#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dataemb/classifier.hpp"
#include "dataemb/metrics.hpp"
#include "dataemb/morph.hpp"
#include "dataemb/parser.hpp"
#include "dataemb/registry.hpp"

namespace dataemb {

enum class Task { Parse, TagLemma };
enum class Setting { Base, Concat, Gold, Pred };
enum class RunMode { InDataset, ZeroShot };

std::string to_string(Task t);
std::string to_string(Setting s);
std::string to_string(RunMode m);
Task task_from_string(const std::string& name);
Setting setting_from_string(const std::string& name);
RunMode run_mode_from_string(const std::string& name);

struct ClassifierSettings {
  NGramConfig ngrams;
  LinearHyper hyper;
  // Pick n-gram ranges on the dev splits before labeling.
  bool grid_search = false;
};

struct ExperimentConfig {
  Task task = Task::Parse;
  std::string group_id;
  std::vector<Setting> settings{Setting::Base, Setting::Concat, Setting::Gold, Setting::Pred};
  RunMode mode = RunMode::InDataset;
  std::vector<std::string> held_out;  // zero-shot; empty means every member in turn
  std::vector<std::uint64_t> seeds{1, 2, 3};
  ParserConfig parser;
  MorphConfig morph;
  ClassifierSettings classifier;
  std::string registry_path;  // resolved relative to the config file

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

// Records every split read on behalf of an experiment.
class DataAccessLog {
 public:
  struct Entry {
    std::string source_id;
    Split split;
    std::string purpose;  // "train", "classifier", "eval"
  };

  void record(const std::string& source_id, Split split, const std::string& purpose);
  std::vector<Entry> entries() const;
  // Whether `source_id` was read for any purpose other than `allowed`.
  bool read_for_other_than(const std::string& source_id, const std::string& allowed) const;

 private:
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

// Source ids assigned by the classifier.
struct SourceLabels {
  std::map<std::string, std::vector<std::string>> train;  // jack-knifed, per train sentence
  std::map<std::string, std::vector<std::string>> eval;   // predicted, per eval sentence
  std::map<std::string, double> eval_f1;                  // per-class F1 on the eval splits
  double jackknife_macro_f1 = 0.0;
  NGramConfig ngrams;
};

// Jack-knifes the train splits of `train_sources` and labels the eval splits
// of `eval_sources` with a classifier fit on all of `train_sources`.
SourceLabels predict_source_labels(const Registry& registry, const std::vector<std::string>& train_sources,
                                   const std::vector<std::string>& eval_sources, const ClassifierSettings& cfg,
                                   DataAccessLog* log = nullptr);

struct ResultRow {
  std::string group_id;
  std::string source_id;
  std::string setting;
  std::string mode;      // in_dataset / zero_shot
  std::string held_out;  // zero-shot only
  std::string seed;      // a number, or "mean"
  std::string metric;
  double value = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

using TaskModel = std::variant<ParserModel, MorphModel>;

struct CellOutput {
  std::vector<ResultRow> rows;
  std::map<std::string, Treebank> predictions;       // per evaluated source
  std::vector<std::pair<std::string, TaskModel>> models;  // checkpoint name, model
  std::vector<std::string> routed_in_order;           // zero-shot: proxy per held-out eval sentence
};

struct CellSpec {
  Task task = Task::Parse;
  std::string group_id;
  Setting setting = Setting::Concat;
  std::uint64_t seed = 1;
  ParserConfig parser;
  MorphConfig morph;
};

// One (group, setting, seed) cell of the in-dataset grid. `labels` is
// required for Pred.
CellOutput run_setting(const Registry& registry, const CellSpec& spec, const SourceLabels* labels = nullptr,
                       DataAccessLog* log = nullptr);

// Trains Concat or Pred on the group without `held_out`, then evaluates the
// held-out source (routing each sentence to a proxy id for Pred) and the
// remaining members.
CellOutput run_zero_shot(const Registry& registry, const CellSpec& spec, const std::string& held_out,
                         const SourceLabels* labels = nullptr, DataAccessLog* log = nullptr);

struct PcaResult {
  std::vector<std::string> names;
  std::vector<std::pair<double, double>> coords;
  std::vector<double> eigenvalues;                // descending, all components
  std::vector<std::vector<double>> components;    // unit eigenvectors, same order
};

// Mean-centres the rows, eigendecomposes the covariance and projects onto the
// top two components. Each component's largest-magnitude entry is positive.
PcaResult pca_project(const std::vector<std::string>& names, const std::vector<std::vector<double>>& rows);
// Rows of an encoder's dataset table.
std::vector<std::vector<double>> embedding_rows(const Encoder& encoder);

std::string results_tsv(const std::vector<ResultRow>& rows);
// Per-seed rows plus seed means (seed "mean").
std::vector<ResultRow> with_seed_means(const std::vector<ResultRow>& rows);

struct AggregateReport {
  std::string metric;
  std::string mode;
  std::string scope;  // "all"; zero-shot also "held_out" and "without_held_out"
  std::vector<AggregateRow> rows;
};

std::vector<AggregateReport> aggregate_reports(const std::vector<ResultRow>& rows,
                                               const std::vector<FilterReport>& filters);
std::string aggregates_tsv(const std::vector<AggregateReport>& reports);
std::string filter_flags_tsv(const std::vector<FilterReport>& filters);
std::string pca_tsv(const PcaResult& pca);

// Writes checkpoint/, predictions.conllu and results.tsv of one cell.
void write_cell(const std::string& dir, const CellOutput& cell);

// Writes summary.tsv, filters.tsv, filter_flags.tsv and pca/<group>.tsv.
void emit_reports(const std::string& out_dir, const std::vector<ResultRow>& rows,
                  const std::vector<FilterReport>& filters, const std::map<std::string, PcaResult>& pca);

struct ExperimentResult {
  std::vector<ResultRow> rows;  // per seed
  std::vector<FilterReport> filters;
  std::map<std::string, PcaResult> pca;
};

// Runs every cell of the config and writes the run directory layout under
// `out_dir`.
ExperimentResult run_experiment(const Registry& registry, const ExperimentConfig& cfg, const std::string& out_dir,
                                DataAccessLog* log = nullptr);

}  // namespace dataemb
