#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dataemb/conllu.hpp"

namespace dataemb {

// Word and character n-gram ranges plus the hashed feature space size.
struct NGramConfig {
  int word_min = 1;
  int word_max = 2;
  int char_min = 1;
  int char_max = 5;
  std::size_t feature_space_size = std::size_t{1} << 20;

  void validate() const;
  std::string label() const;  // "w1-2_c1-5"

  bool operator==(const NGramConfig&) const = default;
};

// The 49 candidates (1,k) x (1,k'), k, k' in 1..7.
std::vector<NGramConfig> default_grid(std::size_t feature_space_size = std::size_t{1} << 20);

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // strictly increasing index, count > 0

  bool empty() const { return entries.empty(); }
  double total() const;
  bool operator==(const SparseVector&) const = default;
};

// Separator placed between words of a word n-gram (U+241F, never in a split word).
inline constexpr std::string_view kWordJoiner = "\xE2\x90\x9F";

std::vector<std::string> word_ngrams(std::string_view text, int min_n, int max_n);
std::vector<std::string> char_ngrams(std::string_view text, int min_n, int max_n);
std::uint32_t hash_feature(char family, std::string_view ngram, std::size_t feature_space_size);

SparseVector featurize(std::string_view text, const NGramConfig& cfg);

struct LinearHyper {
  double C = 1.0;
  int epochs = 20;
  std::uint64_t seed = 1;
};

struct LabeledVector {
  SparseVector x;
  std::string label;
};

struct LinearModel {
  std::vector<std::string> classes;
  std::size_t dim = 0;
  std::vector<std::vector<double>> weights;  // one dense vector per class
  std::vector<double> bias;
  LinearHyper hyper;
};

// One-vs-rest linear SVMs, L2-regularised hinge loss, seeded stochastic
// subgradient descent (Pegasos schedule).
LinearModel train_linear(const std::vector<LabeledVector>& data, const LinearHyper& hyper, std::size_t dim);

struct SourcePrediction {
  std::string label;
  std::vector<double> scores;  // aligned with LinearModel::classes
};

SourcePrediction predict_source(const LinearModel& model, const SparseVector& x);

double macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);
std::map<std::string, double> per_class_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

struct LabeledText {
  std::string text;
  std::string label;
};

struct GridSearchResult {
  NGramConfig best;
  double best_macro_f1 = 0.0;
  std::vector<std::pair<NGramConfig, double>> evaluated;
};

GridSearchResult grid_search(const std::vector<LabeledText>& train, const std::vector<LabeledText>& dev,
                             const std::vector<NGramConfig>& candidates, const LinearHyper& hyper);

// The text the classifier sees: the "text = " comment when present,
// otherwise the forms joined by spaces.
std::string classifier_text(const Sentence& sentence);

// N-gram featurizer bundled with a trained linear model.
class SourceClassifier {
 public:
  SourceClassifier() = default;
  SourceClassifier(NGramConfig cfg, LinearModel model) : cfg_(cfg), model_(std::move(model)) {}

  static SourceClassifier train(const std::vector<LabeledText>& data, const NGramConfig& cfg,
                                const LinearHyper& hyper);

  SourcePrediction predict(std::string_view text) const;
  SourcePrediction predict(const Sentence& sentence) const { return predict(classifier_text(sentence)); }

  const NGramConfig& config() const { return cfg_; }
  const LinearModel& model() const { return model_; }

  std::string to_json() const;
  static SourceClassifier from_json(const std::string& text);
  void save(const std::string& path) const;
  static SourceClassifier load(const std::string& path);

 private:
  NGramConfig cfg_;
  LinearModel model_;
};

struct JackknifeResult {
  std::size_t folds = 0;
  std::vector<std::string> gold;       // pooled order: treebank by treebank
  std::vector<std::string> predicted;
  std::vector<std::size_t> fold_of;    // fold of each pooled sentence
  // Pooled indices each fold model was trained on; lets callers verify that
  // no sentence is labeled by a model that saw it.
  std::vector<std::vector<std::size_t>> training_indices;
};

std::size_t jackknife_fold_count(const std::vector<std::size_t>& per_source_counts);

JackknifeResult jackknife_labels(const std::vector<const Treebank*>& treebanks, const NGramConfig& cfg,
                                 const LinearHyper& hyper);

}  // namespace dataemb
