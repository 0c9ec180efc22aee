#include "dataemb/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"
#include "dataemb/random.hpp"
#include "dataemb/text.hpp"

namespace dataemb {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void accumulate(std::vector<std::uint32_t>& indices, const std::vector<std::string>& grams, char family,
                std::size_t dim) {
  for (const std::string& g : grams) indices.push_back(hash_feature(family, g, dim));
}

double dot(const std::vector<double>& w, const SparseVector& x) {
  double s = 0.0;
  for (const auto& [i, v] : x.entries) s += w[i] * v;
  return s;
}

}  // namespace

void NGramConfig::validate() const {
  auto ok = [](int lo, int hi) { return lo >= 1 && lo <= hi && hi <= 7; };
  if (!ok(word_min, word_max) || !ok(char_min, char_max)) {
    throw UsageError("n-gram ranges must satisfy 1 <= min <= max <= 7, got " + label());
  }
  if (!is_power_of_two(feature_space_size) || feature_space_size > (std::size_t{1} << 32)) {
    throw UsageError("feature space size must be a power of two no larger than 2^32");
  }
}

std::string NGramConfig::label() const {
  return "w" + std::to_string(word_min) + "-" + std::to_string(word_max) + "_c" + std::to_string(char_min) + "-" +
         std::to_string(char_max);
}

std::vector<NGramConfig> default_grid(std::size_t feature_space_size) {
  std::vector<NGramConfig> out;
  for (int w = 1; w <= 7; ++w) {
    for (int c = 1; c <= 7; ++c) out.push_back(NGramConfig{1, w, 1, c, feature_space_size});
  }
  return out;
}

double SparseVector::total() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second;
  return s;
}

std::vector<std::string> word_ngrams(std::string_view text, int min_n, int max_n) {
  const auto words = split_whitespace(text);
  std::vector<std::string> out;
  for (int n = min_n; n <= max_n; ++n) {
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string g(words[i]);
      for (int k = 1; k < n; ++k) {
        g += kWordJoiner;
        g += words[i + k];
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::vector<std::string> char_ngrams(std::string_view text, int min_n, int max_n) {
  const auto chars = utf8_chars(text);
  std::vector<std::string> out;
  for (int n = min_n; n <= max_n; ++n) {
    for (std::size_t i = 0; i + n <= chars.size(); ++i) {
      std::string g;
      for (int k = 0; k < n; ++k) g += chars[i + k];
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::uint32_t hash_feature(char family, std::string_view ngram, std::size_t feature_space_size) {
  // FNV-1a, 64 bit; the family byte keeps word and char keys apart.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  mix(static_cast<unsigned char>(family));
  mix(0);
  for (char c : ngram) mix(static_cast<unsigned char>(c));
  return static_cast<std::uint32_t>(h & (feature_space_size - 1));
}

SparseVector featurize(std::string_view text, const NGramConfig& cfg) {
  cfg.validate();
  std::vector<std::uint32_t> indices;
  accumulate(indices, word_ngrams(text, cfg.word_min, cfg.word_max), 'w', cfg.feature_space_size);
  accumulate(indices, char_ngrams(text, cfg.char_min, cfg.char_max), 'c', cfg.feature_space_size);
  std::sort(indices.begin(), indices.end());
  SparseVector v;
  for (std::uint32_t i : indices) {
    if (!v.entries.empty() && v.entries.back().first == i) {
      v.entries.back().second += 1.0;
    } else {
      v.entries.emplace_back(i, 1.0);
    }
  }
  return v;
}

LinearModel train_linear(const std::vector<LabeledVector>& data, const LinearHyper& hyper, std::size_t dim) {
  if (data.empty()) throw DataError("cannot train a classifier on empty data");
  if (hyper.C <= 0.0 || hyper.epochs <= 0) throw UsageError("classifier needs C > 0 and epochs > 0");
  std::set<std::string> labels;
  for (const LabeledVector& d : data) {
    labels.insert(d.label);
    for (const auto& [i, v] : d.x.entries) {
      if (i >= dim) throw DataError("feature index out of range for dimensionality " + std::to_string(dim));
    }
  }
  if (labels.size() < 2) throw DataError("classifier needs at least 2 classes");

  // Canonical order first, so that only the seed decides the visiting order.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data[a].label != data[b].label) return data[a].label < data[b].label;
    return data[a].x.entries < data[b].x.entries;
  });

  LinearModel model;
  model.classes.assign(labels.begin(), labels.end());
  model.dim = dim;
  model.hyper = hyper;
  model.weights.assign(model.classes.size(), std::vector<double>());
  model.bias.assign(model.classes.size(), 0.0);

  const double n = static_cast<double>(data.size());
  const double lambda = 1.0 / (hyper.C * n);

  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    std::vector<double> v(dim, 0.0);
    double vb = 0.0;
    double scale = 1.0;
    Rng rng(hyper.seed * 1000003ull + c);
    std::vector<std::size_t> visit = order;
    std::uint64_t t = 0;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      rng.shuffle(visit);
      for (std::size_t idx : visit) {
        ++t;
        const LabeledVector& ex = data[idx];
        const double y = ex.label == model.classes[c] ? 1.0 : -1.0;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double margin = y * scale * (dot(v, ex.x) + vb);
        const double shrink = 1.0 - 1.0 / static_cast<double>(t);
        if (shrink <= 0.0) {
          std::fill(v.begin(), v.end(), 0.0);
          vb = 0.0;
          scale = 1.0;
        } else {
          scale *= shrink;
        }
        if (margin < 1.0) {
          const double step = eta * y / scale;
          for (const auto& [i, val] : ex.x.entries) v[i] += step * val;
          vb += step;
        }
        if (scale < 1e-9) {
          for (double& w : v) w *= scale;
          vb *= scale;
          scale = 1.0;
        }
      }
    }
    for (double& w : v) w *= scale;
    model.weights[c] = std::move(v);
    model.bias[c] = vb * scale;
  }
  return model;
}

SourcePrediction predict_source(const LinearModel& model, const SparseVector& x) {
  for (const auto& e : x.entries) {
    if (e.first >= model.dim) {
      throw DataError("feature index " + std::to_string(e.first) + " exceeds model dimensionality " +
                      std::to_string(model.dim));
    }
  }
  SourcePrediction p;
  p.scores.resize(model.classes.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    p.scores[c] = dot(model.weights[c], x) + model.bias[c];
    if (p.scores[c] > p.scores[best]) best = c;
  }
  p.label = model.classes.empty() ? std::string() : model.classes[best];
  return p;
}

std::map<std::string, double> per_class_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) throw DataError("label lists differ in length");
  if (gold.empty()) throw DataError("cannot score empty label lists");
  std::map<std::string, std::size_t> tp, fp, fn;
  std::set<std::string> classes(gold.begin(), gold.end());
  classes.insert(pred.begin(), pred.end());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) {
      ++tp[gold[i]];
    } else {
      ++fp[pred[i]];
      ++fn[gold[i]];
    }
  }
  std::map<std::string, double> out;
  for (const std::string& c : classes) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    out[c] = denom == 0.0 ? 0.0 : 2.0 * tp[c] / denom;
  }
  return out;
}

double macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  const auto f1 = per_class_f1(gold, pred);
  double s = 0.0;
  for (const auto& [c, v] : f1) s += v;
  return s / static_cast<double>(f1.size());
}

std::string classifier_text(const Sentence& sentence) {
  for (const std::string& c : sentence.comments) {
    if (c.rfind("text = ", 0) == 0) return c.substr(7);
  }
  return sentence.text();
}

SourceClassifier SourceClassifier::train(const std::vector<LabeledText>& data, const NGramConfig& cfg,
                                         const LinearHyper& hyper) {
  cfg.validate();
  std::vector<LabeledVector> vecs;
  vecs.reserve(data.size());
  for (const LabeledText& d : data) vecs.push_back({featurize(d.text, cfg), d.label});
  return SourceClassifier(cfg, train_linear(vecs, hyper, cfg.feature_space_size));
}

SourcePrediction SourceClassifier::predict(std::string_view text) const {
  return predict_source(model_, featurize(text, cfg_));
}

std::string SourceClassifier::to_json() const {
  json doc;
  doc["format"] = "dataemb-linear";
  doc["version"] = kCheckpointVersion;
  doc["ngram"] = {{"word_min", cfg_.word_min},
                  {"word_max", cfg_.word_max},
                  {"char_min", cfg_.char_min},
                  {"char_max", cfg_.char_max},
                  {"feature_space_size", cfg_.feature_space_size}};
  doc["hyper"] = {{"C", model_.hyper.C}, {"epochs", model_.hyper.epochs}, {"seed", model_.hyper.seed}};
  doc["classes"] = model_.classes;
  doc["dim"] = model_.dim;
  doc["bias"] = model_.bias;
  json weights = json::array();
  for (const auto& w : model_.weights) {
    json nz = json::array();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] != 0.0) nz.push_back(json::array({i, w[i]}));
    }
    weights.push_back(std::move(nz));
  }
  doc["weights"] = std::move(weights);
  return doc.dump();
}

SourceClassifier SourceClassifier::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "dataemb-linear") throw DataError("not a classifier checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) throw DataError("unsupported classifier version");
    NGramConfig cfg;
    const json& ng = doc.at("ngram");
    cfg.word_min = ng.at("word_min");
    cfg.word_max = ng.at("word_max");
    cfg.char_min = ng.at("char_min");
    cfg.char_max = ng.at("char_max");
    cfg.feature_space_size = ng.at("feature_space_size");
    cfg.validate();
    LinearModel m;
    m.hyper.C = doc.at("hyper").at("C");
    m.hyper.epochs = doc.at("hyper").at("epochs");
    m.hyper.seed = doc.at("hyper").at("seed");
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    m.dim = doc.at("dim");
    m.bias = doc.at("bias").get<std::vector<double>>();
    for (const json& nz : doc.at("weights")) {
      std::vector<double> w(m.dim, 0.0);
      for (const json& e : nz) {
        const std::size_t i = e.at(0);
        if (i >= m.dim) throw DataError("weight index out of range");
        w[i] = e.at(1).get<double>();
      }
      m.weights.push_back(std::move(w));
    }
    if (m.weights.size() != m.classes.size() || m.bias.size() != m.classes.size()) {
      throw DataError("classifier checkpoint is inconsistent");
    }
    return SourceClassifier(cfg, std::move(m));
  } catch (const json::exception& e) {
    throw DataError(std::string("classifier checkpoint: ") + e.what());
  }
}

void SourceClassifier::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_json();
}

SourceClassifier SourceClassifier::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

GridSearchResult grid_search(const std::vector<LabeledText>& train, const std::vector<LabeledText>& dev,
                             const std::vector<NGramConfig>& candidates, const LinearHyper& hyper) {
  if (candidates.empty()) throw UsageError("grid search needs at least one candidate");
  if (dev.empty()) throw DataError("grid search needs a non-empty dev set");
  std::vector<std::string> gold;
  for (const LabeledText& d : dev) gold.push_back(d.label);

  GridSearchResult result;
  bool have_best = false;
  for (const NGramConfig& cfg : candidates) {
    const SourceClassifier clf = SourceClassifier::train(train, cfg, hyper);
    std::vector<std::string> pred;
    for (const LabeledText& d : dev) pred.push_back(clf.predict(d.text).label);
    const double f1 = macro_f1(gold, pred);
    result.evaluated.emplace_back(cfg, f1);
    auto better = [&]() {
      if (!have_best) return true;
      if (f1 != result.best_macro_f1) return f1 > result.best_macro_f1;
      const int sum = cfg.word_max + cfg.char_max;
      const int best_sum = result.best.word_max + result.best.char_max;
      if (sum != best_sum) return sum < best_sum;
      return cfg.word_max < result.best.word_max;
    };
    if (better()) {
      result.best = cfg;
      result.best_macro_f1 = f1;
      have_best = true;
    }
  }
  return result;
}

std::size_t jackknife_fold_count(const std::vector<std::size_t>& per_source_counts) {
  std::size_t smallest = *std::min_element(per_source_counts.begin(), per_source_counts.end());
  std::size_t total = std::accumulate(per_source_counts.begin(), per_source_counts.end(), std::size_t{0});
  std::size_t k = std::min<std::size_t>(5, smallest);
  if (k < 2) k = std::min<std::size_t>(5, std::max<std::size_t>(2, total / 2));
  return k;
}

JackknifeResult jackknife_labels(const std::vector<const Treebank*>& treebanks, const NGramConfig& cfg,
                                 const LinearHyper& hyper) {
  if (treebanks.size() < 2) throw DataError("jack-knifing needs at least 2 sources");
  std::vector<std::size_t> counts;
  for (const Treebank* tb : treebanks) {
    if (tb->sentences.empty()) throw DataError("source '" + tb->source_id + "' has no train sentences");
    counts.push_back(tb->sentences.size());
  }

  JackknifeResult r;
  r.folds = jackknife_fold_count(counts);
  // Stratified by source unless some source is too small to fill two folds,
  // in which case folds run over the pooled index.
  const bool stratified = *std::min_element(counts.begin(), counts.end()) >= 2;
  std::vector<std::string> texts;
  for (const Treebank* tb : treebanks) {
    for (std::size_t i = 0; i < tb->sentences.size(); ++i) {
      r.fold_of.push_back((stratified ? i : texts.size()) % r.folds);
      texts.push_back(classifier_text(tb->sentences[i]));
      r.gold.push_back(tb->source_id);
    }
  }
  r.predicted.assign(texts.size(), std::string());
  r.training_indices.assign(r.folds, {});

  std::vector<SparseVector> features;
  features.reserve(texts.size());
  for (const std::string& t : texts) features.push_back(featurize(t, cfg));

  for (std::size_t fold = 0; fold < r.folds; ++fold) {
    std::vector<LabeledVector> train;
    std::set<std::string> labels;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (r.fold_of[i] == fold) continue;
      train.push_back({features[i], r.gold[i]});
      labels.insert(r.gold[i]);
      r.training_indices[fold].push_back(i);
    }
    if (labels.empty()) continue;
    if (labels.size() == 1) {
      // Only one class left outside this fold: it is the only possible answer.
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (r.fold_of[i] == fold) r.predicted[i] = *labels.begin();
      }
      continue;
    }
    const LinearModel model = train_linear(train, hyper, cfg.feature_space_size);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (r.fold_of[i] == fold) r.predicted[i] = predict_source(model, features[i]).label;
    }
  }
  return r;
}

}  // namespace dataemb
