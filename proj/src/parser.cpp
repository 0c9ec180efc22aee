#include "dataemb/parser.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"

namespace dataemb {

using nlohmann::json;
using nn::Expr;
using nn::Graph;

namespace {

constexpr const char* kFormat = "dataemb-parser";
constexpr int kVersion = 1;

// Index of the largest value among `indices` (first on ties).
std::size_t argmax_of(const std::vector<double>& v, const std::vector<std::size_t>& indices) {
  std::size_t best = indices.front();
  for (std::size_t i : indices) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

json to_json(const ParserConfig& cfg) {
  return {{"encoder", to_json(cfg.encoder)},
          {"mlp_hidden", cfg.mlp_hidden},
          {"allow_swap", cfg.allow_swap},
          {"epochs", cfg.epochs},
          {"explore_probability", cfg.explore_probability},
          {"burn_in_epochs", cfg.burn_in_epochs},
          {"trainer", nn::to_json(cfg.trainer)}};
}

ParserConfig parser_config_from_json(const json& doc, ParserConfig cfg) {
  if (doc.contains("encoder")) cfg.encoder = encoder_config_from_json(doc.at("encoder"), cfg.encoder);
  cfg.mlp_hidden = doc.value("mlp_hidden", cfg.mlp_hidden);
  cfg.allow_swap = doc.value("allow_swap", cfg.allow_swap);
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.explore_probability = doc.value("explore_probability", cfg.explore_probability);
  cfg.burn_in_epochs = doc.value("burn_in_epochs", cfg.burn_in_epochs);
  if (doc.contains("trainer")) cfg.trainer = nn::trainer_config_from_json(doc.at("trainer"), cfg.trainer);
  if (cfg.mlp_hidden == 0) throw UsageError("mlp_hidden must be positive");
  if (cfg.explore_probability < 0.0 || cfg.explore_probability > 1.0) {
    throw UsageError("explore_probability must lie in [0, 1]");
  }
  return cfg;
}

ParserModel::ParserModel(const ParserConfig& cfg, SourceMode mode, std::vector<std::string> labels)
    : cfg_(cfg), mode_(mode), labels_(std::move(labels)), params_(std::make_unique<nn::ParameterCollection>()) {
  cfg_.encoder.use_dataset_embedding = mode != SourceMode::None;
  if (labels_.empty()) throw DataError("parser needs at least one dependency label");
}

ParserModel::ParserModel(const ParserConfig& cfg, EncoderVocabularies vocab, std::vector<std::string> sources,
                         std::vector<std::string> labels, SourceMode mode)
    : ParserModel(cfg, mode, std::move(labels)) {
  Rng rng(cfg_.trainer.seed);
  encoder_ = Encoder(cfg_.encoder, std::move(vocab), std::move(sources), *params_, rng);
  build_scorer(rng);
}

void ParserModel::build_scorer(Rng& rng) {
  const std::size_t d = cfg_.encoder.output_dim();
  root_ = &params_->add_glorot("parser.root", 1, d, rng);
  pad_ = &params_->add_glorot("parser.pad", 1, d, rng);
  w1_ = &params_->add_glorot("parser.w1", cfg_.mlp_hidden, 4 * d, rng);
  b1_ = &params_->add_zeros("parser.b1", {cfg_.mlp_hidden});
  w2_ = &params_->add_glorot("parser.w2", score_size(), cfg_.mlp_hidden, rng);
  b2_ = &params_->add_zeros("parser.b2", {score_size()});
}

std::size_t ParserModel::score_index(const Transition& t) const {
  switch (t.kind) {
    case TransitionKind::Shift: return 0;
    case TransitionKind::Swap: return 1;
    case TransitionKind::LeftArc:
    case TransitionKind::RightArc: {
      auto it = std::lower_bound(labels_.begin(), labels_.end(), t.label);
      if (it == labels_.end() || *it != t.label) throw DataError("unknown dependency label '" + t.label + "'");
      const std::size_t l = static_cast<std::size_t>(it - labels_.begin());
      return 2 + l + (t.kind == TransitionKind::RightArc ? labels_.size() : 0);
    }
  }
  return 0;
}

Transition ParserModel::transition_at(std::size_t index) const {
  if (index == 0) return {TransitionKind::Shift, ""};
  if (index == 1) return {TransitionKind::Swap, ""};
  const std::size_t l = index - 2;
  if (l < labels_.size()) return {TransitionKind::LeftArc, labels_[l]};
  if (l < 2 * labels_.size()) return {TransitionKind::RightArc, labels_[l - labels_.size()]};
  throw UsageError("transition index out of range");
}

Expr ParserModel::score(Graph& g, const ParserState& state, const std::vector<Expr>& encodings) const {
  if (encodings.size() != state.size()) throw DataError("encodings do not cover the sentence");
  auto item = [&](int id) { return id == 0 ? g.lookup(*root_, 0) : encodings[static_cast<std::size_t>(id - 1)]; };
  std::vector<Expr> parts;
  for (std::size_t k = 1; k <= 3; ++k) {
    parts.push_back(state.stack.size() >= k ? item(state.stack[state.stack.size() - k]) : g.lookup(*pad_, 0));
  }
  parts.push_back(state.buffer.empty() ? g.lookup(*pad_, 0) : item(state.buffer.front()));
  Expr hidden = nn::tanh(nn::affine(g.param(*w1_), nn::concat(parts), g.param(*b1_)));
  return nn::affine(g.param(*w2_), hidden, g.param(*b2_));
}

std::vector<ScoredTransition> ParserModel::candidates(const ParserState& state) const {
  std::vector<ScoredTransition> out;
  for (TransitionKind k : legal_transitions(state, cfg_.allow_swap)) {
    if (k == TransitionKind::Shift || k == TransitionKind::Swap) {
      Transition t{k, ""};
      out.push_back({t, score_index(t)});
    } else {
      for (const std::string& l : labels_) {
        Transition t{k, l};
        out.push_back({t, score_index(t)});
      }
    }
  }
  return out;
}

DependencyTree ParserModel::parse(const Sentence& sentence, SourceMode mode) const {
  if (sentence.tokens.empty()) return {};
  Graph g;
  const std::vector<Expr> enc = encoder_.encode(g, sentence, mode);
  ParserState state(sentence.size());
  while (!state.terminal()) {
    const std::vector<double> scores = score(g, state, enc).value();
    const std::vector<ScoredTransition> cands = candidates(state);
    const ScoredTransition* best = &cands.front();
    for (const ScoredTransition& c : cands) {
      if (scores[c.index] > scores[best->index]) best = &c;
    }
    apply_transition_in_place(state, best->transition, cfg_.allow_swap);
  }
  return state.tree();
}

Treebank ParserModel::parse_treebank(const Treebank& tb, SourceMode mode) const {
  Treebank out = tb;
  for (Sentence& s : out.sentences) {
    if (!s.tokens.empty()) parse(s, mode).apply_to(s);
  }
  return out;
}

std::vector<Expr> ParserModel::sentence_loss(Graph& g, const Sentence& sentence, bool explore, Rng& rng) const {
  std::vector<Expr> losses;
  if (sentence.tokens.empty()) return losses;
  const GoldOracle oracle(DependencyTree::from_sentence(sentence));
  const std::vector<Expr> enc = encoder_.encode(g, sentence, mode_);
  ParserState state(sentence.size());
  while (!state.terminal()) {
    const Expr sc = score(g, state, enc);
    const std::vector<double> v = sc.value();
    const std::vector<ScoredTransition> cands = candidates(state);
    const TransitionCosts costs = oracle.costs(state, cfg_.allow_swap);

    std::vector<int> cost(cands.size());
    int lowest = -1;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      cost[i] = oracle.labeled_cost(state, cands[i].transition, costs);
      if (lowest < 0 || cost[i] < lowest) lowest = cost[i];
    }
    std::vector<std::size_t> good, bad;
    for (std::size_t i = 0; i < cands.size(); ++i) (cost[i] == lowest ? good : bad).push_back(cands[i].index);

    const std::size_t best_good = argmax_of(v, good);
    if (!bad.empty() && v[argmax_of(v, bad)] + 1.0 > v[best_good]) {
      losses.push_back(g.scalar(1.0) + (nn::max_of(sc, bad) - nn::max_of(sc, good)));
    }

    std::size_t next = best_good;
    // Exploration only off projective gold: the swap policy for crossing
    // trees is static and defined on the gold path.
    if (explore && oracle.projective() && rng.bernoulli(cfg_.explore_probability)) {
      std::vector<std::size_t> all;
      for (const ScoredTransition& c : cands) all.push_back(c.index);
      next = argmax_of(v, all);
    }
    apply_transition_in_place(state, transition_at(next), cfg_.allow_swap);
  }
  return losses;
}

json ParserModel::to_json() const {
  return {{"format", kFormat},
          {"version", kVersion},
          {"config", dataemb::to_json(cfg_)},
          {"mode", to_string(mode_)},
          {"labels", labels_},
          {"encoder", encoder_.to_json()},
          {"params", params_->to_json()}};
}

ParserModel ParserModel::from_json(const json& doc) {
  if (doc.value("format", std::string()) != kFormat) throw DataError("not a parser checkpoint");
  if (doc.value("version", 0) != kVersion) throw DataError("unsupported parser checkpoint version");
  ParserModel model(parser_config_from_json(doc.at("config")), source_mode_from_string(doc.at("mode")),
                    doc.at("labels").get<std::vector<std::string>>());
  model.encoder_ = Encoder::from_json(doc.at("encoder"), *model.params_);
  Rng rng(0);
  model.build_scorer(rng);
  model.params_->load_json(doc.at("params"));
  return model;
}

void ParserModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << to_json().dump() << '\n';
}

ParserModel ParserModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return from_json(doc);
}

ParserModel train_parser(const std::vector<const Sentence*>& train, const std::vector<std::string>& sources,
                         SourceMode mode, const ParserConfig& cfg,
                         const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw DataError("no training sentences for the parser");
  std::set<std::string> labels;
  for (const Sentence* s : train) {
    if (!s->has_tree()) throw DataError("parser training sentence without a dependency tree");
    for (const Token& t : s->tokens) labels.insert(t.deprel);
  }
  ParserModel model(cfg, build_vocabularies(train), sources, {labels.begin(), labels.end()}, mode);
  nn::Trainer trainer(model.params(), cfg.trainer);
  Rng order_rng(cfg.trainer.seed ^ 0x5eedf00dULL);
  Rng explore_rng(cfg.trainer.seed ^ 0xe7a10e5ULL);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool explore = epoch >= cfg.burn_in_epochs && cfg.explore_probability > 0.0;
    EpochLog log{epoch + 1, 0, 0.0};
    for (std::size_t i :
         epoch_sample(train, cfg.trainer.max_sentences_per_epoch, cfg.trainer.max_words_per_epoch, order_rng)) {
      Graph g;
      const std::vector<Expr> losses = model.sentence_loss(g, *train[i], explore, explore_rng);
      ++log.sentences;
      if (losses.empty()) continue;
      const Expr total = nn::sum(losses);
      log.loss += total.scalar();
      g.backward(total);
      trainer.step();
    }
    if (on_epoch) on_epoch(log);
  }
  return model;
}

}  // namespace dataemb
