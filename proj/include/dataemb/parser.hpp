#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dataemb/encoder.hpp"
#include "dataemb/nn.hpp"
#include "dataemb/transition.hpp"

namespace dataemb {

struct ParserConfig {
  EncoderConfig encoder;
  std::size_t mlp_hidden = 100;
  bool allow_swap = true;
  std::size_t epochs = 10;
  double explore_probability = 0.1;
  std::size_t burn_in_epochs = 1;
  nn::TrainerConfig trainer = default_trainer();

  static nn::TrainerConfig default_trainer() {
    nn::TrainerConfig t;
    t.max_sentences_per_epoch = 15000;
    return t;
  }
};

nlohmann::json to_json(const ParserConfig& cfg);
ParserConfig parser_config_from_json(const nlohmann::json& doc, ParserConfig defaults = {});

// One scored candidate. Score vector layout: SHIFT, SWAP, LEFT_ARC per label,
// RIGHT_ARC per label.
struct ScoredTransition {
  Transition transition;
  std::size_t index = 0;  // into the score vector
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t sentences = 0;
  double loss = 0.0;  // summed hinge loss
};

class ParserModel {
 public:
  ParserModel(const ParserConfig& cfg, EncoderVocabularies vocab, std::vector<std::string> sources,
              std::vector<std::string> labels, SourceMode mode);
  ParserModel(ParserModel&&) = default;
  ParserModel& operator=(ParserModel&&) = default;

  const ParserConfig& config() const { return cfg_; }
  const Encoder& encoder() const { return encoder_; }
  const std::vector<std::string>& labels() const { return labels_; }
  SourceMode mode() const { return mode_; }
  nn::ParameterCollection& params() { return *params_; }
  const nn::ParameterCollection& params() const { return *params_; }

  std::size_t score_size() const { return 2 * labels_.size() + 2; }
  std::size_t score_index(const Transition& t) const;  // throws for unknown labels
  Transition transition_at(std::size_t index) const;

  // Scores every (kind, label) for a state. `encodings` are e(c_1..c_n).
  nn::Expr score(nn::Graph& g, const ParserState& state, const std::vector<nn::Expr>& encodings) const;
  std::vector<ScoredTransition> candidates(const ParserState& state) const;

  DependencyTree parse(const Sentence& sentence) const { return parse(sentence, mode_); }
  DependencyTree parse(const Sentence& sentence, SourceMode mode) const;
  // Copy of the treebank with HEAD and DEPREL replaced by predictions.
  Treebank parse_treebank(const Treebank& tb, SourceMode mode) const;

  // Hinge loss of one sentence along an oracle-guided path. Adds nothing to
  // the graph when every step already has the required margin.
  std::vector<nn::Expr> sentence_loss(nn::Graph& g, const Sentence& sentence, bool explore, Rng& rng) const;

  nlohmann::json to_json() const;
  static ParserModel from_json(const nlohmann::json& doc);
  void save(const std::string& path) const;
  static ParserModel load(const std::string& path);

 private:
  ParserModel(const ParserConfig& cfg, SourceMode mode, std::vector<std::string> labels);

  ParserConfig cfg_;
  SourceMode mode_ = SourceMode::None;
  std::vector<std::string> labels_;
  std::unique_ptr<nn::ParameterCollection> params_;
  Encoder encoder_;
  nn::Parameter* root_ = nullptr;
  nn::Parameter* pad_ = nullptr;
  nn::Parameter* w1_ = nullptr;
  nn::Parameter* b1_ = nullptr;
  nn::Parameter* w2_ = nullptr;
  nn::Parameter* b2_ = nullptr;

  void build_scorer(Rng& rng);
};

// Trains on sentences that all carry gold trees. Sources are the group
// members (needed when mode is not None).
ParserModel train_parser(const std::vector<const Sentence*>& train, const std::vector<std::string>& sources,
                         SourceMode mode, const ParserConfig& cfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace dataemb
