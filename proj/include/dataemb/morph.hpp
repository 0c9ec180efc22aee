#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dataemb/encoder.hpp"
#include "dataemb/nn.hpp"

namespace dataemb {

// Sorted ';'-join of the features; "_" for an empty bundle.
std::string canonical_bundle(const std::set<std::string>& feats);
std::set<std::string> bundle_features(const std::string& canonical);

struct MorphConfig {
  EncoderConfig encoder;
  std::size_t tag_dim = 16;          // bundle embedding fed to the lemma decoder
  std::size_t lemma_char_dim = 32;
  std::size_t lemma_hidden = 64;     // per direction, form encoder
  std::size_t decoder_hidden = 64;
  std::size_t attention_dim = 64;
  std::size_t epochs = 10;
  double tag_loss_weight = 1.0;
  nn::TrainerConfig trainer = default_trainer();

  static nn::TrainerConfig default_trainer() {
    nn::TrainerConfig t;
    t.max_words_per_epoch = 500000;
    return t;
  }
};

nlohmann::json to_json(const MorphConfig& cfg);
MorphConfig morph_config_from_json(const nlohmann::json& doc, MorphConfig defaults = {});

struct MorphEpochLog {
  std::size_t epoch = 0;
  std::size_t words = 0;
  double tag_loss = 0.0;    // mean cross-entropy per word
  double lemma_loss = 0.0;  // mean summed character cross-entropy per word
};

struct MorphLosses {
  nn::Expr tag;    // summed over the sentence
  nn::Expr lemma;  // summed over words and characters
};

class MorphModel {
 public:
  MorphModel(const MorphConfig& cfg, EncoderVocabularies vocab, std::vector<std::string> sources,
             std::vector<std::string> bundles, std::vector<std::string> lemma_chars, SourceMode mode);
  MorphModel(MorphModel&&) = default;
  MorphModel& operator=(MorphModel&&) = default;

  const MorphConfig& config() const { return cfg_; }
  const Encoder& encoder() const { return encoder_; }
  SourceMode mode() const { return mode_; }
  const std::vector<std::string>& bundles() const { return bundles_; }
  std::size_t bundle_id(const std::string& canonical) const;  // throws when absent
  std::size_t max_lemma_length(const std::string& form) const;
  nn::ParameterCollection& params() { return *params_; }
  const nn::ParameterCollection& params() const { return *params_; }

  nn::Expr tag_scores(nn::Graph& g, nn::Expr encoding) const;
  // Canonical bundle per token.
  std::vector<std::string> tag_sentence(const Sentence& sentence) const { return tag_sentence(sentence, mode_); }
  std::vector<std::string> tag_sentence(const Sentence& sentence, SourceMode mode) const;

  // Greedy attention decoding, at most 2 * |form| + 8 characters.
  std::string decode_lemma(nn::Graph& g, nn::Expr encoding, const std::string& form, std::size_t bundle) const;
  // Negative log-likelihood of `lemma` followed by end-of-sequence.
  nn::Expr lemma_loss(nn::Graph& g, nn::Expr encoding, const std::string& form, std::size_t bundle,
                      const std::string& lemma) const;

  // Copy of the treebank with FEATS and LEMMA replaced by predictions.
  Treebank predict_treebank(const Treebank& tb, SourceMode mode) const;

  MorphLosses sentence_loss(nn::Graph& g, const Sentence& sentence) const;

  nlohmann::json to_json() const;
  static MorphModel from_json(const nlohmann::json& doc);
  void save(const std::string& path) const;
  static MorphModel load(const std::string& path);

 private:
  MorphModel(const MorphConfig& cfg, SourceMode mode, std::vector<std::string> bundles,
             std::vector<std::string> lemma_chars);
  void build_heads(Rng& rng);

  struct FormMemory {
    std::vector<nn::Expr> states;     // H_j
    std::vector<nn::Expr> projected;  // W_a H_j
  };
  FormMemory encode_form(nn::Graph& g, const std::string& form) const;
  // One decoder step; returns output logits and updates (h, c).
  nn::Expr decoder_step(nn::Graph& g, const FormMemory& memory, nn::Expr encoding, nn::Expr tag, std::size_t prev,
                        nn::Expr& h, nn::Expr& c) const;

  MorphConfig cfg_;
  SourceMode mode_ = SourceMode::None;
  std::vector<std::string> bundles_;
  Vocabulary lemma_vocab_;  // 0 <unk>, 1 <s>, 2 </s>, then characters
  std::unique_ptr<nn::ParameterCollection> params_;
  Encoder encoder_;
  nn::Parameter* tag_w_ = nullptr;
  nn::Parameter* tag_b_ = nullptr;
  nn::Parameter* tag_emb_ = nullptr;
  nn::Parameter* char_emb_ = nullptr;
  nn::BiLstm form_lstm_;
  nn::LstmLayer decoder_;
  nn::Parameter* att_w_ = nullptr;
  nn::Parameter* att_u_ = nullptr;
  nn::Parameter* att_v_ = nullptr;
  nn::Parameter* out_w_ = nullptr;
  nn::Parameter* out_b_ = nullptr;
};

MorphModel train_joint(const std::vector<const Sentence*>& train, const std::vector<std::string>& sources,
                       SourceMode mode, const MorphConfig& cfg,
                       const std::function<void(const MorphEpochLog&)>& on_epoch = {});

}  // namespace dataemb
