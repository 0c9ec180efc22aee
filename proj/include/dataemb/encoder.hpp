#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dataemb/conllu.hpp"
#include "dataemb/nn.hpp"

namespace dataemb {

// Which data-source id the encoder conditions on.
enum class SourceMode { None, Gold, Pred };

std::string to_string(SourceMode mode);
SourceMode source_mode_from_string(const std::string& name);

struct EncoderConfig {
  std::size_t char_dim = 32;     // character embedding size
  std::size_t char_hidden = 32;  // per direction; char representation d_c = 2 * char_hidden
  std::size_t word_dim = 64;     // d_w
  std::size_t dataset_dim = 12;  // d_e
  std::size_t hidden = 128;      // per direction; e(c_i) has width 2 * hidden
  bool use_dataset_embedding = false;

  std::size_t char_repr_dim() const { return 2 * char_hidden; }
  std::size_t word_repr_dim() const { return char_repr_dim() + word_dim; }
  std::size_t input_dim() const { return word_repr_dim() + (use_dataset_embedding ? dataset_dim : 0); }
  std::size_t output_dim() const { return 2 * hidden; }
};

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& doc, EncoderConfig defaults = {});

// Index 0 is reserved for unknown items.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& items);

  std::size_t index(const std::string& item) const;
  bool contains(const std::string& item) const { return index_.count(item) > 0; }
  const std::string& item(std::size_t i) const { return items_.at(i); }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncoderVocabularies {
  Vocabulary words;
  Vocabulary chars;
};

// Forms and characters of the given sentences, sorted.
EncoderVocabularies build_vocabularies(const std::vector<const Sentence*>& sentences);

// Shuffled sentence indices for one epoch, truncated once either cap is hit.
// A sentence that would cross the word cap is dropped, except the first.
std::vector<std::size_t> epoch_sample(const std::vector<const Sentence*>& data,
                                      std::optional<std::size_t> max_sentences,
                                      std::optional<std::size_t> max_words, Rng& rng);

// Character BiLSTM word representation plus word embedding, optionally
// concatenated with a learned dataset embedding e(d), fed into a sentence
// level BiLSTM.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& cfg, EncoderVocabularies vocab, std::vector<std::string> sources,
          nn::ParameterCollection& params, Rng& rng);

  const EncoderConfig& config() const { return cfg_; }
  const EncoderVocabularies& vocabularies() const { return vocab_; }
  const std::vector<std::string>& sources() const { return sources_; }

  nn::Expr embed_chars(nn::Graph& g, const std::string& form) const;
  nn::Expr embed_word(nn::Graph& g, const std::string& form) const;
  nn::Expr dataset_embedding(nn::Graph& g, const std::string& source_id) const;

  // Source id used for a sentence under `mode`; throws on missing or unknown ids.
  const std::string& resolve_source(const Sentence& sentence, SourceMode mode) const;

  // Per-token inputs to the sentence BiLSTM.
  std::vector<nn::Expr> inputs(nn::Graph& g, const Sentence& sentence, SourceMode mode) const;
  // Contextual encodings e(c_i), one per token.
  std::vector<nn::Expr> encode(nn::Graph& g, const Sentence& sentence, SourceMode mode) const;

  const nn::Parameter* dataset_table() const { return dataset_table_; }
  // TSV: header "source_id\te0\te1...", one row per source.
  std::string export_table_tsv() const;

  nlohmann::json to_json() const;  // config, vocabularies and sources
  static Encoder from_json(const nlohmann::json& doc, nn::ParameterCollection& params);

 private:
  EncoderConfig cfg_;
  EncoderVocabularies vocab_;
  std::vector<std::string> sources_;
  std::unordered_map<std::string, std::size_t> source_index_;
  nn::Parameter* char_table_ = nullptr;
  nn::Parameter* word_table_ = nullptr;
  nn::Parameter* dataset_table_ = nullptr;
  nn::BiLstm char_lstm_;
  nn::BiLstm sentence_lstm_;
};

}  // namespace dataemb
