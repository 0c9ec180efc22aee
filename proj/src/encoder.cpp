#include "dataemb/encoder.hpp"

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"
#include "dataemb/text.hpp"

namespace dataemb {

using nlohmann::json;
using nn::Expr;
using nn::Graph;

std::string to_string(SourceMode mode) {
  switch (mode) {
    case SourceMode::None: return "none";
    case SourceMode::Gold: return "gold";
    case SourceMode::Pred: return "pred";
  }
  return "none";
}

SourceMode source_mode_from_string(const std::string& name) {
  if (name == "none") return SourceMode::None;
  if (name == "gold") return SourceMode::Gold;
  if (name == "pred") return SourceMode::Pred;
  throw UsageError("unknown source mode '" + name + "'");
}

json to_json(const EncoderConfig& cfg) {
  return {{"char_dim", cfg.char_dim},       {"char_hidden", cfg.char_hidden},
          {"word_dim", cfg.word_dim},       {"dataset_dim", cfg.dataset_dim},
          {"hidden", cfg.hidden},           {"use_dataset_embedding", cfg.use_dataset_embedding}};
}

EncoderConfig encoder_config_from_json(const json& doc, EncoderConfig cfg) {
  cfg.char_dim = doc.value("char_dim", cfg.char_dim);
  cfg.char_hidden = doc.value("char_hidden", cfg.char_hidden);
  cfg.word_dim = doc.value("word_dim", cfg.word_dim);
  cfg.dataset_dim = doc.value("dataset_dim", cfg.dataset_dim);
  cfg.hidden = doc.value("hidden", cfg.hidden);
  cfg.use_dataset_embedding = doc.value("use_dataset_embedding", cfg.use_dataset_embedding);
  if (cfg.char_dim == 0 || cfg.char_hidden == 0 || cfg.word_dim == 0 || cfg.hidden == 0) {
    throw UsageError("encoder dimensions must be positive (dataset_dim may be 0)");
  }
  return cfg;
}

Vocabulary::Vocabulary() : items_{"<unk>"} { index_["<unk>"] = kUnknown; }

Vocabulary::Vocabulary(const std::vector<std::string>& items) : Vocabulary() {
  for (const std::string& it : items) {
    if (index_.count(it)) continue;
    index_[it] = items_.size();
    items_.push_back(it);
  }
}

std::size_t Vocabulary::index(const std::string& item) const {
  auto it = index_.find(item);
  return it == index_.end() ? kUnknown : it->second;
}

EncoderVocabularies build_vocabularies(const std::vector<const Sentence*>& sentences) {
  std::set<std::string> words, chars;
  for (const Sentence* s : sentences) {
    for (const Token& t : s->tokens) {
      words.insert(t.form);
      for (std::string& c : utf8_chars(t.form)) chars.insert(std::move(c));
    }
  }
  return {Vocabulary({words.begin(), words.end()}), Vocabulary({chars.begin(), chars.end()})};
}

std::vector<std::size_t> epoch_sample(const std::vector<const Sentence*>& data,
                                      std::optional<std::size_t> max_sentences,
                                      std::optional<std::size_t> max_words, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::size_t> out;
  std::size_t words = 0;
  for (std::size_t i : order) {
    if (max_sentences && out.size() >= *max_sentences) break;
    const std::size_t n = data[i]->size();
    if (max_words && !out.empty() && words + n > *max_words) break;
    out.push_back(i);
    words += n;
  }
  return out;
}

Encoder::Encoder(const EncoderConfig& cfg, EncoderVocabularies vocab, std::vector<std::string> sources,
                 nn::ParameterCollection& params, Rng& rng)
    : cfg_(cfg), vocab_(std::move(vocab)), sources_(std::move(sources)) {
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (!source_index_.emplace(sources_[i], i).second) throw DataError("duplicate source '" + sources_[i] + "'");
  }
  char_table_ = &params.add_glorot("enc.char_emb", vocab_.chars.size(), cfg_.char_dim, rng);
  char_lstm_ = nn::BiLstm(params, "enc.char_lstm", cfg_.char_dim, cfg_.char_hidden, rng);
  word_table_ = &params.add_glorot("enc.word_emb", vocab_.words.size(), cfg_.word_dim, rng);
  sentence_lstm_ = nn::BiLstm(params, "enc.sent_lstm", cfg_.input_dim(), cfg_.hidden, rng);
  // Created last so that d_e = 0 leaves every other initial value unchanged.
  if (cfg_.use_dataset_embedding) {
    if (sources_.empty()) throw DataError("dataset embeddings need at least one source");
    dataset_table_ = &params.add_glorot("enc.dataset_emb", sources_.size(), cfg_.dataset_dim, rng);
  }
}

Expr Encoder::embed_chars(Graph& g, const std::string& form) const {
  if (form.empty()) throw DataError("cannot embed an empty form");
  std::vector<Expr> chars;
  for (const std::string& c : utf8_chars(form)) chars.push_back(g.lookup(*char_table_, vocab_.chars.index(c)));
  return char_lstm_.final_state(g, chars);
}

Expr Encoder::embed_word(Graph& g, const std::string& form) const {
  Expr chars = embed_chars(g, form);
  return nn::concat({chars, g.lookup(*word_table_, vocab_.words.index(form))});
}

Expr Encoder::dataset_embedding(Graph& g, const std::string& source_id) const {
  if (!dataset_table_) throw UsageError("encoder was built without dataset embeddings");
  auto it = source_index_.find(source_id);
  if (it == source_index_.end()) throw DataError("source '" + source_id + "' is not a member of the group");
  return g.lookup(*dataset_table_, it->second);
}

const std::string& Encoder::resolve_source(const Sentence& sentence, SourceMode mode) const {
  const std::optional<std::string>& id = mode == SourceMode::Gold ? sentence.source_id : sentence.predicted_source_id;
  if (mode == SourceMode::None) throw UsageError("mode none has no source id");
  if (!id) {
    throw DataError(std::string("sentence has no ") + (mode == SourceMode::Gold ? "gold" : "predicted") +
                    " source id");
  }
  if (!source_index_.count(*id)) throw DataError("source '" + *id + "' is not a member of the group");
  return *id;
}

std::vector<Expr> Encoder::inputs(Graph& g, const Sentence& sentence, SourceMode mode) const {
  const bool wants_table = mode != SourceMode::None;
  if (wants_table != cfg_.use_dataset_embedding) {
    throw UsageError("source mode '" + to_string(mode) + "' does not match an encoder " +
                     (cfg_.use_dataset_embedding ? "with" : "without") + " dataset embeddings");
  }
  std::vector<Expr> out;
  out.reserve(sentence.size());
  std::optional<Expr> source;
  if (wants_table) source = dataset_embedding(g, resolve_source(sentence, mode));
  for (const Token& t : sentence.tokens) {
    Expr w = embed_word(g, t.form);
    out.push_back(source ? nn::concat({w, *source}) : w);
  }
  return out;
}

std::vector<Expr> Encoder::encode(Graph& g, const Sentence& sentence, SourceMode mode) const {
  if (sentence.tokens.empty()) return {};
  return sentence_lstm_.encode(g, inputs(g, sentence, mode));
}

std::string Encoder::export_table_tsv() const {
  std::ostringstream out;
  out << "source_id";
  for (std::size_t k = 0; k < cfg_.dataset_dim; ++k) out << "\te" << k;
  out << '\n';
  if (!dataset_table_) return out.str();
  const auto& vals = dataset_table_->value().values;
  for (std::size_t r = 0; r < sources_.size(); ++r) {
    out << sources_[r];
    for (std::size_t k = 0; k < cfg_.dataset_dim; ++k) out << '\t' << format_double(vals[r * cfg_.dataset_dim + k]);
    out << '\n';
  }
  return out.str();
}

json Encoder::to_json() const {
  return {{"config", dataemb::to_json(cfg_)},
          {"words", vocab_.words.items()},
          {"chars", vocab_.chars.items()},
          {"sources", sources_}};
}

Encoder Encoder::from_json(const json& doc, nn::ParameterCollection& params) {
  const EncoderConfig cfg = encoder_config_from_json(doc.at("config"));
  auto strip_unknown = [](std::vector<std::string> items) {
    if (!items.empty()) items.erase(items.begin());
    return items;
  };
  EncoderVocabularies vocab{Vocabulary(strip_unknown(doc.at("words").get<std::vector<std::string>>())),
                            Vocabulary(strip_unknown(doc.at("chars").get<std::vector<std::string>>()))};
  Rng rng(0);
  return Encoder(cfg, std::move(vocab), doc.at("sources").get<std::vector<std::string>>(), params, rng);
}

}  // namespace dataemb
