#include "dataemb/morph.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"
#include "dataemb/text.hpp"

namespace dataemb {

using nlohmann::json;
using nn::Expr;
using nn::Graph;

namespace {

constexpr const char* kFormat = "dataemb-morph";
constexpr int kVersion = 1;
constexpr std::size_t kBegin = 1;
constexpr std::size_t kEnd = 2;

std::vector<std::string> lemma_items(const std::vector<std::string>& chars) {
  std::vector<std::string> items{"<s>", "</s>"};
  items.insert(items.end(), chars.begin(), chars.end());
  return items;
}

}  // namespace

std::string canonical_bundle(const std::set<std::string>& feats) {
  if (feats.empty()) return "_";
  std::string out;
  for (const std::string& f : feats) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

std::set<std::string> bundle_features(const std::string& canonical) {
  std::set<std::string> out;
  if (canonical == "_" || canonical.empty()) return out;
  std::size_t start = 0;
  while (start <= canonical.size()) {
    const std::size_t end = std::min(canonical.find(';', start), canonical.size());
    if (end > start) out.insert(canonical.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

json to_json(const MorphConfig& cfg) {
  return {{"encoder", to_json(cfg.encoder)},
          {"tag_dim", cfg.tag_dim},
          {"lemma_char_dim", cfg.lemma_char_dim},
          {"lemma_hidden", cfg.lemma_hidden},
          {"decoder_hidden", cfg.decoder_hidden},
          {"attention_dim", cfg.attention_dim},
          {"epochs", cfg.epochs},
          {"tag_loss_weight", cfg.tag_loss_weight},
          {"trainer", nn::to_json(cfg.trainer)}};
}

MorphConfig morph_config_from_json(const json& doc, MorphConfig cfg) {
  if (doc.contains("encoder")) cfg.encoder = encoder_config_from_json(doc.at("encoder"), cfg.encoder);
  cfg.tag_dim = doc.value("tag_dim", cfg.tag_dim);
  cfg.lemma_char_dim = doc.value("lemma_char_dim", cfg.lemma_char_dim);
  cfg.lemma_hidden = doc.value("lemma_hidden", cfg.lemma_hidden);
  cfg.decoder_hidden = doc.value("decoder_hidden", cfg.decoder_hidden);
  cfg.attention_dim = doc.value("attention_dim", cfg.attention_dim);
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.tag_loss_weight = doc.value("tag_loss_weight", cfg.tag_loss_weight);
  if (doc.contains("trainer")) cfg.trainer = nn::trainer_config_from_json(doc.at("trainer"), cfg.trainer);
  if (cfg.tag_dim == 0 || cfg.lemma_char_dim == 0 || cfg.lemma_hidden == 0 || cfg.decoder_hidden == 0 ||
      cfg.attention_dim == 0) {
    throw UsageError("morph model dimensions must be positive");
  }
  if (cfg.tag_loss_weight < 0.0) throw UsageError("tag_loss_weight must be non-negative");
  return cfg;
}

MorphModel::MorphModel(const MorphConfig& cfg, SourceMode mode, std::vector<std::string> bundles,
                       std::vector<std::string> lemma_chars)
    : cfg_(cfg),
      mode_(mode),
      bundles_(std::move(bundles)),
      lemma_vocab_(lemma_items(lemma_chars)),
      params_(std::make_unique<nn::ParameterCollection>()) {
  cfg_.encoder.use_dataset_embedding = mode != SourceMode::None;
  if (bundles_.empty()) throw DataError("tagger needs at least one bundle");
  if (!std::is_sorted(bundles_.begin(), bundles_.end())) throw DataError("bundle inventory must be sorted");
}

MorphModel::MorphModel(const MorphConfig& cfg, EncoderVocabularies vocab, std::vector<std::string> sources,
                       std::vector<std::string> bundles, std::vector<std::string> lemma_chars, SourceMode mode)
    : MorphModel(cfg, mode, std::move(bundles), std::move(lemma_chars)) {
  Rng rng(cfg_.trainer.seed);
  encoder_ = Encoder(cfg_.encoder, std::move(vocab), std::move(sources), *params_, rng);
  build_heads(rng);
}

void MorphModel::build_heads(Rng& rng) {
  const std::size_t d = cfg_.encoder.output_dim();
  const std::size_t mem = 2 * cfg_.lemma_hidden;
  tag_w_ = &params_->add_glorot("morph.tag_w", bundles_.size(), d, rng);
  tag_b_ = &params_->add_zeros("morph.tag_b", {bundles_.size()});
  tag_emb_ = &params_->add_glorot("lemma.tag_emb", bundles_.size(), cfg_.tag_dim, rng);
  char_emb_ = &params_->add_glorot("lemma.char_emb", lemma_vocab_.size(), cfg_.lemma_char_dim, rng);
  form_lstm_ = nn::BiLstm(*params_, "lemma.form_lstm", cfg_.lemma_char_dim, cfg_.lemma_hidden, rng);
  decoder_ = nn::LstmLayer(*params_, "lemma.decoder", cfg_.lemma_char_dim + cfg_.tag_dim + mem + d,
                           cfg_.decoder_hidden, rng);
  att_w_ = &params_->add_glorot("lemma.att_w", cfg_.attention_dim, mem, rng);
  att_u_ = &params_->add_glorot("lemma.att_u", cfg_.attention_dim, cfg_.decoder_hidden, rng);
  att_v_ = &params_->add_glorot("lemma.att_v", 1, cfg_.attention_dim, rng);
  out_w_ = &params_->add_glorot("lemma.out_w", lemma_vocab_.size(), cfg_.decoder_hidden + mem, rng);
  out_b_ = &params_->add_zeros("lemma.out_b", {lemma_vocab_.size()});
}

std::size_t MorphModel::bundle_id(const std::string& canonical) const {
  auto it = std::lower_bound(bundles_.begin(), bundles_.end(), canonical);
  if (it == bundles_.end() || *it != canonical) throw DataError("bundle '" + canonical + "' not in the inventory");
  return static_cast<std::size_t>(it - bundles_.begin());
}

std::size_t MorphModel::max_lemma_length(const std::string& form) const { return 2 * utf8_chars(form).size() + 8; }

Expr MorphModel::tag_scores(Graph& g, Expr encoding) const {
  return nn::affine(g.param(*tag_w_), encoding, g.param(*tag_b_));
}

std::vector<std::string> MorphModel::tag_sentence(const Sentence& sentence, SourceMode mode) const {
  std::vector<std::string> out;
  if (sentence.tokens.empty()) return out;
  Graph g;
  for (const Expr& e : encoder_.encode(g, sentence, mode)) {
    const std::vector<double> s = tag_scores(g, e).value();
    out.push_back(bundles_[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())]);
  }
  return out;
}

MorphModel::FormMemory MorphModel::encode_form(Graph& g, const std::string& form) const {
  if (form.empty()) throw DataError("cannot lemmatize an empty form");
  std::vector<Expr> chars;
  for (const std::string& c : utf8_chars(form)) chars.push_back(g.lookup(*char_emb_, lemma_vocab_.index(c)));
  FormMemory memory;
  memory.states = form_lstm_.encode(g, chars);
  for (const Expr& h : memory.states) memory.projected.push_back(nn::matvec(g.param(*att_w_), h));
  return memory;
}

Expr MorphModel::decoder_step(Graph& g, const FormMemory& memory, Expr encoding, Expr tag, std::size_t prev, Expr& h,
                              Expr& c) const {
  // Additive attention on the previous decoder state.
  const Expr query = nn::matvec(g.param(*att_u_), h);
  std::vector<Expr> energies;
  for (const Expr& p : memory.projected) {
    energies.push_back(nn::matvec(g.param(*att_v_), nn::tanh(p + query)));
  }
  const Expr context = nn::weighted_sum(nn::softmax(nn::concat(energies)), memory.states);
  const Expr input = nn::concat({g.lookup(*char_emb_, prev), tag, context, encoding});
  std::tie(h, c) = decoder_.step(g, input, h, c);
  return nn::affine(g.param(*out_w_), nn::concat({h, context}), g.param(*out_b_));
}

std::string MorphModel::decode_lemma(Graph& g, Expr encoding, const std::string& form, std::size_t bundle) const {
  if (bundle >= bundles_.size()) throw DataError("bundle id out of range");
  const FormMemory memory = encode_form(g, form);
  const Expr tag = g.lookup(*tag_emb_, bundle);
  Expr h = g.zeros(cfg_.decoder_hidden);
  Expr c = g.zeros(cfg_.decoder_hidden);
  std::string out;
  std::size_t prev = kBegin;
  for (std::size_t step = 0, cap = max_lemma_length(form); step < cap; ++step) {
    const std::vector<double> logits = decoder_step(g, memory, encoding, tag, prev, h, c).value();
    // <unk> and <s> are never emitted.
    std::size_t best = kEnd;
    for (std::size_t k = kEnd; k < logits.size(); ++k) {
      if (logits[k] > logits[best]) best = k;
    }
    if (best == kEnd) break;
    out += lemma_vocab_.item(best);
    prev = best;
  }
  return out;
}

Expr MorphModel::lemma_loss(Graph& g, Expr encoding, const std::string& form, std::size_t bundle,
                            const std::string& lemma) const {
  const FormMemory memory = encode_form(g, form);
  const Expr tag = g.lookup(*tag_emb_, bundle);
  Expr h = g.zeros(cfg_.decoder_hidden);
  Expr c = g.zeros(cfg_.decoder_hidden);
  std::vector<std::size_t> targets;
  for (const std::string& ch : utf8_chars(lemma)) targets.push_back(lemma_vocab_.index(ch));
  targets.push_back(kEnd);
  std::vector<Expr> terms;
  std::size_t prev = kBegin;
  for (std::size_t y : targets) {
    terms.push_back(nn::pick_neg_log_softmax(decoder_step(g, memory, encoding, tag, prev, h, c), y));
    prev = y;
  }
  return nn::sum(terms);
}

Treebank MorphModel::predict_treebank(const Treebank& tb, SourceMode mode) const {
  Treebank out = tb;
  for (Sentence& s : out.sentences) {
    if (s.tokens.empty()) continue;
    Graph g;
    const std::vector<Expr> enc = encoder_.encode(g, s, mode);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const std::vector<double> scores = tag_scores(g, enc[i]).value();
      const std::size_t b = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
      s.tokens[i].morph = bundle_features(bundles_[b]);
      s.tokens[i].lemma = decode_lemma(g, enc[i], s.tokens[i].form, b);
    }
  }
  return out;
}

MorphLosses MorphModel::sentence_loss(Graph& g, const Sentence& sentence) const {
  if (sentence.tokens.empty()) throw DataError("empty sentence");
  const std::vector<Expr> enc = encoder_.encode(g, sentence, mode_);
  std::vector<Expr> tag_terms, lemma_terms;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const Token& t = sentence.tokens[i];
    const std::size_t b = bundle_id(canonical_bundle(t.morph));
    tag_terms.push_back(nn::pick_neg_log_softmax(tag_scores(g, enc[i]), b));
    // Teacher forcing with the gold bundle.
    lemma_terms.push_back(lemma_loss(g, enc[i], t.form, b, t.lemma));
  }
  return {nn::sum(tag_terms), nn::sum(lemma_terms)};
}

json MorphModel::to_json() const {
  std::vector<std::string> chars(lemma_vocab_.items().begin() + 3, lemma_vocab_.items().end());
  return {{"format", kFormat},
          {"version", kVersion},
          {"config", dataemb::to_json(cfg_)},
          {"mode", to_string(mode_)},
          {"bundles", bundles_},
          {"lemma_chars", chars},
          {"encoder", encoder_.to_json()},
          {"params", params_->to_json()}};
}

MorphModel MorphModel::from_json(const json& doc) {
  if (doc.value("format", std::string()) != kFormat) throw DataError("not a morph checkpoint");
  if (doc.value("version", 0) != kVersion) throw DataError("unsupported morph checkpoint version");
  MorphModel model(morph_config_from_json(doc.at("config")), source_mode_from_string(doc.at("mode")),
                   doc.at("bundles").get<std::vector<std::string>>(),
                   doc.at("lemma_chars").get<std::vector<std::string>>());
  model.encoder_ = Encoder::from_json(doc.at("encoder"), *model.params_);
  Rng rng(0);
  model.build_heads(rng);
  model.params_->load_json(doc.at("params"));
  return model;
}

void MorphModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << to_json().dump() << '\n';
}

MorphModel MorphModel::load(const std::string& path) {
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

MorphModel train_joint(const std::vector<const Sentence*>& train, const std::vector<std::string>& sources,
                       SourceMode mode, const MorphConfig& cfg,
                       const std::function<void(const MorphEpochLog&)>& on_epoch) {
  std::vector<const Sentence*> data;
  std::set<std::string> bundles, chars;
  for (const Sentence* s : train) {
    if (s->tokens.empty()) continue;
    data.push_back(s);
    for (const Token& t : s->tokens) {
      bundles.insert(canonical_bundle(t.morph));
      for (std::string& c : utf8_chars(t.lemma)) chars.insert(std::move(c));
      for (std::string& c : utf8_chars(t.form)) chars.insert(std::move(c));
    }
  }
  if (data.empty()) throw DataError("no training sentences for the tagger");
  MorphModel model(cfg, build_vocabularies(data), sources, {bundles.begin(), bundles.end()},
                   {chars.begin(), chars.end()}, mode);
  nn::Trainer trainer(model.params(), cfg.trainer);
  Rng order_rng(cfg.trainer.seed ^ 0x5eedf00dULL);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    MorphEpochLog log{epoch + 1, 0, 0.0, 0.0};
    for (std::size_t i :
         epoch_sample(data, cfg.trainer.max_sentences_per_epoch, cfg.trainer.max_words_per_epoch, order_rng)) {
      Graph g;
      const MorphLosses l = model.sentence_loss(g, *data[i]);
      log.words += data[i]->size();
      log.tag_loss += l.tag.scalar();
      log.lemma_loss += l.lemma.scalar();
      const Expr total = cfg.tag_loss_weight == 1.0 ? l.tag + l.lemma : nn::scale(l.tag, cfg.tag_loss_weight) + l.lemma;
      g.backward(total);
      trainer.step();
    }
    if (log.words > 0) {
      log.tag_loss /= static_cast<double>(log.words);
      log.lemma_loss /= static_cast<double>(log.words);
    }
    if (on_epoch) on_epoch(log);
  }
  return model;
}

}  // namespace dataemb
