#pragma once

// Small configurations and toy treebanks for model tests.

#include <string>
#include <vector>

#include "dataemb/morph.hpp"
#include "dataemb/parser.hpp"
#include "support/tree_oracles.hpp"

namespace dataemb::testing {

inline EncoderConfig tiny_encoder(std::size_t dataset_dim = 3) {
  EncoderConfig e;
  e.char_dim = 4;
  e.char_hidden = 3;
  e.word_dim = 5;
  e.dataset_dim = dataset_dim;
  e.hidden = 4;
  return e;
}

inline ParserConfig tiny_parser(std::size_t epochs = 1) {
  ParserConfig c;
  c.encoder = tiny_encoder();
  c.mlp_hidden = 6;
  c.epochs = epochs;
  return c;
}

inline MorphConfig tiny_morph(std::size_t epochs = 1) {
  MorphConfig c;
  c.encoder = tiny_encoder();
  c.tag_dim = 3;
  c.lemma_char_dim = 4;
  c.lemma_hidden = 3;
  c.decoder_hidden = 5;
  c.attention_dim = 4;
  c.epochs = epochs;
  return c;
}

// Toy language: words "ka", "kab", "kabab"... with lemma = form without a
// trailing "b" and bundle depending on the final letter. Trees come from
// `projective ? random_projective_tree : random_tree`.
inline Treebank toy_treebank(const std::string& source, std::size_t sentences, Rng& rng, bool projective = true,
                             std::size_t max_len = 6) {
  static const std::vector<std::string> stems{"ka", "lo", "mi", "su", "te", "ru"};
  Treebank tb;
  tb.source_id = source;
  for (std::size_t k = 0; k < sentences; ++k) {
    Sentence s;
    const std::size_t n = 2 + rng.below(max_len - 1);
    const DependencyTree tree = projective ? random_projective_tree(n, rng) : random_tree(n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      Token t;
      t.id = static_cast<int>(i + 1);
      const std::string stem = stems[rng.below(stems.size())];
      const bool plural = rng.bernoulli(0.5);
      t.form = plural ? stem + "b" : stem;
      t.lemma = stem;
      t.upos = "X";
      if (plural) t.morph = {"Number=Plur"};
      t.head = tree.heads[i];
      t.deprel = tree.deprels[i];
      s.tokens.push_back(t);
    }
    s.source_id = source;
    tb.sentences.push_back(std::move(s));
  }
  tb.recount();
  return tb;
}

inline std::vector<const Sentence*> pointers(const Treebank& tb) {
  std::vector<const Sentence*> out;
  for (const Sentence& s : tb.sentences) out.push_back(&s);
  return out;
}

}  // namespace dataemb::testing
