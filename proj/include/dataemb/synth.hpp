#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataemb/conllu.hpp"
#include "dataemb/registry.hpp"

// Seeded synthetic corpora for directional experiments at desk scale.
namespace dataemb {

struct SynthSource {
  std::string id;
  std::string language;
  Treebank train;
  Treebank dev;
  Treebank test;
};

struct SynthCorpus {
  std::string group_id;
  std::vector<SynthSource> sources;
};

// Two sources over one shared vocabulary w00..wNN. Forms below
// `conflict_forms` get a source-specific bundle and only occur in conflict
// sentences, which are right-branching chains in the first source and
// left-branching chains in the second; sentence distributions are identical.
// Everything else is annotated identically in both sources.
struct AmbiguityConfig {
  std::uint64_t seed = 7;
  std::size_t train_sentences = 200;
  std::size_t dev_sentences = 80;
  std::size_t test_sentences = 80;
  std::size_t vocabulary = 50;
  std::size_t conflict_forms = 10;
  double conflict_share = 0.5;
  std::size_t min_length = 3;
  std::size_t max_length = 6;
};

SynthCorpus make_ambiguity_corpus(const AmbiguityConfig& cfg);

// Three sources. The first two each own a set of marker words; every
// sentence carries markers of its style, shared conflict words tagged by
// style, and neutral filler. The third source mixes sentences of both styles
// half and half, each annotated like its lookalike (recorded in a
// "lookalike = <id>" comment).
struct MixtureConfig {
  std::uint64_t seed = 7;
  std::size_t train_sentences = 200;
  std::size_t dev_sentences = 80;
  std::size_t test_sentences = 80;
  std::size_t markers = 30;
  std::size_t markers_per_sentence = 2;
  std::size_t conflict_forms = 10;
  std::size_t neutral_forms = 30;
  std::size_t min_length = 5;
  std::size_t max_length = 8;
};

SynthCorpus make_mixture_corpus(const MixtureConfig& cfg);

// Tokens whose annotation depends on the source (MISC Conflict=Yes).
bool is_conflict_token(const Sentence& sentence, const Token& token);
bool is_conflict_sentence(const Sentence& sentence);
std::optional<std::string> lookalike_of(const Sentence& sentence);

Registry to_registry(const std::vector<SynthCorpus>& corpora);
// Writes <source>-{train,dev,test}.conllu and registry.json into `dir`.
void write_corpora(const std::vector<SynthCorpus>& corpora, const std::string& dir);

}  // namespace dataemb
