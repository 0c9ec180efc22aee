#include "dataemb/synth.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"
#include "dataemb/random.hpp"

namespace dataemb {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConflictKey = "Conflict";
constexpr const char* kLookalikeComment = "lookalike = ";

std::string numbered(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%02zu", prefix, i);
  return buf;
}

struct Word {
  std::string form;
  std::set<std::string> feats;
  bool conflict = false;
};

// Builds a sentence with gold ids, sent_id and text comments.
Sentence make_sentence(const std::vector<Word>& words, const std::vector<int>& heads,
                       const std::vector<std::string>& deprels, const std::string& source, const std::string& sent_id) {
  Sentence s;
  s.source_id = source;
  s.comments.push_back("sent_id = " + sent_id);
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i + 1);
    t.form = words[i].form;
    t.lemma = words[i].form;
    t.upos = "X";
    t.xpos = "";
    t.morph = words[i].feats;
    t.head = heads[i];
    t.deprel = deprels[i];
    t.deps = "";
    if (words[i].conflict) t.misc[kConflictKey] = "Yes";
    if (!text.empty()) text += ' ';
    text += t.form;
    s.tokens.push_back(std::move(t));
  }
  s.comments.push_back("text = " + text);
  return s;
}

Treebank make_treebank(const std::string& source, Split split, std::vector<Sentence> sentences) {
  Treebank tb;
  tb.source_id = source;
  tb.split = split;
  tb.sentences = std::move(sentences);
  tb.recount();
  return tb;
}

std::size_t draw_length(Rng& rng, std::size_t lo, std::size_t hi) {
  if (lo == 0 || hi < lo) throw UsageError("sentence length bounds must satisfy 1 <= min <= max");
  return lo + rng.below(hi - lo + 1);
}

// Flat tree: first token is the root, the rest attach to it; the label
// depends only on the form so every source agrees.
void flat_tree(const std::vector<Word>& words, std::vector<int>& heads, std::vector<std::string>& deprels) {
  heads.assign(words.size(), 1);
  deprels.assign(words.size(), "amod");
  heads[0] = 0;
  deprels[0] = "root";
  for (std::size_t i = 1; i < words.size(); ++i) {
    deprels[i] = (words[i].form.back() - '0') % 2 == 0 ? "amod" : "nmod";
  }
}

}  // namespace

bool is_conflict_token(const Sentence&, const Token& token) {
  auto it = token.misc.find(kConflictKey);
  return it != token.misc.end() && it->second == "Yes";
}

bool is_conflict_sentence(const Sentence& sentence) {
  for (const Token& t : sentence.tokens) {
    if (is_conflict_token(sentence, t)) return true;
  }
  return false;
}

std::optional<std::string> lookalike_of(const Sentence& sentence) {
  const std::string key = kLookalikeComment;
  for (const std::string& c : sentence.comments) {
    const std::size_t start = c.find_first_not_of(' ');
    if (start != std::string::npos && c.compare(start, key.size(), key) == 0) return c.substr(start + key.size());
  }
  return std::nullopt;
}

SynthCorpus make_ambiguity_corpus(const AmbiguityConfig& cfg) {
  if (cfg.conflict_forms == 0 || cfg.conflict_forms >= cfg.vocabulary) {
    throw UsageError("conflict_forms must lie in [1, vocabulary)");
  }
  const std::vector<std::string> ids{"dialect_a", "dialect_b"};
  // Bundles of the shared forms cycle through three patterns.
  const std::vector<std::set<std::string>> shared{
      {"Number=Sing"}, {"Number=Plur"}, {"Case=Gen", "Number=Sing"}};
  const std::vector<std::set<std::string>> conflict{{"Case=Nom", "Number=Sing"}, {"Case=Acc", "Number=Plur"}};

  SynthCorpus corpus{"ambiguity", {}};
  for (std::size_t src = 0; src < ids.size(); ++src) {
    // Both sources draw text from the same distribution; only the
    // annotation of conflict material differs.
    Rng rng(cfg.seed * 1000003ULL + src);
    auto generate = [&](Split split, std::size_t count) {
      std::vector<Sentence> out;
      for (std::size_t k = 0; k < count; ++k) {
        const bool is_conflict = rng.uniform() < cfg.conflict_share;
        const std::size_t n = draw_length(rng, cfg.min_length, cfg.max_length);
        std::vector<Word> words;
        std::vector<int> heads(n);
        std::vector<std::string> deprels(n);
        for (std::size_t i = 0; i < n; ++i) {
          if (is_conflict) {
            const std::size_t f = rng.below(cfg.conflict_forms);
            words.push_back({numbered('w', f), conflict[src], true});
          } else {
            const std::size_t f = cfg.conflict_forms + rng.below(cfg.vocabulary - cfg.conflict_forms);
            words.push_back({numbered('w', f), shared[f % shared.size()], false});
          }
        }
        if (is_conflict) {
          for (std::size_t i = 0; i < n; ++i) {
            if (src == 0) {  // right chain: 1 <- root, i+1 <- i
              heads[i] = static_cast<int>(i);
              deprels[i] = i == 0 ? "root" : "obj";
            } else {  // left chain: n <- root, i <- i+1
              heads[i] = i + 1 == n ? 0 : static_cast<int>(i + 2);
              deprels[i] = i + 1 == n ? "root" : "nsubj";
            }
          }
        } else {
          flat_tree(words, heads, deprels);
        }
        out.push_back(make_sentence(words, heads, deprels, ids[src],
                                    ids[src] + "-" + to_string(split) + "-" + std::to_string(k + 1)));
      }
      return make_treebank(ids[src], split, std::move(out));
    };
    SynthSource s;
    s.id = ids[src];
    s.language = "synthetic";
    s.train = generate(Split::Train, cfg.train_sentences);
    s.dev = generate(Split::Dev, cfg.dev_sentences);
    s.test = generate(Split::Test, cfg.test_sentences);
    corpus.sources.push_back(std::move(s));
  }
  return corpus;
}

SynthCorpus make_mixture_corpus(const MixtureConfig& cfg) {
  if (cfg.markers == 0 || cfg.conflict_forms == 0 || cfg.neutral_forms == 0) {
    throw UsageError("mixture vocabularies must be non-empty");
  }
  if (cfg.min_length < cfg.markers_per_sentence + 1) throw UsageError("min_length must exceed markers_per_sentence");
  const std::vector<std::string> ids{"mix_a", "mix_b", "mix_c"};
  const std::vector<char> marker_prefix{'a', 'b'};
  const std::vector<std::set<std::string>> conflict{{"Mood=Ind", "Tense=Past"}, {"Mood=Sub", "Tense=Pres"}};
  const std::vector<std::set<std::string>> neutral{{"Number=Sing"}, {"Number=Plur"}};
  const std::set<std::string> marker_feats{"PronType=Dem"};

  Rng rng(cfg.seed);
  // One sentence in style `style` (0 or 1), annotated accordingly.
  auto sentence = [&](std::size_t style, const std::string& source, const std::string& sent_id) {
    const std::size_t n = draw_length(rng, cfg.min_length, cfg.max_length);
    std::vector<Word> words;
    for (std::size_t i = 0; i < cfg.markers_per_sentence; ++i) {
      words.push_back({numbered(marker_prefix[style], rng.below(cfg.markers)), marker_feats, false});
    }
    const std::size_t conflicts = 1 + rng.below(std::min<std::size_t>(3, n - cfg.markers_per_sentence));
    for (std::size_t i = 0; i < conflicts; ++i) {
      words.push_back({numbered('c', rng.below(cfg.conflict_forms)), conflict[style], true});
    }
    while (words.size() < n) {
      const std::size_t f = rng.below(cfg.neutral_forms);
      words.push_back({numbered('n', f), neutral[f % 2], false});
    }
    rng.shuffle(words);
    std::vector<int> heads;
    std::vector<std::string> deprels;
    flat_tree(words, heads, deprels);
    return make_sentence(words, heads, deprels, source, sent_id);
  };

  SynthCorpus corpus{"mixture", {}};
  for (std::size_t src = 0; src < ids.size(); ++src) {
    auto generate = [&](Split split, std::size_t count) {
      std::vector<Sentence> out;
      for (std::size_t k = 0; k < count; ++k) {
        const std::string sent_id = ids[src] + "-" + to_string(split) + "-" + std::to_string(k + 1);
        const std::size_t style = src < 2 ? src : k % 2;
        Sentence s = sentence(style, ids[src], sent_id);
        if (src == 2) s.comments.push_back(kLookalikeComment + ids[style]);
        out.push_back(std::move(s));
      }
      return make_treebank(ids[src], split, std::move(out));
    };
    SynthSource s;
    s.id = ids[src];
    s.language = "synthetic";
    s.train = generate(Split::Train, cfg.train_sentences);
    s.dev = generate(Split::Dev, cfg.dev_sentences);
    s.test = generate(Split::Test, cfg.test_sentences);
    corpus.sources.push_back(std::move(s));
  }
  return corpus;
}

Registry to_registry(const std::vector<SynthCorpus>& corpora) {
  Registry reg;
  for (const SynthCorpus& c : corpora) {
    DatasetGroup g{c.group_id, {}, GroupStrategy::Manual};
    for (const SynthSource& s : c.sources) {
      DataSource d;
      d.source_id = s.id;
      d.language = s.language;
      d.train = std::make_shared<const Treebank>(s.train);
      d.dev = std::make_shared<const Treebank>(s.dev);
      d.test = std::make_shared<const Treebank>(s.test);
      d.train_word_count = s.train.word_count;
      reg.add_source(std::move(d));
      g.members.push_back(s.id);
    }
    reg.add_group(std::move(g));
  }
  return reg;
}

void write_corpora(const std::vector<SynthCorpus>& corpora, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
  nlohmann::json doc{{"sources", nlohmann::json::array()}, {"groups", nlohmann::json::array()}};
  for (const SynthCorpus& c : corpora) {
    nlohmann::json members = nlohmann::json::array();
    for (const SynthSource& s : c.sources) {
      nlohmann::json js{{"id", s.id}, {"language", s.language}};
      for (const Treebank* tb : {&s.train, &s.dev, &s.test}) {
        const std::string name = s.id + "-" + to_string(tb->split) + ".conllu";
        write_conllu_file((fs::path(dir) / name).string(), *tb, true);
        js[to_string(tb->split)] = name;
      }
      doc["sources"].push_back(js);
      members.push_back(s.id);
    }
    doc["groups"].push_back({{"id", c.group_id}, {"members", members}, {"strategy", "manual"}});
  }
  std::ofstream out(fs::path(dir) / "registry.json", std::ios::binary);
  if (!out) throw DataError("cannot write registry.json in " + dir);
  out << doc.dump(2) << '\n';
}

}  // namespace dataemb
