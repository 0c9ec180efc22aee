#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dataemb {

// MISC key carrying the data-source identifier.
inline constexpr std::string_view kDatasetMiscKey = "dataset";

enum class Split { Train, Dev, Test };

std::string to_string(Split split);
Split split_from_string(std::string_view name);

struct Token {
  int id = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::set<std::string> morph;  // "Feature=Value" entries
  std::optional<int> head;      // absent for tree-less sentences
  std::string deprel;
  std::string deps;
  std::map<std::string, std::string> misc;  // bare entries have empty values

  bool operator==(const Token&) const = default;
};

// A multiword-token ("3-4") or empty-node ("5.1") line. These are kept
// verbatim for writing but never enter the token list.
struct ExtraLine {
  std::size_t before_token = 0;  // index into Sentence::tokens
  std::string raw;

  bool operator==(const ExtraLine&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<ExtraLine> extra_lines;
  std::optional<std::string> source_id;
  std::optional<std::string> predicted_source_id;

  std::size_t size() const { return tokens.size(); }
  bool has_tree() const;
  // Tokens joined by single spaces; the classifier's view of a sentence.
  std::string text() const;
};

struct Treebank {
  std::string source_id;
  Split split = Split::Train;
  std::vector<Sentence> sentences;
  std::size_t word_count = 0;

  void recount();
};

// Parses CoNLL-U. When source_id is empty the id is taken from the
// "dataset" MISC entries; otherwise such entries must agree with it.
Treebank parse_conllu(std::string_view text, const std::string& source_id,
                      Split split = Split::Train);

std::string write_conllu(const Treebank& tb, bool embed_source_in_misc);
std::string write_sentence(const Sentence& sentence, const std::string& stamp_source = {});

Treebank read_conllu_file(const std::string& path, const std::string& source_id,
                          Split split = Split::Train);
void write_conllu_file(const std::string& path, const Treebank& tb, bool embed_source_in_misc);

// '|'-joined key=value pairs in key order, "_" when empty.
std::string format_misc(const std::map<std::string, std::string>& misc);
std::string format_feats(const std::set<std::string>& morph);

}  // namespace dataemb
