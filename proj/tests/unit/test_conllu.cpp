#include <doctest.h>

#include "dataemb/conllu.hpp"
#include "dataemb/error.hpp"
#include "support/random_treebank.hpp"

using namespace dataemb;
using namespace dataemb::testing;

namespace {

const char* kSample =
    "# sent_id = 1\n"
    "# text = Im Haus.\n"
    "1-2\tIm\t_\t_\t_\t_\t_\t_\t_\t_\n"
    "1\tIn\tin\tADP\tAPPR\t_\t3\tcase\t_\t_\n"
    "2\tdem\tder\tDET\tART\tCase=Dat|Number=Sing\t3\tdet\t_\t_\n"
    "3\tHaus\tHaus\tNOUN\tNN\tCase=Dat|Gender=Neut|Number=Sing\t0\troot\t_\tSpaceAfter=No\n"
    "3.1\tist\t_\t_\t_\t_\t_\t_\t2:nsubj\t_\n"
    "4\t.\t.\tPUNCT\t$.\t_\t3\tpunct\t_\t_\n"
    "\n";

}  // namespace

TEST_CASE("parse keeps every field") {
  const Treebank tb = parse_conllu(kSample, "de_x");
  REQUIRE(tb.sentences.size() == 1);
  const Sentence& s = tb.sentences[0];
  CHECK(s.comments == std::vector<std::string>{"sent_id = 1", "text = Im Haus."});
  REQUIRE(s.tokens.size() == 4);
  CHECK(s.extra_lines.size() == 2);
  CHECK(s.extra_lines[0].before_token == 0);
  CHECK(s.extra_lines[1].before_token == 3);
  CHECK(s.tokens[1].morph == std::set<std::string>{"Case=Dat", "Number=Sing"});
  CHECK(s.tokens[2].head == 0);
  CHECK(s.tokens[2].misc.at("SpaceAfter") == "No");
  CHECK(s.source_id == "de_x");
  CHECK(tb.word_count == 4);
  CHECK(write_conllu(tb, false) == kSample);
}

TEST_CASE("stamped source ids are read back from MISC") {
  Treebank tb = parse_conllu(kSample, "de_x");
  const std::string stamped = write_conllu(tb, true);
  CHECK(stamped.find("dataset=de_x") != std::string::npos);
  const Treebank back = parse_conllu(stamped, "");
  CHECK(back.source_id == "de_x");
  CHECK(back.sentences[0].source_id == "de_x");
  CHECK_THROWS_AS(parse_conllu(stamped, "other"), ParseError);
}

TEST_CASE("malformed input names the line") {
  const std::string bad_cols = "# c\n1\tx\tx\tX\n";
  try {
    parse_conllu(bad_cols, "s");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\t_\t5\tdep\t_\t_\n", "s"), ParseError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\t_\t1\tdep\t_\t_\n", "s"), ParseError);
  CHECK_THROWS_AS(parse_conllu("2\ta\ta\tX\t_\t_\t0\tdep\t_\t_\n", "s"), ParseError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\tCase\t0\troot\t_\t_\n", "s"), ParseError);
  CHECK_THROWS_AS(split_from_string("validation"), UsageError);
}

TEST_CASE("tree-less sentences keep an empty head") {
  const Treebank tb = parse_conllu("1\ta\ta\tX\t_\t_\t_\t_\t_\t_\n\n", "s");
  CHECK_FALSE(tb.sentences[0].tokens[0].head.has_value());
  CHECK_FALSE(tb.sentences[0].has_tree());
  CHECK(write_conllu(tb, false) == "1\ta\ta\tX\t_\t_\t_\t_\t_\t_\n\n");
}

TEST_CASE("random treebanks survive write then parse") {
  Rng rng(11);
  for (int k = 0; k < 300; ++k) {
    RandomTreebankOptions opt;
    opt.source = k % 2 ? "src" : "";
    const Treebank tb = random_treebank(rng, opt);
    const Treebank back = parse_conllu(write_conllu(tb, false), opt.source);
    REQUIRE(back.sentences.size() == tb.sentences.size());
    for (std::size_t i = 0; i < tb.sentences.size(); ++i) {
      CHECK(back.sentences[i].tokens == tb.sentences[i].tokens);
      CHECK(back.sentences[i].comments == tb.sentences[i].comments);
      CHECK(back.sentences[i].extra_lines == tb.sentences[i].extra_lines);
      CHECK(back.sentences[i].source_id == tb.sentences[i].source_id);
    }
    CHECK(back.word_count == tb.word_count);
  }
}
