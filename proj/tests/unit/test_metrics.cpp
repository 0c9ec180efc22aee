#include <doctest.h>

#include "dataemb/error.hpp"
#include "dataemb/metrics.hpp"
#include "support/naive_metrics.hpp"
#include "support/random_treebank.hpp"

using namespace dataemb;
using namespace dataemb::testing;

TEST_CASE("metrics agree with the nested-loop versions") {
  Rng rng(21);
  for (int k = 0; k < 100; ++k) {
    const Treebank gold = random_treebank(rng);
    const Treebank pred = perturb(gold, rng, 0.3);
    const EvalResult l = las(gold, pred);
    const NaiveCounts nl = naive_las(gold, pred);
    CHECK(l.correct == nl.correct);
    CHECK(l.total == nl.total);
    CHECK(l.value == nl.value);
    const EvalResult m = morph_f1(gold, pred);
    const NaiveCounts nm = naive_morph_f1(gold, pred);
    CHECK(m.correct == nm.correct);
    CHECK(m.value == nm.value);
    CHECK(lemma_accuracy(gold, pred).value == naive_lemma_accuracy(gold, pred).value);
  }
}

TEST_CASE("hand-computed example") {
  Treebank gold = parse_conllu(
      "1\ta\ta\tX\t_\tCase=Nom|Number=Sing\t2\tnsubj\t_\t_\n"
      "2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n"
      "3\tc\tc\tX\t_\tNumber=Plur\t2\tobj\t_\t_\n\n",
      "s");
  Treebank pred = gold;
  auto& t = pred.sentences[0].tokens;
  t[0].deprel = "obj";                   // head right, label wrong
  t[0].morph = {"Case=Nom", "Number=Plur"};  // one of two right, one spurious
  t[2].lemma = "cc";
  CHECK(las(gold, pred).value == doctest::Approx(200.0 / 3.0));
  // tp 2, fp 1, fn 1
  const EvalResult m = morph_f1(gold, pred);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.value == doctest::Approx(66.666666666666));
  CHECK(lemma_accuracy(gold, pred).value == doctest::Approx(200.0 / 3.0));
  CHECK(tag_accuracy(gold, pred).value == doctest::Approx(200.0 / 3.0));
  const TokenFilter only_first = [](const Sentence&, const Token& tok) { return tok.id == 1; };
  CHECK(las(gold, pred, only_first).total == 1);
  CHECK(las(gold, pred, only_first).value == 0.0);
}

TEST_CASE("empty bundles on both sides count as agreement") {
  const Treebank tb = parse_conllu("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n\n", "s");
  CHECK(morph_f1(tb, tb).value == 100.0);
}

TEST_CASE("misaligned inputs are data errors") {
  const Treebank a = parse_conllu("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n\n", "s");
  const Treebank b = parse_conllu("1\tz\ta\tX\t_\t_\t0\troot\t_\t_\n\n", "s");
  const Treebank c = parse_conllu(
      "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n\n1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n\n", "s");
  CHECK_THROWS_AS(las(a, b), DataError);
  CHECK_THROWS_AS(las(a, c), DataError);
  CHECK_THROWS_AS(evaluate("uas", a, a), UsageError);
  CHECK(task_metrics("tag_lemma") == std::vector<std::string>{"morph_f1", "lemma_acc", "tag_acc"});
}

TEST_CASE("aggregates are unweighted means over bucket members") {
  FilterReport small{"s1", 100, 0.99, 0.2, true, false, true, true, true};
  FilterReport large{"l1", 50000, 0.5, 0.01, false, false, true, false, false};
  const std::map<std::string, std::map<std::string, double>> values{
      {"s1", {{"concat", 10.0}, {"gold", 20.0}}}, {"l1", {{"concat", 30.0}, {"gold", 60.0}}},
      {"x", {{"concat", 50.0}}}};
  const auto rows = aggregate(values, {small, large});
  auto find = [&](const std::string& bucket, const std::string& setting) {
    for (const AggregateRow& r : rows)
      if (r.bucket == bucket && r.setting == setting) return r;
    FAIL("missing " << bucket << "/" << setting);
    return AggregateRow{};
  };
  CHECK(find("All", "concat").value == doctest::Approx(30.0));
  CHECK(find("All", "concat").members == 3);
  CHECK(find("Small", "gold").value == 20.0);
  CHECK(find("Large", "gold").value == 60.0);
  CHECK(find("highWO", "concat").value == 10.0);
  CHECK(find("pred<95%", "concat").value == 30.0);
  for (const AggregateRow& r : rows) CHECK(r.bucket != "∄ same-lang");
  CHECK(in_bucket("Multi-lang", FilterReport{"m", 0, 0, 0, false, true}));
}
