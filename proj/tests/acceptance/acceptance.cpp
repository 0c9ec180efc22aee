// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. Optional argument: scratch directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dataemb/conllu.hpp"
#include "dataemb/harness.hpp"
#include "dataemb/metrics.hpp"
#include "dataemb/morph.hpp"
#include "dataemb/parser.hpp"
#include "dataemb/synth.hpp"
#include "dataemb/transition.hpp"
#include "support/gradcheck.hpp"
#include "support/jacobi.hpp"
#include "support/naive_metrics.hpp"
#include "support/random_treebank.hpp"
#include "support/tiny_models.hpp"
#include "support/tree_oracles.hpp"

using namespace dataemb;
using namespace dataemb::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_scratch;

std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// A sentence carrying `tree` over dummy forms.
Sentence sentence_of(const DependencyTree& tree) {
  Sentence s;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i + 1);
    t.form = "t" + std::to_string(i + 1);
    t.head = tree.heads[i];
    t.deprel = tree.deprels[i];
    s.tokens.push_back(t);
  }
  return s;
}

Treebank bank_of(std::vector<Sentence> sentences) {
  Treebank tb;
  tb.sentences = std::move(sentences);
  tb.recount();
  return tb;
}

// --- 1 ---------------------------------------------------------------
Outcome oracle_completeness() {
  Rng rng(101);
  std::vector<Sentence> gold, pred;
  for (int k = 0; k < 200; ++k) {
    const DependencyTree t = random_projective_tree(1 + rng.below(10), rng);
    GoldOracle oracle(t);
    Rng tie(static_cast<std::uint64_t>(k));
    gold.push_back(sentence_of(t));
    pred.push_back(sentence_of(follow_oracle(oracle, false, &tie)));
  }
  const EvalResult r = las(bank_of(gold), bank_of(pred));
  return {r.value == 100.0, "LAS " + fmt(r.value) + " over " + std::to_string(r.total) + " tokens"};
}

// --- 2 ---------------------------------------------------------------
Outcome swap_coverage() {
  Rng rng(202);
  std::size_t exact = 0, nonproj = 0, failed_without = 0, swaps = 0;
  for (int k = 0; k < 200; ++k) {
    const DependencyTree t = random_tree(1 + rng.below(8), rng);
    GoldOracle oracle(t);
    const DependencyTree with = follow_oracle(oracle, true, nullptr, &swaps);
    exact += with.heads == t.heads && with.deprels == t.deprels;
    if (!t.is_projective()) {
      ++nonproj;
      const DependencyTree without = follow_oracle(oracle, false);
      failed_without += without.heads != t.heads;
    }
  }
  return {exact == 200 && failed_without >= 1,
          std::to_string(exact) + "/200 exact with SWAP (" + std::to_string(swaps) + " swaps), " +
              std::to_string(failed_without) + "/" + std::to_string(nonproj) + " non-projective fail without"};
}

// --- 3 ---------------------------------------------------------------
// Every state reachable from the initial configuration; costs compared with
// the exhaustive loss delta of every legal transition.
std::size_t check_all_states(const DependencyTree& gold, std::size_t& mismatches) {
  GoldOracle oracle(gold);
  ExhaustiveSearch search(gold, false);
  std::vector<ParserState> todo{ParserState(gold.size())};
  std::set<std::tuple<std::vector<int>, std::vector<int>, std::vector<int>>> seen;
  std::size_t states = 0;
  while (!todo.empty()) {
    ParserState s = std::move(todo.back());
    todo.pop_back();
    if (!seen.insert({s.stack, s.buffer, s.heads}).second) continue;
    ++states;
    const TransitionCosts c = oracle.costs(s, false);
    for (TransitionKind k : legal_transitions(s, false)) {
      if (c.of(k) != search.delta(s, k)) ++mismatches;
      todo.push_back(apply_transition(s, {k, "dep"}, false));
    }
  }
  return states;
}

Outcome oracle_soundness() {
  std::size_t trees = 0, states = 0, mismatches = 0;
  // Every projective tree up to 4 tokens.
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<int> heads(n, 0);
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= n + 1;
    for (std::size_t code = 0; code < combos; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= n + 1) heads[i] = static_cast<int>(c % (n + 1));
      DependencyTree t;
      t.heads = heads;
      t.deprels.assign(n, "dep");
      if (!t.is_valid() || !t.is_projective()) continue;
      ++trees;
      states += check_all_states(t, mismatches);
    }
  }
  // Seeded samples of 5- and 6-token trees.
  Rng rng(303);
  for (int k = 0; k < 120; ++k) {
    const DependencyTree t = random_projective_tree(k % 2 ? 6 : 5, rng);
    ++trees;
    states += check_all_states(t, mismatches);
  }
  return {mismatches == 0, std::to_string(states) + " states over " + std::to_string(trees) + " trees, " +
                               std::to_string(mismatches) + " mismatches"};
}

// --- 4 ---------------------------------------------------------------
Outcome gradient_checks() {
  std::vector<std::pair<std::string, GradCheckResult>> results;
  Rng rng(404);
  {
    nn::ParameterCollection pc;
    nn::Parameter& table = pc.add_glorot("emb", 6, 4, rng);
    results.emplace_back("embedding", gradcheck(pc, [&](nn::Graph& g) {
      return nn::sum(nn::tanh(nn::concat({g.lookup(table, 2), g.lookup(table, 5), g.lookup(table, 2)})));
    }));
  }
  {
    nn::ParameterCollection pc;
    nn::Parameter& w = pc.add_glorot("w", 4, 5, rng);
    nn::Parameter& b = pc.add_glorot("b", 4, 1, rng);
    nn::Parameter& x = pc.add_glorot("x", 5, 1, rng);
    results.emplace_back("affine", gradcheck(pc, [&](nn::Graph& g) {
      return nn::pick_neg_log_softmax(nn::affine(g.param(w), g.param(x), g.param(b)), 1);
    }));
  }
  {
    nn::ParameterCollection pc;
    const nn::LstmLayer cell(pc, "cell", 3, 4, rng);
    nn::Parameter& xs = pc.add_glorot("xs", 3, 3, rng);
    results.emplace_back("lstm cell", gradcheck(pc, [&](nn::Graph& g) {
      nn::Expr h = g.zeros(4), c = g.zeros(4);
      for (std::size_t t = 0; t < 3; ++t) std::tie(h, c) = cell.step(g, g.lookup(xs, t), h, c);
      return nn::sum(nn::cmul(h, h)) + nn::sum(c);
    }));
  }
  {
    nn::ParameterCollection pc;
    nn::Parameter& wa = pc.add_glorot("wa", 5, 3, rng);
    nn::Parameter& ua = pc.add_glorot("ua", 5, 4, rng);
    nn::Parameter& va = pc.add_glorot("va", 1, 5, rng);
    nn::Parameter& mem = pc.add_glorot("mem", 4, 3, rng);
    nn::Parameter& q = pc.add_glorot("q", 4, 1, rng);
    results.emplace_back("attention", gradcheck(pc, [&](nn::Graph& g) {
      std::vector<nn::Expr> states, scores;
      for (std::size_t j = 0; j < 4; ++j) states.push_back(g.lookup(mem, j));
      const nn::Expr uq = nn::matvec(g.param(ua), g.param(q));
      for (const nn::Expr& h : states) {
        scores.push_back(nn::matvec(g.param(va), nn::tanh(nn::matvec(g.param(wa), h) + uq)));
      }
      return nn::pick_neg_log_softmax(nn::weighted_sum(nn::softmax(nn::concat(scores)), states), 2);
    }));
  }
  Rng data_rng(405);
  const Treebank tb = toy_treebank("a", 3, data_rng, false);
  {
    std::set<std::string> labels;
    for (const Sentence& s : tb.sentences)
      for (const Token& t : s.tokens) labels.insert(t.deprel);
    ParserModel m(tiny_parser(), build_vocabularies(pointers(tb)), {"a"}, {labels.begin(), labels.end()},
                  SourceMode::Gold);
    std::vector<double> probe(m.score_size());
    for (double& p : probe) p = rng.uniform(-1, 1);
    results.emplace_back("parser scorer", gradcheck(m.params(), [&](nn::Graph& g) {
      const auto enc = m.encoder().encode(g, tb.sentences[0], SourceMode::Gold);
      ParserState s(tb.sentences[0].size());
      s = apply_transition(s, {TransitionKind::Shift, ""});
      s = apply_transition(s, {TransitionKind::Shift, ""});
      return nn::dot(m.score(g, s, enc), g.constant(probe));
    }));
    results.emplace_back("parser hinge loss", gradcheck(m.params(), [&](nn::Graph& g) {
      Rng local(0);
      return nn::sum(m.sentence_loss(g, tb.sentences[1], false, local));
    }));
  }
  {
    std::set<std::string> bundles, chars;
    for (const Sentence& s : tb.sentences) {
      for (const Token& t : s.tokens) {
        bundles.insert(canonical_bundle(t.morph));
        for (char c : t.lemma) chars.insert(std::string(1, c));
      }
    }
    MorphModel m(tiny_morph(), build_vocabularies(pointers(tb)), {"a"}, {bundles.begin(), bundles.end()},
                 {chars.begin(), chars.end()}, SourceMode::Gold);
    results.emplace_back("tag loss", gradcheck(m.params(), [&](nn::Graph& g) {
      return m.sentence_loss(g, tb.sentences[0]).tag;
    }));
    results.emplace_back("lemma loss", gradcheck(m.params(), [&](nn::Graph& g) {
      return m.sentence_loss(g, tb.sentences[0]).lemma;
    }));
  }
  bool ok = true;
  double worst = 0;
  std::string worst_name;
  std::size_t checked = 0;
  for (const auto& [name, r] : results) {
    checked += r.checked;
    ok = ok && r.max_rel_error < 1e-4 && r.checked > 0;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = name + " " + r.worst;
    }
  }
  return {ok, std::to_string(results.size()) + " layers, " + std::to_string(checked) +
                  " entries, max rel error " + sci(worst) + " (" + worst_name + ")"};
}

// --- 5 ---------------------------------------------------------------
Outcome metrics_oracle() {
  Rng rng(505);
  std::size_t mismatches = 0, tokens = 0;
  for (int k = 0; k < 100; ++k) {
    RandomTreebankOptions opt;
    opt.max_sentences = 8;
    opt.max_tokens = 12;
    const Treebank gold = random_treebank(rng, opt);
    const Treebank pred = perturb(gold, rng, 0.25);
    tokens += gold.word_count;
    const EvalResult l = las(gold, pred);
    const NaiveCounts nl = naive_las(gold, pred);
    mismatches += l.value != nl.value || l.correct != nl.correct || l.total != nl.total;
    const EvalResult m = morph_f1(gold, pred);
    const NaiveCounts nm = naive_morph_f1(gold, pred);
    mismatches += m.value != nm.value || m.correct != nm.correct || m.total != nm.total;
    const EvalResult a = lemma_accuracy(gold, pred);
    const NaiveCounts na = naive_lemma_accuracy(gold, pred);
    mismatches += a.value != na.value || a.correct != na.correct;
  }
  return {mismatches == 0, "100 pairs, " + std::to_string(tokens) + " tokens, " + std::to_string(mismatches) +
                               " mismatches"};
}

// --- shared model settings for the synthetic directional checks -------
EncoderConfig small_encoder() {
  EncoderConfig e;
  e.char_dim = 8;
  e.char_hidden = 8;
  e.word_dim = 16;
  e.dataset_dim = 8;
  e.hidden = 24;
  return e;
}

ParserConfig small_parser() {
  ParserConfig c;
  c.encoder = small_encoder();
  c.mlp_hidden = 32;
  c.epochs = 4;
  return c;
}

MorphConfig small_morph() {
  MorphConfig c;
  c.encoder = small_encoder();
  c.tag_dim = 8;
  c.lemma_char_dim = 8;
  c.lemma_hidden = 8;
  c.decoder_hidden = 16;
  c.attention_dim = 8;
  c.epochs = 4;
  return c;
}

CellSpec cell(Task task, const std::string& group, Setting setting, std::uint64_t seed = 1) {
  CellSpec s;
  s.task = task;
  s.group_id = group;
  s.setting = setting;
  s.seed = seed;
  s.parser = small_parser();
  s.morph = small_morph();
  return s;
}

ClassifierSettings small_classifier() {
  ClassifierSettings c;
  c.ngrams.feature_space_size = 1u << 16;
  return c;
}

// Pooled metric over the members of a cell, restricted by `filter`.
EvalResult pooled(const Registry& reg, const CellOutput& out, const std::string& metric, const TokenFilter& filter) {
  EvalResult total;
  for (const auto& [source, pred] : out.predictions) {
    const EvalResult r = evaluate(metric, *reg.source(source).eval_split(), pred, filter);
    total.correct += r.correct;
    total.total += r.total;
  }
  total.value = total.total == 0 ? 0.0 : 100.0 * static_cast<double>(total.correct) / static_cast<double>(total.total);
  return total;
}

// --- 6 ---------------------------------------------------------------
Outcome separability() {
  const Registry reg = to_registry({make_ambiguity_corpus(AmbiguityConfig{})});
  const TokenFilter conflict_token = is_conflict_token;
  const TokenFilter conflict_sentence = [](const Sentence& s, const Token&) { return is_conflict_sentence(s); };

  const CellOutput tag_gold = run_setting(reg, cell(Task::TagLemma, "ambiguity", Setting::Gold));
  const CellOutput tag_concat = run_setting(reg, cell(Task::TagLemma, "ambiguity", Setting::Concat));
  const CellOutput parse_gold = run_setting(reg, cell(Task::Parse, "ambiguity", Setting::Gold));
  const CellOutput parse_concat = run_setting(reg, cell(Task::Parse, "ambiguity", Setting::Concat));

  const double tg = pooled(reg, tag_gold, "tag_acc", conflict_token).value;
  const double tc = pooled(reg, tag_concat, "tag_acc", conflict_token).value;
  const double lg = pooled(reg, parse_gold, "las", conflict_sentence).value;
  const double lc = pooled(reg, parse_concat, "las", conflict_sentence).value;
  return {tg >= 95.0 && tc <= 60.0 && lg - lc >= 10.0,
          "conflict tag acc gold " + fmt(tg) + " concat " + fmt(tc) + "; conflict LAS gold " + fmt(lg) + " concat " +
              fmt(lc)};
}

// --- 7 ---------------------------------------------------------------
Treebank disjoint_bank(const std::string& source, char prefix, std::size_t sentences, Rng& rng) {
  Treebank tb;
  tb.source_id = source;
  for (std::size_t k = 0; k < sentences; ++k) {
    const DependencyTree tree = random_projective_tree(3 + rng.below(6), rng);
    Sentence s;
    std::string text;
    for (std::size_t i = 0; i < tree.size(); ++i) {
      Token t;
      t.id = static_cast<int>(i + 1);
      t.form = std::string(1, prefix) + std::to_string(rng.below(60));
      t.lemma = t.form;
      t.upos = "X";
      if (rng.bernoulli(0.5)) t.morph = {prefix == 'p' ? "Number=Sing" : "Number=Plur"};
      t.head = tree.heads[i];
      t.deprel = tree.deprels[i];
      text += (i ? " " : "") + t.form;
      s.tokens.push_back(t);
    }
    s.comments.push_back("text = " + text);
    s.source_id = source;
    tb.sentences.push_back(std::move(s));
  }
  tb.recount();
  return tb;
}

Outcome classifier_jackknife() {
  Rng rng(707);
  const Treebank a = disjoint_bank("src_p", 'p', 200, rng);
  const Treebank b = disjoint_bank("src_q", 'q', 200, rng);
  const ClassifierSettings cfg = small_classifier();
  const JackknifeResult r = jackknife_labels({&a, &b}, cfg.ngrams, cfg.hyper);
  std::size_t leaks = 0;
  for (std::size_t i = 0; i < r.gold.size(); ++i) {
    const auto& seen = r.training_indices[r.fold_of[i]];
    leaks += std::find(seen.begin(), seen.end(), i) != seen.end();
  }
  const double f1 = macro_f1(r.gold, r.predicted);
  return {f1 >= 0.99 && r.folds == 5 && leaks == 0,
          "macro F1 " + fmt(f1, 4) + " over " + std::to_string(r.folds) + " folds, " + std::to_string(leaks) +
              " sentences labeled by their own fold"};
}

// --- 8 ---------------------------------------------------------------
Registry disjoint_registry() {
  Rng rng(808);
  Registry reg;
  DatasetGroup g{"disjoint", {}, GroupStrategy::Manual};
  for (const auto& [id, prefix] : std::vector<std::pair<std::string, char>>{{"src_p", 'p'}, {"src_q", 'q'}}) {
    DataSource s;
    s.source_id = id;
    s.language = "synthetic";
    s.train = std::make_shared<const Treebank>(disjoint_bank(id, prefix, 60, rng));
    Treebank dev = disjoint_bank(id, prefix, 20, rng);
    dev.split = Split::Dev;
    s.dev = std::make_shared<const Treebank>(std::move(dev));
    reg.add_source(std::move(s));
    g.members.push_back(id);
  }
  reg.add_group(g);
  return reg;
}

Outcome pred_equals_gold() {
  const Registry reg = disjoint_registry();
  const auto& members = reg.group("disjoint").members;
  const SourceLabels labels = predict_source_labels(reg, members, members, small_classifier());
  std::size_t wrong_ids = 0;
  for (const std::string& m : members) {
    for (const std::string& id : labels.train.at(m)) wrong_ids += id != m;
    for (const std::string& id : labels.eval.at(m)) wrong_ids += id != m;
  }
  std::size_t differing = 0, compared = 0;
  for (Task task : {Task::Parse, Task::TagLemma}) {
    CellSpec gs = cell(task, "disjoint", Setting::Gold, 5);
    CellSpec ps = cell(task, "disjoint", Setting::Pred, 5);
    gs.parser.epochs = ps.parser.epochs = 2;
    gs.morph.epochs = ps.morph.epochs = 2;
    const CellOutput gold = run_setting(reg, gs, &labels);
    const CellOutput pred = run_setting(reg, ps, &labels);
    for (std::size_t i = 0; i < gold.rows.size(); ++i) {
      ++compared;
      differing += gold.rows[i].value != pred.rows[i].value || gold.rows[i].correct != pred.rows[i].correct;
    }
    for (const auto& [source, tb] : gold.predictions) {
      ++compared;
      differing += write_conllu(tb, false) != write_conllu(pred.predictions.at(source), false);
    }
  }
  return {wrong_ids == 0 && differing == 0,
          std::to_string(wrong_ids) + " predicted ids differ from gold; " + std::to_string(differing) + "/" +
              std::to_string(compared) + " results or prediction files differ"};
}

// --- 9 ---------------------------------------------------------------
Outcome zero_shot_routing() {
  const Registry reg = to_registry({make_mixture_corpus(MixtureConfig{})});
  const auto& members = reg.group("mixture").members;
  const std::string held = "mix_c";
  std::vector<std::string> remaining;
  for (const std::string& m : members)
    if (m != held) remaining.push_back(m);
  const SourceLabels labels = predict_source_labels(reg, remaining, members, small_classifier());

  const CellOutput concat = run_zero_shot(reg, cell(Task::TagLemma, "mixture", Setting::Concat), held, &labels);
  const CellOutput pred = run_zero_shot(reg, cell(Task::TagLemma, "mixture", Setting::Pred), held, &labels);

  const Treebank& eval = *reg.source(held).eval_split();
  std::size_t routed_ok = 0;
  for (std::size_t i = 0; i < eval.sentences.size(); ++i) {
    routed_ok += lookalike_of(eval.sentences[i]) == pred.routed_in_order.at(i);
  }
  const double share = 100.0 * static_cast<double>(routed_ok) / static_cast<double>(eval.sentences.size());
  auto held_tag = [&](const CellOutput& out) {
    for (const ResultRow& r : out.rows)
      if (r.source_id == held && r.metric == "tag_acc") return r.value;
    return -1.0;
  };
  const double c = held_tag(concat), p = held_tag(pred);
  return {share >= 90.0 && p >= c, fmt(share) + "% of held-out sentences routed to their lookalike; held-out tag acc pred " +
                                       fmt(p) + " concat " + fmt(c)};
}

// --- 10 --------------------------------------------------------------
Outcome pca_oracle() {
  Rng rng(1010);
  double worst_coord = 0, worst_ortho = 0;
  auto check = [&](const std::vector<std::vector<double>>& rows) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < rows.size(); ++i) names.push_back("s" + std::to_string(i));
    const PcaResult got = pca_project(names, rows);
    const auto expected = jacobi_pca(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      worst_coord = std::max({worst_coord, std::abs(got.coords[i].first - expected[i].first),
                              std::abs(got.coords[i].second - expected[i].second)});
    }
    for (std::size_t a = 0; a < got.components.size(); ++a) {
      for (std::size_t b = 0; b < got.components.size(); ++b) {
        double dot = 0;
        for (std::size_t j = 0; j < got.components[a].size(); ++j) dot += got.components[a][j] * got.components[b][j];
        worst_ortho = std::max(worst_ortho, std::abs(dot - (a == b ? 1.0 : 0.0)));
      }
    }
  };
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 3 + rng.below(20), d = 2 + rng.below(12);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows)
      for (double& x : r) x = rng.uniform(-3, 3);
    check(rows);
  }
  // A trained dataset-embedding table.
  Rng data_rng(1011);
  Treebank a = toy_treebank("a", 10, data_rng), b = toy_treebank("b", 10, data_rng), c = toy_treebank("c", 10, data_rng);
  std::vector<const Sentence*> all;
  for (const Treebank* tb : {&a, &b, &c})
    for (const Sentence& s : tb->sentences) all.push_back(&s);
  ParserConfig pc = tiny_parser(1);
  pc.encoder.dataset_dim = 6;
  const ParserModel m = train_parser(all, {"a", "b", "c"}, SourceMode::Gold, pc);
  check(embedding_rows(m.encoder()));
  return {worst_coord < 1e-6 && worst_ortho < 1e-10,
          "51 matrices, max coordinate gap " + sci(worst_coord) + ", max orthonormality gap " + sci(worst_ortho)};
}

// --- 11 --------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  AmbiguityConfig ac;
  ac.train_sentences = 60;
  ac.dev_sentences = ac.test_sentences = 20;
  MixtureConfig mc;
  mc.train_sentences = 40;
  mc.dev_sentences = mc.test_sentences = 15;
  const fs::path data = g_scratch / "determinism_data";
  write_corpora({make_ambiguity_corpus(ac), make_mixture_corpus(mc)}, data.string());
  const Registry reg = Registry::load((data / "registry.json").string());

  std::size_t files = 0, differing = 0;
  auto run_twice = [&](ExperimentConfig cfg, const std::string& tag) {
    const fs::path a = g_scratch / ("det_" + tag + "_1"), b = g_scratch / ("det_" + tag + "_2");
    fs::remove_all(a);
    fs::remove_all(b);
    run_experiment(reg, cfg, a.string());
    run_experiment(reg, cfg, b.string());
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (entry.path().filename() != "results.tsv") continue;
      ++files;
      differing += slurp(entry.path()) != slurp(b / fs::relative(entry.path(), a));
    }
  };
  ExperimentConfig parse;
  parse.group_id = "ambiguity";
  parse.seeds = {1, 2};
  parse.parser = small_parser();
  parse.parser.epochs = 1;
  parse.classifier = small_classifier();
  run_twice(parse, "parse");
  ExperimentConfig zs;
  zs.task = Task::TagLemma;
  zs.group_id = "mixture";
  zs.mode = RunMode::ZeroShot;
  zs.held_out = {"mix_c"};
  zs.settings = {Setting::Concat, Setting::Pred};
  zs.seeds = {3};
  zs.morph = small_morph();
  zs.morph.epochs = 1;
  zs.classifier = small_classifier();
  run_twice(zs, "zero_shot");
  return {files > 0 && differing == 0,
          std::to_string(files) + " results.tsv files compared, " + std::to_string(differing) + " differ"};
}

// --- 12 --------------------------------------------------------------
Outcome conllu_round_trip() {
  Rng rng(1212);
  std::size_t differing = 0, sentences = 0;
  for (int k = 0; k < 1000; ++k) {
    RandomTreebankOptions opt;
    opt.source = k % 3 == 0 ? "" : "src" + std::to_string(k % 7);
    const Treebank tb = random_treebank(rng, opt);
    const Treebank back = parse_conllu(write_conllu(tb, false), opt.source);
    bool same = back.sentences.size() == tb.sentences.size() && back.word_count == tb.word_count &&
                back.source_id == tb.source_id;
    for (std::size_t i = 0; same && i < tb.sentences.size(); ++i) {
      const Sentence& x = tb.sentences[i];
      const Sentence& y = back.sentences[i];
      same = x.tokens == y.tokens && x.comments == y.comments && x.extra_lines == y.extra_lines &&
             x.source_id == y.source_id;
    }
    sentences += tb.sentences.size();
    differing += !same;
  }
  return {differing == 0, "1000 treebanks, " + std::to_string(sentences) + " sentences, " +
                              std::to_string(differing) + " differ"};
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  g_scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "dataemb_acceptance";
  fs::create_directories(g_scratch);

  const std::vector<Criterion> criteria{
      {1, "oracle completeness", 30, oracle_completeness},
      {2, "swap coverage", 30, swap_coverage},
      {3, "oracle soundness", 120, oracle_soundness},
      {4, "gradient checks", 60, gradient_checks},
      {5, "metrics oracle equivalence", 10, metrics_oracle},
      {6, "dataset-embedding separability", 300, separability},
      {7, "classifier jack-knifing", 60, classifier_jackknife},
      {8, "pred equals gold with perfect ids", 0, pred_equals_gold},
      {9, "zero-shot routing", 300, zero_shot_routing},
      {10, "PCA oracle", 0, pca_oracle},
      {11, "determinism", 0, determinism},
      {12, "CoNLL-U round trip", 0, conllu_round_trip},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt(secs, 1) + " s";
    if (c.budget_seconds > 0) {
      timing += " / " + fmt(c.budget_seconds, 0) + " s";
      if (secs >= c.budget_seconds) {
        o.pass = false;
        o.detail += "; over time budget";
      }
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.name << ": " << o.detail << " ["
              << timing << "]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed;
}
