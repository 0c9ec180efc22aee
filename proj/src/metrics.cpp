#include "dataemb/metrics.hpp"

#include <algorithm>
#include <iterator>

#include "dataemb/error.hpp"

namespace dataemb {

namespace {

double percent(std::size_t correct, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

// Calls fn(gold_sentence, gold_token, pred_token) for every kept aligned token.
template <typename Fn>
void for_aligned(const Treebank& gold, const Treebank& pred, const TokenFilter& filter, Fn&& fn) {
  if (gold.sentences.size() != pred.sentences.size()) {
    throw DataError("sentence count mismatch: gold " + std::to_string(gold.sentences.size()) + ", predicted " +
                    std::to_string(pred.sentences.size()));
  }
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    const Sentence& g = gold.sentences[s];
    const Sentence& p = pred.sentences[s];
    if (g.tokens.size() != p.tokens.size()) {
      throw DataError("token count mismatch in sentence " + std::to_string(s + 1));
    }
    for (std::size_t i = 0; i < g.tokens.size(); ++i) {
      if (g.tokens[i].form != p.tokens[i].form) {
        throw DataError("token mismatch in sentence " + std::to_string(s + 1) + ": '" + g.tokens[i].form + "' vs '" +
                        p.tokens[i].form + "'");
      }
      if (!filter || filter(g, g.tokens[i])) fn(g, g.tokens[i], p.tokens[i]);
    }
  }
}

EvalResult accuracy(const std::string& name, const Treebank& gold, const Treebank& pred, const TokenFilter& filter,
                    bool (*match)(const Token&, const Token&)) {
  EvalResult r;
  r.metric = name;
  for_aligned(gold, pred, filter, [&](const Sentence&, const Token& g, const Token& p) {
    ++r.total;
    r.correct += match(g, p);
  });
  r.value = percent(r.correct, r.total);
  return r;
}

}  // namespace

EvalResult las(const Treebank& gold, const Treebank& pred, const TokenFilter& filter) {
  return accuracy("las", gold, pred, filter, [](const Token& g, const Token& p) {
    return g.head.has_value() && g.head == p.head && g.deprel == p.deprel;
  });
}

EvalResult lemma_accuracy(const Treebank& gold, const Treebank& pred, const TokenFilter& filter) {
  return accuracy("lemma_acc", gold, pred, filter, [](const Token& g, const Token& p) { return g.lemma == p.lemma; });
}

EvalResult tag_accuracy(const Treebank& gold, const Treebank& pred, const TokenFilter& filter) {
  return accuracy("tag_acc", gold, pred, filter, [](const Token& g, const Token& p) { return g.morph == p.morph; });
}

EvalResult morph_f1(const Treebank& gold, const Treebank& pred, const TokenFilter& filter) {
  EvalResult r;
  r.metric = "morph_f1";
  for_aligned(gold, pred, filter, [&](const Sentence&, const Token& g, const Token& p) {
    std::vector<std::string> both;
    std::set_intersection(g.morph.begin(), g.morph.end(), p.morph.begin(), p.morph.end(), std::back_inserter(both));
    r.tp += both.size();
    r.fp += p.morph.size() - both.size();
    r.fn += g.morph.size() - both.size();
  });
  r.correct = 2 * r.tp;
  r.total = 2 * r.tp + r.fp + r.fn;
  // Two empty bundles agree perfectly.
  r.value = r.total == 0 ? 100.0 : percent(r.correct, r.total);
  return r;
}

EvalResult evaluate(const std::string& metric, const Treebank& gold, const Treebank& pred, const TokenFilter& filter) {
  if (metric == "las") return las(gold, pred, filter);
  if (metric == "morph_f1") return morph_f1(gold, pred, filter);
  if (metric == "lemma_acc") return lemma_accuracy(gold, pred, filter);
  if (metric == "tag_acc") return tag_accuracy(gold, pred, filter);
  throw UsageError("unknown metric '" + metric + "' (las, morph_f1, lemma_acc, tag_acc)");
}

std::vector<std::string> task_metrics(const std::string& task) {
  if (task == "parse") return {"las"};
  if (task == "tag_lemma") return {"morph_f1", "lemma_acc", "tag_acc"};
  throw UsageError("unknown task '" + task + "' (parse, tag_lemma)");
}

const std::vector<std::string>& aggregate_buckets() {
  static const std::vector<std::string> buckets{"All",          "Large",         "Small",    "Multi-lang",
                                                "Single-lang",  "∃ same-lang",   "∄ same-lang", "pred<95%",
                                                "pred>95%",     "highWO",        "lowWO"};
  return buckets;
}

bool in_bucket(const std::string& bucket, const FilterReport& r) {
  if (bucket == "All") return true;
  if (bucket == "Large") return !r.is_small;
  if (bucket == "Small") return r.is_small;
  if (bucket == "Multi-lang") return r.is_multilang_group;
  if (bucket == "Single-lang") return !r.is_multilang_group;
  if (bucket == "∃ same-lang") return r.exists_same_lang;
  if (bucket == "∄ same-lang") return !r.exists_same_lang;
  if (bucket == "pred<95%") return !r.svm_above_95;
  if (bucket == "pred>95%") return r.svm_above_95;
  if (bucket == "highWO") return r.high_word_overlap;
  if (bucket == "lowWO") return !r.high_word_overlap;
  throw UsageError("unknown bucket '" + bucket + "'");
}

std::vector<AggregateRow> aggregate(const std::map<std::string, std::map<std::string, double>>& values,
                                    const std::vector<FilterReport>& filters) {
  std::map<std::string, const FilterReport*> by_source;
  for (const FilterReport& f : filters) by_source[f.source_id] = &f;
  std::vector<std::string> settings;
  for (const auto& [source, per_setting] : values) {
    for (const auto& [setting, v] : per_setting) {
      if (std::find(settings.begin(), settings.end(), setting) == settings.end()) settings.push_back(setting);
    }
  }
  std::sort(settings.begin(), settings.end());

  std::vector<AggregateRow> rows;
  for (const std::string& bucket : aggregate_buckets()) {
    for (const std::string& setting : settings) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& [source, per_setting] : values) {
        auto it = per_setting.find(setting);
        if (it == per_setting.end()) continue;
        auto f = by_source.find(source);
        const bool member = bucket == "All" || (f != by_source.end() && in_bucket(bucket, *f->second));
        if (!member) continue;
        sum += it->second;
        ++n;
      }
      if (n > 0) rows.push_back({bucket, setting, sum / static_cast<double>(n), n});
    }
  }
  return rows;
}

}  // namespace dataemb
