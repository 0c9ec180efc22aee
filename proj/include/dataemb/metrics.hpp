#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dataemb/conllu.hpp"
#include "dataemb/registry.hpp"

namespace dataemb {

struct EvalResult {
  std::string metric;
  double value = 0.0;  // percentage
  std::size_t correct = 0;
  std::size_t total = 0;
  // Feature-level counts, morph_f1 only.
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// Restricts evaluation to some tokens (e.g. a conflict subset). The gold
// sentence and token are passed.
using TokenFilter = std::function<bool(const Sentence&, const Token&)>;

// Tokens with correct head and deprel / all tokens.
EvalResult las(const Treebank& gold, const Treebank& pred, const TokenFilter& filter = {});
// Micro F1 over FEATS entries (UPOS excluded).
EvalResult morph_f1(const Treebank& gold, const Treebank& pred, const TokenFilter& filter = {});
// Exact-match lemmas / all tokens.
EvalResult lemma_accuracy(const Treebank& gold, const Treebank& pred, const TokenFilter& filter = {});
// Exact-match FEATS bundles / all tokens.
EvalResult tag_accuracy(const Treebank& gold, const Treebank& pred, const TokenFilter& filter = {});

EvalResult evaluate(const std::string& metric, const Treebank& gold, const Treebank& pred,
                    const TokenFilter& filter = {});
// Metric names in reporting order for a task ("parse" or "tag_lemma").
std::vector<std::string> task_metrics(const std::string& task);

struct AggregateRow {
  std::string bucket;
  std::string setting;
  double value = 0.0;  // unweighted mean
  std::size_t members = 0;
};

// Bucket names in reporting order.
const std::vector<std::string>& aggregate_buckets();
// Whether a source belongs to a bucket.
bool in_bucket(const std::string& bucket, const FilterReport& report);

// values[source][setting] -> unweighted means per (bucket, setting). Sources
// without a filter report only count towards "All". Empty buckets are omitted.
std::vector<AggregateRow> aggregate(const std::map<std::string, std::map<std::string, double>>& values,
                                    const std::vector<FilterReport>& filters);

}  // namespace dataemb
