#include "dataemb/registry.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"

namespace dataemb {

namespace fs = std::filesystem;

namespace {

std::unordered_set<std::string> train_types(const DataSource& s) {
  if (!s.train) throw DataError("source '" + s.source_id + "' has no train split");
  std::unordered_set<std::string> types;
  for (const Sentence& sent : s.train->sentences) {
    for (const Token& t : sent.tokens) types.insert(t.form);
  }
  return types;
}

}  // namespace

std::shared_ptr<const Treebank> DataSource::split(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Dev: return dev;
    case Split::Test: return test;
  }
  return nullptr;
}

std::shared_ptr<const Treebank> DataSource::eval_split() const { return dev ? dev : test; }

std::string to_string(GroupStrategy s) {
  return s == GroupStrategy::Manual ? "manual" : "overlap_pair";
}

void Registry::add_source(DataSource source) {
  if (source.source_id.empty()) throw DataError("source id must be non-empty");
  if (source.language.empty()) throw DataError("source '" + source.source_id + "' has no language");
  if (index_.count(source.source_id)) throw DataError("duplicate source id '" + source.source_id + "'");
  if (source.train) source.train_word_count = source.train->word_count;
  index_[source.source_id] = sources_.size();
  sources_.push_back(std::move(source));
}

void Registry::add_group(DatasetGroup group) {
  if (group.members.empty()) throw DataError("group '" + group.group_id + "' has no members");
  std::set<std::string> seen;
  for (const std::string& m : group.members) {
    if (!has_source(m)) throw DataError("group '" + group.group_id + "' references unknown source '" + m + "'");
    if (!seen.insert(m).second) throw DataError("group '" + group.group_id + "' repeats source '" + m + "'");
  }
  if (group.strategy == GroupStrategy::OverlapPair && group.members.size() != 2) {
    throw DataError("overlap_pair group '" + group.group_id + "' must have exactly 2 members");
  }
  for (const DatasetGroup& g : groups_) {
    if (g.group_id == group.group_id) throw DataError("duplicate group id '" + group.group_id + "'");
  }
  groups_.push_back(std::move(group));
}

const DataSource& Registry::source(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown source '" + id + "'");
  return sources_[it->second];
}

bool Registry::has_source(const std::string& id) const { return index_.count(id) > 0; }

const DatasetGroup& Registry::group(const std::string& id) const {
  for (const DatasetGroup& g : groups_) {
    if (g.group_id == id) return g;
  }
  throw DataError("unknown group '" + id + "'");
}

Registry Registry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open registry '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("registry '" + path + "': " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();

  Registry reg;
  try {
    for (const auto& js : doc.at("sources")) {
      DataSource src;
      src.source_id = js.at("id").get<std::string>();
      src.language = js.at("language").get<std::string>();
      for (Split split : {Split::Train, Split::Dev, Split::Test}) {
        const std::string key = to_string(split);
        if (!js.contains(key) || js.at(key).is_null()) continue;
        auto tb = std::make_shared<Treebank>(
            read_conllu_file((base / js.at(key).get<std::string>()).string(), src.source_id, split));
        if (split == Split::Train) src.train = tb;
        if (split == Split::Dev) src.dev = tb;
        if (split == Split::Test) src.test = tb;
      }
      reg.add_source(std::move(src));
    }
    if (doc.contains("groups")) {
      for (const auto& jg : doc.at("groups")) {
        DatasetGroup g;
        g.group_id = jg.at("id").get<std::string>();
        g.members = jg.at("members").get<std::vector<std::string>>();
        const std::string strategy = jg.value("strategy", std::string("manual"));
        if (strategy == "manual") {
          g.strategy = GroupStrategy::Manual;
        } else if (strategy == "overlap_pair") {
          g.strategy = GroupStrategy::OverlapPair;
        } else {
          throw DataError("group '" + g.group_id + "' has unknown strategy '" + strategy + "'");
        }
        reg.add_group(std::move(g));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("registry '" + path + "': " + e.what());
  }
  return reg;
}

double compute_word_overlap(const DataSource& a, const DataSource& b) {
  const auto ta = train_types(a);
  const auto tb = train_types(b);
  if (ta.empty()) return 0.0;
  std::size_t shared = 0;
  for (const std::string& w : ta) shared += tb.count(w);
  return static_cast<double>(shared) / static_cast<double>(ta.size());
}

DatasetGroup pair_by_overlap(const Registry& registry, const std::string& target) {
  const DataSource& t = registry.source(target);
  std::vector<const DataSource*> candidates;
  for (const DataSource& s : registry.sources()) {
    if (s.source_id != target && s.train) candidates.push_back(&s);
  }
  if (!t.train || candidates.empty()) {
    throw DataError("pairing '" + target + "' needs at least 2 sources with train splits");
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const DataSource* x, const DataSource* y) { return x->source_id < y->source_id; });
  const DataSource* best = nullptr;
  double best_overlap = -1.0;
  for (const DataSource* c : candidates) {
    const double o = compute_word_overlap(t, *c);
    if (o > best_overlap) {
      best_overlap = o;
      best = c;
    }
  }
  return DatasetGroup{target + "+" + best->source_id, {target, best->source_id}, GroupStrategy::OverlapPair};
}

std::vector<FilterReport> compute_filters(const Registry& registry, const DatasetGroup& group,
                                          const std::map<std::string, double>& classifier_f1) {
  std::set<std::string> languages;
  for (const std::string& m : group.members) languages.insert(registry.source(m).language);

  std::vector<FilterReport> out;
  for (const std::string& m : group.members) {
    const DataSource& src = registry.source(m);
    FilterReport r;
    r.source_id = m;
    r.word_count = src.train_word_count;
    auto f1 = classifier_f1.find(m);
    r.classifier_f1 = f1 == classifier_f1.end() ? 0.0 : f1->second;
    for (const std::string& other : group.members) {
      if (other == m) continue;
      const DataSource& o = registry.source(other);
      if (o.language == src.language) r.exists_same_lang = true;
      if (src.train && o.train) r.max_overlap = std::max(r.max_overlap, compute_word_overlap(src, o));
    }
    r.is_small = r.word_count < kSmallDatasetWords;
    r.is_multilang_group = languages.size() > 1;
    r.svm_above_95 = r.classifier_f1 > kClassifierF1Threshold;
    r.high_word_overlap = r.max_overlap > kHighOverlapThreshold;
    out.push_back(r);
  }
  return out;
}

}  // namespace dataemb
