#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dataemb/conllu.hpp"

namespace dataemb {

struct DataSource {
  std::string source_id;
  std::string language;
  std::shared_ptr<const Treebank> train;
  std::shared_ptr<const Treebank> dev;
  std::shared_ptr<const Treebank> test;
  std::size_t train_word_count = 0;

  std::shared_ptr<const Treebank> split(Split s) const;
  // Dev split, falling back to test when no dev split exists.
  std::shared_ptr<const Treebank> eval_split() const;
};

enum class GroupStrategy { Manual, OverlapPair };

std::string to_string(GroupStrategy s);

struct DatasetGroup {
  std::string group_id;
  std::vector<std::string> members;
  GroupStrategy strategy = GroupStrategy::Manual;
};

struct FilterReport {
  std::string source_id;
  std::size_t word_count = 0;
  double classifier_f1 = 0.0;
  double max_overlap = 0.0;
  bool is_small = false;
  bool is_multilang_group = false;
  bool exists_same_lang = false;
  bool svm_above_95 = false;
  bool high_word_overlap = false;
};

inline constexpr std::size_t kSmallDatasetWords = 30000;
inline constexpr double kClassifierF1Threshold = 0.95;
inline constexpr double kHighOverlapThreshold = 0.10;

class Registry {
 public:
  // Sources are registered in insertion order; ids must be unique.
  void add_source(DataSource source);
  void add_group(DatasetGroup group);

  const DataSource& source(const std::string& id) const;
  bool has_source(const std::string& id) const;
  const DatasetGroup& group(const std::string& id) const;
  const std::vector<DataSource>& sources() const { return sources_; }
  const std::vector<DatasetGroup>& groups() const { return groups_; }

  // Loads the JSON registry config. Treebank paths resolve relative to the
  // config file's directory.
  static Registry load(const std::string& path);

 private:
  std::vector<DataSource> sources_;
  std::map<std::string, std::size_t> index_;
  std::vector<DatasetGroup> groups_;
};

// Fraction of a's distinct train forms that also occur in b's train split.
double compute_word_overlap(const DataSource& a, const DataSource& b);

DatasetGroup pair_by_overlap(const Registry& registry, const std::string& target);

std::vector<FilterReport> compute_filters(const Registry& registry, const DatasetGroup& group,
                                          const std::map<std::string, double>& classifier_f1);

}  // namespace dataemb
