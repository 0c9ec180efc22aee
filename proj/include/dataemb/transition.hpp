#pragma once

#include <string>
#include <vector>

#include "dataemb/conllu.hpp"

// Arc-hybrid transition system with a SWAP action. Token ids are the
// original 1-based sentence positions; 0 is the artificial root, which sits
// at the bottom of the stack.
namespace dataemb {

enum class TransitionKind { Shift, LeftArc, RightArc, Swap };

std::string to_string(TransitionKind kind);

struct Transition {
  TransitionKind kind = TransitionKind::Shift;
  std::string label;  // LeftArc / RightArc only

  bool operator==(const Transition&) const = default;
};

struct DependencyTree {
  std::vector<int> heads;            // heads[i] is the head of token i + 1
  std::vector<std::string> deprels;  // aligned with heads

  std::size_t size() const { return heads.size(); }
  int head(int id) const { return heads[id - 1]; }
  const std::string& deprel(int id) const { return deprels[id - 1]; }

  // Single head per token, one root, acyclic.
  bool is_valid() const;
  bool is_projective() const;

  static DependencyTree from_sentence(const Sentence& sentence);
  void apply_to(Sentence& sentence) const;
};

class ParserState {
 public:
  ParserState() = default;
  explicit ParserState(std::size_t n);

  std::vector<int> stack;   // back() is the top
  std::vector<int> buffer;  // front() is the next token
  std::vector<int> heads;   // index = token id; -1 while unattached; heads[0] unused
  std::vector<std::string> deprels;

  std::size_t size() const { return heads.size() - 1; }
  bool terminal() const { return buffer.empty() && stack.size() == 1; }
  bool attached(int id) const { return heads[id] >= 0; }
  DependencyTree tree() const;

  bool operator==(const ParserState&) const = default;
};

// SHIFT: buffer non-empty. LEFT_ARC: stack top is a token and the buffer is
// non-empty. RIGHT_ARC: at least two stack items; when the second item is the
// root the buffer must be empty, so the root receives exactly one dependent.
// SWAP (if allowed): stack top is a token, buffer non-empty and
// id(stack top) < id(buffer front).
std::vector<TransitionKind> legal_transitions(const ParserState& state, bool allow_swap = true);
bool is_legal(const ParserState& state, TransitionKind kind, bool allow_swap = true);

// Throws DataError for an illegal transition.
void apply_transition_in_place(ParserState& state, const Transition& t, bool allow_swap = true);
ParserState apply_transition(ParserState state, const Transition& t, bool allow_swap = true);

// Rank of every token (index = id, root = 0) in an in-order traversal of the
// tree; the tree is projective with respect to this order.
std::vector<int> projective_order(const DependencyTree& gold);

struct TransitionCosts {
  static constexpr int kIllegal = -1;
  int shift = kIllegal;
  int left = kIllegal;
  int right = kIllegal;
  int swap = kIllegal;

  int of(TransitionKind kind) const;
  int minimum() const;  // over legal transitions
};

// Unlabeled costs of the legal transitions against a gold tree.
//
// Projective gold: arc-hybrid dynamic oracle, cost = number of gold arcs
// made unreachable. SWAP is never needed and costs 1.
// Non-projective gold (with SWAP enabled): one transition costs 0 and all
// others at least 1. SWAP is chosen when legal and the projective order puts
// the stack top after the buffer front; otherwise an arc to a complete stack
// top, otherwise SHIFT.
class GoldOracle {
 public:
  explicit GoldOracle(DependencyTree gold);

  const DependencyTree& gold() const { return gold_; }
  bool projective() const { return projective_; }
  const std::vector<int>& order() const { return order_; }

  TransitionCosts costs(const ParserState& state, bool allow_swap = true) const;
  // Arc costs plus one when the transition builds a gold arc with a wrong label.
  int labeled_cost(const ParserState& state, const Transition& t, const TransitionCosts& costs) const;
  bool swap_prescribed(const ParserState& state) const;
  // The zero-cost transition for a non-projective gold tree.
  TransitionKind static_transition(const ParserState& state) const;

 private:
  int arc_hybrid_cost(const ParserState& state, TransitionKind kind) const;

  DependencyTree gold_;
  std::vector<int> order_;
  bool projective_ = true;
};

// Attachment loss of a predicted tree against gold: tokens with a wrong head.
int attachment_loss(const DependencyTree& gold, const std::vector<int>& heads);

}  // namespace dataemb
