#include "dataemb/transition.hpp"

#include <algorithm>
#include <functional>

#include "dataemb/error.hpp"

namespace dataemb {

std::string to_string(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::Shift: return "SHIFT";
    case TransitionKind::LeftArc: return "LEFT_ARC";
    case TransitionKind::RightArc: return "RIGHT_ARC";
    case TransitionKind::Swap: return "SWAP";
  }
  return "SHIFT";
}

bool DependencyTree::is_valid() const {
  const int n = static_cast<int>(heads.size());
  if (deprels.size() != heads.size() || n == 0) return false;
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    const int h = head(i);
    if (h < 0 || h > n || h == i) return false;
    if (h == 0) ++roots;
  }
  if (roots != 1) return false;
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) return false;
      cur = head(cur);
    }
  }
  return true;
}

bool DependencyTree::is_projective() const {
  const int n = static_cast<int>(heads.size());
  for (int d = 1; d <= n; ++d) {
    const int h = head(d);
    const int lo = std::min(h, d), hi = std::max(h, d);
    for (int k = lo + 1; k < hi; ++k) {
      // k must be dominated by h.
      int cur = k;
      while (cur != 0 && cur != h) cur = head(cur);
      if (cur != h) return false;
    }
  }
  return true;
}

DependencyTree DependencyTree::from_sentence(const Sentence& sentence) {
  DependencyTree t;
  for (const Token& tok : sentence.tokens) {
    if (!tok.head) throw DataError("sentence has no dependency tree");
    t.heads.push_back(*tok.head);
    t.deprels.push_back(tok.deprel);
  }
  return t;
}

void DependencyTree::apply_to(Sentence& sentence) const {
  if (sentence.tokens.size() != heads.size()) throw DataError("tree size does not match the sentence");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    sentence.tokens[i].head = heads[i];
    sentence.tokens[i].deprel = deprels[i];
  }
}

ParserState::ParserState(std::size_t n) : stack{0}, heads(n + 1, -1), deprels(n + 1) {
  for (std::size_t i = 1; i <= n; ++i) buffer.push_back(static_cast<int>(i));
}

DependencyTree ParserState::tree() const {
  DependencyTree t;
  for (std::size_t i = 1; i < heads.size(); ++i) {
    t.heads.push_back(heads[i]);
    t.deprels.push_back(deprels[i]);
  }
  return t;
}

bool is_legal(const ParserState& s, TransitionKind kind, bool allow_swap) {
  const bool top_is_token = !s.stack.empty() && s.stack.back() != 0;
  switch (kind) {
    case TransitionKind::Shift: return !s.buffer.empty();
    case TransitionKind::LeftArc: return top_is_token && !s.buffer.empty();
    case TransitionKind::RightArc:
      if (s.stack.size() < 2) return false;
      return s.stack[s.stack.size() - 2] != 0 || s.buffer.empty();
    case TransitionKind::Swap:
      return allow_swap && top_is_token && !s.buffer.empty() && s.stack.back() < s.buffer.front();
  }
  return false;
}

std::vector<TransitionKind> legal_transitions(const ParserState& state, bool allow_swap) {
  std::vector<TransitionKind> out;
  for (TransitionKind k :
       {TransitionKind::Shift, TransitionKind::LeftArc, TransitionKind::RightArc, TransitionKind::Swap}) {
    if (is_legal(state, k, allow_swap)) out.push_back(k);
  }
  return out;
}

void apply_transition_in_place(ParserState& s, const Transition& t, bool allow_swap) {
  if (!is_legal(s, t.kind, allow_swap)) throw DataError("illegal transition " + to_string(t.kind));
  switch (t.kind) {
    case TransitionKind::Shift:
      s.stack.push_back(s.buffer.front());
      s.buffer.erase(s.buffer.begin());
      break;
    case TransitionKind::LeftArc: {
      const int dep = s.stack.back();
      s.heads[dep] = s.buffer.front();
      s.deprels[dep] = t.label;
      s.stack.pop_back();
      break;
    }
    case TransitionKind::RightArc: {
      const int dep = s.stack.back();
      s.heads[dep] = s.stack[s.stack.size() - 2];
      s.deprels[dep] = t.label;
      s.stack.pop_back();
      break;
    }
    case TransitionKind::Swap: {
      const int top = s.stack.back();
      s.stack.pop_back();
      s.buffer.insert(s.buffer.begin() + 1, top);
      break;
    }
  }
}

ParserState apply_transition(ParserState state, const Transition& t, bool allow_swap) {
  apply_transition_in_place(state, t, allow_swap);
  return state;
}

std::vector<int> projective_order(const DependencyTree& gold) {
  const int n = static_cast<int>(gold.size());
  std::vector<std::vector<int>> children(n + 1);
  for (int d = 1; d <= n; ++d) children[gold.head(d)].push_back(d);
  std::vector<int> order(n + 1, 0);
  int next = 0;
  std::function<void(int)> visit = [&](int h) {
    for (int c : children[h]) {
      if (c < h) visit(c);
    }
    order[h] = next++;
    for (int c : children[h]) {
      if (c > h) visit(c);
    }
  };
  visit(0);
  return order;
}

int TransitionCosts::of(TransitionKind kind) const {
  switch (kind) {
    case TransitionKind::Shift: return shift;
    case TransitionKind::LeftArc: return left;
    case TransitionKind::RightArc: return right;
    case TransitionKind::Swap: return swap;
  }
  return kIllegal;
}

int TransitionCosts::minimum() const {
  int best = kIllegal;
  for (int c : {shift, left, right, swap}) {
    if (c != kIllegal && (best == kIllegal || c < best)) best = c;
  }
  return best;
}

GoldOracle::GoldOracle(DependencyTree gold) : gold_(std::move(gold)) {
  if (!gold_.is_valid()) throw DataError("gold tree is not a valid single-rooted tree");
  order_ = projective_order(gold_);
  projective_ = gold_.is_projective();
}

bool GoldOracle::swap_prescribed(const ParserState& s) const {
  if (projective_ || !is_legal(s, TransitionKind::Swap, true)) return false;
  return order_[s.stack.back()] > order_[s.buffer.front()];
}

int GoldOracle::arc_hybrid_cost(const ParserState& s, TransitionKind kind) const {
  auto gold_head = [&](int id) { return id == 0 ? -1 : gold_.head(id); };
  auto in_buffer = [&](int id) { return std::find(s.buffer.begin(), s.buffer.end(), id) != s.buffer.end(); };
  auto children_in_buffer = [&](int h) {
    int c = 0;
    for (int d : s.buffer) c += gold_head(d) == h;
    return c;
  };

  switch (kind) {
    case TransitionKind::LeftArc: {
      const int s0 = s.stack.back();
      const int b0 = s.buffer.front();
      const int s1 = s.stack.size() >= 2 ? s.stack[s.stack.size() - 2] : -1;
      const int h = gold_head(s0);
      const int lost_head = h != b0 && (h == s1 || in_buffer(h));
      return lost_head + children_in_buffer(s0);
    }
    case TransitionKind::RightArc: {
      const int s0 = s.stack.back();
      const int h = gold_head(s0);
      return static_cast<int>(in_buffer(h)) + children_in_buffer(s0);
    }
    case TransitionKind::Shift: {
      const int b0 = s.buffer.front();
      const int h = gold_head(b0);
      int cost = 0;
      for (std::size_t i = 0; i + 1 < s.stack.size(); ++i) cost += s.stack[i] == h;
      for (int d : s.stack) cost += gold_head(d) == b0;
      return cost;
    }
    case TransitionKind::Swap: return 1;
  }
  return 0;
}

TransitionKind GoldOracle::static_transition(const ParserState& s) const {
  if (swap_prescribed(s)) return TransitionKind::Swap;
  const int s0 = s.stack.back();
  if (s0 != 0) {
    bool complete = true;
    for (int d = 1; d <= static_cast<int>(gold_.size()); ++d) {
      if (gold_.head(d) == s0 && !s.attached(d)) complete = false;
    }
    const int h = gold_.head(s0);
    if (complete && !s.buffer.empty() && h == s.buffer.front()) return TransitionKind::LeftArc;
    if (complete && s.stack.size() >= 2 && h == s.stack[s.stack.size() - 2] &&
        is_legal(s, TransitionKind::RightArc, true)) {
      return TransitionKind::RightArc;
    }
  }
  if (!s.buffer.empty()) return TransitionKind::Shift;
  // Unreachable on the static path; fall back to any legal reduction.
  return TransitionKind::RightArc;
}

TransitionCosts GoldOracle::costs(const ParserState& s, bool allow_swap) const {
  if (s.size() != gold_.size()) throw DataError("state and gold tree differ in length");
  TransitionCosts c;
  const bool static_policy = allow_swap && !projective_;
  const TransitionKind chosen = static_policy ? static_transition(s) : TransitionKind::Shift;
  for (TransitionKind k : legal_transitions(s, allow_swap)) {
    int cost = arc_hybrid_cost(s, k);
    if (static_policy) cost = k == chosen ? 0 : std::max(cost, 1);
    switch (k) {
      case TransitionKind::Shift: c.shift = cost; break;
      case TransitionKind::LeftArc: c.left = cost; break;
      case TransitionKind::RightArc: c.right = cost; break;
      case TransitionKind::Swap: c.swap = cost; break;
    }
  }
  return c;
}

int GoldOracle::labeled_cost(const ParserState& s, const Transition& t, const TransitionCosts& costs) const {
  const int base = costs.of(t.kind);
  if (base == TransitionCosts::kIllegal) return base;
  int head = -1;
  if (t.kind == TransitionKind::LeftArc) head = s.buffer.front();
  if (t.kind == TransitionKind::RightArc) head = s.stack[s.stack.size() - 2];
  if (head < 0) return base;
  const int dep = s.stack.back();
  return base + (gold_.head(dep) == head && gold_.deprel(dep) != t.label ? 1 : 0);
}

int attachment_loss(const DependencyTree& gold, const std::vector<int>& heads) {
  int loss = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) loss += gold.heads[i] != heads[i + 1];
  return loss;
}

}  // namespace dataemb
