#include <doctest.h>

#include <set>

#include "dataemb/error.hpp"
#include "dataemb/transition.hpp"
#include "support/tree_oracles.hpp"

using namespace dataemb;
using namespace dataemb::testing;

namespace {

ParserState make_state(std::vector<int> stack, std::vector<int> buffer, std::size_t n) {
  ParserState s(n);
  s.stack = std::move(stack);
  s.buffer = std::move(buffer);
  return s;
}

DependencyTree tree_of(std::vector<int> heads) {
  DependencyTree t;
  t.heads = std::move(heads);
  for (int h : t.heads) t.deprels.push_back(h == 0 ? "root" : "dep");
  return t;
}

}  // namespace

TEST_CASE("initial state and legality") {
  ParserState s(3);
  CHECK(s.stack == std::vector<int>{0});
  CHECK(s.buffer == std::vector<int>{1, 2, 3});
  CHECK(legal_transitions(s) == std::vector<TransitionKind>{TransitionKind::Shift});

  s = apply_transition(s, {TransitionKind::Shift, ""});
  CHECK(is_legal(s, TransitionKind::LeftArc));
  CHECK(is_legal(s, TransitionKind::Swap));
  // Root as second item only takes a dependent once the buffer is empty.
  CHECK_FALSE(is_legal(s, TransitionKind::RightArc));
  CHECK_FALSE(is_legal(s, TransitionKind::Swap, false));
}

TEST_CASE("arc semantics") {
  ParserState s = make_state({0, 1, 2}, {3}, 3);
  ParserState r = apply_transition(s, {TransitionKind::RightArc, "obj"});
  CHECK(r.heads[2] == 1);
  CHECK(r.deprels[2] == "obj");
  CHECK(r.stack == std::vector<int>{0, 1});

  ParserState l = apply_transition(s, {TransitionKind::LeftArc, "nsubj"});
  CHECK(l.heads[2] == 3);
  CHECK(l.stack == std::vector<int>{0, 1});
  CHECK(l.buffer == std::vector<int>{3});
}

TEST_CASE("swap re-buffers the stack top behind the buffer front") {
  ParserState s = make_state({0, 2}, {3, 4}, 4);
  ParserState w = apply_transition(s, {TransitionKind::Swap, ""});
  CHECK(w.stack == std::vector<int>{0});
  CHECK(w.buffer == std::vector<int>{3, 2, 4});
  // After shifting 3 back, index(3) > index(2): no second swap.
  w = apply_transition(w, {TransitionKind::Shift, ""});
  CHECK_FALSE(is_legal(w, TransitionKind::Swap));
  CHECK_THROWS_AS(apply_transition(w, {TransitionKind::Swap, ""}), DataError);
}

TEST_CASE("tree validity and projectivity") {
  CHECK(tree_of({0, 1, 2}).is_valid());
  CHECK_FALSE(tree_of({0, 0, 2}).is_valid());
  CHECK_FALSE(tree_of({2, 1, 0}).is_valid());
  CHECK(tree_of({0, 1, 2}).is_projective());
  CHECK_FALSE(tree_of({0, 4, 1, 1}).is_projective());
  CHECK_THROWS_AS(GoldOracle(tree_of({0, 0})), DataError);
}

TEST_CASE("projective order of a crossing tree") {
  // 1 <- root, 2 <- 4, 3 <- 1, 4 <- 1: in-order ranks put 3 before 2.
  const auto order = projective_order(tree_of({0, 4, 1, 1}));
  CHECK(order[0] == 0);
  CHECK(order[1] == 1);
  CHECK(order[3] == 2);
  CHECK(order[2] == 3);
  CHECK(order[4] == 4);
}

TEST_CASE("crossing 4-token tree needs exactly one swap") {
  GoldOracle oracle(tree_of({0, 4, 1, 1}));
  std::size_t swaps = 0;
  DependencyTree got = follow_oracle(oracle, true, nullptr, &swaps);
  CHECK(got.heads == oracle.gold().heads);
  CHECK(swaps == 1);
  CHECK(follow_oracle(oracle, false).heads != oracle.gold().heads);
}

TEST_CASE("wrong shift is charged and losses add up") {
  // 1 <- 2 <- root: shifting 2 over 1 strands 1's head, and with the buffer
  // empty the only way out is 2 <- 1 <- root, losing both arcs.
  GoldOracle oracle(tree_of({2, 0}));
  ParserState s(2);
  s = apply_transition(s, {TransitionKind::Shift, ""});
  const TransitionCosts c = oracle.costs(s, false);
  CHECK(c.left == 0);
  CHECK(c.shift == 2);
  int total = c.shift;
  s = apply_transition(s, {TransitionKind::Shift, ""}, false);
  while (!s.terminal()) {
    const TransitionCosts cc = oracle.costs(s, false);
    TransitionKind best = legal_transitions(s, false).front();
    for (TransitionKind k : legal_transitions(s, false)) {
      if (cc.of(k) < cc.of(best)) best = k;
    }
    total += cc.of(best);
    s = apply_transition(s, {best, "dep"}, false);
  }
  CHECK(total == attachment_loss(oracle.gold(), s.heads));
  CHECK(total == 2);
}

TEST_CASE("labeled cost adds one for a wrong label on a gold arc") {
  DependencyTree gold = tree_of({2, 0});
  gold.deprels[0] = "nsubj";
  GoldOracle oracle(gold);
  ParserState s = apply_transition(ParserState(2), {TransitionKind::Shift, ""});
  const TransitionCosts c = oracle.costs(s);
  CHECK(oracle.labeled_cost(s, {TransitionKind::LeftArc, "nsubj"}, c) == 0);
  CHECK(oracle.labeled_cost(s, {TransitionKind::LeftArc, "obj"}, c) == 1);
  CHECK(oracle.labeled_cost(s, {TransitionKind::Shift, ""}, c) == c.shift);
}

TEST_CASE("costs equal exhaustive loss deltas on small projective trees") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const DependencyTree gold = random_projective_tree(1 + rng.below(5), rng);
    GoldOracle oracle(gold);
    ExhaustiveSearch search(gold, false);
    std::vector<ParserState> todo{ParserState(gold.size())};
    std::set<std::vector<int>> seen;
    while (!todo.empty()) {
      ParserState s = todo.back();
      todo.pop_back();
      std::vector<int> key = s.stack;
      key.push_back(-2);
      key.insert(key.end(), s.buffer.begin(), s.buffer.end());
      key.push_back(-2);
      key.insert(key.end(), s.heads.begin(), s.heads.end());
      if (!seen.insert(key).second) continue;
      const TransitionCosts c = oracle.costs(s, false);
      for (TransitionKind k : legal_transitions(s, false)) {
        REQUIRE(c.of(k) == search.delta(s, k));
        todo.push_back(apply_transition(s, {k, "dep"}, false));
      }
    }
  }
}

TEST_CASE("swap oracle reconstructs random trees under any zero-cost tie-break") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const DependencyTree gold = random_tree(1 + rng.below(8), rng);
    GoldOracle oracle(gold);
    Rng tie(static_cast<std::uint64_t>(trial));
    const DependencyTree got = follow_oracle(oracle, true, &tie);
    CHECK(got.heads == gold.heads);
    CHECK(got.deprels == gold.deprels);
  }
}

TEST_CASE("decoding terminates for arbitrary legal choices") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    ParserState s(n);
    std::size_t steps = 0;
    while (!s.terminal()) {
      const auto legal = legal_transitions(s);
      REQUIRE_FALSE(legal.empty());
      s = apply_transition(s, {legal[rng.below(legal.size())], "dep"});
      ++steps;
    }
    CHECK(steps <= 2 * n + n * n);
    CHECK(s.tree().is_valid());
  }
}
