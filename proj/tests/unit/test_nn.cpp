#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"
#include "dataemb/nn.hpp"
#include "support/gradcheck.hpp"

using namespace dataemb;
using namespace dataemb::nn;
using dataemb::testing::gradcheck;

namespace {

constexpr double kTol = 1e-4;

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST_CASE("forward values of the elementwise operators") {
  Graph g;
  const Expr a = g.constant({1.0, -2.0});
  const Expr b = g.constant({3.0, 0.5});
  CHECK((a + b).value() == std::vector<double>{4.0, -1.5});
  CHECK(cmul(a, b).value() == std::vector<double>{3.0, -1.0});
  CHECK(dot(a, b).scalar() == doctest::Approx(2.0));
  CHECK(relu(a).value() == std::vector<double>{1.0, 0.0});
  const Expr sm = softmax(g.constant({0.0, std::log(3.0)}));
  CHECK(sm.value()[0] == doctest::Approx(0.25));
  CHECK(pick_neg_log_softmax(g.constant({0.0, std::log(3.0)}), 1).scalar() == doctest::Approx(-std::log(0.75)));
  CHECK(max_of(g.constant({1.0, 5.0, 3.0}), {0, 2}).scalar() == 3.0);
  CHECK(concat({a, b}).dim() == 4);
  CHECK(slice(concat({a, b}), 1, 2).value() == std::vector<double>{-2.0, 3.0});
  CHECK(concat({a, g.constant({})}).dim() == 2);
}

TEST_CASE("embedding lookup and affine layer gradients") {
  Rng rng(1);
  ParameterCollection pc;
  Parameter& table = pc.add_glorot("emb", 5, 4, rng);
  Parameter& w = pc.add_glorot("w", 3, 8, rng);
  Parameter& b = pc.add_glorot("b", 3, 1, rng);
  const auto r = gradcheck(pc, [&](Graph& g) {
    const Expr x = concat({g.lookup(table, 1), g.lookup(table, 3)});
    return pick_neg_log_softmax(tanh(affine(g.param(w), x, g.param(b))), 2);
  });
  CHECK(r.max_rel_error < kTol);
  CHECK(r.checked == 20 + 24 + 3);
}

TEST_CASE("elementwise and reduction gradients") {
  Rng rng(2);
  ParameterCollection pc;
  Parameter& p = pc.add_glorot("p", 6, 1, rng);
  Parameter& q = pc.add_glorot("q", 6, 1, rng);
  const auto r = gradcheck(pc, [&](Graph& g) {
    const Expr a = g.param(p), b = g.param(q);
    const Expr mixed = cmul(sigmoid(a), tanh(b)) + scale(relu(a - b), 0.5);
    const Expr att = weighted_sum(softmax(slice(b, 0, 3)), {slice(a, 0, 2), slice(a, 2, 2), slice(a, 4, 2)});
    return sum(mixed) + dot(att, slice(b, 3, 2)) + pick(log_softmax(a), 4) + max_of(b, {0, 2, 5});
  });
  CHECK(r.max_rel_error < kTol);
}

TEST_CASE("LSTM cell and BiLSTM gradients") {
  Rng rng(3);
  ParameterCollection pc;
  const LstmLayer cell(pc, "cell", 3, 4, rng);
  const BiLstm bi(pc, "bi", 3, 2, rng);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(random_vector(rng, 3));
  const auto r = gradcheck(pc, [&](Graph& g) {
    std::vector<Expr> in;
    for (const auto& x : xs) in.push_back(g.constant(x));
    auto [h, c] = cell.step(g, in[0], g.zeros(4), g.zeros(4));
    std::tie(h, c) = cell.step(g, in[1], h, c);
    Expr total = sum(cmul(h, c));
    for (const Expr& e : bi.encode(g, in)) total = total + sum(tanh(e));
    return total + sum(bi.final_state(g, in));
  });
  CHECK(r.max_rel_error < kTol);
}

TEST_CASE("additive attention gradients") {
  Rng rng(4);
  ParameterCollection pc;
  Parameter& wa = pc.add_glorot("wa", 5, 3, rng);
  Parameter& ua = pc.add_glorot("ua", 5, 4, rng);
  Parameter& va = pc.add_glorot("va", 1, 5, rng);
  Parameter& mem = pc.add_glorot("mem", 4, 3, rng);
  Parameter& query = pc.add_glorot("query", 4, 1, rng);
  const auto r = gradcheck(pc, [&](Graph& g) {
    std::vector<Expr> states, scores;
    for (std::size_t j = 0; j < 4; ++j) states.push_back(g.lookup(mem, j));
    const Expr uq = matvec(g.param(ua), g.param(query));
    for (const Expr& h : states) scores.push_back(matvec(g.param(va), tanh(matvec(g.param(wa), h) + uq)));
    const Expr context = weighted_sum(softmax(concat(scores)), states);
    return pick_neg_log_softmax(context, 0);
  });
  CHECK(r.max_rel_error < kTol);
}

TEST_CASE("gradients accumulate over shared parameter nodes") {
  ParameterCollection pc;
  Parameter& p = pc.add_zeros("p", {2, 1});
  p.value().values = {1.0, 2.0};
  Graph g;
  const Expr a = g.param(p);
  g.backward(sum(cmul(a, g.param(p))));
  CHECK(p.grad().values == std::vector<double>{2.0, 4.0});
}

TEST_CASE("trainer updates, clips and rejects non-finite gradients") {
  ParameterCollection pc;
  Parameter& p = pc.add_zeros("p", {2, 1});
  TrainerConfig cfg;
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.learning_rate = 0.5;
  Trainer sgd(pc, cfg);
  p.grad().values = {1.0, -2.0};
  sgd.step();
  CHECK(p.value().values == std::vector<double>{-0.5, 1.0});
  CHECK(p.grad().values == std::vector<double>{0.0, 0.0});

  cfg.clip_norm = 1.0;
  Trainer clipped(pc, cfg);
  p.grad().values = {3.0, 4.0};
  clipped.step();
  CHECK(p.value().values[0] == doctest::Approx(-0.5 - 0.5 * 0.6));
  CHECK(clipped.last_gradient_norm() == doctest::Approx(5.0));

  Trainer adam(pc, TrainerConfig{});
  const double before = p.value().values[0];
  p.grad().values = {1.0, 0.0};
  adam.step();
  // First Adam step moves by the learning rate.
  CHECK(p.value().values[0] == doctest::Approx(before - 1e-3));

  p.grad().values = {std::nan(""), 0.0};
  CHECK_THROWS_AS(adam.step(), NumericError);
}

TEST_CASE("parameter collections serialise exactly") {
  Rng rng(6);
  ParameterCollection a;
  a.add_glorot("w", 3, 2, rng);
  a.add_zeros("b", {3});
  ParameterCollection b;
  b.add_zeros("w", {3, 2});
  b.add_zeros("b", {3});
  b.load_json(a.to_json());
  CHECK(b.get("w").value().values == a.get("w").value().values);
  ParameterCollection c;
  c.add_zeros("w", {2, 3});
  c.add_zeros("b", {3});
  CHECK_THROWS(c.load_json(a.to_json()));
  CHECK_THROWS(a.add_zeros("w", {1}));
}
