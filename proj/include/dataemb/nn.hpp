#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dataemb/random.hpp"

// Minimal reverse-mode automatic differentiation over 64-bit reals.
// A Graph records one computation (one sentence); Parameters live in a
// ParameterCollection that outlives many graphs.
namespace dataemb::nn {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;  // row-major

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
};

class Parameter {
 public:
  Parameter(std::string name, std::vector<std::size_t> shape);

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  std::size_t rows() const { return value_.rows(); }
  std::size_t cols() const { return value_.cols(); }

  void zero_grad();

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

class ParameterCollection {
 public:
  ParameterCollection() = default;
  ParameterCollection(const ParameterCollection&) = delete;
  ParameterCollection& operator=(const ParameterCollection&) = delete;
  ParameterCollection(ParameterCollection&&) = default;
  ParameterCollection& operator=(ParameterCollection&&) = default;

  Parameter& add_zeros(const std::string& name, std::vector<std::size_t> shape);
  // uniform(-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols)))
  Parameter& add_glorot(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter*> all() const;
  std::size_t size() const { return params_.size(); }

  void zero_grad();

  nlohmann::json to_json() const;
  // Overwrites values; names and shapes must match exactly.
  void load_json(const nlohmann::json& doc);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

class Graph;

// Handle to a node of a Graph.
struct Expr {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  std::size_t dim() const;
  const std::vector<double>& value() const;
  double scalar() const;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr constant(std::vector<double> values);
  Expr scalar(double v) { return constant({v}); }
  Expr zeros(std::size_t n) { return constant(std::vector<double>(n, 0.0)); }
  // Whole parameter as a node; repeated calls within one graph share a node.
  Expr param(Parameter& p);
  // Row `row` of a lookup table; the gradient reaches only that row.
  Expr lookup(Parameter& table, std::size_t row);

  // Fills gradients of every parameter reachable from `loss`.
  void backward(Expr loss);

  std::size_t node_count() const { return nodes_.size(); }

  // Internal interface used by the operators.
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 1;
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void(Graph&, std::uint32_t)> backprop;
  };
  Expr push(std::size_t rows, std::size_t cols, std::vector<double> value,
            std::function<void(Graph&, std::uint32_t)> backprop);
  Node& node(std::uint32_t id) { return nodes_[id]; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  std::vector<double>& grad(std::uint32_t id);

 private:
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  bool backward_done_ = false;
};

Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr cmul(Expr a, Expr b);
Expr scale(Expr a, double c);
Expr tanh(Expr a);
Expr sigmoid(Expr a);
Expr relu(Expr a);
Expr matvec(Expr w, Expr x);
Expr affine(Expr w, Expr x, Expr b);
Expr concat(const std::vector<Expr>& parts);
Expr slice(Expr a, std::size_t begin, std::size_t length);
Expr pick(Expr a, std::size_t index);
Expr sum(Expr a);
Expr sum(const std::vector<Expr>& terms);
Expr dot(Expr a, Expr b);
Expr softmax(Expr a);
Expr log_softmax(Expr a);
// -log softmax(a)[index]
Expr pick_neg_log_softmax(Expr a, std::size_t index);
// Maximum of a's entries at `indices` (non-empty); gradient flows to the argmax.
Expr max_of(Expr a, const std::vector<std::size_t>& indices);
// sum_i weights[i] * vectors[i]
Expr weighted_sum(Expr weights, const std::vector<Expr>& vectors);

inline Expr operator+(Expr a, Expr b) { return add(a, b); }
inline Expr operator-(Expr a, Expr b) { return sub(a, b); }

// Single-direction LSTM layer with input, forget, output gates and a tanh
// cell candidate.
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(ParameterCollection& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
            Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  // One step; returns (h, c).
  std::pair<Expr, Expr> step(Graph& g, Expr x, Expr h, Expr c) const;
  // Hidden states for each input, left to right.
  std::vector<Expr> run(Graph& g, const std::vector<Expr>& inputs) const;

 private:
  Parameter* wx_ = nullptr;
  Parameter* wh_ = nullptr;
  Parameter* b_ = nullptr;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
};

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParameterCollection& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
         Rng& rng);

  std::size_t output_dim() const { return 2 * forward_.hidden_dim(); }
  const LstmLayer& forward_layer() const { return forward_; }
  const LstmLayer& backward_layer() const { return backward_; }

  // Position i concatenates the forward state at i and the backward state at i.
  std::vector<Expr> encode(Graph& g, const std::vector<Expr>& inputs) const;
  // Last forward state concatenated with the first backward state.
  Expr final_state(Graph& g, const std::vector<Expr>& inputs) const;

 private:
  LstmLayer forward_;
  LstmLayer backward_;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainerConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::optional<double> clip_norm;
  std::uint64_t seed = 1;
  std::optional<std::size_t> max_sentences_per_epoch;
  std::optional<std::size_t> max_words_per_epoch;

  void validate() const;
};

nlohmann::json to_json(const TrainerConfig& cfg);
TrainerConfig trainer_config_from_json(const nlohmann::json& doc, TrainerConfig defaults = {});

class Trainer {
 public:
  Trainer(ParameterCollection& params, TrainerConfig cfg);

  // Clips (optional), applies the update, then zeroes every gradient.
  // Throws NumericError naming the first parameter with a non-finite gradient.
  void step();

  double last_gradient_norm() const { return last_norm_; }

 private:
  ParameterCollection* params_;
  TrainerConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
  double last_norm_ = 0.0;
};

}  // namespace dataemb::nn
