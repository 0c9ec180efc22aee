#include "dataemb/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dataemb/error.hpp"

namespace dataemb::nn {

using nlohmann::json;

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require(bool cond, const std::string& what) {
  if (!cond) throw DataError(what);
}

Graph& graph_of(Expr a) {
  require(a.graph != nullptr, "expression is not attached to a graph");
  return *a.graph;
}

Graph& graph_of(Expr a, Expr b) {
  require(a.graph != nullptr && a.graph == b.graph, "expressions belong to different graphs");
  return *a.graph;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)), values(product(shape), fill) {}

Parameter::Parameter(std::string name, std::vector<std::size_t> shape)
    : name_(std::move(name)), value_(shape), grad_(shape) {}

void Parameter::zero_grad() { std::fill(grad_.values.begin(), grad_.values.end(), 0.0); }

Parameter& ParameterCollection::add_zeros(const std::string& name, std::vector<std::size_t> shape) {
  if (index_.count(name)) throw DataError("duplicate parameter name '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(std::make_unique<Parameter>(name, std::move(shape)));
  return *params_.back();
}

Parameter& ParameterCollection::add_glorot(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng) {
  Parameter& p = add_zeros(name, {rows, cols});
  if (rows + cols > 0) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& v : p.value().values) v = rng.uniform(-bound, bound);
  }
  return p;
}

Parameter& ParameterCollection::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterCollection::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::vector<Parameter*> ParameterCollection::all() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterCollection::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

json ParameterCollection::to_json() const {
  json arr = json::array();
  for (const auto& p : params_) {
    arr.push_back({{"name", p->name()}, {"shape", p->value().shape}, {"values", p->value().values}});
  }
  return arr;
}

void ParameterCollection::load_json(const json& doc) {
  if (!doc.is_array() || doc.size() != params_.size()) {
    throw DataError("checkpoint parameter count does not match the model");
  }
  for (const json& jp : doc) {
    Parameter& p = get(jp.at("name").get<std::string>());
    const auto shape = jp.at("shape").get<std::vector<std::size_t>>();
    if (shape != p.value().shape) throw DataError("checkpoint shape mismatch for '" + p.name() + "'");
    auto values = jp.at("values").get<std::vector<double>>();
    if (values.size() != p.value().size()) throw DataError("checkpoint size mismatch for '" + p.name() + "'");
    p.value().values = std::move(values);
    p.zero_grad();
  }
}

std::size_t Expr::dim() const { return graph->node(id).value.size(); }

const std::vector<double>& Expr::value() const { return graph->node(id).value; }

double Expr::scalar() const {
  const auto& v = value();
  require(v.size() == 1, "expression is not a scalar");
  return v[0];
}

Expr Graph::push(std::size_t rows, std::size_t cols, std::vector<double> value,
                 std::function<void(Graph&, std::uint32_t)> backprop) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::vector<double>& Graph::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Expr Graph::constant(std::vector<double> values) {
  const std::size_t n = values.size();
  return push(n, 1, std::move(values), nullptr);
}

Expr Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Expr{this, it->second};
  Parameter* ptr = &p;
  Expr e = push(p.rows(), p.cols(), p.value().values, [ptr](Graph& g, std::uint32_t self) {
    const auto& gr = g.grad(self);
    auto& target = ptr->grad().values;
    for (std::size_t i = 0; i < gr.size(); ++i) target[i] += gr[i];
  });
  param_nodes_[&p] = e.id;
  return e;
}

Expr Graph::lookup(Parameter& table, std::size_t row) {
  if (row >= table.rows()) {
    throw DataError("lookup row " + std::to_string(row) + " out of range for '" + table.name() + "' with " +
                    std::to_string(table.rows()) + " rows");
  }
  const std::size_t d = table.cols();
  const auto& vals = table.value().values;
  std::vector<double> v(vals.begin() + row * d, vals.begin() + (row + 1) * d);
  Parameter* ptr = &table;
  return push(d, 1, std::move(v), [ptr, row, d](Graph& g, std::uint32_t self) {
    const auto& gr = g.grad(self);
    auto& target = ptr->grad().values;
    for (std::size_t i = 0; i < d; ++i) target[row * d + i] += gr[i];
  });
}

void Graph::backward(Expr loss) {
  require(loss.graph == this, "loss belongs to another graph");
  if (nodes_[loss.id].value.size() != 1) throw NumericError("backward needs a scalar loss");
  if (backward_done_) throw NumericError("backward already ran on this graph");
  backward_done_ = true;
  grad(loss.id)[0] = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backprop) continue;
    n.backprop(*this, i);
  }
}

// --- elementwise ---------------------------------------------------------

Expr add(Expr a, Expr b) {
  Graph& g = graph_of(a, b);
  const auto& va = a.value();
  const auto& vb = b.value();
  require(va.size() == vb.size(), "add: dimension mismatch");
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  const std::uint32_t ia = a.id, ib = b.id;
  return g.push(out.size(), 1, std::move(out), [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i];
    auto& gb = gr.grad(ib);
    for (std::size_t i = 0; i < gs.size(); ++i) gb[i] += gs[i];
  });
}

Expr sub(Expr a, Expr b) {
  Graph& g = graph_of(a, b);
  const auto& va = a.value();
  const auto& vb = b.value();
  require(va.size() == vb.size(), "sub: dimension mismatch");
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  const std::uint32_t ia = a.id, ib = b.id;
  return g.push(out.size(), 1, std::move(out), [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i];
    auto& gb = gr.grad(ib);
    for (std::size_t i = 0; i < gs.size(); ++i) gb[i] -= gs[i];
  });
}

Expr cmul(Expr a, Expr b) {
  Graph& g = graph_of(a, b);
  const auto& va = a.value();
  const auto& vb = b.value();
  require(va.size() == vb.size(), "cmul: dimension mismatch");
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  const std::uint32_t ia = a.id, ib = b.id;
  return g.push(out.size(), 1, std::move(out), [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto va = gr.node(ia).value;
    const auto vb = gr.node(ib).value;
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * vb[i];
    auto& gb = gr.grad(ib);
    for (std::size_t i = 0; i < gs.size(); ++i) gb[i] += gs[i] * va[i];
  });
}

Expr scale(Expr a, double c) {
  Graph& g = graph_of(a);
  std::vector<double> out = a.value();
  for (double& v : out) v *= c;
  const std::uint32_t ia = a.id;
  return g.push(out.size(), 1, std::move(out), [ia, c](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += c * gs[i];
  });
}

Expr tanh(Expr a) {
  Graph& g = graph_of(a);
  std::vector<double> out = a.value();
  for (double& v : out) v = std::tanh(v);
  const std::uint32_t ia = a.id;
  return g.push(out.size(), 1, std::move(out), [ia](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto& y = gr.node(self).value;
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * (1.0 - y[i] * y[i]);
  });
}

Expr sigmoid(Expr a) {
  Graph& g = graph_of(a);
  std::vector<double> out = a.value();
  for (double& v : out) v = sigmoid_value(v);
  const std::uint32_t ia = a.id;
  return g.push(out.size(), 1, std::move(out), [ia](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto& y = gr.node(self).value;
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * y[i] * (1.0 - y[i]);
  });
}

Expr relu(Expr a) {
  Graph& g = graph_of(a);
  std::vector<double> out = a.value();
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  const std::uint32_t ia = a.id;
  return g.push(out.size(), 1, std::move(out), [ia](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto& y = gr.node(self).value;
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < gs.size(); ++i) {
      if (y[i] > 0.0) ga[i] += gs[i];
    }
  });
}

// --- linear algebra ------------------------------------------------------

Expr matvec(Expr w, Expr x) {
  Graph& g = graph_of(w, x);
  const auto& nw = g.node(w.id);
  const std::size_t rows = nw.rows, cols = nw.cols;
  require(x.dim() == cols, "matvec: matrix has " + std::to_string(cols) + " columns but vector has " +
                               std::to_string(x.dim()) + " entries");
  const auto& W = nw.value;
  const auto& xv = x.value();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = W.data() + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * xv[c];
    out[r] = s;
  }
  const std::uint32_t iw = w.id, ix = x.id;
  return g.push(rows, 1, std::move(out), [iw, ix, rows, cols](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto& W = gr.node(iw).value;
    const auto xv = gr.node(ix).value;
    auto& gw = gr.grad(iw);
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = gs[r];
      if (d == 0.0) continue;
      double* grow = gw.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) grow[c] += d * xv[c];
    }
    auto& gx = gr.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = gs[r];
      if (d == 0.0) continue;
      const double* row = W.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) gx[c] += d * row[c];
    }
  });
}

Expr affine(Expr w, Expr x, Expr b) { return add(matvec(w, x), b); }

Expr concat(const std::vector<Expr>& parts) {
  require(!parts.empty(), "concat: no inputs");
  Graph& g = graph_of(parts.front());
  std::vector<double> out;
  std::vector<std::uint32_t> ids;
  for (const Expr& p : parts) {
    require(p.graph == &g, "concat: expressions belong to different graphs");
    const auto& v = p.value();
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(p.id);
  }
  return g.push(out.size(), 1, std::move(out), [ids](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    std::size_t offset = 0;
    for (std::uint32_t id : ids) {
      const std::size_t n = gr.node(id).value.size();
      auto& gp = gr.grad(id);
      for (std::size_t i = 0; i < n; ++i) gp[i] += gs[offset + i];
      offset += n;
    }
  });
}

Expr slice(Expr a, std::size_t begin, std::size_t length) {
  Graph& g = graph_of(a);
  const auto& v = a.value();
  require(begin + length <= v.size(), "slice: out of range");
  std::vector<double> out(v.begin() + begin, v.begin() + begin + length);
  const std::uint32_t ia = a.id;
  return g.push(length, 1, std::move(out), [ia, begin, length](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < length; ++i) ga[begin + i] += gs[i];
  });
}

Expr pick(Expr a, std::size_t index) { return slice(a, index, 1); }

Expr sum(Expr a) {
  Graph& g = graph_of(a);
  const auto& v = a.value();
  double s = 0.0;
  for (double x : v) s += x;
  const std::uint32_t ia = a.id;
  return g.push(1, 1, {s}, [ia](Graph& gr, std::uint32_t self) {
    const double d = gr.grad(self)[0];
    auto& ga = gr.grad(ia);
    for (double& x : ga) x += d;
  });
}

Expr sum(const std::vector<Expr>& terms) {
  require(!terms.empty(), "sum: no terms");
  Graph& g = graph_of(terms.front());
  const std::size_t n = terms.front().dim();
  std::vector<double> out(n, 0.0);
  std::vector<std::uint32_t> ids;
  for (const Expr& t : terms) {
    require(t.graph == &g && t.dim() == n, "sum: mismatched terms");
    const auto& v = t.value();
    for (std::size_t i = 0; i < n; ++i) out[i] += v[i];
    ids.push_back(t.id);
  }
  return g.push(n, 1, std::move(out), [ids](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    for (std::uint32_t id : ids) {
      auto& gt = gr.grad(id);
      for (std::size_t i = 0; i < gs.size(); ++i) gt[i] += gs[i];
    }
  });
}

Expr dot(Expr a, Expr b) { return sum(cmul(a, b)); }

Expr softmax(Expr a) {
  Graph& g = graph_of(a);
  const auto& v = a.value();
  require(!v.empty(), "softmax: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) z += (out[i] = std::exp(v[i] - m));
  for (double& x : out) x /= z;
  const std::uint32_t ia = a.id;
  return g.push(out.size(), 1, std::move(out), [ia](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto& y = gr.node(self).value;
    double inner = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) inner += gs[i] * y[i];
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += y[i] * (gs[i] - inner);
  });
}

Expr log_softmax(Expr a) {
  Graph& g = graph_of(a);
  const auto& v = a.value();
  require(!v.empty(), "log_softmax: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(x - m);
  const double lz = m + std::log(z);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lz;
  const std::uint32_t ia = a.id;
  return g.push(out.size(), 1, std::move(out), [ia](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto& y = gr.node(self).value;
    double total = 0.0;
    for (double d : gs) total += d;
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += gs[i] - std::exp(y[i]) * total;
  });
}

Expr pick_neg_log_softmax(Expr a, std::size_t index) {
  Graph& g = graph_of(a);
  const auto& v = a.value();
  require(index < v.size(), "pick_neg_log_softmax: index out of range");
  const double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(x - m);
  const double lz = m + std::log(z);
  const std::uint32_t ia = a.id;
  return g.push(1, 1, {lz - v[index]}, [ia, index, lz](Graph& gr, std::uint32_t self) {
    const double d = gr.grad(self)[0];
    const auto& v = gr.node(ia).value;
    auto& ga = gr.grad(ia);
    for (std::size_t i = 0; i < v.size(); ++i) ga[i] += d * std::exp(v[i] - lz);
    ga[index] -= d;
  });
}

Expr max_of(Expr a, const std::vector<std::size_t>& indices) {
  Graph& g = graph_of(a);
  require(!indices.empty(), "max_of: no indices");
  const auto& v = a.value();
  std::size_t best = indices.front();
  for (std::size_t i : indices) {
    require(i < v.size(), "max_of: index out of range");
    if (v[i] > v[best]) best = i;
  }
  const std::uint32_t ia = a.id;
  return g.push(1, 1, {v[best]}, [ia, best](Graph& gr, std::uint32_t self) {
    gr.grad(ia)[best] += gr.grad(self)[0];
  });
}

Expr weighted_sum(Expr weights, const std::vector<Expr>& vectors) {
  Graph& g = graph_of(weights);
  const auto& w = weights.value();
  require(w.size() == vectors.size() && !vectors.empty(), "weighted_sum: weight count mismatch");
  const std::size_t n = vectors.front().dim();
  std::vector<double> out(n, 0.0);
  std::vector<std::uint32_t> ids;
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    require(vectors[k].graph == &g && vectors[k].dim() == n, "weighted_sum: mismatched vectors");
    const auto& v = vectors[k].value();
    for (std::size_t i = 0; i < n; ++i) out[i] += w[k] * v[i];
    ids.push_back(vectors[k].id);
  }
  const std::uint32_t iw = weights.id;
  return g.push(n, 1, std::move(out), [iw, ids](Graph& gr, std::uint32_t self) {
    const auto gs = gr.grad(self);
    const auto w = gr.node(iw).value;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& v = gr.node(ids[k]).value;
      double dw = 0.0;
      for (std::size_t i = 0; i < gs.size(); ++i) dw += gs[i] * v[i];
      gr.grad(iw)[k] += dw;
      auto& gv = gr.grad(ids[k]);
      for (std::size_t i = 0; i < gs.size(); ++i) gv[i] += w[k] * gs[i];
    }
  });
}

// --- recurrent layers ----------------------------------------------------

LstmLayer::LstmLayer(ParameterCollection& params, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden_dim, Rng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  wx_ = &params.add_glorot(prefix + ".wx", 4 * hidden_dim, input_dim, rng);
  wh_ = &params.add_glorot(prefix + ".wh", 4 * hidden_dim, hidden_dim, rng);
  b_ = &params.add_zeros(prefix + ".b", {4 * hidden_dim});
}

std::pair<Expr, Expr> LstmLayer::step(Graph& g, Expr x, Expr h, Expr c) const {
  if (x.dim() != input_dim_) {
    throw DataError("LSTM input has dimension " + std::to_string(x.dim()) + ", expected " +
                    std::to_string(input_dim_));
  }
  const std::size_t n = hidden_dim_;
  Expr gates = add(add(matvec(g.param(*wx_), x), matvec(g.param(*wh_), h)), g.param(*b_));
  Expr i = sigmoid(slice(gates, 0, n));
  Expr f = sigmoid(slice(gates, n, n));
  Expr o = sigmoid(slice(gates, 2 * n, n));
  Expr cand = tanh(slice(gates, 3 * n, n));
  Expr c_next = add(cmul(f, c), cmul(i, cand));
  Expr h_next = cmul(o, tanh(c_next));
  return {h_next, c_next};
}

std::vector<Expr> LstmLayer::run(Graph& g, const std::vector<Expr>& inputs) const {
  if (inputs.empty()) throw DataError("LSTM needs a non-empty input sequence");
  Expr h = g.zeros(hidden_dim_);
  Expr c = g.zeros(hidden_dim_);
  std::vector<Expr> out;
  out.reserve(inputs.size());
  for (const Expr& x : inputs) {
    std::tie(h, c) = step(g, x, h, c);
    out.push_back(h);
  }
  return out;
}

BiLstm::BiLstm(ParameterCollection& params, const std::string& prefix, std::size_t input_dim,
               std::size_t hidden_dim, Rng& rng)
    : forward_(params, prefix + ".fwd", input_dim, hidden_dim, rng),
      backward_(params, prefix + ".bwd", input_dim, hidden_dim, rng) {}

std::vector<Expr> BiLstm::encode(Graph& g, const std::vector<Expr>& inputs) const {
  const std::vector<Expr> fwd = forward_.run(g, inputs);
  std::vector<Expr> reversed(inputs.rbegin(), inputs.rend());
  std::vector<Expr> bwd = backward_.run(g, reversed);
  std::reverse(bwd.begin(), bwd.end());
  std::vector<Expr> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) out.push_back(concat({fwd[i], bwd[i]}));
  return out;
}

Expr BiLstm::final_state(Graph& g, const std::vector<Expr>& inputs) const {
  const std::vector<Expr> fwd = forward_.run(g, inputs);
  std::vector<Expr> reversed(inputs.rbegin(), inputs.rend());
  const std::vector<Expr> bwd = backward_.run(g, reversed);
  return concat({fwd.back(), bwd.back()});
}

// --- optimisation --------------------------------------------------------

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) throw UsageError("clip norm must be positive");
  if (max_sentences_per_epoch && *max_sentences_per_epoch == 0) throw UsageError("sentence cap must be positive");
  if (max_words_per_epoch && *max_words_per_epoch == 0) throw UsageError("word cap must be positive");
}

json to_json(const TrainerConfig& cfg) {
  json j;
  j["optimizer"] = cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  j["learning_rate"] = cfg.learning_rate;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["clip_norm"] = cfg.clip_norm ? json(*cfg.clip_norm) : json(nullptr);
  j["seed"] = cfg.seed;
  j["max_sentences_per_epoch"] = cfg.max_sentences_per_epoch ? json(*cfg.max_sentences_per_epoch) : json(nullptr);
  j["max_words_per_epoch"] = cfg.max_words_per_epoch ? json(*cfg.max_words_per_epoch) : json(nullptr);
  return j;
}

TrainerConfig trainer_config_from_json(const json& doc, TrainerConfig cfg) {
  if (doc.contains("optimizer")) {
    const std::string opt = doc.at("optimizer");
    if (opt == "adam") {
      cfg.optimizer = OptimizerKind::Adam;
    } else if (opt == "sgd") {
      cfg.optimizer = OptimizerKind::Sgd;
    } else {
      throw UsageError("unknown optimizer '" + opt + "'");
    }
  }
  cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
  cfg.beta1 = doc.value("beta1", cfg.beta1);
  cfg.beta2 = doc.value("beta2", cfg.beta2);
  cfg.epsilon = doc.value("epsilon", cfg.epsilon);
  cfg.seed = doc.value("seed", cfg.seed);
  auto opt_double = [&](const char* key, std::optional<double>& out) {
    if (doc.contains(key)) out = doc.at(key).is_null() ? std::nullopt : std::optional<double>(doc.at(key).get<double>());
  };
  auto opt_size = [&](const char* key, std::optional<std::size_t>& out) {
    if (doc.contains(key)) {
      out = doc.at(key).is_null() ? std::nullopt : std::optional<std::size_t>(doc.at(key).get<std::size_t>());
    }
  };
  opt_double("clip_norm", cfg.clip_norm);
  opt_size("max_sentences_per_epoch", cfg.max_sentences_per_epoch);
  opt_size("max_words_per_epoch", cfg.max_words_per_epoch);
  cfg.validate();
  return cfg;
}

Trainer::Trainer(ParameterCollection& params, TrainerConfig cfg) : params_(&params), cfg_(cfg) {
  cfg_.validate();
  for (Parameter* p : params.all()) {
    m_.emplace_back(p->value().size(), 0.0);
    v_.emplace_back(p->value().size(), 0.0);
  }
}

void Trainer::step() {
  const std::vector<Parameter*> ps = params_->all();
  if (ps.size() != m_.size()) throw NumericError("parameters were added after the trainer was created");

  double sq = 0.0;
  for (Parameter* p : ps) {
    for (double gval : p->grad().values) {
      if (!std::isfinite(gval)) {
        const std::string name = p->name();
        params_->zero_grad();
        throw NumericError("non-finite gradient in parameter '" + name + "'");
      }
      sq += gval * gval;
    }
  }
  last_norm_ = std::sqrt(sq);
  double factor = 1.0;
  if (cfg_.clip_norm && last_norm_ > *cfg_.clip_norm) factor = *cfg_.clip_norm / last_norm_;

  ++t_;
  const double lr = cfg_.learning_rate;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& val = ps[k]->value().values;
    auto& gr = ps[k]->grad().values;
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < val.size(); ++i) val[i] -= lr * factor * gr[i];
    } else {
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < val.size(); ++i) {
        const double gi = factor * gr[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        val[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.epsilon);
      }
    }
    std::fill(gr.begin(), gr.end(), 0.0);
  }
}

}  // namespace dataemb::nn
