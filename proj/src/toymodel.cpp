#include "compatkit/toymodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace compatkit::toy {

namespace {

constexpr double kAdapterInitStd = 0.02;

std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> expected_shapes(const ModelDims& d) {
  return {{kEmbedding, {d.vocab, d.hidden}},
          {kHiddenWeight, {d.hidden, d.hidden}},
          {kHiddenBias, {1, d.hidden}},
          {kOutputWeight, {d.hidden, d.vocab}},
          {kOutputBias, {1, d.vocab}}};
}

/// x W (+ (alpha/r) (x A) B when the layer is adapted).
Var linear(Graph& g, Var x, const TaskModel& model, const char* layer, AdapterVars* params) {
  const Var w = g.constant(model.base->weight(layer));
  Var out = g.matmul(x, w);
  const auto it = model.adapter.layers.find(layer);
  if (it == model.adapter.layers.end()) return out;
  Var a{}, b{};
  if (params) {
    a = g.parameter(it->second.a);
    b = g.parameter(it->second.b);
    params->layers[layer] = {a, b};
  } else {
    a = g.constant(it->second.a);
    b = g.constant(it->second.b);
  }
  const Var delta = g.scale(g.matmul(g.matmul(x, a), b), model.adapter.scale());
  return g.add(out, delta);
}

}  // namespace

BaseModel BaseModel::random(ModelDims dims, std::uint64_t seed, std::string version_tag) {
  if (dims.vocab < 2 || dims.context < 1 || dims.hidden < 1) throw ShapeError("model dims must be positive (vocab >= 2)");
  std::mt19937_64 rng(seed);
  BaseModel m;
  m.version_tag = std::move(version_tag);
  m.dims = dims;
  const double hidden_std = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  m.weights[kEmbedding] = Tensor2::random_normal(dims.vocab, dims.hidden, 1.0, rng);
  m.weights[kHiddenWeight] = Tensor2::random_normal(dims.hidden, dims.hidden, hidden_std, rng);
  m.weights[kHiddenBias] = Tensor2(1, dims.hidden);
  m.weights[kOutputWeight] = Tensor2::random_normal(dims.hidden, dims.vocab, hidden_std, rng);
  m.weights[kOutputBias] = Tensor2(1, dims.vocab);
  return m;
}

const Tensor2& BaseModel::weight(const std::string& name) const {
  const auto it = weights.find(name);
  if (it == weights.end()) throw ShapeError("base model has no weight '" + name + "'");
  return it->second;
}

void BaseModel::check_consistent() const {
  for (const auto& [name, shape] : expected_shapes(dims)) {
    const auto& w = weight(name);
    if (w.rows() != shape.first || w.cols() != shape.second) {
      throw ShapeError("weight '" + name + "' has shape " + std::to_string(w.rows()) + "x" +
                       std::to_string(w.cols()) + ", expected " + std::to_string(shape.first) + "x" +
                       std::to_string(shape.second));
    }
  }
  if (weights.size() != expected_shapes(dims).size()) throw ShapeError("base model has unexpected extra weights");
}

AdapterSet AdapterSet::init(const BaseModel& base, std::size_t rank, double alpha, std::uint64_t seed) {
  if (rank == 0) throw DomainError("adapter rank must be positive");
  if (!(alpha > 0.0)) throw DomainError("adapter alpha must be positive");
  std::mt19937_64 rng(seed);
  AdapterSet set;
  set.rank = rank;
  set.alpha = alpha;
  for (const char* layer : {kHiddenWeight, kOutputWeight}) {
    const auto& w = base.weight(layer);
    set.layers[layer] = {Tensor2::random_normal(w.rows(), rank, kAdapterInitStd, rng), Tensor2(rank, w.cols())};
  }
  return set;
}

Tensor2 AdapterSet::delta(const std::string& layer) const {
  const auto it = layers.find(layer);
  if (it == layers.end()) throw ShapeError("adapter has no layer '" + layer + "'");
  Tensor2 d = matmul(it->second.a, it->second.b);
  for (auto& v : d.values()) v *= scale();
  return d;
}

Var record_logits(Graph& g, const TaskModel& model, std::span<const std::vector<int>> contexts, AdapterVars* params) {
  const auto& dims = model.dims();
  for (const auto& ctx : contexts) {
    if (ctx.empty() || ctx.size() > dims.context) {
      throw ShapeError("context length " + std::to_string(ctx.size()) + " outside [1, " +
                       std::to_string(dims.context) + "]");
    }
  }
  const Var pooled = g.pooled_rows(g.constant(model.base->weight(kEmbedding)), contexts);
  const Var hidden = g.tanh(g.add_row(linear(g, pooled, model, kHiddenWeight, params),
                                      g.constant(model.base->weight(kHiddenBias))));
  return g.add_row(linear(g, hidden, model, kOutputWeight, params), g.constant(model.base->weight(kOutputBias)));
}

Tensor2 batch_logits(const TaskModel& model, std::span<const std::vector<int>> contexts) {
  Graph g;
  return g.value(record_logits(g, model, contexts));
}

Tensor2 forward_logits(const TaskModel& model, std::span<const int> window) {
  if (window.empty()) throw ShapeError("empty token window");
  std::vector<std::vector<int>> prefixes;
  prefixes.reserve(window.size());
  for (std::size_t p = 0; p < window.size(); ++p) prefixes.emplace_back(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(p + 1));
  return batch_logits(model, prefixes);
}

std::vector<double> log_softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (logits.empty()) return {};
  const double zmax = *std::max_element(logits.begin(), logits.end()) / temperature;
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z / temperature - zmax);
  const double log_denom = std::log(denom) + zmax;
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] / temperature - log_denom;
  return out;
}

std::vector<double> softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (logits.empty()) return {};
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp((logits[k] - zmax) / temperature);
    denom += out[k];
  }
  for (auto& p : out) p /= denom;
  return out;
}

AdapterGradients backward(Graph& g, Var loss, const AdapterVars& params) {
  g.backward(loss);
  AdapterGradients grads;
  for (const auto& [name, vars] : params.layers) {
    const auto& a = g.value(vars.first);
    const auto& b = g.value(vars.second);
    const auto ga = g.grad(vars.first);
    const auto gb = g.grad(vars.second);
    grads.layers[name] = {Tensor2(a.rows(), a.cols(), {ga.begin(), ga.end()}),
                          Tensor2(b.rows(), b.cols(), {gb.begin(), gb.end()})};
  }
  return grads;
}

}  // namespace compatkit::toy
