#include "compatkit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace compatkit::toy {

Var Graph::push(Tensor2 value, bool requires_grad, std::function<void(Graph&, std::size_t)> backprop) {
  nodes_.push_back(Node{std::move(value), requires_grad, std::move(backprop)});
  return Var{nodes_.size() - 1};
}

Graph::Node& Graph::node(Var v) {
  if (v.id >= nodes_.size()) throw Error("variable " + std::to_string(v.id) + " is not on this graph");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("variable " + std::to_string(v.id) + " is not on this graph");
  return nodes_[v.id];
}

std::span<double> Graph::grad_of(std::size_t id) { return nodes_[id].value.ensure_grad(); }

Var Graph::constant(Tensor2 value) { return push(std::move(value), false, {}); }

Var Graph::parameter(Tensor2 value) { return push(std::move(value), true, {}); }

const Tensor2& Graph::value(Var v) const { return node(v).value; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<const double> Graph::grad(Var v) const { return node(v).value.grad(); }

Var Graph::matmul(Var a, Var b) {
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(toy::matmul(value(a), value(b)), rg, [a, b](Graph& g, std::size_t self) {
    const Tensor2& av = g.nodes_[a.id].value;
    const Tensor2& bv = g.nodes_[b.id].value;
    const auto out_grad = g.nodes_[self].value.grad();
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    if (g.nodes_[a.id].requires_grad) {
      auto ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += out_grad[i * n + j] * bv(p, j);
          ga[i * k + p] += acc;
        }
    }
    if (g.nodes_[b.id].requires_grad) {
      auto gb = g.grad_of(b.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av(i, p);
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * out_grad[i * n + j];
        }
    }
  });
}

Var Graph::add(Var a, Var b) {
  const Tensor2& av = value(a);
  const Tensor2& bv = value(b);
  if (!av.same_shape(bv)) throw ShapeError("add of mismatched shapes");
  Tensor2 out = av;
  auto ov = out.values();
  const auto bvals = bv.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bvals[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Graph& g, std::size_t self) {
    const auto out_grad = g.nodes_[self].value.grad();
    for (Var v : {a, b}) {
      if (!g.nodes_[v.id].requires_grad) continue;
      auto gv = g.grad_of(v.id);
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += out_grad[i];
    }
  });
}

Var Graph::add_row(Var a, Var row) {
  const Tensor2& av = value(a);
  const Tensor2& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeError("add_row expects a 1 x cols row");
  Tensor2 out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += rv(0, j);
  }
  const bool rg = requires_grad(a) || requires_grad(row);
  return push(std::move(out), rg, [a, row](Graph& g, std::size_t self) {
    const auto out_grad = g.nodes_[self].value.grad();
    const std::size_t cols = g.nodes_[row.id].value.cols();
    if (g.nodes_[a.id].requires_grad) {
      auto ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out_grad[i];
    }
    if (g.nodes_[row.id].requires_grad) {
      auto gr = g.grad_of(row.id);
      for (std::size_t i = 0; i < out_grad.size(); ++i) gr[i % cols] += out_grad[i];
    }
  });
}

Var Graph::scale(Var a, double factor) {
  Tensor2 out = value(a);
  for (auto& v : out.values()) v *= factor;
  return push(std::move(out), requires_grad(a), [a, factor](Graph& g, std::size_t self) {
    const auto out_grad = g.nodes_[self].value.grad();
    auto ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * out_grad[i];
  });
}

Var Graph::tanh(Var a) {
  Tensor2 out = value(a);
  for (auto& v : out.values()) v = std::tanh(v);
  return push(std::move(out), requires_grad(a), [a](Graph& g, std::size_t self) {
    const auto& y = g.nodes_[self].value;
    const auto out_grad = y.grad();
    const auto yv = y.values();
    auto ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out_grad[i] * (1.0 - yv[i] * yv[i]);
  });
}

Var Graph::pooled_rows(Var table, std::span<const std::vector<int>> contexts) {
  const Tensor2& tv = value(table);
  Tensor2 out(contexts.size(), tv.cols());
  for (std::size_t q = 0; q < contexts.size(); ++q) {
    const auto& ctx = contexts[q];
    if (ctx.empty()) throw ShapeError("empty context");
    auto r = out.row(q);
    for (int tok : ctx) {
      if (tok < 0 || static_cast<std::size_t>(tok) >= tv.rows()) {
        throw ShapeError("token id " + std::to_string(tok) + " outside table of " + std::to_string(tv.rows()) + " rows");
      }
      const auto src = tv.row(static_cast<std::size_t>(tok));
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(ctx.size());
    for (auto& v : r) v *= inv;
  }
  std::vector<std::vector<int>> saved(contexts.begin(), contexts.end());
  return push(std::move(out), requires_grad(table), [table, saved = std::move(saved)](Graph& g, std::size_t self) {
    const auto& out_node = g.nodes_[self].value;
    const auto out_grad = out_node.grad();
    const std::size_t cols = out_node.cols();
    auto gt = g.grad_of(table.id);
    for (std::size_t q = 0; q < saved.size(); ++q) {
      const double inv = 1.0 / static_cast<double>(saved[q].size());
      for (int tok : saved[q])
        for (std::size_t j = 0; j < cols; ++j) gt[static_cast<std::size_t>(tok) * cols + j] += inv * out_grad[q * cols + j];
    }
  });
}

Var Graph::soft_target_loss(Var logits, Tensor2 target_probs, std::vector<double> row_weights, double temperature) {
  const Tensor2& z = value(logits);
  if (!z.same_shape(target_probs)) throw ShapeError("soft_target_loss: target shape differs from logits");
  if (row_weights.size() != z.rows()) throw ShapeError("soft_target_loss: one weight per row required");
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");

  Tensor2 student_probs(z.rows(), z.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto zi = z.row(i);
    const double zmax = *std::max_element(zi.begin(), zi.end()) / temperature;
    double denom = 0.0;
    for (double v : zi) denom += std::exp(v / temperature - zmax);
    const double log_denom = std::log(denom) + zmax;
    double row_loss = 0.0;
    for (std::size_t k = 0; k < zi.size(); ++k) {
      const double log_q = zi[k] / temperature - log_denom;
      student_probs(i, k) = std::exp(log_q);
      const double p = target_probs(i, k);
      if (p > 0.0) row_loss += p * (std::log(p) - log_q);
    }
    loss += row_weights[i] * row_loss;
  }
  return push(Tensor2(1, 1, loss), requires_grad(logits),
              [logits, temperature, p = std::move(target_probs), q = std::move(student_probs),
               w = std::move(row_weights)](Graph& g, std::size_t self) {
                const double upstream = g.nodes_[self].value.grad()[0];
                auto gz = g.grad_of(logits.id);
                const std::size_t cols = p.cols();
                for (std::size_t i = 0; i < p.rows(); ++i) {
                  double mass = 0.0;
                  for (std::size_t k = 0; k < cols; ++k) mass += p(i, k);
                  const double coef = upstream * w[i] / temperature;
                  for (std::size_t k = 0; k < cols; ++k) gz[i * cols + k] += coef * (mass * q(i, k) - p(i, k));
                }
              });
}

void Graph::backward(Var loss) {
  if (nodes_.empty()) throw Error("backward called before any forward pass was recorded");
  Node& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) throw Error("backward requires a scalar (1 x 1) loss");
  for (auto& n : nodes_) {
    n.value.clear_grad();
    if (n.requires_grad && !n.backprop) n.value.ensure_grad();
  }
  if (!root.requires_grad) return;
  root.value.ensure_grad()[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.value.has_grad() || !n.backprop) continue;
    n.backprop(*this, id);
  }
}

}  // namespace compatkit::toy
