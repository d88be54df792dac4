#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::ad {

class Tape;

/// Handle to a tensor recorded on a Tape. Cheap to copy; only valid while
/// the tape that issued it is alive.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct Node {
  std::string_view op;
  std::vector<std::size_t> inputs;
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  bool is_parameter = false;
  std::function<Tensor(const Tape&, const Node&)> forward;
  std::function<void(Tape&, const Node&)> backward;
};

/// Result of a reverse sweep: gradient of the scalar output with respect to
/// each parameter leaf, keyed by the leaf's Var id.
class Gradients {
 public:
  bool contains(Var v) const { return grads_.count(v.id()) != 0; }

  const Tensor& operator[](Var v) const {
    auto it = grads_.find(v.id());
    if (it == grads_.end()) throw ContractError("gradients: variable is not a parameter leaf");
    return it->second;
  }

  std::size_t size() const noexcept { return grads_.size(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

/// Define-by-run recording of primitive operations.
///
/// Nodes are appended in execution order, so the node list is always a
/// topological order. A tape is meant to be rebuilt for every forward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value) { return push_leaf(std::move(value), false); }

  /// Leaf whose gradient is reported by backward().
  Var parameter(Tensor value) { return push_leaf(std::move(value), true); }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Records an operation. `forward` computes the output from the inputs'
  /// current values; `backward` reads the node's grad and accumulates into
  /// the inputs that require one.
  Var record(std::string_view op, std::vector<Var> inputs,
             std::function<Tensor(const Tape&, const Node&)> forward,
             std::function<void(Tape&, const Node&)> backward) {
    Node n;
    n.op = op;
    n.inputs.reserve(inputs.size());
    for (const Var& v : inputs) {
      check_owned(v, op);
      n.inputs.push_back(v.id());
      n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    }
    n.value = forward(*this, n);
    n.forward = std::move(forward);
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  /// Gradient buffer of node `id`, zero-initialized on first access.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  /// Takes over `g` as the gradient buffer when nothing has flowed in yet.
  void accumulate(std::size_t id, Tensor&& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.empty() && g.shape() == n.value.shape()) {
      n.grad = std::move(g);
      return;
    }
    accumulate(id, static_cast<const Tensor&>(g));
  }

  void accumulate(std::size_t id, const Tensor& g) {
    if (!nodes_[id].requires_grad) return;
    Tensor& buf = grad_buffer(id);
    if (buf.shape() != g.shape())
      throw DimensionError("accumulate: gradient " + shape_string(g.shape()) + " for value " +
                           shape_string(buf.shape()));
    double* d = buf.data();
    const double* s = g.data();
    for (std::size_t i = 0; i < buf.size(); ++i) d[i] += s[i];
  }

  /// Reverse sweep from a scalar output.
  Gradients backward(Var output) {
    if (!output.valid()) throw MissingTapeError("backward: output is not attached to a tape");
    if (output.tape() != this) throw MissingTapeError("backward: output belongs to another tape");
    const Tensor& out = nodes_[output.id()].value;
    if (out.size() != 1)
      throw ContractError("backward: output must be a scalar, got " + shape_string(out.shape()));

    for (Node& n : nodes_) n.grad = Tensor();
    Gradients result;
    if (!nodes_[output.id()].requires_grad) {
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].is_parameter) result.grads_.emplace(i, Tensor(nodes_[i].value.shape()));
      return result;
    }
    grad_buffer(output.id()).fill(1.0);
    for (std::size_t i = output.id() + 1; i-- > 0;) {
      const Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, n);
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!nodes_[i].is_parameter) continue;
      Tensor g = nodes_[i].grad.empty() ? Tensor(nodes_[i].value.shape()) : nodes_[i].grad;
      result.grads_.emplace(i, std::move(g));
    }
    return result;
  }

  /// Re-executes every recorded operation from the stored leaves and checks
  /// that each output is reproduced bit for bit.
  bool replay_matches() const {
    for (const Node& n : nodes_) {
      if (!n.forward) continue;
      if (!(n.forward(*this, n) == n.value)) return false;
    }
    return true;
  }

 private:
  Var push_leaf(Tensor value, bool param) {
    Node n;
    n.op = param ? "parameter" : "constant";
    n.value = std::move(value);
    n.requires_grad = param;
    n.is_parameter = param;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  void check_owned(const Var& v, std::string_view op) const {
    if (!v.valid())
      throw MissingTapeError(std::string(op) + ": input is not attached to a tape");
    if (v.tape() != this)
      throw MissingTapeError(std::string(op) + ": inputs come from different tapes");
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const {
  if (!tape_) throw MissingTapeError("var: not attached to a tape");
  return tape_->value(id_);
}

/// Free-function form of Tape::backward.
inline Gradients backward(Tape& tape, Var output) { return tape.backward(output); }

}  // namespace sthgcn::ad
