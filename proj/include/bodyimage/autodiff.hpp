#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "bodyimage/tensor.hpp"

namespace bodyimage::ad {

/// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// vector is already a topological order. One tape per thread; parameters
/// recorded with `parameter()` are referenced, not copied, and must outlive
/// the tape.
template <class T>
class Tape {
 public:
  /// Accumulates the node's output gradient into its inputs.
  using Backward = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Var parameter(const Tensor<T>& value) { return push(Node{&value, {}, {}, false, true, {}}); }
  /// Like parameter() but untracked; used for inference-only passes.
  Var reference(const Tensor<T>& value) { return push(Node{&value, {}, {}, false, false, {}}); }
  Var variable(Tensor<T> value) { return push(Node{nullptr, std::move(value), {}, false, true, {}}); }
  Var constant(Tensor<T> value) { return push(Node{nullptr, std::move(value), {}, false, false, {}}); }

  Var record(Tensor<T> value, bool requires_grad, Backward fn) {
    return push(Node{nullptr, std::move(value), {}, false, requires_grad, requires_grad ? std::move(fn) : Backward{}});
  }

  const Tensor<T>& value(Var v) const {
    const Node& n = node(v);
    return n.external ? *n.external : n.owned;
  }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  /// Gradient buffer for `v`, zero-initialized on first touch.
  Tensor<T>& grad_buffer(Var v) {
    Node& n = node(v);
    if (!n.has_grad) {
      n.grad = Tensor<T>(value(v).shape(), T{0});
      n.has_grad = true;
    }
    return n.grad;
  }

  /// d loss / d v after backward(); zeros when v does not influence the loss.
  Tensor<T> gradient(Var v) const {
    const Node& n = node(v);
    return n.has_grad ? n.grad : Tensor<T>(value(v).shape(), T{0});
  }

  /// Reverse accumulation from a rank-0 loss node.
  void backward(Var loss) {
    const Tensor<T>& lv = value(loss);
    require(lv.rank() == 0 && lv.size() == 1, ErrorCode::kShape,
            "backward: loss must be a scalar, got " + shape_string(lv.shape()));
    for (Node& n : nodes_) {
      n.has_grad = false;
      n.grad = Tensor<T>();
    }
    if (!requires_grad(loss)) return;
    grad_buffer(loss)[0] = T{1};
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.has_grad && n.backward) n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const Tensor<T>* external;
    Tensor<T> owned;
    Tensor<T> grad;
    bool has_grad;
    bool requires_grad;
    Backward backward;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }
  Node& node(Var v) {
    require(v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(), ErrorCode::kInvalidArgument,
            "tape: invalid variable");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const {
    require(v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(), ErrorCode::kInvalidArgument,
            "tape: invalid variable");
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  std::deque<Node> nodes_;  // deque: value() references survive later pushes
};

// SELU constants of the self-normalizing activation.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

/// y = W x + b; x [in], W [out, in], b [out].
template <class T> Var fully_connected(Tape<T>& tape, Var x, Var weights, Var bias);
/// 3x3, stride 1, zero "same" padding. x [H, W, Cin], k [3, 3, Cin, Cout], b [Cout].
template <class T> Var conv2d(Tape<T>& tape, Var x, Var kernels, Var bias);
/// Nearest-neighbour x2 upscaling of an [H, W, C] tensor.
template <class T> Var upsample2x(Tape<T>& tape, Var x);
/// conv2d(upsample2x(x)) in one node, computed in the low-resolution domain.
template <class T> Var upsample_conv2d(Tape<T>& tape, Var x, Var kernels, Var bias);
template <class T> Var selu(Tape<T>& tape, Var x);
template <class T> Var relu(Tape<T>& tape, Var x);
template <class T> Var reshape(Tape<T>& tape, Var x, Shape shape);
/// |a - b| elementwise; subgradient 0 where a == b.
template <class T> Var abs_diff(Tape<T>& tape, Var a, Var b);
/// mean |a - b| over all components, rank-0 result.
template <class T> Var l1_mean(Tape<T>& tape, Var a, Var b);
/// Identity on values, blocks all gradient flow.
template <class T> Var stop_gradient(Tape<T>& tape, Var x);
template <class T> Var add(Tape<T>& tape, Var a, Var b);
template <class T> Var scale(Tape<T>& tape, Var x, T factor);
/// Elementwise product.
template <class T> Var multiply(Tape<T>& tape, Var a, Var b);

}  // namespace bodyimage::ad
